"""Residuals of the two evolution inequalities behind the gradient estimates.

Both lemmas assert ``residual >= 0`` pointwise; on discrete data the residual
is non-negative up to the discretization error. Time derivatives are centred
differences, so only interior frames can be checked.
"""

from __future__ import annotations

import numpy as np

from ..discretize import Field, f_laplacian_fd, gradient_fd
from ..errors import DomainError
from ..solver import Solution, derived_from_field
from .constants import EstimateConstants

MUTATIONS = (None, "coupling_sign", "quadratic_sign")


def _stencils(solution: Solution) -> dict:
    if solution.grid.kind == "periodic":
        return {}
    return {"outer": "one_sided", "inner": "even"}


def _frames(solution: Solution, frame: int):
    if not 1 <= frame <= len(solution.frames) - 2:
        raise DomainError(f"frame {frame} has no centred time difference")
    return [derived_from_field(solution.frames[k], solution.params.D)
            for k in (frame - 1, frame, frame + 1)]


def _parabolic(solution: Solution, prev: Field, cur: Field, nxt: Field) -> np.ndarray:
    """``(Delta_f - d/dt) w`` at the middle frame."""
    dt = nxt.time - prev.time
    w_t = (nxt.values - prev.values) / dt
    return f_laplacian_fd(solution.space, cur, **_stencils(solution)).values - w_t


def lemma1_residual(solution: Solution, consts: EstimateConstants, frame: int,
                    mutation: str | None = None) -> Field:
    """Residual of the ``omega = h |grad h|^2``, ``h = u^{1/3}`` inequality.

    ``mutation`` deliberately corrupts the claimed inequality (``"coupling_sign"``
    flips the sign of the ``<grad h, grad omega>`` term, ``"quadratic_sign"``
    the sign of ``4 h^{-3} omega^2``) to show the check can fail.
    """
    if mutation not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutation!r}")
    prev, cur, nxt = _frames(solution, frame)
    h = cur.h.values
    w = cur.omega_h
    hr = gradient_fd(cur.h).values
    wr = gradient_fd(w).values
    par = _parabolic(solution, prev.omega_h, w, nxt.omega_h)
    coupling = 4.0 * hr * wr / h
    quadratic = 4.0 * w.values**2 / h**3
    if mutation == "coupling_sign":
        coupling = -coupling
    elif mutation == "quadratic_sign":
        quadratic = -quadratic
    res = par + coupling - quadratic + consts.lemma1_bracket() * w.values
    return w.with_values(res)


def lemma2_residual(solution: Solution, consts: EstimateConstants, frame: int,
                    mutation: str | None = None) -> Field:
    """Residual of the ``omega = |grad g|^2/(mu - g)^2``, ``g = ln u`` inequality."""
    if mutation not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutation!r}")
    prev, cur, nxt = _frames(solution, frame)
    mu = cur.mu
    g = cur.g.values
    gap = mu - g
    w = cur.omega_g
    gr = gradient_fd(cur.g).values
    wr = gradient_fd(w).values
    par = _parabolic(solution, prev.omega_g, w, nxt.omega_g)
    coupling = 2.0 * (g - np.log(consts.D)) / gap * gr * wr
    quadratic = 2.0 * gap * w.values**2
    if mutation == "coupling_sign":
        coupling = -coupling
    elif mutation == "quadratic_sign":
        quadratic = -quadratic
    n, K, a = solution.space.n, consts.K, consts.a
    res = (par - coupling - quadratic + 2.0 * (a + (n - 1) * K) * w.values
           + 2.0 * a * g / gap * w.values)
    return w.with_values(res)


def baseest_ratio(solution: Solution, frame: int) -> np.ndarray:
    """``g^2/(mu - g)^2`` nodewise; bounded by ``kappa^2`` whenever ``g <= ln D``."""
    d = derived_from_field(solution.frames[frame], solution.params.D)
    return d.g.values**2 / (d.mu - d.g.values) ** 2


def residual_tolerance(solution: Solution, factor: float = 10.0) -> float:
    return factor * (solution.grid.h + solution.frame_dt)


def min_residual(solution: Solution, consts: EstimateConstants, which: str, radius: float,
                 mutation: str | None = None, trim: int = 2) -> tuple[float, float, float]:
    """Minimum residual over interior frames and nodes within ``radius``.

    Returns ``(min, r_at_min, t_at_min)``. ``trim`` outer radial nodes are
    skipped because their stencils are one-sided twice over.
    """
    fn = lemma1_residual if which == "lemma1" else lemma2_residual
    grid = solution.grid
    r = grid.nodes
    dist = np.minimum(r, grid.L - r) if grid.kind == "periodic" else r
    mask = dist <= radius * (1 + 1e-12)
    if grid.kind == "radial" and trim:
        mask[-trim:] = False
    best = (np.inf, np.nan, np.nan)
    for k in range(1, len(solution.frames) - 1):
        res = fn(solution, consts, k, mutation).values[mask]
        j = int(np.argmin(res))
        if res[j] < best[0]:
            best = (float(res[j]), float(dist[mask][j]), float(solution.frames[k].time))
    return best
