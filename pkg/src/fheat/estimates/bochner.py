"""Weighted Bochner identity and its ``Ric_f^m`` inequality on sampled fields."""

from __future__ import annotations

import numpy as np

from ..discretize import Field, f_laplacian_fd, gradient_fd, second_derivative_fd
from ..errors import DomainError
from ..geometry import ModelSpace, ric_f_eigenvalues


def _stencils(space: ModelSpace, grid) -> dict:
    if grid.kind == "periodic":
        return {}
    inner = "one_sided" if space.n == 1 else "even"
    return {"outer": "one_sided", "inner": inner}


def _hessian_sq(space: ModelSpace, r, du, d2u):
    if space.is_circle or space.n == 1:
        return d2u**2
    out = np.empty_like(du)
    phi, dphi, _ = space.warp.derivatives(r[1:])
    out[1:] = d2u[1:] ** 2 + (space.n - 1) * (dphi * du[1:] / phi) ** 2
    # even radial function: u'/r -> u''(0)
    out[0] = space.n * d2u[0] ** 2
    return out


def _radial_ric(space: ModelSpace, r):
    if space.is_circle or space.n == 1:
        return ric_f_eigenvalues(space, r)[0]
    rr = np.array(r, dtype=float)
    rr[0] = max(rr[1] * 1e-6, 1e-12)  # regular limit at the pole
    return ric_f_eigenvalues(space, rr)[0]


def bochner_terms(space: ModelSpace, u: Field) -> dict:
    """Every term of the weighted Bochner formula evaluated nodewise."""
    kw = _stencils(space, u.grid)
    r = u.r
    du = gradient_fd(u).values
    d2u = second_derivative_fd(u).values
    lap = f_laplacian_fd(space, u, **kw)
    half_lap_grad_sq = 0.5 * f_laplacian_fd(space, u.with_values(du**2), **kw).values
    cross = gradient_fd(lap).values * du
    ric = _radial_ric(space, r)
    return {
        "du": du,
        "lap": lap.values,
        "lhs": half_lap_grad_sq,
        "hess_sq": _hessian_sq(space, r, du, d2u),
        "cross": cross,
        "ric": ric * du**2,
        "df_sq_du_sq": space.weight.d1(r) ** 2 * du**2,
    }


def bochner_residual(space: ModelSpace, u: Field, m: float | None = None):
    """Return ``(equality_residual, inequality_margin)``.

    ``equality_residual`` is ``1/2 Delta_f |grad u|^2`` minus
    ``|Hess u|^2 + <grad Delta_f u, grad u> + Ric_f(grad u, grad u)``.
    ``inequality_margin`` (``None`` without ``m``) is the equality right side
    minus ``(Delta_f u)^2/(m+n) + <grad Delta_f u, grad u> + Ric_f^m(grad u, grad u)``.
    """
    if m is not None and m <= 0:
        raise DomainError("m must be positive")
    t = bochner_terms(space, u)
    rhs = t["hess_sq"] + t["cross"] + t["ric"]
    residual = u.with_values(t["lhs"] - rhs)
    if m is None:
        return residual, None
    rhs_m = t["lap"] ** 2 / (m + space.n) + t["cross"] + t["ric"] - t["df_sq_du_sq"] / m
    return residual, u.with_values(rhs - rhs_m)


def interior_mask(u: Field, trim: int = 2) -> np.ndarray:
    """Drop ``trim`` nodes at the outer radial boundary (none on circles)."""
    mask = np.ones(u.grid.size, dtype=bool)
    if u.grid.kind == "radial" and trim:
        mask[-trim:] = False
    return mask
