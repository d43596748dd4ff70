"""Hamilton-type and Souplet-Zhang-type gradient bounds evaluated on solutions.

The dimensional constant ``c(n)`` is only known to exist, so each report
divides the left side by the bracket with ``c(n)`` factored out and records
the largest ratio as the empirical constant.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..discretize import gradient_fd
from ..errors import BoundAuditError, DomainError, PreconditionError
from ..geometry import CurvatureBounds, check_curvature
from ..solver import BOUND_RTOL, EvolutionParams, Solution
from .constants import EstimateConstants, constants


def _elapsed(params: EvolutionParams, t):
    s = np.asarray(t, dtype=float) - params.t_start
    if np.any(s <= 0):
        raise DomainError("bounds are not stated on the initial slice t = t0 - T")
    return s


def hamilton_rhs_bracket(params: EvolutionParams, consts: EstimateConstants,
                         bounds: CurvatureBounds, R: float, t):
    """``sqrt(D) (1/R + sqrt(|alpha|/R) + 1/sqrt(t - t0 + T) + sqrt(K) + sqrt(c))``.

    ``c`` is ``c1`` for ``a >= 0`` and ``c2`` for ``a < 0``.
    """
    s = _elapsed(params, t)
    c = consts.tail_constant()
    if c is None:
        raise PreconditionError("a < 0 needs delta for the c2 term")
    return math.sqrt(params.D) * (1.0 / R + math.sqrt(abs(bounds.alpha) / R)
                                  + 1.0 / np.sqrt(s) + math.sqrt(bounds.K) + math.sqrt(c))


def souplet_zhang_tail(consts: EstimateConstants) -> float:
    if consts.a >= 0:
        return math.sqrt(consts.a * (consts.kappa + 1.0))
    return math.sqrt(consts.c3) + math.sqrt(-consts.a * consts.kappa)


def souplet_zhang_rhs_bracket(params: EvolutionParams, consts: EstimateConstants,
                              bounds: CurvatureBounds, R: float, u_val, t):
    """Bracket of the logarithmic estimate times ``1 + ln(D/u)``."""
    u_val = np.asarray(u_val, dtype=float)
    if np.any(u_val <= 0):
        raise DomainError("u must be positive")
    if np.any(u_val > params.D * (1 + BOUND_RTOL)):
        raise BoundAuditError(f"u = {float(np.max(u_val)):.10g} exceeds D = {params.D:.10g}")
    s = _elapsed(params, t)
    head = (math.sqrt((1.0 + abs(bounds.alpha)) / R) + 1.0 / np.sqrt(s)
            + math.sqrt(bounds.K) + souplet_zhang_tail(consts))
    return head * (1.0 + np.log(params.D / u_val))


@dataclass(frozen=True, eq=False)
class EstimateReport:
    theorem: str
    r: np.ndarray
    t: np.ndarray
    lhs: np.ndarray
    rhs_bracket: np.ndarray
    ratio_max: float
    argmax: tuple
    window: tuple
    dr: float
    dt: float
    constants: EstimateConstants
    notes: tuple = field(default_factory=tuple)

    @property
    def empirical_cn(self) -> float:
        return self.ratio_max

    @property
    def ratio(self) -> np.ndarray:
        return self.lhs / self.rhs_bracket

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "ratio_max": self.ratio_max,
            "argmax": {"r": self.argmax[0], "t": self.argmax[1]},
            "empirical_cn": self.empirical_cn,
            "window": {"radius": self.window[0], "t_from": self.window[1], "t_to": self.window[2]},
            "grid": {"dr": self.dr, "dt": self.dt},
            "notes": list(self.notes),
        }

    def to_csv(self, path) -> None:
        ratio = self.ratio
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "t", "lhs", "rhs_bracket", "ratio"])
            for k, t in enumerate(self.t):
                for j, r in enumerate(self.r):
                    w.writerow([repr(float(r)), repr(float(t)), repr(float(self.lhs[k, j])),
                                repr(float(self.rhs_bracket[k, j])), repr(float(ratio[k, j]))])


def window_mask(solution: Solution, radius: float) -> np.ndarray:
    """Nodes within geodesic distance ``radius`` of the base point (node 0)."""
    grid = solution.grid
    r = grid.nodes
    dist = np.minimum(r, grid.L - r) if grid.kind == "periodic" else r
    return dist <= radius * (1 + 1e-12)


def distances(solution: Solution) -> np.ndarray:
    grid = solution.grid
    r = grid.nodes
    return np.minimum(r, grid.L - r) if grid.kind == "periodic" else r


def _prepare(solution: Solution, bounds: CurvatureBounds, R: float):
    if R < 2:
        raise DomainError("gradient estimates are stated for R >= 2")
    space = solution.space
    grid = solution.grid
    if grid.kind == "radial" and grid.R <= R / 2:
        raise DomainError("grid must extend strictly beyond the window B(x0, R/2)")
    if grid.kind == "periodic" and R / 2 > grid.L / 2:
        raise DomainError("window B(x0, R/2) wraps around the circle")
    check_curvature(space, bounds.K, R if grid.kind == "radial" else min(R, grid.L / 2))
    solution.audit()
    p = solution.params
    consts = constants(space.n, bounds.K, p.a, p.D, p.delta if p.delta > 0 else None)
    if len(solution.frames) < 2:
        raise DomainError("need frames beyond the initial slice")
    return consts


def _verify(solution: Solution, bounds: CurvatureBounds, R: float, theorem: str) -> EstimateReport:
    consts = _prepare(solution, bounds, R)
    p = solution.params
    mask = window_mask(solution, R / 2)
    r = distances(solution)[mask]
    frames = solution.frames[1:]
    t = np.array([fr.time for fr in frames])
    U = np.stack([fr.values for fr in frames])
    G = np.abs(np.stack([gradient_fd(fr).values for fr in frames]))
    U, G = U[:, mask], G[:, mask]
    T = np.broadcast_to(t[:, None], U.shape)
    if theorem == "hamilton":
        lhs = G / np.sqrt(U)
        rhs = np.broadcast_to(hamilton_rhs_bracket(p, consts, bounds, R, T), U.shape)
    else:
        lhs = G / U
        rhs = souplet_zhang_rhs_bracket(p, consts, bounds, R, U, T)
    if np.any(rhs <= 0):
        raise DomainError("bracket must be positive on the window")
    ratio = lhs / rhs
    k, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    notes = []
    if theorem == "souplet_zhang" and p.a == 0 and consts.c3 == 0:
        notes.append("a = 0 and c3 = 0: tail terms vanish, heat-equation form")
    if p.a < 0:
        notes.append("a < 0 branch")
    return EstimateReport(
        theorem=theorem, r=r, t=t, lhs=lhs, rhs_bracket=np.array(rhs), ratio_max=float(ratio[k, j]),
        argmax=(float(r[j]), float(t[k])),
        window=(R / 2, float(t[0]), float(t[-1])),
        dr=solution.grid.h, dt=solution.frame_dt,
        constants=consts.with_cn(float(ratio[k, j])), notes=tuple(notes))


def verify_hamilton(solution: Solution, bounds: CurvatureBounds, R: float) -> EstimateReport:
    """Measure ``max |grad u|/sqrt(u) / bracket`` over ``B(x0, R/2)`` after the initial slice."""
    return _verify(solution, bounds, R, "hamilton")


def verify_souplet_zhang(solution: Solution, bounds: CurvatureBounds, R: float) -> EstimateReport:
    """Measure ``max |grad u|/u / bracket`` with the ``1 + ln(D/u)`` factor."""
    return _verify(solution, bounds, R, "souplet_zhang")
