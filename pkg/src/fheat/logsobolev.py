"""Spectral gap, weighted log-Sobolev constant and Liouville rigidity on closed 1-D spaces.

The log-Sobolev constant is the infimum of

    Q(u) = int |u'|^2 e^{-f} / int u^2 ln u^2 e^{-f}

over positive non-constant ``u`` with ``int u^2 e^{-f} = V_f``. It is computed
by projected gradient descent from perturbations of the first eigenfunction.
Near constants ``Q -> lambda_1 / 2``, and on the unweighted circle that limit
is the infimum, so minimizers drift toward the constant. A non-constancy
floor on the amplitude keeps the quotient well defined; when the floor is
active the result is flagged as not attained and ``S_M`` is an upper bound.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretize import (Field, Grid, dirichlet_energy, flux_laplacian_matrix, gradient_fd,
                         periodic_grid, quadrature_weights)
from .errors import DomainError, NumericError, ParameterError, PreconditionError
from .geometry import ModelSpace, ric_f_m_radial

E_MINUS_2 = math.exp(-2.0)


# --- spectrum --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralResult:
    lambda1: float
    eigenfunction: Field
    d: float
    V_f: float
    spectrum: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"lambda1": self.lambda1, "d": self.d, "V_f": self.V_f}


def _require_circle(space: ModelSpace) -> None:
    if not space.is_circle:
        raise DomainError("spectral and log-Sobolev computations need a circle")


def symmetric_operator(space: ModelSpace, grid: Grid) -> np.ndarray:
    """``-W^{1/2} Delta_f W^{-1/2}`` as a dense symmetric (periodic tridiagonal) matrix."""
    A = flux_laplacian_matrix(space, grid).toarray()
    sw = np.sqrt(np.exp(-space.weight(grid.nodes)))
    S = -(sw[:, None] * A / sw[None, :])
    return 0.5 * (S + S.T)


def lambda1(space: ModelSpace, N: int = 512) -> SpectralResult:
    """First nonzero eigenvalue of ``-Delta_f`` on a weighted circle.

    The operator is conjugated by ``e^{-f/2}`` into a symmetric matrix and
    handed to LAPACK. For a degenerate pair the eigenfunction is the
    component peaked at the base point.
    """
    _require_circle(space)
    grid = periodic_grid(space.L, N)
    S = symmetric_operator(space, grid)
    try:
        vals, vecs = scipy.linalg.eigh(S, subset_by_index=[0, min(3, N - 1)])
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    lam = float(vals[1])
    basis = [1]
    if len(vals) > 2 and abs(vals[2] - vals[1]) <= 1e-8 * max(1.0, abs(vals[1])):
        basis.append(2)
    V = vecs[:, basis]
    v = V @ V[0, :] if np.linalg.norm(V[0, :]) > 1e-12 else V[:, 0]
    sw = np.sqrt(np.exp(-space.weight(grid.nodes)))
    phi = v / sw
    wq = quadrature_weights(space, grid)
    phi = phi / math.sqrt(float(wq @ phi**2))
    if phi[0] < 0:
        phi = -phi
    return SpectralResult(lambda1=lam, eigenfunction=Field(grid, phi), d=space.L / 2,
                          V_f=float(np.sum(wq)), spectrum=vals)


def rayleigh_quotient(space: ModelSpace, phi: Field) -> float:
    """``<grad phi, grad phi>_f / <phi, phi>_f`` after removing the weighted mean."""
    wq = quadrature_weights(space, phi.grid)
    v = phi.values - (wq @ phi.values) / np.sum(wq)
    return dirichlet_energy(space, phi.with_values(v)) / float(wq @ v**2)


# --- log-Sobolev -----------------------------------------------------------

@dataclass(frozen=True)
class LogSobolevConfig:
    N: int = 256
    amplitudes: tuple = (0.05, 0.1, 0.2, 0.4)
    perturbations: int = 2
    floor_per_h: float = 1.0
    max_iter: int = 4000
    rtol: float = 1e-12
    seed: int = 0
    jobs: int = 1

    def floor(self, h: float) -> float:
        return self.floor_per_h * h


@dataclass(frozen=True, eq=False)
class LogSobolevResult:
    S_M: float
    extremizer: Field
    euler_lagrange_residual: float
    normalization_defect: float
    attained: bool
    amplitude: float
    amplitude_floor: float
    min_denominator: float
    trial_quotients: tuple
    iterations: int

    def to_dict(self) -> dict:
        return {
            "S_M": self.S_M,
            "euler_lagrange_residual": self.euler_lagrange_residual,
            "normalization_defect": self.normalization_defect,
            "attained": self.attained,
            "amplitude": self.amplitude,
            "amplitude_floor": self.amplitude_floor,
            "min_denominator": self.min_denominator,
            "iterations": self.iterations,
        }


class _Functional:
    def __init__(self, space: ModelSpace, grid: Grid):
        self.space = space
        self.grid = grid
        self.wq = quadrature_weights(space, grid)
        self.V = float(np.sum(self.wq))
        self.A = flux_laplacian_matrix(space, grid)
        # Sobolev preconditioner (I - Delta_f)^{-1}; self-adjoint in <.,.>_f
        self._pre = spla.splu((sp.identity(grid.size) - self.A).tocsc())

    def energy(self, u):
        return float(-(self.wq * u) @ (self.A @ u))

    def denominator(self, u):
        return float(self.wq @ (u * u * np.log(u * u)))

    def quotient(self, u):
        return self.energy(u) / self.denominator(u)

    def gradient(self, u):
        """Gradient of ``Q`` in the weighted inner product."""
        E, Dn = self.energy(u), self.denominator(u)
        dE = -2.0 * (self.A @ u)
        dD = 2.0 * u * np.log(u * u) + 2.0 * u
        return (dE * Dn - E * dD) / Dn**2

    def sobolev_gradient(self, u):
        return self._pre.solve(self.gradient(u))

    def amplitude(self, u):
        mean = float(self.wq @ u) / self.V
        dev = u - mean
        return math.sqrt(float(self.wq @ dev**2) / self.V), mean, dev

    def project(self, u, floor):
        """Normalize ``<u, u>_f = V`` with relative amplitude at least ``floor``."""
        A, mean, dev = self.amplitude(u)
        scale = math.sqrt(mean * mean + A * A)
        if A == 0.0 or A / scale < floor:
            if A == 0.0:
                raise NumericError("iterate collapsed to a constant")
            return math.sqrt(1.0 - floor * floor) * math.copysign(1.0, mean) + dev * (floor / A)
        return u / scale

    def el_residual(self, u, S):
        return float(np.max(np.abs(self.A @ u + S * u * np.log(u * u))))


def _descend(fun: _Functional, u0: np.ndarray, floor: float, cfg: LogSobolevConfig):
    u = fun.project(u0, floor)
    q = fun.quotient(u)
    min_den = fun.denominator(u)
    step = 1e-3
    it = 0
    stall = 0
    for it in range(1, cfg.max_iter + 1):
        g = fun.sobolev_gradient(u)
        gn = float(fun.wq @ g**2)
        if gn == 0.0:
            break
        accepted = False
        while step > 1e-18:
            cand = u - step * g
            if np.all(cand > 0):
                cand = fun.project(cand, floor)
                den = fun.denominator(cand)
                if den > 0:
                    qc = fun.energy(cand) / den
                    if qc < q:
                        min_den = min(min_den, den)
                        accepted = True
                        break
            step *= 0.5
        if not accepted:
            break
        rel = (q - qc) / abs(q)
        u, q = cand, qc
        step *= 2.0
        stall = stall + 1 if rel < cfg.rtol else 0
        if stall >= 5:
            break
    return u, q, min_den, it


def _starts(spectral: SpectralResult, grid: Grid, cfg: LogSobolevConfig):
    phi = spectral.eigenfunction.values
    phi = phi / np.max(np.abs(phi))
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    x = 2 * np.pi * grid.nodes / grid.L
    out = []
    for amp in cfg.amplitudes:
        out.append(1.0 + amp * phi)
        for _ in range(cfg.perturbations):
            coef = rng.normal(size=(3, 2))
            bump = sum(c[0] * np.cos((k + 2) * x) + c[1] * np.sin((k + 2) * x)
                       for k, c in enumerate(coef))
            bump = bump / np.max(np.abs(bump))
            out.append(1.0 + amp * (phi + 0.3 * bump))
    return [u for u in out if np.all(u > 0)]


def quotient(space: ModelSpace, u: Field, normalize: bool = True) -> float:
    """Log-Sobolev quotient of ``u`` (rescaled to ``<u,u>_f = V_f`` first)."""
    fun = _Functional(space, u.grid)
    v = np.asarray(u.values, dtype=float)
    if normalize:
        v = v * math.sqrt(fun.V / float(fun.wq @ v**2))
    den = fun.denominator(v)
    if den <= 0:
        raise DomainError("constant trial: the quotient is 0/0")
    return fun.energy(v) / den


def log_sobolev_constant(space: ModelSpace, config: LogSobolevConfig | None = None,
                         spectral: SpectralResult | None = None) -> LogSobolevResult:
    """Minimize the log-Sobolev quotient by multi-start projected gradient descent."""
    _require_circle(space)
    cfg = config or LogSobolevConfig()
    grid = periodic_grid(space.L, cfg.N)
    if spectral is None or spectral.eigenfunction.grid.size != cfg.N:
        spectral = lambda1(space, cfg.N)
    fun = _Functional(space, grid)
    floor = cfg.floor(grid.h)
    if not 0 < floor < 1:
        raise ParameterError("amplitude floor must lie in (0, 1)")
    starts = _starts(spectral, grid, cfg)
    trials = tuple(fun.quotient(fun.project(u, floor)) for u in starts)

    def run(u0):
        return _descend(fun, u0, floor, cfg)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(u0) for u0 in starts]
    best = min(range(len(results)), key=lambda i: (results[i][1], i))
    u, S, _, iters = results[best]
    min_den = min(r[2] for r in results)
    amp, mean, _ = fun.amplitude(u)
    rel_amp = amp / math.sqrt(mean * mean + amp * amp)
    return LogSobolevResult(
        S_M=float(S),
        extremizer=Field(grid, u),
        euler_lagrange_residual=fun.el_residual(u, S),
        normalization_defect=abs(float(fun.wq @ u**2) - fun.V),
        attained=bool(rel_amp > floor * (1 + 1e-6)),
        amplitude=rel_amp,
        amplitude_floor=floor,
        min_denominator=min_den,
        trial_quotients=trials,
        iterations=int(sum(r[3] for r in results)),
    )


# --- Chung-Yau bounds ------------------------------------------------------

@dataclass(frozen=True)
class ChungYauReport:
    m: float
    sup_u: float
    sup_bound: float
    gradient_max: float
    gradient_bound: float
    S_M: float
    S_lower: float
    min_u: float

    @property
    def margins(self) -> dict:
        return {"A": self.sup_bound - self.sup_u,
                "B": self.gradient_bound - self.gradient_max,
                "C": self.S_M - self.S_lower,
                "lower": self.min_u - E_MINUS_2}

    @property
    def passed(self) -> dict:
        return {k: v > 0 for k, v in self.margins.items()}

    def to_dict(self) -> dict:
        return {"m": self.m, "A": self.passed["A"], "B": self.passed["B"],
                "C": self.passed["C"], "lower": self.passed["lower"],
                "margins": self.margins,
                "values": {"sup_u": self.sup_u, "sup_bound": self.sup_bound,
                           "gradient_max": self.gradient_max,
                           "gradient_bound": self.gradient_bound,
                           "S_M": self.S_M, "S_lower": self.S_lower, "min_u": self.min_u}}


def verify_chung_yau(space: ModelSpace, result: LogSobolevResult, spectral: SpectralResult,
                     m: float, samples: int = 2000) -> ChungYauReport:
    """Check the sup bound, the gradient bound, the lower bound on ``S_M``,
    and ``min u > e^{-2}`` for the computed extremizer."""
    _require_circle(space)
    if m <= 0:
        raise DomainError("m must be positive")
    r = np.linspace(0.0, space.L, samples, endpoint=False)
    ric = ric_f_m_radial(space, r, m)
    if np.min(ric) < -1e-12:
        i = int(np.argmin(ric))
        raise PreconditionError(f"Ric_f^m = {ric[i]:.6g} < 0 at r = {r[i]:.6g}", radius=float(r[i]))
    n = space.n
    u = result.extremizer
    S = result.S_M
    lnu = u.with_values(np.log(u.values))
    grad = gradient_fd(lnu).values
    return ChungYauReport(
        m=float(m),
        sup_u=float(np.max(u.values)),
        sup_bound=math.exp((n + m) / 2),
        gradient_max=float(np.max(grad**2 + S * 2.0 * lnu.values)),
        gradient_bound=(n + m) * S,
        S_M=S,
        S_lower=min(spectral.lambda1 / (8 * math.e), 1.0 / ((n + m) * spectral.d**2)),
        min_u=float(np.min(u.values)),
    )


# --- Liouville classification ----------------------------------------------

class Verdict(str, enum.Enum):
    NO_SUCH_SOLUTION = "NoSuchSolution"
    IDENTICALLY_ONE = "IdenticallyOne"
    CONSTANT = "Constant"
    OUT_OF_SCOPE = "OutOfTheoremScope"


def _le(x: float, y: float) -> bool:
    return x <= y * (1 + 1e-12)


def liouville_classify(a: float, lower: float, upper: float,
                       growth_sublinear_sqrt: bool = False) -> Verdict:
    """Rigidity of positive ancient solutions with ``lower <= u <= upper``
    on a space with ``Ric_f >= 0`` (assumed by the caller).

    ``growth_sublinear_sqrt`` asserts ``u = o((r^{1/2} + |t|^{1/4})^2)``; it
    is taken on trust because no finite computation certifies it.
    """
    if lower <= 0:
        raise ParameterError("lower bound must be positive")
    if lower > upper:
        raise ParameterError("lower bound exceeds upper bound")
    if a > 0 and _le(upper, E_MINUS_2):
        return Verdict.NO_SUCH_SOLUTION
    if a < 0 and _le(E_MINUS_2, lower):
        return Verdict.NO_SUCH_SOLUTION if upper < 1 else Verdict.IDENTICALLY_ONE
    if a == 0 and growth_sublinear_sqrt:
        return Verdict.CONSTANT
    return Verdict.OUT_OF_SCOPE


TRUTH_TABLE = (
    ({"a": 1.0, "lower": 0.01, "upper": E_MINUS_2, "growth_sublinear_sqrt": False},
     Verdict.NO_SUCH_SOLUTION),
    ({"a": -1.0, "lower": E_MINUS_2, "upper": 0.5, "growth_sublinear_sqrt": False},
     Verdict.NO_SUCH_SOLUTION),
    ({"a": -1.0, "lower": E_MINUS_2, "upper": 2.0, "growth_sublinear_sqrt": False},
     Verdict.IDENTICALLY_ONE),
    ({"a": 0.0, "lower": 0.5, "upper": 3.0, "growth_sublinear_sqrt": True},
     Verdict.CONSTANT),
    ({"a": 1.0, "lower": 0.5, "upper": 3.0, "growth_sublinear_sqrt": False},
     Verdict.OUT_OF_SCOPE),
)
