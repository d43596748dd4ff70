"""Rotationally symmetric smooth metric measure spaces.

A model space is either ``dr^2 + phi(r)^2 g_{S^{n-1}}`` carrying the weight
``e^{-f(r)} dv`` or a weighted circle of circumference ``L``. Every profile
carries its analytic first and second derivatives, so curvature never goes
through nested finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import DomainError, ParameterError, PreconditionError

KINDS = ("flat", "gaussian", "hyperbolic", "warped", "circle")

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Profile:
    """A scalar radial profile with its first two derivatives."""

    name: str
    value: ArrayFn
    d1: ArrayFn
    d2: ArrayFn
    params: Mapping[str, float] = field(default_factory=dict)

    def __call__(self, r):
        return self.value(np.asarray(r, dtype=float))

    def derivatives(self, r):
        r = np.asarray(r, dtype=float)
        return self.value(r), self.d1(r), self.d2(r)


def _const(c):
    return lambda r: np.full(np.shape(r), float(c))


# --- warp profiles ---------------------------------------------------------

def linear_warp() -> Profile:
    return Profile("linear", lambda r: r * 1.0, _const(1.0), _const(0.0))


def sinh_warp(curvature: float = 1.0) -> Profile:
    """``sinh(sqrt(k) r)/sqrt(k)``: constant sectional curvature ``-k``."""
    if curvature <= 0:
        raise ParameterError("hyperbolic curvature scale must be positive")
    s = math.sqrt(curvature)
    return Profile(
        "sinh",
        lambda r: np.sinh(s * r) / s,
        lambda r: np.cosh(s * r),
        lambda r: s * np.sinh(s * r),
        {"k": float(curvature)},
    )


# --- weight profiles -------------------------------------------------------

def zero_weight() -> Profile:
    return Profile("zero", _const(0.0), _const(0.0), _const(0.0))


def constant_weight(c0: float) -> Profile:
    return Profile("constant", _const(c0), _const(0.0), _const(0.0), {"c0": float(c0)})


def quadratic_weight(c: float, c0: float = 0.0) -> Profile:
    """``f = c r^2 + c0``; ``c = 1/4`` is the Gaussian shrinker potential."""
    return Profile(
        "quadratic",
        lambda r: c * r * r + c0,
        lambda r: 2.0 * c * r,
        _const(2.0 * c),
        {"c": float(c), "c0": float(c0)},
    )


def cosine_weight(c: float, k: float = 1.0) -> Profile:
    """``f = c cos(k r)``; periodic on circles whose length is a multiple of 2pi/k."""
    return Profile(
        "cosine",
        lambda r: c * np.cos(k * r),
        lambda r: -c * k * np.sin(k * r),
        lambda r: -c * k * k * np.cos(k * r),
        {"c": float(c), "k": float(k)},
    )


def table_profiles(path) -> tuple[Profile, Profile, float]:
    """Read a sampled warped-space table.

    The CSV has a one-line header followed by columns
    ``r, phi, dphi, ddphi, f, df, ddf``. Values between samples are linearly
    interpolated. Returns ``(warp, weight, r_max)``.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 7:
        raise ParameterError(f"{path}: expected 7 columns, found {data.shape[1]}")
    r = data[:, 0]
    if np.any(np.diff(r) <= 0):
        raise ParameterError(f"{path}: r column must be strictly increasing")

    def interp(col):
        ys = data[:, col].copy()
        return lambda x: np.interp(np.asarray(x, dtype=float), r, ys)

    warp = Profile("table", interp(1), interp(2), interp(3), {"source": str(path)})
    weight = Profile("table", interp(4), interp(5), interp(6), {"source": str(path)})
    return warp, weight, float(r[-1])


def write_table(path, space: "ModelSpace", r) -> None:
    """Sample ``space`` on ``r`` and write it in the warped-table CSV format."""
    r = np.asarray(r, dtype=float)
    phi = space.warp.derivatives(r)
    f = space.weight.derivatives(r)
    cols = np.column_stack([r, *phi, *f])
    np.savetxt(path, cols, delimiter=",", header="r,phi,dphi,ddphi,f,df,ddf",
               comments="", fmt="%.17g")


# --- spaces ----------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpace:
    kind: str
    n: int
    weight: Profile
    warp: Profile | None = None
    L: float | None = None
    m: float | None = None
    r_max: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown space kind {self.kind!r}")
        if self.n < 1:
            raise ParameterError("dimension n must be >= 1")
        if self.kind == "circle":
            if self.L is None or self.L <= 0:
                raise ParameterError("circle needs a positive circumference L")
            if self.n != 1:
                raise ParameterError("circle is one-dimensional")
        elif self.warp is None:
            raise ParameterError(f"{self.kind} space needs a warp profile")
        if self.m is not None and self.m <= 0:
            raise ParameterError("m must be positive")

    @property
    def is_circle(self) -> bool:
        return self.kind == "circle"

    def describe(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "weight": self.weight.name,
               "weight_params": dict(self.weight.params)}
        if self.warp is not None:
            out["warp"] = self.warp.name
            out["warp_params"] = dict(self.warp.params)
        if self.L is not None:
            out["L"] = self.L
        return out


def make_space(name: str, **params) -> ModelSpace:
    """Build a catalog space by name.

    Recognised names are ``flat``, ``gaussian``, ``hyperbolic``, ``circle`` and
    ``warped`` (the latter needs ``table=<csv path>``). The weight can be
    overridden with ``weight`` in ``{"zero", "constant", "quadratic", "cosine"}``
    plus ``weight_c``, ``weight_c0`` and ``weight_k``.
    """
    params = dict(params)
    n = int(params.pop("n", {"flat": 2, "gaussian": 3, "hyperbolic": 2}.get(name, 1)))
    m = params.pop("m", None)
    m = None if m is None else float(m)
    weight = _weight_from_params(name, n, params)
    if name == "flat":
        space = ModelSpace("flat", n, weight, linear_warp(), m=m, name=name)
    elif name == "gaussian":
        space = ModelSpace("gaussian", n, weight, linear_warp(), m=m, name=name)
    elif name == "hyperbolic":
        k = float(params.pop("curvature", 1.0))
        space = ModelSpace("hyperbolic", n, weight, sinh_warp(k), m=m, name=name)
    elif name == "circle":
        L = float(params.pop("L", 2.0 * math.pi))
        space = ModelSpace("circle", 1, weight, None, L=L, m=m, name=name)
    elif name == "warped":
        table = params.pop("table", None)
        if table is None:
            raise ParameterError("warped space needs table=<csv path>")
        warp, tweight, r_max = table_profiles(table)
        space = ModelSpace("warped", n, tweight, warp, m=m, r_max=r_max, name=name)
    else:
        raise ParameterError(f"unknown catalog space {name!r}")
    if params:
        raise ParameterError(f"unused parameters for {name}: {sorted(params)}")
    return space


def _weight_from_params(name, n, params) -> Profile:
    default = "quadratic" if name == "gaussian" else "zero"
    kind = params.pop("weight", default)
    c = params.pop("weight_c", None)
    c0 = float(params.pop("weight_c0", 0.0))
    k = float(params.pop("weight_k", 1.0))
    normalize = _truthy(params.pop("normalize", False))
    if normalize:
        # probability normalisation of (4 pi)^{-n/2} e^{-r^2/4}
        c0 += 0.5 * n * math.log(4.0 * math.pi)
    if name == "warped" and kind == default:
        return zero_weight()  # replaced by the table columns
    if kind == "zero":
        return zero_weight() if c0 == 0.0 else constant_weight(c0)
    if kind == "constant":
        return constant_weight(c0)
    if kind == "quadratic":
        return quadratic_weight(0.25 if c is None else float(c), c0)
    if kind == "cosine":
        return cosine_weight(0.0 if c is None else float(c), k)
    raise ParameterError(f"unknown weight profile {kind!r}")


def _truthy(v) -> bool:
    if isinstance(v, str):
        return v.strip().lower() in ("1", "true", "yes", "on")
    return bool(v)


# --- curvature and weighted operators --------------------------------------

def _warp_at(space: ModelSpace, r):
    phi, dphi, ddphi = space.warp.derivatives(r)
    if np.any(phi <= 0):
        raise DomainError(f"warp profile is non-positive at r={np.atleast_1d(r)[np.argmin(np.atleast_1d(phi))]}")
    return phi, dphi, ddphi


def ric_f_eigenvalues(space: ModelSpace, r):
    """Radial and spherical eigenvalues of ``Ric_f = Ric + Hess f``.

    One-dimensional spaces have no spherical direction and ``Ric = 0``, so both
    entries equal ``f''(r)``.
    """
    r = np.asarray(r, dtype=float)
    _, df, ddf = space.weight.derivatives(r)
    if space.is_circle or space.n == 1:
        return ddf, ddf.copy()
    n = space.n
    phi, dphi, ddphi = _warp_at(space, r)
    radial = -(n - 1) * ddphi / phi + ddf
    spherical = -ddphi / phi + (n - 2) * (1.0 - dphi**2) / phi**2 + df * dphi / phi
    return radial, spherical


def ric_f_m_radial(space: ModelSpace, r, m: float):
    """Radial eigenvalue of ``Ric_f^m = Ric_f - (1/m) df (x) df``."""
    if m <= 0:
        raise DomainError("m must be positive")
    radial, _ = ric_f_eigenvalues(space, r)
    df = space.weight.d1(np.asarray(r, dtype=float))
    return radial - df**2 / m


def drift(space: ModelSpace, r):
    """First-order coefficient of ``Delta_f`` in radial (or arclength) form.

    Equals ``(n-1) phi'/phi - f'``; undefined at ``r = 0`` for ``n > 1``.
    """
    r = np.asarray(r, dtype=float)
    df = space.weight.d1(r)
    if space.is_circle or space.n == 1:
        return -df
    phi, dphi, _ = _warp_at(space, r)
    return (space.n - 1) * dphi / phi - df


def f_laplacian_radial(space: ModelSpace, u, du, d2u, r):
    """``Delta_f u = u'' + ((n-1) phi'/phi - f') u'`` for a radial function.

    At ``r = 0`` the regular limit ``n u''(0)`` is used, which needs
    ``u'(0) = 0`` and ``f'(0) = 0``.
    """
    del u  # Delta_f is linear and has no zeroth-order term
    r = float(r)
    if space.is_circle or space.n == 1:
        return float(d2u - space.weight.d1(np.asarray(r)) * du)
    if r < 0:
        raise DomainError("radius must be non-negative")
    if r == 0.0:
        if du != 0.0 or float(space.weight.d1(np.asarray(0.0))) != 0.0:
            raise DomainError("r = 0 needs u'(0) = 0 and f'(0) = 0 for the regular limit")
        return float(space.n * d2u)
    return float(d2u + drift(space, r) * du)


def delta_f_distance(space: ModelSpace, r):
    """``Delta_f r`` of the distance function to the pole (or base point)."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise DomainError("distance Laplacian needs r > 0")
    if space.is_circle and np.any(r_arr >= space.L / 2):
        raise DomainError("distance is not smooth past the antipodal point")
    out = drift(space, r_arr)
    return float(out) if np.ndim(r) == 0 else out


def hessian_norm_sq_radial(space: ModelSpace, du, d2u, r):
    """``|Hess u|^2 = u''^2 + (n-1) (phi' u'/phi)^2`` for radial ``u``."""
    r_arr = np.asarray(r, dtype=float)
    if space.is_circle or space.n == 1:
        return np.asarray(d2u) ** 2
    if np.any(r_arr <= 0):
        raise DomainError("radial Hessian needs r > 0")
    phi, dphi, _ = _warp_at(space, r_arr)
    return np.asarray(d2u) ** 2 + (space.n - 1) * (dphi * np.asarray(du) / phi) ** 2


# --- curvature bounds and the comparison theorem ---------------------------

@dataclass(frozen=True)
class CurvatureBounds:
    K: float
    lambda_min: float
    alpha: float


def _sample_radii(space: ModelSpace, R: float, samples: int):
    if space.is_circle:
        hi = min(R, space.L / 2)
    else:
        hi = R if space.r_max is None else min(R, space.r_max)
    # skip r = 0 where the warped-product formulas are 0/0
    return np.linspace(0.0, hi, samples + 1)[1:]


def check_curvature(space: ModelSpace, K: float, R: float, samples: int = 2000) -> float:
    """Verify ``Ric_f >= -(n-1) K`` on ``(0, R]``; return the sampled minimum."""
    if K < 0:
        raise ParameterError("K must be non-negative")
    r = _sample_radii(space, R, samples)
    radial, spherical = ric_f_eigenvalues(space, r)
    lam = np.minimum(radial, spherical)
    lower = -(space.n - 1) * K
    # (1 - phi'^2)/phi^2 cancels near the pole; allow for rounding there
    bad = lam < lower - 1e-8 * max(1.0, abs(lower))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise PreconditionError(
            f"Ric_f = {lam[i]:.6g} < -(n-1)K = {lower:.6g} at r = {r[i]:.6g}",
            radius=float(r[i]))
    return float(lam.min())


def curvature_bounds(space: ModelSpace, K: float, R: float, samples: int = 2000) -> CurvatureBounds:
    """Audit a declared ``K`` on ``(0, R]`` and record ``alpha = Delta_f r(1)``."""
    lam = check_curvature(space, K, R, samples)
    alpha = delta_f_distance(space, 1.0)
    return CurvatureBounds(K=float(K), lambda_min=lam, alpha=float(alpha))


def comparison_check(space: ModelSpace, bounds: CurvatureBounds, R: float,
                     samples: int = 4001) -> float:
    """Minimum over ``r in [1, R]`` of ``alpha + (n-1)K(R-1) - Delta_f r``.

    The weighted Laplacian comparison asserts this margin is non-negative.
    """
    if R < 2:
        raise DomainError("comparison is stated for R >= 2")
    check_curvature(space, bounds.K, R)
    r = np.linspace(1.0, R, samples)
    if space.is_circle:
        r = r[r < space.L / 2]
    bound = bounds.alpha + (space.n - 1) * bounds.K * (R - 1.0)
    return float(np.min(bound - delta_f_distance(space, r)))


def profile_fd_defect(profile: Profile, r, h: float) -> tuple[float, float]:
    """Max deviation of the analytic ``(p', p'')`` from centred differences."""
    r = np.asarray(r, dtype=float)
    p_plus, p_mid, p_minus = profile(r + h), profile(r), profile(r - h)
    d1 = (p_plus - p_minus) / (2 * h)
    d2 = (p_plus - 2 * p_mid + p_minus) / h**2
    return (float(np.max(np.abs(d1 - profile.d1(r)))),
            float(np.max(np.abs(d2 - profile.d2(r)))))


CATALOG = {
    "flat": "R^n, phi = r, f = 0 (override with weight=...); Ric_f = 0, K = 0",
    "gaussian": "R^n, phi = r, f = r^2/4 (shrinking soliton); Ric_f = 1/2 g, lower bound 1/2, K = 0",
    "hyperbolic": "H^n(-k), phi = sinh(sqrt(k) r)/sqrt(k), f = 0; Ric_f = -(n-1)k, K = 1 for k = 1",
    "circle": "S^1 of length L, f periodic; Ric = 0, Ric_f = f''; "
              "lambda_1 = (2 pi/L)^2 when f = 0",
    "warped": "table-driven phi, f from CSV (r,phi,dphi,ddphi,f,df,ddf); K declared by caller",
}

WEIGHTS = {
    "zero": "f = 0",
    "constant": "f = c0",
    "quadratic": "f = c r^2 + c0 (gaussian uses c = 1/4)",
    "cosine": "f = c cos(k r) (circle)",
}
