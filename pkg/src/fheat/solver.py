"""Time integration of ``u_t = Delta_f u + a u ln u``.

Diffusion is implicit (sparse LU of the drift-form operator), the reaction is
explicit. Two schemes are available: ``"imex1"`` (backward/forward Euler) and
the default ``"ars222"``, the L-stable second-order IMEX Runge-Kutta method of
Ascher, Ruuth and Spiteri. Positivity is enforced by rejecting and halving
steps, never by clamping.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretize import (Field, Grid, field_to_csv, f_laplacian_matrix, gradient_fd)
from .errors import BoundAuditError, DomainError, ParameterError, SaturationError, StabilityError
from .geometry import ModelSpace

MAX_HALVINGS = 20
BOUND_RTOL = 1e-8
SCHEMES = ("imex1", "ars222")

_GAMMA = 1.0 - 1.0 / math.sqrt(2.0)
_DELTA = 1.0 - 1.0 / (2.0 * _GAMMA)


@dataclass(frozen=True)
class EvolutionParams:
    a: float
    D: float
    delta: float = 0.0
    t0: float = 1.0
    T: float = 1.0
    tau: float | None = None

    def __post_init__(self):
        if self.D <= 0:
            raise ParameterError("D must be positive")
        if self.T <= 0:
            raise ParameterError("T must be positive")
        if self.a < 0 and not (0 < self.delta <= self.D):
            raise ParameterError("a < 0 needs 0 < delta <= D")
        if self.delta < 0:
            raise ParameterError("delta must be non-negative")
        if self.tau is not None and not (self.t0 - self.T < self.tau <= self.t0):
            raise ParameterError("tau must lie in (t0 - T, t0]")

    @property
    def t_start(self) -> float:
        return self.t0 - self.T

    def to_dict(self) -> dict:
        return {"a": self.a, "D": self.D, "delta": self.delta, "t0": self.t0,
                "T": self.T, "tau": self.tau}


@dataclass(frozen=True, eq=False)
class Solution:
    space: ModelSpace
    frames: tuple
    params: EvolutionParams
    dt: float
    scheme: str = "ars222"
    outer: str = "neumann"
    realized_min: float = field(init=False)
    realized_max: float = field(init=False)

    def __post_init__(self):
        lo = min(float(np.min(f.values)) for f in self.frames)
        hi = max(float(np.max(f.values)) for f in self.frames)
        if lo <= 0:
            raise BoundAuditError("solution frames must be strictly positive")
        object.__setattr__(self, "realized_min", lo)
        object.__setattr__(self, "realized_max", hi)

    @property
    def grid(self) -> Grid:
        return self.frames[0].grid

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self.frames])

    @property
    def frame_dt(self) -> float:
        return self.frames[1].time - self.frames[0].time if len(self.frames) > 1 else self.dt

    def values(self) -> np.ndarray:
        """Frames stacked as a ``(n_frames, n_nodes)`` array."""
        return np.stack([f.values for f in self.frames])

    def audit(self) -> None:
        """Raise if the realized range leaves ``[delta, D]``."""
        p = self.params
        if self.realized_max > p.D * (1 + BOUND_RTOL):
            raise BoundAuditError(f"max u = {self.realized_max:.10g} exceeds D = {p.D:.10g}")
        if p.a < 0 and self.realized_min < p.delta * (1 - BOUND_RTOL):
            raise BoundAuditError(f"min u = {self.realized_min:.10g} is below delta = {p.delta:.10g}")

    def scaled(self, lam: float) -> "Solution":
        """``lam * u`` with ``D -> lam D``; a solution again only when ``a = 0``."""
        p = self.params
        params = EvolutionParams(p.a, lam * p.D, lam * p.delta, p.t0, p.T, p.tau)
        frames = tuple(f.with_values(lam * f.values) for f in self.frames)
        return Solution(self.space, frames, params, self.dt, self.scheme, self.outer)


# --- stepping --------------------------------------------------------------

def _reaction(u: np.ndarray, a: float, frozen: np.ndarray | None) -> np.ndarray:
    out = a * u * np.log(u)
    if frozen is not None:
        out[frozen] = 0.0
    return out


class _Stepper:
    """Holds factorizations of ``I - c dt L`` for repeated steps."""

    def __init__(self, space: ModelSpace, grid: Grid, outer: str):
        self.space = space
        self.grid = grid
        self.outer = outer
        self.L = f_laplacian_matrix(space, grid, outer).tocsc()
        self.frozen = None
        if grid.kind == "radial" and outer == "dirichlet":
            self.frozen = np.array([grid.size - 1])
        self._lu = {}

    def solve(self, c: float, rhs: np.ndarray) -> np.ndarray:
        lu = self._lu.get(c)
        if lu is None:
            A = sp.identity(self.grid.size, format="csc") - c * self.L
            lu = self._lu[c] = spla.splu(A)
        return lu.solve(rhs)

    def imex1(self, u: np.ndarray, dt: float, a: float) -> np.ndarray:
        return self.solve(dt, u + dt * _reaction(u, a, self.frozen))

    def ars222(self, u: np.ndarray, dt: float, a: float) -> np.ndarray:
        g, d = _GAMMA, _DELTA
        e0 = _reaction(u, a, self.frozen)
        y1 = self.solve(g * dt, u + g * dt * e0)
        if np.any(y1 <= 0):
            return y1
        i1 = self.L @ y1
        e1 = _reaction(y1, a, self.frozen)
        rhs = u + dt * (d * e0 + (1 - d) * e1) + dt * (1 - g) * i1
        return self.solve(g * dt, rhs)

    def log_euler(self, u: np.ndarray, dt: float, a: float) -> np.ndarray:
        # advance g = ln u: g_t = Delta_f g + |grad g|^2 + a g
        g = np.log(u)
        grad = gradient_fd(Field(self.grid, g)).values
        src = grad**2 + a * g
        if self.frozen is not None:
            src[self.frozen] = 0.0
        return np.exp(self.solve(dt, g + dt * src))

    def step(self, u: np.ndarray, dt: float, a: float, scheme: str, depth: int = 0) -> np.ndarray:
        new = getattr(self, scheme)(u, dt, a)
        if np.all(np.isfinite(new)) and np.all(new > 0):
            return new
        if depth >= MAX_HALVINGS:
            bad = np.flatnonzero(~(np.isfinite(new) & (new > 0)))
            i = int(bad[0])
            raise StabilityError(
                f"positivity lost at node {i} (r = {self.grid.nodes[i]:.6g}) "
                f"after {MAX_HALVINGS} halvings", node=i)
        half = self.step(u, dt / 2, a, scheme, depth + 1)
        return self.step(half, dt / 2, a, scheme, depth + 1)


def _scheme_name(scheme: str, mode: str) -> str:
    if mode == "log":
        return "log_euler"
    if mode != "direct":
        raise ParameterError(f"unknown evolution mode {mode!r}")
    if scheme not in SCHEMES:
        raise ParameterError(f"unknown scheme {scheme!r}")
    return scheme


def step_imex(space: ModelSpace, field: Field, dt: float, a: float, *,
              scheme: str = "imex1", outer: str = "neumann", mode: str = "direct") -> Field:
    """Advance ``field`` by one step of size ``dt``.

    ``scheme="imex1"`` is one backward-Euler diffusion solve with the reaction
    ``a u ln u`` taken explicitly; a step that loses positivity is redone as
    two half steps, recursively, at most ``MAX_HALVINGS`` times.
    """
    if dt <= 0:
        raise ParameterError("dt must be positive")
    field.require_positive()
    stepper = _Stepper(space, field.grid, outer)
    new = stepper.step(np.array(field.values), dt, a, _scheme_name(scheme, mode))
    return field.with_values(new, field.time + dt)


def solve(space: ModelSpace, initial: Field, params: EvolutionParams, dt: float, *,
          scheme: str = "ars222", outer: str = "neumann", mode: str = "direct",
          save_every: int = 1, audit: bool = True) -> Solution:
    """Integrate from ``t0 - T`` to ``t0`` with a uniform step ``dt``.

    Frames are stored every ``save_every`` steps, frame 0 being the initial
    data at ``t0 - T``. With ``audit=True`` the realized range is checked
    against ``D`` (and ``delta`` when ``a < 0``).
    """
    if dt <= 0:
        raise ParameterError("dt must be positive")
    steps = params.T / dt
    n_steps = int(round(steps))
    if n_steps < 1 or abs(steps - n_steps) > 1e-9 * max(1.0, steps):
        raise ParameterError(f"dt = {dt} does not divide T = {params.T}")
    if n_steps % save_every:
        raise ParameterError("save_every must divide the number of steps")
    initial.require_positive()
    name = _scheme_name(scheme, mode)
    stepper = _Stepper(space, initial.grid, outer)
    u = np.array(initial.values)
    t_start = params.t_start
    frames = [initial.with_values(u.copy(), t_start)]
    for k in range(1, n_steps + 1):
        u = stepper.step(u, dt, params.a, name)
        if k % save_every == 0:
            frames.append(initial.with_values(u.copy(), t_start + k * dt))
    sol = Solution(space, tuple(frames), params, dt, scheme if mode == "direct" else "log", outer)
    if audit:
        sol.audit()
    return sol


def ode_exact(a: float, c: float, t: float) -> float:
    """``exp(c e^{a t})``: the spatially constant solutions."""
    try:
        expo = c * math.exp(a * t)
    except OverflowError as exc:
        if c == 0:
            return 1.0
        raise SaturationError(f"c e^(at) overflows at a={a}, t={t}") from exc
    if expo > 709.0:
        raise SaturationError(f"exp({expo:.6g}) overflows")
    return math.exp(expo)


def ode_solve(a: float, u0: float, t: float) -> float:
    """Value at time ``t`` of the constant solution starting from ``u0`` at 0."""
    return ode_exact(a, math.log(u0), t)


@dataclass(frozen=True, eq=False)
class DerivedFields:
    h: Field
    g: Field
    omega_h: Field
    omega_g: Field
    mu: float


def derived_fields(solution: Solution, frame: int) -> DerivedFields:
    """``h = u^{1/3}``, ``g = ln u``, ``h |grad h|^2`` and ``|grad g|^2/(mu - g)^2``."""
    if not 0 <= frame < len(solution.frames):
        raise DomainError(f"frame {frame} out of range")
    u = solution.frames[frame]
    return derived_from_field(u, solution.params.D)


def derived_from_field(u: Field, D: float) -> DerivedFields:
    mu = 1.0 + math.log(D)
    h = u.with_values(np.cbrt(u.values))
    g = u.with_values(np.log(u.values))
    gap = mu - g.values
    if np.min(gap) < 1 - 1e-8:
        i = int(np.argmin(gap))
        raise BoundAuditError(f"mu - g = {gap[i]:.10g} < 1 at r = {u.r[i]:.6g} (u exceeds D)")
    hr = gradient_fd(h).values
    gr = gradient_fd(g).values
    return DerivedFields(h, g, u.with_values(h.values * hr**2),
                         u.with_values(gr**2 / gap**2), mu)


# --- archives --------------------------------------------------------------

def write_archive(solution: Solution, directory, space_name: str = "") -> dict:
    """One CSV per frame plus ``manifest.json``."""
    os.makedirs(directory, exist_ok=True)
    names = []
    for k, fr in enumerate(solution.frames):
        name = f"frame_{k:05d}.csv"
        field_to_csv(fr, os.path.join(directory, name))
        names.append(name)
    manifest = {
        "space": space_name or solution.space.name,
        "space_description": solution.space.describe(),
        "grid": solution.grid.describe(),
        "params": solution.params.to_dict(),
        "dt": solution.dt,
        "scheme": solution.scheme,
        "outer": solution.outer,
        "realized_min": solution.realized_min,
        "realized_max": solution.realized_max,
        "times_hex": [float(t).hex() for t in solution.times],
        "frames": names,
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
