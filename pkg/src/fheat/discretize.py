"""Uniform grids, second-order finite differences and weighted quadrature."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, ParameterError, ShapeError
from .geometry import ModelSpace, drift

MIN_NODES = 16


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform grid. Radial grids include both ends ``0`` and ``R``; periodic
    grids hold ``N`` nodes ``i L / N`` without the duplicated endpoint."""

    kind: str
    nodes: np.ndarray
    length: float

    def __post_init__(self):
        if self.kind not in ("radial", "periodic"):
            raise ParameterError(f"unknown grid kind {self.kind!r}")
        if len(self.nodes) < MIN_NODES:
            raise ParameterError(f"grid needs at least {MIN_NODES} nodes")
        steps = np.diff(self.nodes)
        if np.max(np.abs(steps - self.h)) > 1e-12 * self.h:
            raise ParameterError("grid spacing must be uniform")
        self.nodes.setflags(write=False)

    @property
    def h(self) -> float:
        n = len(self.nodes)
        return self.length / (n - 1) if self.kind == "radial" else self.length / n

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def R(self) -> float:
        return self.length

    @property
    def L(self) -> float:
        return self.length

    def same_as(self, other: "Grid") -> bool:
        return (self.kind == other.kind and self.size == other.size
                and self.length == other.length)

    def describe(self) -> dict:
        return {"kind": self.kind, "N": self.size, "length": self.length, "h": self.h}


def radial_grid(R: float, N: int) -> Grid:
    """``N`` intervals on ``[0, R]`` (``N + 1`` nodes)."""
    if R <= 0:
        raise ParameterError("R must be positive")
    return Grid("radial", np.linspace(0.0, R, N + 1), float(R))


def periodic_grid(L: float, N: int) -> Grid:
    if L <= 0:
        raise ParameterError("L must be positive")
    return Grid("periodic", np.arange(N) * (L / N), float(L))


def grid_for(space: ModelSpace, N: int, R: float | None = None) -> Grid:
    if space.is_circle:
        return periodic_grid(space.L, N)
    if R is None:
        raise ParameterError("radial grid needs a domain radius")
    return radial_grid(R, N)


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ShapeError(f"field has shape {values.shape}, grid has {self.grid.size} nodes")
        if not np.all(np.isfinite(values)):
            raise DomainError("field has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values, time=None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time)

    def require_positive(self) -> None:
        if np.min(self.values) <= 0:
            i = int(np.argmin(self.values))
            raise DomainError(f"field must be positive; min {self.values[i]:.3g} at r = {self.r[i]:.6g}")


def sample(grid: Grid, fn, time: float = 0.0) -> Field:
    return Field(grid, fn(grid.nodes), time)


# --- derivatives -----------------------------------------------------------

def _d1(u: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(u, -1) - np.roll(u, 1)) / (2 * h)
    out = np.empty_like(u)
    out[1:-1] = (u[2:] - u[:-2]) / (2 * h)
    out[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
    out[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
    return out


def _d2(u: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(u, -1) - 2 * u + np.roll(u, 1)) / h**2
    out = np.empty_like(u)
    out[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
    out[0] = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / h**2
    out[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / h**2
    return out


def gradient_fd(field: Field) -> Field:
    """Second-order ``du/dr``; one-sided at radial ends, wrapped on circles."""
    g = field.grid
    return field.with_values(_d1(field.values, g.h, g.kind == "periodic"))


def second_derivative_fd(field: Field) -> Field:
    g = field.grid
    return field.with_values(_d2(field.values, g.h, g.kind == "periodic"))


def _check_alignment(space: ModelSpace, grid: Grid) -> None:
    if space.is_circle:
        if grid.kind != "periodic" or not math.isclose(grid.L, space.L, rel_tol=1e-12):
            raise ShapeError("circle spaces need a periodic grid of the same length")
    elif grid.kind != "radial":
        raise ShapeError(f"{space.kind} space needs a radial grid")
    elif space.r_max is not None and grid.R > space.r_max * (1 + 1e-12):
        raise ShapeError("grid extends past the tabulated profile")


def _interior_drift(space: ModelSpace, grid: Grid) -> np.ndarray:
    if grid.kind == "periodic":
        return drift(space, grid.nodes)
    b = np.zeros(grid.size)
    b[1:] = drift(space, grid.nodes[1:])
    return b


def f_laplacian_matrix(space: ModelSpace, grid: Grid, outer: str = "neumann",
                       inner: str = "even") -> sp.csr_matrix:
    """Sparse drift-form ``Delta_f`` on ``grid``.

    Radial rows: the pole uses the even ghost ``u_{-1} = u_1`` and the limit
    ``n u''(0)``; the outer end is a homogeneous Neumann ghost, a frozen
    Dirichlet node (zero row), or one-sided second-order stencils
    (``outer="one_sided"``) for diagnostics on fields with no boundary
    condition. On a line (``n = 1``) ``inner="one_sided"`` drops the even
    extension at ``r = 0``.
    """
    _check_alignment(space, grid)
    h, N = grid.h, grid.size
    b = _interior_drift(space, grid)
    lo = 1 / h**2 - b / (2 * h)
    di = np.full(N, -2 / h**2)
    up = 1 / h**2 + b / (2 * h)
    if grid.kind == "periodic":
        rows = np.concatenate([np.arange(N)] * 3)
        cols = np.concatenate([(np.arange(N) - 1) % N, np.arange(N), (np.arange(N) + 1) % N])
        return sp.csr_matrix((np.concatenate([lo, di, up]), (rows, cols)), shape=(N, N))

    A = sp.lil_matrix((N, N))
    i = np.arange(1, N - 1)
    A[i, i - 1] = lo[1:-1]
    A[i, i] = di[1:-1]
    A[i, i + 1] = up[1:-1]
    if inner == "even":
        # pole: even extension, Delta_f u(0) = n u''(0) = 2n (u_1 - u_0)/h^2
        if float(space.weight.d1(np.asarray(0.0))) != 0.0:
            raise DomainError("weight must satisfy f'(0) = 0 at the pole")
        A[0, 0] = -2 * space.n / h**2
        A[0, 1] = 2 * space.n / h**2
    elif inner == "one_sided":
        if space.n != 1:
            raise DomainError("one-sided inner stencil only on a line (n = 1)")
        b0 = float(drift(space, 0.0))
        A[0, 0] = 2 / h**2 - b0 * 3 / (2 * h)
        A[0, 1] = -5 / h**2 + b0 * 4 / (2 * h)
        A[0, 2] = 4 / h**2 - b0 / (2 * h)
        A[0, 3] = -1 / h**2
    else:
        raise ParameterError(f"unknown inner boundary {inner!r}")
    if outer == "neumann":
        A[N - 1, N - 1] = -2 / h**2
        A[N - 1, N - 2] = 2 / h**2
    elif outer == "dirichlet":
        pass
    elif outer == "one_sided":
        bN = b[-1]
        A[N - 1, N - 1] = 2 / h**2 + bN * 3 / (2 * h)
        A[N - 1, N - 2] = -5 / h**2 - bN * 4 / (2 * h)
        A[N - 1, N - 3] = 4 / h**2 + bN / (2 * h)
        A[N - 1, N - 4] = -1 / h**2
    else:
        raise ParameterError(f"unknown outer boundary {outer!r}")
    return A.tocsr()


def f_laplacian_fd(space: ModelSpace, field: Field, outer: str = "neumann",
                   inner: str = "even") -> Field:
    """Discrete ``u'' + ((n-1) phi'/phi - f') u'`` with analytic drift."""
    A = f_laplacian_matrix(space, field.grid, outer, inner)
    return field.with_values(A @ field.values)


# --- weighted quadrature ---------------------------------------------------

def sphere_area(n: int) -> float:
    """Area of the unit sphere ``S^{n-1}`` in ``R^n`` (2 for ``n = 1``)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def quadrature_weights(space: ModelSpace, grid: Grid) -> np.ndarray:
    """Trapezoid weights for ``int F e^{-f} dv``."""
    _check_alignment(space, grid)
    r = grid.nodes
    ef = np.exp(-space.weight(r))
    if grid.kind == "periodic":
        return grid.h * ef
    w = np.full(grid.size, grid.h)
    w[0] = w[-1] = grid.h / 2
    if space.n > 1:
        w = w * space.warp(r) ** (space.n - 1)
    return sphere_area(space.n) * w * ef


def weighted_integral(space: ModelSpace, field: Field) -> float:
    return float(quadrature_weights(space, field.grid) @ field.values)


def weighted_inner(space: ModelSpace, u: Field, v: Field) -> float:
    return float(quadrature_weights(space, u.grid) @ (u.values * v.values))


def weighted_volume(space: ModelSpace, grid: Grid) -> float:
    return float(np.sum(quadrature_weights(space, grid)))


# --- serialization ---------------------------------------------------------

def field_to_csv(field: Field, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "value"])
        for r, v in zip(field.r, field.values):
            w.writerow([repr(float(r)), repr(float(v))])


def field_from_csv(path, grid: Grid, time: float = 0.0) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid.size:
        raise ShapeError(f"{path}: {data.shape[0]} rows for a {grid.size}-node grid")
    return Field(grid, data[:, 1], time)


def field_to_dict(field: Field) -> dict:
    g = field.grid
    return {
        "grid": {"kind": g.kind, "N": g.size, "length": g.length.hex()},
        "time": float(field.time).hex(),
        "values": [float(v) for v in field.values],
        "hex": [float(v).hex() for v in field.values],
    }


def field_from_dict(d: dict) -> Field:
    gd = d["grid"]
    length = float.fromhex(gd["length"])
    if gd["kind"] == "radial":
        grid = radial_grid(length, gd["N"] - 1)
    else:
        grid = periodic_grid(length, gd["N"])
    values = np.array([float.fromhex(x) for x in d["hex"]])
    return Field(grid, values, float.fromhex(d["time"]))


def field_to_json(field: Field, path) -> None:
    with open(path, "w") as fh:
        json.dump(field_to_dict(field), fh)


def field_from_json(path) -> Field:
    with open(path) as fh:
        return field_from_dict(json.load(fh))


def flux_laplacian_matrix(space: ModelSpace, grid: Grid) -> sp.csr_matrix:
    """Conservative ``Delta_f u = e^{f} (e^{-f} u')'`` on a periodic grid.

    Face weights are ``e^{-f}`` at cell midpoints, so with the node weights
    of :func:`quadrature_weights` the matrix is exactly self-adjoint and
    ``<-Delta_f u, u>_f`` equals :func:`dirichlet_energy`.
    """
    _check_alignment(space, grid)
    if grid.kind != "periodic":
        raise ShapeError("flux form is provided for periodic grids")
    h, N = grid.h, grid.size
    w = np.exp(-space.weight(grid.nodes))
    wf = np.exp(-space.weight(grid.nodes + h / 2))  # face i+1/2
    wb = np.roll(wf, 1)  # face i-1/2
    idx = np.arange(N)
    rows = np.concatenate([idx, idx, idx])
    cols = np.concatenate([(idx - 1) % N, idx, (idx + 1) % N])
    vals = np.concatenate([wb, -(wb + wf), wf]) / (h**2 * np.concatenate([w, w, w]))
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


def dirichlet_energy(space: ModelSpace, field: Field) -> float:
    """``int |grad u|^2 e^{-f}`` with face-centred differences (periodic)."""
    g = field.grid
    if g.kind != "periodic":
        raise ShapeError("dirichlet_energy is provided for periodic grids")
    wf = np.exp(-space.weight(g.nodes + g.h / 2))
    du = np.roll(field.values, -1) - field.values
    return float(np.sum(wf * du**2) / g.h)
