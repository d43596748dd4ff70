"""Space-time cutoff ``psi(r, t) = eta(r) theta(t)`` for localized estimates.

``eta = s(2(R - r)/R)^{2/(1-eps)}`` with ``s`` the quintic smoothstep, so
``eta`` is C^2, equals 1 on ``[0, R/2]`` and vanishes beyond ``R``. The
exponent makes ``eta'/eta^eps`` and ``eta''/eta^eps`` bounded. In time,
``theta = s(ramp)^2`` rises from 0 at ``t0 - T`` to 1 at ``tau``, which gives
``|theta'| <= C theta^{1/2}/(tau - t0 + T)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import ConstructionError, ParameterError


def smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10.0 - 15.0 * x + 6.0 * x**2)


def smoothstep_d1(x):
    inside = (x > 0) & (x < 1)
    xc = np.clip(x, 0.0, 1.0)
    return np.where(inside, 30.0 * xc**2 * (1.0 - xc) ** 2, 0.0)


def smoothstep_d2(x):
    inside = (x > 0) & (x < 1)
    xc = np.clip(x, 0.0, 1.0)
    return np.where(inside, 60.0 * xc * (1.0 - xc) * (1.0 - 2.0 * xc), 0.0)


@dataclass(frozen=True)
class CutoffProfile:
    R: float
    t0: float
    T: float
    tau: float
    epsilon: float
    C: float
    C_eps: float

    @property
    def power(self) -> float:
        return 2.0 / (1.0 - self.epsilon)

    @property
    def ramp_time(self) -> float:
        return self.tau - (self.t0 - self.T)

    def _x(self, r):
        return 2.0 * (self.R - np.asarray(r, dtype=float)) / self.R

    def eta(self, r):
        return smoothstep(self._x(r)) ** self.power

    def eta_r(self, r):
        x, p = self._x(r), self.power
        s = smoothstep(x)
        return p * s ** (p - 1) * smoothstep_d1(x) * (-2.0 / self.R)

    def eta_rr(self, r):
        x, p = self._x(r), self.power
        s = smoothstep(x)
        s1, s2 = smoothstep_d1(x), smoothstep_d2(x)
        return (p * (p - 1) * s ** (p - 2) * s1**2 + p * s ** (p - 1) * s2) * (4.0 / self.R**2)

    def _y(self, t):
        return (np.asarray(t, dtype=float) - (self.t0 - self.T)) / self.ramp_time

    def theta(self, t):
        return smoothstep(self._y(t)) ** 2

    def theta_t(self, t):
        y = self._y(t)
        return 2.0 * smoothstep(y) * smoothstep_d1(y) / self.ramp_time

    def psi(self, r, t):
        return self.eta(r) * self.theta(t)

    def psi_r(self, r, t):
        return self.eta_r(r) * self.theta(t)

    def psi_rr(self, r, t):
        return self.eta_rr(r) * self.theta(t)

    def psi_t(self, r, t):
        return self.eta(r) * self.theta_t(t)


def cutoff_build(R: float, t0: float, T: float, tau: float, epsilon: float) -> CutoffProfile:
    """Construct the cutoff with constants bounded from its 1-D factors."""
    if R < 2:
        raise ParameterError("cutoff is built for R >= 2")
    if T <= 0:
        raise ParameterError("T must be positive")
    if not (t0 - T < tau <= t0):
        raise ParameterError("tau must lie in (t0 - T, t0]")
    if not (0.0 < epsilon < 1.0):
        raise ParameterError("epsilon must lie in (0, 1)")
    x = np.linspace(0.0, 1.0, 20001)
    s, s1, s2 = smoothstep(x), smoothstep_d1(x), smoothstep_d2(x)
    p = 2.0 / (1.0 - epsilon)
    # eta^eps = s^{p eps} = s^{p-2}, so the ratios below are polynomial in s
    first = 2.0 * p * np.max(s * s1)
    second = 4.0 * np.max(np.abs(p * (p - 1) * s1**2 + p * s * s2))
    C = 2.0 * np.max(s1)
    return CutoffProfile(float(R), float(t0), float(T), float(tau), float(epsilon),
                         C=float(C), C_eps=float(max(first, second)))


class CutoffCheck(NamedTuple):
    C: float
    C_eps: float
    properties: dict


def _ratio_max(num, psi, power, what):
    pos = psi > 0
    if np.any(np.abs(num[~pos]) > 0):
        raise ConstructionError(f"{what} is nonzero where psi vanishes")
    if not np.any(pos):
        return 0.0
    return float(np.max(np.abs(num[pos]) / psi[pos] ** power))


def cutoff_verify(profile: CutoffProfile, samples=(512, 256)) -> CutoffCheck:
    """Smallest constants making properties (1)-(4) hold on a sample grid.

    ``samples`` is ``(n_r, n_t)`` over ``[0, R] x [t0 - T, t0]``. Raises
    :class:`ConstructionError` when a property fails outright.
    """
    if isinstance(samples, int):
        samples = (samples, samples)
    nr, nt = samples
    r = np.linspace(0.0, profile.R, nr)
    t = np.linspace(profile.t0 - profile.T, profile.t0, nt)
    rr, tt = np.meshgrid(r, t, indexing="ij")
    psi = profile.psi(rr, tt)
    pr = profile.psi_r(rr, tt)
    prr = profile.psi_rr(rr, tt)
    pt = profile.psi_t(rr, tt)

    props = {}
    props["1_range"] = bool(np.all((psi >= 0) & (psi <= 1)))
    props["1_support"] = bool(np.all(profile.eta(np.array([profile.R, 1.5 * profile.R])) == 0))
    inner = rr <= profile.R / 2
    props["2_one_on_inner_after_tau"] = bool(np.all(psi[inner & (tt >= profile.tau)] == 1.0))
    props["2_flat_on_inner"] = bool(np.all(pr[inner] == 0.0))
    props["3_vanishes_initially"] = bool(np.all(psi[:, 0] == 0.0))
    props["4_nonincreasing"] = bool(np.all(pr <= 0.0))
    for key, ok in props.items():
        if not ok:
            raise ConstructionError(f"cutoff property {key} fails")

    C = _ratio_max(pt * profile.ramp_time, psi, 0.5, "d psi/dt")
    eps = profile.epsilon
    C1 = _ratio_max(pr * profile.R, psi, eps, "d psi/dr")
    C2 = _ratio_max(prr * profile.R**2, psi, eps, "d2 psi/dr2")
    return CutoffCheck(C=C, C_eps=max(C1, C2), properties=props)
