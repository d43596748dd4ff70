"""Constants entering the gradient estimates and the evolution lemmas."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from ..errors import ParameterError


@dataclass(frozen=True)
class EstimateConstants:
    n: int
    K: float
    a: float
    D: float
    delta: float | None
    c1: float
    c2: float | None
    c3: float
    kappa: float
    mu: float
    empirical_cn: float | None = None

    def tail_constant(self) -> float:
        """``c1`` when ``a >= 0``, else ``c2``."""
        return self.c1 if self.a >= 0 else self.c2

    def lemma1_bracket(self) -> float:
        """``2(n-1)K + a ln X + 2a`` with ``X = D`` (``a >= 0``) or ``delta``.

        This is the unclamped form of ``c1``/``c2``: ``a ln X + 2a = a(2 + ln X)``.
        """
        x = self.D if self.a >= 0 else self.delta
        return 2 * (self.n - 1) * self.K + self.a * (2.0 + math.log(x))

    def with_cn(self, cn: float) -> "EstimateConstants":
        d = asdict(self)
        d["empirical_cn"] = cn
        return EstimateConstants(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def constants(n: int, K: float, a: float, D: float, delta: float | None = None) -> EstimateConstants:
    if D <= 0:
        raise ParameterError("D must be positive")
    if K < 0:
        raise ParameterError("K must be non-negative")
    if a < 0 and (delta is None or delta <= 0):
        raise ParameterError("a < 0 requires a positive lower bound delta")
    if delta is not None and delta <= 0:
        delta = None
    c1 = max(2 * (n - 1) * K + a * (2.0 + math.log(D)), 0.0)
    c2 = None if delta is None else max(2 * (n - 1) * K + a * (2.0 + math.log(delta)), 0.0)
    c3 = max(a + (n - 1) * K, 0.0)
    kappa = max(abs(math.log(D)), 1.0)
    return EstimateConstants(n=n, K=float(K), a=float(a), D=float(D), delta=delta,
                             c1=c1, c2=c2, c3=c3, kappa=kappa, mu=1.0 + math.log(D))
