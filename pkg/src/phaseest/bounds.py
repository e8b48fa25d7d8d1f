"""Closed-form reference quantities: Chernoff tails, variance bounds, limits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

V_CEILING = 4.0  # V = 4<sin^2(err/2)> can never exceed 4
TWO_THIRDS_PI_SQ = (2 * math.pi / 3) ** 2
PROVEN_MU = 16 * math.log(2)

Schedule = Union[Sequence[float], Callable[[int], float]]


@dataclass(frozen=True)
class BoundReport:
    n_resources: float
    components: dict = field(default_factory=dict)

    @property
    def v_raw(self) -> float:
        return math.fsum(self.components.values())

    @property
    def v_bound(self) -> float:
        return min(self.v_raw, V_CEILING)

    @property
    def delta_phi_bound(self) -> float:
        return math.sqrt(self.v_bound)


def f_of(n_s: int) -> float:
    """min(N_S, (32/3) ln N_S)."""
    if n_s < 1:
        raise ValueError("N_S must be >= 1")
    return min(float(n_s), (32.0 / 3.0) * math.log(n_s))


def chernoff_tail(n_s: int, eps: float) -> float:
    """Upper bound 2 exp(-2 N_S eps^2) on P(|nu - P| >= eps), clamped to 1."""
    if n_s < 1 or eps < 0:
        raise ValueError("need N_S >= 1 and eps >= 0")
    return min(1.0, 2.0 * math.exp(-2.0 * n_s * eps * eps))


def hybrid_variance_bound(n_q: int, n_s: int) -> BoundReport:
    """Three-case bound for the QPEA/standard combiner."""
    if n_q < 1 or n_s < 1:
        raise ValueError("N_Q and N_S must be >= 1")
    f = f_of(n_s)
    return BoundReport(
        n_q + n_s,
        {
            "standard_failure": 16.0 * math.exp(-3.0 * f / 16.0),
            "qpea_spread": (3.0 / n_q) * math.sqrt(f / n_s),
            "qpea_resolution": 2.0 / (math.pi * n_q ** 2),
        },
    )


def _schedule_values(K: int, schedule: Schedule) -> list[float]:
    if callable(schedule):
        return [float(schedule(k)) for k in range(K + 1)]
    values = [float(m) for m in schedule]
    if len(values) != K + 1:
        raise ValueError(f"schedule needs {K + 1} entries, got {len(values)}")
    return values


def nonadaptive_vmax(K: int, schedule: Schedule) -> BoundReport:
    """V_max for blocks of M(K,k) measurements with 2**k passes.

    ``schedule`` is either the list M(K,0..K) or a callable k -> M(K,k).
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    m = _schedule_values(K, schedule)
    if min(m) <= 0:
        raise ValueError("schedule must be positive")
    n = math.fsum(mk * 2.0 ** k for k, mk in enumerate(m))
    if all(float(x).is_integer() for x in m):
        n = int(n)
    return BoundReport(
        n,
        {
            "coarse_failure": 16.0 * math.exp(-3.0 * m[0] / 16.0),
            "final_resolution": TWO_THIRDS_PI_SQ * 2.0 ** (-2 * K),
            "fine_failures": 16.0 * TWO_THIRDS_PI_SQ * math.fsum(
                2.0 ** (-2 * k) * math.exp(-3.0 * m[k] / 16.0) for k in range(1, K + 1)
            ),
        },
    )


def linear_schedule(M_K: float, mu: float, K: int) -> list[float]:
    return [M_K + mu * (K - k) for k in range(K + 1)]


def proven_schedule(M_K: float, K: int) -> list[float]:
    """M(K,k) = M_K + 16 ln2 (K-k), the repetition profile with a proven 1/N bound."""
    return linear_schedule(M_K, PROVEN_MU, K)


def proven_vmax_ceiling(M_K: float, K: int) -> float:
    """Closed-form ceiling (2pi/3)^2 (1 + 32 e^{-3 M_K/16}) 2^{-2K} on V_max."""
    return TWO_THIRDS_PI_SQ * (1.0 + 32.0 * math.exp(-3.0 * M_K / 16.0)) * 2.0 ** (-2 * K)


def proven_schedule_overhead(M_K: float, K: int = 25) -> float:
    """sqrt(V_max) * N / pi for the proven schedule: the factor above pi/N."""
    report = nonadaptive_vmax(K, proven_schedule(M_K, K))
    return math.sqrt(report.v_raw) * report.n_resources / math.pi


def heisenberg_limit(n):
    return math.pi / np.asarray(n, dtype=float)[()]


def sql(n):
    return 1.0 / np.sqrt(np.asarray(n, dtype=float))[()]


def fejer_kernel(delta, n: int):
    """sin^2(n d/2) / (2 pi n sin^2(d/2)): QPEA error density with n = N_Q + 1."""
    delta = np.asarray(delta, dtype=float)
    s = np.sin(delta / 2)
    small = np.abs(s) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(n * delta / 2) ** 2 / (2 * math.pi * n * s ** 2)
    return np.where(small, n / (2 * math.pi), val)[()]
