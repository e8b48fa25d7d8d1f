"""Phase-estimation protocols: standard, QPEA, hybrid, and non-adaptive multipass.

Every protocol is a sequence of binary measurements.  A protocol object maps
the outcome history seen so far to the next :class:`MeasurementSetting`, and a
complete history to an estimate.  ``run_*`` drive a protocol with sampled
outcomes; :mod:`phaseest.oracle` drives the same objects over every outcome
branch.

Control phases carry an optional ``reference`` offset: a measurement with
``p`` passes has its control phase shifted by ``p * reference``.  Shifting the
true phase and the reference together leaves every outcome probability
unchanged and shifts the estimate by the same amount.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from . import measurement
from .bounds import f_of
from .measurement import TWO_PI, MeasurementSetting, circular_distance, wrap
from .posterior import estimate_with_flag, posterior_from


class SchemeKind(str, Enum):
    STANDARD = "standard"
    QPEA = "qpea"
    HYBRID = "hybrid"
    NONADAPTIVE = "nonadaptive"
    FIXEDM = "fixedm"


class ThetaPolicy(str, Enum):
    ALTERNATE = "alternate"      # 0, pi/2, 0, pi/2, ...
    INCREMENT = "increment"      # 0, pi/M, 2pi/M, ... reset at each block


class HybridMode(str, Enum):
    BAYESIAN = "bayesian"
    COMBINER = "combiner"


@dataclass(frozen=True)
class SchemeConfig:
    """Full description of one protocol instance.

    ``M_K`` and ``mu`` set the repetition schedule M(K,k) = M_K + mu*(K-k) of
    the block schemes (``FIXEDM`` uses ``M_K`` as the constant M).  ``N_S`` is
    the standard-measurement budget of ``STANDARD`` and ``HYBRID``; for the
    hybrid it defaults to 2**K.
    """

    kind: SchemeKind
    K: int = 0
    M_K: int = 1
    mu: int = 0
    N_S: int | None = None
    theta_policy: ThetaPolicy = ThetaPolicy.INCREMENT
    randomize_reference: bool = False
    hybrid_mode: HybridMode = HybridMode.BAYESIAN

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        object.__setattr__(self, "theta_policy", ThetaPolicy(self.theta_policy))
        object.__setattr__(self, "hybrid_mode", HybridMode(self.hybrid_mode))
        if self.K < 0:
            raise ValueError("K must be nonnegative")
        if self.M_K < 1:
            raise ValueError("M_K must be at least 1")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.kind is SchemeKind.FIXEDM and self.mu != 0:
            raise ValueError("fixed-M scheme requires mu = 0")
        if self.kind is SchemeKind.HYBRID:
            if self.K < 1:
                raise ValueError("hybrid scheme requires K >= 1")
        if self.kind is SchemeKind.STANDARD and self.N_S is None:
            raise ValueError("standard scheme requires N_S")
        if self.kind in (SchemeKind.STANDARD, SchemeKind.HYBRID):
            if self.n_standard < 1:
                raise ValueError("N_S must be positive")
            needs_even = (self.kind is SchemeKind.STANDARD
                          or self.hybrid_mode is HybridMode.COMBINER)
            if needs_even and self.n_standard % 2:
                raise ValueError("alternating standard measurement needs an even N_S")
        if self.randomize_reference and self.kind not in (SchemeKind.QPEA, SchemeKind.HYBRID):
            raise ValueError("randomize_reference applies only to schemes with a QPEA stage")

    @property
    def n_standard(self) -> int | None:
        """Standard-measurement budget; the hybrid default is 2**K."""
        if self.N_S is None and self.kind is SchemeKind.HYBRID:
            return 2 ** self.K
        return self.N_S

    def with_k(self, K: int) -> "SchemeConfig":
        return replace(self, K=K)


@dataclass(frozen=True)
class EstimateSample:
    phi_true: float
    phi_est: float
    n_resources: int
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "phi_true", wrap(self.phi_true))
        object.__setattr__(self, "phi_est", wrap(self.phi_est))

    @property
    def error(self) -> float:
        return self.phi_true - self.phi_est


def repetitions(cfg: SchemeConfig) -> list[int]:
    """Number of measurements with 2**k passes, for k = 0..K."""
    if cfg.kind is SchemeKind.STANDARD:
        return [cfg.n_standard]
    if cfg.kind is SchemeKind.QPEA:
        return [1] * (cfg.K + 1)
    if cfg.kind is SchemeKind.HYBRID:
        return [1 + cfg.n_standard] + [1] * cfg.K
    return [cfg.M_K + cfg.mu * (cfg.K - k) for k in range(cfg.K + 1)]


def total_resources(cfg: SchemeConfig) -> int:
    """Total number of phase-shift applications, sum_k M(K,k) 2**k."""
    return sum(m * 2 ** k for k, m in enumerate(repetitions(cfg)))


def n_measurements(cfg: SchemeConfig) -> int:
    return sum(repetitions(cfg))


# -- control-phase rules, shared with the vectorised engine -----------------

def block_theta(j, m: int, policy: ThetaPolicy):
    """Control phase of the j-th repetition in a block of m."""
    if policy is ThetaPolicy.ALTERNATE:
        return (j % 2) * (math.pi / 2)
    return j * (math.pi / m)


def qpea_theta(p: int, offset, acc):
    """Feedback phase for a 2**k-pass QPEA step: p times the partial estimate."""
    return p * (offset + acc)


def qpea_digit(acc, u, p: int):
    """Fold outcome ``u`` of a ``p``-pass step into the partial estimate."""
    return acc + u * (math.pi / p)


def standard_estimate(nu1, nu2, reference=0.0):
    """Phase of (2 nu1 - 1) + i (2 nu2 - 1); degenerate when that vector is 0."""
    x = 2.0 * np.asarray(nu1, dtype=float) - 1.0
    y = 2.0 * np.asarray(nu2, dtype=float) - 1.0
    degenerate = (x == 0.0) & (y == 0.0)
    est = wrap(np.arctan2(y, x) + reference)
    return est, degenerate


def combiner_threshold(n_s: int) -> float:
    """delta-phi = (pi/3) sqrt(f(N_S)/N_S); estimates closer than 2*delta-phi agree."""
    return (math.pi / 3) * math.sqrt(f_of(n_s) / n_s)


def combine_estimates(phi_s, phi_q, dphi):
    """Keep the QPEA estimate when it lies within 2*dphi of the standard one."""
    return np.where(circular_distance(phi_s, phi_q) < 2 * dphi, phi_q, phi_s)[()]


# -- protocols --------------------------------------------------------------

class Protocol:
    n_measurements: int
    n_resources: int

    def setting(self, history: Sequence[int]) -> MeasurementSetting:
        raise NotImplementedError

    def estimate(self, history: Sequence[int]) -> tuple[float, bool]:
        raise NotImplementedError

    def settings_for(self, history: Sequence[int]) -> list[MeasurementSetting]:
        return [self.setting(history[:i]) for i in range(len(history))]


@dataclass
class StandardProtocol(Protocol):
    n_s: int
    reference: float = 0.0

    def __post_init__(self):
        self.n_measurements = self.n_resources = self.n_s

    def setting(self, history):
        j = len(history)
        return MeasurementSetting(1, self.reference + block_theta(j, 2, ThetaPolicy.ALTERNATE))

    def estimate(self, history):
        u = np.asarray(history, dtype=float)
        half = self.n_s // 2
        nu1 = (half - u[0::2].sum()) / half
        nu2 = (half - u[1::2].sum()) / half
        est, degenerate = standard_estimate(nu1, nu2, self.reference)
        return float(est), bool(degenerate)


@dataclass
class QPEAProtocol(Protocol):
    """Iterative QPEA, least significant digit first (k = K down to 0)."""

    K: int
    offset: float = 0.0

    def __post_init__(self):
        self.n_measurements = self.K + 1
        self.n_resources = 2 ** (self.K + 1) - 1

    def _acc(self, history):
        acc = 0.0
        for i, u in enumerate(history):
            acc = qpea_digit(acc, u, 2 ** (self.K - i))
        return acc

    def setting(self, history):
        p = 2 ** (self.K - len(history))
        return MeasurementSetting(p, qpea_theta(p, self.offset, self._acc(history)))

    def estimate(self, history):
        return wrap(self.offset + self._acc(history)), False


@dataclass
class BlockProtocol(Protocol):
    """Predetermined blocks of M(K,k) measurements with 2**k passes, k ascending."""

    reps: list[int]
    policy: ThetaPolicy = ThetaPolicy.INCREMENT
    reference: float = 0.0
    plan: list[MeasurementSetting] = field(init=False)

    def __post_init__(self):
        self.plan = [
            MeasurementSetting(2 ** k, 2 ** k * self.reference + block_theta(j, m, self.policy))
            for k, m in enumerate(self.reps)
            for j in range(m)
        ]
        self.n_measurements = len(self.plan)
        self.n_resources = sum(m * 2 ** k for k, m in enumerate(self.reps))

    def setting(self, history):
        return self.plan[len(history)]

    def estimate(self, history):
        return estimate_with_flag(posterior_from(zip(self.plan, history)))


@dataclass
class HybridProtocol(Protocol):
    """QPEA stage (K+1 measurements) followed by N_S single-pass measurements.

    Bayesian mode increments the standard control phase by pi/N_S and takes
    the posterior estimate from all outcomes.  Combiner mode alternates 0 and
    pi/2 and keeps the QPEA digits only when they agree with the standard
    estimate.
    """

    K: int
    n_s: int
    mode: HybridMode = HybridMode.BAYESIAN
    reference: float = 0.0
    xi: float = 0.0

    def __post_init__(self):
        self.qpea = QPEAProtocol(self.K, self.reference + self.xi)
        self.standard = StandardProtocol(self.n_s, self.reference)
        self.n_measurements = self.qpea.n_measurements + self.n_s
        self.n_resources = self.qpea.n_resources + self.n_s

    def setting(self, history):
        nq = self.qpea.n_measurements
        if len(history) < nq:
            return self.qpea.setting(history)
        j = len(history) - nq
        if self.mode is HybridMode.COMBINER:
            return self.standard.setting(history[nq:])
        return MeasurementSetting(1, self.reference + block_theta(j, self.n_s, ThetaPolicy.INCREMENT))

    def estimate(self, history):
        nq = self.qpea.n_measurements
        if self.mode is HybridMode.BAYESIAN:
            return estimate_with_flag(posterior_from(zip(self.settings_for(history), history)))
        phi_q, _ = self.qpea.estimate(history[:nq])
        phi_s, degenerate = self.standard.estimate(history[nq:])
        phi = combine_estimates(phi_s, phi_q, combiner_threshold(self.n_s))
        return float(phi), degenerate


def make_protocol(cfg: SchemeConfig, reference: float = 0.0, xi: float = 0.0) -> Protocol:
    if cfg.kind is SchemeKind.STANDARD:
        return StandardProtocol(cfg.n_standard, reference)
    if cfg.kind is SchemeKind.QPEA:
        return QPEAProtocol(cfg.K, reference + xi)
    if cfg.kind is SchemeKind.HYBRID:
        return HybridProtocol(cfg.K, cfg.n_standard, cfg.hybrid_mode, reference, xi)
    return BlockProtocol(repetitions(cfg), cfg.theta_policy, reference)


def drive(protocol: Protocol, phi_true: float, rng: np.random.Generator) -> tuple[float, bool, list[int]]:
    history: list[int] = []
    for _ in range(protocol.n_measurements):
        s = protocol.setting(history)
        history.append(measurement.sample_outcome(phi_true, s, rng))
    est, degenerate = protocol.estimate(history)
    return est, degenerate, history


def _run(protocol: Protocol, phi_true, rng) -> EstimateSample:
    est, degenerate, _ = drive(protocol, phi_true, rng)
    return EstimateSample(phi_true, est, protocol.n_resources, degenerate)


def draw_reference(rng: np.random.Generator) -> float:
    return TWO_PI * rng.random()


def run_standard(n_s: int, phi_true: float, rng, reference: float = 0.0) -> EstimateSample:
    if n_s < 2 or n_s % 2:
        raise ValueError("N_S must be an even integer >= 2")
    return _run(StandardProtocol(n_s, reference), phi_true, rng)


def run_qpea(K: int, phi_true: float, rng, randomize_reference: bool = False,
             reference: float = 0.0) -> EstimateSample:
    xi = draw_reference(rng) if randomize_reference else 0.0
    return _run(QPEAProtocol(K, reference + xi), phi_true, rng)


def run_hybrid(K: int, phi_true: float, rng, mode: HybridMode = HybridMode.BAYESIAN,
               n_s: int | None = None, randomize_reference: bool = False,
               reference: float = 0.0) -> EstimateSample:
    cfg = SchemeConfig(SchemeKind.HYBRID, K=K, N_S=n_s, hybrid_mode=mode,
                       randomize_reference=randomize_reference)
    return run_scheme(cfg, phi_true, rng, reference)


def run_nonadaptive(K: int, M_K: int, mu: int, phi_true: float, rng,
                    policy: ThetaPolicy = ThetaPolicy.INCREMENT,
                    reference: float = 0.0) -> EstimateSample:
    cfg = SchemeConfig(SchemeKind.NONADAPTIVE, K=K, M_K=M_K, mu=mu, theta_policy=policy)
    return run_scheme(cfg, phi_true, rng, reference)


def run_fixed_m(K: int, M: int, phi_true: float, rng,
                policy: ThetaPolicy = ThetaPolicy.INCREMENT,
                reference: float = 0.0) -> EstimateSample:
    cfg = SchemeConfig(SchemeKind.FIXEDM, K=K, M_K=M, theta_policy=policy)
    return run_scheme(cfg, phi_true, rng, reference)


def run_scheme(cfg: SchemeConfig, phi_true: float, rng, reference: float = 0.0) -> EstimateSample:
    """One trial of ``cfg``.  Draws the QPEA reference first when randomised."""
    xi = draw_reference(rng) if cfg.randomize_reference else 0.0
    return _run(make_protocol(cfg, reference, xi), phi_true, rng)
