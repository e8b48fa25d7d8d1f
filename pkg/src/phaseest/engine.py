"""Vectorised Monte Carlo engine: many independent trials of one scheme at once.

Each trial owns a generator seeded from ``(seed, point, trial)``.  Its draws
are consumed in a fixed order (policy draw, optional QPEA reference, then one
uniform per measurement in protocol order), the same order the scalar
``schemes.run_*`` functions consume them, so a batch row and a scalar run with
the same generator see identical outcomes.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .measurement import TWO_PI, wrap
from .posterior import DEFAULT_GRID, batch_estimates, phase_grid, update_moments
from .schemes import (
    HybridMode,
    SchemeConfig,
    SchemeKind,
    ThetaPolicy,
    block_theta,
    combine_estimates,
    combiner_threshold,
    n_measurements,
    qpea_digit,
    qpea_theta,
    repetitions,
    standard_estimate,
    total_resources,
)

DEFAULT_CHUNK = 512


class PhiPolicy(str, Enum):
    UNIFORM = "uniform"            # phi_true ~ U[0, 2pi)
    FIXED_REFERENCE = "fixed"      # phi_true fixed, all control phases offset at random


def trial_rng(seed: int, point: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(point, trial)))


@dataclass
class TrialDraws:
    phi_true: np.ndarray
    reference: np.ndarray
    xi: np.ndarray
    uniforms: np.ndarray  # (T, n_measurements)


def draw_trials(cfg: SchemeConfig, seed: int, point: int, trials, policy=PhiPolicy.UNIFORM,
                fixed_phi: float = 0.0) -> TrialDraws:
    policy = PhiPolicy(policy)
    trials = np.asarray(trials)
    n_meas = n_measurements(cfg)
    extra = 2 if cfg.randomize_reference else 1
    raw = np.empty((trials.size, extra + n_meas))
    for row, t in enumerate(trials):
        raw[row] = trial_rng(seed, point, int(t)).random(extra + n_meas)
    first = TWO_PI * raw[:, 0]
    if policy is PhiPolicy.UNIFORM:
        phi, ref = first, np.zeros(trials.size)
    else:
        phi, ref = np.full(trials.size, float(fixed_phi)), first
    xi = TWO_PI * raw[:, 1] if cfg.randomize_reference else np.zeros(trials.size)
    return TrialDraws(phi, ref, xi, raw[:, extra:])


def _outcomes(phi, p, theta, uniforms):
    """Sampled outcomes (0/1 floats) and the wrapped control phase used."""
    theta = wrap(np.asarray(theta, dtype=float) + np.zeros_like(phi))
    p0 = 0.5 * (1.0 + np.cos(p * phi - theta))
    return np.where(uniforms < p0, 0.0, 1.0), theta


class _Posterior:
    """Posterior for a batch of trials: exact moments, or a log-density grid."""

    def __init__(self, n_trials: int, max_degree: int, method: str, n_grid: int):
        self.method = method
        if method == "moments":
            self.c = np.zeros((n_trials, max_degree + 1), dtype=complex)
            self.c[:, 0] = 1.0
            self.degree = 0
        elif method == "grid":
            self.phi = phase_grid(n_grid)
            self.logp = np.zeros((n_trials, n_grid))
        else:
            raise ValueError(f"unknown posterior method {method!r}")

    def update(self, u, p, theta):
        sign = 1.0 - 2.0 * u
        if self.method == "moments":
            self.degree = update_moments(self.c, self.degree, sign, p, theta)
        else:
            arg = p * self.phi[None, :] - np.asarray(theta)[..., None]
            with np.errstate(divide="ignore"):
                self.logp += np.log(0.5 * (1.0 + sign[:, None] * np.cos(arg)))

    def estimates(self):
        if self.method == "moments":
            return batch_estimates(self.c)
        w = np.exp(self.logp - self.logp.max(axis=1, keepdims=True))
        c1 = (w * np.exp(1j * self.phi)).sum(axis=1) / w.sum(axis=1)
        c = np.stack([np.ones_like(c1), c1], axis=1)
        return batch_estimates(c)


def _qpea_stage(K, offset, phi, uniforms):
    """Run the K+1 adaptive QPEA steps; returns the digit estimate and the record."""
    acc = np.zeros_like(phi)
    record = []
    for i, k in enumerate(range(K, -1, -1)):
        p = 2 ** k
        u, theta = _outcomes(phi, p, qpea_theta(p, offset, acc), uniforms[:, i])
        record.append((u, p, theta))
        acc = qpea_digit(acc, u, p)
    return wrap(offset + acc), record


def _standard_stage(n_s, reference, phi, uniforms):
    j = np.arange(n_s)
    u, _ = _outcomes(phi[:, None], 1, reference[:, None] + block_theta(j, 2, ThetaPolicy.ALTERNATE),
                     uniforms)
    half = n_s // 2
    nu1 = (half - u[:, 0::2].sum(axis=1)) / half
    nu2 = (half - u[:, 1::2].sum(axis=1)) / half
    return standard_estimate(nu1, nu2, reference)


def simulate_batch(cfg: SchemeConfig, draws: TrialDraws, method: str = "moments",
                   n_grid: int = DEFAULT_GRID) -> tuple[np.ndarray, np.ndarray]:
    """Estimates and degeneracy flags for every row of ``draws``."""
    phi, ref, U = draws.phi_true, draws.reference, draws.uniforms
    T = phi.size
    kind = cfg.kind

    if kind is SchemeKind.STANDARD:
        est, degenerate = _standard_stage(cfg.n_standard, ref, phi, U)
        return est, degenerate

    if kind is SchemeKind.QPEA:
        est, _ = _qpea_stage(cfg.K, ref + draws.xi, phi, U)
        return est, np.zeros(T, dtype=bool)

    if kind is SchemeKind.HYBRID:
        nq = cfg.K + 1
        n_s = cfg.n_standard
        phi_q, record = _qpea_stage(cfg.K, ref + draws.xi, phi, U[:, :nq])
        if cfg.hybrid_mode is HybridMode.COMBINER:
            phi_s, degenerate = _standard_stage(n_s, ref, phi, U[:, nq:])
            return combine_estimates(phi_s, phi_q, combiner_threshold(n_s)), degenerate
        post = _Posterior(T, total_resources(cfg), method, n_grid)
        # single-pass updates first keeps the working degree small
        for j in range(n_s):
            u, theta = _outcomes(phi, 1, ref + block_theta(j, n_s, ThetaPolicy.INCREMENT), U[:, nq + j])
            post.update(u, 1, theta)
        for u, p, theta in record:
            post.update(u, p, theta)
        return post.estimates()

    post = _Posterior(T, total_resources(cfg), method, n_grid)
    col = 0
    for k, m in enumerate(repetitions(cfg)):
        p = 2 ** k
        for j in range(m):
            u, theta = _outcomes(phi, p, p * ref + block_theta(j, m, cfg.theta_policy), U[:, col])
            post.update(u, p, theta)
            col += 1
    return post.estimates()


def simulate_trials(cfg: SchemeConfig, seed: int, point: int, trials, policy=PhiPolicy.UNIFORM,
                    method: str = "moments", chunk: int = DEFAULT_CHUNK):
    """Run the given trial indices in chunks; returns (phi_true, phi_est, degenerate)."""
    trials = np.asarray(trials)
    phi = np.empty(trials.size)
    est = np.empty(trials.size)
    deg = np.zeros(trials.size, dtype=bool)
    for lo in range(0, trials.size, chunk):
        sl = slice(lo, lo + chunk)
        draws = draw_trials(cfg, seed, point, trials[sl], policy)
        e, d = simulate_batch(cfg, draws, method)
        phi[sl] = draws.phi_true
        est[sl] = e
        deg[sl] = d
    return phi, est, deg
