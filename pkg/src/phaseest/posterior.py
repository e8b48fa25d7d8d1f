"""Exact Bayesian posterior over a phase, stored as trigonometric moments.

The density is

    P(phi) = (1/2pi) * sum_{m=-D..D} c_m exp(-i m phi),   c_{-m} = conj(c_m)

so that ``c_m = <exp(i m phi)>``.  Only ``c_0 .. c_D`` are stored.  Multiplying
by a likelihood ``[1 + s cos(p phi - theta)]/2`` shifts moments by ``+-p``:

    c'_n = c_n/2 + (s/4) * (exp(-i theta) c_{n+p} + exp(i theta) c_{n-p})

followed by renormalisation to ``c'_0 = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .measurement import TWO_PI, MeasurementSetting, wrap

DEGENERATE_TOL = 1e-12
DEFAULT_GRID = 8192


class DegenerateEstimate(ValueError):
    """The first circular moment vanishes, so ``arg <e^{i phi}>`` is undefined."""


def update_moments(c: np.ndarray, degree: int, sign, p: int, theta) -> int:
    """Multiply a batch of moment vectors by one likelihood factor, in place.

    ``c`` has shape (T, L) with zeros above ``degree``; ``sign`` is +1/-1 per
    row (or scalar) and ``theta`` the control phase per row (or scalar).
    Returns the new degree bound ``degree + p``.
    """
    new_degree = degree + p
    if new_degree >= c.shape[1]:
        raise ValueError("moment buffer too short for update")
    sign = np.asarray(sign, dtype=float)
    theta = np.asarray(theta, dtype=float)
    rot = np.exp(1j * theta)
    a = np.atleast_1d(0.25 * sign * np.conj(rot))[:, None]
    b = np.atleast_1d(0.25 * sign * rot)[:, None]

    old = c[:, : degree + 1].copy()
    new = c[:, : new_degree + 1]
    new *= 0.5
    if degree >= p:
        new[:, : degree - p + 1] += a * old[:, p:]
    new[:, p:] += b * old
    lo = max(0, p - degree)
    if lo < p:
        # negative-index moments folded back through conjugate symmetry
        new[:, lo:p] += b * np.conj(old[:, p - lo : 0 : -1])
    norm = new[:, :1].real.copy()
    new /= norm
    new[:, 0] = 1.0
    return new_degree


@dataclass(frozen=True)
class PhasePosterior:
    coeffs: np.ndarray
    degree: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def first_moment(self) -> complex:
        return complex(self.coeffs[1]) if self.degree >= 1 else 0j

    def density(self, phi):
        """Evaluate the density at ``phi`` (scalar or array)."""
        phi = np.asarray(phi, dtype=float)
        m = np.arange(1, self.degree + 1)
        if m.size == 0:
            return np.full(phi.shape, 1.0 / TWO_PI)[()]
        terms = self.coeffs[1:][:, None] * np.exp(-1j * np.outer(m, phi.ravel()))
        vals = (1.0 + 2.0 * terms.sum(axis=0).real) / TWO_PI
        return vals.reshape(phi.shape)[()]

    def holevo_width(self) -> float:
        """sqrt(|c_1|^-2 - 1); +inf when the first moment vanishes."""
        r = abs(self.first_moment)
        if r < DEGENERATE_TOL:
            return math.inf
        return math.sqrt(max(r ** -2 - 1.0, 0.0))


def uniform_prior() -> PhasePosterior:
    return PhasePosterior(np.array([1.0 + 0j]), 0)


def bayes_update(post: PhasePosterior, u: int, s: MeasurementSetting) -> PhasePosterior:
    if u not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {u!r}")
    sign = 1.0 if u == 0 else -1.0
    cp = post.coeffs[s.p] if s.p <= post.degree else 0.0
    norm = 0.5 + 0.5 * sign * (np.exp(-1j * s.theta) * cp).real
    assert norm > 0.0, "posterior vanished: outcome has zero probability"
    buf = np.zeros((1, post.degree + s.p + 1), dtype=complex)
    buf[0, : post.degree + 1] = post.coeffs
    update_moments(buf, post.degree, sign, s.p, s.theta)
    c = _trim(buf[0])
    return PhasePosterior(c, c.size - 1)


def _trim(c: np.ndarray) -> np.ndarray:
    # drop trailing moments that cancelled exactly
    nz = np.flatnonzero(c)
    return c[: nz[-1] + 1] if nz.size else c[:1]


def posterior_from(measurements: Iterable[tuple[MeasurementSetting, int]]) -> PhasePosterior:
    post = uniform_prior()
    for s, u in measurements:
        post = bayes_update(post, u, s)
    return post


def point_estimate(post: PhasePosterior) -> float:
    """arg of the first circular moment, in [0, 2pi)."""
    c1 = post.first_moment
    if abs(c1) < DEGENERATE_TOL:
        raise DegenerateEstimate("first circular moment vanishes")
    return wrap(math.atan2(c1.imag, c1.real))


def fallback_estimate(coeffs: Sequence[complex]) -> float:
    """Estimate from the lowest non-vanishing moment when ``c_1`` is zero.

    ``arg(c_m)/m`` picks the branch nearest 0 from above; 0 for a uniform
    posterior.
    """
    for m in range(1, len(coeffs)):
        cm = complex(coeffs[m])
        if abs(cm) >= DEGENERATE_TOL:
            return wrap(math.atan2(cm.imag, cm.real)) / m
    return 0.0


def estimate_with_flag(post: PhasePosterior) -> tuple[float, bool]:
    try:
        return point_estimate(post), False
    except DegenerateEstimate:
        return fallback_estimate(post.coeffs), True


def batch_estimates(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Point estimates and degeneracy flags for a (T, L) moment batch."""
    c1 = c[:, 1] if c.shape[1] > 1 else np.zeros(c.shape[0], dtype=complex)
    degenerate = np.abs(c1) < DEGENERATE_TOL
    est = wrap(np.arctan2(c1.imag, c1.real))
    for i in np.flatnonzero(degenerate):
        est[i] = fallback_estimate(c[i])
    return est, degenerate


# -- grid fallback ---------------------------------------------------------

def phase_grid(n: int = DEFAULT_GRID) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


def grid_log_density(measurements: Iterable[tuple[MeasurementSetting, int]],
                     n: int = DEFAULT_GRID) -> np.ndarray:
    """Unnormalised log posterior on an ``n``-point grid, by direct products."""
    phi = phase_grid(n)
    logp = np.zeros(n)
    with np.errstate(divide="ignore"):
        for s, u in measurements:
            sign = 1.0 if u == 0 else -1.0
            logp += np.log(0.5 * (1.0 + sign * np.cos(s.p * phi - s.theta)))
    return logp


def grid_density(measurements, n: int = DEFAULT_GRID) -> np.ndarray:
    logp = grid_log_density(measurements, n)
    w = np.exp(logp - logp.max())
    return w / (w.mean() * TWO_PI)


def grid_estimate(measurements, n: int = DEFAULT_GRID) -> float:
    """arg of the first moment of the grid posterior.

    Exact (up to rounding) whenever the total number of passes is below ``n - 1``.
    """
    logp = grid_log_density(measurements, n)
    w = np.exp(logp - logp.max())
    c1 = np.sum(w * np.exp(1j * phase_grid(n)))
    if abs(c1) < DEGENERATE_TOL * w.sum():
        raise DegenerateEstimate("first circular moment vanishes")
    return wrap(math.atan2(c1.imag, c1.real))
