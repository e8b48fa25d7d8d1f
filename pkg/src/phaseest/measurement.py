"""Single-measurement likelihood for a binary interferometric outcome.

A measurement applies the unknown phase ``p`` times against a control phase
``theta``.  The outcome ``u`` is 0 or 1 with

    P(u | phi; p, theta) = [1 + (-1)**u * cos(p*phi - theta)] / 2

``theta`` is the total control phase, i.e. any multiplication by the number
of passes has already been applied by the caller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap(angle):
    """Reduce an angle (or array of angles) to [0, 2pi)."""
    out = np.mod(angle, TWO_PI)
    # np.mod can round up to exactly 2pi for tiny negative inputs
    if np.ndim(out) == 0:
        return 0.0 if out >= TWO_PI else float(out)
    out[out >= TWO_PI] = 0.0
    return out


def circular_distance(a, b):
    """Absolute angular separation in [0, pi]."""
    return np.abs(np.mod(np.asarray(a) - np.asarray(b) + math.pi, TWO_PI) - math.pi)


@dataclass(frozen=True)
class MeasurementSetting:
    p: int
    theta: float = 0.0

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"number of passes must be a positive integer, got {self.p!r}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "theta", wrap(float(self.theta)))


def _check_outcome(u):
    if u not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {u!r}")


def likelihood(u: int, phi, s: MeasurementSetting):
    """Probability of outcome ``u`` given true phase ``phi`` (scalar or array)."""
    _check_outcome(u)
    sign = 1.0 if u == 0 else -1.0
    return 0.5 * (1.0 + sign * np.cos(s.p * np.asarray(phi, dtype=float) - s.theta))


def sample_outcome(phi_true: float, s: MeasurementSetting, rng: np.random.Generator) -> int:
    """Draw one outcome.  Consumes exactly one uniform from ``rng``."""
    return 0 if rng.random() < likelihood(0, phi_true, s) else 1
