"""Brute-force enumeration of every outcome sequence of a small protocol.

The oracle walks the full outcome tree of a scheme using the scalar protocol
objects.  For a fixed control-phase offset, the settings along a branch and
the estimate at a leaf do not depend on the true phase, so the branch
probability is carried as a vector over the whole phase grid.

For a uniformly distributed true phase the averaged resultant
``<exp(i(phi - phi_est))>`` is a trigonometric polynomial in ``phi`` of degree at
most N + 1, so a uniform grid with more than N + 2 points integrates it
exactly.  ``default_phi_grid`` picks such a grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import fejer_kernel
from .measurement import TWO_PI, likelihood
from .schemes import SchemeConfig, SchemeKind, make_protocol, n_measurements, total_resources

ENUMERATION_CAP = 2 ** 20


class EnumerationTooLarge(ValueError):
    pass


@dataclass
class OracleResult:
    cfg: SchemeConfig
    phi_grid: np.ndarray
    xi_grid: np.ndarray
    xi_index: np.ndarray          # (L,) which xi each leaf belongs to
    outcomes: np.ndarray          # (L, n_measurements)
    estimates: np.ndarray         # (L,)
    degenerate: np.ndarray        # (L,)
    probs: np.ndarray             # (L, n_phi): P(outcomes | phi, xi)

    def resultant_by_phi(self) -> np.ndarray:
        """<exp(i(phi - phi_est))> at each grid phase, averaged over xi."""
        rot = np.exp(1j * (self.phi_grid[None, :] - self.estimates[:, None]))
        return (self.probs * rot).sum(axis=0) / self.xi_grid.size

    @property
    def resultant(self) -> complex:
        return complex(self.resultant_by_phi().mean())

    @property
    def holevo_var(self) -> float:
        r = abs(self.resultant)
        return math.inf if r < 1e-12 else r ** -2 - 1.0

    @property
    def sin_var(self) -> float:
        """4<sin^2((phi - phi_est)/2)> = 2 (1 - Re<exp(i err)>)."""
        return 2.0 * (1.0 - self.resultant.real)

    def total_probability(self) -> np.ndarray:
        return self.probs.sum(axis=0) / self.xi_grid.size


def default_phi_grid(cfg: SchemeConfig) -> np.ndarray:
    n = 1 << int(math.ceil(math.log2(total_resources(cfg) + 3)))
    return TWO_PI * (np.arange(n) + 0.5) / n


def enumeration_size(cfg: SchemeConfig, n_xi: int = 1) -> int:
    return 2 ** n_measurements(cfg) * n_xi


def exact_oracle(cfg: SchemeConfig, phi_grid=None, xi_grid=None, reference: float = 0.0,
                 cap: int = ENUMERATION_CAP) -> OracleResult:
    """Exact distribution of estimates over ``phi_grid`` (and QPEA offsets ``xi_grid``).

    ``xi_grid`` defaults to the single offset 0.  Rejects instances whose
    (outcome sequences) x (offsets) count exceeds ``cap``.
    """
    phi = default_phi_grid(cfg) if phi_grid is None else np.asarray(phi_grid, dtype=float)
    xis = np.zeros(1) if xi_grid is None else np.asarray(xi_grid, dtype=float)
    if xis.size > 1 and cfg.kind not in (SchemeKind.QPEA, SchemeKind.HYBRID):
        raise ValueError("an offset grid applies only to schemes with a QPEA stage")
    size = enumeration_size(cfg, xis.size)
    if size > cap:
        raise EnumerationTooLarge(f"{size} outcome sequences exceed the cap of {cap}")

    n_meas = n_measurements(cfg)
    xi_index, outcomes, estimates, degenerate, probs = [], [], [], [], []
    for ix, xi in enumerate(xis):
        protocol = make_protocol(cfg, reference, float(xi))
        stack = [((), np.ones_like(phi))]
        while stack:
            history, prob = stack.pop()
            if len(history) == n_meas:
                est, deg = protocol.estimate(list(history))
                xi_index.append(ix)
                outcomes.append(history)
                estimates.append(est)
                degenerate.append(deg)
                probs.append(prob)
                continue
            s = protocol.setting(list(history))
            for u in (1, 0):
                branch = prob * likelihood(u, phi, s)
                if branch.any():
                    stack.append((history + (u,), branch))
    return OracleResult(
        cfg, phi, xis, np.array(xi_index), np.array(outcomes, dtype=np.int8).reshape(-1, n_meas),
        np.array(estimates), np.array(degenerate, dtype=bool), np.array(probs),
    )


def qpea_kernel_error(K: int, n_xi: int = 256, phi_true: float = 0.7) -> float:
    """L-inf gap between the enumerated QPEA error density and the Fejer kernel.

    With the offset uniform, each leaf (offset, outcome string) carries density
    P(outcomes) * n / (2 pi) at error phi - phi_est, n = 2**(K+1).
    """
    cfg = SchemeConfig(SchemeKind.QPEA, K=K)
    xi = TWO_PI * np.arange(n_xi) / n_xi
    res = exact_oracle(cfg, phi_grid=[phi_true], xi_grid=xi)
    n = 2 ** (K + 1)
    density = res.probs[:, 0] * n / TWO_PI
    return float(np.max(np.abs(density - fejer_kernel(phi_true - res.estimates, n))))


def qpea_error_histogram(K: int, n_xi: int = 256, phi_true: float = 0.7):
    """Error density on the lattice of possible errors, merging coincident leaves."""
    cfg = SchemeConfig(SchemeKind.QPEA, K=K)
    xi = TWO_PI * np.arange(n_xi) / n_xi
    res = exact_oracle(cfg, phi_grid=[phi_true], xi_grid=xi)
    err = np.mod(phi_true - res.estimates + math.pi, TWO_PI) - math.pi
    spacing = TWO_PI / np.lcm(n_xi, 2 ** (K + 1))
    bins = np.round(err / spacing).astype(int)
    offset = float(np.median(err - bins * spacing))
    keys, inv = np.unique(bins, return_inverse=True)
    mass = np.bincount(inv, weights=res.probs[:, 0] / n_xi)
    return keys * spacing + offset, mass / spacing
