"""Trial ensembles, circular statistics and campaign summaries."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bounds import BoundReport, heisenberg_limit, hybrid_variance_bound, nonadaptive_vmax, sql
from .engine import DEFAULT_CHUNK, PhiPolicy, simulate_trials, trial_rng
from .measurement import TWO_PI
from .schemes import EstimateSample, SchemeConfig, SchemeKind, repetitions, run_scheme, total_resources

log = logging.getLogger(__name__)

ZERO_RESULTANT = 1e-12
CSV_COLUMNS = [
    "scheme", "K", "N", "trials", "holevo_std", "std_x_sqrtN", "std_x_N", "mc_stderr",
    "sql", "heisenberg", "bound", "degenerate_count",
    # extras after the fixed columns
    "holevo_var", "holevo_var_stderr", "sin_var", "sin_var_stderr", "v_bound",
    "M_K", "mu", "N_S", "theta_policy", "hybrid_mode", "randomize_reference",
]


@dataclass(frozen=True)
class HolevoStats:
    n: int
    resultant: complex
    holevo_var: float
    holevo_var_stderr: float
    sin_var: float
    sin_var_stderr: float

    @property
    def holevo_std(self) -> float:
        return math.sqrt(self.holevo_var)

    @property
    def holevo_std_stderr(self) -> float:
        # delta method: d sqrt(V) = dV / (2 sqrt V)
        if not math.isfinite(self.holevo_var):
            return math.inf
        if self.holevo_var == 0.0:
            return 0.0
        return self.holevo_var_stderr / (2.0 * self.holevo_std)


def _holevo(z_mean: np.ndarray) -> np.ndarray:
    r2 = np.abs(z_mean) ** 2
    with np.errstate(divide="ignore"):
        return np.where(r2 < ZERO_RESULTANT ** 2, np.inf, 1.0 / np.maximum(r2, 1e-300) - 1.0)


def holevo_stats(errors) -> HolevoStats:
    """Holevo variance |<e^{i err}>|^-2 - 1 and 4<sin^2(err/2)>, with jackknife errors.

    Leave-one-out means are formed in closed form, so this is O(n).
    """
    err = np.asarray(errors, dtype=float).ravel()
    n = err.size
    if n == 0:
        raise ValueError("need at least one sample")
    z = np.exp(1j * err)
    total = complex(math.fsum(z.real), math.fsum(z.imag))
    mean = total / n
    v_h = float(_holevo(np.array([mean]))[0])
    if v_h < 0.0:
        v_h = 0.0
    s = 4.0 * np.sin(err / 2.0) ** 2
    sin_var = math.fsum(s) / n
    if n < 2:
        return HolevoStats(n, mean, v_h, math.inf, sin_var, math.inf)
    loo = (total - z) / (n - 1)
    v_loo = _holevo(loo)
    if np.all(np.isfinite(v_loo)):
        var_se = math.sqrt((n - 1) / n * float(np.sum((v_loo - v_loo.mean()) ** 2)))
    else:
        var_se = math.inf
    sin_se = float(np.std(s, ddof=1)) / math.sqrt(n)
    return HolevoStats(n, mean, v_h, var_se, sin_var, sin_se)


def holevo_std(samples: Sequence[EstimateSample]) -> float:
    """sqrt of the Holevo variance of ``phi_true - phi_est``; +inf if undefined."""
    if len(samples) == 0:
        raise ValueError("need at least one sample")
    return holevo_stats([s.phi_true - s.phi_est for s in samples]).holevo_std


def bound_for(cfg: SchemeConfig) -> BoundReport | None:
    """Analytic variance bound matching a scheme, when one exists."""
    if cfg.kind is SchemeKind.HYBRID:
        return hybrid_variance_bound(2 ** (cfg.K + 1) - 1, cfg.n_standard)
    if cfg.kind in (SchemeKind.NONADAPTIVE, SchemeKind.FIXEDM):
        return nonadaptive_vmax(cfg.K, repetitions(cfg))
    return None


@dataclass
class CampaignRow:
    cfg: SchemeConfig
    N: int
    trials: int
    stats: HolevoStats
    bound: BoundReport | None
    degenerate_count: int
    elapsed: float = 0.0

    @property
    def holevo_std(self) -> float:
        return self.stats.holevo_std

    @property
    def mc_stderr(self) -> float:
        return self.stats.holevo_std_stderr

    @property
    def overhead(self) -> float:
        """Delta-phi relative to the Heisenberg limit pi/N."""
        return self.holevo_std * self.N / math.pi

    def record(self) -> dict:
        cfg = self.cfg
        return {
            "scheme": cfg.kind.value,
            "K": cfg.K,
            "N": self.N,
            "trials": self.trials,
            "holevo_std": self.holevo_std,
            "std_x_sqrtN": self.holevo_std * math.sqrt(self.N),
            "std_x_N": self.holevo_std * self.N,
            "mc_stderr": self.mc_stderr,
            "sql": sql(self.N),
            "heisenberg": heisenberg_limit(self.N),
            "bound": self.bound.delta_phi_bound if self.bound else None,
            "degenerate_count": self.degenerate_count,
            "holevo_var": self.stats.holevo_var,
            "holevo_var_stderr": self.stats.holevo_var_stderr,
            "sin_var": self.stats.sin_var,
            "sin_var_stderr": self.stats.sin_var_stderr,
            "v_bound": self.bound.v_bound if self.bound else None,
            "M_K": cfg.M_K,
            "mu": cfg.mu,
            "N_S": cfg.n_standard,
            "theta_policy": cfg.theta_policy.value,
            "hybrid_mode": cfg.hybrid_mode.value,
            "randomize_reference": cfg.randomize_reference,
        }


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


@dataclass
class CampaignSummary:
    rows: list[CampaignRow] = field(default_factory=list)
    seed: int | None = None
    policy: str = PhiPolicy.UNIFORM.value

    def records(self) -> list[dict]:
        return [r.record() for r in self.rows]

    def to_csv(self, header_lines: Iterable[str] = ()) -> str:
        out = io.StringIO()
        for line in header_lines:
            out.write(f"# {line}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in self.records():
            writer.writerow([_fmt(rec[c]) for c in CSV_COLUMNS])
        return out.getvalue()

    def to_json(self, extra: dict | None = None) -> str:
        payload = {"seed": self.seed, "phi_policy": self.policy, "columns": CSV_COLUMNS,
                   "rows": [{k: _jsonable(v) for k, v in rec.items()} for rec in self.records()]}
        if extra:
            payload.update(extra)
        return json.dumps(payload, indent=2)


def _jsonable(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def read_csv(text: str) -> list[dict]:
    """Parse campaign CSV text back into typed records (comment lines skipped)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        typed = {}
        for k, v in rec.items():
            if v == "":
                typed[k] = None
            elif k in ("scheme", "theta_policy", "hybrid_mode"):
                typed[k] = v
            elif k == "randomize_reference":
                typed[k] = v == "true"
            elif k in ("K", "N", "trials", "degenerate_count", "M_K", "mu", "N_S"):
                typed[k] = int(v)
            else:
                typed[k] = float(v)
        out.append(typed)
    return out


def thread_count(requested: int | None = None) -> int:
    if requested is None:
        env = os.environ.get("PHASEEST_THREADS")
        requested = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(requested))


def run_point(cfg: SchemeConfig, trials: int, seed: int, point: int = 0,
              policy=PhiPolicy.UNIFORM, threads: int | None = None,
              method: str = "moments", chunk: int = DEFAULT_CHUNK) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All trials of one configuration; results are in trial order whatever the threading."""
    idx = np.arange(trials)
    n_threads = min(thread_count(threads), max(1, trials // chunk))
    if n_threads == 1:
        return simulate_trials(cfg, seed, point, idx, policy, method, chunk)
    parts = np.array_split(idx, n_threads)
    with ThreadPoolExecutor(n_threads) as pool:
        results = list(pool.map(lambda part: simulate_trials(cfg, seed, point, part, policy, method, chunk), parts))
    return tuple(np.concatenate([r[i] for r in results]) for i in range(3))


def summarize(cfg: SchemeConfig, phi, est, degenerate, elapsed: float = 0.0) -> CampaignRow:
    return CampaignRow(cfg, total_resources(cfg), int(np.size(phi)), holevo_stats(np.asarray(phi) - np.asarray(est)),
                       bound_for(cfg), int(np.sum(degenerate)), elapsed)


def run_campaign(cfgs: Sequence[SchemeConfig], trials_per_point, seed: int,
                 phi_policy=PhiPolicy.UNIFORM, threads: int | None = None,
                 method: str = "moments") -> CampaignSummary:
    """Simulate every configuration; ``trials_per_point`` is an int or one int per config.

    A configuration that fails is logged and skipped rather than aborting the run.
    """
    policy = PhiPolicy(phi_policy)
    if isinstance(trials_per_point, (int, np.integer)):
        trials_per_point = [int(trials_per_point)] * len(cfgs)
    summary = CampaignSummary(seed=seed, policy=policy.value)
    for point, (cfg, trials) in enumerate(zip(cfgs, trials_per_point)):
        t0 = time.perf_counter()
        try:
            phi, est, deg = run_point(cfg, trials, seed, point, policy, threads, method)
        except Exception:  # keep the campaign alive; the row is simply missing
            log.exception("configuration %s failed", cfg)
            continue
        row = summarize(cfg, phi, est, deg, time.perf_counter() - t0)
        log.info("%s K=%d N=%d dphi=%.4g (%.1fs)", cfg.kind.value, cfg.K, row.N, row.holevo_std, row.elapsed)
        summary.rows.append(row)
    return summary


def run_trial(cfg: SchemeConfig, seed: int, point: int, trial: int,
              policy=PhiPolicy.UNIFORM, fixed_phi: float = 0.0) -> EstimateSample:
    """Scalar reference path for a single campaign trial (same stream as the engine)."""
    rng = trial_rng(seed, point, trial)
    first = TWO_PI * rng.random()
    if PhiPolicy(policy) is PhiPolicy.UNIFORM:
        return run_scheme(cfg, first, rng)
    return run_scheme(cfg, fixed_phi, rng, reference=first)
