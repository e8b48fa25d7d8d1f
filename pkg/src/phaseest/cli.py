"""Command-line front end: ``phaseest simulate | bounds | oracle``.

Exit codes: 0 success, 2 invalid arguments, 3 runtime failure, 4 oracle
instance over the enumeration cap, 5 oracle check failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .bounds import (
    heisenberg_limit,
    hybrid_variance_bound,
    linear_schedule,
    nonadaptive_vmax,
    proven_schedule,
    proven_schedule_overhead,
    proven_vmax_ceiling,
    sql,
)
from .engine import PhiPolicy
from .harness import holevo_stats, run_campaign, run_point
from .oracle import ENUMERATION_CAP, enumeration_size, exact_oracle, qpea_kernel_error
from .schemes import HybridMode, SchemeConfig, SchemeKind, ThetaPolicy, n_measurements

log = logging.getLogger("phaseest")

EXIT_USAGE, EXIT_RUNTIME, EXIT_CAP, EXIT_CHECK = 2, 3, 4, 5
KERNEL_TOL = 1e-6
AGREEMENT_SIGMAS = 4.0


class Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def read_config(path: str) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _pos_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).lower() in ("1", "true", "yes", "on")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phaseest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; explicit flags override it")
    common.add_argument("--scheme", choices=[k.value for k in SchemeKind], default="nonadaptive")
    common.add_argument("--k-min", type=_nonneg_int, default=None)
    common.add_argument("--k-max", type=_nonneg_int, default=5)
    common.add_argument("--mk", type=_pos_int, default=2, help="M_K, repetitions at the finest scale")
    common.add_argument("--mu", type=_nonneg_int, default=None, help="repetition slope (default 3; 0 for fixedm)")
    common.add_argument("--m", type=_pos_int, default=None, help="constant M for fixedm (alias of --mk)")
    common.add_argument("--ns", type=_pos_int, default=None, help="standard-measurement budget N_S")
    common.add_argument("--theta-policy", choices=[t.value for t in ThetaPolicy], default="increment")
    common.add_argument("--hybrid-mode", choices=[h.value for h in HybridMode], default="bayesian")
    common.add_argument("--randomize-reference", type=_bool, nargs="?", const=True, default=False)
    common.add_argument("--trials", type=_pos_int, default=10_000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=_pos_int, default=None, help="default: $PHASEEST_THREADS")

    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo campaign, one row per K")
    sim.add_argument("--out", default=None, help="output file (default stdout)")
    sim.add_argument("--format", choices=["csv", "json"], default="csv")
    sim.add_argument("--phi-policy", choices=[p.value for p in PhiPolicy], default="uniform")
    sim.add_argument("--method", choices=["moments", "grid"], default="moments")
    sim.add_argument("--from-manifest", default=None, help="re-run the configuration recorded in a manifest")

    bnd = sub.add_parser("bounds", help="tabulate analytic bounds and reference limits")
    bnd.add_argument("--which", choices=["hybrid", "vmax", "proven", "limits"], required=True)
    bnd.add_argument("--n", type=_pos_int, nargs="+", default=None, help="resource counts (limits)")
    bnd.add_argument("--k-min", type=_nonneg_int, default=None)
    bnd.add_argument("--k-max", type=_nonneg_int, default=10)
    bnd.add_argument("--k", type=_nonneg_int, default=25, help="K for the proven-schedule overhead")
    bnd.add_argument("--mk", type=float, default=2.0)
    bnd.add_argument("--mu", type=float, default=3.0)
    bnd.add_argument("--ns", type=_pos_int, default=None)
    bnd.add_argument("--out", default=None)

    orc = sub.add_parser("oracle", parents=[common], help="exact enumeration vs Monte Carlo")
    orc.add_argument("--n-xi", type=_pos_int, default=256, help="QPEA offsets for the kernel check")
    orc.set_defaults(trials=100_000, scheme="qpea", k_max=3)
    parser.set_defaults(_subparsers={"simulate": sim, "bounds": bnd, "oracle": orc})
    return parser


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    preset = {}
    if getattr(args, "from_manifest", None):
        preset.update(json.loads(Path(args.from_manifest).read_text())["config"])
    if getattr(args, "config", None):
        preset.update(read_config(args.config))
    if preset:
        # file values become defaults; flags given on the command line still win
        sub = args._subparsers[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in preset.items():
            if key not in known or key in ("config", "from_manifest", "out", "command"):
                continue
            action = known[key]
            if value is not None and action.type is not None and not isinstance(value, (list, bool)):
                value = action.type(str(value))
            defaults[key] = value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return parser, args


def scheme_configs(args) -> list[SchemeConfig]:
    kind = SchemeKind(args.scheme)
    lowest = 1 if kind is SchemeKind.HYBRID else 0
    k_min = lowest if args.k_min is None else args.k_min
    if k_min > args.k_max:
        raise ValueError("--k-min exceeds --k-max")
    mk = args.m if args.m is not None else args.mk
    mu = args.mu if args.mu is not None else (0 if kind is SchemeKind.FIXEDM else 3)
    cfgs = []
    for K in range(k_min, args.k_max + 1):
        n_s = args.ns
        if kind is SchemeKind.STANDARD and n_s is None:
            n_s = 2 ** (K + 1)
        cfgs.append(SchemeConfig(
            kind, K=K, M_K=mk,
            mu=mu if kind in (SchemeKind.NONADAPTIVE, SchemeKind.FIXEDM) else 0,
            N_S=n_s if kind in (SchemeKind.STANDARD, SchemeKind.HYBRID) else None,
            theta_policy=args.theta_policy, hybrid_mode=args.hybrid_mode,
            randomize_reference=args.randomize_reference,
        ))
    return cfgs


def _config_echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("verbose", "_subparsers")}


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_simulate(args) -> int:
    cfgs = scheme_configs(args)
    started = datetime.now(timezone.utc).isoformat()
    summary = run_campaign(cfgs, args.trials, args.seed, args.phi_policy, args.threads, args.method)
    if len(summary.rows) != len(cfgs):
        raise Fail(EXIT_RUNTIME, "some configurations failed; see log")
    manifest_path = f"{args.out}.manifest.json" if args.out else None
    manifest = {
        "command": "simulate",
        "argv": sys.argv[1:],
        "config": _config_echo(args),
        "seed": args.seed,
        "version": __version__,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": [args.out] if args.out else [],
    }
    if args.format == "csv":
        header = [f"phaseest {__version__} simulate seed={args.seed}",
                  f"manifest: {Path(manifest_path).name if manifest_path else 'none'}"]
        text = summary.to_csv(header)
    else:
        text = summary.to_json({"manifest": Path(manifest_path).name if manifest_path else None}) + "\n"
    _write(text, args.out)
    if manifest_path:
        Path(manifest_path).write_text(json.dumps(manifest, indent=2) + "\n")
    return 0


def _table(header, rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(v, ".12g") if isinstance(v, float) else v for v in row])
    return out.getvalue()


def cmd_bounds(args) -> int:
    k_min = 0 if args.k_min is None else args.k_min
    if k_min > args.k_max:
        raise ValueError("--k-min exceeds --k-max")
    if args.which == "limits":
        ns = args.n or [2 ** k for k in range(k_min, args.k_max + 1)]
        text = _table(["N", "heisenberg", "sql"], [[n, heisenberg_limit(n), sql(n)] for n in ns])
    elif args.which == "hybrid":
        rows = []
        for K in range(max(k_min, 1), args.k_max + 1):
            n_q, n_s = 2 ** (K + 1) - 1, args.ns or 2 ** K
            rep = hybrid_variance_bound(n_q, n_s)
            rows.append([K, n_q, n_s, rep.n_resources, *rep.components.values(), rep.v_raw, rep.v_bound,
                         rep.delta_phi_bound])
        text = _table(["K", "N_Q", "N_S", "N", "standard_failure", "qpea_spread", "qpea_resolution",
                       "v_raw", "v_bound", "delta_phi_bound"], rows)
    elif args.which == "vmax":
        if args.mk <= 0 or args.mu < 0:
            raise ValueError("need --mk > 0 and --mu >= 0")
        rows = []
        for K in range(k_min, args.k_max + 1):
            rep = nonadaptive_vmax(K, linear_schedule(args.mk, args.mu, K))
            rows.append([K, rep.n_resources, *rep.components.values(), rep.v_raw, rep.v_bound,
                         rep.delta_phi_bound])
        text = _table(["K", "N", "coarse_failure", "final_resolution", "fine_failures", "v_raw", "v_bound",
                       "delta_phi_bound"], rows)
    else:
        if args.mk <= 0:
            raise ValueError("need --mk > 0")
        rep = nonadaptive_vmax(args.k, proven_schedule(args.mk, args.k))
        text = _table(["M_K", "K", "N", "v_max", "ceiling", "overhead"],
                      [[args.mk, args.k, rep.n_resources, rep.v_raw, proven_vmax_ceiling(args.mk, args.k),
                        proven_schedule_overhead(args.mk, args.k)]])
    _write(text, args.out)
    return 0


def cmd_oracle(args) -> int:
    cfg = scheme_configs(args)[-1]
    is_qpea = cfg.kind is SchemeKind.QPEA
    n_xi = args.n_xi if is_qpea else 1
    size = enumeration_size(cfg, n_xi)
    if size > ENUMERATION_CAP:
        raise Fail(EXIT_CAP, f"{size} outcome sequences exceed the enumeration cap {ENUMERATION_CAP}")

    ok = True
    lines = [f"scheme={cfg.kind.value} K={cfg.K} measurements={n_measurements(cfg)} sequences={size} trials={args.trials}"]
    if is_qpea:
        err = qpea_kernel_error(cfg.K, n_xi)
        passed = err < KERNEL_TOL
        ok &= passed
        lines.append(f"kernel_linf={err:.3e} tol={KERNEL_TOL:g} {'PASS' if passed else 'FAIL'}")
    exact = exact_oracle(cfg)
    phi, est, _ = run_point(cfg, args.trials, args.seed, threads=args.threads)
    mc = holevo_stats(phi - est)
    for name, ex, val, se in [("holevo_var", exact.holevo_var, mc.holevo_var, mc.holevo_var_stderr),
                              ("sin_var", exact.sin_var, mc.sin_var, mc.sin_var_stderr)]:
        z = abs(val - ex) / se if se > 0 else (0.0 if val == ex else math.inf)
        passed = z <= AGREEMENT_SIGMAS
        ok &= passed
        lines.append(f"{name} exact={ex:.10g} mc={val:.10g} stderr={se:.3g} z={z:.2f} {'PASS' if passed else 'FAIL'}")
    print("\n".join(lines))
    return 0 if ok else EXIT_CHECK


COMMANDS = {"simulate": cmd_simulate, "bounds": cmd_bounds, "oracle": cmd_oracle}


def main(argv=None) -> int:
    try:
        parser, args = parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return int(exc.code or 0)
    except (OSError, ValueError, KeyError) as exc:
        print(f"phaseest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except Fail as exc:
        print(f"phaseest: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"phaseest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        log.exception("runtime failure")
        print(f"phaseest: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("%s finished in %.1fs", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
