"""Delta-phi against N for a constant number of repetitions per scale.

Writes one CSV with a row per (M, K); plot holevo_std against N on log-log
axes together with the sql and heisenberg columns.
"""
import argparse
import logging
import sys

from phaseest.harness import run_campaign
from phaseest.schemes import SchemeConfig, SchemeKind


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, nargs="+", default=[1, 2, 3, 6])
    ap.add_argument("--k-max", type=int, default=10)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="fixed_m_floor.csv")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cfgs = [SchemeConfig(SchemeKind.FIXEDM, K=K, M_K=m) for m in args.m for K in range(args.k_max + 1)]
    summary = run_campaign(cfgs, args.trials, args.seed)
    with open(args.out, "w") as fh:
        fh.write(summary.to_csv([f"fixed-M floor, M={args.m}, seed={args.seed}"]))
    for row in summary.rows:
        print(f"M={row.cfg.M_K} K={row.cfg.K:2d} N={row.N:5d} dphi={row.holevo_std:.4f} sql={1 / row.N ** 0.5:.4f}")


if __name__ == "__main__":
    sys.exit(main())
