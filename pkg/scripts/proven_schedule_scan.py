"""Overhead sqrt(V_max) N / pi of the proven schedule as M_K varies."""
import argparse
import sys

from phaseest.bounds import proven_schedule_overhead


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=25)
    ap.add_argument("--mk-min", type=int, default=10)
    ap.add_argument("--mk-max", type=int, default=40)
    args = ap.parse_args(argv)

    values = {m: proven_schedule_overhead(m, args.k) for m in range(args.mk_min, args.mk_max + 1)}
    best = min(values, key=values.get)
    print("M_K,overhead")
    for m, v in values.items():
        print(f"{m},{v:.4f}{'  <- minimum' if m == best else ''}")


if __name__ == "__main__":
    sys.exit(main())
