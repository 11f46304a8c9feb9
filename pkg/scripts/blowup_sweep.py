#!/usr/bin/env python3
"""Sweep the two-vertex blow-up families over a parameter grid and print
(param, min u, max u) rows, showing the solutions diving as the parameter
shrinks."""

import argparse

import numpy as np

from expgraph.apriori import blowup_family, classify_trichotomy


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kind", default="ex34", choices=("ex34", "ex35", "ex36"))
    ap.add_argument("--decades", type=int, default=4)
    args = ap.parse_args()

    params = [10.0 ** (-d) for d in range(1, args.decades + 1)]
    seq = blowup_family(args.kind, params)
    print(f"{'param':>10} {'min_u':>10} {'max_u':>10} {'certified':>9}")
    for p, sols in zip(seq.params, seq.solutions):
        sol = sols[0]
        print(f"{p:>10.1e} {sol.u.min():>10.4f} {sol.u.max():>10.4f} "
              f"{str(sol.certified):>9}")
    print("trichotomy verdict:", classify_trichotomy(seq))


if __name__ == "__main__":
    main()
