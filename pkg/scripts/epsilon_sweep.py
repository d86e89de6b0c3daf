"""Welfare and profits of sharing [eps, 1/2] as eps shrinks, written as CSV."""

import argparse
import csv
import sys

import numpy as np

from datamarket import ConsumerDistribution, MarketParams, epsilon_mechanism
from datamarket.mechanisms import epsilon_limits


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--v", type=float, default=3.0)
    ap.add_argument("--points", type=int, default=25)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    params = MarketParams(v=args.v, t=args.t)
    d = ConsumerDistribution.uniform()

    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh)
    w.writerow(["eps", "p_A", "pi_A", "pi_B", "cw", "pareto_improving"])
    for eps in np.geomspace(1e-4, 0.25, args.points):
        rep = epsilon_mechanism(d, params, float(eps))
        n = rep.extra["numeric"]
        w.writerow([f"{eps:.6g}", n["p_A"], n["pi_A"], n["pi_B"], n["cw"], rep.pareto_flags.pareto_improving])
    lim = epsilon_limits(params)
    print(f"# eps -> 0 limits: pi_A={lim['pi_A']}, pi_B={lim['pi_B']}, cw={lim['cw']}", file=sys.stderr)
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
