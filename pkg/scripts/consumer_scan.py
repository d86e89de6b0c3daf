"""Search all lattice opt-in sets for a firm choice that serves consumers better than the Pareto mechanism."""

import argparse
import json
import time

from datamarket import ConsumerDistribution, MarketParams
from datamarket.optin import consumer_optimal_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--v", type=float, default=3.0)
    ap.add_argument("--dist", default="uniform")
    ap.add_argument("--lattice", type=int, default=64)
    args = ap.parse_args()
    start = time.perf_counter()
    rep = consumer_optimal_scan(ConsumerDistribution.parse(args.dist), MarketParams(v=args.v, t=args.t), lattice=args.lattice)
    out = rep.to_dict()
    out["seconds"] = round(time.perf_counter() - start, 2)
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
