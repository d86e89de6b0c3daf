"""How the brute-force oracle's error shrinks with grid size, for a few densities."""

import argparse

from datamarket import ConsumerDistribution, MarketParams, Mechanism, mechanism_equilibrium
from datamarket.oracle import GridConfig, oracle_outcome

MECHS = {
    "none": Mechanism.no_sharing(),
    "[0.1,0.3]": Mechanism.interval(0.1, 0.3),
    "[0,0.5]": Mechanism.interval(0.0, 0.5),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--v", type=float, default=3.0)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--dists", nargs="+", default=["uniform", "linear:1", "linear:-1"])
    args = ap.parse_args()
    params = MarketParams(v=args.v, t=args.t)
    print(f"{'dist':<10} {'mechanism':<10} {'n_theta':>7} {'|dp_A|':>10} {'|dpi|+|dcw|':>12}")
    for spec in args.dists:
        d = ConsumerDistribution.parse(spec)
        for name, mech in MECHS.items():
            closed = mechanism_equilibrium(d, params, mech)
            for n in (128, 512, 2048):
                o = oracle_outcome(d, params, mech, grid=GridConfig(n_theta=n, n_price=2 * n))
                err = (abs(o.profit_a_gross - closed.profit_a_gross) + abs(o.profit_b_gross - closed.profit_b_gross)
                       + abs(o.consumer_welfare - closed.consumer_welfare))
                print(f"{spec:<10} {name:<10} {n:>7} {abs(o.uniform_a - closed.uniform_a):>10.2e} {err:>12.2e}")


if __name__ == "__main__":
    main()
