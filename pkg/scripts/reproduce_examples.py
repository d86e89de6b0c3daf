"""Print the worked uniform-consumer examples next to their closed-form values."""

import argparse

from datamarket import (
    ConsumerDistribution,
    MarketParams,
    epsilon_mechanism,
    firm_optimal_mechanism,
    full_sharing_report,
    no_sharing_equilibrium,
    pareto_improving_mechanism,
)


def row(name, out, want):
    got = {"p_A": out.uniform_a, "pi_A": out.profit_a_gross, "pi_B": out.profit_b_gross, "cw": out.consumer_welfare}
    cells = "  ".join(f"{k}={got[k]:.6f} (want {w:.6f})" for k, w in want.items())
    print(f"{name:<22} {cells}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--v", type=float, default=3.0)
    ap.add_argument("--eps", type=float, default=0.1)
    args = ap.parse_args()
    t, v = args.t, args.v
    d = ConsumerDistribution.uniform()
    params = MarketParams(v=v, t=t)

    _, base = no_sharing_equilibrium(d, params)
    row("no sharing", base, {"p_A": t / 2, "pi_A": t / 8, "pi_B": 9 * t / 16, "cw": v - t})
    row("full sharing", full_sharing_report(d, params).outcome, {"pi_A": t / 4, "pi_B": t / 4, "cw": v - 3 * t / 4})
    row("share [0, 1/2]", firm_optimal_mechanism(d, params).outcome,
        {"p_A": v - t / 2, "pi_A": t / 4, "pi_B": v / 2 - t / 8})
    rep = pareto_improving_mechanism(d, params)
    row(f"pareto {rep.mechanism.shared}", rep.outcome, {"p_A": t / 2})
    print(f"{'':<22} IR transfer range {rep.ir_transfer_range}")
    e = args.eps
    row(f"share [{e:g}, 1/2]", epsilon_mechanism(d, params, e).outcome,
        {"p_A": t * (1 - 2 * e), "pi_A": t * (0.25 - e**2), "pi_B": t * (0.75 - e), "cw": v - t * (1.25 - e - e**2)})


if __name__ == "__main__":
    main()
