"""Command-line front end; every command prints one JSON report (sweeps may emit CSV).

Exit codes: 0 success, 2 bad arguments, 3 numeric failure, 4 a checked
invariant was falsified (oracle disagreement, failed equilibrium check,
scan counterexample).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .distributions import ConsumerDistribution
from .equilibrium import CANDIDATE_TOL, PRICE_GRID, mechanism_equilibrium, no_sharing_equilibrium
from .errors import ConsistencyError, DomainError, NumericError, PreconditionError, UnsupportedError
from .intervals import IntervalSet
from .market import MarketParams, Mechanism, mu
from .mechanisms import (
    CONSUMER_GRID,
    EPS_CROSSCHECK,
    WEAK_TOL,
    build_report,
    epsilon_limits,
    epsilon_mechanism,
    firm_optimal_mechanism,
    full_sharing_report,
    pareto_improving_mechanism,
)
from .optin import (
    OPT_TOL,
    consumer_optimal_scan,
    empty_threat_policy,
    firm_optimal_policy,
    pareto_opt_in_policy,
    verify_tfne,
)
from .oracle import GridConfig, oracle_outcome

EXIT_OK, EXIT_ARGS, EXIT_NUMERIC, EXIT_FALSIFIED = 0, 2, 3, 4


class ArgumentError(Exception):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t", type=float, default=1.0, help="transport cost")
    p.add_argument("--v", type=float, default=3.0, help="value of the good (needs v > 2t)")
    p.add_argument("--dist", default="uniform", help="uniform | linear:<slope> | csv:<path>")
    p.add_argument("--baseline-price", type=float, default=None, help="no-sharing equilibrium price to compare against")
    p.add_argument("--grid-theta", type=int, default=None, help="oracle consumer cells")
    p.add_argument("--grid-price", type=int, default=None, help="oracle price grid points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="datamarket", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("no-sharing", help="no-sharing equilibrium set and outcome"))

    p = sub.add_parser("analyze", help="equilibrium under an arbitrary mechanism")
    _common(p)
    p.add_argument("--shared", required=True, help="semicolon-separated lo,hi pairs, e.g. '0,0.1;0.25,0.5'")
    p.add_argument("--transfer", type=float, default=0.0)
    p.add_argument("--price", type=float, default=None, help="evaluate at this uniform price instead of the firm-preferred one")

    _common(sub.add_parser("full-sharing", help="share everyone"))
    _common(sub.add_parser("firm-optimal", help="share [0, 1/2] at uniform price v - t/2"))
    _common(sub.add_parser("pareto", help="Pareto-improving mechanism"))

    p = sub.add_parser("epsilon", help="share [eps, 1/2] (uniform consumers)")
    _common(p)
    p.add_argument("--eps", type=float, required=True)

    p = sub.add_parser("optin-verify", help="check a threat-free opt-in equilibrium")
    _common(p)
    p.add_argument("--policy", choices=["pareto", "firm-optimal", "empty-threat"], default="pareto")
    p.add_argument("--theta-bar", type=float, default=None)
    p.add_argument("--n-grid", type=int, default=512)
    p.add_argument("--lattice", type=int, default=64)

    p = sub.add_parser("consumer-scan", help="search opt-in sets for consumer-better firm choices")
    _common(p)
    p.add_argument("--lattice", type=int, default=64)
    p.add_argument("--skip-lower-price-check", action="store_true")

    p = sub.add_parser("oracle-verify", help="cross-check closed forms against the brute-force oracle")
    _common(p)
    p.add_argument("--random", type=int, default=10, help="number of random interval mechanisms")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sweep", help="tabulate the named mechanisms over a parameter range")
    _common(p)
    p.add_argument("--param", choices=["t", "v", "eps"], required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--jobs", type=int, default=1)
    return parser


def _params(t: float, v: float) -> MarketParams:
    try:
        return MarketParams(v=v, t=t)
    except DomainError as exc:
        raise ArgumentError(str(exc)) from exc


def _dist(text: str) -> ConsumerDistribution:
    try:
        return ConsumerDistribution.parse(text)
    except (DomainError, OSError) as exc:
        raise ArgumentError(str(exc)) from exc


def _header(args, argv, grid: GridConfig) -> dict:
    inputs = {k: v for k, v in vars(args).items() if k != "command"}
    return {
        "command": args.command,
        "argv": list(argv),
        "version": __version__,
        "inputs": inputs,
        "grid": {"n_theta": grid.n_theta, "n_price": grid.n_price, "price_grid_closed_form": PRICE_GRID},
        "tolerances": {
            "params_tol": 1e-9,
            "candidate_tol_rel_t": CANDIDATE_TOL,
            "consumer_weak_tol": WEAK_TOL,
            "consumer_grid": CONSUMER_GRID,
            "joint_optimality_tol": OPT_TOL,
            "eps_crosscheck": EPS_CROSSCHECK,
        },
    }


def cmd_no_sharing(args, dist, params, grid):
    eq, out = no_sharing_equilibrium(dist, params)
    return {"candidate_prices": list(eq.candidate_prices), "objective_max": eq.objective_max, **out.summary()}, EXIT_OK


def cmd_analyze(args, dist, params, grid):
    try:
        shared = IntervalSet.parse(args.shared)
    except ValueError as exc:
        raise ArgumentError(str(exc)) from exc
    if args.price is not None and args.price < 0:
        raise ArgumentError("--price must be nonnegative")
    baseline = _baseline_outcome(dist, params, args.baseline_price)
    report = build_report(dist, params, Mechanism(shared, args.transfer), baseline, price=args.price)
    return report.to_dict(), EXIT_OK


def _baseline_outcome(dist, params, price):
    if price is None:
        return no_sharing_equilibrium(dist, params)[1]
    out = mechanism_equilibrium(dist, params, Mechanism.no_sharing(), price=price)
    if not out.is_equilibrium:
        raise ArgumentError(f"--baseline-price {price} is not a no-sharing equilibrium price")
    return out


def cmd_full_sharing(args, dist, params, grid):
    return full_sharing_report(dist, params, args.baseline_price).to_dict(), EXIT_OK


def cmd_firm_optimal(args, dist, params, grid):
    return firm_optimal_mechanism(dist, params, args.baseline_price).to_dict(), EXIT_OK


def cmd_pareto(args, dist, params, grid):
    return pareto_improving_mechanism(dist, params, args.baseline_price).to_dict(), EXIT_OK


def cmd_epsilon(args, dist, params, grid):
    try:
        report = epsilon_mechanism(dist, params, args.eps)
    except (DomainError, UnsupportedError) as exc:
        raise ArgumentError(str(exc)) from exc
    out = report.to_dict()
    out["limits_eps_to_zero"] = epsilon_limits(params)
    return out, EXIT_OK


def cmd_optin_verify(args, dist, params, grid):
    p = args.baseline_price
    if p is None:
        p = no_sharing_equilibrium(dist, params)[0].selected
    theta_bar = args.theta_bar if args.theta_bar is not None else 0.25 + mu(p, params) / 2
    if args.policy == "pareto":
        profile, policy = pareto_opt_in_policy(dist, params, p, theta_bar)
    elif args.policy == "empty-threat":
        profile, policy = empty_threat_policy(dist, params, p, theta_bar)
    else:
        profile, policy = firm_optimal_policy(dist, params, p)
    verdict = verify_tfne(dist, params, profile, policy, n_grid=args.n_grid, lattice=args.lattice)
    result = {
        "policy": policy.label,
        "opt_in": [list(iv) for iv in profile.opted_in],
        "base_shared": [list(iv) for iv in policy.base.shared],
        "base_transfer": policy.base.transfer,
        "base_price": policy.price_rule("base", None),
        **verdict.to_dict(),
    }
    return result, EXIT_OK if verdict.holds else EXIT_FALSIFIED


def cmd_consumer_scan(args, dist, params, grid):
    fractions = () if args.skip_lower_price_check else (0.25, 0.5, 0.75)
    report = consumer_optimal_scan(dist, params, args.baseline_price, lattice=args.lattice, lower_price_fractions=fractions)
    ok = not report.counterexamples and not report.lower_price_violations
    return report.to_dict(), EXIT_OK if ok else EXIT_FALSIFIED


def oracle_checks(dist, params, grid: GridConfig, n_random: int = 10, seed: int = 0) -> list[dict]:
    """Closed-form versus brute-force comparisons for the named and some random mechanisms."""
    rng = np.random.default_rng(seed)
    p0 = no_sharing_equilibrium(dist, params)[0].selected
    m0 = mu(p0, params)
    mechs = {
        "no_sharing": IntervalSet.empty(),
        "full_sharing": IntervalSet.full(),
        "firm_optimal": IntervalSet.of((0.0, 0.5)),
        "pareto": IntervalSet.of((m0, 0.25 + m0 / 2)),
    }
    for i in range(n_random):
        a, b = np.sort(rng.uniform(0.0, 1.0, 2))
        mechs[f"random_{i}"] = IntervalSet.of((float(a), float(b)))
    price_tol = 2 * grid.price_step(params)
    money_tol = 5 / grid.n_theta * max(params.v, params.t)
    rows = []
    for name, shared in mechs.items():
        mech = Mechanism(shared)
        closed = mechanism_equilibrium(dist, params, mech)
        orc = oracle_outcome(dist, params, mech, grid=grid)
        pairs = {
            "p_A": (closed.uniform_a, orc.uniform_a, price_tol),
            "pi_A": (closed.profit_a_gross, orc.profit_a_gross, money_tol),
            "pi_B": (closed.profit_b_gross, orc.profit_b_gross, money_tol),
            "cw": (closed.consumer_welfare, orc.consumer_welfare, money_tol),
        }
        for field_name, (c, o, tol) in pairs.items():
            rows.append({
                "mechanism": name, "shared": [list(iv) for iv in shared], "field": field_name,
                "closed_form": c, "oracle": o, "tol": tol, "ok": bool(abs(c - o) <= tol),
            })
    return rows


def cmd_oracle_verify(args, dist, params, grid):
    rows = oracle_checks(dist, params, grid, args.random, args.seed)
    ok = all(r["ok"] for r in rows)
    return {"all_ok": ok, "n_checks": len(rows), "checks": rows}, EXIT_OK if ok else EXIT_FALSIFIED


def sweep_row(param: str, value: float, t: float, v: float, eps: float, dist_text: str) -> dict:
    dist = ConsumerDistribution.parse(dist_text)
    if param == "t":
        t = value
    elif param == "v":
        v = value
    else:
        eps = value
    params = MarketParams(v=v, t=t)
    eq, base = no_sharing_equilibrium(dist, params)
    pareto = pareto_improving_mechanism(dist, params, eq.selected)
    firm = firm_optimal_mechanism(dist, params, eq.selected)
    full = full_sharing_report(dist, params, eq.selected)
    row = {
        "param": param, "value": value, "t": t, "v": v,
        "p_A": eq.selected, "pi_A": base.profit_a_gross, "pi_B": base.profit_b_gross, "cw": base.consumer_welfare,
        "full_total_profit": full.outcome.total_profit, "full_cw": full.outcome.consumer_welfare,
        "firm_opt_total_profit": firm.outcome.total_profit, "firm_opt_cw": firm.outcome.consumer_welfare,
        "firm_opt_condition": firm.extra["condition_holds"],
        "pareto_lo": pareto.mechanism.shared.intervals[0][0], "pareto_hi": pareto.mechanism.shared.intervals[0][1],
        "pareto_total_profit": pareto.outcome.total_profit, "pareto_cw": pareto.outcome.consumer_welfare,
        "pareto_ir_lo": pareto.ir_transfer_range[0], "pareto_ir_hi": pareto.ir_transfer_range[1],
    }
    if dist.is_uniform and 0 < eps <= 0.25:
        e = epsilon_mechanism(dist, params, eps).extra["numeric"]
        row.update({"eps": eps, "eps_p_A": e["p_A"], "eps_pi_A": e["pi_A"], "eps_pi_B": e["pi_B"], "eps_cw": e["cw"]})
    return row


def cmd_sweep(args, dist, params, grid):
    if args.steps < 1:
        raise ArgumentError("--steps must be at least 1")
    values = np.linspace(args.start, args.stop, args.steps).tolist() if args.steps > 1 else [args.start]
    for val in values:
        t = val if args.param == "t" else args.t
        v = val if args.param == "v" else args.v
        _params(t, v)
        if args.param == "eps" and not 0 < val <= 0.25:
            raise ArgumentError(f"eps={val} outside (0, 1/4]")
    jobs = [(args.param, val, args.t, args.v, args.eps, args.dist) for val in values]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(sweep_row, *zip(*jobs)))
    else:
        rows = [sweep_row(*job) for job in jobs]
    return {"rows": rows}, EXIT_OK


COMMANDS = {
    "no-sharing": cmd_no_sharing,
    "analyze": cmd_analyze,
    "full-sharing": cmd_full_sharing,
    "firm-optimal": cmd_firm_optimal,
    "pareto": cmd_pareto,
    "epsilon": cmd_epsilon,
    "optin-verify": cmd_optin_verify,
    "consumer-scan": cmd_consumer_scan,
    "oracle-verify": cmd_oracle_verify,
    "sweep": cmd_sweep,
}


def _to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    keys = list(rows[0]) if rows else []
    for r in rows:
        keys += [k for k in r if k not in keys]
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def run(argv=None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_ARGS
    try:
        dist = _dist(args.dist)
        params = _params(args.t, args.v)
        grid = GridConfig.from_env(n_theta=args.grid_theta, n_price=args.grid_price)
        result, code = COMMANDS[args.command](args, dist, params, grid)
    except (ArgumentError, PreconditionError, ValueError) as exc:
        print(f"datamarket: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (NumericError, ConsistencyError, ArithmeticError) as exc:
        print(f"datamarket: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "sweep" and args.format == "csv":
        out.write(_to_csv(result["rows"]))
    else:
        report = _header(args, argv, grid)
        report["result"] = result
        out.write(json.dumps(report, indent=2) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
