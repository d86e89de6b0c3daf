"""Named sharing mechanisms, IR transfer ranges and consumer-welfare certificates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import ConsumerDistribution
from .errors import ConsistencyError, DomainError, PreconditionError, UnsupportedError
from .intervals import IntervalSet
from .market import MarketParams, Mechanism, mu
from .equilibrium import (
    MarketOutcome,
    is_best_response,
    mechanism_equilibrium,
    no_sharing_equilibrium,
)

CONSUMER_GRID = 512
WEAK_TOL = 1e-9
EPS_CROSSCHECK = 1e-8


@dataclass(frozen=True)
class ParetoFlags:
    firms_ir: bool
    all_consumers_weak: bool
    some_consumer_strict: bool

    @property
    def pareto_improving(self) -> bool:
        return self.firms_ir and self.all_consumers_weak


@dataclass(frozen=True, eq=False)
class MechanismReport:
    mechanism: Mechanism
    outcome: MarketOutcome
    baseline: MarketOutcome
    ir_transfer_range: tuple[float, float] | None
    pareto_flags: ParetoFlags
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "shared": [list(iv) for iv in self.mechanism.shared],
            "transfer": self.mechanism.transfer,
            "outcome": self.outcome.summary(),
            "baseline": self.baseline.summary(),
            "ir_transfer_range": None if self.ir_transfer_range is None else list(self.ir_transfer_range),
            "pareto_flags": {
                "firms_ir": self.pareto_flags.firms_ir,
                "all_consumers_weak": self.pareto_flags.all_consumers_weak,
                "some_consumer_strict": self.pareto_flags.some_consumer_strict,
            },
            **self.extra,
        }


def ir_transfer_range(baseline: MarketOutcome, outcome: MarketOutcome, tol: float = 1e-12):
    """Transfers r (A pays B) leaving both firms at least as well off as in ``baseline``.

    Returns ``(lo, hi)`` or None when gross joint profits fall.
    """
    lo = baseline.profit_b_gross - outcome.profit_b_gross
    hi = outcome.profit_a_gross - baseline.profit_a_gross
    if lo > hi + tol:
        return None
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    return (lo, hi)


def probe_points(*outcomes: MarketOutcome, n: int = CONSUMER_GRID, nudge: float = 1e-9) -> np.ndarray:
    """Dense grid plus every breakpoint of the outcomes, with one-sided neighbours."""
    pts = [np.linspace(0.0, 1.0, n)]
    for out in outcomes:
        bp = np.array(out.breakpoints() + [mu(out.uniform_a, out.params)])
        pts += [bp, bp - nudge, bp + nudge]
    pts = np.concatenate(pts)
    return np.unique(pts[(pts >= 0) & (pts <= 1)])


def consumer_comparison(outcome: MarketOutcome, baseline: MarketOutcome, n: int = CONSUMER_GRID, tol: float = WEAK_TOL):
    """(all weakly better, some strictly better, worst utility change) on probe points."""
    pts = probe_points(outcome, baseline, n=n)
    diff = outcome.utility_of(pts) - baseline.utility_of(pts)
    return bool(np.all(diff >= -tol)), bool(np.any(diff > tol)), float(diff.min())


def require_equilibrium_price(dist, params, price: float) -> None:
    if price < 0 or not is_best_response(dist, params, IntervalSet.empty(), price):
        raise PreconditionError(f"{price} is not an equilibrium uniform price without sharing")


def _baseline(dist, params, baseline_price):
    if baseline_price is None:
        return no_sharing_equilibrium(dist, params)[1]
    require_equilibrium_price(dist, params, baseline_price)
    return mechanism_equilibrium(dist, params, Mechanism.no_sharing(), price=baseline_price)


def build_report(
    dist: ConsumerDistribution,
    params: MarketParams,
    mech: Mechanism,
    baseline: MarketOutcome,
    price: float | None = None,
    settle_transfer: bool = False,
    extra: dict | None = None,
) -> MechanismReport:
    """Evaluate ``mech`` against ``baseline``.

    With ``settle_transfer`` the transfer is replaced by the midpoint of the
    IR range when that range is nonempty.
    """
    outcome = mechanism_equilibrium(dist, params, mech, price=price)
    rng = ir_transfer_range(baseline, outcome)
    if settle_transfer and rng is not None:
        mech = mech.with_transfer(0.5 * (rng[0] + rng[1]))
        outcome = mechanism_equilibrium(dist, params, mech, price=outcome.uniform_a if price is not None else None)
    firms_ir = (
        outcome.profit_a_net >= baseline.profit_a_net - params.tol
        and outcome.profit_b_net >= baseline.profit_b_net - params.tol
    )
    weak, strict, worst = consumer_comparison(outcome, baseline)
    extra = dict(extra or {})
    extra["worst_consumer_change"] = worst
    return MechanismReport(mech, outcome, baseline, rng, ParetoFlags(firms_ir, weak, strict), extra)


def full_sharing_report(dist, params, baseline_price: float | None = None) -> MechanismReport:
    baseline = _baseline(dist, params, baseline_price)
    return build_report(dist, params, Mechanism.full(), baseline)


def firm_optimal_condition(dist, params) -> bool:
    return params.v > 5 * params.t / (2 * (1 - dist.cdf(0.5)))


def firm_optimal_mechanism(dist, params, baseline_price: float | None = None) -> MechanismReport:
    """Share [0, 1/2] for free and let A post ``v - t/2``.

    The optimality certificate holds when ``v > 5t / (2(1 - F(1/2)))``; for
    uniform consumers it holds for every covered market. Otherwise the
    construction is reported without a claim of optimality.
    """
    baseline = _baseline(dist, params, baseline_price)
    holds = firm_optimal_condition(dist, params)
    if holds:
        certificate = "high_value_bound"
    elif dist.is_uniform:
        certificate = "uniform_consumers"
    else:
        certificate = "unverified"
    mass_right = 1 - dist.cdf(0.5)
    extra = {
        "condition_holds": holds,
        "certificate": certificate,
        "profit_lower_bound": (params.v - params.t / 2) * mass_right,  # on B's profit from (1/2, 1]
        "rival_profit_upper_bound": 2 * params.t,
    }
    return build_report(dist, params, Mechanism.interval(0.0, 0.5), baseline, extra=extra)


def pareto_interval(params: MarketParams, baseline_price: float) -> IntervalSet:
    m = mu(baseline_price, params)
    return IntervalSet.of((m, 0.25 + m / 2))


def pareto_improving_mechanism(dist, params, baseline_price: float | None = None) -> MechanismReport:
    """Share the consumers between ``mu(p)`` and the midpoint of ``[mu(p), 1/2]``.

    Only consumers who switch to A and raise joint profit are shared, and
    A's uniform price stays at the baseline price.
    """
    if baseline_price is None:
        baseline_price = no_sharing_equilibrium(dist, params)[0].selected
    baseline = _baseline(dist, params, baseline_price)
    mech = Mechanism(pareto_interval(params, baseline_price))
    report = build_report(dist, params, mech, baseline, price=baseline_price, settle_transfer=True)
    if not report.outcome.is_equilibrium:
        raise ConsistencyError(f"baseline price {baseline_price} is not a best response under {mech.shared}")
    return report


def epsilon_closed_form(params: MarketParams, eps: float) -> dict:
    t, v = params.t, params.v
    return {
        "p_A": t * (1 - 2 * eps),
        "pi_A": t * (0.25 - eps**2),
        "pi_B": t * (0.75 - eps),
        "cw": v - t * (1.25 - eps - eps**2),
    }


def epsilon_limits(params: MarketParams) -> dict:
    """Values approached as eps -> 0."""
    return {"pi_A": params.t / 4, "pi_B": 3 * params.t / 4, "cw": params.v - 5 * params.t / 4}


def epsilon_mechanism(dist, params, eps: float) -> MechanismReport:
    """Share [eps, 1/2] for free; uniform consumers only, ``0 < eps <= 1/4``."""
    if not dist.is_uniform:
        raise UnsupportedError("the [eps, 1/2] closed forms assume uniform consumers")
    if not 0 < eps <= 0.25:
        raise DomainError(f"eps must lie in (0, 1/4], got {eps}")
    closed = epsilon_closed_form(params, eps)
    baseline = no_sharing_equilibrium(dist, params)[1]
    report = build_report(dist, params, Mechanism.interval(eps, 0.5), baseline, extra={"eps": eps, "closed_form": closed})
    out = report.outcome
    numeric = {"p_A": out.uniform_a, "pi_A": out.profit_a_gross, "pi_B": out.profit_b_gross, "cw": out.consumer_welfare}
    for key, val in closed.items():
        if abs(numeric[key] - val) > EPS_CROSSCHECK * max(1.0, abs(val)):
            raise ConsistencyError(f"eps={eps}: {key} numeric {numeric[key]} vs closed form {val}")
    report.extra["numeric"] = numeric
    return report


@dataclass(frozen=True)
class IntervalScan:
    """Firm-preferred outcomes of every single-interval mechanism on a lattice."""

    lo: np.ndarray
    hi: np.ndarray
    uniform_a: np.ndarray
    profit_a: np.ndarray
    profit_b: np.ndarray
    cw: np.ndarray
    consumer_weak: np.ndarray
    consumer_strict: np.ndarray

    @property
    def total_profit(self) -> np.ndarray:
        return self.profit_a + self.profit_b

    def __len__(self):
        return len(self.lo)

    def index_of(self, lo: float, hi: float, tol: float = 1e-12) -> int:
        hits = np.flatnonzero((np.abs(self.lo - lo) <= tol) & (np.abs(self.hi - hi) <= tol))
        if not len(hits):
            raise KeyError((lo, hi))
        return int(hits[0])


def lattice_pairs(n: int, include_empty: bool = True, extra_points=()) -> list[tuple[float, float]]:
    pts = np.unique(np.concatenate([np.linspace(0.0, 1.0, n + 1), np.asarray(list(extra_points), float)]))
    pairs = [(float(a), float(b)) for i, a in enumerate(pts) for b in pts[i + 1:]]
    return ([(0.0, 0.0)] if include_empty else []) + pairs


def scan_interval_mechanisms(
    dist,
    params,
    lattice: int = 64,
    baseline: MarketOutcome | None = None,
    pairs=None,
    consumer_grid: int = CONSUMER_GRID,
) -> IntervalScan:
    """Evaluate ``([a, b], 0)`` for all lattice endpoints; ``(0, 0)`` encodes no sharing.

    With a baseline, each mechanism is also checked for leaving every probed
    consumer weakly (and some strictly) better off.
    """
    if pairs is None:
        pairs = lattice_pairs(lattice)
    rows = []
    for a, b in pairs:
        mech = Mechanism(IntervalSet.of((a, b)))
        out = mechanism_equilibrium(dist, params, mech)
        weak = strict = False
        if baseline is not None:
            weak, strict, _ = consumer_comparison(out, baseline, n=consumer_grid)
        rows.append((a, b, out.uniform_a, out.profit_a_gross, out.profit_b_gross, out.consumer_welfare, weak, strict))
    cols = list(zip(*rows))
    return IntervalScan(*(np.array(c) for c in cols))
