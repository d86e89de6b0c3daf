"""Consumer opt-in: feasibility, threat-free equilibrium checks and consumer-optimality scans.

Consumers first choose whether to opt in; firms may then only share data of
consumers who opted in. A policy says which mechanism (and uniform price)
firms pick after the equilibrium opt-in set and after every single-consumer
deviation from it. Single consumers carry no mass, so deviations change only
the deviator's own price, never firm profits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .distributions import ConsumerDistribution
from .errors import DomainError
from .equilibrium import is_best_response, mechanism_equilibrium, no_sharing_equilibrium
from .intervals import IntervalSet
from .market import MarketParams, Mechanism, PriceSchedule, mu
from .mechanisms import (
    consumer_comparison,
    lattice_pairs,
    pareto_improving_mechanism,
    pareto_interval,
    require_equilibrium_price,
    scan_interval_mechanisms,
)

OPT_TOL = 1e-6


@dataclass(frozen=True)
class OptInProfile:
    opted_in: IntervalSet
    added_points: frozenset = frozenset()
    removed_points: frozenset = frozenset()

    def contains(self, theta):
        theta = np.asarray(theta, dtype=float)
        inside = np.asarray(self.opted_in.contains(theta))
        for x in self.added_points:
            inside = inside | (theta == x)
        for x in self.removed_points:
            inside = inside & (theta != x)
        return inside if inside.ndim else bool(inside)

    def with_point(self, theta: float) -> "OptInProfile":
        th = float(theta)
        return OptInProfile(self.opted_in, self.added_points | {th}, self.removed_points - {th})

    def without_point(self, theta: float) -> "OptInProfile":
        th = float(theta)
        return OptInProfile(self.opted_in, self.added_points - {th}, self.removed_points | {th})


@dataclass(frozen=True)
class MechanismPolicy:
    """Firms' mechanism choice after the equilibrium opt-in set and after each deviation.

    ``price_rule(kind, theta)`` gives A's uniform price for ``kind`` in
    ``{"base", "drop", "join"}``; ``theta`` is None for the base case.
    """

    base: Mechanism
    drop_rule: Callable[[float], Mechanism]
    join_rule: Callable[[float], Mechanism]
    price_rule: Callable[[str, float | None], float]
    baseline_price: float
    label: str = ""


@dataclass(frozen=True)
class Violation:
    bullet: int
    theta: float | None
    detail: str


@dataclass(frozen=True)
class TfneVerdict:
    violations: tuple[Violation, ...]
    checked_points: int
    notes: tuple[str, ...] = ()

    @property
    def holds(self) -> bool:
        return not self.violations

    def failed_bullets(self) -> set[int]:
        return {v.bullet for v in self.violations}

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "checked_points": self.checked_points,
            "failed_bullets": sorted(self.failed_bullets()),
            "violations": [{"bullet": v.bullet, "theta": v.theta, "detail": v.detail} for v in self.violations[:50]],
            "n_violations": len(self.violations),
            "notes": list(self.notes),
        }


def feasible(mech: Mechanism, profile: OptInProfile, tol: float = 1e-9, strict_points: bool = False) -> bool:
    """Whether only opted-in consumers are shared, up to a null set.

    With ``strict_points`` the single consumers toggled on either side must
    also agree: an added shared point must be opted in, and a consumer who
    dropped out must not be shared.
    """
    if not mech.shared.issubset(profile.opted_in, tol):
        return False
    if not strict_points:
        return True
    for x in mech.added_points:
        if not profile.contains(x):
            return False
    for x in profile.removed_points:
        if mech.is_shared(x):
            return False
    return True


def pareto_opt_in_policy(dist, params, baseline_price: float, overline_theta: float) -> tuple[OptInProfile, MechanismPolicy]:
    """Opt-in set ``[mu(p), overline_theta]`` sustaining the Pareto-improving mechanism.

    A consumer who drops out only loses A's personalized price; an outsider
    below ``mu(p)`` who joins gets shared and pays more; an outsider above
    ``overline_theta`` is ignored. Everything else falls back to no sharing.
    """
    require_equilibrium_price(dist, params, baseline_price)
    m = mu(baseline_price, params)
    if not (0.25 + m / 2 - 1e-12 <= overline_theta <= 1.0):
        raise DomainError(f"overline_theta must lie in [{0.25 + m / 2}, 1], got {overline_theta}")
    profile = OptInProfile(IntervalSet.of((m, overline_theta)))
    base = pareto_improving_mechanism(dist, params, baseline_price).mechanism
    fallback = Mechanism.no_sharing()

    def drop_rule(theta):
        return base.without_point(theta)

    def join_rule(theta):
        if theta < m:
            return base.with_point(theta)
        if theta > overline_theta:
            return base
        return fallback

    def price_rule(kind, theta=None):
        return baseline_price

    return profile, MechanismPolicy(base, drop_rule, join_rule, price_rule, baseline_price, label="pareto_opt_in")


def firm_optimal_policy(dist, params, baseline_price: float | None = None) -> tuple[OptInProfile, MechanismPolicy]:
    """Everyone in [0, 1/2] opts in and firms share all of it at uniform price ``v - t/2``."""
    if baseline_price is None:
        baseline_price = no_sharing_equilibrium(dist, params)[0].selected
    high = params.v - params.t / 2
    base = Mechanism.interval(0.0, 0.5)
    profile = OptInProfile(IntervalSet.of((0.0, 0.5)))
    return profile, MechanismPolicy(
        base,
        drop_rule=lambda theta: base.without_point(theta),
        join_rule=lambda theta: base,
        price_rule=lambda kind, theta=None: high,
        baseline_price=baseline_price,
        label="firm_optimal_opt_in",
    )


def empty_threat_policy(dist, params, baseline_price: float, overline_theta: float, punish_price: float | None = None):
    """Like :func:`pareto_opt_in_policy`, but a drop-out triggers no sharing at a lower uniform price."""
    profile, policy = pareto_opt_in_policy(dist, params, baseline_price, overline_theta)
    low = baseline_price / 2 if punish_price is None else punish_price

    def price_rule(kind, theta=None):
        return low if kind == "drop" else baseline_price

    return profile, MechanismPolicy(
        policy.base,
        drop_rule=lambda theta: Mechanism.no_sharing(),
        join_rule=policy.join_rule,
        price_rule=price_rule,
        baseline_price=baseline_price,
        label="empty_threat",
    )


def _probe_thetas(profile: OptInProfile, policy: MechanismPolicy, params, n: int) -> np.ndarray:
    pts = set(np.linspace(0.0, 1.0, n).tolist())
    bp = profile.opted_in.endpoints + policy.base.shared.endpoints + [0.5, mu(policy.baseline_price, params)]
    for x in bp:
        pts.update({x, x - 1e-7, x + 1e-7})
    return np.array(sorted(p for p in pts if 0.0 <= p <= 1.0))


def verify_tfne(
    dist: ConsumerDistribution,
    params: MarketParams,
    profile: OptInProfile,
    policy: MechanismPolicy,
    n_grid: int = 512,
    lattice: int = 64,
    opt_tol: float = OPT_TOL,
) -> TfneVerdict:
    """Check the four threat-free equilibrium conditions on a consumer grid.

    1. every produced mechanism is feasible and its price a best response;
    2. no opted-in consumer gains by dropping out;
    3. no outsider gains by joining;
    4. after the equilibrium set and every single-consumer deviation, the
       chosen mechanism is IR and maximizes gross joint profit among the
       single-interval mechanisms feasible for that set.
    """
    tol = params.tol
    thetas = _probe_thetas(profile, policy, params, n_grid)
    baseline = mechanism_equilibrium(dist, params, Mechanism.no_sharing(), price=policy.baseline_price)
    violations: list[Violation] = []
    br_cache: dict = {}
    outcome_cache: dict = {}
    family_cache: dict = {}

    def best_response(mech, price):
        key = (mech.shared.intervals, price)
        if key not in br_cache:
            br_cache[key] = is_best_response(dist, params, mech.shared, price)
        return br_cache[key]

    def profits(mech, price):
        # point toggles carry no mass, so profits depend on the intervals only
        key = (mech.shared.intervals, price)
        if key not in outcome_cache:
            out = mechanism_equilibrium(dist, params, Mechanism(mech.shared), price=price)
            outcome_cache[key] = (out.profit_a_gross, out.profit_b_gross)
        return outcome_cache[key]

    def family_best(c: OptInProfile):
        key = c.opted_in.intervals
        if key not in family_cache:
            pairs = [
                (a, b) for a, b in lattice_pairs(lattice, extra_points=c.opted_in.endpoints)
                if b <= a or IntervalSet.of((a, b)).issubset(c.opted_in, 1e-12)
            ]
            scan = scan_interval_mechanisms(dist, params, pairs=pairs)
            i = int(np.argmax(scan.total_profit))
            family_cache[key] = (float(scan.total_profit[i]), (float(scan.lo[i]), float(scan.hi[i])))
        return family_cache[key]

    def utility(mech, price, theta):
        from_a, paid = PriceSchedule(price, mech, params).serve(theta)
        return float(params.v - paid[0] - params.t * (theta if from_a[0] else 1 - theta))

    def check_choice(c: OptInProfile, mech: Mechanism, price: float, theta):
        if not feasible(mech, c, strict_points=True):
            violations.append(Violation(1, theta, f"mechanism {mech.shared} infeasible for opt-in set"))
        if not best_response(mech, price):
            violations.append(Violation(1, theta, f"uniform price {price} is not a best response under {mech.shared}"))
        pa, pb = profits(mech, price)
        if pa - mech.transfer < baseline.profit_a_gross - tol or pb + mech.transfer < baseline.profit_b_gross - tol:
            violations.append(Violation(4, theta, f"mechanism {mech.shared} with r={mech.transfer:g} is not IR"))
        best, arg = family_best(c)
        if pa + pb < best - opt_tol:
            violations.append(
                Violation(4, theta, f"joint profit {pa + pb:.9g} below {best:.9g} attained by sharing {list(arg)}")
            )

    base_price = policy.price_rule("base", None)
    check_choice(profile, policy.base, base_price, None)
    for theta in thetas:
        theta = float(theta)
        u_base = utility(policy.base, base_price, theta)
        if profile.contains(theta):
            c = profile.without_point(theta)
            mech, price = policy.drop_rule(theta), policy.price_rule("drop", theta)
            bullet = 2
        else:
            c = profile.with_point(theta)
            mech, price = policy.join_rule(theta), policy.price_rule("join", theta)
            bullet = 3
        check_choice(c, mech, price, theta)
        u_dev = utility(mech, price, theta)
        if u_dev > u_base + tol:
            action = "dropping out" if bullet == 2 else "opting in"
            violations.append(Violation(bullet, theta, f"{action} raises utility from {u_base:.9g} to {u_dev:.9g}"))

    notes = (
        "joint optimality compares gross profits (transfers cancel); IR uses each mechanism's own transfer",
        f"optimality is certified against single intervals on a 1/{lattice} lattice plus the opt-in set's endpoints",
    )
    return TfneVerdict(tuple(violations), len(thetas), notes)


@dataclass
class ConsumerScanReport:
    baseline_price: float
    reference_interval: tuple[float, float]
    reference_cw: float
    n_opt_in_sets: int
    n_mechanisms: int
    n_consumer_improving: int
    reference_in_scan: bool
    reference_chosen_for_own_set: bool
    counterexamples: list = field(default_factory=list)
    lower_price_checks: int = 0
    lower_price_violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "baseline_price": self.baseline_price,
            "reference_interval": list(self.reference_interval),
            "reference_cw": self.reference_cw,
            "n_opt_in_sets": self.n_opt_in_sets,
            "n_mechanisms": self.n_mechanisms,
            "n_consumer_improving": self.n_consumer_improving,
            "reference_in_scan": self.reference_in_scan,
            "reference_chosen_for_own_set": self.reference_chosen_for_own_set,
            "n_counterexamples": len(self.counterexamples),
            "counterexamples": self.counterexamples[:20],
            "lower_price_checks": self.lower_price_checks,
            "n_lower_price_violations": len(self.lower_price_violations),
        }


def consumer_optimal_scan(
    dist,
    params,
    baseline_price: float | None = None,
    lattice: int = 64,
    lower_price_fractions=(0.25, 0.5, 0.75),
    tol: float = 1e-9,
) -> ConsumerScanReport:
    """Look for an opt-in set whose firm-chosen mechanism beats the Pareto-improving one for consumers.

    For every lattice interval C, firms pick the single-interval mechanism
    feasible for C with the highest gross joint profit. A counterexample is
    a chosen mechanism that leaves every consumer weakly better off than no
    sharing yet gives consumers strictly more total utility than the
    Pareto-improving mechanism. Separately, each lattice mechanism priced
    below the baseline price that is consumer-improving is checked to earn
    the firms less than the same shared set at the baseline price.
    """
    eq, _ = no_sharing_equilibrium(dist, params)
    if baseline_price is None:
        baseline_price = eq.selected
    require_equilibrium_price(dist, params, baseline_price)
    baseline = mechanism_equilibrium(dist, params, Mechanism.no_sharing(), price=baseline_price)

    ref = pareto_interval(params, baseline_price).intervals[0]
    ref_out = mechanism_equilibrium(dist, params, Mechanism(IntervalSet.of(ref)), price=baseline_price)

    scan = scan_interval_mechanisms(dist, params, lattice=lattice, baseline=baseline)
    total = scan.total_profit
    is_empty = scan.hi <= scan.lo
    sets = [(a, b) for a, b in zip(scan.lo, scan.hi) if b > a]
    c_lo = np.array([a for a, _ in sets])[:, None]
    c_hi = np.array([b for _, b in sets])[:, None]
    feas = is_empty[None, :] | ((scan.lo[None, :] >= c_lo - 1e-12) & (scan.hi[None, :] <= c_hi + 1e-12))
    best = np.where(feas, total[None, :], -np.inf).max(axis=1)
    chosen = feas & (total[None, :] >= best[:, None] - tol)
    bad = chosen & scan.consumer_weak[None, :] & (scan.cw[None, :] > ref_out.consumer_welfare + tol)
    counterexamples = [
        {"opt_in": [float(c_lo[i, 0]), float(c_hi[i, 0])], "shared": [float(scan.lo[j]), float(scan.hi[j])],
         "cw": float(scan.cw[j]), "total_profit": float(total[j])}
        for i, j in zip(*np.nonzero(bad))
    ]

    try:
        j_ref = scan.index_of(*ref)
        in_scan = True
        i_ref = next(i for i, s in enumerate(sets) if abs(s[0] - ref[0]) < 1e-12 and abs(s[1] - ref[1]) < 1e-12)
        ref_chosen = bool(chosen[i_ref, j_ref]) and int(chosen[i_ref].sum()) == 1
    except (KeyError, StopIteration):
        in_scan = ref_chosen = False

    checks, violations = 0, []
    for frac in lower_price_fractions:
        q = frac * baseline_price
        for a, b, tot_pa in zip(scan.lo, scan.hi, total):
            mech = Mechanism(IntervalSet.of((a, b)))
            low = mechanism_equilibrium(dist, params, mech, price=q)
            weak, _, _ = consumer_comparison(low, baseline)
            if not weak:
                continue
            checks += 1
            at_p = mechanism_equilibrium(dist, params, mech, price=baseline_price)
            if not at_p.total_profit > low.total_profit + tol:
                violations.append({"shared": [float(a), float(b)], "q": q,
                                   "total_at_q": low.total_profit, "total_at_p": at_p.total_profit})

    return ConsumerScanReport(
        baseline_price=baseline_price,
        reference_interval=(float(ref[0]), float(ref[1])),
        reference_cw=ref_out.consumer_welfare,
        n_opt_in_sets=len(sets),
        n_mechanisms=len(scan),
        n_consumer_improving=int(scan.consumer_weak.sum()),
        reference_in_scan=in_scan,
        reference_chosen_for_own_set=ref_chosen,
        counterexamples=counterexamples,
        lower_price_checks=checks,
        lower_price_violations=violations,
    )
