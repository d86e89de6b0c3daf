"""Subgame-perfect equilibria for a fixed data-sharing mechanism.

Firm A picks the uniform price that maximizes ``p * mass([0, mu(p)] minus
shared)``; personalized prices then follow from the best responses in
:mod:`datamarket.market`. For uniform consumers this objective is piecewise
quadratic in ``p`` and is maximized exactly; otherwise a coarse grid is
refined with a bounded scalar search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .distributions import ConsumerDistribution
from .errors import DomainError
from .intervals import IntervalSet
from .market import MarketParams, Mechanism, PriceSchedule, best_response_b_unshared, mu

PRICE_GRID = 4096
GRID_KEEP = 1e-6  # relative to t
REFINE_XTOL = 1e-10
CANDIDATE_TOL = 1e-9  # relative to t

PARTS = ("A_uniform", "A_personalized", "B_personalized")


@dataclass(frozen=True)
class EquilibriumSet:
    candidate_prices: tuple[float, ...]
    selected: float
    objective_max: float
    uniform_price_binding: bool = True  # False when A's uniform price serves nobody

    def __post_init__(self):
        if self.candidate_prices and self.selected != max(self.candidate_prices):
            raise ValueError("selected price must be the largest candidate")


def uniform_demand(dist: ConsumerDistribution, params: MarketParams, shared: IntervalSet, p):
    """Mass of consumers paying A's uniform price ``p``: ``[0, mu(p)]`` minus ``shared``."""
    p = np.asarray(p, dtype=float)
    x = np.clip(0.5 - p / (2 * params.t), 0.0, 0.5)
    demand = dist._cdf(x)
    for lo, hi in shared.clip(0.0, 0.5):
        demand = demand - (dist._cdf(np.minimum(hi, x)) - dist._cdf(np.minimum(lo, x)))
    return np.maximum(demand, 0.0)


def uniform_objective(dist, params, shared, p):
    return np.asarray(p, dtype=float) * uniform_demand(dist, params, shared, p)


def uniform_price_binds(dist, params, shared: IntervalSet) -> bool:
    """Whether any positive mass can ever be charged the uniform price."""
    # sets shorter than the merge tolerance are already gone, so any mass counts
    return dist.mass(IntervalSet.of((0.0, 0.5)) - shared) > 0.0


def _exact_uniform_candidates(params, shared) -> tuple[list[float], float]:
    # with uniform consumers, demand is affine in p between the prices at which
    # mu(p) crosses an endpoint of the shared set
    t = params.t
    cuts = {0.0, t}
    for e in shared.clip(0.0, 0.5).endpoints:
        cuts.add(t * (1 - 2 * e))
    cuts = sorted(c for c in cuts if 0.0 <= c <= t)
    dist = ConsumerDistribution.uniform()
    pts = []
    for p_lo, p_hi in zip(cuts[:-1], cuts[1:]):
        d_lo, d_hi = (float(d) for d in uniform_demand(dist, params, shared, np.array([p_lo, p_hi])))
        k = (d_hi - d_lo) / (p_hi - p_lo)
        pts += [p_lo, p_hi]
        if k < 0:
            vertex = -(d_lo - k * p_lo) / (2 * k)
            if p_lo < vertex < p_hi:
                pts.append(vertex)
    pts = np.array(sorted(set(pts)))
    vals = uniform_objective(dist, params, shared, pts)
    best = float(vals.max())
    keep = pts[vals >= best - CANDIDATE_TOL * t * 1e-3]
    return [float(p) for p in keep], best


def _numeric_candidates(dist, params, shared, n_grid: int) -> tuple[list[float], float]:
    t = params.t
    grid = np.linspace(0.0, t, n_grid)
    vals = uniform_objective(dist, params, shared, grid)
    top = float(vals.max())
    near = np.flatnonzero(vals >= top - GRID_KEEP * t)
    runs = np.split(near, np.flatnonzero(np.diff(near) > 1) + 1)

    def f(p):
        return float(uniform_objective(dist, params, shared, p))

    found = []
    for run in runs:
        lo = grid[max(run[0] - 1, 0)]
        hi = grid[min(run[-1] + 1, n_grid - 1)]
        res = minimize_scalar(lambda p: -f(p), bounds=(lo, hi), method="bounded", options={"xatol": REFINE_XTOL})
        best_grid = grid[run[np.argmax(vals[run])]]
        p_star = float(res.x) if -res.fun >= f(best_grid) else float(best_grid)
        found.append(p_star)
        # a plateau: report its right edge as well
        plateau_tol = CANDIDATE_TOL * t
        if len(run) > 2 and vals[run[-1]] >= f(p_star) - plateau_tol:
            a, b = grid[run[-1]], grid[min(run[-1] + 1, n_grid - 1)]
            target = f(p_star) - plateau_tol
            for _ in range(80):
                m = 0.5 * (a + b)
                a, b = (m, b) if f(m) >= target else (a, m)
            found += [float(grid[run[0]]), float(a)]
    vals_found = np.array([f(p) for p in found])
    best = float(vals_found.max())
    keep = [p for p, val in zip(found, vals_found) if val >= best - CANDIDATE_TOL * t]
    return sorted(set(keep)), best


def solve_uniform_price(
    dist: ConsumerDistribution,
    params: MarketParams,
    shared: IntervalSet,
    n_grid: int = PRICE_GRID,
    exact: bool | None = None,
) -> EquilibriumSet:
    """Equilibrium uniform prices of firm A given the shared set.

    When no positive mass in [0, 1/2] is left unshared the uniform price
    sells to nobody; firms then prefer ``v - t/2``, which lets B extract the
    full surplus of its customers.
    """
    if not uniform_price_binds(dist, params, shared):
        p = params.v - params.t / 2
        return EquilibriumSet((p,), p, 0.0, uniform_price_binding=False)
    if exact is None:
        exact = dist.is_uniform
    if exact:
        if not dist.is_uniform:
            raise DomainError("exact uniform-price solver needs uniform consumers")
        cands, best = _exact_uniform_candidates(params, shared)
    else:
        cands, best = _numeric_candidates(dist, params, shared, n_grid)
    return EquilibriumSet(tuple(cands), max(cands), best)


@dataclass(frozen=True, eq=False)
class MarketOutcome:
    dist: ConsumerDistribution
    params: MarketParams
    mechanism: Mechanism
    uniform_a: float
    schedule: PriceSchedule
    partition: dict
    profit_a_gross: float
    profit_b_gross: float
    consumer_welfare: float
    total_surplus: float
    is_equilibrium: bool = True
    uniform_price_binding: bool = True
    candidates: tuple[float, ...] = field(default=())

    @property
    def transfer(self) -> float:
        return self.mechanism.transfer

    @property
    def profit_a_net(self) -> float:
        return self.profit_a_gross - self.transfer

    @property
    def profit_b_net(self) -> float:
        return self.profit_b_gross + self.transfer

    @property
    def total_profit(self) -> float:
        return self.profit_a_gross + self.profit_b_gross

    def serving(self, thetas):
        """Boolean array, True where the consumer buys from A."""
        return self.schedule.serve(thetas)[0]

    def utility_of(self, thetas):
        th = np.atleast_1d(np.asarray(thetas, dtype=float))
        from_a, price = self.schedule.serve(th)
        p = self.params
        out = p.v - price - p.t * np.where(from_a, th, 1 - th)
        return out if np.ndim(thetas) else float(out[0])

    def surplus_gap(self) -> float:
        """Residual of welfare + profits = gross surplus; zero up to quadrature error."""
        return self.consumer_welfare + self.total_profit - self.total_surplus

    def breakpoints(self) -> list[float]:
        pts = {0.0, 0.5, 1.0}
        pts.update(self.mechanism.shared.endpoints)
        for s in self.partition.values():
            pts.update(s.endpoints)
        return sorted(pts)

    def summary(self) -> dict:
        return {
            "p_A": self.uniform_a,
            "pi_A": self.profit_a_gross,
            "pi_B": self.profit_b_gross,
            "pi_A_net": self.profit_a_net,
            "pi_B_net": self.profit_b_net,
            "total_profit": self.total_profit,
            "cw": self.consumer_welfare,
            "transfer": self.transfer,
            "shared": [list(iv) for iv in self.mechanism.shared],
            "partition": {k: [list(iv) for iv in v] for k, v in self.partition.items()},
            "is_equilibrium": self.is_equilibrium,
            "uniform_price_binding": self.uniform_price_binding,
        }


def evaluate_outcome(
    dist: ConsumerDistribution,
    params: MarketParams,
    mech: Mechanism,
    uniform_a: float,
    is_equilibrium: bool = True,
    uniform_price_binding: bool = True,
    candidates: Sequence[float] = (),
    tol: float = 1e-10,
) -> MarketOutcome:
    """Profits, welfare and purchase partition at a fixed uniform price."""
    if uniform_a < 0:
        raise DomainError(f"uniform price must be nonnegative, got {uniform_a}")
    v, t = params.v, params.t
    p = float(uniform_a)
    shared = mech.shared
    unshared = shared.complement()
    m = mu(p, params)
    cap_point = (v - p) / t  # beyond it the participation cap binds for B
    kinks = [m, 0.5] + ([cap_point] if 0 < cap_point < 1 else [])

    a_uniform = unshared.clip(0.0, m) if p <= v else IntervalSet.empty()
    a_pers = shared.clip(0.0, 0.5)
    b_shared = shared.clip(0.5, 1.0)
    b_unshared = unshared - a_uniform
    partition = {
        "A_uniform": a_uniform,
        "A_personalized": a_pers,
        "B_personalized": b_shared | b_unshared,
    }

    def pb(x):
        return best_response_b_unshared(np.clip(x, 0.0, 1.0), p, params)

    integ = dist.integrate
    profit_a = p * dist.mass(a_uniform) + integ(lambda x: t * (1 - 2 * x), a_pers, tol)
    profit_b = integ(lambda x: t * (2 * x - 1), b_shared, tol) + integ(pb, b_unshared, tol, kinks)
    cw = (
        integ(lambda x: v - p - t * x, a_uniform, tol)
        + integ(lambda x: v - t * (1 - 2 * x) - t * x, a_pers, tol)
        + integ(lambda x: v - t * (2 * x - 1) - t * (1 - x), b_shared, tol)
        + integ(lambda x: v - pb(x) - t * (1 - x), b_unshared, tol, kinks)
    )
    served_a = a_uniform | a_pers
    surplus = integ(lambda x: v - t * x, served_a, tol) + integ(lambda x: v - t * (1 - x), served_a.complement(), tol)
    return MarketOutcome(
        dist=dist,
        params=params,
        mechanism=mech,
        uniform_a=p,
        schedule=PriceSchedule(p, mech, params),
        partition=partition,
        profit_a_gross=profit_a,
        profit_b_gross=profit_b,
        consumer_welfare=cw,
        total_surplus=surplus,
        is_equilibrium=is_equilibrium,
        uniform_price_binding=uniform_price_binding,
        candidates=tuple(candidates),
    )


def is_best_response(dist, params, shared: IntervalSet, p: float, eq: EquilibriumSet | None = None) -> bool:
    if eq is None:
        eq = solve_uniform_price(dist, params, shared)
    if not eq.uniform_price_binding:
        return True
    val = float(uniform_objective(dist, params, shared, p))
    return val >= eq.objective_max - max(CANDIDATE_TOL * params.t, params.tol * 1e-3)


def mechanism_equilibrium(
    dist: ConsumerDistribution,
    params: MarketParams,
    mech: Mechanism,
    price: float | None = None,
) -> MarketOutcome:
    """Equilibrium outcome under ``mech``.

    With ``price=None`` the firm-preferred (largest) equilibrium uniform price
    is used. A given ``price`` is evaluated as is and the outcome's
    ``is_equilibrium`` flag records whether it is a best response for A.
    """
    eq = solve_uniform_price(dist, params, mech.shared)
    if price is None:
        return evaluate_outcome(
            dist, params, mech, eq.selected,
            uniform_price_binding=eq.uniform_price_binding, candidates=eq.candidate_prices,
        )
    if price < 0:
        raise DomainError(f"uniform price must be nonnegative, got {price}")
    return evaluate_outcome(
        dist, params, mech, price,
        is_equilibrium=is_best_response(dist, params, mech.shared, price, eq),
        uniform_price_binding=eq.uniform_price_binding, candidates=eq.candidate_prices,
    )


def no_sharing_equilibrium(dist: ConsumerDistribution, params: MarketParams) -> tuple[EquilibriumSet, MarketOutcome]:
    eq = solve_uniform_price(dist, params, IntervalSet.empty())
    out = evaluate_outcome(dist, params, Mechanism.no_sharing(), eq.selected, candidates=eq.candidate_prices)
    return eq, out


def outcome_utilities(outcome: MarketOutcome, thetas: Sequence[float]) -> list[float]:
    return [float(u) for u in np.atleast_1d(outcome.utility_of(np.asarray(thetas, dtype=float)))]
