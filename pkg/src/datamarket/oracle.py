"""Brute-force reference solver.

Consumers are discretized into cells, firm A's uniform price is chosen by
exhaustive search over a price grid, and every consumer's seller and price
come from comparing raw utilities ``v - price - t * distance``. Nothing here
imports the closed-form pricing code; only the interval and distribution
containers are shared.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .distributions import ConsumerDistribution
from .intervals import IntervalSet
from .market import MarketParams, Mechanism


@dataclass(frozen=True)
class GridConfig:
    n_theta: int = 2048
    n_price: int = 4096
    price_cap: float | None = None  # defaults to v

    def __post_init__(self):
        if self.n_theta < 16 or self.n_price < 16:
            raise ValueError(f"grid too coarse: n_theta={self.n_theta}, n_price={self.n_price} (need >= 16)")

    @classmethod
    def from_env(cls, **overrides) -> "GridConfig":
        kw = {}
        if "DATAMARKET_GRID_THETA" in os.environ:
            kw["n_theta"] = int(os.environ["DATAMARKET_GRID_THETA"])
        if "DATAMARKET_GRID_PRICE" in os.environ:
            kw["n_price"] = int(os.environ["DATAMARKET_GRID_PRICE"])
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    def cap(self, params: MarketParams) -> float:
        return params.v if self.price_cap is None else self.price_cap

    def price_step(self, params: MarketParams) -> float:
        return self.cap(params) / (self.n_price - 1)


def utility(theta, location: float, price, params: MarketParams):
    return params.v - price - params.t * np.abs(theta - location)


def _bisect_decreasing(h, lo: float, hi: float, shape, iters: int = 64):
    """Vectorized root of a function decreasing in theta; clamps to [lo, hi]."""
    a = np.full(shape, lo)
    b = np.full(shape, hi)
    for _ in range(iters):
        m = 0.5 * (a + b)
        pos = h(m) > 0
        a = np.where(pos, m, a)
        b = np.where(pos, b, m)
    root = 0.5 * (a + b)
    root = np.where(h(np.full(shape, lo)) <= 0, lo, root)
    return np.where(h(np.full(shape, hi)) > 0, hi, root)


def uniform_cutoff(p, params: MarketParams):
    """Location up to which A's uniform price beats B's zero price."""
    p = np.asarray(p, dtype=float)
    return _bisect_decreasing(lambda th: utility(th, 0.0, p, params) - utility(th, 1.0, 0.0, params), 0.0, 1.0, p.shape)


def oracle_consumer(theta, shared, p: float, params: MarketParams):
    """Seller (True for A), price and utility of each consumer.

    Unshared consumers compare A's posted price with B's best reply, which is
    the largest price still winning them (ties go to the personalized offer).
    Shared consumers face Bertrand competition: the firm offering more
    utility at price zero wins at the utility gap, B winning exact ties.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    shared = np.broadcast_to(np.asarray(shared, dtype=bool), theta.shape)

    u_a_post = utility(theta, 0.0, p, params)
    outside = np.maximum(u_a_post, 0.0)
    b_gap_uns = utility(theta, 1.0, 0.0, params) - outside
    uns_to_b = b_gap_uns >= 0
    uns_price = np.where(uns_to_b, b_gap_uns, p)

    u_a0 = utility(theta, 0.0, 0.0, params)
    u_b0 = utility(theta, 1.0, 0.0, params)
    sh_to_a = u_a0 > u_b0
    sh_price = np.abs(u_a0 - u_b0)

    from_a = np.where(shared, sh_to_a, ~uns_to_b)
    price = np.where(shared, sh_price, uns_price)
    util = utility(theta, np.where(from_a, 0.0, 1.0), price, params)
    return from_a, price, util


def _cells(dist: ConsumerDistribution, n: int, extra):
    bounds = np.unique(np.concatenate([np.linspace(0.0, 1.0, n + 1), np.clip(np.asarray(extra, float), 0, 1)]))
    mids = 0.5 * (bounds[:-1] + bounds[1:])
    weights = np.diff(dist.cdf(bounds))
    return bounds, mids, weights


def oracle_uniform_price(
    dist: ConsumerDistribution,
    params: MarketParams,
    shared: IntervalSet,
    grid: GridConfig = GridConfig(),
) -> float:
    """Grid argmax of A's uniform-price revenue, ties broken upward."""
    prices = np.linspace(0.0, grid.cap(params), grid.n_price)
    bounds, mids, weights = _cells(dist, grid.n_theta, shared.endpoints + [0.5])
    unshared_w = weights * ~shared.contains(mids)
    cum = np.concatenate([[0.0], np.cumsum(unshared_w)])

    # the cutoff is inserted as a cell boundary: cells left of it go to A
    cut = uniform_cutoff(prices, params)
    k = np.clip(np.searchsorted(bounds, cut, side="right") - 1, 0, len(mids) - 1)
    partial = np.where(unshared_w[k] > 0, dist.cdf(np.clip(cut, 0, 1)) - dist.cdf(bounds[k]), 0.0)
    demand = cum[k] + np.maximum(partial, 0.0)
    revenue = prices * demand
    top = revenue.max()
    if top <= 1e-15:
        return params.v - params.t / 2
    return float(prices[np.flatnonzero(revenue >= top - 1e-14 * max(top, 1.0))[-1]])


@dataclass(frozen=True)
class OracleOutcome:
    uniform_a: float
    profit_a_gross: float
    profit_b_gross: float
    consumer_welfare: float
    total_surplus: float
    transfer: float
    theta: np.ndarray
    weight: np.ndarray
    from_a: np.ndarray
    price: np.ndarray
    utility: np.ndarray

    @property
    def total_profit(self) -> float:
        return self.profit_a_gross + self.profit_b_gross

    @property
    def profit_a_net(self) -> float:
        return self.profit_a_gross - self.transfer

    @property
    def profit_b_net(self) -> float:
        return self.profit_b_gross + self.transfer

    def summary(self) -> dict:
        return {
            "p_A": self.uniform_a,
            "pi_A": self.profit_a_gross,
            "pi_B": self.profit_b_gross,
            "total_profit": self.total_profit,
            "cw": self.consumer_welfare,
        }


def oracle_outcome(
    dist: ConsumerDistribution,
    params: MarketParams,
    mech: Mechanism,
    uniform_price: float | None = None,
    grid: GridConfig = GridConfig(),
) -> OracleOutcome:
    """Midpoint sums over consumer cells; kinks are aligned with cell boundaries."""
    p = oracle_uniform_price(dist, params, mech.shared, grid) if uniform_price is None else float(uniform_price)
    cut = float(uniform_cutoff(p, params))
    participation = min(max((params.v - p) / params.t, 0.0), 1.0)  # where A's posted offer stops being worth taking
    extra = mech.shared.endpoints + [0.5, cut, participation]
    _, mids, weights = _cells(dist, grid.n_theta, extra)
    from_a, price, util = oracle_consumer(mids, mech.shared.contains(mids), p, params)
    dist_to_seller = np.where(from_a, mids, 1 - mids)
    return OracleOutcome(
        uniform_a=p,
        profit_a_gross=float(np.sum(weights * price * from_a)),
        profit_b_gross=float(np.sum(weights * price * ~from_a)),
        consumer_welfare=float(np.sum(weights * util)),
        total_surplus=float(np.sum(weights * (params.v - params.t * dist_to_seller))),
        transfer=mech.transfer,
        theta=mids,
        weight=weights,
        from_a=from_a,
        price=price,
        utility=util,
    )


def lattice_intervals(n: int, within: IntervalSet | None = None) -> list[tuple[float, float]]:
    """All [a, b] with a < b on the lattice k/n, optionally restricted to a set."""
    pts = np.linspace(0.0, 1.0, n + 1)
    if within is not None:
        pts = np.unique(np.concatenate([pts, within.endpoints]))
    out = []
    for i, a in enumerate(pts):
        for b in pts[i + 1:]:
            if within is None or IntervalSet.of((a, b)).issubset(within, tol=1e-12):
                out.append((float(a), float(b)))
    return out


def oracle_best_interval(
    dist: ConsumerDistribution,
    params: MarketParams,
    objective: str = "total_profit",
    grid: GridConfig = GridConfig(),
    lattice: int = 64,
    baseline_price: float | None = None,
    probe_points: int = 512,
) -> tuple[IntervalSet, float]:
    """Exhaustive search over single shared intervals on a k/lattice grid.

    ``total_profit_pareto_constrained`` keeps only mechanisms under which no
    probed consumer loses more than two price-grid steps of utility
    relative to no sharing.
    """
    if objective not in ("total_profit", "total_profit_pareto_constrained"):
        raise ValueError(f"unknown objective {objective!r}")
    constrained = objective == "total_profit_pareto_constrained"
    probes = np.linspace(0.0, 1.0, probe_points)
    slack = 2 * grid.price_step(params)
    if constrained:
        p0 = oracle_uniform_price(dist, params, IntervalSet.empty(), grid) if baseline_price is None else baseline_price
        base_u = oracle_consumer(probes, False, p0, params)[2]

    best_set, best_val = IntervalSet.empty(), -np.inf
    candidates = [IntervalSet.empty()] + [IntervalSet.of(iv) for iv in lattice_intervals(lattice)]
    for s in candidates:
        mech = Mechanism(s)
        out = oracle_outcome(dist, params, mech, grid=grid)
        if constrained:
            u = oracle_consumer(probes, s.contains(probes), out.uniform_a, params)[2]
            if np.any(u < base_u - slack):
                continue
        if out.total_profit > best_val + 1e-12:
            best_set, best_val = s, out.total_profit
    return best_set, float(best_val)
