"""Model primitives: parameters, mechanisms, prices, utilities and best responses.

Firm A sits at 0 and posts a uniform price; firm B sits at 1 and knows every
consumer's location. A mechanism reveals the locations in ``shared`` to A
against a transfer paid by A to B.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError
from .intervals import IntervalSet

TOL = 1e-9


@dataclass(frozen=True)
class MarketParams:
    v: float  # value of the good
    t: float  # marginal transport cost
    tol: float = TOL

    def __post_init__(self):
        if not (self.v > 0 and self.t > 0):
            raise DomainError(f"need v > 0 and t > 0, got v={self.v}, t={self.t}")
        if not self.v > 2 * self.t:
            raise DomainError(f"market not covered: need v > 2t, got v={self.v}, t={self.t}")


@dataclass(frozen=True)
class Mechanism:
    """Data-sharing mechanism: B reveals ``shared`` to A, A pays ``transfer`` to B.

    ``added_points`` / ``removed_points`` are single consumers toggled on or
    off the shared set. They change the prices those consumers face but carry
    no mass, so every profit and welfare integral ignores them.
    """

    shared: IntervalSet = field(default_factory=IntervalSet)
    transfer: float = 0.0
    added_points: frozenset = frozenset()
    removed_points: frozenset = frozenset()

    @classmethod
    def no_sharing(cls, transfer: float = 0.0) -> "Mechanism":
        return cls(IntervalSet.empty(), transfer)

    @classmethod
    def full(cls, transfer: float = 0.0) -> "Mechanism":
        return cls(IntervalSet.full(), transfer)

    @classmethod
    def interval(cls, lo: float, hi: float, transfer: float = 0.0) -> "Mechanism":
        return cls(IntervalSet.of((lo, hi)), transfer)

    def with_transfer(self, transfer: float) -> "Mechanism":
        return Mechanism(self.shared, float(transfer), self.added_points, self.removed_points)

    def with_point(self, theta: float) -> "Mechanism":
        return Mechanism(
            self.shared, self.transfer, self.added_points | {float(theta)}, self.removed_points - {float(theta)}
        )

    def without_point(self, theta: float) -> "Mechanism":
        return Mechanism(
            self.shared, self.transfer, self.added_points - {float(theta)}, self.removed_points | {float(theta)}
        )

    def is_shared(self, theta):
        inside = np.asarray(self.shared.contains(theta))
        theta = np.asarray(theta, dtype=float)
        for x in self.added_points:
            inside = inside | (theta == x)
        for x in self.removed_points:
            inside = inside & (theta != x)
        return inside if inside.ndim else bool(inside)

    @property
    def is_punctured(self) -> bool:
        return bool(self.added_points or self.removed_points)


def _check_theta(theta):
    arr = np.asarray(theta, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1) or np.any(np.isnan(arr)):
        raise DomainError(f"consumer location outside [0, 1]: {theta}")
    return arr


def mu(p: float, params: MarketParams, clamp: bool = True) -> float:
    """Location of the consumer indifferent between A's uniform price ``p`` and B at zero."""
    if p < 0:
        raise DomainError(f"price must be nonnegative, got {p}")
    raw = 0.5 - p / (2 * params.t)
    return min(max(raw, 0.0), 1.0) if clamp else raw


def consumer_utility(theta, firm: str, price, params: MarketParams):
    theta = _check_theta(theta)
    if np.any(np.asarray(price) < 0):
        raise DomainError(f"price must be nonnegative, got {price}")
    if firm == "A":
        out = params.v - price - params.t * theta
    elif firm == "B":
        out = params.v - price - params.t * (1 - theta)
    else:
        raise DomainError(f"firm must be 'A' or 'B', got {firm!r}")
    return out if np.ndim(out) else float(out)


def best_response_b_unshared(theta, uniform_a: float, params: MarketParams):
    """B's personalized price against A's uniform price, capped by participation."""
    theta = _check_theta(theta)
    if uniform_a < 0:
        raise DomainError(f"uniform price must be nonnegative, got {uniform_a}")
    t = params.t
    price = np.minimum(np.maximum(0.0, uniform_a + t * (2 * theta - 1)), params.v - t * (1 - theta))
    return price if np.ndim(price) else float(price)


def best_response_pair_shared(theta, params: MarketParams):
    """Bertrand prices (A, B) for a consumer both firms can locate."""
    theta = _check_theta(theta)
    t = params.t
    pa = np.maximum(t * (1 - 2 * theta), 0.0)
    pb = np.maximum(t * (2 * theta - 1), 0.0)
    if np.ndim(pa):
        return pa, pb
    return float(pa), float(pb)


@dataclass(frozen=True)
class PriceSchedule:
    uniform_a: float
    mechanism: Mechanism
    params: MarketParams

    def personalized_a(self, theta):
        """A's personalized price; NaN where A cannot locate the consumer."""
        theta = np.asarray(theta, dtype=float)
        pa, _ = best_response_pair_shared(np.atleast_1d(theta), self.params)
        out = np.where(self.mechanism.is_shared(np.atleast_1d(theta)), pa, np.nan)
        return out if theta.ndim else float(out[0])

    def personalized_b(self, theta):
        theta = np.asarray(theta, dtype=float)
        th = np.atleast_1d(theta)
        _, pb_shared = best_response_pair_shared(th, self.params)
        pb_unshared = best_response_b_unshared(th, self.uniform_a, self.params)
        out = np.where(self.mechanism.is_shared(th), pb_shared, pb_unshared)
        return out if theta.ndim else float(out[0])

    def serve(self, theta):
        """Return (buys_from_a, price_paid) for each consumer.

        Indifferent consumers take the personalized offer; when both firms
        personalize the closer firm wins, and B wins at exactly 1/2.
        """
        th = np.atleast_1d(_check_theta(theta))
        params = self.params
        shared = np.asarray(self.mechanism.is_shared(th))
        pa_pers, pb_pers = best_response_pair_shared(th, params)
        pb_uns = best_response_b_unshared(th, self.uniform_a, params)

        # B can match A's offer unless that needs a negative price; comparing
        # utilities instead would let rounding break the tie at B's reply
        u_a = params.v - self.uniform_a - params.t * th
        uniform_wins = (self.uniform_a + params.t * (2 * th - 1) < 0) & (u_a >= 0)

        from_a = np.where(shared, th < 0.5, uniform_wins)
        price = np.where(shared, np.where(th < 0.5, pa_pers, pb_pers), np.where(uniform_wins, self.uniform_a, pb_uns))
        return from_a, price


class EffectCase(str, Enum):
    B_KEEPS_LOWER_PRICE = "B_keeps_lower_price"
    SWITCH_TO_A = "switch_to_A"
    A_KEEPS_HIGHER_PRICE = "A_keeps_higher_price"


@dataclass(frozen=True)
class DirectEffectReport:
    case: EffectCase
    delta_profit_a: float
    delta_profit_b: float
    delta_consumer: float
    net_gain_positive: bool | None = None  # only meaningful when switching to A
    boundary: bool = False  # theta sits exactly at 1/2 or at mu

    @property
    def delta_total(self) -> float:
        return self.delta_consumer + self.delta_profit_a + self.delta_profit_b


def _switch_raises_joint_profit(theta, p, pb, params) -> bool:
    if pb < params.v - params.t * (1 - theta):
        # uncapped reply: sign of 2t(1 - 2 theta) - p, decided on theta directly
        return theta < (mu(p, params, clamp=False) + 0.5) / 2
    return params.t * (1 - 2 * theta) > pb


def direct_effect(theta: float, uniform_a: float, params: MarketParams) -> DirectEffectReport:
    """Change from revealing one consumer's location, holding A's uniform price fixed.

    Locations in (1/2, 1] stay with B at a lower price, [mu, 1/2] switch to A,
    and [0, mu) stay with A at a higher personalized price. At exactly 1/2
    both firms price at zero and the consumer stays with B, which the
    switching formulas reproduce.
    """
    _check_theta(theta)
    if uniform_a < 0:
        raise DomainError(f"uniform price must be nonnegative, got {uniform_a}")
    t, p = params.t, uniform_a
    m = mu(p, params)
    pb = best_response_b_unshared(theta, p, params)
    if theta > 0.5:
        cut = t * (2 * theta - 1) - pb
        return DirectEffectReport(EffectCase.B_KEEPS_LOWER_PRICE, 0.0, cut, -cut)
    if theta >= m:
        gain_a = t * (1 - 2 * theta)
        return DirectEffectReport(
            EffectCase.SWITCH_TO_A,
            gain_a,
            -pb,
            pb,
            net_gain_positive=_switch_raises_joint_profit(theta, p, pb, params),
            boundary=theta == 0.5 or theta == m,
        )
    extra = t * (1 - 2 * theta) - p
    return DirectEffectReport(EffectCase.A_KEEPS_HIGHER_PRICE, extra, 0.0, -extra)
