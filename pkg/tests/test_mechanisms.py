import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from datamarket import (
    ConsumerDistribution,
    IntervalSet,
    MarketParams,
    Mechanism,
    epsilon_mechanism,
    firm_optimal_mechanism,
    full_sharing_report,
    ir_transfer_range,
    mechanism_equilibrium,
    no_sharing_equilibrium,
    pareto_improving_mechanism,
)
from datamarket.errors import DomainError, PreconditionError, UnsupportedError
from datamarket.mechanisms import consumer_comparison, epsilon_closed_form, lattice_pairs, scan_interval_mechanisms


def test_full_sharing_has_no_ir_transfer(uniform, base_params):
    rep = full_sharing_report(uniform, base_params)
    assert rep.ir_transfer_range is None
    assert not rep.pareto_flags.firms_ir
    assert rep.to_dict()["ir_transfer_range"] is None


def test_pareto_mechanism(uniform, base_params):
    rep = pareto_improving_mechanism(uniform, base_params)
    assert rep.mechanism.shared == IntervalSet.of((0.25, 0.375))
    lo, hi = rep.ir_transfer_range
    assert (lo, hi) == pytest.approx((0.015625, 0.046875), abs=1e-12)
    assert rep.mechanism.transfer == pytest.approx(0.03125)
    assert rep.pareto_flags.pareto_improving and rep.pareto_flags.some_consumer_strict


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(2.05, 6.0), st.floats(-1.5, 1.5))
def test_pareto_mechanism_is_pareto_for_any_market(t, ratio, slope):
    d = ConsumerDistribution.linear(slope)
    params = MarketParams(v=ratio * t, t=t)
    rep = pareto_improving_mechanism(d, params)
    assert rep.outcome.is_equilibrium
    assert rep.ir_transfer_range is not None
    assert rep.pareto_flags.pareto_improving


def test_bad_baseline_price(uniform, base_params):
    with pytest.raises(PreconditionError):
        pareto_improving_mechanism(uniform, base_params, baseline_price=0.3)


def test_firm_optimal_certificates(uniform):
    rep6 = firm_optimal_mechanism(uniform, MarketParams(v=6.0, t=1.0))
    rep3 = firm_optimal_mechanism(uniform, MarketParams(v=3.0, t=1.0))
    assert rep6.extra["condition_holds"] and not rep3.extra["condition_holds"]
    assert rep3.extra["certificate"] == "uniform_consumers"
    # B's take from (1/2, 1] alone already clears the bound
    assert rep6.outcome.profit_b_gross >= rep6.extra["profit_lower_bound"] - 1e-12
    # uniform consumers: total is v/2 + t/8, never below 9t/8
    for rep, v in ((rep6, 6.0), (rep3, 3.0)):
        assert rep.outcome.total_profit == pytest.approx(v / 2 + 1 / 8, abs=1e-10)
        assert rep.outcome.total_profit > 9 / 8


@given(st.floats(1e-4, 0.25), st.floats(0.1, 3.0))
@settings(max_examples=25, deadline=None)
def test_epsilon_closed_forms(eps, t):
    params = MarketParams(v=3 * t, t=t)
    rep = epsilon_mechanism(ConsumerDistribution.uniform(), params, eps)
    for key, val in epsilon_closed_form(params, eps).items():
        assert rep.extra["numeric"][key] == pytest.approx(val, abs=1e-8)


def test_epsilon_domain(uniform, base_params):
    with pytest.raises(DomainError):
        epsilon_mechanism(uniform, base_params, 0.3)
    with pytest.raises(UnsupportedError):
        epsilon_mechanism(ConsumerDistribution.linear(1), base_params, 0.1)


def test_ir_range_arithmetic(uniform, base_params):
    _, base = no_sharing_equilibrium(uniform, base_params)
    out = mechanism_equilibrium(uniform, base_params, Mechanism.interval(0.25, 0.375), price=0.5)
    lo, hi = ir_transfer_range(base, out)
    assert out.profit_a_gross - hi == pytest.approx(base.profit_a_gross)
    assert out.profit_b_gross + lo == pytest.approx(base.profit_b_gross)


def test_consumer_comparison_detects_losers(uniform, base_params):
    _, base = no_sharing_equilibrium(uniform, base_params)
    full = mechanism_equilibrium(uniform, base_params, Mechanism.full())
    weak, _, worst = consumer_comparison(full, base)
    assert not weak and worst < 0


def test_small_scan(uniform, base_params):
    _, base = no_sharing_equilibrium(uniform, base_params)
    scan = scan_interval_mechanisms(uniform, base_params, lattice=8, baseline=base)
    assert len(scan) == len(lattice_pairs(8))
    i = scan.index_of(0.0, 0.5)
    assert scan.total_profit[i] == pytest.approx(scan.total_profit.max())
    assert scan.consumer_weak[scan.index_of(0.25, 0.375)]
