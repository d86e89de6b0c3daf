import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from datamarket import ConsumerDistribution, IntervalSet
from datamarket.errors import DomainError


def test_uniform_cdf_and_mass():
    d = ConsumerDistribution.uniform()
    assert d.cdf(0.3) == pytest.approx(0.3)
    assert d.mass(IntervalSet.of((0.1, 0.2), (0.5, 0.9))) == pytest.approx(0.5)


def test_linear_half_plus_x():
    d = ConsumerDistribution.parse("linear:1")
    assert d.pdf(0.0) == pytest.approx(0.5)
    assert d.pdf(1.0) == pytest.approx(1.5)
    assert d.cdf(0.5) == pytest.approx(0.375)
    assert d.mean() == pytest.approx(7 / 12, abs=1e-10)


def test_csv_roundtrip(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("x,f\n0,1\n0.5,3\n1,1\n")
    d = ConsumerDistribution.parse(f"csv:{path}")
    assert d.cdf(1.0) == pytest.approx(1.0)
    assert d.cdf(0.5) == pytest.approx(0.5)
    assert d.pdf(0.5) == pytest.approx(1.5)


@pytest.mark.parametrize("spec", ["linear:2", "linear:-3", "normal", "csv:"])
def test_bad_specs(spec):
    with pytest.raises(DomainError):
        ConsumerDistribution.parse(spec)


def test_cdf_domain():
    with pytest.raises(DomainError):
        ConsumerDistribution.uniform().cdf(1.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.9, 1.9), st.floats(0, 1), st.floats(0, 1))
def test_integrate_matches_cdf(slope, a, b):
    d = ConsumerDistribution.linear(slope)
    lo, hi = sorted((a, b))
    s = IntervalSet.of((lo, hi))
    assert d.integrate(lambda x: np.ones_like(x), s) == pytest.approx(d.mass(s), abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.9, 1.9), st.floats(0.05, 0.95))
def test_kinked_integrand_exact_with_breakpoint(slope, k):
    d = ConsumerDistribution.linear(slope)
    got = d.integrate(lambda x: np.abs(x - k), IntervalSet.full(), breakpoints=[k])
    # closed form of the integral of |x - k| (1 + s(x - 1/2)) on [0, 1]
    c0, c1 = 1 - slope / 2, slope

    def prim(x):
        return c0 * x**2 / 2 + c1 * x**3 / 3

    def prim_x0(x):
        return c0 * x + c1 * x**2 / 2

    left = k * prim_x0(k) - prim(k)
    right = (prim(1) - prim(k)) - k * (prim_x0(1) - prim_x0(k))
    assert got == pytest.approx(left + right, abs=1e-10)
