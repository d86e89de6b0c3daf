import numpy as np
import pytest

from datamarket import ConsumerDistribution, MarketParams
from datamarket import equilibrium

SURPLUS_TOL = 1e-6

# every outcome built anywhere in the suite lands here; the acceptance
# module reports on the whole collection
SURPLUS_LOG: list[tuple[str, float]] = []

_evaluate = equilibrium.evaluate_outcome


def _recording_evaluate(*args, **kwargs):
    out = _evaluate(*args, **kwargs)
    SURPLUS_LOG.append((f"{out.dist.label or out.dist.kind} {out.params} {out.mechanism.shared} p={out.uniform_a}", out.surplus_gap()))
    return out


equilibrium.evaluate_outcome = _recording_evaluate


@pytest.fixture(autouse=True)
def _surplus_identity_holds():
    start = len(SURPLUS_LOG)
    yield
    bad = [(name, gap) for name, gap in SURPLUS_LOG[start:] if not abs(gap) <= SURPLUS_TOL]
    assert not bad, f"surplus identity broken: {bad[:3]}"


@pytest.fixture
def uniform():
    return ConsumerDistribution.uniform()


@pytest.fixture
def base_params():
    return MarketParams(v=3.0, t=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# criterion -> (passed, detail), filled in by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_collection_modifyitems(config, items):
    # acceptance last, so the surplus-identity criterion sees every outcome
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
