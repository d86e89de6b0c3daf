"""Selling consumer location data to a competitor in a Hotelling duopoly."""

from .distributions import ConsumerDistribution
from .equilibrium import (
    EquilibriumSet,
    MarketOutcome,
    mechanism_equilibrium,
    no_sharing_equilibrium,
    outcome_utilities,
)
from .intervals import IntervalSet
from .market import (
    DirectEffectReport,
    MarketParams,
    Mechanism,
    PriceSchedule,
    best_response_b_unshared,
    best_response_pair_shared,
    consumer_utility,
    direct_effect,
    mu,
)
from .mechanisms import (
    MechanismReport,
    epsilon_mechanism,
    firm_optimal_mechanism,
    full_sharing_report,
    ir_transfer_range,
    pareto_improving_mechanism,
)
from .optin import OptInProfile, consumer_optimal_scan, feasible, pareto_opt_in_policy, verify_tfne

__version__ = "0.1.0"
