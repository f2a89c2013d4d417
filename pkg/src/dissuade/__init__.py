"""Sender-optimal disclosure in a two-period dissuasion game with exploration."""

from .benchmark import BenchmarkReport, BenchmarkStrategy, n_cost, optimal_no_info, pi
from .model import (
    Action,
    BeliefSplit,
    ConsistencyError,
    GameParams,
    Message,
    ParameterError,
    Regime,
    Signal,
    State,
    Thresholds,
    make_split,
    posterior_update,
    split_with_gamma,
    stage_payoff,
    thresholds,
    validate_params,
    xi,
)
from .scenarios import (
    EquilibriumReport,
    action_based_equilibrium,
    equilibrium,
    equilibrium_cost,
    signal_based_equilibrium,
    unconditional_equilibrium,
)

__all__ = [
    "Action",
    "BeliefSplit",
    "BenchmarkReport",
    "BenchmarkStrategy",
    "ConsistencyError",
    "EquilibriumReport",
    "GameParams",
    "Message",
    "ParameterError",
    "Regime",
    "Signal",
    "State",
    "Thresholds",
    "action_based_equilibrium",
    "equilibrium",
    "equilibrium_cost",
    "make_split",
    "n_cost",
    "optimal_no_info",
    "pi",
    "posterior_update",
    "signal_based_equilibrium",
    "split_with_gamma",
    "stage_payoff",
    "thresholds",
    "unconditional_equilibrium",
    "validate_params",
    "xi",
]
