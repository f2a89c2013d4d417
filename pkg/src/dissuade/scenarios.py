"""Closed-form sender-optimal equilibria under the three disclosure regimes.

Each ``*_cost`` function is vectorised over beliefs; each ``*_equilibrium``
function returns the canonical commitment plan together with its payoff and
cost. On every canonical path the receiver acts only once G is certain, so
the receiver's payoff equals the expected number of acts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .benchmark import n_cost, pi
from .engine import SenderStrategy
from .model import (
    EQ_TOL,
    Action,
    BeliefSplit,
    ConsistencyError,
    GameParams,
    Message,
    ParameterError,
    Regime,
    Signal,
    check_belief,
    make_split,
    silent_split,
    stage_payoff,
    thresholds,
    xi,
)

__all__ = [
    "Regime",
    "EquilibriumReport",
    "unconditional_cost",
    "action_based_cost",
    "signal_based_cost",
    "equilibrium_cost",
    "unconditional_equilibrium",
    "action_based_equilibrium",
    "signal_based_equilibrium",
    "equilibrium",
    "action_precvx_cost",
    "signal_precvx_cost",
    "gamma_hat_unconditional",
]


@dataclass(frozen=True)
class EquilibriumReport:
    regime: Regime
    prior: float
    period1_split: BeliefSplit | None
    period2_policy: Mapping[tuple, BeliefSplit | None] = field(default_factory=dict)
    receiver_payoff: float = 0.0
    sender_cost: float = 0.0
    attains_lower_bound: bool = False

    def sender_strategy(self) -> SenderStrategy:
        period1 = self.period1_split if self.period1_split is not None else silent_split(self.prior)
        return SenderStrategy(self.regime, period1, dict(self.period2_policy))


def _as_output(value, scalar: bool):
    return float(value) if scalar else value


def _interpolate_to_certainty(q, anchor: float, anchor_cost: float):
    # Chord from (anchor, anchor_cost) to (1, 2): a period-1 split between anchor and certainty.
    return anchor_cost + (q - anchor) * (2.0 - anchor_cost) / (1.0 - anchor)


def unconditional_cost(q, params: GameParams):
    scalar = np.ndim(q) == 0
    q = np.asarray(q, dtype=float)
    q_i = thresholds(params).q_i
    out = np.where(q <= q_i, 0.0, 2.0 * (q - q_i) / (1.0 - q_i))
    return _as_output(out, scalar)


def action_based_cost(q, params: GameParams):
    scalar = np.ndim(q) == 0
    q = np.asarray(q, dtype=float)
    t = thresholds(params)
    floor = pi(q, params)
    if t.p_star > t.q_ii:
        out = floor
    else:
        out = np.where(q <= t.p_star, floor, _interpolate_to_certainty(q, t.p_star, t.p_star))
    return _as_output(out, scalar)


def signal_based_cost(q, params: GameParams):
    t = thresholds(params)
    if t.p_e is None:
        return action_based_cost(q, params)
    scalar = np.ndim(q) == 0
    q = np.asarray(q, dtype=float)
    anchor_cost = pi(t.p_e, params)
    out = np.where(q <= t.p_e, pi(q, params), _interpolate_to_certainty(q, t.p_e, anchor_cost))
    return _as_output(out, scalar)


def equilibrium_cost(regime: Regime, q, params: GameParams):
    return {
        Regime.UNCONDITIONAL: unconditional_cost,
        Regime.ACTION_BASED: action_based_cost,
        Regime.SIGNAL_BASED: signal_based_cost,
    }[regime](q, params)


def _report(regime, q, params, period1, period2) -> EquilibriumReport:
    cost = equilibrium_cost(regime, q, params)
    floor = pi(q, params)
    if not floor - EQ_TOL <= cost <= n_cost(q, params) + EQ_TOL:
        raise ConsistencyError(f"{regime.value} cost {cost} outside [pi, N] at q={q}")
    return EquilibriumReport(
        regime=regime,
        prior=q,
        period1_split=period1,
        period2_policy=period2,
        receiver_payoff=cost,
        sender_cost=cost,
        attains_lower_bound=abs(cost - floor) <= EQ_TOL,
    )


def unconditional_equilibrium(q: float, params: GameParams) -> EquilibriumReport:
    check_belief(q)
    q_i = thresholds(params).q_i
    period1 = make_split(q, q_i) if q > q_i else None
    return _report(Regime.UNCONDITIONAL, q, params, period1, {})


def _deterrence_plan(q: float, params: GameParams, cutoff: float, trigger):
    """Silent period 1 up to ``cutoff``; beyond it, split off certainty down to ``cutoff``.

    On the pooled branch the sender promises a period-2 split ``<xi(r);1>``
    (where r is the pooled belief) after the ``trigger`` condition, which
    leaves the receiver indifferent about acting in period 1.
    """
    t = thresholds(params)
    if q <= t.q_i:
        return None, {}
    if q <= cutoff:
        return None, {(Message.l, trigger): make_split(q, xi(q, params))}
    period1 = make_split(q, cutoff)
    if period1.branch(Message.l) is None:
        return period1, {}
    return period1, {(Message.l, trigger): make_split(cutoff, xi(cutoff, params))}


def action_based_equilibrium(q: float, params: GameParams) -> EquilibriumReport:
    check_belief(q)
    t = thresholds(params)
    period1, period2 = _deterrence_plan(q, params, t.p_star, Action.R)
    return _report(Regime.ACTION_BASED, q, params, period1, period2)


def signal_based_equilibrium(q: float, params: GameParams) -> EquilibriumReport:
    check_belief(q)
    t = thresholds(params)
    cutoff = t.p_e if t.p_e is not None else t.p_star
    period1, period2 = _deterrence_plan(q, params, cutoff, Signal.POS)
    return _report(Regime.SIGNAL_BASED, q, params, period1, period2)


def equilibrium(regime: Regime, q: float, params: GameParams) -> EquilibriumReport:
    return {
        Regime.UNCONDITIONAL: unconditional_equilibrium,
        Regime.ACTION_BASED: action_based_equilibrium,
        Regime.SIGNAL_BASED: signal_based_equilibrium,
    }[regime](q, params)


# ---------------------------------------------------------------------------
# Cost curves before period-1 splitting


def action_precvx_cost(q: float, params: GameParams) -> float:
    """Cost when the receiver is let act in period 1 above p_star."""
    check_belief(q)
    t = thresholds(params)
    if q < t.p_star:
        raise ParameterError(f"action_precvx_cost needs q >= p_star={t.p_star}, got {q}")
    if q < t.q_ii:
        return 1.0 + q * params.alpha_g + (1.0 - q) * params.alpha_l
    return 2.0


def signal_precvx_cost(q: float, params: GameParams) -> float:
    """Cheapest cost with period-2 signal-contingent disclosure only.

    Piecewise: the benchmark payoff up to p_e, then the cost of deterring
    the act-and-follow-(+, g) deviation, then the cost of letting the
    receiver act in period 1 while revealing after a positive signal, and
    finally the cost of revealing after either signal.
    """
    check_belief(q)
    t = thresholds(params)
    if t.p_e is None:
        raise ParameterError(
            f"signal_precvx_cost is undefined for alpha_g={params.alpha_g} <= 1/2"
        )
    c, ag, al = params.c, params.alpha_g, params.alpha_l
    if q <= t.p_e:
        return float(pi(q, params))
    if q <= t.p_star_star:
        return stage_payoff(q, params) / (1.0 - ag)
    if q <= t.q_ii:
        return 1.0 + q * ag - (1.0 - q) * al * c
    return 1.0 + (q - t.q_m) / (1.0 - t.q_m)


def gamma_hat_unconditional(q: float, params: GameParams) -> float:
    """Smallest period-2 revelation probability that deters acting in period 1.

    Applies to a silent period 1 followed by an unconditional extreme split
    in period 2. The returned value never undercuts the unconditional cost.
    """
    t = thresholds(params)
    if not t.q_i <= q <= t.q_m or q == 0:
        raise ParameterError(f"gamma_hat_unconditional needs q in [q_i, q_m] = [{t.q_i}, {t.q_m}], got {q}")
    c, ag, al = params.c, params.alpha_g, params.alpha_l
    scaled = (stage_payoff(q, params) + q * ag - (1.0 - q) * al * c) / ag
    if scaled < unconditional_cost(q, params) - EQ_TOL:
        raise ConsistencyError(f"q*gamma_hat={scaled} undercuts the unconditional cost at q={q}")
    return scaled / q
