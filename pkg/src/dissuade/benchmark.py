"""The no-information benchmark: the receiver's own explore/exploit problem.

``pi`` and ``n_cost`` accept scalars or numpy arrays of beliefs so that
sweeps and ordering checks can evaluate whole grids at once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import EQ_TOL, ConsistencyError, GameParams, check_belief, stage_payoff, thresholds


class BenchmarkStrategy(enum.Enum):
    RR = "RR"  # refrain twice
    AC = "AC"  # act, then act again iff the signal was positive
    AA = "AA"  # act twice


@dataclass(frozen=True)
class BenchmarkReport:
    strategy: BenchmarkStrategy
    receiver_payoff: float
    sender_cost: float


def _scalar_or_array(value, scalar: bool):
    return float(value) if scalar else value


def pi(q, params: GameParams):
    """Receiver's optimal two-period payoff when the sender says nothing."""
    scalar = np.ndim(q) == 0
    q = np.asarray(q, dtype=float)
    t = thresholds(params)
    c, ag, al = params.c, params.alpha_g, params.alpha_l
    ac = q * (1 + ag) - (1 - q) * (1 + al) * c
    aa = 2 * stage_payoff(q, params)
    out = np.where(q <= t.q_i, 0.0, np.where(q <= t.q_ii, ac, aa))
    return _scalar_or_array(out, scalar)


def n_cost(q, params: GameParams):
    """Expected number of acts under the benchmark receiver strategy."""
    scalar = np.ndim(q) == 0
    q = np.asarray(q, dtype=float)
    t = thresholds(params)
    ac = 1 + q * params.alpha_g + (1 - q) * params.alpha_l
    out = np.where(q <= t.q_i, 0.0, np.where(q <= t.q_ii, ac, 2.0))
    return _scalar_or_array(out, scalar)


def strategy_payoffs(q: float, params: GameParams) -> dict[BenchmarkStrategy, float]:
    c, ag, al = params.c, params.alpha_g, params.alpha_l
    u = stage_payoff(q, params)
    return {
        BenchmarkStrategy.RR: 0.0,
        BenchmarkStrategy.AC: u + ag * q - al * (1 - q) * c,
        BenchmarkStrategy.AA: 2 * u,
    }


def optimal_no_info(q: float, params: GameParams) -> BenchmarkReport:
    check_belief(q)
    t = thresholds(params)
    if q <= t.q_i:
        strategy = BenchmarkStrategy.RR
    elif q <= t.q_ii:
        strategy = BenchmarkStrategy.AC
    else:
        strategy = BenchmarkStrategy.AA
    payoffs = strategy_payoffs(q, params)
    best = max(payoffs.values())
    if abs(best - payoffs[strategy]) > EQ_TOL or abs(best - pi(q, params)) > EQ_TOL:
        raise ConsistencyError(f"benchmark strategy {strategy.value} is not optimal at q={q}")
    return BenchmarkReport(strategy, payoffs[strategy], n_cost(q, params))
