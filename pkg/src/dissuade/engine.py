"""Exact evaluation of the two-period game for arbitrary strategy pairs.

The sender's plan fixes a joint law over (state, period-1 message, signal,
period-2 message) once the receiver's period-1 action is known. The engine
tabulates that law as leaf masses per state; every statistic, the receiver's
best response and the Monte Carlo playout are read off the same table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .model import (
    ACTIONS,
    EQ_TOL,
    MESSAGES,
    SIGNALS,
    Action,
    BeliefSplit,
    ConsistencyError,
    GameParams,
    Message,
    ParameterError,
    Regime,
    Signal,
    State,
    check_belief,
    silent_split,
)

# Payoff ties within this tolerance count as indifference for the receiver.
TIE_TOL = 1e-12

History = tuple[Message, Action, Signal, Message]


@dataclass(frozen=True)
class SenderStrategy:
    """A committed messaging plan.

    ``period2`` maps (period-1 message, condition) to the split applied to the
    belief reached on that branch; a missing key or ``None`` means silence.
    The condition is ``None``, an ``Action`` or a ``Signal`` depending on ``mode``.
    """

    mode: Regime
    period1: BeliefSplit
    period2: Mapping[tuple, BeliefSplit | None] = field(default_factory=dict)

    def __post_init__(self) -> None:
        allowed = self.mode.condition_values()
        for (m1, cond), split in self.period2.items():
            if cond not in allowed:
                raise ParameterError(f"condition {cond!r} is not observable in {self.mode.value} mode")
            if split is None:
                continue
            branch = self.period1.branch(m1)
            if branch is None or branch.probability == 0:
                raise ParameterError(f"period-2 split keyed on message {m1.value}, which is never sent")
            if abs(split.prior - branch.posterior) > EQ_TOL:
                raise ParameterError(
                    f"period-2 split after {m1.value} starts from {split.prior}, "
                    f"but the belief on that branch is {branch.posterior}"
                )

    @property
    def prior(self) -> float:
        return self.period1.prior

    def kernel(self, m1: Message, action: Action, signal: Signal) -> BeliefSplit | None:
        return self.period2.get((m1, self.mode.condition(action, signal)))


@dataclass(frozen=True)
class ReceiverStrategy:
    period1: Mapping[Message, Action]
    period2: Mapping[History, Action]

    def encoding(self) -> tuple:
        """Choices in canonical order; best-response ties break on this tuple."""
        first = tuple((m.value, a.value) for m, a in sorted(self.period1.items()))
        second = tuple(
            ("".join(x.value for x in h), a.value) for h, a in sorted(self.period2.items())
        )
        return first + second

    def action1(self, m1: Message) -> Action:
        try:
            return self.period1[m1]
        except KeyError:
            raise ParameterError(f"receiver strategy has no period-1 action after {m1.value}") from None

    def action2(self, history: History) -> Action:
        try:
            return self.period2[history]
        except KeyError:
            label = "".join(x.value for x in history)
            raise ParameterError(f"receiver strategy has no period-2 action at history {label}") from None


@dataclass(frozen=True)
class OutcomeStats:
    receiver_payoff: float
    sender_cost: float
    prob_act_period1: float
    prob_act_period2: float
    prob_act_at_interior_belief: float

    def as_dict(self) -> dict[str, float]:
        return {
            "receiver_payoff": self.receiver_payoff,
            "sender_cost": self.sender_cost,
            "prob_act_period1": self.prob_act_period1,
            "prob_act_period2": self.prob_act_period2,
            "prob_act_at_interior_belief": self.prob_act_at_interior_belief,
        }


@dataclass(frozen=True)
class Path:
    """One terminal history with its probability and the beliefs met along it."""

    state: State
    m1: Message
    a1: Action
    signal: Signal
    m2: Message
    a2: Action
    probability: float
    belief1: float
    belief2: float


# ---------------------------------------------------------------------------
# Leaf table


def _signal_prob(action: Action, state: State, signal: Signal, params: GameParams) -> float:
    if action is Action.R:
        return 1.0 if signal is Signal.POS else 0.0
    return params.signal_prob(state, signal)


def _kernel_prob(kernel: BeliefSplit | None, m2: Message, state: State) -> float:
    if kernel is None:
        return 1.0 if m2 is Message.l else 0.0
    return kernel.message_prob(m2, state)


@dataclass
class _Table:
    m1_mass: dict[Message, tuple[float, float]]  # (P(G, m1), P(L, m1))
    leaves: dict[History, tuple[float, float]]  # (P(G, history), P(L, history)) given a1
    domain: dict[tuple[Message, Action], list[History]]  # period-2 histories needing a choice


def _tabulate(sender: SenderStrategy, q: float, params: GameParams) -> _Table:
    check_belief(q)
    if abs(sender.prior - q) > EQ_TOL:
        raise ParameterError(f"sender strategy was built for prior {sender.prior}, evaluated at {q}")
    weights = {State.G: q, State.L: 1.0 - q}
    m1_mass = {}
    for m1 in MESSAGES:
        masses = tuple(weights[s] * sender.period1.message_prob(m1, s) for s in State)
        if sum(masses) > 0:
            m1_mass[m1] = masses
    leaves: dict[History, tuple[float, float]] = {}
    domain: dict[tuple[Message, Action], list[History]] = {}
    for m1, (mg, ml) in m1_mass.items():
        for a1 in ACTIONS:
            keys = []
            for signal in SIGNALS:
                kernel = sender.kernel(m1, a1, signal)
                for m2 in MESSAGES:
                    pg = mg * _signal_prob(a1, State.G, signal, params) * _kernel_prob(kernel, m2, State.G)
                    pl = ml * _signal_prob(a1, State.L, signal, params) * _kernel_prob(kernel, m2, State.L)
                    history = (m1, a1, signal, m2)
                    leaves[history] = (pg, pl)
                    # The message must be one the sender could send given what it knows
                    # on this branch, whether or not this signal can occur after a1.
                    possible_g = mg > 0 and _kernel_prob(kernel, m2, State.G) > 0
                    possible_l = ml > 0 and _kernel_prob(kernel, m2, State.L) > 0
                    if possible_g or possible_l:
                        keys.append(history)
            domain[(m1, a1)] = keys
    return _Table(m1_mass, leaves, domain)


def _interior(mass_g: float, mass_l: float) -> bool:
    return mass_g > 0 and mass_l > 0


def path_distribution(
    sender: SenderStrategy, receiver: ReceiverStrategy, q: float, params: GameParams
) -> list[Path]:
    """All positive-probability terminal histories under the strategy pair."""
    table = _tabulate(sender, q, params)
    paths = []
    for m1, (mg, ml) in table.m1_mass.items():
        a1 = receiver.action1(m1)
        belief1 = mg / (mg + ml)
        for signal in SIGNALS:
            for m2 in MESSAGES:
                pg, pl = table.leaves[(m1, a1, signal, m2)]
                if pg + pl == 0:
                    continue
                a2 = receiver.action2((m1, a1, signal, m2))
                belief2 = pg / (pg + pl)
                for state, mass in ((State.G, pg), (State.L, pl)):
                    if mass > 0:
                        paths.append(Path(state, m1, a1, signal, m2, a2, mass, belief1, belief2))
    return paths


def evaluate_exact(
    sender: SenderStrategy, receiver: ReceiverStrategy, q: float, params: GameParams
) -> OutcomeStats:
    paths = path_distribution(sender, receiver, q, params)
    total = sum(p.probability for p in paths)
    if abs(total - 1.0) > EQ_TOL:
        raise ConsistencyError(f"path probabilities sum to {total!r}")
    payoff = cost1 = cost2 = interior = 0.0
    for p in paths:
        stage = 1.0 if p.state is State.G else -params.c
        acts1 = p.a1 is Action.A
        acts2 = p.a2 is Action.A
        payoff += p.probability * stage * (acts1 + acts2)
        cost1 += p.probability * acts1
        cost2 += p.probability * acts2
        if (acts1 and 0 < p.belief1 < 1) or (acts2 and 0 < p.belief2 < 1):
            interior += p.probability
    return OutcomeStats(payoff, cost1 + cost2, cost1, cost2, interior)


# ---------------------------------------------------------------------------
# Receiver strategy space


@dataclass
class _LocalOptions:
    """Every (period-1 action, period-2 plan) available after one period-1 message."""

    choices: list[tuple[Action, tuple[History, ...], tuple[Action, ...]]]
    payoff: np.ndarray
    cost: np.ndarray


def _local_options(table: _Table, m1: Message, params: GameParams) -> _LocalOptions:
    mg, ml = table.m1_mass[m1]
    choices, payoffs, costs = [], [], []
    for a1 in ACTIONS:
        keys = tuple(table.domain[(m1, a1)])
        base_pay = (mg - params.c * ml) if a1 is Action.A else 0.0
        base_cost = (mg + ml) if a1 is Action.A else 0.0
        leaf_pay = np.array([table.leaves[k][0] - params.c * table.leaves[k][1] for k in keys])
        leaf_cost = np.array([sum(table.leaves[k]) for k in keys])
        for plan in itertools.product(ACTIONS, repeat=len(keys)):
            mask = np.array([a is Action.A for a in plan], dtype=bool)
            choices.append((a1, keys, plan))
            payoffs.append(base_pay + float(leaf_pay[mask].sum()) if keys else base_pay)
            costs.append(base_cost + float(leaf_cost[mask].sum()) if keys else base_cost)
    return _LocalOptions(choices, np.array(payoffs), np.array(costs))


def _assemble(picks: list[tuple[Message, tuple]]) -> ReceiverStrategy:
    period1, period2 = {}, {}
    for m1, (a1, keys, plan) in picks:
        period1[m1] = a1
        period2.update(zip(keys, plan))
    return ReceiverStrategy(period1, period2)


def enumerate_receiver_strategies(
    sender: SenderStrategy, q: float, params: GameParams
) -> list[ReceiverStrategy]:
    """All pure receiver strategies over the histories the sender can reach.

    Strategies are reduced: after each period-1 message the receiver picks an
    action, then a period-2 choice at both signals (a positive one only, in
    effect, after R) for every message the sender may send there. Against a
    silent sender this gives 2 * 2**2 = 8 strategies; the largest space,
    two messages each followed by two possible messages at either signal,
    has (2 * 2**4)**2 = 1024.
    """
    table = _tabulate(sender, q, params)
    per_message = [
        [(m1, choice) for choice in _local_options(table, m1, params).choices] for m1 in table.m1_mass
    ]
    return [_assemble(list(combo)) for combo in itertools.product(*per_message)]


def best_response(
    sender: SenderStrategy, q: float, params: GameParams
) -> tuple[ReceiverStrategy, float]:
    """Payoff-maximising receiver strategy; ties go to the lower sender cost, then enumeration order."""
    table = _tabulate(sender, q, params)
    options = [(m1, _local_options(table, m1, params)) for m1 in table.m1_mass]
    payoff = np.zeros(1)
    cost = np.zeros(1)
    for _, opt in options:
        payoff = np.add.outer(payoff, opt.payoff).ravel()
        cost = np.add.outer(cost, opt.cost).ravel()
    best = payoff.max()
    tied = payoff >= best - TIE_TOL
    cheapest = cost[tied].min()
    index = int(np.flatnonzero(tied & (cost <= cheapest + TIE_TOL))[0])
    sizes = [len(opt.choices) for _, opt in options]
    picks = []
    for (m1, opt), pos in zip(options, np.unravel_index(index, sizes)):
        picks.append((m1, opt.choices[int(pos)]))
    return _assemble(picks), float(payoff[index])


def ic_check(
    sender: SenderStrategy, claimed: ReceiverStrategy, q: float, params: GameParams
) -> float:
    """Largest payoff gain any receiver deviation achieves over ``claimed``."""
    _, best = best_response(sender, q, params)
    return best - evaluate_exact(sender, claimed, q, params).receiver_payoff


# ---------------------------------------------------------------------------
# Named receiver strategies


def receiver_from_rules(
    sender: SenderStrategy,
    q: float,
    params: GameParams,
    first: Callable[[Message], Action],
    second: Callable[[History], Action],
) -> ReceiverStrategy:
    """Build a strategy from rules, in the same reduced form the enumeration uses.

    Period-2 choices are recorded only after the period-1 action the rule
    itself takes, so equal behaviour gives equal encodings.
    """
    table = _tabulate(sender, q, params)
    period1, period2 = {}, {}
    for m1 in table.m1_mass:
        a1 = period1[m1] = first(m1)
        for history in table.domain[(m1, a1)]:
            period2[history] = second(history)
    return ReceiverStrategy(period1, period2)


def compliance(sender: SenderStrategy, q: float, params: GameParams) -> ReceiverStrategy:
    """Act exactly when told g: in period 1 after g, in period 2 after g in either period."""
    return receiver_from_rules(
        sender,
        q,
        params,
        lambda m1: Action.A if m1 is Message.g else Action.R,
        lambda h: Action.A if Message.g in (h[0], h[3]) else Action.R,
    )


def rule_rr(sender: SenderStrategy, q: float, params: GameParams) -> ReceiverStrategy:
    return receiver_from_rules(sender, q, params, lambda m1: Action.R, lambda h: Action.R)


def rule_aa(sender: SenderStrategy, q: float, params: GameParams) -> ReceiverStrategy:
    return receiver_from_rules(sender, q, params, lambda m1: Action.A, lambda h: Action.A)


def rule_ac(sender: SenderStrategy, q: float, params: GameParams) -> ReceiverStrategy:
    """Act, then act again iff the signal was positive; messages ignored."""
    return receiver_from_rules(
        sender,
        q,
        params,
        lambda m1: Action.A,
        lambda h: Action.A if h[2] is Signal.POS else Action.R,
    )


def silent_sender(q: float, mode: Regime = Regime.UNCONDITIONAL) -> SenderStrategy:
    return SenderStrategy(mode, silent_split(q), {})


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class SimulationResult:
    mean: OutcomeStats
    standard_error: OutcomeStats
    n: int
    seed: int


def simulate(
    sender: SenderStrategy,
    receiver: ReceiverStrategy,
    q: float,
    params: GameParams,
    n: int,
    seed: int,
) -> SimulationResult:
    """Seeded playouts of the strategy pair.

    Uses numpy's PCG64 generator (``default_rng(seed)``) and draws an ``(n, 4)``
    block of uniforms. Column order per path is fixed: state, period-1 message,
    signal, period-2 message. A signal uniform is consumed even after R.
    Standard errors use the sample standard deviation (nan when n == 1).
    """
    if n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    check_belief(q)
    u = np.random.default_rng(seed).random((n, 4))
    is_g = u[:, 0] < q

    act1 = np.zeros(n)
    act2 = np.zeros(n)
    interior = np.zeros(n, dtype=bool)
    table = _tabulate(sender, q, params)

    # Period-1 message: g iff its uniform falls below P(g | state).
    pg1 = np.where(is_g, sender.period1.message_prob(Message.g, State.G), sender.period1.message_prob(Message.g, State.L))
    m1_is_g = u[:, 1] < pg1
    for m1 in MESSAGES:
        on_m1 = m1_is_g if m1 is Message.g else ~m1_is_g
        if not on_m1.any():
            continue
        mg, ml = table.m1_mass[m1]
        a1 = receiver.action1(m1)
        if a1 is Action.A:
            alpha = np.where(is_g, params.alpha_g, params.alpha_l)
            positive = u[:, 2] < alpha
        else:
            positive = np.ones(n, dtype=bool)
        for signal in SIGNALS:
            branch = on_m1 & (positive if signal is Signal.POS else ~positive)
            if not branch.any():
                continue
            kernel = sender.kernel(m1, a1, signal)
            pg2 = np.where(is_g, _kernel_prob(kernel, Message.g, State.G), _kernel_prob(kernel, Message.g, State.L))
            m2_is_g = u[:, 3] < pg2
            for m2 in MESSAGES:
                leaf = branch & (m2_is_g if m2 is Message.g else ~m2_is_g)
                if not leaf.any():
                    continue
                history = (m1, a1, signal, m2)
                a2 = receiver.action2(history)
                lg, ll = table.leaves[history]
                acts1 = a1 is Action.A
                acts2 = a2 is Action.A
                act1[leaf] = acts1
                act2[leaf] = acts2
                interior[leaf] = (acts1 and _interior(mg, ml)) or (acts2 and _interior(lg, ll))
    stage = np.where(is_g, 1.0, -params.c)
    payoff = stage * (act1 + act2)
    columns = [payoff, act1 + act2, act1, act2, interior.astype(float)]
    means = [float(col.mean()) for col in columns]
    if n > 1:
        errors = [float(col.std(ddof=1) / np.sqrt(n)) for col in columns]
    else:
        errors = [float("nan")] * len(columns)
    return SimulationResult(OutcomeStats(*means), OutcomeStats(*errors), n, seed)
