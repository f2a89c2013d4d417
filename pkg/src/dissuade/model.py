"""Game primitives, belief arithmetic, belief splits and threshold beliefs."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.optimize import brentq

# Equality checks on closed forms; comparisons use ORDER_TOL.
EQ_TOL = 1e-12
ORDER_TOL = 1e-9


class ParameterError(ValueError):
    """Raised for invalid game parameters or out-of-domain beliefs."""


class ConsistencyError(RuntimeError):
    """Raised when derived quantities violate an invariant they must satisfy."""


class State(enum.Enum):
    G = "G"
    L = "L"


class Message(enum.Enum):
    g = "g"
    l = "l"  # noqa: E741

    def __lt__(self, other: Message) -> bool:
        return _MESSAGE_ORDER[self] < _MESSAGE_ORDER[other]


class Signal(enum.Enum):
    POS = "+"
    NEG = "-"

    def __lt__(self, other: Signal) -> bool:
        return _SIGNAL_ORDER[self] < _SIGNAL_ORDER[other]


class Action(enum.Enum):
    R = "R"
    A = "A"

    def __lt__(self, other: Action) -> bool:
        return _ACTION_ORDER[self] < _ACTION_ORDER[other]


_MESSAGE_ORDER = {Message.g: 0, Message.l: 1}
_SIGNAL_ORDER = {Signal.POS: 0, Signal.NEG: 1}
_ACTION_ORDER = {Action.R: 0, Action.A: 1}

MESSAGES = (Message.g, Message.l)
SIGNALS = (Signal.POS, Signal.NEG)
ACTIONS = (Action.R, Action.A)


class Regime(enum.Enum):
    """What the sender's period-2 message may condition on."""

    UNCONDITIONAL = "unconditional"
    ACTION_BASED = "action"
    SIGNAL_BASED = "signal"

    def condition_values(self) -> tuple:
        if self is Regime.UNCONDITIONAL:
            return (None,)
        return ACTIONS if self is Regime.ACTION_BASED else SIGNALS

    def condition(self, action: Action, signal: Signal):
        """The condition value the sender observes after ``action`` produced ``signal``."""
        if self is Regime.UNCONDITIONAL:
            return None
        return action if self is Regime.ACTION_BASED else signal


@dataclass(frozen=True)
class GameParams:
    """Loss magnitude ``c`` in state L and positive-signal likelihoods per state.

    Construction validates the parameters, so every instance in circulation
    satisfies ``c > 0`` and ``0 < alpha_l < alpha_g < 1``.
    """

    c: float
    alpha_g: float
    alpha_l: float

    def __post_init__(self) -> None:
        validate_params(self)

    def signal_prob(self, state: State, signal: Signal) -> float:
        """Probability of ``signal`` in ``state`` when the receiver acts."""
        alpha = self.alpha_g if state is State.G else self.alpha_l
        return alpha if signal is Signal.POS else 1.0 - alpha

    def as_dict(self) -> dict[str, float]:
        return {"c": self.c, "alpha_g": self.alpha_g, "alpha_l": self.alpha_l}


def validate_params(params: GameParams) -> GameParams:
    c, ag, al = params.c, params.alpha_g, params.alpha_l
    for name, value in (("c", c), ("alpha_g", ag), ("alpha_l", al)):
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ParameterError(f"{name} must be a finite real number, got {value!r}")
    if c <= 0:
        raise ParameterError(f"c must be positive, got {c}")
    for name, value in (("alpha_g", ag), ("alpha_l", al)):
        if not 0.0 < value < 1.0:
            raise ParameterError(f"{name} must lie in the open interval (0, 1), got {value}")
    if not al < ag:
        raise ParameterError(f"alpha ordering violated: need alpha_l < alpha_g, got {al} >= {ag}")
    return params


def check_belief(q: float, name: str = "q") -> float:
    if not 0.0 <= q <= 1.0:
        raise ParameterError(f"{name} must be a probability in [0, 1], got {q}")
    return float(q)


def stage_payoff(q, params: GameParams):
    """Receiver's expected one-period payoff from acting at belief ``q``."""
    return q - (1 - q) * params.c


def posterior_update(q: float, signal: Signal, params: GameParams) -> float:
    """Bayes update of the belief in G after observing an action's signal."""
    check_belief(q)
    if q in (0.0, 1.0):
        return q
    like_g = params.signal_prob(State.G, signal)
    like_l = params.signal_prob(State.L, signal)
    return q * like_g / (q * like_g + (1 - q) * like_l)


# ---------------------------------------------------------------------------
# Belief splits


@dataclass(frozen=True)
class Branch:
    message: Message
    posterior: float
    probability: float


@dataclass(frozen=True)
class BeliefSplit:
    """A two-message information structure, described by the posteriors it induces.

    ``gamma`` is the probability of message g in state G. The kernel of the
    structure (message probabilities per state) is recovered from the branches
    by Bayes' rule, so the split is the single source of truth for both the
    posteriors and the messaging behaviour.
    """

    prior: float
    branches: tuple[Branch, ...]
    gamma: float

    def __post_init__(self) -> None:
        total = sum(b.probability for b in self.branches)
        mean = sum(b.probability * b.posterior for b in self.branches)
        if abs(total - 1.0) > EQ_TOL:
            raise ConsistencyError(f"split probabilities sum to {total!r}")
        if abs(mean - self.prior) > EQ_TOL:
            raise ConsistencyError(f"split is not Bayes plausible: mean {mean!r} != prior {self.prior!r}")

    @property
    def is_silent(self) -> bool:
        return all(b.message is Message.l for b in self.branches)

    def branch(self, message: Message) -> Branch | None:
        for b in self.branches:
            if b.message is message:
                return b
        return None

    def support(self) -> tuple[Message, ...]:
        return tuple(b.message for b in self.branches if b.probability > 0)

    def message_prob(self, message: Message, state: State) -> float:
        """P(message | state). A state with zero prior mass is sent message l."""
        weight = self.prior if state is State.G else 1.0 - self.prior
        if weight == 0.0:
            return 1.0 if message is Message.l else 0.0
        b = self.branch(message)
        if b is None:
            return 0.0
        mass = b.posterior if state is State.G else 1.0 - b.posterior
        return b.probability * mass / weight

    def posterior(self, message: Message) -> float:
        b = self.branch(message)
        if b is None:
            raise ParameterError(f"message {message.value} is never sent by this split")
        return b.posterior


def silent_split(q: float) -> BeliefSplit:
    """The uninformative structure: message l in both states."""
    check_belief(q)
    return BeliefSplit(q, (Branch(Message.l, q, 1.0),), 0.0)


def make_split(q: float, r: float) -> BeliefSplit:
    """Split ``q`` into the posteriors ``r`` (message l) and 1 (message g)."""
    check_belief(q)
    check_belief(r, "r")
    if r > q:
        raise ParameterError(f"cannot split q={q} into <{r};1>: need r <= q")
    if r == q:
        return silent_split(q)
    if q == 1.0:
        return BeliefSplit(q, (Branch(Message.g, 1.0, 1.0),), 1.0)
    gamma = (q - r) / ((1 - r) * q)
    p_g = (q - r) / (1 - r)
    return BeliefSplit(q, (Branch(Message.g, 1.0, p_g), Branch(Message.l, r, 1.0 - p_g)), gamma)


def split_with_gamma(q: float, gamma: float) -> BeliefSplit:
    """Reveal G with probability ``gamma`` and pool otherwise (an extreme split)."""
    check_belief(q)
    check_belief(gamma, "gamma")
    if gamma == 0.0 or q == 0.0:
        return silent_split(q)
    if q == 1.0:
        return BeliefSplit(1.0, (Branch(Message.g, 1.0, gamma), Branch(Message.l, 1.0, 1.0 - gamma)), gamma)
    if gamma == 1.0:
        return make_split(q, 0.0)
    p_g = q * gamma
    r = (1 - gamma) * q / (1 - p_g)
    return BeliefSplit(q, (Branch(Message.g, 1.0, p_g), Branch(Message.l, r, 1.0 - p_g)), gamma)


# ---------------------------------------------------------------------------
# Thresholds


@dataclass(frozen=True)
class Thresholds:
    q_i: float
    q_ii: float
    q_m: float
    p_star: float
    p_star_star: float | None = None
    p_e: float | None = None

    def as_dict(self) -> dict[str, float | None]:
        return {
            "q_i": self.q_i,
            "q_ii": self.q_ii,
            "q_m": self.q_m,
            "p_star": self.p_star,
            "p_star_star": self.p_star_star,
            "p_e": self.p_e,
        }


def _ac_payoff(q: float, params: GameParams) -> float:
    c, ag, al = params.c, params.alpha_g, params.alpha_l
    return q * (1 + ag) - (1 - q) * (1 + al) * c


def _signal_ic_gap(q: float, params: GameParams) -> float:
    # positive where the act-then-follow-(+,g) deviation is the tighter constraint
    return stage_payoff(q, params) / (1 - params.alpha_g) - _ac_payoff(q, params)


@lru_cache(maxsize=4096)
def thresholds(params: GameParams) -> Thresholds:
    c, ag, al = params.c, params.alpha_g, params.alpha_l
    q_i = c * (1 + al) / ((1 + ag) + c * (1 + al))
    q_ii = c * (1 - al) / ((1 - ag) + c * (1 - al))
    q_m = c / (1 + c)
    if 2 * ag - al <= 1:
        p_star = 2 * c / (1 + 2 * c)
    else:
        p_star = (1 + al) * c / (ag + (1 + al) * c)

    p_star_star = p_e = None
    if ag > 0.5:
        p_star_star = c / (ag + c)
        k = 1 - (1 + al) * (1 - ag)
        p_e = c * k / (ag * ag + c * k)
        residual = abs(_signal_ic_gap(p_e, params))
        if residual > EQ_TOL:
            raise ConsistencyError(f"p_e residual {residual:.3e} exceeds {EQ_TOL}")
        hi = min(p_star, q_ii)
        root = brentq(_signal_ic_gap, q_m, hi, args=(params,), xtol=1e-15)
        if abs(root - p_e) > 1e-10:
            raise ConsistencyError(f"p_e closed form {p_e!r} disagrees with bracketed root {root!r}")

    t = Thresholds(q_i, q_ii, q_m, p_star, p_star_star, p_e)
    _check_thresholds(t, params)
    return t


def _check_thresholds(t: Thresholds, params: GameParams) -> None:
    problems = []
    if not 0 < t.q_i < t.q_m < t.q_ii < 1:
        problems.append("0 < q_i < q_m < q_ii < 1")
    if not t.p_star > t.q_m:
        problems.append("p_star > q_m")
    if (t.p_star >= t.q_ii - EQ_TOL) != (2 * params.alpha_g - params.alpha_l <= 1):
        problems.append("p_star >= q_ii iff 2 alpha_g - alpha_l <= 1")
    if t.p_e is not None:
        if not t.q_m < t.p_e < min(t.p_star, t.q_ii):
            problems.append("q_m < p_e < min(p_star, q_ii)")
        if not t.p_e < t.p_star_star:
            problems.append("p_e < p_star_star")
    if problems:
        raise ConsistencyError(f"threshold invariants violated for {params}: {', '.join(problems)}")


def xi(q: float, params: GameParams) -> float:
    """Posterior left after the l message when G is revealed with probability pi(q)/q.

    Defined for ``q <= p_star``, where the promise of revealing G in period 2
    is worth exactly the no-information payoff.
    """
    from .benchmark import pi

    check_belief(q)
    p_star = thresholds(params).p_star
    if q > p_star + EQ_TOL:
        raise ParameterError(f"xi(q) is negative for q={q} > p_star={p_star}")
    v = pi(q, params)
    return max(0.0, (q - v) / (1 - v))
