import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import REF, game_params
from dissuade.engine import (
    ReceiverStrategy,
    SenderStrategy,
    best_response,
    compliance,
    enumerate_receiver_strategies,
    evaluate_exact,
    ic_check,
    path_distribution,
    receiver_from_rules,
    rule_aa,
    rule_ac,
    rule_rr,
    silent_sender,
    simulate,
)
from dissuade.model import (
    Action,
    BeliefSplit,
    Branch,
    Message,
    ParameterError,
    Regime,
    Signal,
    make_split,
    split_with_gamma,
    thresholds,
)
from dissuade.scenarios import equilibrium


def canonical(regime, q, params=REF):
    sender = equilibrium(regime, q, params).sender_strategy()
    return sender, compliance(sender, q, params)


class TestEvaluateExact:
    def test_silent_sender_with_benchmark_play(self):
        s = silent_sender(0.6)
        stats = evaluate_exact(s, rule_ac(s, 0.6, REF), 0.6, REF)
        assert stats.receiver_payoff == pytest.approx(0.55, abs=1e-12)
        assert stats.sender_cost == pytest.approx(1.55, abs=1e-12)

    def test_unconditional_equilibrium_pair(self):
        sender, receiver = canonical(Regime.UNCONDITIONAL, 0.6)
        stats = evaluate_exact(sender, receiver, 0.6, REF)
        assert stats.receiver_payoff == pytest.approx(0.628571428571, abs=1e-11)
        assert stats.sender_cost == pytest.approx(stats.receiver_payoff, abs=1e-12)

    def test_refraining_is_free(self):
        s = silent_sender(0.6)
        stats = evaluate_exact(s, rule_rr(s, 0.6, REF), 0.6, REF)
        assert (stats.receiver_payoff, stats.sender_cost) == (0.0, 0.0)

    def test_cost_splits_by_period(self):
        sender, receiver = canonical(Regime.ACTION_BASED, 0.8)
        stats = evaluate_exact(sender, receiver, 0.8, REF)
        assert stats.sender_cost == pytest.approx(stats.prob_act_period1 + stats.prob_act_period2, abs=1e-15)

    def test_missing_history_is_an_error(self):
        s = silent_sender(0.6)
        partial = ReceiverStrategy({Message.l: Action.A}, {})
        with pytest.raises(ParameterError, match="history"):
            evaluate_exact(s, partial, 0.6, REF)

    def test_prior_mismatch_is_an_error(self):
        s = silent_sender(0.6)
        with pytest.raises(ParameterError, match="prior"):
            evaluate_exact(s, rule_rr(s, 0.6, REF), 0.5, REF)

    @settings(max_examples=60, deadline=None)
    @given(
        game_params(),
        st.floats(0.0, 1.0),
        st.floats(0.0, 1.0),
        st.floats(0.0, 1.0),
        st.floats(0.0, 1.0),
        st.sampled_from(list(Regime)),
    )
    def test_paths_carry_unit_mass(self, params, q, frac, g1, g2, regime):
        sender = _family_sender(regime, q, q * frac, g1, g2)
        receiver, _ = best_response(sender, q, params)
        total = sum(p.probability for p in path_distribution(sender, receiver, q, params))
        assert abs(total - 1.0) <= 1e-12
        stats = evaluate_exact(sender, receiver, q, params)
        for value in (stats.prob_act_period1, stats.prob_act_period2, stats.prob_act_at_interior_belief):
            assert -1e-15 <= value <= 1 + 1e-12


def _family_sender(regime, q, r1, g1, g2):
    period1 = make_split(q, r1)
    conds = regime.condition_values()
    period2 = {}
    if period1.branch(Message.l) is not None:
        for cond, gamma in zip(conds, (g1, g2)):
            period2[(Message.l, cond)] = split_with_gamma(r1, gamma)
    return SenderStrategy(regime, period1, period2)


class TestSenderStrategy:
    def test_rejects_wrong_condition_type(self):
        with pytest.raises(ParameterError, match="observable"):
            SenderStrategy(Regime.ACTION_BASED, make_split(0.5, 0.5), {(Message.l, Signal.POS): make_split(0.5, 0.2)})

    def test_rejects_split_from_wrong_belief(self):
        with pytest.raises(ParameterError, match="belief on that branch"):
            SenderStrategy(Regime.ACTION_BASED, make_split(0.5, 0.5), {(Message.l, Action.R): make_split(0.4, 0.2)})

    def test_rejects_split_after_unsent_message(self):
        with pytest.raises(ParameterError, match="never sent"):
            SenderStrategy(Regime.ACTION_BASED, make_split(0.5, 0.5), {(Message.g, Action.R): make_split(0.5, 0.2)})


class TestEnumeration:
    def test_silent_sender_has_eight_strategies(self):
        assert len(enumerate_receiver_strategies(silent_sender(0.5), 0.5, REF)) == 8

    def test_two_message_period1_with_silent_period2(self):
        sender = SenderStrategy(Regime.UNCONDITIONAL, make_split(0.6, 0.4))
        strategies = enumerate_receiver_strategies(sender, 0.6, REF)
        # per message: 2 period-1 choices x 2**2 signal-contingent period-2 choices
        assert len(strategies) == 8 * 8
        for s in strategies:
            assert set(s.period1) == {Message.g, Message.l}
            evaluate_exact(sender, s, 0.6, REF)

    @pytest.mark.parametrize("regime", list(Regime))
    def test_contains_refrain_and_compliance(self, regime):
        sender, receiver = canonical(regime, 0.8)
        encodings = {s.encoding() for s in enumerate_receiver_strategies(sender, 0.8, REF)}
        assert receiver.encoding() in encodings
        assert rule_rr(sender, 0.8, REF).encoding() in encodings

    def test_largest_space(self):
        period1 = BeliefSplit(0.6, (Branch(Message.g, 0.8, 0.5), Branch(Message.l, 0.4, 0.5)), 0.0)
        period2 = {
            (m, sig): split_with_gamma(period1.posterior(m), 0.5) for m in Message for sig in Signal
        }
        sender = SenderStrategy(Regime.SIGNAL_BASED, period1, period2)
        assert len(enumerate_receiver_strategies(sender, 0.6, REF)) == 1024


class TestBestResponse:
    def test_deterrence_plan_gets_compliance(self):
        sender, receiver = canonical(Regime.ACTION_BASED, 0.5)
        best, payoff = best_response(sender, 0.5, REF)
        # the two may differ only at histories that carry no probability
        assert evaluate_exact(sender, best, 0.5, REF) == evaluate_exact(sender, receiver, 0.5, REF)
        assert payoff == pytest.approx(0.25, abs=1e-12)

    def test_silent_high_prior(self):
        s = silent_sender(0.9)
        best, payoff = best_response(s, 0.9, REF)
        assert payoff == pytest.approx(1.6, abs=1e-12)
        assert best.encoding() == rule_aa(s, 0.9, REF).encoding()

    def test_silent_low_prior(self):
        s = silent_sender(0.3)
        best, payoff = best_response(s, 0.3, REF)
        assert payoff == 0.0
        assert best.encoding() == rule_rr(s, 0.3, REF).encoding()

    def test_matches_exhaustive_scan(self):
        sender = _family_sender(Regime.SIGNAL_BASED, 0.7, 0.5, 0.3, 0.6)
        candidates = enumerate_receiver_strategies(sender, 0.7, REF)
        stats = [evaluate_exact(sender, s, 0.7, REF) for s in candidates]
        top = max(s.receiver_payoff for s in stats)
        _, payoff = best_response(sender, 0.7, REF)
        assert payoff == pytest.approx(top, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(
        game_params(),
        st.floats(0.0, 1.0),
        st.floats(0.0, 1.0),
        st.floats(0.0, 1.0),
        st.floats(0.0, 1.0),
        st.sampled_from(list(Regime)),
    )
    def test_floor_over_benchmark_rules(self, params, q, frac, g1, g2, regime):
        sender = _family_sender(regime, q, q * frac, g1, g2)
        _, payoff = best_response(sender, q, params)
        for rule in (rule_rr, rule_ac, rule_aa):
            assert payoff >= evaluate_exact(sender, rule(sender, q, params), q, params).receiver_payoff - 1e-12


class TestIcCheck:
    def test_binding_period1_deviation(self):
        sender, receiver = canonical(Regime.ACTION_BASED, 0.5)
        assert ic_check(sender, receiver, 0.5, REF) <= 1e-12
        # acting in period 1 and then best-responding is exactly as good
        deviate = receiver_from_rules(
            sender, 0.5, REF, lambda m1: Action.A, lambda h: Action.A if h[2] is Signal.POS else Action.R
        )
        gain = evaluate_exact(sender, deviate, 0.5, REF).receiver_payoff - 0.25
        assert gain == pytest.approx(0.0, abs=1e-12)

    def test_signal_plan_binds_act_then_follow_deviation(self):
        q = 0.56
        sender, receiver = canonical(Regime.SIGNAL_BASED, q)
        assert ic_check(sender, receiver, q, REF) <= 1e-9
        follow = receiver_from_rules(
            sender,
            q,
            REF,
            lambda m1: Action.A,
            lambda h: Action.A if h[0] is Message.g or (h[2] is Signal.POS and h[3] is Message.g) else Action.R,
        )
        claimed = evaluate_exact(sender, receiver, q, REF).receiver_payoff
        assert evaluate_exact(sender, follow, q, REF).receiver_payoff == pytest.approx(claimed, abs=1e-12)

    def test_silent_low_prior(self):
        s = silent_sender(0.3)
        assert ic_check(s, rule_rr(s, 0.3, REF), 0.3, REF) <= 0.0

    def test_detects_bad_claim(self):
        s = silent_sender(0.9)
        assert ic_check(s, rule_rr(s, 0.9, REF), 0.9, REF) == pytest.approx(1.6, abs=1e-12)

    @pytest.mark.parametrize("regime", list(Regime))
    def test_canonical_plans_on_grid(self, regime):
        for q in np.linspace(0, 1, 41):
            sender, receiver = canonical(regime, float(q))
            assert ic_check(sender, receiver, float(q), REF) <= 1e-9


class TestSimulate:
    def test_deterministic(self):
        sender, receiver = canonical(Regime.UNCONDITIONAL, 0.6)
        a = simulate(sender, receiver, 0.6, REF, 5000, 123)
        b = simulate(sender, receiver, 0.6, REF, 5000, 123)
        assert a == b

    def test_single_path_is_a_real_path(self):
        sender, receiver = canonical(Regime.SIGNAL_BASED, 0.8)
        outcomes = {
            (p.a1 is Action.A) + (p.a2 is Action.A) for p in path_distribution(sender, receiver, 0.8, REF)
        }
        for seed in range(20):
            result = simulate(sender, receiver, 0.8, REF, 1, seed)
            assert result.mean.sender_cost in outcomes
            assert math.isnan(result.standard_error.sender_cost)

    def test_clt_agreement(self):
        sender, receiver = canonical(Regime.UNCONDITIONAL, 0.6)
        exact = evaluate_exact(sender, receiver, 0.6, REF)
        result = simulate(sender, receiver, 0.6, REF, 10**6, 42)
        assert abs(result.mean.receiver_payoff - exact.receiver_payoff) < 4 * result.standard_error.receiver_payoff
        assert abs(result.mean.sender_cost - exact.sender_cost) < 4 * result.standard_error.sender_cost

    def test_rejects_empty_run(self):
        sender, receiver = canonical(Regime.UNCONDITIONAL, 0.6)
        with pytest.raises(ParameterError):
            simulate(sender, receiver, 0.6, REF, 0, 1)

    def test_benchmark_exploration_counts_interior_acts(self):
        s = silent_sender(0.6)
        result = simulate(s, rule_ac(s, 0.6, REF), 0.6, REF, 20000, 5)
        assert result.mean.prob_act_at_interior_belief == 1.0
        assert result.mean.prob_act_period1 == 1.0
