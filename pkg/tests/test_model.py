import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import bisect

from conftest import LOW_ALPHA, REF, game_params
from dissuade.benchmark import pi
from dissuade.model import (
    ConsistencyError,
    GameParams,
    Message,
    ParameterError,
    Regime,
    Signal,
    State,
    Action,
    make_split,
    posterior_update,
    silent_split,
    split_with_gamma,
    stage_payoff,
    thresholds,
    validate_params,
    xi,
)


class TestValidateParams:
    def test_accepts_reference(self):
        assert validate_params(REF) is REF

    def test_rejects_reversed_alphas(self):
        with pytest.raises(ParameterError, match="alpha ordering"):
            GameParams(1.0, 0.25, 0.75)

    def test_rejects_zero_cost(self):
        with pytest.raises(ParameterError, match="c must be positive"):
            GameParams(0.0, 0.75, 0.25)

    @pytest.mark.parametrize("ag, al", [(1.0, 0.5), (0.5, 0.0), (1.2, 0.1)])
    def test_rejects_closed_interval_probabilities(self, ag, al):
        with pytest.raises(ParameterError, match="open interval"):
            GameParams(1.0, ag, al)

    def test_rejects_nan(self):
        with pytest.raises(ParameterError, match="finite"):
            GameParams(float("nan"), 0.75, 0.25)


class TestStagePayoff:
    def test_zero_at_myopic_cutoff(self):
        assert stage_payoff(thresholds(REF).q_m, REF) == pytest.approx(0.0, abs=1e-12)

    def test_certain_good_state(self):
        assert stage_payoff(1.0, REF) == 1.0

    def test_interior_value(self):
        assert stage_payoff(0.6, REF) == pytest.approx(0.2, abs=1e-12)


class TestPosteriorUpdate:
    def test_positive_signal(self):
        assert posterior_update(0.5, Signal.POS, REF) == pytest.approx(0.75, abs=1e-12)

    def test_negative_signal(self):
        assert posterior_update(0.5, Signal.NEG, REF) == pytest.approx(0.25, abs=1e-12)

    @pytest.mark.parametrize("q", [0.0, 1.0])
    @pytest.mark.parametrize("signal", [Signal.POS, Signal.NEG])
    def test_degenerate_beliefs_absorb(self, q, signal):
        assert posterior_update(q, signal, REF) == q

    @given(game_params(), st.floats(0.0, 1.0))
    def test_signals_move_belief_in_their_direction(self, params, q):
        up = posterior_update(q, Signal.POS, params)
        down = posterior_update(q, Signal.NEG, params)
        assert down - 1e-15 <= q <= up + 1e-15


class TestSplits:
    def test_interior_split(self):
        s = make_split(0.5, 0.25)
        assert s.gamma == pytest.approx(2 / 3, abs=1e-12)
        assert s.branch(Message.g).probability == pytest.approx(1 / 3, abs=1e-12)
        assert s.branch(Message.l).posterior == 0.25
        assert s.branch(Message.l).probability == pytest.approx(2 / 3, abs=1e-12)

    def test_no_information(self):
        s = make_split(0.5, 0.5)
        assert s.gamma == 0.0
        assert s.is_silent
        assert [(b.posterior, b.probability) for b in s.branches] == [(0.5, 1.0)]

    def test_full_revelation(self):
        s = make_split(0.5, 0.0)
        assert s.gamma == pytest.approx(1.0, abs=1e-12)
        assert s.posterior(Message.l) == 0.0
        assert s.branch(Message.g).probability == pytest.approx(0.5, abs=1e-12)

    def test_target_above_prior_is_rejected(self):
        with pytest.raises(ParameterError, match="r <= q"):
            make_split(0.4, 0.5)

    def test_unsent_message_has_no_posterior(self):
        with pytest.raises(ParameterError):
            silent_split(0.3).posterior(Message.g)

    def test_inconsistent_branches_are_rejected(self):
        from dissuade.model import BeliefSplit, Branch

        with pytest.raises(ConsistencyError, match="Bayes"):
            BeliefSplit(0.5, (Branch(Message.g, 1.0, 0.5), Branch(Message.l, 0.5, 0.5)), 1.0)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_make_split_is_bayes_plausible(self, q, frac):
        s = make_split(q, q * frac)
        assert abs(sum(b.probability for b in s.branches) - 1.0) <= 1e-12
        assert abs(sum(b.probability * b.posterior for b in s.branches) - q) <= 1e-12

    @given(st.floats(0.001, 0.999), st.floats(0.0, 1.0))
    def test_gamma_parametrisation_round_trips(self, q, gamma):
        s = split_with_gamma(q, gamma)
        assert s.message_prob(Message.g, State.G) == pytest.approx(gamma, abs=1e-9)
        assert s.message_prob(Message.g, State.L) == pytest.approx(0.0, abs=1e-12)
        if 0 < gamma < 1:
            again = make_split(q, s.posterior(Message.l))
            assert again.gamma == pytest.approx(gamma, abs=1e-9)

    def test_gamma_split_at_certainty_keeps_gamma(self):
        s = split_with_gamma(1.0, 0.3)
        assert s.message_prob(Message.g, State.G) == pytest.approx(0.3)
        assert s.message_prob(Message.l, State.L) == 1.0

    @given(st.floats(0.001, 0.999), st.floats(0.0, 1.0))
    def test_message_probabilities_are_conditional_laws(self, q, frac):
        s = make_split(q, q * frac)
        for state in State:
            total = sum(s.message_prob(m, state) for m in Message)
            assert total == pytest.approx(1.0, abs=1e-12)


class TestThresholds:
    def test_reference_values(self):
        t = thresholds(REF)
        expected = (5 / 12, 3 / 4, 1 / 2, 5 / 8, 4 / 7, 11 / 20)
        got = (t.q_i, t.q_ii, t.q_m, t.p_star, t.p_star_star, t.p_e)
        for a, b in zip(got, expected):
            assert a == pytest.approx(b, abs=1e-12)

    def test_low_alpha_branch(self):
        t = thresholds(LOW_ALPHA)
        assert t.p_star == pytest.approx(2 / 3, abs=1e-12)
        assert t.q_ii == pytest.approx(0.6, abs=1e-12)
        assert t.p_star >= t.q_ii
        assert t.p_e is None and t.p_star_star is None

    def test_knife_edge_branches_coincide(self):
        # 2*alpha_g - alpha_l == 1
        params = GameParams(1.3, 0.6, 0.2)
        t = thresholds(params)
        c, ag, al = params.c, params.alpha_g, params.alpha_l
        assert t.p_star == pytest.approx((1 + al) * c / (ag + (1 + al) * c), abs=1e-12)
        assert t.p_star == pytest.approx(t.q_ii, abs=1e-12)

    @settings(max_examples=300)
    @given(game_params())
    def test_invariants(self, params):
        t = thresholds(params)
        assert 0 < t.q_i < t.q_m < t.q_ii < 1
        assert t.p_star > t.q_m
        assert (t.p_star >= t.q_ii - 1e-12) == (2 * params.alpha_g - params.alpha_l <= 1)
        if params.alpha_g > 0.5:
            assert t.q_m < t.p_e < min(t.p_star, t.q_ii)
            assert t.p_e < t.p_star_star
        else:
            assert t.p_e is None

    @settings(max_examples=100)
    @given(game_params(min_alpha_g=0.51))
    def test_p_e_matches_bisection_on_benchmark_payoff(self, params):
        t = thresholds(params)
        gap = lambda q: stage_payoff(q, params) / (1 - params.alpha_g) - pi(q, params)
        root = bisect(gap, t.q_m, min(t.p_star, t.q_ii), xtol=1e-14)
        assert root == pytest.approx(t.p_e, abs=1e-10)
        assert abs(gap(t.p_e)) < 1e-12


class TestXi:
    def test_reference_value(self):
        assert xi(0.5, REF) == pytest.approx(1 / 3, abs=1e-12)

    def test_equals_prior_at_q_i(self):
        q_i = thresholds(REF).q_i
        assert xi(q_i, REF) == pytest.approx(q_i, abs=1e-12)

    def test_zero_at_p_star(self):
        assert xi(thresholds(REF).p_star, REF) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_beliefs_above_p_star(self):
        with pytest.raises(ParameterError, match="p_star"):
            xi(0.7, REF)

    @settings(max_examples=50)
    @given(game_params())
    def test_decreasing_and_bounded_inside(self, params):
        t = thresholds(params)
        grid = np.linspace(t.q_i, t.p_star, 1002)[1:-1]
        values = np.array([xi(float(q), params) for q in grid])
        assert np.all(np.diff(values) < 0)
        assert np.all(values > 0) and np.all(values < t.q_i)


def test_regime_conditions():
    assert Regime.UNCONDITIONAL.condition(Action.A, Signal.NEG) is None
    assert Regime.ACTION_BASED.condition(Action.A, Signal.NEG) is Action.A
    assert Regime.SIGNAL_BASED.condition(Action.R, Signal.POS) is Signal.POS
    assert Regime("signal") is Regime.SIGNAL_BASED
    assert math.isclose(REF.signal_prob(State.L, Signal.NEG), 0.75)
