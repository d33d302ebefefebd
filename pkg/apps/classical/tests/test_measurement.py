"""
Tests for classical states, measurement and postselection
"""
import numpy as np
import pytest

from apps.classical.exceptions import (
    InvalidClassicalState,
    InvalidPostselector,
    LengthMismatch,
    ZeroSelectionRate,
)
from apps.classical.measurement import (
    bayes_update,
    classical_mean,
    classical_outcome_density,
    classical_postselected_mean,
    classical_spread,
    effective_postselected_state,
    ideal_classical_measure,
    noisy_measure,
    postselected_run,
    sample_outcomes,
)
from apps.classical.states import ClassicalState, PhaseFunction, Postselector
from apps.ensemble.streams import SeededRng


@pytest.fixture
def state():
    """Three points with unequal weights"""
    return ClassicalState([0.2, 0.3, 0.5])


@pytest.fixture
def f():
    return PhaseFunction([1.0, 2.0, 3.0])


@pytest.fixture
def rng():
    return SeededRng(2024)


class TestClassicalState:
    """Tests for ClassicalState and phase functions"""

    def test_rejects_negative_weight(self):
        with pytest.raises(InvalidClassicalState):
            ClassicalState([1.2, -0.2])

    def test_rejects_unnormalised(self):
        with pytest.raises(InvalidClassicalState):
            ClassicalState([0.5, 0.6])

    def test_from_unnormalized(self):
        state = ClassicalState.from_unnormalized([2.0, 6.0])
        assert np.allclose(state.weights, [0.25, 0.75])

    def test_default_point_labels(self):
        assert ClassicalState.uniform(3).points == ('X1', 'X2', 'X3')

    def test_postselector_range(self):
        with pytest.raises(InvalidPostselector):
            Postselector([0.5, 1.5])

    def test_level_sets(self):
        levels = PhaseFunction([1.0, -1.0, 1.0]).level_sets()
        assert [value for value, _ in levels] == [-1.0, 1.0]
        assert levels[1][1].values.tolist() == [1.0, 0.0, 1.0]


class TestMeanAndSpread:
    """Tests for classical_mean and classical_spread"""

    def test_mean(self, state, f):
        assert classical_mean(state, f) == pytest.approx(2.3)

    def test_spread(self, state, f):
        assert classical_spread(state, f) == pytest.approx(0.61)

    def test_spread_of_point_mass_is_zero(self, f):
        assert classical_spread(ClassicalState.point_mass(3, 1), f) == 0.0

    def test_length_mismatch(self, state):
        with pytest.raises(LengthMismatch):
            classical_mean(state, PhaseFunction([1.0, 2.0]))


class TestNoisyMeasurement:
    """Tests for Gaussian non-ideal measurement"""

    def test_outcome_density_is_normalised(self, state, f):
        a = np.linspace(-20, 25, 9001)
        density = classical_outcome_density(state, f, 1.5, a)
        assert np.sum(density) * (a[1] - a[0]) == pytest.approx(1.0, abs=1e-6)

    def test_outcome_mean(self, state, f, rng):
        """Unbiased: the outcome mean is ⟨A⟩ for any σ"""
        outcomes = sample_outcomes(state, f, 2.0, rng, size=20000)
        stderr = np.sqrt((classical_spread(state, f) + 4.0) / 20000)
        assert abs(outcomes.mean() - 2.3) < 4 * stderr

    def test_bayes_update(self, state, f):
        updated = bayes_update(state, f, 1.0, 3.0)
        likelihood = np.exp(-0.5 * (3.0 - f.values) ** 2)
        expected = likelihood * state.weights / np.sum(likelihood * state.weights)
        assert np.allclose(updated.weights, expected, atol=1e-14)

    def test_small_sigma_collapses(self, state, f):
        updated = bayes_update(state, f, 1e-4, 2.0)
        assert np.allclose(updated.weights, [0.0, 1.0, 0.0])

    def test_noisy_measure_returns_valid_state(self, state, f, rng):
        outcome, updated = noisy_measure(state, f, 0.5, rng)
        assert isinstance(outcome, float)
        assert updated.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_updates_average_to_the_prior(self, rng):
        """Martingale: E[updated weights] over outcomes equals the prior"""
        state, f = ClassicalState.uniform(2), PhaseFunction([1.0, -1.0])
        weights = np.array([noisy_measure(state, f, 1.0, rng)[1].weights for _ in range(10000)])
        stderr = weights.std(axis=0, ddof=1) / np.sqrt(len(weights))
        assert np.all(np.abs(weights.mean(axis=0) - state.weights) <= 3 * stderr)

    def test_noisy_measure_requires_positive_sigma(self, state, f, rng):
        with pytest.raises(ValueError):
            noisy_measure(state, f, 0.0, rng)


class TestIdealMeasurement:
    """Tests for the ideal measurement of a stepwise function"""

    def test_frequencies(self, rng):
        state = ClassicalState([0.1, 0.4, 0.5])
        f = PhaseFunction([1.0, 1.0, -1.0])
        draws = [ideal_classical_measure(state, f, rng)[0] for _ in range(4000)]
        frequency = np.mean(np.array(draws) == 1.0)
        assert abs(frequency - 0.5) < 3 * np.sqrt(0.25 / 4000)

    def test_conditioned_state(self, rng):
        state = ClassicalState([0.1, 0.4, 0.5])
        f = PhaseFunction([1.0, 1.0, -1.0])
        for _ in range(20):
            level, conditioned = ideal_classical_measure(state, f, rng)
            if level == 1.0:
                assert np.allclose(conditioned.weights, [0.2, 0.8, 0.0])
            else:
                assert np.allclose(conditioned.weights, [0.0, 0.0, 1.0])


class TestPostselection:
    """Tests for classical postselection"""

    def test_postselected_mean(self, state, f):
        assert classical_postselected_mean(state, f, [0.0, 1.0, 1.0]) == pytest.approx(
            (0.3 * 2 + 0.5 * 3) / 0.8
        )

    def test_postselected_mean_stays_in_range(self, f):
        """Classical postselected means never leave [min A, max A]"""
        generator = np.random.default_rng(7)
        for _ in range(50):
            state = ClassicalState.from_unnormalized(generator.random(3))
            sel = Postselector(generator.random(3))
            mean = classical_postselected_mean(state, f, sel)
            assert 1.0 <= mean <= 3.0

    def test_zero_rate(self, state, f):
        with pytest.raises(ZeroSelectionRate):
            classical_postselected_mean(state, f, [0.0, 0.0, 0.0])
        with pytest.raises(ZeroSelectionRate):
            effective_postselected_state(state, [0.0, 0.0, 0.0])

    def test_effective_state(self, state):
        effective = effective_postselected_state(state, [1.0, 0.0, 0.5])
        assert np.allclose(effective.weights, [0.2 / 0.45, 0.0, 0.25 / 0.45])

    def test_postselected_runs(self, f, rng):
        """Accepted outcomes average to the postselected mean, rate is ⟨Π⟩"""
        state = ClassicalState.uniform(3)
        sel = [0.0, 1.0, 1.0]
        runs = [postselected_run(state, f, sel, 0.5, rng) for _ in range(6000)]
        accepted = np.array([run.outcome for run in runs if run.accepted])
        rate = len(accepted) / len(runs)
        assert abs(rate - 2 / 3) < 4 * np.sqrt((2 / 9) / len(runs))
        stderr = np.sqrt(0.25 + 0.25) / np.sqrt(len(accepted))
        assert abs(accepted.mean() - 2.5) < 4 * stderr

    def test_postselection_is_exact_for_wide_errors(self, rng):
        """Even at σ = 5 the accepted outcomes average to the postselected mean 1"""
        state, f = ClassicalState.uniform(2), PhaseFunction([1.0, -1.0])
        runs = [postselected_run(state, f, [1.0, 0.0], 5.0, rng) for _ in range(100000)]
        accepted = np.array([run.outcome for run in runs if run.accepted])
        assert classical_postselected_mean(state, f, [1.0, 0.0]) == pytest.approx(1.0)
        stderr = accepted.std(ddof=1) / np.sqrt(len(accepted))
        assert abs(accepted.mean() - 1.0) <= 3 * stderr
