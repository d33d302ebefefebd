"""
Tests for the Monte Carlo experiments
"""
from math import pi

import numpy as np
import pytest

from apps.classical.states import ClassicalState, PhaseFunction
from apps.ensemble.exceptions import Unconverged
from apps.ensemble.experiments import (
    ExperimentReport,
    WeakLimitPlan,
    run_anomaly_experiment,
    run_classical_collapse_statistics,
    run_collapse_statistics,
    run_meter_check,
    run_weak_limit_classical,
    weak_limit_study,
)
from apps.linalg.spectral import pauli_z
from apps.quantum.states import coherent_state
from apps.trajectories.config import ContinuousMeasurementConfig


@pytest.fixture
def two_level():
    """Uniform state on two points with A = (1, −1)"""
    return ClassicalState.uniform(2), PhaseFunction([1.0, -1.0])


class TestExperimentReport:
    """Tests for ExperimentReport.from_outcomes"""

    def test_statistics(self):
        report = ExperimentReport.from_outcomes([1.0, 2.0, 3.0], n_runs=6, predicted_mean=2.0,
                                                predicted_delta=0.5)
        assert report.accepted_count == 3
        assert report.acceptance_rate == 0.5
        assert report.mean == 2.0
        assert report.stderr == pytest.approx(1 / np.sqrt(3))
        assert report.z_score == 0.0

    def test_single_outcome(self):
        report = ExperimentReport.from_outcomes([4.0], n_runs=1, predicted_mean=0.0,
                                                predicted_delta=1.0)
        assert report.stderr == 0.0
        assert report.z_score == 0.0


class TestWeakLimit:
    """Weak-measurement limit at fixed Δ² = σ²/N"""

    def test_plan(self):
        plan = WeakLimitPlan(sigma=10.0, n=100)
        assert plan.delta2 == pytest.approx(1.0)
        assert plan.predicted_delta == pytest.approx(1.0)

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            WeakLimitPlan(sigma=0.0, n=10)
        with pytest.raises(ValueError):
            WeakLimitPlan(sigma=1.0, n=0)

    def test_single_experiment(self, two_level):
        report = run_weak_limit_classical(*two_level, WeakLimitPlan(10.0, 100), seed=7)
        assert report.accepted_count == 100
        assert report.predicted_mean == 0.0
        assert abs(report.mean) <= 4 * report.predicted_delta

    def test_reproducible(self, two_level):
        plan = WeakLimitPlan(10.0, 100)
        assert run_weak_limit_classical(*two_level, plan, 7) == run_weak_limit_classical(*two_level, plan, 7)

    def test_gaussian_law(self, two_level):
        """ā is Gaussian with variance (σ² + Δ²A)/N ≈ Δ²"""
        study = weak_limit_study(*two_level, WeakLimitPlan(10.0, 100), repetitions=2000, seed=2024)
        assert abs(study.sample_variance - 1.0) <= 0.25
        assert abs(study.skewness) < 0.2
        assert abs(study.excess_kurtosis) < 0.5

    def test_scaling_law(self, two_level):
        """Doubling N at fixed σ halves the variance of ā"""
        single = weak_limit_study(*two_level, WeakLimitPlan(10.0, 100), repetitions=1000, seed=1)
        double = weak_limit_study(*two_level, WeakLimitPlan(10.0, 200), repetitions=1000, seed=2)
        assert single.sample_variance / double.sample_variance == pytest.approx(2.0, rel=0.25)

    def test_thread_independence(self, two_level):
        plan = WeakLimitPlan(10.0, 50)
        one = weak_limit_study(*two_level, plan, repetitions=40, seed=3, threads=1, block_size=6)
        many = weak_limit_study(*two_level, plan, repetitions=40, seed=3, threads=4, block_size=6)
        assert one.reports == many.reports


class TestAnomaly:
    """Postselected σ_x measurement with weak value 2 at φ = π/3"""

    def test_accepted_count_and_mean(self):
        report = run_anomaly_experiment(pi / 3, 10.0, 3600, seed=1)
        assert 810 <= report.accepted_count <= 990
        assert abs(report.mean - 2.0) <= 3 * 10.0 / np.sqrt(report.accepted_count)
        assert report.predicted_mean == pytest.approx(2.0)
        assert report.predicted_delta == pytest.approx(10.0 / np.sqrt(report.accepted_count))

    def test_acceptance_rate(self):
        report = run_anomaly_experiment(pi / 3, 10.0, 3600, seed=2)
        assert report.predicted_rate == pytest.approx(0.25)
        assert abs(report.acceptance_rate - 0.25) <= 3 * np.sqrt(0.25 * 0.75 / 3600)

    def test_mean_exceeds_largest_eigenvalue(self):
        report = run_anomaly_experiment(pi / 3, 10.0, 36000, seed=3, threads=4)
        assert report.mean > 1.0 + 3 * report.stderr

    def test_strong_measurement_misses_weak_value(self):
        """At σ = 0.1 the accepted mean sits near 0.8, far from the weak value"""
        report = run_anomaly_experiment(pi / 3, 0.1, 8000, seed=5, threads=4)
        assert report.mean == pytest.approx(0.8, abs=0.05)
        assert abs(report.mean - 2.0) > 5 * report.stderr

    def test_very_weak_measurement_reaches_weak_value(self):
        report = run_anomaly_experiment(pi / 3, 100.0, 40000, seed=5, threads=4)
        assert abs(report.mean - 2.0) <= 3 * report.stderr

    def test_thread_independence(self):
        one = run_anomaly_experiment(pi / 3, 10.0, 500, seed=4, threads=1, block_size=64)
        many = run_anomaly_experiment(pi / 3, 10.0, 500, seed=4, threads=3, block_size=64)
        assert one == many

    def test_rejects_right_angle(self):
        with pytest.raises(ValueError):
            run_anomaly_experiment(pi / 2, 10.0, 10, seed=1)


class TestCollapseStatistics:
    """Time-continuous measurement ends in an eigenstate with Born frequency"""

    def test_quantum(self):
        cfg = ContinuousMeasurementConfig(g2=1.0, dt=1e-3, t_final=50.0, record_every=50000)
        histogram = run_collapse_statistics(
            coherent_state(pi / 3), pauli_z(), cfg, n_traj=4000, seed=20240601, block_size=4000,
        )
        assert histogram.converged_fraction >= 0.99
        up = list(histogram.labels).index(1.0)
        assert histogram.expected[up] == pytest.approx(0.25)
        assert abs(histogram.frequencies[up] - 0.25) <= 3 * np.sqrt(0.25 * 0.75 / 4000)
        assert histogram.passes()

    def test_classical(self, two_level):
        cfg = ContinuousMeasurementConfig(g2=1.0, dt=1e-3, t_final=30.0, record_every=30000)
        histogram = run_classical_collapse_statistics(*two_level, cfg, n_traj=4000, seed=77,
                                                      block_size=4000)
        assert histogram.converged_fraction >= 0.99
        assert np.allclose(histogram.expected, [0.5, 0.5])
        assert abs(histogram.frequencies[1] - 0.5) <= 3 * np.sqrt(0.25 / 4000)

    def test_unconverged(self, two_level):
        cfg = ContinuousMeasurementConfig(g2=1.0, dt=1e-2, t_final=0.5)
        with pytest.raises(Unconverged) as exc:
            run_classical_collapse_statistics(*two_level, cfg, n_traj=100, seed=1)
        assert exc.value.fraction < 0.99

    def test_rows(self, two_level):
        cfg = ContinuousMeasurementConfig(g2=1.0, dt=1e-3, t_final=30.0, record_every=30000)
        histogram = run_classical_collapse_statistics(*two_level, cfg, n_traj=200, seed=5)
        rows = list(histogram.rows())
        assert [row['label'] for row in rows] == [0, 1]
        assert [row['eigenvalue'] for row in rows] == [-1.0, 1.0]
        assert sum(row['count'] for row in rows) == 200


class TestMeterCheck:
    """Meter model against the postulated outcome density"""

    def test_fifty_cases(self):
        cases = run_meter_check(50, seed=11)
        assert len(cases) == 50
        assert {case.dim for case in cases} <= {2, 3, 4}
        assert max(case.max_abs_diff for case in cases) < 1e-12

    def test_reproducible(self):
        assert run_meter_check(5, seed=3) == run_meter_check(5, seed=3)
