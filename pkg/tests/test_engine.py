import dataclasses
import math

import numpy as np
import pytest

from bellsim import (
    AllZeroCoincidences,
    DoubleClickPolicy,
    ExistingModelSpec,
    ImprovedModelSpec,
    MeasurementSettings,
    PerfectMode,
    PerfectModelSpec,
    QuantumSpec,
    RunConfig,
    SettingPair,
    ValidationError,
    bell_phi_plus,
    bundled_response_curve,
    empirical_no_signalling,
    merge,
    no_signalling_from_tables,
    run,
)
from bellsim.engine import BATCH_SIZE

SQRT2 = math.sqrt(2.0)
A_THRESHOLD = 12.0 * SQRT2 - 16.0
B_THRESHOLD = 40.0 - 28.0 * SQRT2
SETTINGS = MeasurementSettings.from_degrees(0.0, 45.0, 22.5, 67.5)


def perfect_config(settings, n_trials=200_000, seed=1, **spec_kwargs):
    spec = PerfectModelSpec(A_THRESHOLD, B_THRESHOLD, **spec_kwargs)
    return RunConfig(strategy=spec, settings=settings, n_trials=n_trials, seed=seed)


def summaries_identical(a, b):
    if a.s_value != b.s_value or a.correlations != b.correlations:
        return False
    if (a.eta_alice, a.eta_bob, a.eta_symmetric) != (b.eta_alice, b.eta_bob, b.eta_symmetric):
        return False
    return all(np.array_equal(a.joint_counts[p], b.joint_counts[p]) for p in SettingPair)


class TestRunConfig:
    def test_requires_positive_trials(self, standard_settings):
        with pytest.raises(ValidationError):
            RunConfig(strategy=ExistingModelSpec(0.5), settings=standard_settings,
                      n_trials=0, seed=1)

    def test_requires_integer_seed(self, standard_settings):
        with pytest.raises(ValidationError):
            RunConfig(strategy=ExistingModelSpec(0.5), settings=standard_settings,
                      n_trials=10, seed=1.5)


class TestReproducibility:
    def test_same_seed_same_summary(self, standard_settings):
        config = perfect_config(standard_settings, n_trials=150_000, seed=5)
        assert summaries_identical(run(config), run(config))

    @pytest.mark.parametrize("workers", [2, 4, 8])
    def test_worker_count_does_not_change_results(self, standard_settings, workers):
        config = perfect_config(standard_settings, n_trials=3 * BATCH_SIZE + 123, seed=6)
        assert summaries_identical(run(config, workers=1), run(config, workers=workers))

    def test_different_seeds_differ(self, standard_settings):
        a = run(perfect_config(standard_settings, n_trials=50_000, seed=7))
        b = run(perfect_config(standard_settings, n_trials=50_000, seed=8))
        assert not summaries_identical(a, b)

    def test_seed_recorded(self, standard_settings):
        assert run(perfect_config(standard_settings, n_trials=1000, seed=99)).seed == 99


@pytest.fixture(scope="module")
def summary():
    return run(RunConfig(
        strategy=ImprovedModelSpec.for_settings(0.4, SETTINGS),
        settings=SETTINGS, n_trials=400_000, seed=9,
    ))


@pytest.fixture(scope="module")
def noisy_config():
    # Full-intensity mismatches on the bundled curve fire each arm with
    # probability 0.40, so double clicks actually occur.
    return RunConfig(
        strategy=ExistingModelSpec(1.0 / SQRT2), settings=SETTINGS,
        n_trials=120_000, seed=10, detector_model=bundled_response_curve(),
    )


class TestConservationAndBalance:
    def test_trials_partitioned(self, summary):
        assert summary.counts.total_trials == summary.n_trials
        for pair in SettingPair:
            tally = summary.counts[pair]
            assert tally.n_trials == int(summary.joint_counts[pair].sum())

    def test_setting_balance(self, summary):
        n = summary.n_trials
        bound = 4.0 * math.sqrt(n * 3.0 / 16.0)
        for pair in SettingPair:
            assert abs(summary.counts[pair].n_trials - n / 4.0) <= bound

    def test_analytic_agreement_at_moderate_size(self, summary):
        from bellsim import improved_predict

        prediction = improved_predict(0.4)
        assert abs(summary.s_value - prediction.s) <= 5.0 * summary.se_s
        assert abs(summary.eta_symmetric - prediction.eta) <= 5.0 * summary.se_eta_symmetric


class TestErrors:
    def test_all_zero_coincidences_identifies_setting(self, standard_settings):
        config = RunConfig(strategy=QuantumSpec(bell_phi_plus(), eta_true=0.0),
                           settings=standard_settings, n_trials=1000, seed=2)
        with pytest.raises(AllZeroCoincidences, match="a0b0"):
            run(config)


class TestDoubleClickAccounting:
    def test_discard_counts_doubles_outside_partition(self, noisy_config):
        summary = run(noisy_config)
        assert summary.total_double_events > 0
        for pair in SettingPair:
            table = summary.joint_counts[pair]
            assert table[3, :].sum() == 0 and table[:, 3].sum() == 0

    def test_flag_surfaces_double_outcomes(self, noisy_config):
        config = dataclasses.replace(noisy_config, double_click_policy=DoubleClickPolicy.FLAG)
        summary = run(config)
        flagged = sum(
            int(t[3, :].sum() + t[:3, 3].sum()) for t in summary.joint_counts.values()
        )
        assert flagged == summary.total_double_events > 0

    def test_randomize_keeps_partition_and_counter(self, noisy_config):
        config = dataclasses.replace(noisy_config, double_click_policy=DoubleClickPolicy.RANDOMIZE)
        summary = run(config)
        assert summary.total_double_events > 0
        assert summary.counts.total_trials == summary.n_trials

    def test_policies_agree_on_double_rate(self, noisy_config):
        discard = run(noisy_config)
        flag = run(dataclasses.replace(noisy_config, double_click_policy=DoubleClickPolicy.FLAG))
        assert discard.total_double_events == flag.total_double_events


class TestMerge:
    def test_merge_with_itself_doubles_counts(self, standard_settings):
        summary = run(perfect_config(standard_settings, n_trials=60_000, seed=11))
        merged = merge([summary, summary])
        assert merged.n_trials == 2 * summary.n_trials
        assert merged.seed == summary.seed
        for pair in SettingPair:
            assert merged.correlations[pair] == pytest.approx(summary.correlations[pair], abs=1e-15)
        assert merged.s_value == pytest.approx(summary.s_value, abs=1e-15)

    def test_commutative_and_associative(self, standard_settings):
        a = run(perfect_config(standard_settings, n_trials=60_000, seed=12))
        b = run(perfect_config(standard_settings, n_trials=80_000, seed=13))
        c = run(perfect_config(standard_settings, n_trials=40_000, seed=14))
        ab = merge([a, b])
        ba = merge([b, a])
        assert summaries_identical(ab, ba)
        assert summaries_identical(merge([ab, c]), merge([a, merge([b, c])]))

    def test_mixed_seeds_drop_seed(self, standard_settings):
        a = run(perfect_config(standard_settings, n_trials=30_000, seed=15))
        b = run(perfect_config(standard_settings, n_trials=30_000, seed=16))
        assert merge([a, b]).seed is None

    def test_matches_single_run_statistics(self, standard_settings):
        a = run(perfect_config(standard_settings, n_trials=50_000, seed=17))
        b = run(perfect_config(standard_settings, n_trials=50_000, seed=18))
        merged = merge([a, b])
        total = {
            pair: a.joint_counts[pair] + b.joint_counts[pair] for pair in SettingPair
        }
        for pair in SettingPair:
            assert np.array_equal(merged.joint_counts[pair], total[pair])
            t = total[pair]
            e = (t[0, 0] + t[1, 1] - t[0, 1] - t[1, 0]) / (t[:2, :2].sum())
            assert merged.correlations[pair] == pytest.approx(e, abs=1e-15)

    def test_incompatible_runs_rejected(self, standard_settings):
        base = run(perfect_config(standard_settings, n_trials=20_000, seed=19))
        other_strategy = run(RunConfig(strategy=ExistingModelSpec(0.7),
                                       settings=standard_settings, n_trials=20_000, seed=19))
        with pytest.raises(ValidationError):
            merge([base, other_strategy])

        other_settings = MeasurementSettings.from_degrees(0, 30, 10, 40)
        shifted = run(RunConfig(strategy=PerfectModelSpec(A_THRESHOLD, B_THRESHOLD),
                                settings=other_settings, n_trials=20_000, seed=19))
        with pytest.raises(ValidationError):
            merge([base, shifted])

        flagged = run(dataclasses.replace(
            perfect_config(standard_settings, n_trials=20_000, seed=19),
            double_click_policy=DoubleClickPolicy.FLAG,
        ))
        with pytest.raises(ValidationError):
            merge([base, flagged])

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            merge([])


class TestNoSignalling:
    def test_perfect_model_passes(self, standard_settings):
        summary = run(perfect_config(standard_settings, n_trials=400_000, seed=20))
        report = empirical_no_signalling(summary)
        assert report.passed
        assert report.max_discrepancy < 0.01

    def test_improved_model_passes(self, standard_settings):
        summary = run(RunConfig(
            strategy=ImprovedModelSpec.for_settings(0.35, standard_settings),
            settings=standard_settings, n_trials=400_000, seed=21,
        ))
        assert empirical_no_signalling(summary).passed

    def test_constructed_signalling_table_fails(self):
        # Alice's "+" marginal moves by 0.1 when Bob changes his setting.
        def table(p_plus):
            t = np.zeros((4, 4), dtype=np.int64)
            n = 100_000
            t[0, 0] = int(n * p_plus)
            t[1, 0] = n - t[0, 0]
            return t

        tables = {
            SettingPair.A0B0: table(0.6),
            SettingPair.A0B1: table(0.5),
            SettingPair.A1B0: table(0.55),
            SettingPair.A1B1: table(0.55),
        }
        report = no_signalling_from_tables(tables)
        assert not report.passed
        assert report.max_discrepancy == pytest.approx(0.1, abs=1e-9)
        assert "alice" in report.worst_case


class TestPhysicalModeThroughEngine:
    def test_threshold_point_with_step_detectors(self, standard_settings):
        summary = run(perfect_config(
            standard_settings, n_trials=300_000, seed=22, mode=PerfectMode.PHYSICAL_PULSES,
        ))
        assert abs(summary.s_value - 2.0 * SQRT2) <= 5.0 * summary.se_s
        assert abs(summary.eta_symmetric - 2.0 * (SQRT2 - 1.0)) <= 5.0 * summary.se_eta_symmetric
        assert summary.total_double_events == 0
