import numpy as np
import pytest

from bellsim import (
    Empirical,
    MalformedCurve,
    RampShape,
    StepThreshold,
    TwoThreshold,
    ValidationError,
    bundled_response_curve,
    click_probability,
    load_response_curve,
    read_response_csv,
    sample_click,
)

HALF_INTENSITY_CLICK_PROB = 0.40  # synthetic curve pinned to this value


class TestStepThreshold:
    def test_below_threshold_never_clicks(self):
        assert click_probability(StepThreshold(1.0), 0.99) == 0.0

    def test_at_threshold_always_clicks(self):
        assert click_probability(StepThreshold(1.0), 1.0) == 1.0
        assert click_probability(StepThreshold(1.0), 2.0) == 1.0

    def test_invalid_threshold(self):
        with pytest.raises(ValidationError):
            StepThreshold(0.0)
        with pytest.raises(ValidationError):
            StepThreshold(-1.0)


class TestTwoThreshold:
    def test_linear_ramp_midpoint(self):
        model = TwoThreshold(0.8, 1.2)
        assert click_probability(model, 1.0) == pytest.approx(0.5, abs=1e-12)
        assert click_probability(model, 0.8) == 0.0
        assert click_probability(model, 0.5) == 0.0
        assert click_probability(model, 1.2) == 1.0
        assert click_probability(model, 3.0) == 1.0

    def test_thresholds_must_be_ordered(self):
        with pytest.raises(ValidationError):
            TwoThreshold(1.2, 0.8)
        with pytest.raises(ValidationError):
            TwoThreshold(1.0, 1.0)

    def test_tabulated_ramp(self):
        model = TwoThreshold(
            1.0, 2.0, interpolation=RampShape.TABULATED,
            ramp=((0.5, 0.1), (0.75, 0.9)),
        )
        assert click_probability(model, 1.0) == 0.0
        assert click_probability(model, 1.5) == pytest.approx(0.1)
        assert click_probability(model, 2.0) == 1.0
        # linear between supplied knots
        assert click_probability(model, 1.625) == pytest.approx(0.5)

    def test_tabulated_ramp_validation(self):
        with pytest.raises(ValidationError):
            TwoThreshold(1.0, 2.0, interpolation=RampShape.TABULATED, ramp=None)
        with pytest.raises(ValidationError):
            TwoThreshold(1.0, 2.0, interpolation=RampShape.TABULATED,
                         ramp=((0.5, 0.9), (0.75, 0.1)))
        with pytest.raises(ValidationError):
            TwoThreshold(1.0, 2.0, interpolation=RampShape.TABULATED,
                         ramp=((0.0, 0.3), (1.0, 1.0)))

    def test_step_is_the_zero_width_limit(self):
        step = StepThreshold(1.0)
        for intensity in (0.5, 0.9, 0.999, 1.001, 1.5):
            gaps = []
            for width in (1e-1, 1e-2, 1e-4, 1e-6, 1e-8):
                noisy = TwoThreshold(1.0 - width, 1.0 + width)
                gaps.append(abs(click_probability(noisy, intensity)
                                - click_probability(step, intensity)))
            assert gaps[-1] <= 1e-12
            assert all(g2 <= g1 + 1e-12 for g1, g2 in zip(gaps, gaps[1:]))


class TestEmpirical:
    def test_clamping_and_interpolation(self):
        model = load_response_curve([(0.1, 0.0), (0.2, 1.0)])
        assert click_probability(model, 0.05) == 0.0
        assert click_probability(model, 0.15) == pytest.approx(0.5)
        assert click_probability(model, 0.2) == 1.0
        assert click_probability(model, 5.0) == 1.0

    def test_zero_below_first_point(self):
        model = load_response_curve([(1.0, 0.3), (2.0, 0.8)])
        assert click_probability(model, 0.999) == 0.0
        assert click_probability(model, 1.0) == pytest.approx(0.3)
        assert click_probability(model, 3.0) == pytest.approx(0.8)

    @pytest.mark.parametrize(
        "rows",
        [
            [(0.1, 0.5)],                       # too short
            [(0.1, 0.5), (0.2, 0.4)],           # decreasing probability
            [(0.2, 0.1), (0.1, 0.5)],           # decreasing energy
            [(0.1, 0.1), (0.1, 0.5)],           # duplicate energy
            [(0.1, -0.1), (0.2, 0.5)],          # probability out of range
            [(0.1, 0.5), (0.2, 1.5)],
        ],
    )
    def test_malformed_curves_rejected(self, rows):
        with pytest.raises(MalformedCurve):
            load_response_curve(rows)


class TestMonotonicityAndBounds:
    @pytest.mark.parametrize(
        "model",
        [
            StepThreshold(0.7),
            TwoThreshold(0.4, 1.3),
            TwoThreshold(0.5, 1.5, interpolation=RampShape.TABULATED,
                         ramp=((0.2, 0.0), (0.4, 0.3), (0.9, 0.95))),
            Empirical(((0.3, 0.1), (0.5, 0.40), (1.0, 1.0))),
        ],
    )
    def test_monotone_in_intensity(self, model):
        intensities = np.sort(np.random.default_rng(7).uniform(0, 3, size=400))
        probs = click_probability(model, intensities)
        assert np.all(np.diff(probs) >= -1e-15)
        assert np.all((probs >= 0.0) & (probs <= 1.0))

    def test_negative_intensity_rejected(self):
        with pytest.raises(ValidationError):
            click_probability(StepThreshold(1.0), -0.1)


class TestSampleClick:
    def test_certain_click(self):
        rng = np.random.default_rng(0)
        assert all(sample_click(StepThreshold(1.0), 2.0, rng) for _ in range(50))

    def test_certain_silence(self):
        rng = np.random.default_rng(0)
        assert not any(sample_click(StepThreshold(1.0), 0.0, rng) for _ in range(50))

    def test_law_of_large_numbers_on_ramp_midpoint(self):
        # 10^6 Bernoulli samples at p = 0.5 concentrate to 0.5 +- 0.002.
        rng = np.random.default_rng(123)
        model = TwoThreshold(0.8, 1.2)
        clicks = sample_click(model, np.full(1_000_000, 1.0), rng)
        assert abs(clicks.mean() - 0.5) < 0.002


class TestResponseCsv:
    def _write(self, path, text):
        path.write_text(text, encoding="utf-8")
        return path

    def test_round_trip(self, tmp_path):
        path = self._write(tmp_path / "curve.csv",
                           "energy,click_probability\n0.1,0.0\n0.2,1.0\n")
        model = read_response_csv(path)
        assert model.curve == ((0.1, 0.0), (0.2, 1.0))

    def test_blank_lines_ignored(self, tmp_path):
        path = self._write(tmp_path / "curve.csv",
                           "energy,click_probability\n0.1,0.0\n\n0.2,1.0\n\n")
        assert len(read_response_csv(path).curve) == 2

    def test_header_required(self, tmp_path):
        path = self._write(tmp_path / "curve.csv", "0.1,0.0\n0.2,1.0\n")
        with pytest.raises(MalformedCurve):
            read_response_csv(path)

    def test_bad_number_reports_line(self, tmp_path):
        path = self._write(tmp_path / "curve.csv",
                           "energy,click_probability\n0.1,zero\n0.2,1.0\n")
        with pytest.raises(MalformedCurve, match=":2"):
            read_response_csv(path)

    def test_non_monotone_rejected(self, tmp_path):
        path = self._write(tmp_path / "curve.csv",
                           "energy,click_probability\n0.1,0.5\n0.2,0.4\n")
        with pytest.raises(MalformedCurve):
            read_response_csv(path)


class TestBundledCurve:
    def test_full_and_half_intensity_behavior(self):
        model = bundled_response_curve()
        assert click_probability(model, 1.0) == 1.0
        assert click_probability(model, 0.5) == pytest.approx(HALF_INTENSITY_CLICK_PROB)

    def test_mismatch_gives_random_clicks_at_the_pinned_rate(self):
        # A basis-mismatched full-intensity pulse puts half the light on each
        # arm, so each detector fires independently with probability 0.40.
        model = bundled_response_curve()
        rng = np.random.default_rng(5)
        n = 200_000
        arm = sample_click(model, np.full(n, 0.5), rng)
        assert abs(arm.mean() - HALF_INTENSITY_CLICK_PROB) < 0.004
