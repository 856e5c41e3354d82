import numpy as np
import pytest

from vacusense.errors import InvalidInputError
from vacusense.features import (
    ContactLabel,
    FeatureVector,
    LabeledSample,
    compute_features,
    load_feature_dataset,
    mean_pressure,
    save_feature_dataset,
)
from vacusense.hydraulics import PressureTrace, simulate_trace
from tests.conftest import open_scenario


def make_trace(values, rate=1000.0):
    values = np.asarray(values, dtype=float)
    return PressureTrace(samples=values, sample_rate=rate, duration=len(values) / rate)


class TestMeanPressure:
    def test_constant_trace(self):
        assert mean_pressure(make_trace(np.full(100, 7.5))) == 7.5

    def test_symmetric_pair(self):
        assert mean_pressure(make_trace([1.0, -1.0], rate=1.0)) == 0.0

    def test_matches_naive_summation_oracle(self, catheter, drive):
        trace = simulate_trace(open_scenario(seed=11), catheter, drive, 2.0)
        naive = sum(float(v) for v in trace.samples) / len(trace)
        assert mean_pressure(trace) == pytest.approx(naive, rel=1e-12)


class TestComputeFeatures:
    def test_identity_traces_give_zero(self):
        t = make_trace(np.linspace(-5, 5, 50))
        fv = compute_features(t, t, t)
        assert fv.relative_average_pressure == 0.0
        assert fv.pressure_change_from_prior == 0.0

    def test_arithmetic_from_means(self):
        current = make_trace(np.full(10, 10.0))
        reference = make_trace(np.full(30, 4.0))
        prior = make_trace(np.full(10, 7.0))
        fv = compute_features(current, reference, prior)
        assert fv.relative_average_pressure == pytest.approx(6.0)
        assert fv.pressure_change_from_prior == pytest.approx(3.0)

    def test_first_cycle_prior_equals_reference(self):
        reference = make_trace(np.full(30, 2.0))
        current = make_trace(np.full(20, 9.0))
        fv = compute_features(current, reference, reference)
        assert fv.relative_average_pressure == fv.pressure_change_from_prior

    def test_mixed_durations_allowed(self):
        fv = compute_features(
            make_trace(np.ones(2000)), make_trace(np.ones(3000)), make_trace(np.ones(2000))
        )
        assert fv.relative_average_pressure == 0.0

    def test_sample_rate_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            compute_features(
                make_trace(np.ones(10), rate=1000.0),
                make_trace(np.ones(10), rate=500.0),
                make_trace(np.ones(10), rate=1000.0),
            )

    def test_offset_invariance(self, rng):
        # A shared constant offset must leave both features unchanged.
        for _ in range(50):
            base = rng.normal(size=200)
            ref = rng.normal(size=300)
            pri = rng.normal(size=200)
            offset = float(rng.uniform(-1e5, 1e5))
            fv0 = compute_features(make_trace(base), make_trace(ref), make_trace(pri))
            fv1 = compute_features(
                make_trace(base + offset), make_trace(ref + offset), make_trace(pri + offset)
            )
            assert fv1.relative_average_pressure == pytest.approx(
                fv0.relative_average_pressure, abs=1e-9
            )
            assert fv1.pressure_change_from_prior == pytest.approx(
                fv0.pressure_change_from_prior, abs=1e-9
            )

    def test_relative_pressure_zero_when_current_is_reference(self, rng):
        for _ in range(20):
            x = make_trace(rng.normal(size=100))
            y = make_trace(rng.normal(size=100))
            assert compute_features(x, x, y).relative_average_pressure == 0.0

    def test_permutation_invariance(self, rng):
        values = rng.normal(size=500)
        shuffled = values.copy()
        rng.shuffle(shuffled)
        ref = make_trace(np.zeros(300))
        a = compute_features(make_trace(values), ref, ref)
        b = compute_features(make_trace(shuffled), ref, ref)
        assert a.relative_average_pressure == pytest.approx(
            b.relative_average_pressure, rel=1e-12
        )

    def test_non_finite_features_rejected(self):
        with pytest.raises(InvalidInputError):
            FeatureVector(float("nan"), 0.0)


class TestDatasetCsv:
    def test_round_trip(self, tmp_path):
        samples = [
            LabeledSample(FeatureVector(-450663.0086877, -450000.25), ContactLabel.CONTACT, "t-0"),
            LabeledSample(FeatureVector(12.5, -3.75), ContactLabel.NO_CONTACT, "t-1"),
        ]
        path = tmp_path / "dataset.csv"
        save_feature_dataset(samples, path)
        loaded = load_feature_dataset(path)
        assert loaded == samples

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c,d\n1,2,contact,x\n")
        with pytest.raises(InvalidInputError):
            load_feature_dataset(path)

    def test_unknown_label_rejected(self):
        with pytest.raises(InvalidInputError):
            ContactLabel.from_text("touching")
