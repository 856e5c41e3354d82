import json
import logging

import numpy as np
import pytest

from vacusense.errors import InvalidInputError, InvalidParameterError
from vacusense.hydraulics import (
    CatheterSpec,
    ContactState,
    PressureTrace,
    SyringeDrive,
    VesselScenario,
    contact_mean,
    default_noise_std,
    flow_resistance,
    open_vessel_mean,
    oscillation_amplitude,
    plunger_flow,
    pressure_drop,
    simulate_trace,
    trace_from_csv,
    trace_from_json,
    trace_to_csv,
    trace_to_json,
)
from tests.conftest import contact_scenario, open_scenario

# Frozen from direct arithmetic: 128 * 3.5e-3 * 1.32 / (pi * (1.8e-3)**4).
EXPECTED_RESISTANCE = 17931311375.328312
# Peak sinusoidal plunger flow for a 0.4 mL stroke at 4 Hz.
EXPECTED_PEAK_FLOW = 5.026548245743669e-06
EXPECTED_PEAK_DROP = 90132.60173754003


class TestFlowResistance:
    def test_matches_frozen_arithmetic(self):
        cath = CatheterSpec(length=1.32, inner_diameter=1.8e-3, fluid_viscosity=3.5e-3)
        assert flow_resistance(cath, 1.0) == pytest.approx(EXPECTED_RESISTANCE, rel=1e-14)

    def test_doubling_diameter_divides_by_sixteen(self):
        base = CatheterSpec()
        wide = CatheterSpec(inner_diameter=base.inner_diameter * 2)
        assert flow_resistance(wide) == pytest.approx(flow_resistance(base) / 16.0, rel=1e-12)

    def test_rejects_nonpositive_geometry(self):
        with pytest.raises(InvalidParameterError):
            CatheterSpec(length=0.0)
        with pytest.raises(InvalidParameterError):
            CatheterSpec(inner_diameter=-1e-3)
        with pytest.raises(InvalidParameterError):
            CatheterSpec(fluid_viscosity=0.0)

    def test_rejects_subunit_tortuosity(self):
        with pytest.raises(InvalidParameterError):
            flow_resistance(CatheterSpec(), 0.5)

    def test_tortuosity_scales_linearly(self):
        cath = CatheterSpec()
        assert flow_resistance(cath, 2.5) == pytest.approx(
            2.5 * flow_resistance(cath, 1.0), rel=1e-14
        )


class TestPressureDrop:
    def test_zero_flow_zero_drop(self):
        assert pressure_drop(EXPECTED_RESISTANCE, 0.0) == 0.0

    def test_linearity_in_flow(self):
        q = 3.2e-6
        assert pressure_drop(EXPECTED_RESISTANCE, 2 * q) == pytest.approx(
            2 * pressure_drop(EXPECTED_RESISTANCE, q), rel=1e-15
        )

    def test_peak_flow_drop_matches_frozen_value(self, drive):
        assert drive.peak_flow == pytest.approx(EXPECTED_PEAK_FLOW, rel=1e-14)
        assert pressure_drop(EXPECTED_RESISTANCE, drive.peak_flow) == pytest.approx(
            EXPECTED_PEAK_DROP, rel=1e-13
        )

    def test_rejects_nonpositive_resistance(self):
        with pytest.raises(InvalidParameterError):
            pressure_drop(0.0, 1e-6)

    def test_linearity_and_quartic_scaling_properties(self, rng):
        # Random valid parameters; both laws must hold to 1e-12 relative.
        for _ in range(200):
            cath = CatheterSpec(
                length=float(rng.uniform(0.2, 2.0)),
                inner_diameter=float(rng.uniform(0.5e-3, 4e-3)),
                fluid_viscosity=float(rng.uniform(1e-3, 8e-3)),
            )
            tort = float(rng.uniform(1.0, 3.0))
            q = float(rng.uniform(1e-8, 1e-5))
            k = float(rng.uniform(0.1, 10.0))
            r = flow_resistance(cath, tort)
            assert pressure_drop(r, k * q) == pytest.approx(
                k * pressure_drop(r, q), rel=1e-12
            )
            shrunk = CatheterSpec(
                length=cath.length,
                inner_diameter=cath.inner_diameter / 2.0,
                fluid_viscosity=cath.fluid_viscosity,
            )
            assert flow_resistance(shrunk, tort) == pytest.approx(16.0 * r, rel=1e-12)


class TestSimulateTrace:
    def test_noiseless_constant_flow_mean_matches_analytic(self, catheter, drive):
        # Full drive periods: the analytic window mean of -R*Q(t) is zero.
        scenario = open_scenario(noise_std=0.0, heart_rate=0.0)
        trace = simulate_trace(scenario, catheter, drive, duration=2.0)
        analytic = open_vessel_mean(catheter, drive, 2.0)
        scale = oscillation_amplitude(catheter, drive)
        assert abs(float(np.mean(trace.samples)) - analytic) <= 1e-9 * scale

    def test_noiseless_trace_is_pure_sinusoid(self, catheter, drive):
        scenario = open_scenario(noise_std=0.0, heart_rate=0.0)
        trace = simulate_trace(scenario, catheter, drive, duration=1.0)
        t = trace.times
        expected = -flow_resistance(catheter) * plunger_flow(drive, t)
        np.testing.assert_allclose(trace.samples, expected, rtol=0, atol=1e-9)

    def test_same_seed_bit_identical(self, catheter, drive):
        a = simulate_trace(open_scenario(seed=42, heart_rate=70.0), catheter, drive, 2.0)
        b = simulate_trace(open_scenario(seed=42, heart_rate=70.0), catheter, drive, 2.0)
        assert np.array_equal(a.samples, b.samples)

    def test_different_seeds_differ(self, catheter, drive):
        a = simulate_trace(open_scenario(seed=1), catheter, drive, 2.0)
        b = simulate_trace(open_scenario(seed=2), catheter, drive, 2.0)
        assert not np.array_equal(a.samples, b.samples)

    def test_wall_graze_indistinguishable_from_open(self, catheter, drive):
        graze = VesselScenario(
            contact_state=ContactState.WALL_GRAZE, rng_seed=7, heart_rate=70.0
        )
        open_ = open_scenario(seed=7, heart_rate=70.0)
        a = simulate_trace(graze, catheter, drive, 2.0)
        b = simulate_trace(open_, catheter, drive, 2.0)
        assert np.array_equal(a.samples, b.samples)

    def test_contact_mean_separated_from_open_mean(self, catheter, drive):
        # Closed-form means of the generative model act as the oracle.
        gap = contact_mean(catheter, drive) - open_vessel_mean(catheter, drive, 2.0)
        sigma_sep = 4.0 * oscillation_amplitude(catheter, drive)
        assert gap < -sigma_sep
        a = simulate_trace(contact_scenario(seed=5), catheter, drive, 2.0)
        b = simulate_trace(open_scenario(seed=5), catheter, drive, 2.0)
        assert float(np.mean(a.samples)) - float(np.mean(b.samples)) < -sigma_sep

    def test_mean_separation_over_1000_seeded_pairs(self, catheter, drive):
        # With default noise the two mean distributions must not overlap.
        open_means = []
        contact_means = []
        for seed in range(1000):
            hr = [0.0, 70.0, 100.0][seed % 3]
            o = simulate_trace(
                open_scenario(seed=seed, heart_rate=hr), catheter, drive, 2.0
            )
            c = simulate_trace(
                contact_scenario(seed=seed, heart_rate=hr), catheter, drive, 2.0
            )
            open_means.append(float(np.mean(o.samples)))
            contact_means.append(float(np.mean(c.samples)))
        assert max(contact_means) < min(open_means)

    def test_rejects_bad_duration(self, catheter, drive):
        with pytest.raises(InvalidParameterError):
            simulate_trace(open_scenario(), catheter, drive, 0.0)
        with pytest.raises(InvalidParameterError):
            simulate_trace(open_scenario(), catheter, drive, 1e9)

    def test_vacuum_clamp_enforced_and_logged(self, catheter, caplog):
        drive = SyringeDrive(vacuum_limit=0.5 * EXPECTED_PEAK_DROP)
        with caplog.at_level(logging.WARNING, logger="vacusense.hydraulics"):
            trace = simulate_trace(
                open_scenario(noise_std=0.0), catheter, drive, duration=1.0
            )
        assert float(np.min(trace.samples)) >= -0.5 * EXPECTED_PEAK_DROP
        assert any("vacuum clamp" in rec.message for rec in caplog.records)

    def test_default_noise_is_five_percent_of_amplitude(self, catheter, drive):
        assert default_noise_std(catheter, drive, 2.0) == pytest.approx(
            0.05 * oscillation_amplitude(catheter, drive, 2.0), rel=1e-14
        )


class TestScenarioValidation:
    def test_heart_rate_bounds(self):
        with pytest.raises(InvalidParameterError):
            VesselScenario(heart_rate=250.0)
        with pytest.raises(InvalidParameterError):
            VesselScenario(heart_rate=-1.0)

    def test_tortuosity_bound(self):
        with pytest.raises(InvalidParameterError):
            VesselScenario(tortuosity_factor=0.9)

    def test_noise_bound(self):
        with pytest.raises(InvalidParameterError):
            VesselScenario(noise_std=-1.0)


class TestPressureTrace:
    def test_sample_count_must_match_duration(self):
        with pytest.raises(InvalidInputError):
            PressureTrace(samples=np.zeros(10), sample_rate=1000.0, duration=2.0)

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidInputError):
            PressureTrace(
                samples=np.array([0.0, np.nan]), sample_rate=1.0, duration=2.0
            )

    def test_samples_are_read_only(self, catheter, drive):
        trace = simulate_trace(open_scenario(), catheter, drive, 1.0)
        with pytest.raises(ValueError):
            trace.samples[0] = 123.0


class TestTracePersistence:
    def test_csv_round_trip(self, tmp_path, catheter, drive):
        trace = simulate_trace(open_scenario(seed=3), catheter, drive, 1.0)
        path = tmp_path / "trace.csv"
        trace_to_csv(trace, path)
        loaded = trace_from_csv(path, scenario_label=ContactState.OPEN_VESSEL)
        assert loaded.sample_rate == pytest.approx(trace.sample_rate)
        np.testing.assert_array_equal(loaded.samples, trace.samples)

    def test_json_round_trip_is_exact(self, catheter, drive):
        trace = simulate_trace(contact_scenario(seed=9), catheter, drive, 2.0)
        doc = json.loads(json.dumps(trace_to_json(trace)))
        loaded = trace_from_json(doc)
        assert np.array_equal(loaded.samples, trace.samples)
        assert loaded.sample_rate == trace.sample_rate
        assert loaded.scenario_label is ContactState.CLOT_CONTACT

    def test_json_rejects_other_formats(self):
        with pytest.raises(InvalidInputError):
            trace_from_json({"format": "something-else"})


class TestDriveValidation:
    def test_sample_rate_floor(self):
        with pytest.raises(InvalidParameterError):
            SyringeDrive(frequency=4.0, sample_rate=30.0)

    def test_waveform_restricted(self):
        with pytest.raises(InvalidParameterError):
            SyringeDrive(waveform="trapezoidal")
