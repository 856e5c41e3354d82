"""Lumped-parameter hydraulics of a syringe-driven aspiration catheter.

The simulator produces proximal (syringe-side) gauge pressure traces for a
catheter whose plunger is oscillated sinusoidally. Open-vessel traces follow
laminar Hagen-Poiseuille head loss; clot-contact traces follow a closed-system
compliance response whose magnitude dwarfs the open-vessel oscillation. All
quantities are SI (pascals, meters, seconds); conversion to mmHg happens only
at display layers.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .validation import (
    as_sample_array,
    require_in_range,
    require_non_negative,
    require_positive,
)

log = logging.getLogger(__name__)

PA_PER_MMHG = 133.3223684210526

TRACE_FORMAT = "vacusense.pressure-trace"
TRACE_FORMAT_VERSION = 1

#: Default catheter geometry: 1.32 m long, 1.8 mm bore, blood-like viscosity.
DEFAULT_CATHETER_LENGTH_M = 1.32
DEFAULT_CATHETER_BORE_M = 1.8e-3
DEFAULT_VISCOSITY_PA_S = 3.5e-3

#: Default drive: 0.4 mL stroke at 4 Hz, sampled at 1 kHz.
DEFAULT_STROKE_VOLUME_M3 = 0.4e-6
DEFAULT_DRIVE_FREQUENCY_HZ = 4.0
DEFAULT_SAMPLE_RATE_HZ = 1000.0

#: Contact pressure offset as a multiple of the open-vessel oscillation
#: amplitude of the same catheter/drive (the closed-system response knob).
DEFAULT_CONTACT_GAIN = 5.0
#: Attenuation applied to heartbeat and noise once the tip seals on the clot.
DEFAULT_SEAL_FACTOR = 0.1
#: Default measurement noise, as a fraction of the open-vessel amplitude.
DEFAULT_NOISE_FRACTION = 0.05
DEFAULT_HEARTBEAT_AMPLITUDE_PA = 4000.0


class ContactState(str, enum.Enum):
    """Ground-truth condition of the catheter tip in a scenario."""

    OPEN_VESSEL = "open_vessel"
    CLOT_CONTACT = "clot_contact"
    WALL_GRAZE = "wall_graze"


@dataclass(frozen=True)
class CatheterSpec:
    """Geometry and working fluid of the aspiration catheter.

    length: catheter length in meters.
    inner_diameter: lumen bore in meters.
    fluid_viscosity: dynamic viscosity of the working fluid in Pa*s.
    """

    length: float = DEFAULT_CATHETER_LENGTH_M
    inner_diameter: float = DEFAULT_CATHETER_BORE_M
    fluid_viscosity: float = DEFAULT_VISCOSITY_PA_S

    def __post_init__(self) -> None:
        require_positive("length", self.length)
        require_positive("inner_diameter", self.inner_diameter)
        require_positive("fluid_viscosity", self.fluid_viscosity)


@dataclass(frozen=True)
class SyringeDrive:
    """Sinusoidal plunger excitation applied at the proximal end.

    stroke_volume: total displaced volume per half-cycle, m^3.
    frequency: oscillation frequency, Hz.
    sample_rate: pressure sampling rate, Hz (>= 10x frequency).
    vacuum_limit: optional safety ceiling on vacuum magnitude, Pa. Simulated
        pressures below -vacuum_limit are clamped and the clamp is logged.
    """

    stroke_volume: float = DEFAULT_STROKE_VOLUME_M3
    frequency: float = DEFAULT_DRIVE_FREQUENCY_HZ
    waveform: str = "sinusoidal"
    sample_rate: float = DEFAULT_SAMPLE_RATE_HZ
    vacuum_limit: float | None = None

    def __post_init__(self) -> None:
        require_positive("stroke_volume", self.stroke_volume)
        require_positive("frequency", self.frequency)
        require_positive("sample_rate", self.sample_rate)
        if self.waveform != "sinusoidal":
            raise InvalidParameterError(f"unsupported waveform {self.waveform!r}")
        if self.sample_rate < 10.0 * self.frequency:
            raise InvalidParameterError(
                "sample_rate must be at least 10x the drive frequency "
                f"({self.sample_rate} < 10 * {self.frequency})"
            )
        if self.vacuum_limit is not None:
            require_positive("vacuum_limit", self.vacuum_limit)

    @property
    def peak_flow(self) -> float:
        """Peak plunger flow rate, m^3/s, for sinusoidal displacement."""
        return self.stroke_volume * math.pi * self.frequency


@dataclass(frozen=True)
class VesselScenario:
    """Vessel-side configuration for one simulated excitation.

    heart_rate: beats per minute; 0 means constant (non-pulsatile) flow.
    heartbeat_amplitude: pulsatile pressure amplitude, Pa.
    tortuosity_factor: >= 1, scales the effective flow resistance of the path.
    noise_std: Gaussian measurement noise, Pa. ``None`` selects the default of
        5% of this scenario's open-vessel oscillation amplitude.
    catheter_tip_to_clot_distance: informational label in meters; it does not
        alter the generated signal.
    """

    contact_state: ContactState = ContactState.OPEN_VESSEL
    heart_rate: float = 0.0
    heartbeat_amplitude: float = DEFAULT_HEARTBEAT_AMPLITUDE_PA
    tortuosity_factor: float = 1.0
    noise_std: float | None = None
    catheter_tip_to_clot_distance: float | None = None
    rng_seed: int = 0

    def __post_init__(self) -> None:
        require_in_range("heart_rate", self.heart_rate, 0.0, 200.0)
        require_non_negative("heartbeat_amplitude", self.heartbeat_amplitude)
        if self.tortuosity_factor < 1.0:
            raise InvalidParameterError(
                f"tortuosity_factor must be >= 1, got {self.tortuosity_factor}"
            )
        if self.noise_std is not None:
            require_non_negative("noise_std", self.noise_std)
        if not isinstance(self.contact_state, ContactState):
            object.__setattr__(self, "contact_state", ContactState(self.contact_state))


@dataclass(eq=False)
class PressureTrace:
    """A uniformly sampled gauge-pressure signal, in pascals."""

    samples: np.ndarray
    sample_rate: float
    duration: float
    scenario_label: ContactState | None = None

    def __post_init__(self) -> None:
        arr = as_sample_array("samples", self.samples)
        require_positive("sample_rate", self.sample_rate)
        require_positive("duration", self.duration)
        expected = round(self.sample_rate * self.duration)
        if arr.size != expected:
            raise InvalidInputError(
                f"sample count {arr.size} does not match "
                f"round(sample_rate * duration) = {expected}"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        self.samples = arr

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) / self.sample_rate

    def digest(self) -> str:
        """Stable content hash used by session replay to detect tampering."""
        import hashlib

        h = hashlib.sha256()
        h.update(repr((float(self.sample_rate), float(self.duration))).encode())
        h.update(self.samples.tobytes())
        return h.hexdigest()


def flow_resistance(cath: CatheterSpec, tortuosity: float = 1.0) -> float:
    """Laminar flow resistance of the catheter path, Pa*s/m^3.

    R = tortuosity * 128 * eta * L / (pi * D^4). The quartic bore dependence
    is what makes narrow aspiration catheters such stiff hydraulic loads.
    """
    if tortuosity < 1.0:
        raise InvalidParameterError(f"tortuosity must be >= 1, got {tortuosity}")
    return (
        tortuosity
        * 128.0
        * cath.fluid_viscosity
        * cath.length
        / (math.pi * cath.inner_diameter**4)
    )


def pressure_drop(resistance: float, flow_rate: float) -> float:
    """Pressure drop across the catheter for a given flow rate, Pa."""
    require_positive("resistance", resistance)
    return resistance * flow_rate


def plunger_flow(drive: SyringeDrive, t: np.ndarray) -> np.ndarray:
    """Instantaneous plunger flow rate Q(t), m^3/s, for sinusoidal motion."""
    return drive.peak_flow * np.sin(2.0 * math.pi * drive.frequency * np.asarray(t))


def displaced_volume(drive: SyringeDrive, t: np.ndarray) -> np.ndarray:
    """Cumulative displaced volume, m^3, ranging over [0, stroke_volume]."""
    return (
        0.5
        * drive.stroke_volume
        * (1.0 - np.cos(2.0 * math.pi * drive.frequency * np.asarray(t)))
    )


def oscillation_amplitude(
    cath: CatheterSpec, drive: SyringeDrive, tortuosity: float = 1.0
) -> float:
    """Peak open-vessel pressure oscillation R * Q_peak, Pa."""
    return flow_resistance(cath, tortuosity) * drive.peak_flow


def contact_compliance(
    cath: CatheterSpec, drive: SyringeDrive, contact_gain: float = DEFAULT_CONTACT_GAIN
) -> float:
    """Effective compliance of the sealed catheter-clot system, m^3/Pa.

    Chosen so that the mean contact vacuum equals ``contact_gain`` times the
    open-vessel oscillation amplitude of the same catheter and drive. The
    sealed system is dominated by the catheter walls, so the value does not
    depend on vessel tortuosity.
    """
    require_positive("contact_gain", contact_gain)
    return drive.stroke_volume / (
        2.0 * contact_gain * oscillation_amplitude(cath, drive, 1.0)
    )


def default_noise_std(
    cath: CatheterSpec, drive: SyringeDrive, tortuosity: float = 1.0
) -> float:
    """Default measurement noise: 5% of the open-vessel amplitude, Pa."""
    return DEFAULT_NOISE_FRACTION * oscillation_amplitude(cath, drive, tortuosity)


def simulate_trace(
    scenario: VesselScenario,
    cath: CatheterSpec,
    drive: SyringeDrive,
    duration: float,
    *,
    contact_gain: float = DEFAULT_CONTACT_GAIN,
    seal_factor: float = DEFAULT_SEAL_FACTOR,
) -> PressureTrace:
    """Generate one proximal pressure trace for the given scenario.

    Open-vessel (and wall-graze) traces are the Hagen-Poiseuille response
    -R*Q(t) plus an optional heartbeat sinusoid at heart_rate/60 Hz with a
    random phase, plus Gaussian noise. Clot-contact traces are the sealed
    compliance response -V(t)/C with heartbeat and noise attenuated by
    ``seal_factor``. Deterministic for a fixed ``scenario.rng_seed``.
    """
    require_positive("duration", duration)
    n = round(drive.sample_rate * duration)
    if n <= 0 or n > 50_000_000:
        raise InvalidParameterError(
            f"duration * sample_rate = {n} samples is outside the supported range"
        )

    t = np.arange(n) / drive.sample_rate
    rng = np.random.default_rng(scenario.rng_seed)

    heartbeat = np.zeros(n)
    if scenario.heart_rate > 0.0 and scenario.heartbeat_amplitude > 0.0:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        heartbeat = scenario.heartbeat_amplitude * np.sin(
            2.0 * math.pi * (scenario.heart_rate / 60.0) * t + phase
        )

    noise_std = scenario.noise_std
    if noise_std is None:
        noise_std = default_noise_std(cath, drive, scenario.tortuosity_factor)
    noise = rng.normal(0.0, noise_std, n) if noise_std > 0.0 else np.zeros(n)

    if scenario.contact_state is ContactState.CLOT_CONTACT:
        compliance = contact_compliance(cath, drive, contact_gain)
        pressure = -displaced_volume(drive, t) / compliance
        pressure += seal_factor * (heartbeat + noise)
    else:
        resistance = flow_resistance(cath, scenario.tortuosity_factor)
        pressure = -resistance * plunger_flow(drive, t)
        pressure += heartbeat + noise

    if drive.vacuum_limit is not None:
        floor = -drive.vacuum_limit
        clipped = int(np.count_nonzero(pressure < floor))
        if clipped:
            log.warning(
                "vacuum clamp engaged: %d of %d samples limited to %.1f Pa",
                clipped,
                n,
                floor,
            )
            pressure = np.maximum(pressure, floor)

    return PressureTrace(
        samples=pressure,
        sample_rate=drive.sample_rate,
        duration=duration,
        scenario_label=scenario.contact_state,
    )


def open_vessel_mean(
    cath: CatheterSpec, drive: SyringeDrive, duration: float, tortuosity: float = 1.0
) -> float:
    """Analytic window mean of the noiseless open-vessel response, Pa.

    The time average of -R*Q(t) over [0, T] equals -R*(V(T)-V(0))/T.
    """
    resistance = flow_resistance(cath, tortuosity)
    net_volume = float(displaced_volume(drive, np.asarray(duration)))
    return -resistance * net_volume / duration


def contact_mean(
    cath: CatheterSpec, drive: SyringeDrive, contact_gain: float = DEFAULT_CONTACT_GAIN
) -> float:
    """Analytic full-period mean of the noiseless contact response, Pa."""
    compliance = contact_compliance(cath, drive, contact_gain)
    return -0.5 * drive.stroke_volume / compliance


# ---------------------------------------------------------------------------
# Trace persistence


def trace_to_csv(trace: PressureTrace, path: str | Path) -> None:
    """Write a trace as CSV with columns time_s, pressure_pa."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "pressure_pa"])
        for t, p in zip(trace.times, trace.samples):
            writer.writerow([repr(float(t)), repr(float(p))])


def trace_from_csv(path: str | Path, scenario_label: ContactState | None = None) -> PressureTrace:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["time_s", "pressure_pa"]:
            raise InvalidInputError(f"unexpected CSV header {header!r} in {path}")
        rows = [(float(a), float(b)) for a, b in reader]
    if len(rows) < 2:
        raise InvalidInputError("trace CSV must contain at least two samples")
    times = np.array([r[0] for r in rows])
    dt = float(np.median(np.diff(times)))
    sample_rate = 1.0 / dt
    samples = np.array([r[1] for r in rows])
    return PressureTrace(
        samples=samples,
        sample_rate=sample_rate,
        duration=len(samples) / sample_rate,
        scenario_label=scenario_label,
    )


def trace_to_json(trace: PressureTrace) -> dict:
    """Versioned, binary-free JSON envelope for a trace."""
    return {
        "format": TRACE_FORMAT,
        "version": TRACE_FORMAT_VERSION,
        "sample_rate_hz": float(trace.sample_rate),
        "duration_s": float(trace.duration),
        "scenario_label": trace.scenario_label.value if trace.scenario_label else None,
        "samples_pa": [float(v) for v in trace.samples],
    }


def trace_from_json(doc: dict) -> PressureTrace:
    if doc.get("format") != TRACE_FORMAT:
        raise InvalidInputError(f"not a pressure-trace document: {doc.get('format')!r}")
    if doc.get("version") != TRACE_FORMAT_VERSION:
        raise InvalidInputError(f"unsupported trace version {doc.get('version')!r}")
    label = doc.get("scenario_label")
    return PressureTrace(
        samples=np.asarray(doc["samples_pa"], dtype=np.float64),
        sample_rate=float(doc["sample_rate_hz"]),
        duration=float(doc["duration_s"]),
        scenario_label=ContactState(label) if label else None,
    )


def save_trace_json(trace: PressureTrace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(trace_to_json(trace)))


def load_trace_json(path: str | Path) -> PressureTrace:
    return trace_from_json(json.loads(Path(path).read_text()))
