"""Declarative YAML configuration for simulator, detector, and classifier.

Schema (all keys optional; unknown keys are rejected):

    catheter:
      length_m: 1.32
      inner_diameter_m: 1.8e-3
      fluid_viscosity_pa_s: 3.5e-3
    drive:
      stroke_volume_m3: 4.0e-7
      frequency_hz: 4.0
      sample_rate_hz: 1000.0
      vacuum_limit_pa: null        # null disables the safety clamp
    scenario:
      heart_rate_bpm: 0.0
      heartbeat_amplitude_pa: 4000.0
      tortuosity_factor: 1.0
      noise_std_pa: null           # null -> 5% of the open-vessel amplitude
    contact_model:
      contact_gain: 5.0
      seal_factor: 0.1
    detector:
      reference_duration_s: 3.0
      sense_duration_s: 2.0
    svm:
      gamma: median                # or a positive number
      c: 1.0

The ``VACUSENSE_CONFIG`` environment variable supplies a default path when a
command does not pass one explicitly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .detector import DEFAULT_REFERENCE_DURATION_S, DEFAULT_SENSE_DURATION_S
from .errors import InvalidParameterError
from .hydraulics import (
    DEFAULT_CONTACT_GAIN,
    DEFAULT_HEARTBEAT_AMPLITUDE_PA,
    DEFAULT_SEAL_FACTOR,
    CatheterSpec,
    SyringeDrive,
)

ENV_CONFIG_PATH = "VACUSENSE_CONFIG"


@dataclass(frozen=True)
class ScenarioDefaults:
    heart_rate_bpm: float = 0.0
    heartbeat_amplitude_pa: float = DEFAULT_HEARTBEAT_AMPLITUDE_PA
    tortuosity_factor: float = 1.0
    noise_std_pa: float | None = None


@dataclass(frozen=True)
class ContactModelConfig:
    contact_gain: float = DEFAULT_CONTACT_GAIN
    seal_factor: float = DEFAULT_SEAL_FACTOR


@dataclass(frozen=True)
class DetectorConfig:
    reference_duration_s: float = DEFAULT_REFERENCE_DURATION_S
    sense_duration_s: float = DEFAULT_SENSE_DURATION_S


@dataclass(frozen=True)
class SvmConfig:
    gamma: float | str = "median"
    c: float = 1.0


@dataclass(frozen=True)
class SimulationConfig:
    catheter: CatheterSpec = field(default_factory=CatheterSpec)
    drive: SyringeDrive = field(default_factory=SyringeDrive)
    scenario: ScenarioDefaults = field(default_factory=ScenarioDefaults)
    contact_model: ContactModelConfig = field(default_factory=ContactModelConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)


def default_config() -> SimulationConfig:
    return SimulationConfig()


def _section(doc: dict, name: str, allowed: set[str]) -> dict:
    section = doc.pop(name, None) or {}
    if not isinstance(section, dict):
        raise InvalidParameterError(f"config section {name!r} must be a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise InvalidParameterError(
            f"unknown keys in config section {name!r}: {sorted(unknown)}"
        )
    return section


def load_config(path: str | Path | None = None) -> SimulationConfig:
    """Load a config file, falling back to $VACUSENSE_CONFIG, then defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH)
    if path is None:
        return default_config()
    doc = yaml.safe_load(Path(path).read_text())
    if doc is None:
        return default_config()
    if not isinstance(doc, dict):
        raise InvalidParameterError("config root must be a mapping")

    cath = _section(doc, "catheter", {"length_m", "inner_diameter_m", "fluid_viscosity_pa_s"})
    drive = _section(
        doc, "drive", {"stroke_volume_m3", "frequency_hz", "sample_rate_hz", "vacuum_limit_pa"}
    )
    scenario = _section(
        doc,
        "scenario",
        {"heart_rate_bpm", "heartbeat_amplitude_pa", "tortuosity_factor", "noise_std_pa"},
    )
    contact = _section(doc, "contact_model", {"contact_gain", "seal_factor"})
    detector = _section(doc, "detector", {"reference_duration_s", "sense_duration_s"})
    svm = _section(doc, "svm", {"gamma", "c"})
    if doc:
        raise InvalidParameterError(f"unknown config sections: {sorted(doc)}")

    defaults = default_config()
    noise = scenario.get("noise_std_pa", defaults.scenario.noise_std_pa)
    gamma = svm.get("gamma", defaults.svm.gamma)
    if gamma != "median":
        gamma = float(gamma)
    return SimulationConfig(
        catheter=CatheterSpec(
            length=float(cath.get("length_m", defaults.catheter.length)),
            inner_diameter=float(
                cath.get("inner_diameter_m", defaults.catheter.inner_diameter)
            ),
            fluid_viscosity=float(
                cath.get("fluid_viscosity_pa_s", defaults.catheter.fluid_viscosity)
            ),
        ),
        drive=SyringeDrive(
            stroke_volume=float(drive.get("stroke_volume_m3", defaults.drive.stroke_volume)),
            frequency=float(drive.get("frequency_hz", defaults.drive.frequency)),
            sample_rate=float(drive.get("sample_rate_hz", defaults.drive.sample_rate)),
            vacuum_limit=(
                None
                if drive.get("vacuum_limit_pa") is None
                else float(drive["vacuum_limit_pa"])
            ),
        ),
        scenario=ScenarioDefaults(
            heart_rate_bpm=float(
                scenario.get("heart_rate_bpm", defaults.scenario.heart_rate_bpm)
            ),
            heartbeat_amplitude_pa=float(
                scenario.get(
                    "heartbeat_amplitude_pa", defaults.scenario.heartbeat_amplitude_pa
                )
            ),
            tortuosity_factor=float(
                scenario.get("tortuosity_factor", defaults.scenario.tortuosity_factor)
            ),
            noise_std_pa=None if noise is None else float(noise),
        ),
        contact_model=ContactModelConfig(
            contact_gain=float(contact.get("contact_gain", defaults.contact_model.contact_gain)),
            seal_factor=float(contact.get("seal_factor", defaults.contact_model.seal_factor)),
        ),
        detector=DetectorConfig(
            reference_duration_s=float(
                detector.get("reference_duration_s", defaults.detector.reference_duration_s)
            ),
            sense_duration_s=float(
                detector.get("sense_duration_s", defaults.detector.sense_duration_s)
            ),
        ),
        svm=SvmConfig(gamma=gamma, c=float(svm.get("c", defaults.svm.c))),
    )


def dump_config(config: SimulationConfig) -> str:
    """Render a config back to its YAML schema (for --show-config output)."""
    doc = {
        "catheter": {
            "length_m": config.catheter.length,
            "inner_diameter_m": config.catheter.inner_diameter,
            "fluid_viscosity_pa_s": config.catheter.fluid_viscosity,
        },
        "drive": {
            "stroke_volume_m3": config.drive.stroke_volume,
            "frequency_hz": config.drive.frequency,
            "sample_rate_hz": config.drive.sample_rate,
            "vacuum_limit_pa": config.drive.vacuum_limit,
        },
        "scenario": {
            "heart_rate_bpm": config.scenario.heart_rate_bpm,
            "heartbeat_amplitude_pa": config.scenario.heartbeat_amplitude_pa,
            "tortuosity_factor": config.scenario.tortuosity_factor,
            "noise_std_pa": config.scenario.noise_std_pa,
        },
        "contact_model": {
            "contact_gain": config.contact_model.contact_gain,
            "seal_factor": config.contact_model.seal_factor,
        },
        "detector": {
            "reference_duration_s": config.detector.reference_duration_s,
            "sense_duration_s": config.detector.sense_duration_s,
        },
        "svm": {"gamma": config.svm.gamma, "c": config.svm.c},
    }
    return yaml.safe_dump(doc, sort_keys=False)
