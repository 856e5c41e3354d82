"""The two classifier features computed from raw pressure traces.

Both features are plain window means, which makes them invariant to any
constant pressure offset shared by the traces (vessel stiffness, transducer
bias) -- the property the sensing approach depends on.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .hydraulics import PressureTrace


class ContactLabel(enum.IntEnum):
    """Binary class label; the integer value is the SVM target (+1/-1)."""

    CONTACT = 1
    NO_CONTACT = -1

    @property
    def text(self) -> str:
        return "contact" if self is ContactLabel.CONTACT else "no_contact"

    @classmethod
    def from_text(cls, text: str) -> "ContactLabel":
        mapping = {"contact": cls.CONTACT, "no_contact": cls.NO_CONTACT}
        try:
            return mapping[text]
        except KeyError:
            raise InvalidInputError(f"unknown contact label {text!r}") from None


@dataclass(frozen=True)
class FeatureVector:
    """Classifier inputs, both in pascals."""

    relative_average_pressure: float
    pressure_change_from_prior: float

    def __post_init__(self) -> None:
        if not (
            math.isfinite(self.relative_average_pressure)
            and math.isfinite(self.pressure_change_from_prior)
        ):
            raise InvalidInputError("feature values must be finite")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.relative_average_pressure, self.pressure_change_from_prior]
        )


@dataclass(frozen=True)
class LabeledSample:
    features: FeatureVector
    label: ContactLabel
    scenario_id: str = ""


def mean_pressure(trace: PressureTrace) -> float:
    """Arithmetic mean of the trace samples, Pa."""
    if len(trace) == 0:
        raise InvalidInputError("cannot average an empty trace")
    return float(np.mean(trace.samples))


def compute_features(
    current: PressureTrace, reference: PressureTrace, prior: PressureTrace
) -> FeatureVector:
    """Relative average pressure and change-from-prior for one sense window.

    The traces may have different durations (the reference window is longer
    than sense windows) but must share a sample rate.
    """
    rates = {current.sample_rate, reference.sample_rate, prior.sample_rate}
    if len(rates) != 1:
        raise InvalidInputError(f"sample-rate mismatch across traces: {sorted(rates)}")
    current_mean = mean_pressure(current)
    return FeatureVector(
        relative_average_pressure=current_mean - mean_pressure(reference),
        pressure_change_from_prior=current_mean - mean_pressure(prior),
    )


# ---------------------------------------------------------------------------
# Labeled feature datasets (CSV)

DATASET_HEADER = [
    "relative_average_pressure_pa",
    "pressure_change_from_prior_pa",
    "label",
    "scenario_id",
]


def save_feature_dataset(samples: list[LabeledSample], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DATASET_HEADER)
        for s in samples:
            writer.writerow(
                [
                    repr(s.features.relative_average_pressure),
                    repr(s.features.pressure_change_from_prior),
                    s.label.text,
                    s.scenario_id,
                ]
            )


def load_feature_dataset(path: str | Path) -> list[LabeledSample]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DATASET_HEADER:
            raise InvalidInputError(f"unexpected dataset header {header!r} in {path}")
        samples = []
        for row in reader:
            if not row:
                continue
            rel, delta, label, scenario_id = row
            samples.append(
                LabeledSample(
                    features=FeatureVector(float(rel), float(delta)),
                    label=ContactLabel.from_text(label),
                    scenario_id=scenario_id,
                )
            )
    return samples


def features_matrix(samples: list[LabeledSample]) -> tuple[np.ndarray, np.ndarray]:
    """Stack labeled samples into (X, y) arrays for training."""
    if not samples:
        raise InvalidInputError("dataset is empty")
    X = np.array([s.features.as_array() for s in samples])
    y = np.array([int(s.label) for s in samples])
    return X, y
