"""Training-corpus construction, benchtop validation protocol, and metrics.

The corpus builder and benchtop runner reenact the physical data-collection
procedure on the simulator: a long reference window captured far from the
clot, then sense windows at decreasing tip-to-clot distances with the contact
sample last. Trials are independent, pre-seeded, and may run in parallel.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import SimulationConfig, default_config
from .detector import DetectionSession, SessionState
from .errors import InvalidInputError, InvalidParameterError
from .features import ContactLabel, LabeledSample, compute_features
from .hydraulics import ContactState, VesselScenario, simulate_trace
from .svm import SvmModel

log = logging.getLogger(__name__)

#: Distances (mm) at which labeled windows are collected in each trial; the
#: reference is captured farther out and contact is the final 0 mm window.
REFERENCE_DISTANCE_MM = 150.0
NONCONTACT_DISTANCES_MM = (20.0, 10.0, 5.0)
CONTACT_DISTANCE_MM = 0.0

TRAINING_TRIALS = 19


@dataclass(frozen=True)
class BenchLocation:
    """One clot placement; tortuosity encodes how contorted the path is."""

    location_id: str
    tortuosity: float
    heartbeat_amplitude_pa: float = 4000.0


def default_locations() -> list[BenchLocation]:
    """Ten placements spanning gentle to highly tortuous paths."""
    tortuosities = [1.0, 1.15, 1.3, 1.45, 1.6, 1.8, 2.0, 2.2, 2.5, 2.8]
    return [
        BenchLocation(location_id=f"loc-{i:02d}", tortuosity=t)
        for i, t in enumerate(tortuosities)
    ]


@dataclass(frozen=True)
class BenchProtocol:
    locations: list[BenchLocation] = field(default_factory=default_locations)
    trials_per_location: int = 15
    noncontact_distances_mm: tuple[float, ...] = NONCONTACT_DISTANCES_MM
    heart_rate_blocks: tuple[float, ...] = (0.0, 70.0, 100.0)
    extra_sample_probability: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.locations:
            raise InvalidParameterError("protocol needs at least one location")
        if self.trials_per_location <= 0:
            raise InvalidParameterError("trials_per_location must be positive")
        if self.trials_per_location % len(self.heart_rate_blocks) != 0:
            raise InvalidParameterError(
                "trials_per_location must split evenly across heart-rate blocks"
            )
        if not (0.0 <= self.extra_sample_probability < 1.0):
            raise InvalidParameterError("extra_sample_probability must be in [0, 1)")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise InvalidParameterError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def errors(self) -> int:
        return self.fp + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )

    @classmethod
    def tally(cls, pairs) -> "ConfusionCounts":
        """Count (actual, estimated) ContactLabel pairs."""
        tp = fp = fn = tn = 0
        for actual, estimated in pairs:
            if actual is ContactLabel.CONTACT:
                if estimated is ContactLabel.CONTACT:
                    tp += 1
                else:
                    fn += 1
            else:
                if estimated is ContactLabel.CONTACT:
                    fp += 1
                else:
                    tn += 1
        return cls(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass(frozen=True)
class MetricsReport:
    """Standard confusion-derived measures; None marks a 0/0 ratio.

    Any undefined metric comes with an explanation in ``notes`` rather than
    a silent zero.
    """

    accuracy: float | None
    precision: float | None
    recall: float | None
    specificity: float | None
    f1: float | None
    f2: float | None
    notes: dict[str, str] = field(default_factory=dict)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def _f_beta(precision: float | None, recall: float | None, beta: float) -> float | None:
    if precision is None or recall is None:
        return None
    denom = beta * beta * precision + recall
    if denom == 0.0:
        return None
    return (1.0 + beta * beta) * precision * recall / denom


def metrics(counts: ConfusionCounts) -> MetricsReport:
    """Accuracy, precision, recall, specificity, F1, and F2 from counts."""
    if counts.total == 0:
        raise InvalidInputError("confusion counts are all zero")
    notes: dict[str, str] = {}
    precision = _ratio(counts.tp, counts.tp + counts.fp)
    if precision is None:
        notes["precision"] = "undefined: no positive predictions (tp + fp == 0)"
    recall = _ratio(counts.tp, counts.tp + counts.fn)
    if recall is None:
        notes["recall"] = "undefined: no positive ground truth (tp + fn == 0)"
    specificity = _ratio(counts.tn, counts.tn + counts.fp)
    if specificity is None:
        notes["specificity"] = "undefined: no negative ground truth (tn + fp == 0)"
    f1 = _f_beta(precision, recall, 1.0)
    if f1 is None and "precision" not in notes and "recall" not in notes:
        notes["f1"] = "undefined: precision and recall are both zero"
    f2 = _f_beta(precision, recall, 2.0)
    if f2 is None and "precision" not in notes and "recall" not in notes:
        notes["f2"] = "undefined: precision and recall are both zero"
    return MetricsReport(
        accuracy=(counts.tp + counts.tn) / counts.total,
        precision=precision,
        recall=recall,
        specificity=specificity,
        f1=f1,
        f2=f2,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Training corpus


def build_training_corpus(
    seed: int = 0, config: SimulationConfig | None = None
) -> list[LabeledSample]:
    """Simulate the straight-vessel labeling protocol: 19 trials x 4 windows.

    Each trial captures a reference far from the clot, three non-contact
    windows at decreasing distances, then one contact window, with the prior
    window chained exactly as in the live detection loop. Yields 57
    no-contact and 19 contact samples.
    """
    config = config or default_config()
    rng = np.random.default_rng(seed)
    samples: list[LabeledSample] = []
    for trial in range(TRAINING_TRIALS):
        trial_seeds = rng.integers(0, 2**63 - 1, size=8)
        reference = simulate_trace(
            _scenario(config, ContactState.OPEN_VESSEL, 0.0, 1.0, int(trial_seeds[0]),
                      REFERENCE_DISTANCE_MM),
            config.catheter,
            config.drive,
            config.detector.reference_duration_s,
            contact_gain=config.contact_model.contact_gain,
            seal_factor=config.contact_model.seal_factor,
        )
        prior = reference
        plan = [
            (d, ContactState.OPEN_VESSEL) for d in NONCONTACT_DISTANCES_MM
        ] + [(CONTACT_DISTANCE_MM, ContactState.CLOT_CONTACT)]
        for k, (distance, state) in enumerate(plan, start=1):
            trace = simulate_trace(
                _scenario(config, state, 0.0, 1.0, int(trial_seeds[k]), distance),
                config.catheter,
                config.drive,
                config.detector.sense_duration_s,
                contact_gain=config.contact_model.contact_gain,
                seal_factor=config.contact_model.seal_factor,
            )
            fv = compute_features(trace, reference, prior)
            label = (
                ContactLabel.CONTACT
                if state is ContactState.CLOT_CONTACT
                else ContactLabel.NO_CONTACT
            )
            samples.append(
                LabeledSample(
                    features=fv,
                    label=label,
                    scenario_id=f"train-{trial:02d}-{distance:g}mm",
                )
            )
            if label is ContactLabel.NO_CONTACT:
                prior = trace
    return samples


def _scenario(
    config: SimulationConfig,
    state: ContactState,
    heart_rate: float,
    tortuosity: float,
    seed: int,
    distance_mm: float,
) -> VesselScenario:
    return VesselScenario(
        contact_state=state,
        heart_rate=heart_rate,
        heartbeat_amplitude=config.scenario.heartbeat_amplitude_pa,
        tortuosity_factor=tortuosity,
        noise_std=config.scenario.noise_std_pa,
        catheter_tip_to_clot_distance=distance_mm / 1000.0,
        rng_seed=seed,
    )


# ---------------------------------------------------------------------------
# Benchtop run


@dataclass(frozen=True)
class SampleOutcome:
    location_id: str
    trial: int
    sample: int
    heart_rate: float
    distance_mm: float
    actual: ContactLabel
    verdict: ContactLabel
    decision_score: float
    relative_average_pressure_pa: float
    pressure_change_from_prior_pa: float


@dataclass(frozen=True)
class BenchReport:
    counts: ConfusionCounts
    per_location: dict[str, ConfusionCounts]
    per_heart_rate: dict[float, ConfusionCounts]
    outcomes: list[SampleOutcome]
    truncated_trials: int

    @property
    def accuracy(self) -> float:
        return (self.counts.tp + self.counts.tn) / self.counts.total


@dataclass(frozen=True)
class _TrialPlan:
    location: BenchLocation
    trial: int
    heart_rate: float
    distances_mm: tuple[float, ...]  # non-contact windows, in sampling order
    seeds: tuple[int, ...]  # reference seed + one per sample


def _plan_trials(protocol: BenchProtocol, config: SimulationConfig) -> list[_TrialPlan]:
    rng = np.random.default_rng(protocol.seed)
    per_block = protocol.trials_per_location // len(protocol.heart_rate_blocks)
    plans: list[_TrialPlan] = []
    for location in protocol.locations:
        for trial in range(protocol.trials_per_location):
            heart_rate = protocol.heart_rate_blocks[trial // per_block]
            distances = list(protocol.noncontact_distances_mm)
            if rng.random() < protocol.extra_sample_probability:
                distances.append(float(rng.choice(protocol.noncontact_distances_mm)))
            seeds = rng.integers(0, 2**63 - 1, size=len(distances) + 2)
            plans.append(
                _TrialPlan(
                    location=location,
                    trial=trial,
                    heart_rate=heart_rate,
                    distances_mm=tuple(distances),
                    seeds=tuple(int(s) for s in seeds),
                )
            )
    return plans


def _run_trial(
    plan: _TrialPlan, model: SvmModel, config: SimulationConfig
) -> tuple[list[SampleOutcome], bool]:
    try:
        session = DetectionSession(
            model,
            reference_duration=config.detector.reference_duration_s,
            sense_duration=config.detector.sense_duration_s,
        )
        reference = simulate_trace(
            _scenario(
                config,
                ContactState.OPEN_VESSEL,
                plan.heart_rate,
                plan.location.tortuosity,
                plan.seeds[0],
                REFERENCE_DISTANCE_MM,
            ),
            config.catheter,
            config.drive,
            config.detector.reference_duration_s,
            contact_gain=config.contact_model.contact_gain,
            seal_factor=config.contact_model.seal_factor,
        )
        session.capture_reference(reference)

        windows = [
            (d, ContactState.OPEN_VESSEL, plan.seeds[k + 1])
            for k, d in enumerate(plan.distances_mm)
        ]
        windows.append((CONTACT_DISTANCE_MM, ContactState.CLOT_CONTACT, plan.seeds[-1]))

        outcomes: list[SampleOutcome] = []
        truncated = False
        for k, (distance, state, seed) in enumerate(windows):
            trace = simulate_trace(
                _scenario(config, state, plan.heart_rate, plan.location.tortuosity,
                          seed, distance),
                config.catheter,
                config.drive,
                config.detector.sense_duration_s,
                contact_gain=config.contact_model.contact_gain,
                seal_factor=config.contact_model.seal_factor,
            )
            event = session.sense_cycle(trace)
            actual = (
                ContactLabel.CONTACT
                if state is ContactState.CLOT_CONTACT
                else ContactLabel.NO_CONTACT
            )
            outcomes.append(
                SampleOutcome(
                    location_id=plan.location.location_id,
                    trial=plan.trial,
                    sample=k,
                    heart_rate=plan.heart_rate,
                    distance_mm=distance,
                    actual=actual,
                    verdict=event.verdict,
                    decision_score=event.decision_score,
                    relative_average_pressure_pa=event.features.relative_average_pressure,
                    pressure_change_from_prior_pa=event.features.pressure_change_from_prior,
                )
            )
            if session.state is SessionState.CONTACT_CONFIRMED:
                # The loop ends at the first contact verdict; a premature
                # confirmation (false positive) truncates the trial.
                truncated = k < len(windows) - 1
                break
        return outcomes, truncated
    except Exception as exc:  # pragma: no cover - defensive propagation
        raise RuntimeError(
            f"benchtop trial failed at {plan.location.location_id} trial {plan.trial}"
        ) from exc


def run_benchtop(
    protocol: BenchProtocol,
    model: SvmModel,
    config: SimulationConfig | None = None,
    parallel: bool = False,
) -> BenchReport:
    """Execute the full benchtop protocol through detection sessions.

    Trial plans (heart-rate blocks, extra samples, RNG seeds) are drawn up
    front from the protocol seed, so serial and parallel execution produce
    identical counts.
    """
    config = config or default_config()
    plans = _plan_trials(protocol, config)

    if parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda p: _run_trial(p, model, config), plans))
    else:
        results = [_run_trial(plan, model, config) for plan in plans]

    outcomes: list[SampleOutcome] = []
    truncated_trials = 0
    for trial_outcomes, truncated in results:
        outcomes.extend(trial_outcomes)
        truncated_trials += int(truncated)
    if truncated_trials:
        log.warning("%d trials ended early on a premature contact verdict", truncated_trials)

    def tally(rows: list[SampleOutcome]) -> ConfusionCounts:
        return ConfusionCounts.tally((r.actual, r.verdict) for r in rows)

    per_location = {
        loc.location_id: tally([r for r in outcomes if r.location_id == loc.location_id])
        for loc in protocol.locations
    }
    per_heart_rate = {
        hr: tally([r for r in outcomes if r.heart_rate == hr])
        for hr in protocol.heart_rate_blocks
    }
    return BenchReport(
        counts=tally(outcomes),
        per_location=per_location,
        per_heart_rate=per_heart_rate,
        outcomes=outcomes,
        truncated_trials=truncated_trials,
    )
