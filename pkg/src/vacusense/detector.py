"""Contact-detection loop as an explicit state machine over sense cycles.

One session captures a reference window once, then classifies successive
sense windows. The prior window tracks the most recent non-contact sample
(initially the reference), and the loop terminates at the first contact
verdict. Sessions persist as newline-delimited JSON events plus trace files
and replay deterministically.
"""

from __future__ import annotations

import enum
import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidInputError, StateError
from .features import ContactLabel, FeatureVector, compute_features
from .hydraulics import PressureTrace, load_trace_json, save_trace_json
from .svm import SvmModel, predict

SESSION_FORMAT = "vacusense.detection-session"
SESSION_FORMAT_VERSION = 1

DEFAULT_REFERENCE_DURATION_S = 3.0
DEFAULT_SENSE_DURATION_S = 2.0


class SessionState(enum.Enum):
    AWAITING_REFERENCE = "awaiting_reference"
    SENSING = "sensing"
    CONTACT_CONFIRMED = "contact_confirmed"


@dataclass(frozen=True)
class SenseEvent:
    """One excite-and-classify cycle: features, verdict, and provenance."""

    index: int
    timestamp_s: float
    features: FeatureVector
    verdict: ContactLabel
    decision_score: float
    trace_id: str


class DetectionSession:
    """Single-writer detection loop; the event log is append-only.

    The reference trace is immutable once captured, and no events can follow
    a contact verdict. Readers may iterate ``event_log`` concurrently with
    appends.
    """

    def __init__(
        self,
        model: SvmModel,
        *,
        reference_duration: float = DEFAULT_REFERENCE_DURATION_S,
        sense_duration: float = DEFAULT_SENSE_DURATION_S,
    ):
        self.model = model
        self.reference_duration = float(reference_duration)
        self.sense_duration = float(sense_duration)
        self.state = SessionState.AWAITING_REFERENCE
        self.reference: PressureTrace | None = None
        self.prior: PressureTrace | None = None
        self.event_log: list[SenseEvent] = []
        self._traces: list[PressureTrace] = []
        self._started = time.monotonic()

    def capture_reference(self, trace: PressureTrace) -> None:
        """Record the open-vessel baseline; prior starts equal to it."""
        if self.state is not SessionState.AWAITING_REFERENCE:
            raise StateError("reference already captured for this session")
        if abs(trace.duration - self.reference_duration) > 1e-9:
            warnings.warn(
                f"reference window is {trace.duration:.3g} s "
                f"(configured {self.reference_duration:.3g} s); accepting anyway",
                RuntimeWarning,
                stacklevel=2,
            )
        self.reference = trace
        self.prior = trace
        self.state = SessionState.SENSING

    def sense_cycle(self, trace: PressureTrace) -> SenseEvent:
        """Classify one sense window and advance the loop state."""
        if self.state is SessionState.AWAITING_REFERENCE:
            raise StateError("capture a reference before sensing")
        if self.state is SessionState.CONTACT_CONFIRMED:
            raise StateError("session already confirmed contact; no further cycles")
        assert self.reference is not None and self.prior is not None
        if trace.sample_rate != self.reference.sample_rate:
            raise InvalidInputError(
                f"sense trace sample rate {trace.sample_rate} does not match "
                f"reference rate {self.reference.sample_rate}"
            )
        fv = compute_features(trace, self.reference, self.prior)
        verdict, score = predict(self.model, fv)
        event = SenseEvent(
            index=len(self.event_log),
            timestamp_s=time.monotonic() - self._started,
            features=fv,
            verdict=verdict,
            decision_score=score,
            trace_id=f"trace-{len(self.event_log):04d}",
        )
        self._traces.append(trace)
        self.event_log.append(event)
        if verdict is ContactLabel.CONTACT:
            self.state = SessionState.CONTACT_CONFIRMED
        else:
            self.prior = trace
        return event

    @property
    def traces(self) -> list[PressureTrace]:
        return list(self._traces)


# ---------------------------------------------------------------------------
# Persistence and replay


def _event_to_json(event: SenseEvent) -> dict:
    return {
        "index": event.index,
        "timestamp_s": event.timestamp_s,
        "relative_average_pressure_pa": event.features.relative_average_pressure,
        "pressure_change_from_prior_pa": event.features.pressure_change_from_prior,
        "verdict": event.verdict.text,
        "decision_score": event.decision_score,
        "trace_id": event.trace_id,
    }


def _event_from_json(doc: dict) -> SenseEvent:
    return SenseEvent(
        index=int(doc["index"]),
        timestamp_s=float(doc["timestamp_s"]),
        features=FeatureVector(
            relative_average_pressure=float(doc["relative_average_pressure_pa"]),
            pressure_change_from_prior=float(doc["pressure_change_from_prior_pa"]),
        ),
        verdict=ContactLabel.from_text(doc["verdict"]),
        decision_score=float(doc["decision_score"]),
        trace_id=str(doc["trace_id"]),
    )


def persist_session(session: DetectionSession, directory: str | Path) -> Path:
    """Write session header, reference + sense traces, and the event log."""
    if session.reference is None:
        raise StateError("cannot persist a session with no reference")
    directory = Path(directory)
    traces_dir = directory / "traces"
    traces_dir.mkdir(parents=True, exist_ok=True)

    header = {
        "format": SESSION_FORMAT,
        "version": SESSION_FORMAT_VERSION,
        "model_digest": session.model.digest(),
        "reference_duration_s": session.reference_duration,
        "sense_duration_s": session.sense_duration,
        "state": session.state.value,
    }
    (directory / "session.json").write_text(json.dumps(header, indent=2))
    save_trace_json(session.reference, traces_dir / "reference.json")
    for event, trace in zip(session.event_log, session.traces):
        save_trace_json(trace, traces_dir / f"{event.trace_id}.json")
    with open(directory / "events.ndjson", "w") as fh:
        for event in session.event_log:
            fh.write(json.dumps(_event_to_json(event)) + "\n")
    return directory


@dataclass(frozen=True)
class ReplayMismatch:
    index: int
    field: str
    stored: object
    replayed: object


@dataclass(frozen=True)
class ReplayReport:
    events: list[SenseEvent]
    mismatches: list[ReplayMismatch] = field(default_factory=list)

    @property
    def verdicts_match(self) -> bool:
        return not self.mismatches


def replay(directory: str | Path, model: SvmModel) -> ReplayReport:
    """Re-run persisted traces through the model and diff against the log.

    Refuses to replay when the model digest differs from the one recorded at
    persistence time. Any verdict, feature, or score difference (for example
    from a tampered trace file) is reported as a mismatch.
    """
    directory = Path(directory)
    header = json.loads((directory / "session.json").read_text())
    if header.get("format") != SESSION_FORMAT:
        raise InvalidInputError(f"not a session directory: {directory}")
    stored_digest = header["model_digest"]
    if stored_digest != model.digest():
        raise InvalidInputError(
            "model digest mismatch: session was recorded with "
            f"{stored_digest[:12]}..., replay model is {model.digest()[:12]}..."
        )

    events_path = directory / "events.ndjson"
    stored_events = []
    if events_path.exists():
        for line in events_path.read_text().splitlines():
            if line.strip():
                stored_events.append(_event_from_json(json.loads(line)))

    session = DetectionSession(
        model,
        reference_duration=float(header["reference_duration_s"]),
        sense_duration=float(header["sense_duration_s"]),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        session.capture_reference(load_trace_json(directory / "traces" / "reference.json"))

    mismatches: list[ReplayMismatch] = []
    replayed: list[SenseEvent] = []
    for stored in stored_events:
        trace = load_trace_json(directory / "traces" / f"{stored.trace_id}.json")
        if session.state is SessionState.CONTACT_CONFIRMED:
            mismatches.append(
                ReplayMismatch(stored.index, "state", "sensing", "contact_confirmed")
            )
            break
        event = session.sense_cycle(trace)
        replayed.append(event)
        if event.verdict is not stored.verdict:
            mismatches.append(
                ReplayMismatch(stored.index, "verdict", stored.verdict.text, event.verdict.text)
            )
        if event.features != stored.features:
            mismatches.append(
                ReplayMismatch(stored.index, "features", stored.features, event.features)
            )
        if event.decision_score != stored.decision_score:
            mismatches.append(
                ReplayMismatch(
                    stored.index, "decision_score", stored.decision_score, event.decision_score
                )
            )
    return ReplayReport(events=replayed, mismatches=mismatches)
