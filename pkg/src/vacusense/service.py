"""Wire service exposing live detection sessions and the study protocol.

Commands are JSON request/response; a one-way server-push event stream (SSE,
plus a polling endpoint) mirrors every state change. Message schemas are
versioned and documented in docs/protocol.md. Ground truth (clot position,
true contact state) never appears in any message until the session is closed:
clients only ever see the noisy distance estimate.

Persistence is append-only: one NDJSON event log per session plus a flat
directory of model files. Each session serializes its own commands behind a
lock; different sessions are independent.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel, Field

from .bench import ConfusionCounts, build_training_corpus
from .config import SimulationConfig, default_config
from .detector import DetectionSession, SessionState
from .features import ContactLabel
from .hydraulics import ContactState, PressureTrace, VesselScenario, simulate_trace
from .study import Condition, StudyRecord
from .svm import SvmModel, load_model, save_model, train

SCHEMA_VERSION = 1

#: Distance-estimate noise shown to the operator, mm (roadmap ambiguity).
DISTANCE_NOISE_STD_MM = 3.0
#: Scripted clot placement range along the vessel path, mm.
CLOT_POSITION_RANGE_MM = (60.0, 100.0)
STUDY_TRIALS_PER_CONDITION = 6
TRACE_PREVIEW_POINTS = 200


class CreateSessionRequest(BaseModel):
    mode: str = Field(default="study", pattern="^(study|single)$")
    condition: str | None = Field(default=None, pattern="^(control|sensing)$")
    trials: int = Field(default=12, ge=1, le=200)
    seed: int = 0
    model_id: str = "default"
    heart_rate_bpm: float = Field(default=70.0, ge=0.0, le=200.0)
    tortuosity_factor: float = Field(default=1.5, ge=1.0)


class AdvanceRequest(BaseModel):
    step_mm: float = Field(ge=-200.0, le=200.0)


class DeclareRequest(BaseModel):
    estimate: str = Field(pattern="^(contact|no_contact)$")


@dataclass
class _Trial:
    index: int
    condition: Condition
    clot_position_mm: float
    position_mm: float = 0.0
    detector: DetectionSession | None = None
    declared_at_pause: int = 0
    complete: bool = False

    @property
    def true_distance_mm(self) -> float:
        return self.clot_position_mm - self.position_mm

    @property
    def in_contact(self) -> bool:
        return self.true_distance_mm <= 1e-9


@dataclass
class _Session:
    session_id: str
    config: SimulationConfig
    model: SvmModel
    rng: np.random.Generator
    trials: list[_Trial]
    heart_rate: float
    tortuosity: float
    trial_index: int = 0
    records: list[StudyRecord] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    closed: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def trial(self) -> _Trial:
        return self.trials[self.trial_index]


def _decimate_trace(trace: PressureTrace) -> dict:
    stride = max(1, len(trace) // TRACE_PREVIEW_POINTS)
    samples = trace.samples[::stride]
    times = trace.times[::stride]
    return {
        "schema": f"trace.preview@{SCHEMA_VERSION}",
        "sample_rate_hz": trace.sample_rate,
        "n_samples": len(trace),
        "times_s": [float(t) for t in times],
        "pressure_pa": [float(p) for p in samples],
    }


class SessionService:
    """Registry of operator sessions plus the model store."""

    def __init__(
        self,
        data_dir: str | Path,
        config: SimulationConfig | None = None,
        model: SvmModel | None = None,
        default_seed: int = 0,
    ):
        self.config = config or default_config()
        self.data_dir = Path(data_dir)
        self.sessions_dir = self.data_dir / "sessions"
        self.models_dir = self.data_dir / "models"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.models_dir.mkdir(parents=True, exist_ok=True)
        self._registry_lock = threading.Lock()
        self._sessions: dict[str, _Session] = {}
        self._models: dict[str, SvmModel] = {}

        if model is None:
            default_path = self.models_dir / "default.json"
            if default_path.exists():
                model = load_model(default_path)
            else:
                corpus = build_training_corpus(seed=default_seed, config=self.config)
                model = train(
                    corpus, gamma=self.config.svm.gamma, c=self.config.svm.c
                )
                save_model(model, default_path)
        self._models["default"] = model

    # -- model registry ----------------------------------------------------

    def register_model(self, model_id: str, model: SvmModel) -> None:
        with self._registry_lock:
            self._models[model_id] = model
            save_model(model, self.models_dir / f"{model_id}.json")

    def list_models(self) -> list[dict]:
        with self._registry_lock:
            return [
                {"model_id": mid, "digest": m.digest(), "gamma": m.gamma, "c": m.c}
                for mid, m in sorted(self._models.items())
            ]

    def get_model(self, model_id: str) -> SvmModel:
        with self._registry_lock:
            if model_id not in self._models:
                raise HTTPException(404, detail=f"unknown model id {model_id!r}")
            return self._models[model_id]

    # -- session lifecycle ---------------------------------------------------

    def create_session(self, request: CreateSessionRequest) -> dict:
        model = self.get_model(request.model_id)
        rng = np.random.default_rng(request.seed)
        if request.mode == "study":
            conditions = [Condition.CONTROL] * STUDY_TRIALS_PER_CONDITION + [
                Condition.SENSING
            ] * STUDY_TRIALS_PER_CONDITION
            order = rng.permutation(len(conditions))
            conditions = [conditions[i] for i in order]
        else:
            if request.condition is None:
                raise HTTPException(422, detail="single mode requires a condition")
            conditions = [Condition(request.condition)] * request.trials
        trials = [
            _Trial(
                index=i,
                condition=cond,
                clot_position_mm=float(rng.uniform(*CLOT_POSITION_RANGE_MM)),
            )
            for i, cond in enumerate(conditions)
        ]
        session = _Session(
            session_id=uuid.uuid4().hex[:12],
            config=self.config,
            model=model,
            rng=rng,
            trials=trials,
            heart_rate=request.heart_rate_bpm,
            tortuosity=request.tortuosity_factor,
        )
        with self._registry_lock:
            self._sessions[session.session_id] = session
        created = self._emit(session, "session_created", {
            "mode": request.mode,
            "trial_count": len(trials),
            "model_digest": model.digest(),
        })
        self._emit(session, "trial_started", self._trial_view(session))
        return {
            "schema": f"session.created@{SCHEMA_VERSION}",
            "session_id": session.session_id,
            "trial_count": len(trials),
            "trial": self._trial_view(session),
        }

    def _get(self, session_id: str) -> _Session:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise HTTPException(404, detail=f"unknown session {session_id!r}")
        return session

    def _require_open(self, session: _Session) -> None:
        if session.closed:
            raise HTTPException(409, detail="session is closed")

    def _trial_view(self, session: _Session) -> dict:
        trial = session.trial
        return {
            "schema": f"trial.view@{SCHEMA_VERSION}",
            "index": trial.index,
            "condition": trial.condition.value,
            "complete": trial.complete,
            "detector_state": (
                trial.detector.state.value if trial.detector else None
            ),
            "declarations": trial.declared_at_pause,
        }

    def _emit(self, session: _Session, kind: str, payload: dict) -> dict:
        event = {
            "schema": f"event@{SCHEMA_VERSION}",
            "seq": len(session.events),
            "type": kind,
            "trial": session.trial_index,
            "payload": payload,
        }
        session.events.append(event)
        log_path = self.sessions_dir / f"{session.session_id}.ndjson"
        with open(log_path, "a") as fh:
            fh.write(json.dumps(event) + "\n")
        return event

    def _simulate(self, session: _Session, contact: bool, duration: float) -> PressureTrace:
        scenario = VesselScenario(
            contact_state=(
                ContactState.CLOT_CONTACT if contact else ContactState.OPEN_VESSEL
            ),
            heart_rate=session.heart_rate,
            heartbeat_amplitude=session.config.scenario.heartbeat_amplitude_pa,
            tortuosity_factor=session.tortuosity,
            noise_std=session.config.scenario.noise_std_pa,
            rng_seed=int(session.rng.integers(0, 2**63 - 1)),
        )
        return simulate_trace(
            scenario,
            session.config.catheter,
            session.config.drive,
            duration,
            contact_gain=session.config.contact_model.contact_gain,
            seal_factor=session.config.contact_model.seal_factor,
        )

    def _estimate(self, session: _Session) -> dict:
        noisy = session.trial.true_distance_mm + float(
            session.rng.normal(0.0, DISTANCE_NOISE_STD_MM)
        )
        return {
            "schema": f"position.estimate@{SCHEMA_VERSION}",
            "estimated_distance_mm": noisy,
            "uncertainty_mm": DISTANCE_NOISE_STD_MM,
        }

    # -- commands ------------------------------------------------------------

    def advance(self, session_id: str, step_mm: float) -> dict:
        session = self._get(session_id)
        with session.lock:
            self._require_open(session)
            trial = session.trial
            if trial.complete:
                raise HTTPException(409, detail="trial already complete; advance blocked")
            if (
                trial.condition is Condition.SENSING
                and trial.detector is not None
                and trial.detector.state is SessionState.CONTACT_CONFIRMED
            ):
                raise HTTPException(
                    409, detail="contact confirmed; catheter advance rejected"
                )
            target = trial.position_mm + step_mm
            clamped = False
            if target < 0.0:
                target = 0.0
                clamped = True
            if target > trial.clot_position_mm:
                # The clot obstructs the lumen; the tip sits on its face.
                target = trial.clot_position_mm
                clamped = True
            trial.position_mm = target
            body = {
                "schema": f"advance.result@{SCHEMA_VERSION}",
                "estimate": self._estimate(session),
                "clamped": clamped,
            }
            self._emit(session, "advanced", body)
            return body

    def capture_reference(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            self._require_open(session)
            trial = session.trial
            if trial.condition is not Condition.SENSING:
                raise HTTPException(
                    409, detail="reference capture is a sensing-condition command"
                )
            if trial.detector is not None:
                raise HTTPException(409, detail="reference already captured")
            trial.detector = DetectionSession(
                session.model,
                reference_duration=session.config.detector.reference_duration_s,
                sense_duration=session.config.detector.sense_duration_s,
            )
            trace = self._simulate(
                session, trial.in_contact, session.config.detector.reference_duration_s
            )
            trial.detector.capture_reference(trace)
            body = {
                "schema": f"reference.captured@{SCHEMA_VERSION}",
                "detector_state": trial.detector.state.value,
                "trace": _decimate_trace(trace),
            }
            self._emit(session, "reference_captured", body)
            return body

    def trigger_sense(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            self._require_open(session)
            trial = session.trial
            if trial.condition is not Condition.SENSING:
                raise HTTPException(409, detail="sensing is disabled in this condition")
            if trial.detector is None:
                raise HTTPException(409, detail="capture a reference before sensing")
            if trial.detector.state is SessionState.CONTACT_CONFIRMED:
                raise HTTPException(409, detail="contact already confirmed this trial")
            trace = self._simulate(
                session, trial.in_contact, session.config.detector.sense_duration_s
            )
            event = trial.detector.sense_cycle(trace)
            session.records.append(
                StudyRecord(
                    user_id=session.session_id,
                    condition=Condition.SENSING,
                    actual=(
                        ContactLabel.CONTACT
                        if trial.in_contact
                        else ContactLabel.NO_CONTACT
                    ),
                    estimated=event.verdict,
                    trial_id=f"trial-{trial.index:02d}",
                )
            )
            body = {
                "schema": f"sense.result@{SCHEMA_VERSION}",
                "verdict": event.verdict.text,
                "decision_score": event.decision_score,
                "relative_average_pressure_pa": event.features.relative_average_pressure,
                "pressure_change_from_prior_pa": event.features.pressure_change_from_prior,
                "detector_state": trial.detector.state.value,
                "trace": _decimate_trace(trace),
            }
            self._emit(session, "sense_result", body)
            return body

    def declare(self, session_id: str, estimate: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            self._require_open(session)
            trial = session.trial
            if trial.complete:
                raise HTTPException(409, detail="trial already complete")
            condition = (
                Condition.CONTROL
                if trial.condition is Condition.CONTROL
                else Condition.DECLARATIVE
            )
            session.records.append(
                StudyRecord(
                    user_id=session.session_id,
                    condition=condition,
                    actual=(
                        ContactLabel.CONTACT
                        if trial.in_contact
                        else ContactLabel.NO_CONTACT
                    ),
                    estimated=ContactLabel.from_text(estimate),
                    trial_id=f"trial-{trial.index:02d}",
                )
            )
            trial.declared_at_pause += 1
            body = {
                "schema": f"declare.result@{SCHEMA_VERSION}",
                "recorded": True,
                "condition": condition.value,
                "record_count": len(session.records),
            }
            self._emit(session, "declaration_recorded", body)
            return body

    def next_trial(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            self._require_open(session)
            session.trial.complete = True
            self._emit(session, "trial_complete", {"index": session.trial_index})
            if session.trial_index + 1 >= len(session.trials):
                body = {
                    "schema": f"session.trials_exhausted@{SCHEMA_VERSION}",
                    "remaining": 0,
                }
                return body
            session.trial_index += 1
            view = self._trial_view(session)
            self._emit(session, "trial_started", view)
            return {
                "schema": f"trial.next@{SCHEMA_VERSION}",
                "remaining": len(session.trials) - session.trial_index,
                "trial": view,
            }

    def close(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            self._require_open(session)
            session.closed = True
            confusion: dict[str, dict] = {}
            for condition in Condition:
                rows = [r for r in session.records if r.condition is condition]
                if not rows:
                    continue
                counts = ConfusionCounts.tally((r.actual, r.estimated) for r in rows)
                confusion[condition.value] = {
                    "tp": counts.tp,
                    "fp": counts.fp,
                    "fn": counts.fn,
                    "tn": counts.tn,
                    "total": counts.total,
                    "errors": counts.errors,
                }
            body = {
                "schema": f"session.closed@{SCHEMA_VERSION}",
                "records": [
                    {
                        "trial_id": r.trial_id,
                        "condition": r.condition.value,
                        "actual": r.actual.text,
                        "estimated": r.estimated.text,
                    }
                    for r in session.records
                ],
                "confusion": confusion,
                "ground_truth": {
                    f"trial-{t.index:02d}": t.clot_position_mm for t in session.trials
                },
            }
            self._emit(session, "session_closed", body)
            return body

    def descriptor(self, session_id: str) -> dict:
        session = self._get(session_id)
        return {
            "schema": f"session.view@{SCHEMA_VERSION}",
            "session_id": session.session_id,
            "closed": session.closed,
            "trial_count": len(session.trials),
            "trial": self._trial_view(session),
            "record_count": len(session.records),
            "event_count": len(session.events),
        }

    def events_page(self, session_id: str, since: int) -> dict:
        session = self._get(session_id)
        events = session.events[since:]
        return {
            "schema": f"event.page@{SCHEMA_VERSION}",
            "events": events,
            "next": since + len(events),
        }

    def event_stream(self, session_id: str):
        session = self._get(session_id)
        cursor = 0
        idle = 0.0
        while True:
            if cursor < len(session.events):
                while cursor < len(session.events):
                    yield f"data: {json.dumps(session.events[cursor])}\n\n"
                    cursor += 1
                idle = 0.0
            elif session.closed:
                return
            else:
                time.sleep(0.05)
                idle += 0.05
                if idle >= 2.0:  # keepalive so clients can flag staleness
                    yield ": keepalive\n\n"
                    idle = 0.0


def create_app(
    data_dir: str | Path,
    config: SimulationConfig | None = None,
    model: SvmModel | None = None,
    default_seed: int = 0,
    console_dir: str | Path | None = None,
) -> FastAPI:
    service = SessionService(
        data_dir, config=config, model=model, default_seed=default_seed
    )
    app = FastAPI(title="vacusense session service", version="1.0")
    app.state.service = service

    @app.get("/v1/healthz")
    def healthz():
        return {"schema": f"health@{SCHEMA_VERSION}", "status": "ok"}

    @app.get("/v1/models")
    def models():
        return {"schema": f"model.list@{SCHEMA_VERSION}", "models": service.list_models()}

    @app.post("/v1/sessions")
    def create_session(request: CreateSessionRequest):
        return service.create_session(request)

    @app.get("/v1/sessions/{session_id}")
    def descriptor(session_id: str):
        return service.descriptor(session_id)

    @app.post("/v1/sessions/{session_id}/advance")
    def advance(session_id: str, request: AdvanceRequest):
        return service.advance(session_id, request.step_mm)

    @app.post("/v1/sessions/{session_id}/reference")
    def reference(session_id: str):
        return service.capture_reference(session_id)

    @app.post("/v1/sessions/{session_id}/sense")
    def sense(session_id: str):
        return service.trigger_sense(session_id)

    @app.post("/v1/sessions/{session_id}/declare")
    def declare(session_id: str, request: DeclareRequest):
        return service.declare(session_id, request.estimate)

    @app.post("/v1/sessions/{session_id}/trial/next")
    def next_trial(session_id: str):
        return service.next_trial(session_id)

    @app.post("/v1/sessions/{session_id}/close")
    def close(session_id: str):
        return service.close(session_id)

    @app.get("/v1/sessions/{session_id}/events")
    def events(session_id: str, since: int = 0):
        return service.events_page(session_id, since)

    @app.get("/v1/sessions/{session_id}/stream")
    def stream(session_id: str):
        return StreamingResponse(
            service.event_stream(session_id), media_type="text/event-stream"
        )

    if console_dir is not None and Path(console_dir).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=console_dir, html=True), name="console")

    return app
