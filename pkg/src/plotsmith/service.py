"""HTTP API over filtering, what-if projection, and intervention scoring.

Sessions are in-memory and ephemeral: a session pins one validated model
and accumulates observations; its belief series always holds exactly one
entry more than the observations (the prior at t=0). Handlers serialize
per session (concurrent requests to different sessions proceed in
parallel), and repeated identical what-if posts return byte-identical
responses from a per-session cache keyed by the canonical request body.

All errors use one envelope: {"code", "message", "path"}.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import reports, schema
from .errors import (
    BlockScalingError,
    InterventionError,
    ModelFormatError,
    ModelValidationError,
    PlotsmithError,
    StateSpaceCapError,
)
from .filtering import BeliefState, JointEvaluator, filter_step, init_belief, phase_marginal
from .model import PlotModel, ensure_valid
from .seu import rank_interventions

_ERROR_CODES = (
    (ModelFormatError, "format-error", 400),
    (ModelValidationError, "validation-error", 400),
    (StateSpaceCapError, "state-cap-error", 400),
    (BlockScalingError, "block-scaling-error", 400),
    (InterventionError, "intervention-error", 400),
    (PlotsmithError, "model-error", 400),
    (KeyError, "unknown-id", 404),
    (ValueError, "invalid-value", 400),
)


class ApiError(Exception):
    def __init__(self, code: str, message: str, path: str = "", status: int = 400):
        self.code = code
        self.message = message
        self.path = path
        self.status = status
        super().__init__(message)


def _wrap(exc: Exception) -> ApiError:
    if isinstance(exc, ApiError):
        return exc
    for etype, code, status in _ERROR_CODES:
        if isinstance(exc, etype):
            message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
            return ApiError(code, str(message), path=getattr(exc, "path", ""), status=status)
    raise exc


@dataclass
class Session:
    model: PlotModel
    evaluator: JointEvaluator
    observations: list[tuple[float, ...]] = field(default_factory=list)
    beliefs: list[BeliefState] = field(default_factory=list)
    whatif_cache: dict[str, bytes] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)


class CreateSessionBody(BaseModel):
    model: dict | str


class ObservationsBody(BaseModel):
    rows: list[list[float]]


class WhatifBody(BaseModel):
    cut: int
    intervention: str | None = None
    profile: str | None = None
    horizon: int | None = None


class ScoreBody(BaseModel):
    u_d: float
    candidates: list[str] | None = None
    profile: str | None = None
    horizon: int | None = None
    cut: int | None = None


def _belief_rows(model: PlotModel, beliefs) -> list[dict]:
    return [
        {
            "t": b.t,
            "log_evidence": b.log_evidence,
            "marginal": [float(v) for v in phase_marginal(model, b)],
        }
        for b in beliefs
    ]


def _session_summary(sid: str, session: Session) -> dict:
    model = session.model
    return {
        "session_id": sid,
        "title": model.title,
        "horizon": model.horizon,
        "phase_labels": list(model.phase_graph.labels),
        "task_labels": list(model.task_graph.labels),
        "time_labels": list(model.time_labels) if model.time_labels else None,
        "interventions": [
            {"id": d.id, "kind": d.kind, "description": d.description}
            for d in model.interventions
        ],
        "profiles": sorted(model.profiles),
        "observation_count": len(session.observations),
    }


def build_app(default_model: str = "demo") -> FastAPI:
    app = FastAPI(title="plotsmith", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()

    if default_model == "demo":
        from importlib import resources

        default_text = (
            resources.files("plotsmith").joinpath(schema.DEMO_MODEL_ASSET).read_text("utf-8")
        )
    else:
        with open(default_model, "r", encoding="utf-8") as fh:
            default_text = fh.read()
    ensure_valid(schema.parse_model(default_text))  # fail at startup, not first use
    default_document = json.loads(default_text)

    def _get_session(sid: str) -> Session:
        with store_lock:
            session = sessions.get(sid)
        if session is None:
            raise ApiError("unknown-session", f"no session {sid!r}", path="session_id", status=404)
        return session

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return Response(
            content=json.dumps({"code": exc.code, "message": exc.message, "path": exc.path}),
            status_code=exc.status,
            media_type="application/json",
        )

    @app.exception_handler(RequestValidationError)
    async def _body_error(_request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        path = ".".join(str(p) for p in first.get("loc", ()) if p != "body")
        return Response(
            content=json.dumps(
                {"code": "request-error", "message": first.get("msg", "invalid request"), "path": path}
            ),
            status_code=422,
            media_type="application/json",
        )

    @app.get("/v1/demo-model")
    def demo_model():
        return default_document

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            if isinstance(body.model, str):
                if body.model != "demo":
                    raise ApiError(
                        "invalid-value", 'model must be a document object or "demo"', path="model"
                    )
                document = default_document
            else:
                document = body.model
            model = ensure_valid(schema.parse_model(json.dumps(document)))
        except Exception as exc:  # noqa: BLE001 - mapped to the envelope
            raise _wrap(exc) from None
        session = Session(model=model, evaluator=JointEvaluator(model))
        session.beliefs.append(init_belief(model))
        sid = uuid.uuid4().hex[:12]
        with store_lock:
            sessions[sid] = session
        out = _session_summary(sid, session)
        out["beliefs"] = _belief_rows(model, session.beliefs)
        return out

    @app.post("/v1/sessions/{sid}/observations")
    def append_observations(sid: str, body: ObservationsBody):
        session = _get_session(sid)
        with session.lock:
            model = session.model
            for i, row in enumerate(body.rows):
                if len(row) != model.n:
                    raise ApiError(
                        "invalid-value",
                        f"expected {model.n} intensity values, got {len(row)}",
                        path=f"rows[{i}]",
                        status=422,
                    )
            try:
                new_beliefs = []
                for row in body.rows:
                    prev = new_beliefs[-1] if new_beliefs else session.beliefs[-1]
                    new_beliefs.append(
                        filter_step(model, prev, tuple(row), evaluator=session.evaluator)
                    )
            except Exception as exc:  # noqa: BLE001
                raise _wrap(exc) from None
            session.observations.extend(tuple(r) for r in body.rows)
            session.beliefs.extend(new_beliefs)
            session.whatif_cache.clear()
            return {
                "observation_count": len(session.observations),
                "beliefs": _belief_rows(model, session.beliefs),
            }

    @app.get("/v1/sessions/{sid}/beliefs")
    def get_beliefs(sid: str):
        session = _get_session(sid)
        with session.lock:
            return {
                "observation_count": len(session.observations),
                "phase_labels": list(session.model.phase_graph.labels),
                "beliefs": _belief_rows(session.model, session.beliefs),
            }

    @app.post("/v1/sessions/{sid}/whatif")
    def whatif(sid: str, body: WhatifBody):
        session = _get_session(sid)
        with session.lock:
            key = schema.canonical_json(body.model_dump())
            cached = session.whatif_cache.get(key)
            if cached is not None:
                return Response(content=cached, media_type="application/json")
            try:
                result = reports.whatif_predictions(
                    session.model,
                    session.observations,
                    body.cut,
                    body.intervention,
                    profile=body.profile,
                    horizon=body.horizon,
                )
            except Exception as exc:  # noqa: BLE001
                raise _wrap(exc) from None
            payload = {
                "times": list(result.times),
                "labels": list(result.labels),
                "idle": [list(row) for row in result.idle],
                "intervened": [list(row) for row in result.intervened],
                "diff": [list(row) for row in result.diff],
            }
            encoded = schema.canonical_json(payload).encode("utf-8")
            session.whatif_cache[key] = encoded
            return Response(content=encoded, media_type="application/json")

    @app.post("/v1/sessions/{sid}/score")
    def score(sid: str, body: ScoreBody):
        session = _get_session(sid)
        with session.lock:
            model = session.model
            try:
                profile_name = body.profile
                if profile_name is None:
                    if len(model.profiles) != 1:
                        raise ApiError(
                            "invalid-value",
                            f"profile is required when the model defines {len(model.profiles)} profiles",
                            path="profile",
                        )
                    profile_name = next(iter(model.profiles))
                prof = model.profile(profile_name)
                ids = (
                    body.candidates
                    if body.candidates is not None
                    else [d.id for d in model.interventions]
                )
                cut = len(session.observations) if body.cut is None else body.cut
                if not 0 <= cut <= len(session.observations):
                    raise ApiError(
                        "invalid-value",
                        f"cut {cut} outside the observed range 0..{len(session.observations)}",
                        path="cut",
                    )
                ranked = rank_interventions(
                    model,
                    ids,
                    prof,
                    body.u_d,
                    horizon=body.horizon,
                    start_belief=session.beliefs[cut],
                )
            except Exception as exc:  # noqa: BLE001
                raise _wrap(exc) from None
            return {"u_d": body.u_d, "profile": profile_name, "rows": reports.seu_rows(ranked)}

    @app.delete("/v1/sessions/{sid}")
    def delete_session(sid: str):
        with store_lock:
            if sid not in sessions:
                raise ApiError("unknown-session", f"no session {sid!r}", path="session_id", status=404)
            del sessions[sid]
        return {"deleted": True}

    return app
