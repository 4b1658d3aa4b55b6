"""HTTP service for live and demo elicitation sessions.

A session is a thin shell over the harness ``TrialState``: the belief chain,
strategy, and diagnostics are exactly the library's. Sessions are persisted
as append-only event logs (create + responses) and rebuilt by replay.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import discrete
from .belief import PriorSpec, effective_sample_size, regret, sample_prior
from .catalog import Catalog, load_catalog
from .errors import DegeneratePosteriorError, InvalidArgumentError, PrefElicitError
from .harness import (CONTINUOUS_STRATEGIES, DISCRETE_STRATEGIES,
                      ExperimentConfig, TrialState, build_trial_state)


class ApiError(Exception):
    def __init__(self, status, code, message):
        self.status = status
        self.code = code
        self.message = message


class Session:
    def __init__(self, session_id, state: TrialState, mode, created_config,
                 budget_s=2.0):
        self.id = session_id
        self.state = state
        self.mode = mode
        self.created_config = created_config
        self.budget_s = budget_s
        self.lock = threading.Lock()
        self.created = time.time()
        self.updated = self.created
        self.events = []
        self.fallback_rng = np.random.default_rng(
            np.random.SeedSequence([hash(session_id) & 0xFFFFFFFF, 17]))


class ServiceState:
    def __init__(self, sessions_dir=None):
        self.catalogs: dict[str, Catalog] = {}
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()
        self.executor = ThreadPoolExecutor(max_workers=4)
        self.sessions_dir = Path(sessions_dir) if sessions_dir else None
        if self.sessions_dir:
            self.sessions_dir.mkdir(parents=True, exist_ok=True)
            self._replay_all()

    # --- event log persistence -------------------------------------------

    def _log_path(self, session_id):
        return self.sessions_dir / f"{session_id}.jsonl"

    def append_event(self, session: Session, event):
        session.events.append(event)
        if self.sessions_dir:
            with open(self._log_path(session.id), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event) + "\n")

    def _replay_all(self):
        for path in sorted(self.sessions_dir.glob("*.jsonl")):
            try:
                with open(path, encoding="utf-8") as fh:
                    events = [json.loads(line) for line in fh if line.strip()]
                if not events or events[0]["type"] != "create":
                    continue
                session = self._create_from_event(events[0], persist=False)
                for ev in events[1:]:
                    if ev["type"] == "response":
                        session.state.answer(ev["chosen"])
                        session.state.next_slate()
                session.events = events
            except (PrefElicitError, KeyError, ValueError):
                continue

    # --- session construction --------------------------------------------

    def _create_from_event(self, event, persist=True):
        body = event["request"]
        mode = body.get("mode", "live")
        strategy = body.get("strategy", "rand_user_top_item")
        if strategy not in DISCRETE_STRATEGIES + CONTINUOUS_STRATEGIES:
            raise ApiError(422, "unknown_strategy", f"unknown strategy {strategy!r}")
        k = int(body.get("k", 2))
        m = int(body.get("m", 100))
        tau_eval = float(body.get("tau_eval", 0.1))
        seed = int(body.get("seed", 0))
        strategy_config = body.get("strategy_config", {})
        if mode == "demo":
            config = ExperimentConfig(
                catalog=body.get("catalog", {"kind": "synth", "n": 200, "d": 10}),
                strategy=strategy, strategy_config=strategy_config,
                m=m, k=k, tau_eval=tau_eval, seed=seed, n_trials=1,
            )
            state, _ = build_trial_state(config, seed)
        else:
            catalog_id = body.get("catalog_id")
            if catalog_id not in self.catalogs:
                raise ApiError(404, "unknown_catalog", f"catalog {catalog_id!r} not found")
            catalog = self.catalogs[catalog_id]
            if k > catalog.n_items:
                raise ApiError(422, "invalid_k", "slate size exceeds catalog size")
            streams = np.random.SeedSequence(seed).spawn(2)
            belief = sample_prior(
                PriorSpec(kind="standard_normal", dim=catalog.dim), m, streams[0])
            state = TrialState(
                catalog=catalog, belief=belief, strategy_name=strategy,
                strategy_config=strategy_config, k=k, tau_eval=tau_eval,
                strategy_seed=streams[1],
            )
        session = Session(
            session_id=event["session_id"], state=state, mode=mode,
            created_config=body, budget_s=float(body.get("budget_s", 2.0)),
        )
        self._advance(session)
        with self.lock:
            self.sessions[session.id] = session
        if persist:
            self.append_event(session, event)
        return session

    def create_session(self, body):
        event = {
            "type": "create",
            "session_id": uuid.uuid4().hex,
            "request": body,
        }
        return self._create_from_event(event)

    # --- turn processing --------------------------------------------------

    def _advance(self, session: Session):
        """Compute the next slate, falling back to the fastest strategy if the
        configured one exceeds the per-turn budget."""
        state = session.state
        future = self.executor.submit(state.next_slate)
        try:
            future.result(timeout=session.budget_s)
        except FutureTimeout:
            slate = discrete.rand_user_top_item(
                state.catalog, state.belief, state.k, session.fallback_rng)
            state.set_slate(slate, wall_ms=session.budget_s * 1000.0)

    def get_session(self, session_id) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"session {session_id!r} not found")
        return session


def _query_payload(session: Session):
    state = session.state
    slate = state.current_slate
    items = []
    for pos in range(slate.k):
        item = {"position": pos}
        if slate.item_indices is not None:
            idx = slate.item_indices[pos]
            item["id"] = state.catalog.ids[idx]
            if state.catalog.names is not None:
                item["name"] = state.catalog.names[idx]
        if state.catalog.attribute_names is not None:
            vec = slate.vectors[pos]
            item["attributes"] = [
                state.catalog.attribute_names[j]
                for j in np.flatnonzero(vec > 0.5)
            ] if set(np.unique(vec)).issubset({0.0, 1.0}) else None
        items.append(item)
    return {"turn": state.turn, "items": items}


def _recommendations_payload(session: Session, n):
    state = session.state
    mean = state.belief.weights @ state.belief.particles
    scores = state.catalog.items @ mean
    order = np.argsort(-scores, kind="stable")[:n]
    return [
        {
            "id": state.catalog.ids[int(i)],
            "name": state.catalog.names[int(i)] if state.catalog.names else None,
            "eu": float(scores[int(i)]),
        }
        for i in order
    ]


def _diagnostics_payload(session: Session):
    state = session.state
    out = {
        "turn": state.turn,
        "ess": effective_sample_size(state.belief),
        "evoi": [row.evoi for row in state.rows],
    }
    if session.mode == "demo":
        out["regret"] = [row.regret for row in state.rows]
    return out


def create_app(service: ServiceState | None = None, static_dir=None) -> FastAPI:
    service = service or ServiceState()
    app = FastAPI(title="prefelicit")
    app.state.service = service

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(InvalidArgumentError)
    async def handle_invalid(request: Request, exc: InvalidArgumentError):
        return JSONResponse(status_code=422,
                            content={"code": "invalid_argument", "message": str(exc)})

    @app.post("/catalogs")
    async def upload_catalog(file: UploadFile):
        import tempfile

        data = await file.read()
        with tempfile.NamedTemporaryFile(suffix=".csv", delete=False) as tmp:
            tmp.write(data)
            tmp_path = tmp.name
        try:
            catalog = load_catalog(tmp_path)
        except PrefElicitError as exc:
            raise ApiError(422, "bad_catalog", str(exc))
        finally:
            os.unlink(tmp_path)
        catalog_id = uuid.uuid4().hex[:12]
        with service.lock:
            service.catalogs[catalog_id] = catalog
        return {"id": catalog_id, "n_items": catalog.n_items, "dim": catalog.dim}

    @app.get("/catalogs")
    async def list_catalogs():
        with service.lock:
            return [
                {"id": cid, "n_items": c.n_items, "dim": c.dim}
                for cid, c in service.catalogs.items()
            ]

    @app.post("/sessions")
    async def create_session(body: dict):
        session = service.create_session(body)
        return {
            "session_id": session.id,
            "mode": session.mode,
            "strategy": session.state.strategy_name,
            "k": session.state.k,
            "query": _query_payload(session),
        }

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        session = service.get_session(session_id)
        return {
            "session_id": session.id,
            "mode": session.mode,
            "strategy": session.state.strategy_name,
            "k": session.state.k,
            "turn": session.state.turn,
            "history": [
                {"query_idx": row.query_idx, "slate_ids": list(row.slate_ids),
                 "response_idx": row.response_idx, "evoi": row.evoi}
                for row in session.state.rows
            ],
            "query": _query_payload(session),
        }

    @app.get("/sessions/{session_id}/query")
    async def get_query(session_id: str):
        return _query_payload(service.get_session(session_id))

    @app.post("/sessions/{session_id}/response")
    async def post_response(session_id: str, body: dict):
        session = service.get_session(session_id)
        if "turn" not in body or "chosen" not in body:
            raise ApiError(422, "invalid_body", "body must contain turn and chosen")
        turn, chosen = int(body["turn"]), int(body["chosen"])
        with session.lock:
            state = session.state
            if turn != state.turn:
                raise ApiError(409, "stale_turn",
                               f"turn {turn} already answered (current {state.turn})")
            if not 0 <= chosen < state.k:
                raise ApiError(422, "invalid_choice",
                               f"chosen must be in [0, {state.k})")
            answered_row = None
            try:
                answered_row = state.answer(chosen)
            except DegeneratePosteriorError as exc:
                raise ApiError(409, "degenerate_posterior", str(exc))
            service.append_event(
                session, {"type": "response", "turn": turn, "chosen": chosen})
            service._advance(session)
            session.updated = time.time()
        return {
            "answered": {"turn": answered_row.query_idx,
                         "evoi": answered_row.evoi,
                         "regret": answered_row.regret
                         if session.mode == "demo" else None},
            "query": _query_payload(session),
            "recommendations": _recommendations_payload(session, 5),
            "diagnostics": _diagnostics_payload(session),
        }

    @app.get("/sessions/{session_id}/recommendations")
    async def get_recommendations(session_id: str, n: int = 5):
        session = service.get_session(session_id)
        return _recommendations_payload(session, n)

    @app.get("/sessions/{session_id}/diagnostics")
    async def get_diagnostics(session_id: str):
        return _diagnostics_payload(service.get_session(session_id))

    static = static_dir or os.environ.get("ELICIT_STATIC_DIR")
    if static and Path(static).is_dir():
        app.mount("/", StaticFiles(directory=static, html=True), name="ui")
    return app


def run_server(port=None, host="127.0.0.1", sessions_dir=None, static_dir=None):
    import uvicorn

    port = port or int(os.environ.get("ELICIT_PORT", "8080"))
    app = create_app(ServiceState(sessions_dir=sessions_dir), static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)
