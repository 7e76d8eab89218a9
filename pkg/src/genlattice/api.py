"""HTTP service exposing sessions, sampling jobs, graphs, and filtered lists.

Every view parameter arrives as a query parameter (shareable URLs); reads
never mutate a session snapshot, and identical (snapshot, query) pairs
produce byte-identical bodies with matching ETags.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import uuid
from typing import Any

from fastapi import FastAPI, Request
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from .lattice import TokenLattice, to_json as lattice_to_json
from .layout import LayoutParams, layout_to_json
from .sampling import GenerationRequest, SamplerClient, SamplingError
from .segmentation import RawGeneration, SegmentationMode
from .session import ConflictError, PromptConfig, Session, ViewState

_STATUS = {
    "bad_request": 400,
    "not_found": 404,
    "conflict": 409,
    "provider_error": 502,
    "internal": 500,
}


class ApiError(Exception):
    def __init__(self, code: str, message: str, detail: Any = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail

    def response(self) -> JSONResponse:
        return JSONResponse(
            status_code=_STATUS[self.code],
            content={"error": {"code": self.code, "message": self.message,
                               "detail": self.detail}},
        )


class PromptBody(BaseModel):
    prompt_text: str
    prompt_id: str | None = None
    model_id: str = ""
    temperature: float = Field(default=0.7, ge=0.0, le=2.0)
    n_generations: int = Field(default=20, ge=1)
    palette_color: str | None = None
    generations: list[dict] | None = None  # inline corpus: [{"text": ...}]


class SessionStore:
    """In-memory sessions plus a job registry for async sampling."""

    def __init__(self, sampler: SamplerClient | None = None,
                 endpoint: str = ""):
        self.sampler = sampler
        self.endpoint = endpoint
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._jobs: dict[str, dict] = {}
        self._guard = threading.Lock()

    def create(self) -> str:
        sid = uuid.uuid4().hex[:12]
        with self._guard:
            self._sessions[sid] = Session(session_id=sid)
            self._locks[sid] = threading.Lock()
        return sid

    def get(self, sid: str) -> Session:
        session = self._sessions.get(sid)
        if session is None:
            raise ApiError("not_found", f"unknown session {sid!r}")
        return session

    def lock(self, sid: str) -> threading.Lock:
        return self._locks[sid]

    def new_job(self) -> str:
        jid = uuid.uuid4().hex[:12]
        self._jobs[jid] = {"status": "pending", "error": None}
        return jid

    def job(self, jid: str) -> dict:
        job = self._jobs.get(jid)
        if job is None:
            raise ApiError("not_found", f"unknown job {jid!r}")
        return job


def _parse_float(value: str | None, name: str, default: float,
                 lo: float | None = None, hi: float | None = None) -> float:
    if value is None:
        return default
    try:
        out = float(value)
    except ValueError:
        raise ApiError("bad_request", f"{name} must be a number, got {value!r}")
    if not math.isfinite(out):
        raise ApiError("bad_request", f"{name} must be finite, got {value!r}")
    if lo is not None and hi is not None and not lo <= out <= hi:
        raise ApiError("bad_request", f"{name} must be in [{lo}, {hi}], got {out}")
    return out


def _view_from_query(view: ViewState, request: Request) -> ViewState:
    q = request.query_params
    mode = q.get("mode", view.mode.value)
    try:
        mode = SegmentationMode(mode)
    except ValueError:
        raise ApiError("bad_request", f"unknown mode {mode!r}")
    layout = q.get("layout", view.comparison_layout)
    if layout not in ("merged", "side_by_side"):
        raise ApiError("bad_request", f"unknown comparison layout {layout!r}")
    selection = view.selected_node_ids
    if "selection" in q:
        raw = q.get("selection", "")
        selection = frozenset(s for s in raw.split(",") if s)
    seed = q.get("seed")
    try:
        seed = view.seed if seed is None else int(seed)
    except ValueError:
        raise ApiError("bad_request", f"seed must be an integer, got {seed!r}")
    return ViewState(
        selected_node_ids=selection,
        longtail_t=_parse_float(q.get("longtail"), "longtail", view.longtail_t, 0.0, 1.0),
        merge_threshold=_parse_float(q.get("threshold"), "threshold",
                                     view.merge_threshold),
        parent_interpolation=_parse_float(q.get("lambda"), "lambda",
                                          view.parent_interpolation, 0.0, 1.0),
        mode=mode,
        comparison_layout=layout,
        seed=seed,
    )


def _lattices_for_view(session: Session, snap, view: ViewState) -> dict[str, TokenLattice]:
    if view.comparison_layout == "side_by_side" and len(snap.prompts) > 1:
        return {
            p.prompt_id: session.lattice_for(
                snap.generations_for(p.prompt_id), view.mode,
                view.merge_threshold)
            for p in snap.prompts if snap.generations_for(p.prompt_id)
        }
    gens = tuple(snap.all_generations())
    if not gens:
        return {}
    return {"merged": session.lattice_for(gens, view.mode, view.merge_threshold)}


def _emphasis_partition(lattices: dict[str, TokenLattice],
                        all_gen_ids: list[str],
                        selection: frozenset[str]) -> tuple[set[str], set[str]]:
    if not selection:
        return set(all_gen_ids), set()
    known = {nid for lat in lattices.values() for nid in lat.nodes}
    missing = selection - known
    if missing:
        raise ApiError("bad_request", f"unknown node ids: {sorted(missing)}")
    emphasized = set()
    for lat in lattices.values():
        for gen in lat.gen_order:
            if selection <= set(lat.paths[gen]):
                emphasized.add(gen)
    return emphasized, set(all_gen_ids) - emphasized


def create_app(store: SessionStore | None = None) -> FastAPI:
    store = store or SessionStore()
    app = FastAPI(title="genlattice", version="0.1.0")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def _api_error(_req, exc: ApiError):
        return exc.response()

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req, exc: RequestValidationError):
        return ApiError("bad_request", "invalid request body",
                        detail=jsonable_encoder(exc.errors())).response()

    @app.exception_handler(Exception)
    async def _internal_error(_req, exc: Exception):
        return ApiError("internal", f"{type(exc).__name__}: {exc}").response()

    @app.post("/sessions", status_code=201)
    def create_session():
        return {"session_id": store.create()}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        session = store.get(sid)
        snap = session.current
        return {
            "session_id": sid,
            "snapshot_id": snap.snapshot_id,
            "prompts": [
                {
                    "prompt_id": p.prompt_id,
                    "prompt_text": p.prompt_text,
                    "model_id": p.model_id,
                    "temperature": p.temperature,
                    "n_generations": p.n_generations,
                    "palette_color": p.palette_color,
                    "generation_count": len(snap.generations_for(p.prompt_id)),
                }
                for p in snap.prompts
            ],
            "view_state": {
                "selected_node_ids": sorted(snap.view.selected_node_ids),
                "longtail_t": snap.view.longtail_t,
                "merge_threshold": snap.view.merge_threshold,
                "parent_interpolation": snap.view.parent_interpolation,
                "mode": snap.view.mode.value,
                "comparison_layout": snap.view.comparison_layout,
                "seed": snap.view.seed,
            },
        }

    @app.post("/sessions/{sid}/prompts", status_code=202)
    def add_prompt(sid: str, body: PromptBody):
        session = store.get(sid)
        prompt_id = body.prompt_id or f"prompt-{len(session.current.prompts)}"
        config = PromptConfig(
            prompt_id=prompt_id,
            prompt_text=body.prompt_text,
            model_id=body.model_id,
            temperature=body.temperature,
            n_generations=body.n_generations,
            palette_color=body.palette_color,
        )
        with store.lock(sid):
            try:
                session.add_prompt(config)
            except ConflictError as exc:
                raise ApiError("conflict", str(exc))

        job_id = store.new_job()
        job = store.job(job_id)
        if body.generations is not None:
            gens = []
            for i, record in enumerate(body.generations):
                if "text" not in record:
                    raise ApiError("bad_request",
                                   f"inline generation {i} is missing 'text'")
                gens.append(RawGeneration(
                    id=record.get("id", f"{prompt_id}:{i}"),
                    prompt_id=prompt_id,
                    text=record["text"],
                    model_id=body.model_id,
                    temperature=body.temperature,
                    sample_index=i,
                ))
            with store.lock(sid):
                session.add_generations(prompt_id, gens)
            job["status"] = "done"
            return {"job_id": job_id, "prompt_id": prompt_id, "status": "done"}

        if store.sampler is None:
            job["status"] = "error"
            job["error"] = "no sampling endpoint configured"
            raise ApiError("provider_error", "no sampling endpoint configured")

        req = GenerationRequest(
            prompt_text=body.prompt_text,
            model_id=body.model_id,
            temperature=body.temperature,
            n=body.n_generations,
            endpoint=store.endpoint,
        )

        def run():
            try:
                gens = store.sampler.sample(req, prompt_id=prompt_id)
                with store.lock(sid):
                    session.add_generations(prompt_id, gens)
                job["status"] = "done"
            except SamplingError as exc:
                job["status"] = "error"
                job["error"] = str(exc)

        threading.Thread(target=run, daemon=True).start()
        return {"job_id": job_id, "prompt_id": prompt_id, "status": "pending"}

    @app.get("/jobs/{jid}")
    def get_job(jid: str):
        job = store.job(jid)
        return {"job_id": jid, "status": job["status"], "error": job["error"]}

    @app.get("/sessions/{sid}/graph")
    def get_graph(sid: str, request: Request):
        session = store.get(sid)
        snap = session.current
        view = _view_from_query(snap.view, request)
        gens = snap.all_generations()
        if not gens:
            raise ApiError("not_found", "session has no generations yet")

        lattices = _lattices_for_view(session, snap, view)
        all_ids = [g.id for g in gens]
        emphasized, deemphasized = _emphasis_partition(lattices, all_ids,
                                                       view.selected_node_ids)
        palette = snap.palette()
        params = LayoutParams(parent_interpolation=view.parent_interpolation,
                              seed=view.seed)
        views = []
        for name, lat in sorted(lattices.items()):
            layout = session.layout_for(lat, view)
            lattice_doc = lattice_to_json(lat)
            layout_doc = layout_to_json(layout, params)
            emphasized_nodes = {
                nid for gen in lat.gen_order if gen in emphasized
                for nid in lat.paths[gen]
            } if view.selected_node_ids else set(lat.nodes)
            for entry in layout_doc["nodes"]:
                entry["emphasized"] = entry["id"] in emphasized_nodes
            for entry in layout_doc["paths"]:
                entry["emphasized"] = entry["gen"] in emphasized
            views.append({
                "view_id": name,
                "lattice": lattice_doc,
                "layout": layout_doc,
            })

        body = {
            "session_id": sid,
            "snapshot_id": snap.snapshot_id,
            "comparison_layout": view.comparison_layout,
            "mode": view.mode.value,
            "threshold": view.merge_threshold,
            "parent_interpolation": view.parent_interpolation,
            "longtail": view.longtail_t,
            "seed": view.seed,
            "selection": sorted(view.selected_node_ids),
            "palette": palette,
            "filter": {
                "emphasized": sorted(emphasized),
                "deemphasized": sorted(deemphasized),
            },
            "views": views,
        }
        payload = json.dumps(body, sort_keys=True, separators=(",", ":"))
        etag = hashlib.sha256(payload.encode("utf-8")).hexdigest()
        return Response(content=payload, media_type="application/json",
                        headers={"ETag": etag})

    @app.get("/sessions/{sid}/generations")
    def get_generations(sid: str, request: Request):
        session = store.get(sid)
        snap = session.current
        view = _view_from_query(snap.view, request)
        gens = snap.all_generations()
        lattices = {}
        if gens and view.selected_node_ids:
            lattices = _lattices_for_view(session, snap, view)
        emphasized, _ = _emphasis_partition(lattices, [g.id for g in gens],
                                            view.selected_node_ids)
        return {
            "generations": [
                {
                    "id": g.id,
                    "prompt_id": g.prompt_id,
                    "text": g.text,
                    "emphasized": g.id in emphasized,
                }
                for g in gens
            ]
        }

    @app.put("/sessions/{sid}/view")
    def put_view(sid: str, request: Request):
        session = store.get(sid)
        view = _view_from_query(session.current.view, request)
        with store.lock(sid):
            if view.merge_threshold != session.current.view.merge_threshold:
                session.set_merge_threshold(view.merge_threshold)
            session.set_view(
                selected_node_ids=view.selected_node_ids,
                longtail_t=view.longtail_t,
                parent_interpolation=view.parent_interpolation,
                mode=view.mode,
                comparison_layout=view.comparison_layout,
                seed=view.seed,
            )
        return {"snapshot_id": session.current.snapshot_id}

    return app
