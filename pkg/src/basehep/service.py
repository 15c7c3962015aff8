"""HTTP service exposing the session workflow and evaluation runs.

Every state change routes through the session-state-machine operations; the
endpoints are thin adapters. The store and graph are built once at startup
and shared read-only across requests.
"""
from __future__ import annotations

import threading
import uuid
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import agents, attributes, idtable, llm, session as session_mod
from .config import ServiceConfig, build_runtime
from .evaluation import DatasetError, EvalConfig, load_eval_dataset, run_evaluation
from .graph import KnowledgeGraph
from .idtable import EntryStore, TableId, render_error_rate
from .resolver import EmptyTable
from .session import (
    ReviewSession,
    SessionStore,
    advance_attribute,
    advance_decompose,
    advance_resolve,
    apply_expert_edits,
    create_session,
    reopen_session,
    session_to_dict,
)


class CaseModel(BaseModel):
    data_source_text: str
    table: str


class CreateSessionRequest(BaseModel):
    case_text: str
    table: str
    shots: Optional[int] = None
    ablation: bool = False


class SessionCreated(BaseModel):
    session_id: str


class ReportModel(BaseModel):
    kind: str
    sections: dict[str, str]
    raw_text: str


class CandidatesModel(BaseModel):
    pif: list[str]
    cfm: list[list[str]]
    task_and_error_measure: list[str]
    pif_measure: list[str]
    other_pifs_and_uncertainty: list[str]
    warnings: list[str] = Field(default_factory=list)


class ResolvedAttrsModel(BaseModel):
    pif: str
    cfm: list[str]
    task_and_error_measure: str
    pif_measure: str
    other_pifs_and_uncertainty: str
    provenance: dict[str, str]


class RankedMatchModel(BaseModel):
    rank: int
    entry_id: str
    score: float
    error_rate: float
    breakdown: dict[str, float]


class ResolutionModel(BaseModel):
    ranked_matches: list[RankedMatchModel]
    base_hep: float


class AuditEntryModel(BaseModel):
    ts: float
    actor: str
    action: str
    digest: str
    payload: Optional[dict] = None


class SessionSnapshot(BaseModel):
    session_id: str
    case: CaseModel
    stage: str
    shots: int
    ablation: bool
    exclude_reference: Optional[str]
    prompt_version: str
    reports: Optional[list[ReportModel]]
    candidates: Optional[CandidatesModel]
    resolved_attrs: Optional[ResolvedAttrsModel]
    resolution: Optional[ResolutionModel]
    shot_ids: Optional[list[str]]
    timings: dict[str, float]
    audit_log: list[AuditEntryModel]


class EditsModel(BaseModel):
    pif: Optional[str] = None
    cfm: Optional[list[str] | str] = None
    task_and_error_measure: Optional[str] = None
    pif_measure: Optional[str] = None
    other_pifs_and_uncertainty: Optional[str] = None

    def as_mapping(self) -> dict[str, object]:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class EditRequest(BaseModel):
    edits: EditsModel
    actor: str = "expert"


class TableInfo(BaseModel):
    table: str
    label: str
    entry_count: int


class EntryModel(BaseModel):
    entry_id: str
    table: str
    pif: str
    cfms: list[str]
    error_rate: float
    error_rate_text: str
    task: str
    error_measure: Optional[str]
    pif_measure: str
    other_pifs: Optional[str]
    uncertainty: Optional[str]
    reference: str


class EvalRunRequest(BaseModel):
    dataset_text: Optional[str] = None
    dataset_path: Optional[str] = None
    shots: int = 5
    seed: int = 0
    n_resamples: int = 10_000
    ablation: bool = False


class EvalRunCreated(BaseModel):
    run_id: str


class EvalRunStatus(BaseModel):
    run_id: str
    status: str
    summary: Optional[dict] = None
    summary_text: Optional[str] = None
    error: Optional[str] = None


def _entry_model(entry: idtable.IdTableEntry) -> EntryModel:
    return EntryModel(
        entry_id=entry.entry_id,
        table=entry.table.code,
        pif=entry.pif.render(),
        cfms=sorted(c.value for c in entry.cfms),
        error_rate=entry.error_rate,
        error_rate_text=render_error_rate(entry.error_rate),
        task=entry.task,
        error_measure=entry.error_measure,
        pif_measure=entry.pif_measure,
        other_pifs=entry.other_pifs,
        uncertainty=entry.uncertainty_note,
        reference=entry.reference_id,
    )


class _EvalRunRegistry:
    def __init__(self) -> None:
        self._runs: dict[str, dict] = {}
        self._lock = threading.Lock()

    def create(self) -> str:
        run_id = uuid.uuid4().hex
        with self._lock:
            self._runs[run_id] = {"status": "running"}
        return run_id

    def finish(self, run_id: str, summary: dict, summary_text: str) -> None:
        with self._lock:
            self._runs[run_id] = {
                "status": "done",
                "summary": summary,
                "summary_text": summary_text,
            }

    def fail(self, run_id: str, error: str) -> None:
        with self._lock:
            self._runs[run_id] = {"status": "failed", "error": error}

    def get(self, run_id: str) -> dict:
        with self._lock:
            return dict(self._runs[run_id])


_PROVIDER_ERRORS = (llm.FixtureMiss, llm.ProviderUnavailable, llm.ProviderRefusal)

_ERROR_STATUS = (
    (session_mod.IllegalTransition, 409),
    (EmptyTable, 409),
    (llm.FixtureMiss, 502),
    (llm.ProviderUnavailable, 502),
    (llm.ProviderRefusal, 502),
    (attributes.MissingDimension, 422),
    (attributes.NoValidCandidate, 422),
    (session_mod.MalformedEdit, 400),
    (agents.InvalidCase, 400),
    (attributes.IllegalShotCount, 400),
    (DatasetError, 400),
    (idtable.MalformedPifCode, 400),
    (idtable.FormatError, 400),
)


def create_app(
    config: ServiceConfig,
    store: Optional[EntryStore] = None,
    graph: Optional[KnowledgeGraph] = None,
    provider: Optional[llm.Provider] = None,
) -> FastAPI:
    """Build the application; fails fast if the data directory is unusable."""
    if store is None or graph is None or provider is None:
        store, graph, provider = build_runtime(config)

    app = FastAPI(title="base HEP estimation service")
    sessions = SessionStore(config.journal_dir)
    sessions.load_journals()
    eval_runs = _EvalRunRegistry()

    app.state.store = store
    app.state.graph = graph
    app.state.provider = provider
    app.state.sessions = sessions
    app.state.config = config

    for exc_type, status in _ERROR_STATUS:
        def _handler(request: Request, exc: Exception, status=status) -> JSONResponse:
            return JSONResponse(status_code=status, content={"detail": str(exc)})

        app.add_exception_handler(exc_type, _handler)

    def _not_found(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    app.add_exception_handler(KeyError, _not_found)

    def _agent_stage_error(request: Request, exc: agents.AgentStageError) -> JSONResponse:
        # Provider trouble is a gateway problem; anything else is bad model output.
        status = 502 if isinstance(exc.cause, _PROVIDER_ERRORS) else 422
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    app.add_exception_handler(agents.AgentStageError, _agent_stage_error)

    def _snapshot(target: ReviewSession) -> SessionSnapshot:
        return SessionSnapshot(**session_to_dict(target))

    @app.post("/sessions", response_model=SessionCreated)
    def create(request: CreateSessionRequest) -> SessionCreated:
        table = TableId.parse(request.table)
        shots = attributes.ShotConfig(
            request.shots if request.shots is not None else config.default_shots
        )
        case = agents.CaseInput(data_source_text=request.case_text, table=table)
        target = create_session(case, shots=shots, ablation=request.ablation)
        sessions.add(target)
        return SessionCreated(session_id=target.session_id)

    @app.get("/sessions/{session_id}", response_model=SessionSnapshot)
    def snapshot(session_id: str) -> SessionSnapshot:
        return _snapshot(sessions.get(session_id))

    def _run_stage(session_id: str, op) -> SessionSnapshot:
        target = sessions.get(session_id)
        with sessions.lock(session_id):
            try:
                op(target)
            finally:
                sessions.commit(target)
        return _snapshot(target)

    @app.post("/sessions/{session_id}/decompose", response_model=SessionSnapshot)
    def decompose(session_id: str) -> SessionSnapshot:
        return _run_stage(session_id, lambda s: advance_decompose(s, provider))

    @app.post("/sessions/{session_id}/attribute", response_model=SessionSnapshot)
    def attribute(session_id: str) -> SessionSnapshot:
        return _run_stage(
            session_id,
            lambda s: advance_attribute(s, graph, provider, config.context_max_entries),
        )

    @app.post("/sessions/{session_id}/resolve", response_model=SessionSnapshot)
    def resolve(session_id: str) -> SessionSnapshot:
        return _run_stage(session_id, lambda s: advance_resolve(s, graph))

    @app.put("/sessions/{session_id}/attributes", response_model=SessionSnapshot)
    def edit_attributes(session_id: str, request: EditRequest) -> SessionSnapshot:
        return _run_stage(
            session_id,
            lambda s: apply_expert_edits(s, request.edits.as_mapping(), actor=request.actor),
        )

    @app.post("/sessions/{session_id}/reopen", response_model=SessionSnapshot)
    def reopen(session_id: str) -> SessionSnapshot:
        return _run_stage(session_id, lambda s: reopen_session(s))

    @app.get("/tables", response_model=list[TableInfo])
    def tables() -> list[TableInfo]:
        return [
            TableInfo(table=t.code, label=t.label, entry_count=len(store.by_table(t)))
            for t in store.tables()
        ]

    @app.get("/tables/{table}/entries", response_model=list[EntryModel])
    def table_entries(table: str) -> list[EntryModel]:
        table_id = TableId.parse(table)
        entries = sorted(store.by_table(table_id), key=lambda e: e.entry_id)
        return [_entry_model(e) for e in entries]

    @app.post("/eval/runs", response_model=EvalRunCreated)
    def start_eval(request: EvalRunRequest) -> EvalRunCreated:
        if (request.dataset_text is None) == (request.dataset_path is None):
            raise DatasetError("provide exactly one of dataset_text or dataset_path")
        if request.dataset_text is not None:
            dataset = load_eval_dataset(request.dataset_text, store)
        else:
            with open(request.dataset_path, "rb") as fh:
                dataset = load_eval_dataset(fh, store)
        eval_config = EvalConfig(
            shots=attributes.ShotConfig(request.shots),
            ablation=request.ablation,
            seed=request.seed,
            n_resamples=request.n_resamples,
        )
        run_id = eval_runs.create()

        def work() -> None:
            try:
                result = run_evaluation(dataset, store, graph, provider, eval_config)
                eval_runs.finish(run_id, result.summary.to_dict(), result.summary.to_text())
            except Exception as exc:
                eval_runs.fail(run_id, f"{type(exc).__name__}: {exc}")

        threading.Thread(target=work, daemon=True).start()
        return EvalRunCreated(run_id=run_id)

    @app.get("/eval/runs/{run_id}", response_model=EvalRunStatus)
    def eval_status(run_id: str) -> EvalRunStatus:
        return EvalRunStatus(run_id=run_id, **eval_runs.get(run_id))

    if config.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
