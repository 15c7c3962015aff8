"""Expert-in-the-loop session lifecycle with an append-only audit journal.

Stages move Created -> Decomposed -> Attributed -> Resolved, with two extra
edges: expert edits keep a session at Attributed, and a rejected resolution
reopens back to Attributed. The audit log is the source of truth: one journal
record per audit entry, and a session is rebuilt by replaying its journal.
"""
from __future__ import annotations

import enum
import hashlib
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .agents import (
    AgentReport,
    CaseInput,
    InvalidCase,
    run_decomposition,
)
from .attributes import (
    CandidateAttributeSet,
    ShotConfig,
    build_attribute_prompt,
    extract_attributes,
    select_few_shots,
    DIMENSIONS,
)
from .graph import DEFAULT_CONTEXT_ENTRIES, KnowledgeGraph, serialize_graph_context
from .idtable import MalformedPifCode, TableId, parse_pif_code
from .llm import CompletionRequest, Provider
from .prompts import prompt_set_version
from .resolver import (
    HepResolution,
    Provenance,
    ResolvedAttributeSet,
    parse_cfm_edit,
    resolve_hep,
)


class IllegalTransition(RuntimeError):
    pass


class MalformedEdit(ValueError):
    pass


class JournalError(RuntimeError):
    pass


class SessionStage(enum.Enum):
    CREATED = "created"
    DECOMPOSED = "decomposed"
    ATTRIBUTED = "attributed"
    RESOLVED = "resolved"


ACTOR_SYSTEM = "system"
ACTOR_EXPERT = "expert"


@dataclass(frozen=True)
class AuditEntry:
    ts: float
    actor: str
    action: str
    digest: str
    payload: Optional[dict] = None

    def to_record(self) -> dict:
        return {
            "ts": self.ts,
            "actor": self.actor,
            "action": self.action,
            "digest": self.digest,
            "payload": self.payload,
        }


def _digest(payload: Optional[dict]) -> str:
    blob = json.dumps(payload or {}, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass
class ReviewSession:
    session_id: str
    case: CaseInput
    shot_config: ShotConfig
    ablation: bool
    stage: SessionStage
    prompt_version: str
    exclude_reference: Optional[str] = None
    reports: Optional[tuple[AgentReport, ...]] = None
    candidates: Optional[CandidateAttributeSet] = None
    resolved_attrs: Optional[ResolvedAttributeSet] = None
    resolution: Optional[HepResolution] = None
    shot_ids: Optional[tuple[str, ...]] = None
    timings: dict[str, float] = field(default_factory=dict)
    audit_log: list[AuditEntry] = field(default_factory=list)

    def audit(self, actor: str, action: str, payload: Optional[dict] = None) -> None:
        self.audit_log.append(
            AuditEntry(ts=time.time(), actor=actor, action=action, digest=_digest(payload), payload=payload)
        )


def consistency_violations(session: ReviewSession) -> list[str]:
    """Stage-field consistency check; empty means the invariant holds."""
    problems = []
    past_decomposed = session.stage in (
        SessionStage.DECOMPOSED,
        SessionStage.ATTRIBUTED,
        SessionStage.RESOLVED,
    )
    past_attributed = session.stage in (SessionStage.ATTRIBUTED, SessionStage.RESOLVED)
    if session.ablation:
        if session.reports is not None:
            problems.append("ablation session holds agent reports")
    elif (session.reports is not None) != past_decomposed:
        problems.append("reports presence does not match stage")
    if (session.candidates is not None) != past_attributed:
        problems.append("candidates presence does not match stage")
    if (session.resolved_attrs is not None) != past_attributed:
        problems.append("resolved attributes presence does not match stage")
    if (session.resolution is not None) != (session.stage is SessionStage.RESOLVED):
        problems.append("resolution presence does not match stage")
    return problems


def create_session(
    case: CaseInput,
    shots: ShotConfig,
    ablation: bool = False,
    exclude_reference: Optional[str] = None,
    session_id: Optional[str] = None,
) -> ReviewSession:
    if not case.data_source_text.strip():
        raise InvalidCase("data_source_text must be non-empty")
    session = ReviewSession(
        session_id=session_id or uuid.uuid4().hex,
        case=case,
        shot_config=shots,
        ablation=ablation,
        stage=SessionStage.CREATED,
        prompt_version=prompt_set_version(),
        exclude_reference=exclude_reference,
    )
    session.audit(
        ACTOR_SYSTEM,
        "create",
        {
            "session_id": session.session_id,
            "case": {"data_source_text": case.data_source_text, "table": case.table.code},
            "shots": shots.k,
            "ablation": ablation,
            "exclude_reference": exclude_reference,
            "prompt_version": session.prompt_version,
        },
    )
    return session


def advance_decompose(session: ReviewSession, provider: Provider) -> ReviewSession:
    if session.ablation:
        raise IllegalTransition("decomposition is skipped for ablation sessions")
    if session.stage is not SessionStage.CREATED:
        raise IllegalTransition(f"cannot decompose at stage {session.stage.value}")
    start = time.perf_counter()
    try:
        result = run_decomposition(session.case, provider)
    except Exception as exc:
        payload = {"error": str(exc)}
        raw = getattr(exc, "raw_text", None)
        if raw is not None:
            payload["raw_text"] = raw
        session.audit(ACTOR_SYSTEM, "decompose.error", payload)
        raise
    elapsed = time.perf_counter() - start
    session.reports = result.reports
    session.stage = SessionStage.DECOMPOSED
    session.timings["decompose"] = elapsed
    session.audit(
        ACTOR_SYSTEM,
        "decompose",
        {
            "reports": [r.to_dict() for r in result.reports],
            "agent_latencies": {k.value: v for k, v in result.agent_latencies.items()},
            "elapsed": elapsed,
        },
    )
    return session


def advance_attribute(
    session: ReviewSession,
    graph: KnowledgeGraph,
    provider: Provider,
    context_max_entries: int = DEFAULT_CONTEXT_ENTRIES,
) -> ReviewSession:
    legal = session.stage is SessionStage.DECOMPOSED or (
        session.ablation and session.stage is SessionStage.CREATED
    )
    if not legal:
        raise IllegalTransition(f"cannot attribute at stage {session.stage.value}")
    start = time.perf_counter()
    shots = select_few_shots(
        graph.store, session.case.table, session.shot_config, session.exclude_reference
    )
    context = serialize_graph_context(graph, session.case.table, context_max_entries)
    prompt = build_attribute_prompt(session.case, session.reports, context, shots)
    request = CompletionRequest(
        prompt_tag="attribute.extract",
        prompt=prompt,
        case_fingerprint=session.case.fingerprint(),
    )
    try:
        completion = provider.complete(request)
    except Exception as exc:
        session.audit(ACTOR_SYSTEM, "attribute.error", {"error": str(exc)})
        raise
    try:
        candidates = extract_attributes(completion.text)
    except Exception as exc:
        session.audit(
            ACTOR_SYSTEM, "attribute.error", {"error": str(exc), "raw_text": completion.text}
        )
        raise
    elapsed = time.perf_counter() - start
    session.candidates = candidates
    session.resolved_attrs = ResolvedAttributeSet.from_candidates(candidates)
    session.shot_ids = tuple(s.source_entry_id for s in shots)
    session.stage = SessionStage.ATTRIBUTED
    session.timings["attribute"] = elapsed
    session.audit(
        ACTOR_SYSTEM,
        "attribute",
        {
            "candidates": candidates.to_dict(),
            "resolved_attrs": session.resolved_attrs.to_dict(),
            "shot_ids": list(session.shot_ids),
            "elapsed": elapsed,
        },
    )
    return session


def _parse_edit_value(dimension: str, value):
    if dimension == "pif":
        if not isinstance(value, str):
            raise MalformedEdit(f"pif edit must be a string, got {type(value).__name__}")
        try:
            return parse_pif_code(value)
        except MalformedPifCode as exc:
            raise MalformedEdit(str(exc)) from None
    if dimension == "cfm":
        try:
            return parse_cfm_edit(value)
        except (ValueError, TypeError) as exc:
            raise MalformedEdit(f"bad failure-mode edit: {exc}") from None
    if dimension in DIMENSIONS:
        if not isinstance(value, str) or not value.strip():
            raise MalformedEdit(f"{dimension} edit must be a non-empty string")
        return value.strip()
    raise MalformedEdit(f"unknown dimension {dimension!r}")


def _edit_payload_value(dimension: str, value):
    if dimension == "pif":
        return value.render()
    if dimension == "cfm":
        return sorted(c.value for c in value)
    return value


def apply_expert_edits(
    session: ReviewSession, edits: Mapping[str, object], actor: str = ACTOR_EXPERT
) -> ReviewSession:
    if session.stage is not SessionStage.ATTRIBUTED:
        raise IllegalTransition(f"cannot edit attributes at stage {session.stage.value}")
    parsed = {dim: _parse_edit_value(dim, value) for dim, value in edits.items()}
    if not parsed:
        session.audit(actor, "edit", {"edited": []})
        return session
    for dimension, value in parsed.items():
        session.resolved_attrs = session.resolved_attrs.with_edit(
            dimension, value, Provenance.EXPERT_EDITED
        )
        session.audit(
            actor,
            f"edit.{dimension}",
            {
                "dimension": dimension,
                "value": _edit_payload_value(dimension, value),
                "provenance": Provenance.EXPERT_EDITED.value,
            },
        )
    return session


def advance_resolve(session: ReviewSession, graph: KnowledgeGraph) -> ReviewSession:
    if session.stage is not SessionStage.ATTRIBUTED:
        raise IllegalTransition(f"cannot resolve at stage {session.stage.value}")
    start = time.perf_counter()
    try:
        resolution = resolve_hep(graph, session.case.table, session.resolved_attrs)
    except Exception as exc:
        session.audit(ACTOR_SYSTEM, "resolve.error", {"error": str(exc)})
        raise
    elapsed = time.perf_counter() - start
    session.resolution = resolution
    session.stage = SessionStage.RESOLVED
    session.timings["resolve"] = elapsed
    session.audit(
        ACTOR_SYSTEM, "resolve", {"resolution": resolution.to_dict(), "elapsed": elapsed}
    )
    return session


def reopen_session(session: ReviewSession, actor: str = ACTOR_EXPERT) -> ReviewSession:
    if session.stage is not SessionStage.RESOLVED:
        raise IllegalTransition(f"cannot reopen at stage {session.stage.value}")
    session.resolution = None
    session.stage = SessionStage.ATTRIBUTED
    session.audit(actor, "reopen", {})
    return session


def session_to_dict(session: ReviewSession) -> dict:
    """Full snapshot used by the HTTP service and exports."""
    return {
        "session_id": session.session_id,
        "case": {
            "data_source_text": session.case.data_source_text,
            "table": session.case.table.code,
        },
        "stage": session.stage.value,
        "shots": session.shot_config.k,
        "ablation": session.ablation,
        "exclude_reference": session.exclude_reference,
        "prompt_version": session.prompt_version,
        "reports": [r.to_dict() for r in session.reports] if session.reports else None,
        "candidates": session.candidates.to_dict() if session.candidates else None,
        "resolved_attrs": session.resolved_attrs.to_dict() if session.resolved_attrs else None,
        "resolution": session.resolution.to_dict() if session.resolution else None,
        "shot_ids": list(session.shot_ids) if session.shot_ids is not None else None,
        "timings": dict(session.timings),
        "audit_log": [
            {
                "ts": e.ts,
                "actor": e.actor,
                "action": e.action,
                "digest": e.digest,
                # Error payloads carry the raw model text for reviewer display;
                # ordinary payloads stay journal-only.
                "payload": e.payload if e.action.endswith(".error") else None,
            }
            for e in session.audit_log
        ],
    }


def replay_records(records: list[dict]) -> ReviewSession:
    """Rebuild a session from journal records; the journal is authoritative."""
    session: Optional[ReviewSession] = None
    for record in records:
        action = record["action"]
        payload = record.get("payload") or {}
        if action == "create":
            case = CaseInput(
                data_source_text=payload["case"]["data_source_text"],
                table=TableId(payload["case"]["table"]),
            )
            session = ReviewSession(
                session_id=payload["session_id"],
                case=case,
                shot_config=ShotConfig(payload["shots"]),
                ablation=payload["ablation"],
                stage=SessionStage.CREATED,
                prompt_version=payload.get("prompt_version", ""),
                exclude_reference=payload.get("exclude_reference"),
            )
        elif session is None:
            raise JournalError(f"journal does not start with create: {action}")
        elif action == "decompose":
            session.reports = tuple(AgentReport.from_dict(d) for d in payload["reports"])
            session.stage = SessionStage.DECOMPOSED
            session.timings["decompose"] = payload["elapsed"]
        elif action == "attribute":
            session.candidates = CandidateAttributeSet.from_dict(payload["candidates"])
            session.resolved_attrs = ResolvedAttributeSet.from_dict(payload["resolved_attrs"])
            session.shot_ids = tuple(payload["shot_ids"])
            session.stage = SessionStage.ATTRIBUTED
            session.timings["attribute"] = payload["elapsed"]
        elif action.startswith("edit."):
            dimension = payload["dimension"]
            value = _parse_edit_value(
                dimension,
                "|".join(payload["value"]) if dimension == "cfm" else payload["value"],
            )
            session.resolved_attrs = session.resolved_attrs.with_edit(
                dimension, value, Provenance(payload["provenance"])
            )
        elif action == "edit":
            pass
        elif action == "resolve":
            session.resolution = HepResolution.from_dict(payload["resolution"])
            session.stage = SessionStage.RESOLVED
            session.timings["resolve"] = payload["elapsed"]
        elif action == "reopen":
            session.resolution = None
            session.stage = SessionStage.ATTRIBUTED
        elif action.endswith(".error"):
            pass
        else:
            raise JournalError(f"unknown journal action {action!r}")
        session.audit_log.append(
            AuditEntry(
                ts=record["ts"],
                actor=record["actor"],
                action=action,
                digest=record["digest"],
                payload=payload or None,
            )
        )
    if session is None:
        raise JournalError("empty journal")
    return session


class SessionStore:
    """In-memory session registry with optional journal persistence.

    Writer exclusivity is per session: callers must run mutating operations
    under :meth:`lock`. Each committed audit entry is appended to the
    session's journal file exactly once.
    """

    def __init__(self, journal_dir: Optional[str | Path] = None):
        self._sessions: dict[str, ReviewSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._persisted: dict[str, int] = {}
        self._registry_lock = threading.Lock()
        self._journal_dir = Path(journal_dir) if journal_dir else None
        if self._journal_dir:
            self._journal_dir.mkdir(parents=True, exist_ok=True)

    def _journal_path(self, session_id: str) -> Optional[Path]:
        if self._journal_dir is None:
            return None
        return self._journal_dir / f"{session_id}.jsonl"

    def add(self, session: ReviewSession) -> ReviewSession:
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
            self._persisted[session.session_id] = 0
        self.commit(session)
        return session

    def get(self, session_id: str) -> ReviewSession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise KeyError(f"unknown session {session_id!r}") from None

    def lock(self, session_id: str) -> threading.Lock:
        return self._locks[session_id]

    def session_ids(self) -> list[str]:
        return sorted(self._sessions)

    def commit(self, session: ReviewSession) -> None:
        """Append any audit entries not yet written to the journal."""
        path = self._journal_path(session.session_id)
        if path is None:
            return
        done = self._persisted.get(session.session_id, 0)
        pending = session.audit_log[done:]
        if not pending:
            return
        with open(path, "a", encoding="utf-8") as fh:
            for entry in pending:
                fh.write(json.dumps(entry.to_record(), ensure_ascii=False) + "\n")
        self._persisted[session.session_id] = len(session.audit_log)

    def load_journals(self) -> int:
        """Replay every journal file in the directory; returns count loaded."""
        if self._journal_dir is None:
            return 0
        count = 0
        for path in sorted(self._journal_dir.glob("*.jsonl")):
            records = [
                json.loads(line)
                for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
            if not records:
                continue
            session = replay_records(records)
            with self._registry_lock:
                self._sessions[session.session_id] = session
                self._locks[session.session_id] = threading.Lock()
                self._persisted[session.session_id] = len(session.audit_log)
            count += 1
        return count
