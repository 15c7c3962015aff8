"""Decomposition stage: four analysis agents run over a case in fixed order.

Each agent answers with a small set of required ``HEADER:`` sections; parsing
reorders them canonically and keeps the raw text so a reviewer can always see
exactly what the model said.
"""
from __future__ import annotations

import enum
import re
import time
from dataclasses import dataclass
from typing import Optional

from . import prompts
from .idtable import TableId
from .llm import CompletionRequest, CompletionResult, Provider, fingerprint_case


class InvalidCase(ValueError):
    pass


class MissingSection(ValueError):
    def __init__(self, kind: "AgentKind", section: str):
        super().__init__(f"{kind.value}: missing section {section!r}")
        self.kind = kind
        self.section = section


class EmptySection(ValueError):
    def __init__(self, kind: "AgentKind", section: str):
        super().__init__(f"{kind.value}: section {section!r} is empty")
        self.kind = kind
        self.section = section


class AgentStageError(RuntimeError):
    """Wraps gateway or parse failures, tagged with the failing agent."""

    def __init__(self, kind: "AgentKind", cause: Exception, raw_text: Optional[str] = None):
        super().__init__(f"{kind.value}: {cause}")
        self.kind = kind
        self.cause = cause
        self.raw_text = raw_text


@dataclass(frozen=True)
class CaseInput:
    """The scenario description plus the chosen base-HEP solution type."""

    data_source_text: str
    table: TableId

    def __post_init__(self) -> None:
        if not self.data_source_text.strip():
            raise InvalidCase("data_source_text must be non-empty")

    def fingerprint(self) -> str:
        return fingerprint_case(self.data_source_text)


class AgentKind(enum.Enum):
    TASK_ANALYSIS = "task_analysis"
    CONTEXT_ANALYSIS = "context_analysis"
    COGNITIVE_ACTIVITIES = "cognitive_activities"
    TIME_CONSTRAINTS = "time_constraints"


# Canonical execution and report order.
AGENT_ORDER = (
    AgentKind.TASK_ANALYSIS,
    AgentKind.CONTEXT_ANALYSIS,
    AgentKind.COGNITIVE_ACTIVITIES,
    AgentKind.TIME_CONSTRAINTS,
)

AGENT_SECTIONS: dict[AgentKind, tuple[str, ...]] = {
    AgentKind.TASK_ANALYSIS: (
        "overview",
        "classification",
        "objectives",
        "error_types_and_impacts",
        "complexity_level",
    ),
    AgentKind.CONTEXT_ANALYSIS: (
        "background_conditions",
        "execution_support",
        "initial_conditions",
        "error_measurement",
    ),
    AgentKind.COGNITIVE_ACTIVITIES: (
        "cognitive_activities",
        "cognitive_demands",
        "mental_processes",
    ),
    AgentKind.TIME_CONSTRAINTS: (
        "temporal_limitations",
        "deadlines",
        "time_sensitive_conditions",
    ),
}

AGENT_PROMPT_TAGS = {
    AgentKind.TASK_ANALYSIS: "agent.task",
    AgentKind.CONTEXT_ANALYSIS: "agent.context",
    AgentKind.COGNITIVE_ACTIVITIES: "agent.cognitive",
    AgentKind.TIME_CONSTRAINTS: "agent.time",
}

_AGENT_TEMPLATES = {
    AgentKind.TASK_ANALYSIS: "agent_task.txt",
    AgentKind.CONTEXT_ANALYSIS: "agent_context.txt",
    AgentKind.COGNITIVE_ACTIVITIES: "agent_cognitive.txt",
    AgentKind.TIME_CONSTRAINTS: "agent_time.txt",
}

AGENT_LABELS = {
    AgentKind.TASK_ANALYSIS: "Task analysis",
    AgentKind.CONTEXT_ANALYSIS: "Context analysis",
    AgentKind.COGNITIVE_ACTIVITIES: "Cognitive activities analysis",
    AgentKind.TIME_CONSTRAINTS: "Time constraints analysis",
}


@dataclass(frozen=True)
class AgentReport:
    kind: AgentKind
    sections: dict[str, str]
    raw_text: str

    def render(self) -> str:
        """Canonical text form: label line then HEADER: sections in order."""
        lines = [f"[{AGENT_LABELS[self.kind]}]"]
        for name in AGENT_SECTIONS[self.kind]:
            lines.append(f"{name.upper()}:")
            lines.append(self.sections[name])
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "sections": dict(self.sections), "raw_text": self.raw_text}

    @classmethod
    def from_dict(cls, data: dict) -> "AgentReport":
        return cls(
            kind=AgentKind(data["kind"]),
            sections=dict(data["sections"]),
            raw_text=data["raw_text"],
        )


def build_agent_prompt(kind: AgentKind, case: CaseInput) -> str:
    return prompts.substitute(prompts.load_template(_AGENT_TEMPLATES[kind]), case.data_source_text)


_HEADER_RE = re.compile(r"^\s*([A-Z][A-Z_]*)\s*:\s*(.*)$")


def parse_agent_report(kind: AgentKind, llm_text: str) -> AgentReport:
    """Split the model's text into the agent's required sections.

    Only the agent's own headers delimit sections; any other line, including
    uppercase lines it does not recognize, is content. Sections come back in
    canonical order regardless of the order the model produced them.
    """
    known = {name.upper(): name for name in AGENT_SECTIONS[kind]}
    collected: dict[str, list[str]] = {}
    current: Optional[str] = None
    for line in llm_text.splitlines():
        match = _HEADER_RE.match(line)
        if match and match.group(1) in known:
            current = known[match.group(1)]
            collected.setdefault(current, [])
            trailing = match.group(2).strip()
            if trailing:
                collected[current].append(trailing)
            continue
        if current is not None and line.strip():
            collected[current].append(line.strip())

    for name in AGENT_SECTIONS[kind]:
        if name not in collected:
            raise MissingSection(kind, name)
        if not collected[name]:
            raise EmptySection(kind, name)
    sections = {name: "\n".join(collected[name]) for name in AGENT_SECTIONS[kind]}
    return AgentReport(kind=kind, sections=sections, raw_text=llm_text)


@dataclass(frozen=True)
class DecompositionResult:
    reports: tuple[AgentReport, ...]
    agent_latencies: dict[AgentKind, float]

    @property
    def total_latency(self) -> float:
        return sum(self.agent_latencies.values())


def run_decomposition(case: CaseInput, provider: Provider) -> DecompositionResult:
    """Run all four agents in canonical order and parse their reports.

    Failures propagate tagged with the failing agent; the raw model text is
    attached when parsing failed so it can be surfaced to the reviewer.
    """
    fingerprint = case.fingerprint()
    reports: list[AgentReport] = []
    latencies: dict[AgentKind, float] = {}
    for kind in AGENT_ORDER:
        request = CompletionRequest(
            prompt_tag=AGENT_PROMPT_TAGS[kind],
            prompt=build_agent_prompt(kind, case),
            case_fingerprint=fingerprint,
        )
        start = time.perf_counter()
        try:
            result: CompletionResult = provider.complete(request)
        except Exception as exc:
            raise AgentStageError(kind, exc) from exc
        try:
            reports.append(parse_agent_report(kind, result.text))
        except (MissingSection, EmptySection) as exc:
            raise AgentStageError(kind, exc, raw_text=result.text) from exc
        latencies[kind] = time.perf_counter() - start
    return DecompositionResult(reports=tuple(reports), agent_latencies=latencies)
