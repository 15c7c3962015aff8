"""Attribute extraction stage: few-shot selection, prompt assembly, parsing.

Few-shot examples are chosen deterministically (entry_id order) and may be
excluded by reference key, the leave-one-out unit used by the evaluation
harness: ground-truth rows share references with their source studies, so
excluding by reference is the conservative leakage guard.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

from . import prompts
from .agents import AgentReport, CaseInput
from .idtable import (
    CfmCode,
    EntryStore,
    IdTableEntry,
    MalformedPifCode,
    PifCode,
    TableId,
    parse_pif_code,
    render_cfm_set,
)

DIMENSIONS = (
    "pif",
    "cfm",
    "task_and_error_measure",
    "pif_measure",
    "other_pifs_and_uncertainty",
)

MAX_CANDIDATES = 5
LEGAL_SHOT_COUNTS = (0, 1, 3, 5)


class IllegalShotCount(ValueError):
    pass


class MissingDimension(ValueError):
    def __init__(self, dimension: str):
        super().__init__(f"missing dimension block {dimension!r}")
        self.dimension = dimension


class NoValidCandidate(ValueError):
    def __init__(self, dimension: str):
        super().__init__(f"dimension {dimension!r} has no valid candidate")
        self.dimension = dimension


@dataclass(frozen=True)
class ShotConfig:
    """Number of worked examples in the prompt; only 0, 1, 3, 5 are legal."""

    k: int

    def __post_init__(self) -> None:
        if self.k not in LEGAL_SHOT_COUNTS:
            raise IllegalShotCount(f"k must be one of {LEGAL_SHOT_COUNTS}, got {self.k}")


@dataclass(frozen=True)
class FewShotExample:
    source_entry_id: str
    rendered_text: str


def render_few_shot(entry: IdTableEntry) -> FewShotExample:
    """Pair an entry's task description with its five dimension labels."""
    lines = [
        f"Task description: {entry.task_text()}",
        f"PIF: {entry.pif.render()}",
        f"CFM: {render_cfm_set(entry.cfms)}",
        f"TASK_AND_ERROR_MEASURE: {entry.task_text()}",
        f"PIF_MEASURE: {entry.pif_measure}",
        f"OTHER_PIFS_AND_UNCERTAINTY: {entry.other_pifs_text()}",
    ]
    return FewShotExample(source_entry_id=entry.entry_id, rendered_text="\n".join(lines))


def select_few_shots(
    store: EntryStore,
    table: TableId,
    shots: ShotConfig,
    exclude_reference: Optional[str] = None,
) -> list[FewShotExample]:
    """First k eligible entries of the table, by entry_id ascending."""
    eligible = sorted(store.by_table(table), key=lambda e: e.entry_id)
    if exclude_reference is not None:
        eligible = [e for e in eligible if e.reference_id != exclude_reference]
    return [render_few_shot(e) for e in eligible[: shots.k]]


@dataclass(frozen=True)
class CandidateAttributeSet:
    """Ranked candidates per dimension, each list capped at five."""

    pif: tuple[PifCode, ...]
    cfm: tuple[frozenset[CfmCode], ...]
    task_and_error_measure: tuple[str, ...]
    pif_measure: tuple[str, ...]
    other_pifs_and_uncertainty: tuple[str, ...]
    warnings: tuple[str, ...] = ()

    def candidates_for(self, dimension: str) -> tuple:
        if dimension not in DIMENSIONS:
            raise KeyError(dimension)
        return getattr(self, dimension)

    def candidate_strings(self, dimension: str) -> list[str]:
        return [_render_candidate(dimension, value) for value in self.candidates_for(dimension)]

    def to_dict(self) -> dict:
        return {
            "pif": [code.render() for code in self.pif],
            "cfm": [sorted(c.value for c in group) for group in self.cfm],
            "task_and_error_measure": list(self.task_and_error_measure),
            "pif_measure": list(self.pif_measure),
            "other_pifs_and_uncertainty": list(self.other_pifs_and_uncertainty),
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CandidateAttributeSet":
        return cls(
            pif=tuple(parse_pif_code(s) for s in data["pif"]),
            cfm=tuple(frozenset(CfmCode(v) for v in group) for group in data["cfm"]),
            task_and_error_measure=tuple(data["task_and_error_measure"]),
            pif_measure=tuple(data["pif_measure"]),
            other_pifs_and_uncertainty=tuple(data["other_pifs_and_uncertainty"]),
            warnings=tuple(data.get("warnings", ())),
        )


def build_attribute_prompt(
    case: CaseInput,
    reports: Optional[Sequence[AgentReport]],
    graph_context: str,
    shots: Sequence[FewShotExample],
) -> str:
    """Deterministic prompt assembly in fixed order.

    *reports* may be None or empty (decomposition ablated); the report block
    is then omitted but the rest of the skeleton is unchanged.
    """
    parts = [prompts.load_template("attribute_instructions.txt").rstrip("\n")]
    parts.append("Knowledge base context:\n" + graph_context)
    if shots:
        blocks = [f"Example {i}:\n{shot.rendered_text}" for i, shot in enumerate(shots, start=1)]
        parts.append("Worked examples:\n" + "\n\n".join(blocks))
    if reports:
        parts.append("Decomposition reports:\n" + "\n\n".join(r.render() for r in reports))
    parts.append("Case:\n" + case.data_source_text)
    parts.append(prompts.load_template("attribute_output_contract.txt").rstrip("\n"))
    return "\n\n".join(parts) + "\n"


_DIMENSION_HEADERS = {name.upper(): name for name in DIMENSIONS}
_RANK_RE = re.compile(r"^\s*RANK\s*(\d+)\s*:\s*(.*\S)\s*$", re.IGNORECASE)
_BLOCK_HEADER_RE = re.compile(r"^\s*([A-Z][A-Z_]*)\s*:\s*$")

_CFM_SPLIT_RE = re.compile(r"[|/,&+\s]+")


def _parse_cfm_candidate(value: str) -> Optional[frozenset[CfmCode]]:
    tokens = [t for t in _CFM_SPLIT_RE.split(value) if t]
    if not tokens:
        return None
    codes = set()
    for token in tokens:
        try:
            codes.add(CfmCode(token.upper()))
        except ValueError:
            return None
    return frozenset(codes)


def _render_candidate(dimension: str, value) -> str:
    if dimension == "pif":
        return value.render()
    if dimension == "cfm":
        return render_cfm_set(value)
    return value


def extract_attributes(llm_text: str) -> CandidateAttributeSet:
    """Parse the five ranked candidate blocks out of the model's answer.

    Ranks come from explicit ``RANK n:`` prefixes, never from line order.
    Malformed candidates are skipped with a warning; lists longer than five
    are truncated with a warning. A dimension whose block is absent raises
    MissingDimension; a block with no usable candidate raises NoValidCandidate.
    """
    blocks: dict[str, list[tuple[int, int, str]]] = {}
    current: Optional[str] = None
    for index, line in enumerate(llm_text.splitlines()):
        header = _BLOCK_HEADER_RE.match(line)
        if header and header.group(1) in _DIMENSION_HEADERS:
            current = _DIMENSION_HEADERS[header.group(1)]
            blocks.setdefault(current, [])
            continue
        if current is None:
            continue
        rank_match = _RANK_RE.match(line)
        if rank_match:
            blocks[current].append((int(rank_match.group(1)), index, rank_match.group(2)))

    warnings: list[str] = []
    parsed: dict[str, tuple] = {}
    for dimension in DIMENSIONS:
        if dimension not in blocks:
            raise MissingDimension(dimension)
        values = []
        seen: set = set()
        for _, _, raw in sorted(blocks[dimension], key=lambda item: (item[0], item[1])):
            if dimension == "pif":
                try:
                    value = parse_pif_code(raw)
                except MalformedPifCode:
                    warnings.append(f"pif: skipped malformed candidate {raw!r}")
                    continue
                key = value.render()
            elif dimension == "cfm":
                value = _parse_cfm_candidate(raw)
                if value is None:
                    warnings.append(f"cfm: skipped malformed candidate {raw!r}")
                    continue
                key = value
            else:
                value = raw.strip()
                key = value
            if key in seen:
                continue
            seen.add(key)
            values.append(value)
        if not values:
            raise NoValidCandidate(dimension)
        if len(values) > MAX_CANDIDATES:
            warnings.append(
                f"{dimension}: {len(values)} candidates truncated to {MAX_CANDIDATES}"
            )
            values = values[:MAX_CANDIDATES]
        parsed[dimension] = tuple(values)

    return CandidateAttributeSet(
        pif=parsed["pif"],
        cfm=parsed["cfm"],
        task_and_error_measure=parsed["task_and_error_measure"],
        pif_measure=parsed["pif_measure"],
        other_pifs_and_uncertainty=parsed["other_pifs_and_uncertainty"],
        warnings=tuple(warnings),
    )


def render_candidates(candidates: CandidateAttributeSet) -> str:
    """Canonical re-rendering of a parsed set; extract() of this is identity."""
    lines: list[str] = []
    for dimension in DIMENSIONS:
        lines.append(f"{dimension.upper()}:")
        for rank, value in enumerate(candidates.candidates_for(dimension), start=1):
            lines.append(f"RANK {rank}: {_render_candidate(dimension, value)}")
    return "\n".join(lines) + "\n"
