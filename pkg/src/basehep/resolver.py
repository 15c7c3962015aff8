"""Rank table entries against a resolved attribute set and read off the base HEP.

The scoring rule is this package's explicit, test-anchored stand-in for a
graph lookup whose exact ranking rule is otherwise unspecified:

    score = w_pif * pif_term + w_cfm * cfm_term
          + w_task * J(task) + w_pm * J(pif_measure) + w_op * J(other_pifs)

with pif_term 1.0 for an exact code match, 0.5 for a prefix+major match and 0
otherwise, cfm_term the Jaccard similarity of the failure-mode sets, and J the
Jaccard similarity over lowercased word tokens (empty vs empty counts as 0).
Default weights (4, 2, 2, 1, 1) sum to 10, so scores live in [0, 10]; they
encode that PIF and CFM index the tables while the free-text dimensions
corroborate. Ties always break by entry_id ascending.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Mapping

from .attributes import DIMENSIONS, CandidateAttributeSet
from .graph import KnowledgeGraph
from .idtable import (
    CfmCode,
    IdTableEntry,
    PifCode,
    TableId,
    parse_cfm_set,
    parse_pif_code,
    render_cfm_set,
    render_error_rate,
)
from .textnorm import jaccard, token_set


class EmptyTable(LookupError):
    """The requested table holds no entries; no resolution is possible."""


class Provenance(enum.Enum):
    MODEL_RANK1 = "model_rank1"
    EXPERT_EDITED = "expert_edited"


@dataclass(frozen=True)
class ResolvedAttributeSet:
    """One selected value per dimension, with per-dimension provenance."""

    pif: PifCode
    cfms: frozenset[CfmCode]
    task_and_error_measure: str
    pif_measure: str
    other_pifs_and_uncertainty: str
    provenance: Mapping[str, Provenance] = field(
        default_factory=lambda: {d: Provenance.MODEL_RANK1 for d in DIMENSIONS}
    )

    @classmethod
    def from_candidates(cls, candidates: CandidateAttributeSet) -> "ResolvedAttributeSet":
        """Rank-1 value of every dimension, marked as model output."""
        return cls(
            pif=candidates.pif[0],
            cfms=candidates.cfm[0],
            task_and_error_measure=candidates.task_and_error_measure[0],
            pif_measure=candidates.pif_measure[0],
            other_pifs_and_uncertainty=candidates.other_pifs_and_uncertainty[0],
        )

    def value_for(self, dimension: str):
        if dimension == "pif":
            return self.pif
        if dimension == "cfm":
            return self.cfms
        if dimension in DIMENSIONS:
            return getattr(self, dimension)
        raise KeyError(dimension)

    def with_edit(self, dimension: str, value, provenance: Provenance) -> "ResolvedAttributeSet":
        updated = dict(self.provenance)
        updated[dimension] = provenance
        if dimension == "cfm":
            return replace(self, cfms=value, provenance=updated)
        return replace(self, **{dimension: value}, provenance=updated)

    def to_dict(self) -> dict:
        return {
            "pif": self.pif.render(),
            "cfm": sorted(c.value for c in self.cfms),
            "task_and_error_measure": self.task_and_error_measure,
            "pif_measure": self.pif_measure,
            "other_pifs_and_uncertainty": self.other_pifs_and_uncertainty,
            "provenance": {d: self.provenance[d].value for d in DIMENSIONS},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResolvedAttributeSet":
        return cls(
            pif=parse_pif_code(data["pif"]),
            cfms=frozenset(CfmCode(v) for v in data["cfm"]),
            task_and_error_measure=data["task_and_error_measure"],
            pif_measure=data["pif_measure"],
            other_pifs_and_uncertainty=data["other_pifs_and_uncertainty"],
            provenance={d: Provenance(v) for d, v in data["provenance"].items()},
        )


@dataclass(frozen=True)
class ScoreWeights:
    pif: float = 4.0
    cfm: float = 2.0
    task: float = 2.0
    pif_measure: float = 1.0
    other_pifs: float = 1.0


DEFAULT_WEIGHTS = ScoreWeights()


@dataclass(frozen=True)
class MatchScore:
    score: float
    pif_term: float
    cfm_term: float
    task_term: float
    pif_measure_term: float
    other_pifs_term: float

    def breakdown(self) -> dict[str, float]:
        return {
            "pif_term": self.pif_term,
            "cfm_term": self.cfm_term,
            "task_term": self.task_term,
            "pif_measure_term": self.pif_measure_term,
            "other_pifs_term": self.other_pifs_term,
        }


def match_score(
    entry: IdTableEntry, attrs: ResolvedAttributeSet, weights: ScoreWeights = DEFAULT_WEIGHTS
) -> MatchScore:
    if entry.pif == attrs.pif:
        pif_term = 1.0
    elif entry.pif.matches(attrs.pif, prefix_major_only=True):
        pif_term = 0.5
    else:
        pif_term = 0.0

    union = entry.cfms | attrs.cfms
    cfm_term = len(entry.cfms & attrs.cfms) / len(union) if union else 0.0

    task_term = jaccard(token_set(entry.task_text()), token_set(attrs.task_and_error_measure))
    pm_term = jaccard(token_set(entry.pif_measure), token_set(attrs.pif_measure))
    op_term = jaccard(
        token_set(entry.other_pifs_text()), token_set(attrs.other_pifs_and_uncertainty)
    )

    score = (
        weights.pif * pif_term
        + weights.cfm * cfm_term
        + weights.task * task_term
        + weights.pif_measure * pm_term
        + weights.other_pifs * op_term
    )
    return MatchScore(
        score=score,
        pif_term=pif_term,
        cfm_term=cfm_term,
        task_term=task_term,
        pif_measure_term=pm_term,
        other_pifs_term=op_term,
    )


@dataclass(frozen=True)
class RankedMatch:
    rank: int
    entry_id: str
    score: float
    error_rate: float
    terms: MatchScore

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "entry_id": self.entry_id,
            "score": self.score,
            "error_rate": self.error_rate,
            "breakdown": self.terms.breakdown(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RankedMatch":
        b = data["breakdown"]
        return cls(
            rank=data["rank"],
            entry_id=data["entry_id"],
            score=data["score"],
            error_rate=data["error_rate"],
            terms=MatchScore(
                score=data["score"],
                pif_term=b["pif_term"],
                cfm_term=b["cfm_term"],
                task_term=b["task_term"],
                pif_measure_term=b["pif_measure_term"],
                other_pifs_term=b["other_pifs_term"],
            ),
        )


@dataclass(frozen=True)
class HepResolution:
    """Top-ranked matches (at most five) and the base HEP read from rank 1."""

    ranked_matches: tuple[RankedMatch, ...]
    base_hep: float

    def to_dict(self) -> dict:
        return {
            "ranked_matches": [m.to_dict() for m in self.ranked_matches],
            "base_hep": self.base_hep,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HepResolution":
        return cls(
            ranked_matches=tuple(RankedMatch.from_dict(m) for m in data["ranked_matches"]),
            base_hep=data["base_hep"],
        )


TOP_N = 5


def resolve_hep(
    graph: KnowledgeGraph,
    table: TableId,
    attrs: ResolvedAttributeSet,
    weights: ScoreWeights = DEFAULT_WEIGHTS,
) -> HepResolution:
    """Score every entry of the table, rank, and truncate to the top five."""
    entries = graph.entries_for_table(table)
    if not entries:
        raise EmptyTable(f"no entries for table {table.code}")
    scored = [(match_score(entry, attrs, weights), entry) for entry in entries]
    scored.sort(key=lambda pair: (-pair[0].score, pair[1].entry_id))
    ranked = tuple(
        RankedMatch(
            rank=i,
            entry_id=entry.entry_id,
            score=terms.score,
            error_rate=entry.error_rate,
            terms=terms,
        )
        for i, (terms, entry) in enumerate(scored[:TOP_N], start=1)
    )
    return HepResolution(ranked_matches=ranked, base_hep=ranked[0].error_rate)


def top5_contains(resolution: HepResolution, truth_entry_id: str) -> bool:
    return any(m.entry_id == truth_entry_id for m in resolution.ranked_matches)


def export_resolution(resolution: HepResolution) -> str:
    """Delimited export: one record per match with its term breakdown."""
    header = "rank,entry_id,score,error_rate,pif_term,cfm_term,task_term,pif_measure_term,other_pifs_term"
    lines = [header]
    for m in resolution.ranked_matches:
        lines.append(
            ",".join(
                [
                    str(m.rank),
                    m.entry_id,
                    f"{m.score:.6f}",
                    render_error_rate(m.error_rate),
                    f"{m.terms.pif_term:.6f}",
                    f"{m.terms.cfm_term:.6f}",
                    f"{m.terms.task_term:.6f}",
                    f"{m.terms.pif_measure_term:.6f}",
                    f"{m.terms.other_pifs_term:.6f}",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def parse_cfm_edit(value) -> frozenset[CfmCode]:
    """Parse an expert's CFM edit: either a ``D|U`` string or a code list."""
    if isinstance(value, str):
        return parse_cfm_set(value)
    codes = frozenset(CfmCode(str(v).strip().upper()) for v in value)
    if not codes:
        raise ValueError("empty failure-mode set")
    return codes


__all__ = [
    "EmptyTable",
    "Provenance",
    "ResolvedAttributeSet",
    "ScoreWeights",
    "DEFAULT_WEIGHTS",
    "MatchScore",
    "match_score",
    "RankedMatch",
    "HepResolution",
    "resolve_hep",
    "top5_contains",
    "export_resolution",
    "parse_cfm_edit",
    "render_cfm_set",
]
