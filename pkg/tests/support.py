"""Shared test builders: canned agent reports, extraction texts, fixtures,
random stores and random raw IDTABLE files."""
from __future__ import annotations

import random
from importlib import resources
from typing import Optional, Sequence

from hypothesis import strategies as st

from basehep.agents import AGENT_ORDER, AGENT_PROMPT_TAGS, AGENT_SECTIONS, AgentKind
from basehep.attributes import DIMENSIONS
from basehep.idtable import (
    CfmCode,
    EntryStore,
    IdTableEntry,
    PifCode,
    TableId,
)
from basehep.llm import fingerprint_case

SAMPLE_TABLE_TEXT = (
    resources.files("basehep").joinpath("data/idtable_sf_sample.csv").read_text(encoding="utf-8")
)


def agent_text(kind: AgentKind, note: str = "findings") -> str:
    """Conforming report text for one agent."""
    lines = []
    for name in AGENT_SECTIONS[kind]:
        lines.append(f"{name.upper()}:")
        lines.append(f"{name} {note} for this case.")
    return "\n".join(lines)


def extract_text(
    pif: Sequence[str] = ("SF4",),
    cfm: Sequence[str] = ("D",),
    task: Sequence[str] = ("Railroad operators start new workshift",),
    pif_measure: Sequence[str] = ("New workshift, no mental model for checking",),
    other_pifs: Sequence[str] = ("Other PIF may exist",),
) -> str:
    """Contract-conforming ranked candidate text for the extraction stage."""
    blocks = {
        "pif": pif,
        "cfm": cfm,
        "task_and_error_measure": task,
        "pif_measure": pif_measure,
        "other_pifs_and_uncertainty": other_pifs,
    }
    lines = []
    for dimension in DIMENSIONS:
        lines.append(f"{dimension.upper()}:")
        for rank, value in enumerate(blocks[dimension], start=1):
            lines.append(f"RANK {rank}: {value}")
    return "\n".join(lines)


def case_fixtures(
    case_text: str,
    extraction: Optional[str] = None,
    include_agents: bool = True,
    note: str = "findings",
) -> dict[tuple[str, str], str]:
    """A complete fixture set for one case."""
    fingerprint = fingerprint_case(case_text)
    fixtures: dict[tuple[str, str], str] = {}
    if include_agents:
        for kind in AGENT_ORDER:
            fixtures[(AGENT_PROMPT_TAGS[kind], fingerprint)] = agent_text(kind, note)
    fixtures[("attribute.extract", fingerprint)] = extraction or extract_text()
    return fixtures


# ---------------------------------------------------------------------------
# Random generation (seeded random.Random, used by acceptance loops)

_WORDS = (
    "assessment", "data", "collection", "shift", "check", "procedure", "alarm",
    "pump", "valve", "reading", "operator", "communication", "diagnosis",
    "startup", "manual", "display", "crew", "briefing", "indicator", "log",
)


def random_pif(rng: random.Random, prefixes: Sequence[str] = ("SF", "IAR", "TC", "X")) -> PifCode:
    prefix = rng.choice(list(prefixes))
    major = rng.randrange(0, 6)
    minor = rng.randrange(0, 6) if rng.random() < 0.5 else None
    return PifCode(prefix, major, minor)


def random_cfms(rng: random.Random) -> frozenset[CfmCode]:
    codes = list(CfmCode)
    count = rng.choice((1, 1, 1, 2))
    return frozenset(rng.sample(codes, count))


def random_text(rng: random.Random, max_words: int = 6) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randrange(0, max_words + 1)))


def random_entry(rng: random.Random, index: int, table: Optional[TableId] = None) -> IdTableEntry:
    return IdTableEntry(
        entry_id=f"e{index:03d}",
        table=table or rng.choice(list(TableId)),
        pif=random_pif(rng),
        cfms=random_cfms(rng),
        error_rate=rng.choice((0.5, 0.2, 0.0016, 0.25, 0.00035, 0.0082, 1.0, 0.013)),
        task=random_text(rng) or "task",
        error_measure=random_text(rng) or None,
        pif_measure=random_text(rng),
        other_pifs=random_text(rng) or None,
        uncertainty_note=rng.choice(("Expert judgment", None)),
        reference_id=f"ref{rng.randrange(0, 4)}",
    )


def random_store(rng: random.Random, max_entries: int = 12, table: Optional[TableId] = None) -> EntryStore:
    count = rng.randrange(0, max_entries + 1)
    return EntryStore(random_entry(rng, i, table) for i in range(count))


def random_rate_text(rng: random.Random) -> str:
    """A legal rate rendered in one of several accepted spellings."""
    value = rng.choice((0.5, 0.2, 0.25, 0.0016, 0.00035, 0.0082, 1.0, 0.07, 0.0099999))
    style = rng.randrange(3)
    if style == 0:
        return repr(value)
    if style == 1:
        return f"{value:.4E}"
    return f"{value:e}"


def random_free_text(rng: random.Random) -> str:
    words = [rng.choice(_WORDS) for _ in range(rng.randrange(0, 5))]
    if rng.random() < 0.3:
        words.append('say "stop"')
    if rng.random() < 0.3:
        words.append("a, b")
    return " ".join(words)


def _render_raw_field(rng: random.Random, text: str) -> str:
    needs_quote = '"' in text or "," in text
    if needs_quote or rng.random() < 0.5:
        return '"' + text.replace('"', '""') + '"'
    return text


def random_idtable_text(rng: random.Random, max_rows: int = 10) -> str:
    """A well-formed raw IDTABLE file with varied quoting and rate formats."""
    lines = [
        "entry_id,table,pif,cfms,error_rate,task,error_measure,pif_measure,other_pifs,uncertainty,reference"
    ]
    for i in range(rng.randrange(0, max_rows + 1)):
        table = rng.choice(list(TableId))
        pif = random_pif(rng)
        cfms = random_cfms(rng)
        cfm_text = "|".join(rng.sample([c.value for c in cfms], len(cfms)))
        fields = [
            f"row-{i:03d}",
            table.code,
            pif.render(),
            cfm_text,
            random_rate_text(rng),
            _render_raw_field(rng, random_free_text(rng)),
            _render_raw_field(rng, random_free_text(rng)) if rng.random() < 0.7 else "",
            _render_raw_field(rng, random_free_text(rng)),
            _render_raw_field(rng, random_free_text(rng)) if rng.random() < 0.5 else "",
            _render_raw_field(rng, random_free_text(rng)) if rng.random() < 0.5 else "",
            f"ref{rng.randrange(0, 5)}",
        ]
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Synthetic evaluation dataset over the packaged sample table.

EVAL_HEADER = (
    "case_text,table,truth_entry_id,truth_pif,truth_cfms,truth_task,"
    "truth_pif_measure,truth_other_pifs,reference"
)


def _q(text: str) -> str:
    return '"' + text.replace('"', '""') + '"'


def eval_dataset_text(rows: Sequence[dict]) -> str:
    lines = [EVAL_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    _q(r["case_text"]),
                    r["table"],
                    r["truth_entry_id"],
                    r["truth_pif"],
                    r["truth_cfms"],
                    _q(r["truth_task"]),
                    _q(r["truth_pif_measure"]),
                    _q(r["truth_other_pifs"]),
                    r["reference"],
                ]
            )
        )
    return "\n".join(lines) + "\n"


def synthetic_eval_setup():
    """A hand-constructed 4-case dataset with fixtures and hand-counted hits.

    Per-case design (candidates vs dataset truth):

              pif   cfm   task  pif_measure  other
    case 1    hit   hit   hit   miss         hit
    case 2    hit   hit   hit   miss         hit
    case 3    hit   miss  hit   miss         miss
    case 4    miss  miss  hit   miss         miss

    so the dimension accuracies are 0.75, 0.50, 1.00, 0.00, 0.50. The
    ablation fixture set is identical except case 1's extraction loses the
    correct PIF, flipping exactly that one hit.
    """
    rows = [
        {
            "case_text": "Case A: operators begin a shift and skip the unspecified hardware check.",
            "table": "SF",
            "truth_entry_id": "sf-002",
            "truth_pif": "SF4",
            "truth_cfms": "D",
            "truth_task": "Hardware check at shift start",
            "truth_pif_measure": "No mental model for checking",
            "truth_other_pifs": "Other PIF may exist",
            "reference": "mcguirl2006",
        },
        {
            "case_text": "Case B: crew assesses a plant upset while following emergency procedures.",
            "table": "SF",
            "truth_entry_id": "sf-003",
            "truth_pif": "SF0",
            "truth_cfms": "U",
            "truth_task": "Situation assessment in EOP",
            "truth_pif_measure": "Bias not formed",
            "truth_other_pifs": "Expert judgment",
            "reference": "xing2017",
        },
        {
            "case_text": "Case C: a pharmacist dispenses medicine without a covering procedure.",
            "table": "SF",
            "truth_entry_id": "sf-001",
            "truth_pif": "SF3.3",
            "truth_cfms": "DM",
            "truth_task": "Medicine dispensing",
            "truth_pif_measure": "Training gaps",
            "truth_other_pifs": "Uncertain",
            "reference": "cohen2012",
        },
        {
            "case_text": "Case D: an operator dismisses critical data during situation assessment.",
            "table": "SF",
            "truth_entry_id": "sf-004",
            "truth_pif": "SF4",
            "truth_cfms": "U",
            "truth_task": "Situation assessment in EOP",
            "truth_pif_measure": "Bias formed",
            "truth_other_pifs": "Expert judgment",
            "reference": "xing2017",
        },
    ]
    extractions = [
        extract_text(
            pif=("SF4", "SF3.3"),
            cfm=("D",),
            task=("Hardware check, at shift start!",),
            pif_measure=("new workshift unclear",),
            other_pifs=("Other PIF may exist",),
        ),
        extract_text(
            pif=("SF0",),
            cfm=("U",),
            task=("situation assessment in EOP",),
            pif_measure=("bias formed",),
            other_pifs=("Expert judgment",),
        ),
        extract_text(
            pif=("SF3.3",),
            cfm=("D",),
            task=("Medicine dispensing",),
            pif_measure=("Inadequate time",),
            other_pifs=("none noted",),
        ),
        extract_text(
            pif=("SF3.1", "SF3.2"),
            cfm=("D",),
            task=("Situation assessment in EOP",),
            pif_measure=("unrelated measure",),
            other_pifs=("none",),
        ),
    ]
    baseline_fixtures: dict[tuple[str, str], str] = {}
    ablation_fixtures: dict[tuple[str, str], str] = {}
    for row, extraction in zip(rows, extractions):
        baseline_fixtures.update(case_fixtures(row["case_text"], extraction=extraction))
        ablation_fixtures.update(
            case_fixtures(row["case_text"], extraction=extraction, include_agents=False)
        )
    # Ablated run loses the correct PIF on case 1 only.
    degraded = extract_text(
        pif=("SF3.3",),
        cfm=("D",),
        task=("Hardware check, at shift start!",),
        pif_measure=("new workshift unclear",),
        other_pifs=("Other PIF may exist",),
    )
    ablation_fixtures[("attribute.extract", fingerprint_case(rows[0]["case_text"]))] = degraded

    expected_accuracy = {
        "pif": 0.75,
        "cfm": 0.50,
        "task_and_error_measure": 1.00,
        "pif_measure": 0.00,
        "other_pifs_and_uncertainty": 0.50,
    }
    expected_pif_partition = (1, 0, 3)
    return (
        eval_dataset_text(rows),
        baseline_fixtures,
        ablation_fixtures,
        expected_accuracy,
        expected_pif_partition,
    )


# ---------------------------------------------------------------------------
# Hypothesis strategies

pif_codes = st.builds(
    PifCode,
    prefix=st.text(alphabet="ABCDEFGHIJKLMNOPQRSTUVWXYZ", min_size=1, max_size=3),
    major=st.integers(min_value=0, max_value=99),
    minor=st.one_of(st.none(), st.integers(min_value=0, max_value=99)),
)

cfm_sets = st.frozensets(st.sampled_from(list(CfmCode)), min_size=1, max_size=3)

free_text = st.text(
    alphabet="abcdefghijklmnopqrstuvwxyz ABC0123456789.,;()/-",
    max_size=40,
).filter(lambda s: "\n" not in s and "\r" not in s)


entries = st.builds(
    IdTableEntry,
    entry_id=st.uuids().map(lambda u: f"id-{u.hex[:8]}"),
    table=st.sampled_from(list(TableId)),
    pif=pif_codes,
    cfms=cfm_sets,
    error_rate=st.floats(min_value=1e-6, max_value=1.0, exclude_min=False, allow_nan=False),
    task=free_text,
    error_measure=st.one_of(st.none(), free_text.filter(bool)),
    pif_measure=free_text,
    other_pifs=st.one_of(st.none(), free_text.filter(bool)),
    uncertainty_note=st.one_of(st.none(), free_text.filter(bool)),
    reference_id=st.sampled_from(["ref0", "ref1", "ref2", "ref3"]),
)

stores = st.lists(entries, max_size=10, unique_by=lambda e: e.entry_id).map(EntryStore)
