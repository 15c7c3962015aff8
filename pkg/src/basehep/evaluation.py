"""Evaluation harness: top-5 hits, mean/std, bootstrap CIs, Welch t-tests.

A case counts as a hit on a dimension when the ground-truth value appears
among that dimension's (at most five) candidates: PIF by canonical code,
CFM by set equality, free-text dimensions by normalized-token equality.
Pipeline failures count as misses, never as exclusions, so crashes cannot
inflate accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence

import numpy as np
from scipy import stats as _scipy_stats

from .agents import CaseInput
from .attributes import DIMENSIONS, CandidateAttributeSet, ShotConfig
from .graph import KnowledgeGraph
from .idtable import (
    EntryStore,
    FormatError,
    MalformedPifCode,
    TableId,
    parse_cfm_set,
    parse_pif_code,
)
from .llm import Provider
from .resolver import HepResolution, ResolvedAttributeSet, top5_contains
from .session import (
    advance_attribute,
    advance_decompose,
    advance_resolve,
    create_session,
)
from .textnorm import normalize_text

RESOLUTION_METRIC = "resolution"
METRICS = DIMENSIONS + (RESOLUTION_METRIC,)


class EmptyInput(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class EvalCase:
    case: CaseInput
    truth: ResolvedAttributeSet
    truth_entry_id: str
    reference_id: str


EVAL_HEADER_FIELDS = (
    "case_text",
    "table",
    "truth_entry_id",
    "truth_pif",
    "truth_cfms",
    "truth_task",
    "truth_pif_measure",
    "truth_other_pifs",
    "reference",
)
EVAL_HEADER_LINE = ",".join(EVAL_HEADER_FIELDS)


def load_eval_dataset(source: IO[bytes] | IO[str] | str, store: Optional[EntryStore] = None) -> list[EvalCase]:
    """Parse an evaluation dataset file (same delimited family as IDTABLEs).

    When *store* is given, every truth_entry_id must exist in it under the
    case's table.
    """
    from .idtable import _read_lines, _split_csv_row

    lines = _read_lines(source)
    if not lines:
        raise DatasetError("empty dataset: missing header")
    if lines[0] != EVAL_HEADER_LINE:
        raise DatasetError(f"bad header: expected {EVAL_HEADER_LINE!r}, got {lines[0]!r}")
    cases: list[EvalCase] = []
    for offset, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        try:
            fields = _split_csv_row(line, offset)
        except FormatError as exc:
            raise DatasetError(str(exc)) from None
        if len(fields) != len(EVAL_HEADER_FIELDS):
            raise DatasetError(
                f"row {offset}: expected {len(EVAL_HEADER_FIELDS)} fields, got {len(fields)}"
            )
        record = dict(zip(EVAL_HEADER_FIELDS, fields))
        try:
            table = TableId.parse(record["table"])
            pif = parse_pif_code(record["truth_pif"])
            cfms = parse_cfm_set(record["truth_cfms"])
        except (FormatError, MalformedPifCode, ValueError) as exc:
            raise DatasetError(f"row {offset}: {exc}") from None
        if not record["case_text"].strip():
            raise DatasetError(f"row {offset}: case_text must be non-empty")
        truth = ResolvedAttributeSet(
            pif=pif,
            cfms=cfms,
            task_and_error_measure=record["truth_task"],
            pif_measure=record["truth_pif_measure"],
            other_pifs_and_uncertainty=record["truth_other_pifs"],
        )
        eval_case = EvalCase(
            case=CaseInput(data_source_text=record["case_text"], table=table),
            truth=truth,
            truth_entry_id=record["truth_entry_id"],
            reference_id=record["reference"],
        )
        if store is not None:
            _check_case_against_store(eval_case, store, offset)
        cases.append(eval_case)
    return cases


def _check_case_against_store(case: EvalCase, store: EntryStore, row: Optional[int] = None) -> None:
    where = f"row {row}: " if row is not None else ""
    if case.truth_entry_id not in store:
        raise DatasetError(f"{where}truth_entry_id {case.truth_entry_id!r} not in store")
    if store.get(case.truth_entry_id).table is not case.case.table:
        raise DatasetError(
            f"{where}truth_entry_id {case.truth_entry_id!r} is not in table {case.case.table.code}"
        )


@dataclass(frozen=True)
class EvalOutcome:
    case_index: int
    truth_entry_id: str
    hits: dict[str, bool]
    resolution_hit: bool
    timings: dict[str, float] = field(default_factory=dict)
    used_shot_ids: tuple[str, ...] = ()
    failed: bool = False
    diagnostics: tuple[str, ...] = ()

    def metric(self, name: str) -> bool:
        if name == RESOLUTION_METRIC:
            return self.resolution_hit
        return self.hits[name]


def score_case(
    candidates: CandidateAttributeSet, resolution: HepResolution, truth: EvalCase
) -> EvalOutcome:
    """Top-5 hit flags for one case against its ground truth."""
    truth_attrs = truth.truth
    hits = {
        "pif": any(c == truth_attrs.pif for c in candidates.pif),
        "cfm": any(c == truth_attrs.cfms for c in candidates.cfm),
        "task_and_error_measure": _text_hit(
            candidates.task_and_error_measure, truth_attrs.task_and_error_measure
        ),
        "pif_measure": _text_hit(candidates.pif_measure, truth_attrs.pif_measure),
        "other_pifs_and_uncertainty": _text_hit(
            candidates.other_pifs_and_uncertainty, truth_attrs.other_pifs_and_uncertainty
        ),
    }
    return EvalOutcome(
        case_index=0,
        truth_entry_id=truth.truth_entry_id,
        hits=hits,
        resolution_hit=top5_contains(resolution, truth.truth_entry_id),
    )


def _text_hit(candidates: Sequence[str], truth_text: str) -> bool:
    normalized = normalize_text(truth_text)
    return any(normalize_text(c) == normalized for c in candidates)


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and sample standard deviation (n-1); n=1 gives std 0."""
    if len(values) == 0:
        raise EmptyInput("mean_std needs at least one value")
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    variance = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(variance)


def bootstrap_ci(
    values: Sequence[float], n_resamples: int, level: float, seed
) -> tuple[float, float]:
    """Percentile bootstrap CI of the mean; deterministic given the seed."""
    if len(values) == 0:
        raise EmptyInput("bootstrap_ci needs at least one value")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    if n_resamples < 1:
        raise ValueError("n_resamples must be positive")
    data = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    indices = rng.integers(0, len(data), size=(n_resamples, len(data)))
    means = data[indices].mean(axis=1)
    alpha = 1.0 - level
    lo, hi = np.percentile(means, [100.0 * alpha / 2.0, 100.0 * (1.0 - alpha / 2.0)])
    return float(lo), float(hi)


def t_test_welch(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Welch two-sample t statistic and two-sided p value.

    Degrees of freedom follow Welch-Satterthwaite. The degenerate case of two
    zero-variance samples is defined directly: equal means give (0, 1),
    different means give (+/-inf, 0).
    """
    if len(a) < 2 or len(b) < 2:
        raise InsufficientData("t_test_welch needs at least two values per sample")
    na, nb = len(a), len(b)
    ma, _ = mean_std(a)
    mb, _ = mean_std(b)
    va = sum((v - ma) ** 2 for v in a) / (na - 1)
    vb = sum((v - mb) ** 2 for v in b) / (nb - 1)
    se2 = va / na + vb / nb
    if se2 == 0.0:
        if ma == mb:
            return 0.0, 1.0
        return math.copysign(math.inf, ma - mb), 0.0
    t_stat = (ma - mb) / math.sqrt(se2)
    df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p_value = 2.0 * float(_scipy_stats.t.sf(abs(t_stat), df))
    return t_stat, p_value


@dataclass(frozen=True)
class EvalConfig:
    shots: ShotConfig
    ablation: bool = False
    seed: int = 0
    n_resamples: int = 10_000
    ci_level: float = 0.95

    def to_dict(self) -> dict:
        return {
            "shots": self.shots.k,
            "ablation": self.ablation,
            "seed": self.seed,
            "n_resamples": self.n_resamples,
            "ci_level": self.ci_level,
        }


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float
    ci_lo: float
    ci_hi: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "ci_lo": self.ci_lo, "ci_hi": self.ci_hi}


@dataclass(frozen=True)
class EvalSummary:
    n: int
    config: EvalConfig
    metrics: dict[str, Optional[MetricSummary]]
    stage_timings: dict[str, tuple[float, ...]]
    failures: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "config": self.config.to_dict(),
            "metrics": {
                name: summary.to_dict() if summary else None
                for name, summary in self.metrics.items()
            },
            "stage_timings": {k: list(v) for k, v in self.stage_timings.items()},
            "failures": self.failures,
        }

    def to_text(self) -> str:
        """Human-readable summary table, one row per metric."""
        header = (
            f"Evaluation summary: n={self.n}, shots={self.config.shots.k}, "
            f"ablation={'yes' if self.config.ablation else 'no'}, seed={self.config.seed}"
        )
        lines = [header, ""]
        lines.append(f"{'metric':<28} {'accuracy':>18} {'CI':>20}")
        level_pct = int(round(self.config.ci_level * 100))
        for name in METRICS:
            summary = self.metrics.get(name)
            if summary is None:
                lines.append(f"{name:<28} {'n/a':>18} {'n/a':>20}")
                continue
            acc = f"{summary.mean:.3f} +/- {summary.std:.3f}"
            ci = f"{level_pct}% [{summary.ci_lo:.3f}, {summary.ci_hi:.3f}]"
            lines.append(f"{name:<28} {acc:>18} {ci:>20}")
        if self.stage_timings:
            lines.append("")
            lines.append("stage timings (seconds):")
            for stage, values in sorted(self.stage_timings.items()):
                m, s = mean_std(list(values))
                lines.append(f"  {stage:<12} mean {m:.4f} +/- {s:.4f} over {len(values)} cases")
        if self.failures:
            lines.append("")
            lines.append(f"failed cases counted as misses: {self.failures}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EvalRunResult:
    summary: EvalSummary
    outcomes: tuple[EvalOutcome, ...]


def run_evaluation(
    dataset: Sequence[EvalCase],
    store: EntryStore,
    graph: KnowledgeGraph,
    provider: Provider,
    config: EvalConfig,
) -> EvalRunResult:
    """Run the full pipeline per case and aggregate top-5 accuracies.

    Few-shot selection excludes each case's reference_id. A case whose
    pipeline raises is recorded as an all-miss outcome with diagnostics and
    the run continues.
    """
    for case in dataset:
        _check_case_against_store(case, store)

    outcomes: list[EvalOutcome] = []
    for index, case in enumerate(dataset):
        session = None
        try:
            session = create_session(
                case.case,
                shots=config.shots,
                ablation=config.ablation,
                exclude_reference=case.reference_id,
            )
            if not config.ablation:
                advance_decompose(session, provider)
            advance_attribute(session, graph, provider)
            advance_resolve(session, graph)
            scored = score_case(session.candidates, session.resolution, case)
            outcomes.append(
                EvalOutcome(
                    case_index=index,
                    truth_entry_id=case.truth_entry_id,
                    hits=scored.hits,
                    resolution_hit=scored.resolution_hit,
                    timings=dict(session.timings),
                    used_shot_ids=session.shot_ids or (),
                )
            )
        except Exception as exc:
            outcomes.append(
                EvalOutcome(
                    case_index=index,
                    truth_entry_id=case.truth_entry_id,
                    hits={d: False for d in DIMENSIONS},
                    resolution_hit=False,
                    timings=dict(session.timings) if session is not None else {},
                    used_shot_ids=(session.shot_ids or ()) if session is not None else (),
                    failed=True,
                    diagnostics=(f"{type(exc).__name__}: {exc}",),
                )
            )
    return EvalRunResult(summary=summarize(outcomes, config), outcomes=tuple(outcomes))


def summarize(outcomes: Sequence[EvalOutcome], config: EvalConfig) -> EvalSummary:
    n = len(outcomes)
    metrics: dict[str, Optional[MetricSummary]] = {}
    for metric_index, name in enumerate(METRICS):
        if n == 0:
            metrics[name] = None
            continue
        values = [1.0 if outcome.metric(name) else 0.0 for outcome in outcomes]
        mean, std = mean_std(values)
        lo, hi = bootstrap_ci(
            values, config.n_resamples, config.ci_level, seed=[config.seed, metric_index]
        )
        metrics[name] = MetricSummary(mean=mean, std=std, ci_lo=lo, ci_hi=hi)
    stage_timings: dict[str, list[float]] = {}
    for outcome in outcomes:
        for stage, value in outcome.timings.items():
            stage_timings.setdefault(stage, []).append(value)
    return EvalSummary(
        n=n,
        config=config,
        metrics=metrics,
        stage_timings={k: tuple(v) for k, v in stage_timings.items()},
        failures=sum(1 for o in outcomes if o.failed),
    )


@dataclass(frozen=True)
class AblationDelta:
    """Per-metric case partition between a baseline run and an ablated run.

    better: cases the baseline got right and the ablated run missed (the
    decomposition stage helped); worse: the reverse; unchanged: the rest.
    """

    metric: str
    better: int
    worse: int
    unchanged: int

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "better": self.better,
            "worse": self.worse,
            "unchanged": self.unchanged,
        }


def compare_runs(baseline: EvalRunResult, ablation: EvalRunResult) -> dict[str, AblationDelta]:
    """Pairwise per-case hit deltas between two runs over the same dataset."""
    if len(baseline.outcomes) != len(ablation.outcomes):
        raise ValueError("runs cover different numbers of cases")
    for b, a in zip(baseline.outcomes, ablation.outcomes):
        if b.truth_entry_id != a.truth_entry_id:
            raise ValueError("runs cover different cases or a different order")
    deltas = {}
    for name in METRICS:
        better = worse = unchanged = 0
        for b, a in zip(baseline.outcomes, ablation.outcomes):
            b_hit, a_hit = b.metric(name), a.metric(name)
            if b_hit and not a_hit:
                better += 1
            elif a_hit and not b_hit:
                worse += 1
            else:
                unchanged += 1
        deltas[name] = AblationDelta(name, better, worse, unchanged)
    return deltas
