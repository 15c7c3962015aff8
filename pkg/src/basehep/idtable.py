"""IDTABLE ingestion: parse, validate and index error-rate table entries.

An IDTABLE file is UTF-8, comma-delimited, with the fixed header

    entry_id,table,pif,cfms,error_rate,task,error_measure,pif_measure,other_pifs,uncertainty,reference

``table`` is one of SF, IAR, TC; ``cfms`` is a pipe-separated list of
failure-mode codes; the five free-text columns are double-quoted with ``""``
escaping; optional columns may be empty. The loaded store is immutable and
is the single source of truth for every other module.
"""
from __future__ import annotations

import enum
import io
import re
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional


class MalformedPifCode(ValueError):
    """Text does not match the PIF code grammar ``[A-Z]+ digits (. digits)?``."""


class MalformedRate(ValueError):
    """Text is not a decimal or scientific-notation number."""


class RateOutOfRange(ValueError):
    """Rate parsed but lies outside the open-closed interval (0, 1]."""


class FormatError(ValueError):
    """Structural file problem: bad header or wrong column count."""


class FieldError(ValueError):
    """A field failed to parse; carries the 1-based row number."""

    def __init__(self, row: int, field: str, message: str):
        super().__init__(f"row {row}, field {field}: {message}")
        self.row = row
        self.field = field


class DuplicateEntryId(ValueError):
    pass


class TableMismatch(ValueError):
    """A row's table differs from the expected table passed to the loader."""


class TableId(enum.Enum):
    """The three base-HEP solution types."""

    SCENARIO_FAMILIARITY = "SF"
    INFO_AVAILABILITY_RELIABILITY = "IAR"
    TASK_COMPLEXITY = "TC"

    @property
    def code(self) -> str:
        return self.value

    @property
    def label(self) -> str:
        return _TABLE_LABELS[self]

    @classmethod
    def parse(cls, text: str) -> "TableId":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise FormatError(f"unknown table code {text!r}; expected SF, IAR or TC") from None


_TABLE_LABELS = {
    TableId.SCENARIO_FAMILIARITY: "scenario familiarity",
    TableId.INFO_AVAILABILITY_RELIABILITY: "information availability and reliability",
    TableId.TASK_COMPLEXITY: "task complexity",
}


class CfmCode(enum.Enum):
    """Failure modes of the five macrocognitive functions."""

    D = "D"
    U = "U"
    DM = "DM"
    E = "E"
    T = "T"


# Fixed rendering order for failure-mode sets (D|U, never U|D).
CFM_ORDER = (CfmCode.D, CfmCode.U, CfmCode.DM, CfmCode.E, CfmCode.T)


def parse_cfm_code(text: str) -> CfmCode:
    try:
        return CfmCode(text.strip().upper())
    except ValueError:
        raise MalformedPifCode(f"unknown failure-mode code {text!r}") from None


def parse_cfm_set(text: str) -> frozenset[CfmCode]:
    """Parse a pipe-separated failure-mode set, e.g. ``D|U``."""
    parts = [p for p in text.split("|") if p.strip()]
    if not parts:
        raise ValueError("empty failure-mode set")
    return frozenset(parse_cfm_code(p) for p in parts)


def render_cfm_set(cfms: frozenset[CfmCode]) -> str:
    return "|".join(code.value for code in CFM_ORDER if code in cfms)


_PIF_RE = re.compile(r"^([A-Z]+)(\d+)(?:\.(\d+))?$")


@dataclass(frozen=True)
class PifCode:
    """A performance influencing factor code such as SF0, SF4 or SF3.3."""

    prefix: str
    major: int
    minor: Optional[int] = None

    def render(self) -> str:
        if self.minor is None:
            return f"{self.prefix}{self.major}"
        return f"{self.prefix}{self.major}.{self.minor}"

    def matches(self, other: "PifCode", prefix_major_only: bool = False) -> bool:
        """Exact equality, or prefix+major equality when the flag is set."""
        if prefix_major_only:
            return self.prefix == other.prefix and self.major == other.major
        return self == other

    def __str__(self) -> str:
        return self.render()


def parse_pif_code(text: str) -> PifCode:
    m = _PIF_RE.match(text.strip())
    if m is None:
        raise MalformedPifCode(f"not a PIF code: {text!r}")
    prefix, major, minor = m.groups()
    return PifCode(prefix, int(major), int(minor) if minor is not None else None)


# Optional sign, decimal or scientific notation. Signed values parse so the
# range check can report RateOutOfRange instead of MalformedRate.
_RATE_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][+-]?\d+)?$")


def parse_error_rate(text: str) -> float:
    """Parse an error rate, accepting plain decimals and scientific notation."""
    stripped = text.strip()
    if not _RATE_RE.match(stripped):
        raise MalformedRate(f"not a rate: {text!r}")
    value = float(stripped)
    if not 0.0 < value <= 1.0:
        raise RateOutOfRange(f"rate {value!r} outside (0, 1]")
    return value


def render_error_rate(value: float) -> str:
    """Canonical rate rendering: two-significant-digit scientific notation
    below 0.01, shortest plain decimal otherwise. Idempotent under
    parse/render, including values that round up across the 0.01 boundary.
    """
    if value >= 0.01:
        return repr(value)
    mantissa, _, exponent = f"{value:.1E}".partition("E")
    rendered = f"{mantissa}E{int(exponent)}"
    if float(rendered) >= 0.01:
        return repr(float(rendered))
    return rendered


@dataclass(frozen=True)
class IdTableEntry:
    """One row of an IDTABLE.

    ``cfms`` may hold several codes when the failure mode is ambiguous.
    Instances are not validated on construction; see :func:`validate_entry`.
    """

    entry_id: str
    table: TableId
    pif: PifCode
    cfms: frozenset[CfmCode]
    error_rate: float
    task: str
    error_measure: Optional[str]
    pif_measure: str
    other_pifs: Optional[str]
    uncertainty_note: Optional[str]
    reference_id: str

    def task_text(self) -> str:
        """The combined task-and-error-measure dimension text."""
        if self.error_measure:
            return f"{self.task} ({self.error_measure})"
        return self.task

    def other_pifs_text(self) -> str:
        """The combined other-PIFs-and-uncertainty dimension text."""
        parts = []
        if self.other_pifs:
            parts.append(self.other_pifs)
        if self.uncertainty_note:
            parts.append(f"({self.uncertainty_note})")
        return " ".join(parts)

    def dimension_text(self, dimension: str) -> str:
        """Entry-side text for one of the five attribute dimensions."""
        if dimension == "pif":
            return self.pif.render()
        if dimension == "cfm":
            return render_cfm_set(self.cfms)
        if dimension == "task_and_error_measure":
            return self.task_text()
        if dimension == "pif_measure":
            return self.pif_measure
        if dimension == "other_pifs_and_uncertainty":
            return self.other_pifs_text()
        raise KeyError(dimension)


def validate_entry(entry: IdTableEntry) -> list[str]:
    """Return one diagnostic per violated entry invariant; empty if valid."""
    diagnostics = []
    if not entry.entry_id:
        diagnostics.append("entry_id empty")
    if not entry.cfms:
        diagnostics.append("cfms empty")
    if not 0.0 < entry.error_rate <= 1.0:
        diagnostics.append("rate out of range")
    return diagnostics


HEADER_FIELDS = (
    "entry_id",
    "table",
    "pif",
    "cfms",
    "error_rate",
    "task",
    "error_measure",
    "pif_measure",
    "other_pifs",
    "uncertainty",
    "reference",
)
HEADER_LINE = ",".join(HEADER_FIELDS)

# Columns that are always double-quoted on output.
_QUOTED_FIELDS = frozenset({"task", "error_measure", "pif_measure", "other_pifs", "uncertainty"})
_BARE_FIELD_RE = re.compile(r'[",\r\n]')


class EntryStore:
    """Immutable, indexed collection of IDTABLE entries in file order."""

    def __init__(self, entries: Iterable[IdTableEntry]):
        self._entries = tuple(entries)
        self._by_id: dict[str, IdTableEntry] = {}
        self._by_table: dict[TableId, list[IdTableEntry]] = {}
        self._by_pif: dict[str, list[IdTableEntry]] = {}
        self._by_cfm: dict[CfmCode, list[IdTableEntry]] = {}
        for entry in self._entries:
            if entry.entry_id in self._by_id:
                raise DuplicateEntryId(f"duplicate entry_id {entry.entry_id!r}")
            self._by_id[entry.entry_id] = entry
            self._by_table.setdefault(entry.table, []).append(entry)
            self._by_pif.setdefault(entry.pif.render(), []).append(entry)
            for code in entry.cfms:
                self._by_cfm.setdefault(code, []).append(entry)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[IdTableEntry]:
        return iter(self._entries)

    @property
    def entries(self) -> tuple[IdTableEntry, ...]:
        return self._entries

    def get(self, entry_id: str) -> IdTableEntry:
        return self._by_id[entry_id]

    def __contains__(self, entry_id: str) -> bool:
        return entry_id in self._by_id

    def by_table(self, table: TableId) -> tuple[IdTableEntry, ...]:
        return tuple(self._by_table.get(table, ()))

    def by_pif(self, pif: PifCode | str) -> tuple[IdTableEntry, ...]:
        key = pif.render() if isinstance(pif, PifCode) else pif
        return tuple(self._by_pif.get(key, ()))

    def by_cfm(self, code: CfmCode) -> tuple[IdTableEntry, ...]:
        return tuple(self._by_cfm.get(code, ()))

    def tables(self) -> tuple[TableId, ...]:
        return tuple(t for t in TableId if t in self._by_table)


def merge_stores(stores: Iterable[EntryStore]) -> EntryStore:
    """Combine several stores; duplicate ids across stores are rejected."""
    entries: list[IdTableEntry] = []
    for store in stores:
        entries.extend(store.entries)
    return EntryStore(entries)


def _split_csv_row(line: str, row: int) -> list[str]:
    """Split one physical CSV line into fields, honoring double quotes."""
    fields: list[str] = []
    buf: list[str] = []
    i = 0
    in_quotes = False
    n = len(line)
    while i < n:
        ch = line[i]
        if in_quotes:
            if ch == '"':
                if i + 1 < n and line[i + 1] == '"':
                    buf.append('"')
                    i += 2
                    continue
                in_quotes = False
                i += 1
                continue
            buf.append(ch)
            i += 1
        else:
            if ch == '"':
                in_quotes = True
                i += 1
            elif ch == ",":
                fields.append("".join(buf))
                buf = []
                i += 1
            else:
                buf.append(ch)
                i += 1
    if in_quotes:
        raise FormatError(f"row {row}: unterminated quote")
    fields.append("".join(buf))
    return fields


def _read_lines(source: IO[bytes] | IO[str] | str) -> list[str]:
    if isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = text.split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def load_idtable(source: IO[bytes] | IO[str] | str, expected_table: Optional[TableId] = None) -> EntryStore:
    """Load and validate an IDTABLE file.

    *source* is a byte or text stream, or the file content itself. Row
    numbers in errors are 1-based physical lines (the header is row 1).
    """
    lines = _read_lines(source)
    if not lines:
        raise FormatError("empty file: missing header")
    if lines[0] != HEADER_LINE:
        raise FormatError(f"bad header: expected {HEADER_LINE!r}, got {lines[0]!r}")

    entries: list[IdTableEntry] = []
    seen: dict[str, int] = {}
    for offset, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        fields = _split_csv_row(line, offset)
        if len(fields) != len(HEADER_FIELDS):
            raise FormatError(
                f"row {offset}: expected {len(HEADER_FIELDS)} fields, got {len(fields)}"
            )
        record = dict(zip(HEADER_FIELDS, fields))

        entry_id = record["entry_id"].strip()
        if not entry_id:
            raise FieldError(offset, "entry_id", "must be non-empty")
        if entry_id in seen:
            raise DuplicateEntryId(
                f"row {offset}: entry_id {entry_id!r} already used at row {seen[entry_id]}"
            )
        seen[entry_id] = offset

        try:
            table = TableId.parse(record["table"])
        except FormatError as exc:
            raise FieldError(offset, "table", str(exc)) from None
        if expected_table is not None and table is not expected_table:
            raise TableMismatch(
                f"row {offset}: table {table.code} does not match expected {expected_table.code}"
            )
        try:
            pif = parse_pif_code(record["pif"])
        except MalformedPifCode as exc:
            raise FieldError(offset, "pif", str(exc)) from None
        try:
            cfms = parse_cfm_set(record["cfms"])
        except ValueError as exc:
            raise FieldError(offset, "cfms", str(exc)) from None
        try:
            rate = parse_error_rate(record["error_rate"])
        except (MalformedRate, RateOutOfRange) as exc:
            raise FieldError(offset, "error_rate", str(exc)) from None
        reference = record["reference"].strip()
        if not reference:
            raise FieldError(offset, "reference", "must be non-empty")

        entries.append(
            IdTableEntry(
                entry_id=entry_id,
                table=table,
                pif=pif,
                cfms=cfms,
                error_rate=rate,
                task=record["task"],
                error_measure=record["error_measure"] or None,
                pif_measure=record["pif_measure"],
                other_pifs=record["other_pifs"] or None,
                uncertainty_note=record["uncertainty"] or None,
                reference_id=reference,
            )
        )
    return EntryStore(entries)


def _render_field(name: str, value: str) -> str:
    if name in _QUOTED_FIELDS:
        return '"' + value.replace('"', '""') + '"'
    if _BARE_FIELD_RE.search(value):
        raise ValueError(f"field {name} may not contain quotes, commas or newlines: {value!r}")
    return value


def dump_idtable(store: EntryStore) -> str:
    """Serialize a store back to canonical IDTABLE text.

    Canonical form: header line, entries in store order, fixed failure-mode
    ordering, canonical rate rendering, free-text columns always quoted and
    absent optional columns empty. dump(load(dump(load(f)))) is a fixpoint.
    """
    out = [HEADER_LINE]
    for entry in store:
        row = {
            "entry_id": _render_field("entry_id", entry.entry_id),
            "table": entry.table.code,
            "pif": entry.pif.render(),
            "cfms": render_cfm_set(entry.cfms),
            "error_rate": render_error_rate(entry.error_rate),
            "task": _render_field("task", entry.task),
            "error_measure": _render_field("error_measure", entry.error_measure) if entry.error_measure else "",
            "pif_measure": _render_field("pif_measure", entry.pif_measure),
            "other_pifs": _render_field("other_pifs", entry.other_pifs) if entry.other_pifs else "",
            "uncertainty": _render_field("uncertainty", entry.uncertainty_note) if entry.uncertainty_note else "",
            "reference": _render_field("reference", entry.reference_id),
        }
        out.append(",".join(row[name] for name in HEADER_FIELDS))
    return "\n".join(out) + "\n"


def load_idtable_path(path: str, expected_table: Optional[TableId] = None) -> EntryStore:
    with io.open(path, "rb") as fh:
        return load_idtable(fh, expected_table)
