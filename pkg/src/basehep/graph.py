"""In-process typed graph over table entries, with deterministic text export.

The graph is rebuilt from the entry store on startup rather than persisted;
node ids are canonical (kind-prefixed) so two builds from the same store are
identical. Queries are attribute-membership traversals returning entries in
entry_id order, the global tie-break rule used everywhere in this package.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .idtable import (
    CfmCode,
    EntryStore,
    IdTableEntry,
    PifCode,
    TableId,
    render_cfm_set,
    render_error_rate,
)
from .textnorm import word_tokens

DEFAULT_CONTEXT_ENTRIES = 40
EMPTY_CONTEXT_TEXT = "No entries available for this table."


class NodeKind(enum.Enum):
    TABLE = "table"
    PIF = "pif"
    CFM = "cfm"
    ENTRY = "entry"
    REFERENCE = "ref"


class EdgeLabel(enum.Enum):
    IN_TABLE = "in_table"
    HAS_PIF = "has_pif"
    HAS_CFM = "has_cfm"
    CITES = "cites"


@dataclass(frozen=True)
class GraphNode:
    node_id: str
    kind: NodeKind
    payload: object


@dataclass(frozen=True)
class GraphEdge:
    from_id: str
    to_id: str
    label: EdgeLabel


def table_node_id(table: TableId) -> str:
    return f"table:{table.code}"


def pif_node_id(pif: PifCode) -> str:
    return f"pif:{pif.render()}"


def cfm_node_id(code: CfmCode) -> str:
    return f"cfm:{code.value}"


def entry_node_id(entry_id: str) -> str:
    return f"entry:{entry_id}"


def reference_node_id(reference_id: str) -> str:
    return f"ref:{reference_id}"


@dataclass(frozen=True)
class EntryFilter:
    """Attribute filter; all present fields must match. Empty matches all."""

    table: Optional[TableId] = None
    pif: Optional[PifCode] = None
    pif_prefix_major_only: bool = False
    cfm: Optional[CfmCode] = None
    task_contains: tuple[str, ...] = ()

    def matches(self, entry: IdTableEntry) -> bool:
        if self.table is not None and entry.table is not self.table:
            return False
        if self.pif is not None and not entry.pif.matches(self.pif, self.pif_prefix_major_only):
            return False
        if self.cfm is not None and self.cfm not in entry.cfms:
            return False
        if self.task_contains:
            tokens = set(word_tokens(entry.task_text()))
            if any(token.lower() not in tokens for token in self.task_contains):
                return False
        return True


class KnowledgeGraph:
    """Immutable typed graph built once over a validated store."""

    def __init__(self, store: EntryStore, nodes: dict[str, GraphNode], edges: tuple[GraphEdge, ...]):
        self._store = store
        self._nodes = nodes
        self._edges = edges

    @property
    def store(self) -> EntryStore:
        return self._store

    @property
    def nodes(self) -> dict[str, GraphNode]:
        return dict(self._nodes)

    @property
    def edges(self) -> tuple[GraphEdge, ...]:
        return self._edges

    def nodes_of_kind(self, kind: NodeKind) -> tuple[GraphNode, ...]:
        return tuple(n for n in self._nodes.values() if n.kind is kind)

    def entries_for_table(self, table: TableId) -> tuple[IdTableEntry, ...]:
        return tuple(sorted(self._store.by_table(table), key=lambda e: e.entry_id))

    def export_triples(self) -> str:
        """Debug dump: one ``from<TAB>label<TAB>to`` line, sorted."""
        lines = sorted(f"{e.from_id}\t{e.label.value}\t{e.to_id}" for e in self._edges)
        return "\n".join(lines) + ("\n" if lines else "")


def build_graph(store: EntryStore) -> KnowledgeGraph:
    """Build the typed graph; shared attribute values share one node."""
    nodes: dict[str, GraphNode] = {}
    edges: list[GraphEdge] = []

    def ensure(node_id: str, kind: NodeKind, payload: object) -> str:
        if node_id not in nodes:
            nodes[node_id] = GraphNode(node_id, kind, payload)
        return node_id

    for entry in store:
        eid = ensure(entry_node_id(entry.entry_id), NodeKind.ENTRY, entry)
        tid = ensure(table_node_id(entry.table), NodeKind.TABLE, entry.table)
        pid = ensure(pif_node_id(entry.pif), NodeKind.PIF, entry.pif)
        rid = ensure(reference_node_id(entry.reference_id), NodeKind.REFERENCE, entry.reference_id)
        edges.append(GraphEdge(eid, tid, EdgeLabel.IN_TABLE))
        edges.append(GraphEdge(eid, pid, EdgeLabel.HAS_PIF))
        for code in sorted(entry.cfms, key=lambda c: c.value):
            cid = ensure(cfm_node_id(code), NodeKind.CFM, code)
            edges.append(GraphEdge(eid, cid, EdgeLabel.HAS_CFM))
        edges.append(GraphEdge(eid, rid, EdgeLabel.CITES))
    return KnowledgeGraph(store, nodes, tuple(edges))


def query_entries(graph: KnowledgeGraph, entry_filter: EntryFilter) -> list[IdTableEntry]:
    """Entries satisfying all present filter fields, entry_id ascending."""
    matched = [e for e in graph.store if entry_filter.matches(e)]
    matched.sort(key=lambda e: e.entry_id)
    return matched


def _entry_context_block(entry: IdTableEntry) -> str:
    return (
        f"Entry {entry.entry_id}: PIF {entry.pif.render()}; "
        f"CFM {render_cfm_set(entry.cfms)}; "
        f"error rate {render_error_rate(entry.error_rate)}; "
        f'task "{entry.task_text()}"; '
        f'PIF measure "{entry.pif_measure}".'
    )


def serialize_graph_context(
    graph: KnowledgeGraph, table: TableId, max_entries: int = DEFAULT_CONTEXT_ENTRIES
) -> str:
    """Deterministic natural-language rendering of one table's entries.

    One block per entry in entry_id order, truncated to *max_entries*.
    Identical graphs yield byte-identical text.
    """
    if max_entries < 1:
        raise ValueError("max_entries must be >= 1")
    entries = graph.entries_for_table(table)[:max_entries]
    if not entries:
        return EMPTY_CONTEXT_TEXT
    header = f"Known error-rate entries for {table.label} ({table.code}):"
    return "\n".join([header] + [_entry_context_block(e) for e in entries])
