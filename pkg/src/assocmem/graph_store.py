"""Directed entity graph holding a (w_fast, w_slow) state on every edge.

The graph is the whole memory: nodes carry the passages they were seen in,
edges carry the two coupled weights. A missing edge means the zero state,
so lookups never create storage.

Snapshots are a line-oriented text format::

    MEMINI-SNAPSHOT v1
    D <doc_clock>
    N <id> <label> <passage-count> <doc,sent> ...
    E <src> <dst> <w_fast> <w_slow>

Nodes are written by id and edges by (src, dst); reals use 17 significant
digits so that reading a snapshot back gives bit-identical floats.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from typing import Iterator, NamedTuple
from urllib.parse import unquote

from .errors import InvalidArgument, NotFound, SnapshotFormatError
from .util import atomic_write_bytes, fmt_real

SNAPSHOT_HEADER = "MEMINI-SNAPSHOT v1"
_HEADER_PREFIX = "MEMINI-SNAPSHOT "
_WS = re.compile(r"[%\s]")


class PassageRef(NamedTuple):
    doc_index: int
    sentence_index: int


@dataclass(frozen=True, slots=True)
class EdgeState:
    w_fast: float = 0.0
    w_slow: float = 0.0

    def is_zero(self) -> bool:
        return self.w_fast == 0.0 and self.w_slow == 0.0


ZERO = EdgeState(0.0, 0.0)


@dataclass
class Node:
    label: str
    passages: list[PassageRef]


class EntityGraph:
    """The memory state G(t): labelled nodes plus directed weighted edges."""

    def __init__(self):
        self.label_index: dict[str, int] = {}
        self.nodes: list[Node] = []
        self.edges: dict[int, dict[int, EdgeState]] = {}
        self.doc_clock = 0
        # (node, doc, sent) membership for O(1) passage dedup
        self._passage_keys: list[set[PassageRef]] = []

    def __len__(self):
        return len(self.nodes)

    def __eq__(self, other):
        if not isinstance(other, EntityGraph):
            return NotImplemented
        return (
            self.doc_clock == other.doc_clock
            and self.nodes == other.nodes
            and self.label_index == other.label_index
            and self._edge_items() == other._edge_items()
        )

    def _edge_items(self):
        return sorted(self.iter_edges())

    # -- nodes ---------------------------------------------------------------

    def ensure_node(self, label: str) -> int:
        if not label:
            raise InvalidArgument("node label must be non-empty")
        node_id = self.label_index.get(label)
        if node_id is None:
            node_id = len(self.nodes)
            self.label_index[label] = node_id
            self.nodes.append(Node(label, []))
            self._passage_keys.append(set())
        return node_id

    def node_id(self, label: str) -> int | None:
        return self.label_index.get(label)

    def label(self, node_id: int) -> str:
        self._check_node(node_id)
        return self.nodes[node_id].label

    def has_node(self, node_id: int) -> bool:
        return 0 <= node_id < len(self.nodes)

    def _check_node(self, node_id):
        if not isinstance(node_id, int) or not self.has_node(node_id):
            raise NotFound(f"unknown node id {node_id!r}")

    def record_passage(self, node_id: int, passage: PassageRef) -> None:
        self._check_node(node_id)
        passage = PassageRef(*passage)
        keys = self._passage_keys[node_id]
        if passage in keys:
            return
        keys.add(passage)
        self.nodes[node_id].passages.append(passage)

    def passages(self, node_id: int) -> list[PassageRef]:
        self._check_node(node_id)
        return list(self.nodes[node_id].passages)

    # -- edges ---------------------------------------------------------------

    def edge_state(self, src: int, dst: int) -> EdgeState:
        if src == dst:
            return ZERO
        return self.edges.get(src, {}).get(dst, ZERO)

    def has_edge(self, src: int, dst: int) -> bool:
        return dst in self.edges.get(src, ())

    def set_edge(self, src: int, dst: int, state: EdgeState) -> None:
        """Store an edge state directly; mainly for tests and snapshot loading."""
        self._check_node(src)
        self._check_node(dst)
        if src == dst:
            raise InvalidArgument("self-loop edges are not allowed")
        if not (math.isfinite(state.w_fast) and math.isfinite(state.w_slow)):
            raise InvalidArgument("edge weights must be finite")
        if state.w_fast < 0 or state.w_slow < 0:
            raise InvalidArgument("edge weights must be non-negative")
        self.edges.setdefault(src, {})[dst] = state

    def delete_edge(self, src: int, dst: int) -> None:
        out = self.edges.get(src)
        if out is None or dst not in out:
            return
        del out[dst]
        if not out:
            del self.edges[src]

    def out_edges(self, src: int) -> dict[int, EdgeState]:
        return self.edges.get(src, {})

    def out_degree(self, src: int) -> int:
        return len(self.edges.get(src, ()))

    def iter_edges(self) -> Iterator[tuple[int, int, EdgeState]]:
        for src in sorted(self.edges):
            out = self.edges[src]
            for dst in sorted(out):
                yield src, dst, out[dst]

    @property
    def edge_count(self) -> int:
        return sum(len(out) for out in self.edges.values())

    def fingerprint(self) -> str:
        return hashlib.sha256(snapshot_write(self)).hexdigest()


# -- snapshot -----------------------------------------------------------------


def _encode_label(label: str) -> str:
    return _WS.sub(lambda m: "".join(f"%{b:02X}" for b in m.group().encode("utf-8")), label)


def snapshot_write(graph: EntityGraph) -> bytes:
    lines = [SNAPSHOT_HEADER, f"D {graph.doc_clock}"]
    for node_id, node in enumerate(graph.nodes):
        refs = " ".join(f"{p.doc_index},{p.sentence_index}" for p in node.passages)
        line = f"N {node_id} {_encode_label(node.label)} {len(node.passages)}"
        lines.append(f"{line} {refs}" if refs else line)
    for src, dst, st in graph.iter_edges():
        lines.append(f"E {src} {dst} {fmt_real(st.w_fast)} {fmt_real(st.w_slow)}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _parse_int(tok, lineno, what):
    if not re.fullmatch(r"\d+", tok):
        raise SnapshotFormatError(f"bad {what} {tok!r}", lineno)
    return int(tok)


def _parse_real(tok, lineno):
    try:
        value = float(tok)
    except ValueError:
        raise SnapshotFormatError(f"bad real {tok!r}", lineno) from None
    if not math.isfinite(value):
        raise SnapshotFormatError(f"non-finite real {tok!r}", lineno)
    if value < 0:
        raise SnapshotFormatError(f"negative weight {tok!r}", lineno)
    return value


def snapshot_read(data: bytes | str) -> EntityGraph:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SnapshotFormatError(f"not UTF-8: {exc}", 1) from None
    lines = data.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SnapshotFormatError("empty snapshot", 1)
    header = lines[0]
    if not header.startswith(_HEADER_PREFIX):
        raise SnapshotFormatError(f"malformed header {header!r}", 1)
    if header != SNAPSHOT_HEADER:
        raise SnapshotFormatError(f"unknown snapshot version {header[len(_HEADER_PREFIX):]!r}", 1)

    graph = EntityGraph()
    seen_clock = False
    pending_edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(" ")
        kind = fields[0]
        if kind == "D":
            if seen_clock or len(fields) != 2 or graph.nodes or pending_edges:
                raise SnapshotFormatError("misplaced or malformed D line", lineno)
            graph.doc_clock = _parse_int(fields[1], lineno, "doc clock")
            seen_clock = True
        elif kind == "N":
            if not seen_clock or pending_edges or len(fields) < 4:
                raise SnapshotFormatError("misplaced or malformed N line", lineno)
            node_id = _parse_int(fields[1], lineno, "node id")
            if node_id != len(graph.nodes):
                raise SnapshotFormatError(f"node id {node_id} out of sequence", lineno)
            label = unquote(fields[2])
            if not label or label in graph.label_index:
                raise SnapshotFormatError(f"empty or duplicate label {label!r}", lineno)
            count = _parse_int(fields[3], lineno, "passage count")
            refs = fields[4:]
            if len(refs) != count:
                raise SnapshotFormatError(f"expected {count} passages, got {len(refs)}", lineno)
            graph.ensure_node(label)
            for ref in refs:
                m = re.fullmatch(r"(\d+),(\d+)", ref)
                if m is None:
                    raise SnapshotFormatError(f"bad passage ref {ref!r}", lineno)
                p = PassageRef(int(m.group(1)), int(m.group(2)))
                if p.doc_index >= graph.doc_clock:
                    raise SnapshotFormatError(f"passage {ref} is beyond doc clock", lineno)
                graph.record_passage(node_id, p)
        elif kind == "E":
            if not seen_clock or len(fields) != 5:
                raise SnapshotFormatError("misplaced or malformed E line", lineno)
            src = _parse_int(fields[1], lineno, "node id")
            dst = _parse_int(fields[2], lineno, "node id")
            for n in (src, dst):
                if not graph.has_node(n):
                    raise SnapshotFormatError(f"dangling node id {n}", lineno)
            if src == dst:
                raise SnapshotFormatError("self-loop edge", lineno)
            if graph.has_edge(src, dst):
                raise SnapshotFormatError(f"duplicate edge {src}->{dst}", lineno)
            state = EdgeState(_parse_real(fields[3], lineno), _parse_real(fields[4], lineno))
            graph.set_edge(src, dst, state)
            pending_edges.append((src, dst))
        else:
            raise SnapshotFormatError(f"unknown record type {kind!r}", lineno)
    if not seen_clock:
        raise SnapshotFormatError("missing D line", len(lines) + 1)
    return graph


def save_snapshot(graph: EntityGraph, path) -> None:
    atomic_write_bytes(path, snapshot_write(graph))


def load_snapshot(path) -> EntityGraph:
    with open(path, "rb") as fh:
        return snapshot_read(fh.read())
