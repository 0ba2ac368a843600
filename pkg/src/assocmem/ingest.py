"""From plain text to co-occurrence events and graph updates.

Documents are split into sentences, entities are found by whole-word
lexicon matching, and every pair of distinct entities sharing a sentence
yields one event per document. Each ingested document is exactly one
dynamics step.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, NamedTuple

from .dynamics import DynamicsParams, step_graph
from .errors import EventLogError, InvalidArgument
from .graph_store import EntityGraph, PassageRef

_WORD = re.compile(r"[^\W_]+")

ABBREVIATIONS = frozenset(
    """
    dr mr mrs ms prof sr jr st vs etc approx e.g i.e cf al fig figs no nos vol
    ca inc ltd co corp dept est u.s u.k jan feb mar apr jun jul aug sep sept oct nov dec
    """.split()
)

DIRECTIONS = ("symmetric", "textual")


def canonicalize(label: str) -> str:
    return " ".join(label.lower().split())


def tokenize(text: str) -> list[str]:
    return [m.group().casefold() for m in _WORD.finditer(text)]


# -- lexicon ------------------------------------------------------------------


@dataclass
class EntityLexicon:
    entries: list[tuple[str, list[str]]]
    _alias_index: dict[tuple[str, ...], str] = field(init=False, repr=False)

    def __post_init__(self):
        self.entries = [(canonicalize(label), list(aliases)) for label, aliases in self.entries]
        labels = [label for label, _ in self.entries]
        if len(set(labels)) != len(labels):
            raise InvalidArgument("canonical labels must be unique")
        index: dict[tuple[str, ...], str] = {}
        for label, aliases in self.entries:
            if not label:
                raise InvalidArgument("empty canonical label")
            for alias in aliases:
                words = tuple(tokenize(alias))
                if not words:
                    raise InvalidArgument(f"alias {alias!r} of {label!r} has no words")
                if words in index and index[words] != label:
                    raise InvalidArgument(
                        f"alias {alias!r} is shared by {index[words]!r} and {label!r}"
                    )
                index[words] = label
        self._alias_index = index

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.entries]

    @property
    def max_alias_len(self) -> int:
        return max((len(k) for k in self._alias_index), default=0)

    @classmethod
    def parse(cls, text: str) -> "EntityLexicon":
        """Parse ``label: alias | alias`` lines; ``#`` starts a comment.

        A label with no aliases matches itself.
        """
        entries = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            label, sep, rest = line.partition(":")
            if not sep or not label.strip():
                raise InvalidArgument(f"lexicon line {lineno}: expected 'label: alias | ...'")
            aliases = [a.strip() for a in rest.split("|") if a.strip()]
            entries.append((label.strip(), aliases or [label.strip()]))
        return cls(entries)

    @classmethod
    def load(cls, path) -> "EntityLexicon":
        return cls.parse(Path(path).read_text(encoding="utf-8"))


def default_lexicon() -> EntityLexicon:
    from .corpus import data_path

    return EntityLexicon.load(data_path("covid_lexicon.txt"))


# -- sentences and entities -----------------------------------------------------

_BOUNDARY = re.compile(r"[.!?]+[\"')\]]*(?=\s+[\"'(\[]?[A-Z]|\s*$)")


def _ends_with_abbreviation(chunk: str) -> bool:
    m = re.search(r"(\S+)\.$", chunk)
    if m is None:
        return False
    word = m.group(1).lstrip("(\"'").lower()
    return word in ABBREVIATIONS or re.fullmatch(r"[a-z]", word) is not None


def segment_sentences(text: str) -> list[str]:
    """Split plain text into sentences.

    Breaks after ``.``, ``!`` or ``?`` (plus closing quotes/brackets) when the
    next non-space character is an uppercase letter or the text ends. A
    period after a known abbreviation or a single letter never breaks.
    Line breaks always end a sentence.
    """
    sentences = []
    for line in text.splitlines():
        start = 0
        for m in _BOUNDARY.finditer(line):
            chunk = line[start : m.end()]
            if m.group().startswith(".") and len(m.group()) == 1 and _ends_with_abbreviation(chunk):
                continue
            if chunk.strip():
                sentences.append(chunk.strip())
            start = m.end()
        tail = line[start:].strip()
        if tail:
            sentences.append(tail)
    return sentences


class _Span(NamedTuple):
    start: int
    end: int
    label: str


def _match_spans(sentence: str, lexicon: EntityLexicon) -> list[_Span]:
    tokens = tokenize(sentence)
    index = lexicon._alias_index
    found = []
    for n in range(min(lexicon.max_alias_len, len(tokens)), 0, -1):
        for i in range(len(tokens) - n + 1):
            label = index.get(tuple(tokens[i : i + n]))
            if label is not None:
                found.append(_Span(i, i + n, label))
    # longest alias first, then leftmost; overlaps go to the earlier pick
    taken = [False] * len(tokens)
    spans = []
    for span in found:
        if any(taken[span.start : span.end]):
            continue
        for k in range(span.start, span.end):
            taken[k] = True
        spans.append(span)
    spans.sort()
    return spans


def match_entities(sentence: str, lexicon: EntityLexicon) -> set[str]:
    return {span.label for span in _match_spans(sentence, lexicon)}


# -- events ---------------------------------------------------------------------


class CooccurrenceEvent(NamedTuple):
    src: str
    dst: str
    doc_index: int


@dataclass
class Extraction:
    events: set[CooccurrenceEvent]
    passages: dict[str, list[PassageRef]]
    sentences: list[str]

    @property
    def pair_count(self) -> int:
        return len({frozenset((e.src, e.dst)) for e in self.events})


def extract_events(
    text: str, doc_index: int, lexicon: EntityLexicon, direction: str = "symmetric"
) -> Extraction:
    """Co-occurrence events and per-entity passages for one document.

    ``direction="symmetric"`` emits A->B and B->A for every pair sharing a
    sentence; ``"textual"`` emits only first-mentioned -> later-mentioned.
    """
    if direction not in DIRECTIONS:
        raise InvalidArgument(f"direction must be one of {DIRECTIONS}")
    sentences = segment_sentences(text)
    events: set[CooccurrenceEvent] = set()
    passages: dict[str, list[PassageRef]] = {}
    for sent_index, sentence in enumerate(sentences):
        order: list[str] = []
        for span in _match_spans(sentence, lexicon):
            if span.label not in order:
                order.append(span.label)
        for label in order:
            passages.setdefault(label, []).append(PassageRef(doc_index, sent_index))
        for a, b in combinations(order, 2):
            events.add(CooccurrenceEvent(a, b, doc_index))
            if direction == "symmetric":
                events.add(CooccurrenceEvent(b, a, doc_index))
    return Extraction(events, passages, sentences)


@dataclass
class IngestReport:
    doc_index: int
    sentence_count: int
    event_count: int
    new_node_count: int
    new_edge_count: int
    events: list[CooccurrenceEvent] = field(default_factory=list, repr=False)

    def describe(self) -> str:
        return (
            f"doc {self.doc_index}: {self.sentence_count} sentences, "
            f"{self.event_count} pair events, {self.new_node_count} new nodes, "
            f"{self.new_edge_count} new edges"
        )


def ingest_document(
    graph: EntityGraph,
    text: str,
    lexicon: EntityLexicon,
    params: DynamicsParams | None = None,
    doc_index: int | None = None,
    direction: str = "symmetric",
) -> IngestReport:
    """Apply one document to the graph: new nodes, passages, one dynamics step."""
    params = params or DynamicsParams()
    if doc_index is None:
        doc_index = graph.doc_clock
    elif doc_index != graph.doc_clock:
        raise InvalidArgument(
            f"document {doc_index} is out of stream order; graph expects {graph.doc_clock}"
        )
    ext = extract_events(text, doc_index, lexicon, direction)

    nodes_before = len(graph)
    for label in sorted(ext.passages):
        node_id = graph.ensure_node(label)
        for ref in ext.passages[label]:
            graph.record_passage(node_id, ref)

    edge_ids = {(graph.label_index[e.src], graph.label_index[e.dst]) for e in ext.events}
    new_edges = sum(1 for s, d in edge_ids if not graph.has_edge(s, d))
    step_graph(graph, params, edge_ids)
    return IngestReport(
        doc_index=doc_index,
        sentence_count=len(ext.sentences),
        event_count=ext.pair_count,
        new_node_count=len(graph) - nodes_before,
        new_edge_count=new_edges,
        events=sorted(ext.events),
    )


def ingest_stream(
    graph: EntityGraph,
    texts: Iterable[str],
    lexicon: EntityLexicon,
    params: DynamicsParams | None = None,
    direction: str = "symmetric",
) -> list[IngestReport]:
    return [ingest_document(graph, t, lexicon, params, direction=direction) for t in texts]


# -- event log --------------------------------------------------------------------

EVENT_LOG_HEADER = "doc_index,src_label,dst_label"


def format_event_log(events: Iterable[CooccurrenceEvent]) -> str:
    rows = sorted(events, key=lambda e: (e.doc_index, e.src, e.dst))
    lines = [EVENT_LOG_HEADER] + [f"{e.doc_index},{e.src},{e.dst}" for e in rows]
    return "\n".join(lines) + "\n"


def parse_event_log(text: str) -> list[CooccurrenceEvent]:
    events = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or (lineno == 1 and line.strip() == EVENT_LOG_HEADER):
            continue
        parts = line.split(",")
        if len(parts) != 3 or not re.fullmatch(r"\d+", parts[0].strip()):
            raise EventLogError(f"malformed event log row {line!r}", lineno)
        src, dst = parts[1].strip(), parts[2].strip()
        if not src or not dst or src == dst:
            raise EventLogError(f"bad labels in row {line!r}", lineno)
        events.append(CooccurrenceEvent(src, dst, int(parts[0])))
    return events
