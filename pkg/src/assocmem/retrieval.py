"""Spreading-activation read path over the current edge weights.

Query entities seed activation 1; each iteration every node keeps
``(1 - decay)`` of its activation and receives, from each in-neighbour j,
``S * w_fast(j->i) / out_degree(j) * u_j``. Only w_fast is read, and the
graph is never modified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import EmptySeedError, InvalidArgument
from .graph_store import EntityGraph, PassageRef
from .ingest import EntityLexicon, match_entities

ActivationMap = dict[int, float]

MAX_PASSAGES_PER_NODE = 3


@dataclass(frozen=True)
class RetrievalParams:
    retention_decay: float = 0.2
    spreading_factor: float = 0.5
    iterations: int = 3
    top_k: int = 5

    def __post_init__(self):
        if not 0.0 <= self.retention_decay <= 1.0:
            raise InvalidArgument("retention_decay must lie in [0, 1]")
        if not self.spreading_factor > 0:
            raise InvalidArgument("spreading_factor must be > 0")
        if not (isinstance(self.iterations, int) and self.iterations >= 1):
            raise InvalidArgument("iterations must be an integer >= 1")
        if not (isinstance(self.top_k, int) and self.top_k >= 1):
            raise InvalidArgument("top_k must be an integer >= 1")


@dataclass
class RetrievalHit:
    label: str
    activation: float
    passages: list[PassageRef]


@dataclass
class RetrievalResult:
    hits: list[RetrievalHit]
    seeds: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    @property
    def ranking(self) -> list[str]:
        return [h.label for h in self.hits]


def seed_activations(graph: EntityGraph, query_entities: Iterable[str]) -> tuple[ActivationMap, list[str]]:
    """Activation 1 on every query entity that is a node; returns (map, skipped)."""
    entities = sorted(set(query_entities))
    activations: ActivationMap = {}
    skipped = []
    for label in entities:
        node_id = graph.node_id(label)
        if node_id is None:
            skipped.append(label)
        else:
            activations[node_id] = 1.0
    if not activations:
        raise EmptySeedError(
            "no query entity matches a node in memory" if entities else "query names no entities",
            skipped,
        )
    return activations, skipped


def spread_step(graph: EntityGraph, activations: ActivationMap, params: RetrievalParams) -> ActivationMap:
    keep = 1.0 - params.retention_decay
    nxt: ActivationMap = {i: keep * u for i, u in activations.items()}
    s = params.spreading_factor
    for j, u_j in activations.items():
        if u_j == 0.0:
            continue
        out = graph.out_edges(j)
        if not out:
            continue
        share = s * u_j / len(out)
        for i, state in out.items():
            nxt[i] = nxt.get(i, 0.0) + share * state.w_fast
    return nxt


def propagate(graph: EntityGraph, activations: ActivationMap, params: RetrievalParams) -> ActivationMap:
    for _ in range(params.iterations):
        activations = spread_step(graph, activations, params)
    return activations


def rank(graph: EntityGraph, activations: ActivationMap, top_k: int) -> list[tuple[str, float]]:
    scored = [(graph.label(i), u) for i, u in activations.items() if u > 0.0]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:top_k]


def _select_passages(refs: list[PassageRef]) -> list[PassageRef]:
    return sorted(refs, key=lambda p: (-p.doc_index, p.sentence_index))[:MAX_PASSAGES_PER_NODE]


def retrieve_entities(
    graph: EntityGraph, entities: Iterable[str], params: RetrievalParams | None = None
) -> RetrievalResult:
    params = params or RetrievalParams()
    seeds, skipped = seed_activations(graph, entities)
    final = propagate(graph, seeds, params)
    hits = [
        RetrievalHit(label, u, _select_passages(graph.passages(graph.node_id(label))))
        for label, u in rank(graph, final, params.top_k)
    ]
    return RetrievalResult(hits, sorted(graph.label(i) for i in seeds), skipped)


def retrieve(
    graph: EntityGraph, query_text: str, lexicon: EntityLexicon, params: RetrievalParams | None = None
) -> RetrievalResult:
    """Match query entities with the ingestion lexicon, spread, and rank."""
    return retrieve_entities(graph, match_entities(query_text, lexicon), params)
