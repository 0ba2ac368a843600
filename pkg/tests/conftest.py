import json
import os
from pathlib import Path

import numpy as np
import pytest

from assocmem.corpus import load_stream
from assocmem.dynamics import DynamicsParams
from assocmem.graph_store import EdgeState, EntityGraph
from assocmem.ingest import CooccurrenceEvent, default_lexicon, ingest_document

DATA = Path(__file__).parent / "data"
UPDATE_GOLDEN = os.environ.get("UPDATE_GOLDEN") == "1"

ACCEPTANCE_RESULTS = []


def golden(name, actual):
    """Compare ``actual`` (JSON-serialisable) with tests/data/<name>.

    With UPDATE_GOLDEN=1 the file is (re)written instead.
    """
    path = DATA / name
    if UPDATE_GOLDEN:
        path.write_text(json.dumps(actual, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    elif not path.exists():
        pytest.fail(f"golden file {path} missing; run with UPDATE_GOLDEN=1")
    expected = json.loads(path.read_text(encoding="utf-8"))
    assert actual == expected


@pytest.fixture(scope="session")
def params():
    return DynamicsParams()


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture(scope="session")
def fixture_docs():
    return load_stream(mode="fixture")


def ingest_all(docs, lexicon, params=None, upto=None, direction="symmetric"):
    graph = EntityGraph()
    events = []
    for doc in docs[:upto]:
        report = ingest_document(graph, doc.plain_text, lexicon, params, direction=direction)
        events.extend(report.events)
    return graph, events


@pytest.fixture(scope="session")
def fixture_run(fixture_docs, lexicon):
    return ingest_all(fixture_docs, lexicon)


def synthetic_event_log():
    """Directed event log exercising all four groups plus exclusions.

    68 pairs and 124 pair events over 13 documents: 5 repeated-old pairs on
    steps 5-7, 25 few-old (18 single, 7 double), 8 repeated-recent with 37
    events, 13 single recent events (4 at 10, 5 at 11, 4 at 12) and 17
    pairs whose last event is at 8 or 9.
    """
    patterns = []
    patterns += [(5, 6, 7)] * 5
    patterns += [(i % 8,) for i in range(18)]
    patterns += [(0, 3), (1, 4), (2, 5), (3, 6), (4, 7), (1, 2), (5, 7)]
    patterns += [(8, 9, 10, 11, 12)] * 5 + [(9, 10, 11, 12)] * 3
    patterns += [(10,)] * 4 + [(11,)] * 5 + [(12,)] * 4
    patterns += [(6, 8), (7, 9), (2, 8), (3, 9), (5, 9), (0, 8), (4, 9), (1, 8), (8, 9), (6, 9)]
    patterns += [(8,)] * 4 + [(9,)] * 3
    events = []
    for k, steps in enumerate(patterns):
        a, b = f"e{k:02d}a", f"e{k:02d}b"
        for t in steps:
            events.append(CooccurrenceEvent(a, b, t))
            events.append(CooccurrenceEvent(b, a, t))
    return events


@pytest.fixture
def synthetic_events():
    return synthetic_event_log()


def random_graph(rng, max_nodes=8, max_edges=16):
    """Random labelled graph; some w_fast are exactly zero to exercise degree counting."""
    n = int(rng.integers(1, max_nodes + 1))
    graph = EntityGraph()
    labels = [f"n{k}" for k in rng.permutation(n)]
    for label in labels:
        graph.ensure_node(label)
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    m = min(len(pairs), int(rng.integers(0, max_edges + 1)))
    for idx in rng.choice(len(pairs), size=m, replace=False) if m else []:
        i, j = pairs[idx]
        wf = 0.0 if rng.random() < 0.1 else float(rng.uniform(0, 1.5))
        graph.set_edge(i, j, EdgeState(wf, float(rng.uniform(0, 1))))
    return graph


def dense_activation_oracle(graph, seeds, decay, spread, iterations):
    """Dense matrix iteration u <- ((1-d) I + S W^T D^-1) u, independent of spread_step."""
    n = len(graph)
    w = np.zeros((n, n))
    for src, dst, state in graph.iter_edges():
        w[src, dst] = state.w_fast
    deg = np.array([graph.out_degree(i) for i in range(n)], dtype=float)
    inv = np.divide(1.0, deg, out=np.zeros(n), where=deg > 0)
    m = (1 - decay) * np.eye(n) + spread * (w * inv[:, None]).T
    u = np.zeros(n)
    for i, value in seeds.items():
        u[i] = value
    for _ in range(iterations):
        u = m @ u
    return u


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for status, number, text in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[1]):
        terminalreporter.write_line(f"{status:<4} criterion {number:>2}: {text}")
