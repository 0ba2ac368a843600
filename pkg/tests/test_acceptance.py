"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -s`` to see the lines inline; they are
also collected into an "acceptance criteria" section of the terminal summary.
"""

import dataclasses
import functools
import os
from fractions import Fraction

import numpy as np
import pytest

from assocmem.analysis import (
    PairRecord,
    PatternGroup,
    ablation_table,
    build_pair_records,
    classify_pair,
)
from assocmem.cli import RunConfig, cmd_ingest
from assocmem.dynamics import DynamicsParams, effective_tau, integrate_pair, step_edge
from assocmem.errors import EmptySeedError
from assocmem.graph_store import EdgeState, EntityGraph, snapshot_write
from assocmem.retrieval import RetrievalParams, propagate, retrieve, retrieve_entities

from .conftest import ACCEPTANCE_RESULTS, dense_activation_oracle, golden, ingest_all, random_graph

TOL = 1e-12


def criterion(number, text):
    """Record PASS/FAIL for the wrapped test and print it."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except pytest.skip.Exception:
                ACCEPTANCE_RESULTS.append(("SKIP", number, text))
                print(f"\nSKIP criterion {number}: {text}")
                raise
            except BaseException:
                ACCEPTANCE_RESULTS.append(("FAIL", number, text))
                print(f"\nFAIL criterion {number}: {text}")
                raise
            ACCEPTANCE_RESULTS.append(("PASS", number, text))
            print(f"\nPASS criterion {number}: {text}")

        return run

    return wrap


def random_patterns(rng, count, horizon=13):
    return [sorted(int(t) for t in np.flatnonzero(rng.random(horizon) < rng.uniform(0.05, 0.6))) for _ in range(count)]


# 1 ---------------------------------------------------------------------------------------


@criterion(1, "single-edge regimes: episodic trace and consolidation")
def test_c01_single_edge_regimes():
    one = integrate_pair([0], 13)
    assert one[0].w_fast == 1.0
    assert one[2].w_fast < 0.15
    assert max(s.w_slow for s in one) <= 0.25

    rep = integrate_pair([5, 6, 7], 13)
    assert abs(rep[-1].w_fast - 0.10367) <= 1e-5
    for s in rep:
        if s.step > 8:
            assert s.w_slow > s.w_fast, s


# 2 ---------------------------------------------------------------------------------------


@criterion(2, "matched single-timescale ablation gap >= 30x")
def test_c02_matched_ablation_gap():
    assert effective_tau(DynamicsParams()) == pytest.approx(10 / 7, abs=1e-15)
    single = integrate_pair([5, 6, 7], 13, model="single")[-1].w_fast
    coupled = integrate_pair([5, 6, 7], 13)[-1].w_fast
    assert abs(single - 0.003378) <= 1e-6
    assert coupled / single >= 30


# 3 ---------------------------------------------------------------------------------------


@criterion(3, "C=0 with tau_fast=10/7 equals the single-timescale model")
def test_c03_effective_tau_equivalence():
    rng = np.random.default_rng(2024)
    uncoupled = DynamicsParams(tau_fast=10 / 7, coupling=0.0)
    for events in random_patterns(rng, 100):
        a = integrate_pair(events, 13, uncoupled)
        b = integrate_pair(events, 13, DynamicsParams(), "single")
        for x, y in zip(a, b):
            assert abs(x.w_fast - y.w_fast) <= TOL


# 4 ---------------------------------------------------------------------------------------


def drive(amplitudes, params):
    state, out = EdgeState(0.0, 0.0), []
    for a in amplitudes:
        if a > 0:
            state = step_edge(state, dataclasses.replace(params, input_amplitude=float(a)), True)
        else:
            state = step_edge(state, params, False)
        out.append(state)
    return out


@criterion(4, "superposition and time translation")
def test_c04_linearity_and_translation():
    rng = np.random.default_rng(11)
    p = DynamicsParams()
    for _ in range(100):
        mask1, mask2 = rng.random(13) < 0.4, rng.random(13) < 0.4
        i1 = np.where(mask1, rng.uniform(0.1, 2.0, 13), 0.0)
        i2 = np.where(mask2, rng.uniform(0.1, 2.0, 13), 0.0)
        s1, s2, s12 = drive(i1, p), drive(i2, p), drive(i1 + i2, p)
        for a, b, ab in zip(s1, s2, s12):
            assert abs(ab.w_fast - (a.w_fast + b.w_fast)) <= TOL
            assert abs(ab.w_slow - (a.w_slow + b.w_slow)) <= TOL

    for events in random_patterns(rng, 100):
        k = int(rng.integers(1, 20))
        base = integrate_pair(events, 13)[-1]
        moved = integrate_pair([e + k for e in events], 13 + k)[-1]
        assert abs(base.w_fast - moved.w_fast) <= TOL
        assert abs(base.w_slow - moved.w_slow) <= TOL


# 5 ---------------------------------------------------------------------------------------


@criterion(5, "classification of the four trajectory patterns and exclusion window")
def test_c05_classification():
    G = PatternGroup
    cases = {(0,): G.FEW_OLD, (5, 6, 7): G.REPEATED_OLD, (8, 9, 10): G.REPEATED_RECENT, (11,): G.FEW_RECENT}
    for steps, group in cases.items():
        assert classify_pair(PairRecord(("a", "b"), steps)) is group
    for steps in [(8,), (9,), (2, 8), (1, 4, 9), (8, 9)]:
        assert classify_pair(PairRecord(("a", "b"), steps)) is G.EXCLUDED


# 6 ---------------------------------------------------------------------------------------


@criterion(6, "uniform column is an exact rational mean")
def test_c06_uniform_exactness(synthetic_events):
    rng = np.random.default_rng(5)
    records = [PairRecord((f"p{i}", f"q{i}"), tuple(pat)) for i, pat in enumerate(random_patterns(rng, 80)) if pat]
    table = ablation_table(records, 13)
    for g, row in table.rows.items():
        members = [r for r in records if table.groups[r.pair] is g]
        expected = Fraction(sum(r.event_count for r in members), len(members)) if members else Fraction(0)
        assert isinstance(row.uniform, Fraction) and row.uniform == expected

    synth = ablation_table(build_pair_records(synthetic_events), 13)
    assert synth.rows[PatternGroup.REPEATED_OLD].uniform == 3
    assert synth.rows[PatternGroup.FEW_RECENT].uniform == 1
    assert f"{float(synth.rows[PatternGroup.REPEATED_OLD].uniform):.3f}" == "3.000"
    assert f"{float(synth.rows[PatternGroup.FEW_RECENT].uniform):.3f}" == "1.000"


# 7 ---------------------------------------------------------------------------------------


@criterion(7, "spreading activation matches a dense oracle; ties ordered by label")
def test_c07_retrieval_oracle():
    rng = np.random.default_rng(99)
    for _ in range(200):
        g = random_graph(rng, max_nodes=8, max_edges=16)
        k = int(rng.integers(1, len(g) + 1))
        seeds = {int(i): 1.0 for i in rng.choice(len(g), size=k, replace=False)}
        p = RetrievalParams(
            retention_decay=float(rng.uniform(0, 1)),
            spreading_factor=float(rng.uniform(0.05, 2.0)),
            iterations=int(rng.integers(1, 5)),
        )
        ours = propagate(g, seeds, p)
        ref = dense_activation_oracle(g, seeds, p.retention_decay, p.spreading_factor, p.iterations)
        assert max(abs(ours.get(i, 0.0) - ref[i]) for i in range(len(g))) <= TOL

    # a hub with equal-weight spokes inserted in two different orders
    rankings = []
    for order in (["d", "b", "c", "a"], ["a", "c", "b", "d"]):
        g = EntityGraph()
        hub = g.ensure_node("hub")
        for label in order:
            g.set_edge(hub, g.ensure_node(label), EdgeState(0.5, 0.0))
        rankings.append(retrieve_entities(g, {"hub"}, RetrievalParams(top_k=5)).ranking)
    assert rankings[0] == rankings[1] == ["hub", "a", "b", "c", "d"]


# 8 ---------------------------------------------------------------------------------------


@criterion(8, "retrieval leaves snapshot bytes unchanged over 100 queries")
def test_c08_read_only(fixture_run, lexicon):
    graph, _ = fixture_run
    before = snapshot_write(graph)
    rng = np.random.default_rng(8)
    vocab = [alias for label in lexicon.labels for alias in (label, label.upper())] + ["zebra", "the", "and"]
    for _ in range(100):
        words = rng.choice(vocab, size=int(rng.integers(1, 5)))
        params = RetrievalParams(iterations=int(rng.integers(1, 5)), top_k=int(rng.integers(1, 10)))
        try:
            retrieve(graph, " ".join(words), lexicon, params)
        except EmptySeedError:
            pass
    assert snapshot_write(graph) == before


# 9 ---------------------------------------------------------------------------------------


@criterion(9, "fixture-mode ingest is byte-identical across runs")
def test_c09_pipeline_determinism(tmp_path):
    outputs = []
    for run in ("one", "two"):
        d = tmp_path / run
        d.mkdir()
        cfg = RunConfig(snapshot=str(d / "memory.snapshot"), event_log=str(d / "events.csv"))
        with open(os.devnull, "w") as sink:
            assert cmd_ingest(cfg, out=sink) == 0
        outputs.append(((d / "memory.snapshot").read_bytes(), (d / "events.csv").read_bytes()))
    assert outputs[0] == outputs[1]
    assert outputs[0][0].startswith(b"MEMINI-SNAPSHOT v1\nD 13\n")


# 10 --------------------------------------------------------------------------------------


@criterion(10, "the same query ranks differently after document 7 and after document 12")
def test_c10_temporal_drift(fixture_docs, lexicon):
    query = "vaccine"
    rankings = {}
    for last_doc in (7, 12):
        graph, _ = ingest_all(fixture_docs, lexicon, upto=last_doc + 1)
        assert graph.doc_clock == last_doc + 1
        result = retrieve(graph, query, lexicon)
        rankings[f"after_doc_{last_doc}"] = [[h.label, round(h.activation, 12)] for h in result.hits]
    golden("drift_vaccine_golden.json", {"query": query, **rankings})
    labels = {k: [label for label, _ in v] for k, v in rankings.items()}
    assert labels["after_doc_7"] != labels["after_doc_12"]


# 11 --------------------------------------------------------------------------------------


@criterion(11, "optional live run against pinned revisions (non-gating)")
def test_c11_live_report(tmp_path):
    if os.environ.get("ASSOCMEM_LIVE") != "1":
        pytest.skip("set ASSOCMEM_LIVE=1 to fetch the pinned revisions over the network")
    from assocmem.corpus import load_stream
    from assocmem.ingest import default_lexicon

    cache = os.environ.get("ASSOCMEM_CACHE", str(tmp_path / "cache"))
    docs = load_stream(mode="live", cache_dir=cache)
    lexicon = default_lexicon()
    _, events = ingest_all(docs, lexicon)
    records = build_pair_records(events)
    table = ablation_table(records, len(docs))
    print()
    print(f"live corpus: {len(events) // 2} pair events over {len(records)} pairs")
    print(table.format_text())
    # only the qualitative ordering is checked; group means depend on the lexicon
    old = table.rows[PatternGroup.REPEATED_OLD]
    if old.count:
        assert old.coupled > old.single
