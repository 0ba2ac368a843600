"""Command-line pipeline: fetch, ingest, query, ablate, trajectory, report.

Settings come from built-in defaults, then an optional flat ``key=value``
config file, then command-line flags (flags win). Exit status is 0 on
success, 1 on operational errors and 2 on user errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import corpus
from .analysis import (
    ClassificationThresholds,
    PairRecord,
    ablation_table,
    build_pair_records,
    export_trajectory,
)
from .dynamics import MODELS, DynamicsParams
from .errors import AssocMemError, EmptySeedError, InvalidArgument
from .graph_store import EntityGraph, load_snapshot, save_snapshot
from .ingest import DIRECTIONS, EntityLexicon, format_event_log, ingest_document, parse_event_log
from .retrieval import RetrievalParams, retrieve
from .util import atomic_write_bytes

log = logging.getLogger("assocmem")

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2

DEFAULT_PAIRS = (
    ("bat", "sars-cov-2"),
    ("mrna", "vaccine"),
    ("who", "long covid"),
    ("delta", "vaccine"),
)


class UsageError(AssocMemError):
    pass


# -- configuration --------------------------------------------------------------------

_DYN_KEYS = {f.name: f.type for f in dataclasses.fields(DynamicsParams)}
_RET_KEYS = {f.name: f.type for f in dataclasses.fields(RetrievalParams)}
_TH_KEYS = {f.name: f.type for f in dataclasses.fields(ClassificationThresholds)}

_STR_KEYS = ("manifest", "lexicon", "cache_dir", "snapshot", "event_log", "mode", "endpoint", "direction")
_INT_KEYS = ("stream_length",) + tuple(k for k, t in {**_RET_KEYS, **_TH_KEYS}.items() if t in (int, "int"))
_FLOAT_KEYS = tuple(_DYN_KEYS) + tuple(k for k, t in _RET_KEYS.items() if t in (float, "float"))
CONFIG_KEYS = _STR_KEYS + _INT_KEYS + _FLOAT_KEYS


@dataclass
class RunConfig:
    manifest: str | None = None
    lexicon: str | None = None
    cache_dir: str = "cache"
    snapshot: str = "memory.snapshot"
    event_log: str = "events.csv"
    mode: str = "fixture"
    endpoint: str = corpus.DEFAULT_ENDPOINT
    direction: str = "symmetric"
    stream_length: int | None = None
    dynamics: DynamicsParams = field(default_factory=DynamicsParams)
    retrieval: RetrievalParams = field(default_factory=RetrievalParams)
    thresholds: ClassificationThresholds | None = None

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        unknown = set(values) - set(CONFIG_KEYS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        conv = {}
        for key, raw in values.items():
            try:
                if key in _INT_KEYS:
                    conv[key] = int(raw)
                elif key in _FLOAT_KEYS:
                    conv[key] = float(raw)
                else:
                    conv[key] = str(raw)
            except ValueError:
                raise UsageError(f"bad value for {key}: {raw!r}") from None
        try:
            dyn = DynamicsParams(**{k: conv.pop(k) for k in list(conv) if k in _DYN_KEYS})
            ret = RetrievalParams(**{k: conv.pop(k) for k in list(conv) if k in _RET_KEYS})
            th_vals = {k: conv.pop(k) for k in list(conv) if k in _TH_KEYS}
            cfg = cls(dynamics=dyn, retrieval=ret, **conv)
            if th_vals:
                base = ClassificationThresholds.for_length(cfg.resolved_stream_length())
                cfg.thresholds = dataclasses.replace(base, **th_vals)
        except InvalidArgument as exc:
            raise UsageError(str(exc)) from None
        if cfg.mode not in corpus.MODES:
            raise UsageError(f"mode must be one of {corpus.MODES}")
        if cfg.direction not in DIRECTIONS:
            raise UsageError(f"direction must be one of {DIRECTIONS}")
        return cfg

    def load_manifest(self):
        return corpus.load_manifest(self.manifest)

    def load_lexicon(self) -> EntityLexicon:
        path = Path(self.lexicon) if self.lexicon else corpus.data_path("covid_lexicon.txt")
        return EntityLexicon.load(path)

    def resolved_stream_length(self) -> int:
        if self.stream_length is not None:
            return self.stream_length
        return len(self.load_manifest())

    def resolved_thresholds(self) -> ClassificationThresholds:
        if self.thresholds is not None:
            return self.thresholds
        return ClassificationThresholds.for_length(self.resolved_stream_length())


def read_config_file(path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        values[key.strip()] = value.strip()
    return values


# -- commands --------------------------------------------------------------------------


def cmd_fetch(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    if cfg.mode == "fixture":
        raise UsageError("fetch not applicable in fixture mode; use --mode live")
    failed = []
    for entry in cfg.load_manifest():
        hit = corpus.cache_file(cfg.cache_dir, entry.revision_id).exists()
        try:
            text = corpus.fetch_revision(entry.revision_id, cfg.endpoint, cfg.cache_dir)
        except (corpus.FetchError, corpus.CacheError) as exc:
            failed.append(entry.step_index)
            print(f"step {entry.step_index:>2} rev {entry.revision_id}: FAILED {exc}", file=out)
            continue
        status = "cached" if hit else "fetched"
        print(f"step {entry.step_index:>2} rev {entry.revision_id}: {status} {len(text)} chars  {entry.title}", file=out)
    if failed:
        print(f"failed steps: {', '.join(map(str, failed))}", file=out)
        return EXIT_ERROR
    return EXIT_OK


def _run_ingest(cfg: RunConfig, out=None, checkpoint_dir=None):
    docs = corpus.load_stream(cfg.load_manifest(), cfg.mode, cfg.cache_dir, cfg.endpoint)
    lexicon = cfg.load_lexicon()
    graph = EntityGraph()
    events = []
    for doc in docs:
        report = ingest_document(graph, doc.plain_text, lexicon, cfg.dynamics, doc.step_index, cfg.direction)
        events.extend(report.events)
        if out is not None:
            print(f"{report.describe()}  [{doc.title}]", file=out)
        if checkpoint_dir is not None:
            save_snapshot(graph, Path(checkpoint_dir) / f"step_{doc.step_index:02d}.snapshot")
    return graph, events


def cmd_ingest(cfg: RunConfig, checkpoint_dir=None, out=None) -> int:
    out = out or sys.stdout
    graph, events = _run_ingest(cfg, out, checkpoint_dir)
    save_snapshot(graph, cfg.snapshot)
    atomic_write_bytes(cfg.event_log, format_event_log(events).encode("utf-8"))
    print(
        f"wrote {cfg.snapshot} (doc_clock {graph.doc_clock}, {len(graph)} nodes, "
        f"{graph.edge_count} edges) and {cfg.event_log} ({len(events)} directed events)",
        file=out,
    )
    return EXIT_OK


def _passage_texts(cfg: RunConfig):
    from .ingest import segment_sentences

    docs = corpus.load_stream(cfg.load_manifest(), cfg.mode, cfg.cache_dir, cfg.endpoint)
    return {d.step_index: segment_sentences(d.plain_text) for d in docs}


def cmd_query(cfg: RunConfig, query: str, as_json=False, show_text=False, out=None) -> int:
    out = out or sys.stdout
    graph = load_snapshot(cfg.snapshot)
    try:
        result = retrieve(graph, query, cfg.load_lexicon(), cfg.retrieval)
    except EmptySeedError as exc:
        raise UsageError(f"no seeds: {exc}") from None
    texts = _passage_texts(cfg) if show_text else None
    if as_json:
        payload = {
            "query": query,
            "doc_clock": graph.doc_clock,
            "seeds": result.seeds,
            "skipped": result.skipped,
            "results": [
                {
                    "label": h.label,
                    "activation": h.activation,
                    "passages": [
                        {"doc_index": p.doc_index, "sentence_index": p.sentence_index}
                        | ({"text": texts[p.doc_index][p.sentence_index]} if texts else {})
                        for p in h.passages
                    ],
                }
                for h in result.hits
            ],
        }
        print(json.dumps(payload, indent=2), file=out)
        return EXIT_OK
    print(f"seeds: {', '.join(result.seeds)}  (memory at doc_clock {graph.doc_clock})", file=out)
    for rank_no, hit in enumerate(result.hits, start=1):
        refs = " ".join(f"{p.doc_index}:{p.sentence_index}" for p in hit.passages)
        print(f"{rank_no:>2}. {hit.label:<20} {hit.activation:.6f}  {refs}", file=out)
        if texts:
            for p in hit.passages:
                print(f"      [{p.doc_index}:{p.sentence_index}] {texts[p.doc_index][p.sentence_index]}", file=out)
    return EXIT_OK


def _read_event_log(path):
    return parse_event_log(Path(path).read_text(encoding="utf-8"))


def cmd_ablate(cfg: RunConfig, as_csv=False, plot=None, out=None) -> int:
    out = out or sys.stdout
    records = build_pair_records(_read_event_log(cfg.event_log))
    table = ablation_table(records, cfg.resolved_stream_length(), cfg.dynamics, cfg.resolved_thresholds())
    print(table.format_csv() if as_csv else table.format_text(), file=out, end="" if as_csv else "\n")
    if plot:
        from .plotting import plot_ablation

        plot_ablation(table, plot)
    return EXIT_OK


def _find_pair(records: list[PairRecord], a: str, b: str) -> PairRecord:
    key = tuple(sorted((a, b)))
    for rec in records:
        if rec.pair == key:
            return rec
    raise UsageError(f"unknown pair {a!r}-{b!r}: no events in the log")


def cmd_trajectory(cfg: RunConfig, pair=None, events=None, models=MODELS, plot=None, out=None) -> int:
    out = out or sys.stdout
    horizon = cfg.resolved_stream_length()
    if events is None:
        if not pair or len(pair) != 2:
            raise UsageError("give two entity labels or --events")
        rec = _find_pair(build_pair_records(_read_event_log(cfg.event_log)), *pair)
        steps, title = rec.event_steps, f"{rec.pair[0]} - {rec.pair[1]}"
    else:
        steps, title = tuple(events), " - ".join(pair) if pair else "events " + ",".join(map(str, events))
    try:
        rows = export_trajectory(steps, horizon, cfg.dynamics, models)
    except InvalidArgument as exc:
        raise UsageError(str(exc)) from None
    print("\n".join(rows), file=out)
    if plot:
        from .plotting import plot_trajectories

        plot_trajectories([(title, steps)], horizon, plot, cfg.dynamics, show_single="single" in models)
    return EXIT_OK


def cmd_report(cfg: RunConfig, outdir, pairs=DEFAULT_PAIRS, out=None) -> int:
    """Ablation table and trajectory panels as CSV plus PNG figures."""
    out = out or sys.stdout
    from .plotting import plot_ablation, plot_trajectories

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records = build_pair_records(_read_event_log(cfg.event_log))
    horizon = cfg.resolved_stream_length()
    table = ablation_table(records, horizon, cfg.dynamics, cfg.resolved_thresholds())
    (outdir / "ablation.csv").write_text(table.format_csv(), encoding="utf-8")
    plot_ablation(table, outdir / "ablation.png")

    panels, lines = [], []
    for a, b in pairs:
        rec = _find_pair(records, a, b)
        title = f"{rec.pair[0]} - {rec.pair[1]}"
        panels.append((title, rec.event_steps))
        rows = export_trajectory(rec.event_steps, horizon, cfg.dynamics)
        if not lines:
            lines.append("pair," + rows[0])
        lines.extend(f"{rec.pair[0]}|{rec.pair[1]},{row}" for row in rows[1:])
    if panels:
        (outdir / "trajectories.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        phases = None
        try:
            phases = [e.phase for e in cfg.load_manifest()][:horizon]
        except (OSError, InvalidArgument):
            pass
        plot_trajectories(panels, horizon, outdir / "trajectories.png", cfg.dynamics, phases)

    print(table.format_text(), file=out)
    events = sum(r.event_count for r in records)
    print(f"{events} pair events over {len(records)} pairs; {table.classified} classified", file=out)
    print(f"wrote {outdir}/ablation.csv, ablation.png" + (", trajectories.csv, trajectories.png" if panels else ""), file=out)
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------------------


def _common_parser():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat key=value config file")
    for key in CONFIG_KEYS:
        flags = [f"--{key.replace('_', '-')}"]
        if "_" in key:
            flags.append(f"--{key}")
        p.add_argument(*flags, dest=key, default=None, metavar=key.upper())
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="assocmem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("fetch", parents=[common], help="fetch and cache every manifest revision")

    p = sub.add_parser("ingest", parents=[common], help="build the memory graph from the stream")
    p.add_argument("--checkpoint-dir", help="also write a snapshot after every document")

    p = sub.add_parser("query", parents=[common], help="spreading-activation retrieval")
    p.add_argument("query_text")
    p.add_argument("--json", action="store_true", dest="as_json")
    p.add_argument("--show-text", action="store_true", help="print passage sentences")

    p = sub.add_parser("ablate", parents=[common], help="coupled vs single-timescale vs uniform table")
    p.add_argument("--csv", action="store_true", dest="as_csv")
    p.add_argument("--plot", help="also render a bar chart to this file")

    p = sub.add_parser("trajectory", parents=[common], help="per-step CSV for one entity pair")
    p.add_argument("labels", nargs="*", metavar="LABEL")
    p.add_argument("--events", help="comma-separated event steps instead of the event log")
    p.add_argument("--model", action="append", choices=MODELS, dest="models")
    p.add_argument("--plot", help="also render the trajectory to this file")

    p = sub.add_parser("report", parents=[common], help="ablation and trajectory CSVs with figures")
    p.add_argument("outdir")
    p.add_argument("--pair", action="append", metavar="A|B", help="trajectory pair (repeatable)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        values = read_config_file(args.config) if args.config else {}
        values.update({k: getattr(args, k) for k in CONFIG_KEYS if getattr(args, k) is not None})
        cfg = RunConfig.from_mapping(values)
        if args.command == "fetch":
            return cmd_fetch(cfg)
        if args.command == "ingest":
            return cmd_ingest(cfg, args.checkpoint_dir)
        if args.command == "query":
            return cmd_query(cfg, args.query_text, args.as_json, args.show_text)
        if args.command == "ablate":
            return cmd_ablate(cfg, args.as_csv, args.plot)
        if args.command == "trajectory":
            events = None
            if args.events is not None:
                try:
                    events = [int(x) for x in args.events.split(",") if x.strip()]
                except ValueError:
                    raise UsageError(f"bad --events {args.events!r}") from None
            return cmd_trajectory(cfg, args.labels, events, tuple(args.models or MODELS), args.plot)
        if args.command == "report":
            pairs = DEFAULT_PAIRS
            if args.pair:
                pairs = []
                for item in args.pair:
                    a, sep, b = item.partition("|")
                    if not sep:
                        raise UsageError(f"--pair expects A|B, got {item!r}")
                    pairs.append((a.strip(), b.strip()))
            return cmd_report(cfg, args.outdir, pairs)
    except (UsageError, InvalidArgument, EmptySeedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AssocMemError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
