"""Associative entity-graph memory driven by coupled fast/slow edge dynamics."""

from .analysis import (
    AblationTable,
    ClassificationThresholds,
    PairRecord,
    PatternGroup,
    ablation_table,
    build_pair_records,
    classify_pair,
    export_trajectory,
)
from .dynamics import (
    DynamicsParams,
    SingleTimescaleParams,
    StepReport,
    effective_tau,
    integrate_pair,
    single_timescale_step,
    step_edge,
    step_graph,
    uniform_update,
)
from .errors import (
    AssocMemError,
    CacheError,
    EmptySeedError,
    EventLogError,
    FetchError,
    InvalidArgument,
    LoadError,
    NotFound,
    SnapshotFormatError,
)
from .graph_store import EdgeState, EntityGraph, PassageRef, snapshot_read, snapshot_write
from .ingest import (
    CooccurrenceEvent,
    EntityLexicon,
    IngestReport,
    default_lexicon,
    extract_events,
    ingest_document,
    match_entities,
    segment_sentences,
)
from .retrieval import RetrievalParams, RetrievalResult, retrieve, seed_activations, spread_step

__version__ = "0.1.0"
