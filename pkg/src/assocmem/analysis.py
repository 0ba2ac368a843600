"""Pair-level ablation harness over an event log.

Every unordered entity pair is integrated on its own from the zero state
under three models: the coupled fast/slow dynamics, a one-variable model
with matched early decay, and a never-forgetting event counter. Pairs are
grouped by how often and how recently they occurred.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import fmean
from typing import Iterable, Sequence

from .dynamics import MODELS, DynamicsParams, integrate_pair
from .errors import InvalidArgument
from .ingest import CooccurrenceEvent
from .util import fmt_real


class PatternGroup(enum.Enum):
    REPEATED_OLD = "RepeatedOld"
    FEW_OLD = "FewOld"
    REPEATED_RECENT = "RepeatedRecent"
    FEW_RECENT = "FewRecent"
    EXCLUDED = "Excluded"

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self]


_DESCRIPTIONS = {
    PatternGroup.REPEATED_OLD: "Repeated, no longer mentioned",
    PatternGroup.FEW_OLD: "Few mentions, no longer mentioned",
    PatternGroup.REPEATED_RECENT: "Repeated, recently mentioned",
    PatternGroup.FEW_RECENT: "Few mentions, recently mentioned",
    PatternGroup.EXCLUDED: "Excluded (last event between old and recent windows)",
}

TABLE_GROUPS = (
    PatternGroup.REPEATED_OLD,
    PatternGroup.FEW_OLD,
    PatternGroup.REPEATED_RECENT,
    PatternGroup.FEW_RECENT,
)


@dataclass(frozen=True)
class ClassificationThresholds:
    repeated_min: int = 3
    old_max_index: int = 7
    recent_min_index: int = 10

    def __post_init__(self):
        if self.repeated_min < 1:
            raise InvalidArgument("repeated_min must be >= 1")
        if self.old_max_index >= self.recent_min_index:
            raise InvalidArgument("old_max_index must be below recent_min_index")

    @classmethod
    def for_length(cls, stream_length: int, repeated_min: int = 3) -> "ClassificationThresholds":
        # old: at least five documents before the end; recent: final three
        return cls(repeated_min, stream_length - 6, stream_length - 3)


@dataclass(frozen=True)
class PairRecord:
    pair: tuple[str, str]
    event_steps: tuple[int, ...]

    @property
    def event_count(self) -> int:
        return len(self.event_steps)

    @property
    def last_index(self) -> int:
        return self.event_steps[-1]


def classify_pair(record: PairRecord, thresholds: ClassificationThresholds | None = None) -> PatternGroup:
    th = thresholds or ClassificationThresholds()
    repeated = record.event_count >= th.repeated_min
    if record.last_index <= th.old_max_index:
        return PatternGroup.REPEATED_OLD if repeated else PatternGroup.FEW_OLD
    if record.last_index >= th.recent_min_index:
        return PatternGroup.REPEATED_RECENT if repeated else PatternGroup.FEW_RECENT
    return PatternGroup.EXCLUDED


def build_pair_records(events: Iterable[CooccurrenceEvent]) -> list[PairRecord]:
    """Collapse directed per-document events into one record per unordered pair."""
    steps: dict[tuple[str, str], set[int]] = {}
    for src, dst, doc in events:
        if src == dst:
            continue
        key = (src, dst) if src < dst else (dst, src)
        steps.setdefault(key, set()).add(int(doc))
    return [PairRecord(pair, tuple(sorted(s))) for pair, s in sorted(steps.items())]


@dataclass
class AblationRow:
    group: PatternGroup
    count: int
    coupled: float
    single: float
    uniform: Fraction

    def as_tuple(self):
        return (self.count, self.coupled, self.single, self.uniform)


@dataclass
class AblationTable:
    rows: dict[PatternGroup, AblationRow]
    excluded: int
    finals: dict[tuple[str, str], dict[str, float]] = field(default_factory=dict, repr=False)
    groups: dict[tuple[str, str], PatternGroup] = field(default_factory=dict, repr=False)

    @property
    def classified(self) -> int:
        return sum(r.count for r in self.rows.values())

    def format_text(self) -> str:
        lines = [f"{'Pattern':<36}{'N':>4}{'coupled':>10}{'single':>10}{'uniform':>10}"]
        for g in TABLE_GROUPS:
            r = self.rows[g]
            lines.append(
                f"{g.description:<36}{r.count:>4}{r.coupled:>10.3f}{r.single:>10.3f}{float(r.uniform):>10.3f}"
            )
        lines.append(f"excluded pairs: {self.excluded}")
        return "\n".join(lines)

    def format_csv(self) -> str:
        lines = ["group,n,coupled,single,uniform"]
        for g in TABLE_GROUPS:
            r = self.rows[g]
            lines.append(f"{g.value},{r.count},{fmt_real(r.coupled)},{fmt_real(r.single)},{fmt_real(float(r.uniform))}")
        lines.append(f"{PatternGroup.EXCLUDED.value},{self.excluded},,,")
        return "\n".join(lines) + "\n"


def final_values(record: PairRecord, horizon: int, params: DynamicsParams) -> dict[str, float]:
    return {
        model: integrate_pair(record.event_steps, horizon, params, model)[-1].w_fast
        for model in MODELS
    }


def ablation_table(
    records: Sequence[PairRecord],
    stream_length: int,
    params: DynamicsParams | None = None,
    thresholds: ClassificationThresholds | None = None,
) -> AblationTable:
    params = params or DynamicsParams()
    thresholds = thresholds or ClassificationThresholds.for_length(stream_length)
    buckets: dict[PatternGroup, list[PairRecord]] = {g: [] for g in PatternGroup}
    finals, groups = {}, {}
    for rec in records:
        if rec.last_index >= stream_length:
            raise InvalidArgument(f"pair {rec.pair} has events beyond stream length {stream_length}")
        group = classify_pair(rec, thresholds)
        buckets[group].append(rec)
        groups[rec.pair] = group
        finals[rec.pair] = final_values(rec, stream_length, params)

    rows = {}
    for g in TABLE_GROUPS:
        members = buckets[g]
        if members:
            coupled = fmean(finals[r.pair]["coupled"] for r in members)
            single = fmean(finals[r.pair]["single"] for r in members)
            uniform = Fraction(sum(r.event_count for r in members), len(members))
        else:
            coupled = single = 0.0
            uniform = Fraction(0)
        rows[g] = AblationRow(g, len(members), coupled, single, uniform)
    return AblationTable(rows, len(buckets[PatternGroup.EXCLUDED]), finals, groups)


TRAJECTORY_HEADER = "step,model,w_fast,w_slow,event"


def export_trajectory(
    event_steps: Iterable[int],
    horizon: int,
    params: DynamicsParams | None = None,
    models: Iterable[str] = MODELS,
) -> list[str]:
    """CSV lines (header first): one row per step per model."""
    steps = tuple(event_steps)
    events = set(steps)
    rows = [TRAJECTORY_HEADER]
    for model in models:
        for sample in integrate_pair(steps, horizon, params, model):
            if model == "uniform":
                wf, ws = str(int(sample.w_fast)), "0"
            else:
                wf, ws = fmt_real(sample.w_fast), fmt_real(sample.w_slow)
            rows.append(f"{sample.step},{model},{wf},{ws},{int(sample.step in events)}")
    return rows
