"""Coupled fast/slow edge dynamics and the two ablation baselines.

Each edge integrates, with one forward-Euler step per document::

    dw_fast/dt = -w_fast/tau_fast + C (w_slow - w_fast) + I(t)
    dw_slow/dt = -w_slow/tau_slow + C (w_fast - w_slow)

where I(t) = b if the edge's endpoints co-occurred in document t. Both
variables are computed from the time-t values and clamped at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import InvalidArgument, NotFound
from .graph_store import ZERO, EdgeState, EntityGraph

_STABILITY_SLACK = 1e-12

MODELS = ("coupled", "single", "uniform")


@dataclass(frozen=True)
class DynamicsParams:
    tau_fast: float = 2.0
    tau_slow: float = 10.0
    coupling: float = 0.2
    input_amplitude: float = 1.0
    dt: float = 1.0
    prune_epsilon: float = 1e-9

    def __post_init__(self):
        for name in ("tau_fast", "tau_slow", "coupling", "input_amplitude", "dt", "prune_epsilon"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise InvalidArgument(f"{name} must be a finite number, got {value!r}")
        if self.tau_fast <= 0 or self.tau_slow <= 0:
            raise InvalidArgument("time constants must be positive")
        if self.tau_slow <= self.tau_fast:
            raise InvalidArgument(
                f"tau_slow ({self.tau_slow}) must exceed tau_fast ({self.tau_fast})"
            )
        if self.coupling < 0:
            raise InvalidArgument("coupling must be >= 0")
        if self.input_amplitude <= 0:
            raise InvalidArgument("input_amplitude must be > 0")
        if self.dt <= 0:
            raise InvalidArgument("dt must be > 0")
        if self.prune_epsilon < 0:
            raise InvalidArgument("prune_epsilon must be >= 0")
        for tau in (self.tau_fast, self.tau_slow):
            rate = self.dt * (1.0 / tau + self.coupling)
            if rate > 1.0 + _STABILITY_SLACK:
                raise InvalidArgument(
                    f"unstable Euler step: dt*(1/{tau:g} + C) = {rate:.6g} > 1; "
                    "reduce dt or coupling"
                )


@dataclass(frozen=True)
class SingleTimescaleParams:
    tau: float
    input_amplitude: float = 1.0
    dt: float = 1.0

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise InvalidArgument("tau must be positive and finite")
        if self.input_amplitude <= 0:
            raise InvalidArgument("input_amplitude must be > 0")
        if self.dt <= 0:
            raise InvalidArgument("dt must be > 0")
        if self.dt / self.tau > 1.0 + _STABILITY_SLACK:
            raise InvalidArgument(f"unstable Euler step: dt/tau = {self.dt / self.tau:.6g} > 1")

    @classmethod
    def matched(cls, params: DynamicsParams) -> "SingleTimescaleParams":
        """The one-variable model that equals ``params`` whenever w_slow is zero."""
        return cls(effective_tau(params), params.input_amplitude, params.dt)


def effective_tau(params: DynamicsParams) -> float:
    return 1.0 / (1.0 / params.tau_fast + params.coupling)


def step_edge(state: EdgeState, params: DynamicsParams, has_input: bool) -> EdgeState:
    wf, ws = state.w_fast, state.w_slow
    if not (math.isfinite(wf) and math.isfinite(ws)):
        raise InvalidArgument(f"non-finite edge state {state!r}")
    drive = params.input_amplitude if has_input else 0.0
    c = params.coupling
    new_fast = wf + params.dt * (-wf / params.tau_fast + c * (ws - wf) + drive)
    new_slow = ws + params.dt * (-ws / params.tau_slow + c * (wf - ws))
    return EdgeState(max(0.0, new_fast), max(0.0, new_slow))


def single_timescale_step(w: float, params: SingleTimescaleParams, has_input: bool) -> float:
    drive = params.input_amplitude if has_input else 0.0
    return max(0.0, w + params.dt * (-w / params.tau + drive))


def uniform_update(count: int, has_input: bool) -> int:
    return count + 1 if has_input else count


class StepReport(NamedTuple):
    updated: int
    pruned: int


def step_graph(graph: EntityGraph, params: DynamicsParams, event_edges: Iterable[tuple[int, int]]) -> StepReport:
    """Advance every stored edge by one document step.

    Edges in ``event_edges`` receive input (and are created at the zero state
    first if absent); all others decay. Edges whose two weights both end
    below ``params.prune_epsilon`` are removed. Validation happens before any
    mutation, so a failing call leaves the graph untouched.
    """
    events = set(event_edges)
    for src, dst in events:
        for n in (src, dst):
            if not graph.has_node(n):
                raise NotFound(f"event edge refers to unknown node {n!r}")
        if src == dst:
            raise InvalidArgument(f"self-loop event on node {src}")

    updated = pruned = 0
    new_edges: dict[int, dict[int, EdgeState]] = {}
    for src, dst in events:
        if not graph.has_edge(src, dst):
            new_edges.setdefault(src, {})[dst] = ZERO

    eps = params.prune_epsilon
    for src in set(graph.edges) | set(new_edges):
        out = dict(graph.edges.get(src, {}))
        out.update(new_edges.get(src, {}))
        kept = {}
        for dst, state in out.items():
            nxt = step_edge(state, params, (src, dst) in events)
            updated += 1
            if nxt.w_fast < eps and nxt.w_slow < eps:
                pruned += 1
            else:
                kept[dst] = nxt
        if kept:
            graph.edges[src] = kept
        else:
            graph.edges.pop(src, None)
    graph.doc_clock += 1
    return StepReport(updated, pruned)


class Sample(NamedTuple):
    step: int
    w_fast: float
    w_slow: float


Trajectory = list[Sample]


def _check_events(event_steps, horizon):
    steps = list(event_steps)
    if horizon < 0:
        raise InvalidArgument("horizon must be >= 0")
    for a, b in zip(steps, steps[1:]):
        if b <= a:
            raise InvalidArgument(f"event steps must be strictly increasing: {steps}")
    if steps and (steps[0] < 0 or steps[-1] >= horizon):
        raise InvalidArgument(f"event steps {steps} outside [0, {horizon})")
    return set(steps)


def integrate_pair(
    event_steps: Iterable[int],
    horizon: int,
    params: DynamicsParams | None = None,
    model: str = "coupled",
) -> Trajectory:
    """Run one pair from the zero state for ``horizon`` steps.

    Sample ``t`` is the state after step ``t``, so input at step ``t`` is
    already visible in it. The uniform model reports its count as w_fast.
    """
    params = params or DynamicsParams()
    events = _check_events(event_steps, horizon)
    traj: Trajectory = []
    if model == "coupled":
        state = ZERO
        for t in range(horizon):
            state = step_edge(state, params, t in events)
            traj.append(Sample(t, state.w_fast, state.w_slow))
    elif model == "single":
        sp = SingleTimescaleParams.matched(params)
        w = 0.0
        for t in range(horizon):
            w = single_timescale_step(w, sp, t in events)
            traj.append(Sample(t, w, 0.0))
    elif model == "uniform":
        count = 0
        for t in range(horizon):
            count = uniform_update(count, t in events)
            traj.append(Sample(t, count, 0))
    else:
        raise InvalidArgument(f"unknown model {model!r}; expected one of {MODELS}")
    return traj
