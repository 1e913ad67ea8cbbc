"""Deterministic discrete-tick simulator.

Within one tick the update order is fixed: causal process deltas, then
equation closure (non-causal), then event completion (resultant states begin
at exactly the completion tick), then activation of trigger-driven occurrents
whose facilitative preconditions are all true and preventive ones all false.
Values between snapshots t-1 and t are moved by the processes that were
running during that span, so a process active over [s, e) applies exactly
e - s increments.

Equations are identities, never causal edges: the closure recomputes each
equation's designated dependent parameter and labels those updates
non-causal; process deltas are labeled causal.  All arithmetic is exact
(fractions.Fraction), so equation conservation is checked with zero
tolerance.
"""

from __future__ import annotations

import csv as _csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .core import (
    CausalModelError, Context, Equation, Interval, Model, Precondition,
    UnknownIdError, DIRECT, EVENT, FACILITATIVE, MAINTAIN, PREVENTIVE,
    PROCESS, STATE,
)


class OverconstrainedSystem(CausalModelError):
    """Equations (or an equation and a causal update) demand two different
    values for one parameter at the same tick."""


class UnderdeterminedSystem(CausalModelError):
    """A designated dependent parameter cannot be solved for."""


class UnknownState(CausalModelError):
    """A precondition references a state the snapshot knows nothing about."""


@dataclass
class TickSnapshot:
    tick: int
    values: dict[str, Fraction]
    holding: frozenset[str]
    active: frozenset[str]


@dataclass(frozen=True)
class ParameterUpdate:
    tick: int
    parameter: str
    old: Fraction
    new: Fraction
    source: str
    causal: bool


@dataclass(frozen=True)
class Activation:
    occurrent: str
    tick: int
    last_flips: tuple[str, ...]


@dataclass(frozen=True)
class Completion:
    event: str
    tick: int
    resultants: tuple[str, ...]


@dataclass
class Trace:
    model_name: str
    horizon: int
    snapshots: list[TickSnapshot] = field(default_factory=list)
    updates: list[ParameterUpdate] = field(default_factory=list)
    activations: list[Activation] = field(default_factory=list)
    completions: list[Completion] = field(default_factory=list)

    def snapshot(self, tick: int) -> TickSnapshot:
        return self.snapshots[tick]

    def activation_of(self, occ_id: str) -> Optional[Activation]:
        for act in self.activations:
            if act.occurrent == occ_id:
                return act
        return None

    def first_holding_tick(self, state_id: str) -> Optional[int]:
        for snap in self.snapshots:
            if state_id in snap.holding:
                return snap.tick
        return None

    def series(self, param_id: str) -> list[Fraction]:
        return [snap.values[param_id] for snap in self.snapshots]


@dataclass(frozen=True)
class ActivationSpec:
    occurrent: str
    facilitative: tuple[Precondition, ...]
    preventive: tuple[Precondition, ...]
    duration: Optional[int] = None


@dataclass(frozen=True)
class ActivationDecision:
    fire: bool
    last_flips: tuple[str, ...] = ()
    blocking: tuple[str, ...] = ()


def activation_spec(model: Model, occ_id: str) -> ActivationSpec:
    if not model.has_occurrent(occ_id):
        raise UnknownIdError(f"unknown occurrent id {occ_id!r}")
    facil = tuple(pc for pc in model.preconditions_for(occ_id)
                  if pc.polarity == FACILITATIVE)
    prev = tuple(pc for pc in model.preconditions_for(occ_id)
                 if pc.polarity == PREVENTIVE)
    trig = model.triggers.get(occ_id)
    return ActivationSpec(occ_id, facil, prev,
                          trig.duration if trig else None)


# ---------------------------------------------------------------------------
# Equation closure
# ---------------------------------------------------------------------------

def _solve_dependent(eq: Equation, values: dict[str, Fraction]) -> Fraction:
    """Value the dependent must take for the equation to hold."""
    if not eq.dependent:
        raise UnderdeterminedSystem(
            f"equation {eq.id!r} designates no dependent parameter")
    if eq.dependent == eq.lhs:
        total = eq.constant
        for term in eq.terms:
            total += term.coefficient * values[term.parameter]
        return total
    coeff = sum((t.coefficient for t in eq.terms if t.parameter == eq.dependent),
                Fraction(0))
    if coeff == 0:
        raise UnderdeterminedSystem(
            f"equation {eq.id!r} cannot be solved for {eq.dependent!r} "
            "(zero coefficient)")
    rest = eq.constant
    for term in eq.terms:
        if term.parameter != eq.dependent:
            rest += term.coefficient * values[term.parameter]
    return (values[eq.lhs] - rest) / coeff


def _residual(eq: Equation, values: dict[str, Fraction]) -> Fraction:
    total = eq.constant
    for term in eq.terms:
        total += term.coefficient * values[term.parameter]
    return values[eq.lhs] - total


def close_equations(model: Model, values: dict[str, Fraction], tick: int,
                    protected: frozenset[str] = frozenset()) -> list[ParameterUpdate]:
    """Recompute dependent parameters until every equation holds exactly.

    ``protected`` parameters were just set causally (or externally); an
    equation demanding a different value for one of them means the system is
    overconstrained.
    """
    equations = sorted(model.equations.values(), key=lambda e: e.id)
    updates: list[ParameterUpdate] = []
    for _ in range(len(equations) + 1):
        stable = True
        for eq in equations:
            wanted = _solve_dependent(eq, values)
            current = values[eq.dependent]
            if wanted == current:
                continue
            if eq.dependent in protected:
                raise OverconstrainedSystem(
                    f"equation {eq.id!r} demands {eq.dependent} = {wanted} "
                    f"but it was already set to {current} this tick")
            updates.append(ParameterUpdate(tick, eq.dependent, current, wanted,
                                           eq.id, causal=False))
            values[eq.dependent] = wanted
            stable = False
        if stable:
            break
    else:
        raise OverconstrainedSystem("equation system did not stabilize")
    for eq in equations:
        if _residual(eq, values) != 0:
            raise OverconstrainedSystem(
                f"equation {eq.id!r} cannot be satisfied: residual "
                f"{_residual(eq, values)}")
    return updates


@dataclass
class PropagationResult:
    values: dict[str, Fraction]
    updates: list[ParameterUpdate]


def propagate(model: Model, changed: str, new_value: Fraction,
              tick: int = 0, values: Optional[dict[str, Fraction]] = None
              ) -> PropagationResult:
    """Apply one external parameter change and re-close every equation.

    The closure updates are labeled non-causal: an identity between two
    parameters is one motion seen from two perspectives, not a causal edge.
    """
    if changed not in model.parameters:
        raise UnknownIdError(f"unknown parameter id {changed!r}")
    work = dict(values) if values is not None else {
        pid: p.value for pid, p in model.parameters.items()}
    work[changed] = Fraction(new_value)
    updates = close_equations(model, work, tick, protected=frozenset({changed}))
    return PropagationResult(work, updates)


# ---------------------------------------------------------------------------
# Runtime scheduling
# ---------------------------------------------------------------------------

class _Runtime:
    """Per-run occurrent schedule: declared intervals plus activations."""

    def __init__(self, model: Model):
        self.model = model
        self.intervals: dict[str, Optional[Interval]] = {}
        self.pending: list[str] = []
        for occ in model.occurrents():
            if occ.kind == STATE:
                continue
            if occ.id in model.triggers:
                self.intervals[occ.id] = None
                self.pending.append(occ.id)
            else:
                self.intervals[occ.id] = occ.interval
        # triggered states schedule like the others
        for sid, state in model.states.items():
            if sid in model.triggers:
                self.intervals[sid] = None
                self.pending.append(sid)
        self.pending.sort()
        # events follow their constituting process
        for event in model.events.values():
            if event.constituting_process in self.intervals:
                proc_iv = self.intervals[event.constituting_process]
                if event.id not in self.model.triggers:
                    self.intervals[event.id] = proc_iv

    def active(self, occ_id: str, tick: int) -> bool:
        iv = self.intervals.get(occ_id)
        return iv is not None and iv.contains(tick)

    def interval(self, occ_id: str) -> Optional[Interval]:
        return self.intervals.get(occ_id)

    def activate(self, occ_id: str, tick: int, duration: Optional[int]) -> None:
        end = None if duration is None else tick + duration
        self.intervals[occ_id] = Interval(tick, end)
        self.pending.remove(occ_id)
        occ = self.model.occurrent(occ_id)
        if occ.kind == EVENT and occ.constituting_process:
            self.intervals[occ.constituting_process] = self.intervals[occ_id]
        for event in self.model.events.values():
            if event.constituting_process == occ_id:
                self.intervals[event.id] = self.intervals[occ_id]

    def active_set(self, tick: int) -> frozenset[str]:
        return frozenset(oid for oid in self.intervals if self.active(oid, tick))


def _holding_states(model: Model, values: dict[str, Fraction],
                    emitted: dict[str, int], runtime: _Runtime,
                    tick: int) -> frozenset[str]:
    holding = set()
    for sid, state in model.states.items():
        window_ok = state.interval is None or state.interval.contains(tick)
        if state.parameter is not None:
            if window_ok:
                holding.add(sid)
            continue
        if state.predicate is not None:
            if window_ok and state.predicate.holds(values[state.predicate.parameter]):
                holding.add(sid)
            continue
        # propositional
        if state.interval is not None and state.interval.contains(tick):
            holding.add(sid)
            continue
        if sid in emitted and emitted[sid] <= tick:
            declared_end = state.interval.end if state.interval is not None else None
            if declared_end is None or tick < declared_end:
                holding.add(sid)
                continue
        rt = runtime.interval(sid)
        if rt is not None and rt.contains(tick):
            holding.add(sid)
            continue
        for m in model.maintains.values():
            if m.state == sid and runtime.active(m.id, tick):
                holding.add(sid)
                break
    return frozenset(holding)


# ---------------------------------------------------------------------------
# Trigger evaluation
# ---------------------------------------------------------------------------

def _satisfying(pc: Precondition, holding: frozenset[str]) -> bool:
    holds = pc.condition in holding
    return holds if pc.polarity == FACILITATIVE else not holds


def _decide(model: Model, spec: ActivationSpec, trace: Trace,
            holding: frozenset[str], tick: int) -> ActivationDecision:
    """Fire iff all facilitative conditions hold and no preventive one does.
    On fire, the last-flip set names the precondition(s) whose satisfying
    truth value is the most recent (ties are reported jointly; a discrete
    clock permits them)."""
    for pc in spec.facilitative + spec.preventive:
        if pc.condition not in model.states:
            raise UnknownState(
                f"precondition {pc.id!r} references {pc.condition!r}, which "
                "has no snapshot value")
    blocking = tuple(pc.id for pc in spec.facilitative + spec.preventive
                     if not _satisfying(pc, holding))
    if blocking:
        return ActivationDecision(False, blocking=blocking)
    flip_ticks: dict[str, int] = {}
    for pc in spec.facilitative + spec.preventive:
        flip = tick
        while flip > 0 and _satisfying(pc, trace.snapshot(flip - 1).holding):
            flip -= 1
        flip_ticks[pc.id] = flip
    if not flip_ticks:
        return ActivationDecision(True, ())
    last = max(flip_ticks.values())
    flips = tuple(sorted(pid for pid, f in flip_ticks.items() if f == last))
    return ActivationDecision(True, flips)


def trigger_check(model: Model, spec: ActivationSpec, trace: Trace,
                  tick: Optional[int] = None) -> ActivationDecision:
    """Would the occurrent start at this tick of the trace?"""
    if tick is None:
        tick = trace.snapshots[-1].tick
    return _decide(model, spec, trace, trace.snapshot(tick).holding, tick)


# ---------------------------------------------------------------------------
# Run loop
# ---------------------------------------------------------------------------

def run(model: Model, horizon: int) -> Trace:
    """Simulate ticks 0..horizon inclusive; deterministic for fixed inputs."""
    if horizon < 0:
        raise CausalModelError("horizon must be >= 0")
    trace = Trace(model.name, horizon)
    values = {pid: p.value for pid, p in model.parameters.items()}
    runtime = _Runtime(model)
    emitted: dict[str, int] = {}

    def record_tick(tick: int) -> None:
        holding = _holding_states(model, values, emitted, runtime, tick)
        trace.snapshots.append(TickSnapshot(tick, dict(values), holding,
                                            runtime.active_set(tick)))

    def complete_events(tick: int) -> None:
        for event in sorted(model.events.values(), key=lambda e: e.id):
            iv = runtime.interval(event.id)
            if iv is None or iv.empty or iv.end != tick:
                continue
            resultants = tuple(event.resultant_states)
            trace.completions.append(Completion(event.id, tick, resultants))
            for sid in resultants:
                emitted.setdefault(sid, tick)

    def run_activations(tick: int) -> None:
        # fixpoint: an activation can satisfy another trigger in the same tick
        for _ in range(len(model.triggers) + 1):
            fired = False
            holding = _holding_states(model, values, emitted, runtime, tick)
            for occ_id in list(runtime.pending):
                spec = activation_spec(model, occ_id)
                decision = _decide(model, spec, trace, holding, tick)
                if decision.fire:
                    runtime.activate(occ_id, tick, spec.duration)
                    trace.activations.append(
                        Activation(occ_id, tick, decision.last_flips))
                    fired = True
            if not fired:
                break

    # tick 0: initial values, closure, degenerate completions, activations
    for upd in close_equations(model, values, 0):
        trace.updates.append(upd)
    complete_events(0)
    run_activations(0)
    record_tick(0)

    for tick in range(1, horizon + 1):
        changed: set[str] = set()
        for proc in sorted(model.processes.values(), key=lambda p: p.id):
            if not runtime.active(proc.id, tick - 1):
                continue
            for d in proc.driven:
                if d.delta is None or d.delta == 0:
                    continue
                state = model.states[d.state]
                pid = state.parameter
                old = values[pid]
                values[pid] = old + d.delta
                changed.add(pid)
                trace.updates.append(
                    ParameterUpdate(tick, pid, old, values[pid], proc.id,
                                    causal=True))
        for upd in close_equations(model, values, tick,
                                   protected=frozenset(changed)):
            trace.updates.append(upd)
        complete_events(tick)
        run_activations(tick)
        record_tick(tick)
    return trace


def step(model: Model, tick: int, trace: Trace) -> Trace:
    """Extend a trace that is consistent through tick-1 by one tick.

    Implemented as a fresh deterministic run to the requested tick; the
    prefix is guaranteed identical because the loop is deterministic.
    """
    if tick != len(trace.snapshots):
        raise CausalModelError(
            f"trace is consistent through tick {len(trace.snapshots) - 1}; "
            f"cannot step to {tick}")
    return run(model, tick)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    tick: int
    message: str


@dataclass
class VerificationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations


def verify_trace(model: Model, trace: Trace) -> VerificationReport:
    """Re-check a finished trace: exact equation truth at every snapshot,
    joint activity of directly linked process pairs, resultant states rising
    exactly at their event's completion tick, and a recorded activation cause
    for every trigger-driven start."""
    report = VerificationReport()

    for snap in trace.snapshots:
        for eq in sorted(model.equations.values(), key=lambda e: e.id):
            residual = _residual(eq, snap.values)
            if residual != 0:
                report.violations.append(Violation(
                    "equation", snap.tick,
                    f"{eq.id} off by {residual} at tick {snap.tick}"))

    for link in model.asserted_links:
        if link.directness != DIRECT:
            continue
        if link.source not in model.processes or link.target not in model.processes:
            continue
        for snap in trace.snapshots:
            a = link.source in snap.active
            b = link.target in snap.active
            if a != b:
                report.violations.append(Violation(
                    "simultaneity", snap.tick,
                    f"{link.source} and {link.target} are directly linked "
                    f"processes but only one is active at tick {snap.tick}"))

    for completion in trace.completions:
        for sid in completion.resultants:
            for snap in trace.snapshots:
                held = sid in snap.holding
                if snap.tick < completion.tick and held:
                    report.violations.append(Violation(
                        "resultant-onset", snap.tick,
                        f"{sid} holds at tick {snap.tick}, before "
                        f"{completion.event} completes at {completion.tick}"))
                if snap.tick == completion.tick and not held:
                    report.violations.append(Violation(
                        "resultant-onset", snap.tick,
                        f"{sid} does not hold at the completion tick "
                        f"{completion.tick} of {completion.event}"))

    logged = {act.occurrent for act in trace.activations}
    for occ_id in sorted(model.triggers):
        started = any(occ_id in snap.active or occ_id in snap.holding
                      for snap in trace.snapshots)
        if started and occ_id not in logged:
            report.violations.append(Violation(
                "activation-log", 0,
                f"{occ_id} started without a recorded activation cause"))
    return report


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def to_ldjson(trace: Trace) -> str:
    """One JSON record per tick; exact rationals rendered as strings."""
    lines = []
    for snap in trace.snapshots:
        record = {
            "tick": snap.tick,
            "values": {pid: str(v) for pid, v in sorted(snap.values.items())},
            "holding": sorted(snap.holding),
            "active": sorted(snap.active),
            "updates": [
                {"parameter": u.parameter, "old": str(u.old), "new": str(u.new),
                 "source": u.source, "causal": u.causal}
                for u in trace.updates if u.tick == snap.tick
            ],
            "activations": [
                {"occurrent": a.occurrent, "last_flips": list(a.last_flips)}
                for a in trace.activations if a.tick == snap.tick
            ],
            "completions": [
                {"event": c.event, "resultants": list(c.resultants)}
                for c in trace.completions if c.tick == snap.tick
            ],
        }
        lines.append(json.dumps(record, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def to_csv(trace: Trace) -> str:
    out = io.StringIO()
    params = sorted(trace.snapshots[0].values) if trace.snapshots else []
    writer = _csv.writer(out, lineterminator="\n")
    writer.writerow(["tick"] + params)
    for snap in trace.snapshots:
        writer.writerow([snap.tick] + [str(snap.values[p]) for p in params])
    return out.getvalue()
