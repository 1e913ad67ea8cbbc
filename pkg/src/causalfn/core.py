"""Domain vocabulary for occurrent-level causal models.

Everything that happens is an occurrent: a state (a time-indexed quality of a
bearer), a process (ongoing, exists as a whole at every tick while active), an
event (a completed process, dealt with as a whole over a bounded interval), or
a maintain occurrent (the reification of keeping a state unchanged, including
by omission).

Time is a discrete integer tick line.  An interval [start, end) covers the
ticks start .. end-1; end=None means the occurrent is open-ended.  Two
intervals that merely share a boundary instant meet, they do not overlap.

Parameters carry exact rational values (fractions.Fraction); no floats enter
the core, so equation identities such as x = y + z can be checked for exact
truth at every tick.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator, Optional


class CausalModelError(Exception):
    """Base class for errors raised by the modeling toolkit."""


class UnknownIdError(CausalModelError):
    """A referenced id does not resolve in the model."""


# ---------------------------------------------------------------------------
# Time
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Interval:
    """Half-open tick interval [start, end); end=None is open-ended."""

    start: int
    end: Optional[int] = None

    def __post_init__(self) -> None:
        if self.end is not None and self.end < self.start:
            raise ValueError(f"interval end {self.end} before start {self.start}")

    @property
    def bounded(self) -> bool:
        return self.end is not None

    @property
    def empty(self) -> bool:
        return self.end is not None and self.end == self.start

    def contains(self, tick: int) -> bool:
        if tick < self.start:
            return False
        return self.end is None or tick < self.end

    def clamped_end(self, horizon: Optional[int]) -> Optional[int]:
        if self.end is not None:
            return self.end
        return horizon


def overlaps(a, b, horizon: Optional[int] = None) -> bool:
    """True iff the two occurrents share at least one full tick.

    Sharing only a boundary instant is not overlap.  Open ends extend to
    ``horizon`` when given, otherwise indefinitely.
    """
    ia, ib = _interval_of(a), _interval_of(b)
    ea = ia.clamped_end(horizon)
    eb = ib.clamped_end(horizon)
    lo = max(ia.start, ib.start)
    if ea is None and eb is None:
        return True
    if ea is None:
        return lo < eb
    if eb is None:
        return lo < ea
    return lo < min(ea, eb)


def meets(a, b) -> bool:
    """True iff a's end tick equals b's start tick (and they do not overlap)."""
    ia, ib = _interval_of(a), _interval_of(b)
    if ia.end is None:
        return False
    return ia.end == ib.start and not overlaps(a, b)


def _interval_of(occ) -> Interval:
    interval = occ if isinstance(occ, Interval) else getattr(occ, "interval", None)
    if interval is None:
        raise CausalModelError(f"occurrent {getattr(occ, 'id', occ)!r} has no interval")
    return interval


# ---------------------------------------------------------------------------
# Entities and parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Entity:
    id: str
    kind: str = ""


@dataclass(frozen=True)
class Parameter:
    """A named rational quantity of a bearer entity."""

    id: str
    bearer: str
    quantity_kind: str = ""
    value: Fraction = Fraction(0)


COMPARISON_OPS = ("<", "<=", "=", ">=", ">")


@dataclass(frozen=True)
class Comparison:
    """Boolean condition ``parameter op threshold`` over exact rationals."""

    parameter: str
    op: str
    threshold: Fraction

    def holds(self, value: Fraction) -> bool:
        if self.op == "<":
            return value < self.threshold
        if self.op == "<=":
            return value <= self.threshold
        if self.op == "=":
            return value == self.threshold
        if self.op == ">=":
            return value >= self.threshold
        if self.op == ">":
            return value > self.threshold
        raise CausalModelError(f"unknown comparison operator {self.op!r}")


# ---------------------------------------------------------------------------
# Occurrents
# ---------------------------------------------------------------------------

STATE = "state"
PROCESS = "process"
EVENT = "event"
MAINTAIN = "maintain"


@dataclass(frozen=True)
class State:
    """A time-indexed quality.

    Exactly one of three forms:

    * quality state  -- ``parameter`` set: the state of that quantity having
      its current value (the thing a process drives);
    * condition state -- ``predicate`` set: holds while the comparison is true;
    * propositional state -- ``proposition`` set: holds over its declared
      interval or while maintained/produced at run time.
    """

    id: str
    of: str = ""
    parameter: Optional[str] = None
    predicate: Optional[Comparison] = None
    proposition: Optional[str] = None
    interval: Optional[Interval] = None

    @property
    def kind(self) -> str:
        return STATE

    @property
    def participants(self) -> frozenset[str]:
        return frozenset({self.of}) if self.of else frozenset()


@dataclass(frozen=True)
class DrivenState:
    """A state a process changes; ``delta`` is the per-tick causal increment
    applied to the state's parameter (None: the process sustains the state
    without a declared increment, e.g. the follower side of an equation)."""

    state: str
    delta: Optional[Fraction] = None


@dataclass(frozen=True)
class Process:
    id: str
    participants: frozenset[str] = frozenset()
    driven: tuple[DrivenState, ...] = ()
    intransitive: bool = False
    interval: Optional[Interval] = None

    @property
    def kind(self) -> str:
        return PROCESS

    def driven_state_ids(self) -> tuple[str, ...]:
        return tuple(d.state for d in self.driven)

    def delta_for(self, state_id: str) -> Optional[Fraction]:
        for d in self.driven:
            if d.state == state_id:
                return d.delta
        return None


@dataclass(frozen=True)
class Event:
    """A completed occurrent.  Its interval is bounded; its resultant states
    begin at the end tick.  The constituting process may be elided, in which
    case participants can be declared directly."""

    id: str
    constituting_process: Optional[str] = None
    resultant_states: tuple[str, ...] = ()
    declared_participants: frozenset[str] = frozenset()
    interval: Optional[Interval] = None

    @property
    def kind(self) -> str:
        return EVENT


@dataclass(frozen=True)
class MaintainOccurrent:
    """Keeping a state unchanged over an interval (possibly by doing nothing)."""

    id: str
    state: str
    participants: frozenset[str] = frozenset()
    interval: Optional[Interval] = None

    @property
    def kind(self) -> str:
        return MAINTAIN


FACILITATIVE = "facilitative"
PREVENTIVE = "preventive"


@dataclass(frozen=True)
class Precondition:
    """A condition state gating the activation of an occurrent.

    Facilitative: must be true for the occurrent to start.
    Preventive: must be false for the occurrent to start.
    """

    id: str
    for_occurrent: str
    polarity: str
    condition: str


@dataclass(frozen=True)
class EquationTerm:
    coefficient: Fraction
    parameter: str


SHARED_INDIVIDUAL = "shared-individual"
DECLARED_IDENTITY = "declared-identity"


@dataclass(frozen=True)
class Equation:
    """A causation-free identity ``lhs = sum(coeff * param) + constant``.

    The simulator keeps it true at every tick by recomputing the designated
    dependent parameter; it is never treated as a causal edge.
    """

    id: str
    lhs: str
    terms: tuple[EquationTerm, ...]
    constant: Fraction = Fraction(0)
    dependent: str = ""
    provenance: str = SHARED_INDIVIDUAL

    def parameters(self) -> tuple[str, ...]:
        seen = [self.lhs]
        for t in self.terms:
            if t.parameter not in seen:
                seen.append(t.parameter)
        return tuple(seen)


@dataclass(frozen=True)
class Context:
    """Background for causal talk: assumed states plus declared exclusion
    groups (sets of occurrent ids of which at most one can hold)."""

    id: str
    assumptions: frozenset[str] = frozenset()
    exclusions: frozenset[frozenset[str]] = frozenset()

    def excluded(self, a: str, b: str) -> bool:
        if a == b:
            return False
        return any(a in group and b in group for group in self.exclusions)


DIRECT = "direct"
INDIRECT = "indirect"


@dataclass(frozen=True)
class AssertedLink:
    """Author-asserted causal link, subject to pattern legality checks."""

    source: str
    target: str
    directness: str = INDIRECT
    subfunction: Optional[str] = None


@dataclass(frozen=True)
class TriggerDecl:
    """Marks an occurrent as activation-driven: it starts at the first tick
    where its facilitative preconditions are all true and its preventive
    preconditions all false, and runs for ``duration`` ticks (None: open)."""

    occurrent: str
    duration: Optional[int] = None


@dataclass(frozen=True)
class RefineLink:
    """One finer-grained causal pair inside a refined occurrent."""

    source: str
    target: str


@dataclass(frozen=True)
class RoleHints:
    """Author hints binding device-ontology roles for one occurrent."""

    occurrent: str
    device: tuple[str, ...] = ()
    operand: tuple[str, ...] = ()
    conduit: tuple[str, ...] = ()
    medium: tuple[str, ...] = ()
    inputs: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    rule_id: str = ""
    span: Optional[SourceSpan] = None
    subject: str = ""

    def format(self) -> str:
        where = ""
        if self.span is not None:
            where = f"{self.span.file}:{self.span.line}:{self.span.column}: "
        rule = f" [{self.rule_id}]" if self.rule_id else ""
        return f"{where}{self.severity}: {self.message}{rule}"


# ---------------------------------------------------------------------------
# Model container
# ---------------------------------------------------------------------------

@dataclass
class Model:
    """Everything declared by one model document, keyed by id.

    Immutable by convention after validation; analyses only read it.
    """

    name: str = ""
    entities: dict[str, Entity] = field(default_factory=dict)
    parameters: dict[str, Parameter] = field(default_factory=dict)
    states: dict[str, State] = field(default_factory=dict)
    processes: dict[str, Process] = field(default_factory=dict)
    events: dict[str, Event] = field(default_factory=dict)
    maintains: dict[str, MaintainOccurrent] = field(default_factory=dict)
    preconditions: dict[str, Precondition] = field(default_factory=dict)
    equations: dict[str, Equation] = field(default_factory=dict)
    contexts: dict[str, Context] = field(default_factory=dict)
    asserted_links: list[AssertedLink] = field(default_factory=list)
    triggers: dict[str, TriggerDecl] = field(default_factory=dict)
    refinements: dict[str, tuple[RefineLink, ...]] = field(default_factory=dict)
    primitives: set[str] = field(default_factory=set)
    role_hints: dict[str, RoleHints] = field(default_factory=dict)
    spans: dict[str, SourceSpan] = field(default_factory=dict, compare=False, repr=False)

    # -- lookup -------------------------------------------------------------

    def occurrent(self, occ_id: str):
        for coll in (self.states, self.processes, self.events, self.maintains):
            if occ_id in coll:
                return coll[occ_id]
        raise UnknownIdError(f"unknown occurrent id {occ_id!r}")

    def has_occurrent(self, occ_id: str) -> bool:
        return any(
            occ_id in coll
            for coll in (self.states, self.processes, self.events, self.maintains)
        )

    def occurrents(self) -> Iterator:
        for coll in (self.states, self.processes, self.events, self.maintains):
            yield from coll.values()

    def occurrent_ids(self) -> list[str]:
        return [occ.id for occ in self.occurrents()]

    def participants_of(self, occ_id: str) -> frozenset[str]:
        occ = self.occurrent(occ_id)
        if occ.kind == EVENT:
            parts = set(occ.declared_participants)
            if occ.constituting_process and occ.constituting_process in self.processes:
                parts |= self.processes[occ.constituting_process].participants
            return frozenset(parts)
        if occ.kind == STATE:
            parts = set(occ.participants)
            if occ.parameter and occ.parameter in self.parameters:
                bearer = self.parameters[occ.parameter].bearer
                if bearer:
                    parts.add(bearer)
            if occ.predicate and occ.predicate.parameter in self.parameters:
                bearer = self.parameters[occ.predicate.parameter].bearer
                if bearer:
                    parts.add(bearer)
            return frozenset(parts)
        return frozenset(occ.participants)

    def preconditions_for(self, occ_id: str) -> list[Precondition]:
        return sorted(
            (p for p in self.preconditions.values() if p.for_occurrent == occ_id),
            key=lambda p: p.id,
        )

    def events_constituted_by(self, process_id: str) -> list[Event]:
        return sorted(
            (e for e in self.events.values() if e.constituting_process == process_id),
            key=lambda e: e.id,
        )

    def default_context(self) -> Context:
        if not self.contexts:
            return Context(id="(implicit)")
        return self.contexts[sorted(self.contexts)[0]]

    def resolve_context(self, ctx) -> Context:
        if ctx is None:
            return self.default_context()
        if isinstance(ctx, Context):
            return ctx
        if ctx in self.contexts:
            return self.contexts[ctx]
        raise UnknownIdError(f"unknown context id {ctx!r}")

    # -- static holding (calculus-level, not simulation) ---------------------

    def holds_statically(self, state_id: str, ctx: Optional[Context] = None) -> bool:
        """A state counts as holding for derivation purposes iff it has a
        non-empty declared interval or the context assumes it."""
        state = self.states.get(state_id)
        if state is None:
            return False
        if ctx is not None and state_id in ctx.assumptions:
            return True
        return state.interval is not None and not state.interval.empty


def constitutes(process, event) -> bool:
    """True iff the event is the completion of exactly this process (matching
    intervals when both are declared)."""
    if event.constituting_process != process.id:
        return False
    if process.interval is not None and event.interval is not None:
        return process.interval == event.interval
    return True


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(model: Model) -> list[Diagnostic]:
    """Structural validation; returns diagnostics (idempotent, read-only)."""
    out: list[Diagnostic] = []

    def err(msg: str, rule: str, subject: str = "") -> None:
        out.append(Diagnostic(ERROR, msg, rule_id=rule, subject=subject,
                              span=model.spans.get(subject)))

    def warn(msg: str, rule: str, subject: str = "") -> None:
        out.append(Diagnostic(WARNING, msg, rule_id=rule, subject=subject,
                              span=model.spans.get(subject)))

    # id uniqueness across every namespace (links reference bare ids)
    seen: dict[str, str] = {}
    collections = [
        ("entity", model.entities), ("param", model.parameters),
        ("state", model.states), ("process", model.processes),
        ("event", model.events), ("maintain", model.maintains),
        ("precondition", model.preconditions), ("equation", model.equations),
        ("context", model.contexts),
    ]
    for kind, coll in collections:
        for key in coll:
            if key in seen:
                err(f"duplicate id {key!r} ({kind} vs {seen[key]})", "DUP-ID", key)
            else:
                seen[key] = kind

    def check_entity(eid: str, subject: str) -> None:
        if eid not in model.entities:
            err(f"unknown entity {eid!r}", "DANGLING-REF", subject)

    def check_state(sid: str, subject: str) -> None:
        if sid not in model.states:
            err(f"unknown state {sid!r}", "DANGLING-REF", subject)

    def check_occ(oid: str, subject: str) -> None:
        if not model.has_occurrent(oid):
            err(f"unknown occurrent {oid!r}", "DANGLING-REF", subject)

    for param in model.parameters.values():
        if param.bearer:
            check_entity(param.bearer, param.id)
        if param.value.denominator == 0:  # Fraction forbids this; belt and braces
            err(f"parameter {param.id!r} has no finite value", "PARAM-VALUE", param.id)

    for state in model.states.values():
        populated = [
            f for f in ("parameter", "predicate", "proposition")
            if getattr(state, f) is not None
        ]
        if len(populated) != 1:
            err(
                f"state {state.id!r} must have exactly one of parameter/"
                f"predicate/proposition, has {populated or 'none'}",
                "STATE-FORM", state.id,
            )
        if state.of:
            check_entity(state.of, state.id)
        if state.parameter is not None and state.parameter not in model.parameters:
            err(f"unknown parameter {state.parameter!r}", "DANGLING-REF", state.id)
        if state.predicate is not None and state.predicate.parameter not in model.parameters:
            err(f"unknown parameter {state.predicate.parameter!r}", "DANGLING-REF", state.id)

    for proc in model.processes.values():
        for ent in sorted(proc.participants):
            check_entity(ent, proc.id)
        for d in proc.driven:
            check_state(d.state, proc.id)
            if d.delta is not None:
                target = model.states.get(d.state)
                if target is not None and target.parameter is None:
                    err(
                        f"process {proc.id!r} declares a delta on {d.state!r}, "
                        "which tracks no parameter",
                        "DELTA-TARGET", proc.id,
                    )
        if not proc.intransitive and not proc.driven:
            err(
                f"operand-bearing process {proc.id!r} drives no states "
                "(declare driven states or mark it intransitive)",
                "PROCESS-DRIVEN", proc.id,
            )

    for event in model.events.values():
        for ent in sorted(event.declared_participants):
            check_entity(ent, event.id)
        for sid in event.resultant_states:
            check_state(sid, event.id)
        if event.interval is not None and not event.interval.bounded:
            err(f"event {event.id!r} must have a bounded interval", "EVENT-BOUNDED",
                event.id)
        if event.constituting_process is not None:
            if event.constituting_process not in model.processes:
                err(f"unknown process {event.constituting_process!r}", "DANGLING-REF",
                    event.id)
            else:
                proc = model.processes[event.constituting_process]
                if (event.interval is not None and proc.interval is not None
                        and event.interval != proc.interval):
                    err(
                        f"event {event.id!r} interval {event.interval} differs from "
                        f"constituting process interval {proc.interval}",
                        "EVENT-PROCESS-INTERVAL", event.id,
                    )
        if event.interval is not None:
            for sid in event.resultant_states:
                state = model.states.get(sid)
                if state is not None and state.interval is not None \
                        and state.interval.start != event.interval.end:
                    err(
                        f"resultant state {sid!r} starts at {state.interval.start}, "
                        f"not at event {event.id!r} end {event.interval.end}",
                        "RESULTANT-ONSET", event.id,
                    )

    for m in model.maintains.values():
        check_state(m.state, m.id)
        for ent in sorted(m.participants):
            check_entity(ent, m.id)
        state = model.states.get(m.state)
        if (state is not None and m.interval is not None
                and state.interval is not None
                and not state.interval.contains(m.interval.start)):
            err(
                f"maintain {m.id!r} starts at {m.interval.start} but {m.state!r} "
                "does not hold there",
                "MAINTAIN-ONSET", m.id,
            )

    for pc in model.preconditions.values():
        check_occ(pc.for_occurrent, pc.id)
        check_state(pc.condition, pc.id)
        if pc.polarity not in (FACILITATIVE, PREVENTIVE):
            err(f"precondition {pc.id!r} has polarity {pc.polarity!r}", "POLARITY",
                pc.id)

    for eq in model.equations.values():
        for pid in eq.parameters():
            if pid not in model.parameters:
                err(f"unknown parameter {pid!r}", "DANGLING-REF", eq.id)
        if eq.dependent and eq.dependent not in eq.parameters():
            err(f"dependent {eq.dependent!r} not in equation {eq.id!r}",
                "EQ-DEPENDENT", eq.id)

    for ctx in model.contexts.values():
        for sid in sorted(ctx.assumptions):
            check_state(sid, ctx.id)
        for group in sorted(ctx.exclusions, key=lambda g: tuple(sorted(g))):
            if len(group) < 2:
                err(f"exclusion group in {ctx.id!r} needs at least two members",
                    "EXCLUSION-ARITY", ctx.id)
            for oid in sorted(group):
                check_occ(oid, ctx.id)
            # declared-incompatible occurrents should not be scheduled together
            members = [model.occurrent(oid) for oid in sorted(group)
                       if model.has_occurrent(oid)]
            for i, a in enumerate(members):
                for b in members[i + 1:]:
                    if a.interval is not None and b.interval is not None \
                            and overlaps(a, b):
                        warn(
                            f"{a.id!r} and {b.id!r} are declared incompatible in "
                            f"{ctx.id!r} but their intervals overlap",
                            "EXCLUSION-OVERLAP", ctx.id,
                        )

    for i, link in enumerate(model.asserted_links):
        span = model.spans.get(f"link:{i}")
        for oid in (link.source, link.target):
            if not model.has_occurrent(oid):
                out.append(Diagnostic(ERROR, f"unknown occurrent {oid!r}",
                                      rule_id="DANGLING-REF", span=span))
        if model.has_occurrent(link.source) and model.has_occurrent(link.target):
            src = model.occurrent(link.source)
            tgt = model.occurrent(link.target)
            if link.directness == DIRECT:
                out.extend(_direct_pattern_errors(src, tgt, span))
            if tgt.kind == MAINTAIN:
                out.append(Diagnostic(
                    WARNING,
                    f"link targets maintain occurrent {tgt.id!r}; causation "
                    "into a maintain is left undecided and is not derived",
                    rule_id="MAINTAIN-TARGET", span=span, subject=link.source,
                ))

    for occ_id, links in model.refinements.items():
        span = model.spans.get(f"refine:{occ_id}") or model.spans.get(occ_id)
        if not model.has_occurrent(occ_id):
            out.append(Diagnostic(ERROR, f"unknown occurrent {occ_id!r}",
                                  rule_id="DANGLING-REF", span=span, subject=occ_id))
        for rl in links:
            for oid in (rl.source, rl.target):
                if not model.has_occurrent(oid):
                    out.append(Diagnostic(ERROR, f"unknown occurrent {oid!r}",
                                          rule_id="DANGLING-REF", span=span,
                                          subject=occ_id))
            if model.has_occurrent(rl.source) and model.has_occurrent(rl.target):
                out.extend(_direct_pattern_errors(
                    model.occurrent(rl.source), model.occurrent(rl.target),
                    span, subject=occ_id))
    cyclic = _refinement_cycle(model)
    if cyclic:
        err(f"refinement cycle through {cyclic!r}", "REFINE-CYCLE", cyclic)

    for occ_id in sorted(model.primitives):
        check_occ(occ_id, occ_id)

    for trig in model.triggers.values():
        check_occ(trig.occurrent, trig.occurrent)

    for hint in model.role_hints.values():
        check_occ(hint.occurrent, hint.occurrent)
        for role_ids in (hint.device, hint.operand, hint.conduit, hint.medium):
            for ent in role_ids:
                check_entity(ent, hint.occurrent)
        for sid in hint.inputs:
            check_state(sid, hint.occurrent)

    return out


def _direct_pattern_errors(src, tgt, span: Optional[SourceSpan],
                           subject: str = "") -> list[Diagnostic]:
    """Pattern legality of a direct link: only E->S, P->P, S->S are real."""
    subject = subject or src.id
    if src.kind == EVENT and tgt.kind == EVENT:
        return [Diagnostic(
            ERROR,
            f"direct link {src.id!r} -> {tgt.id!r} connects two events; a "
            "completed occurrent cannot act on another one directly — route "
            "the influence through a resultant state",
            rule_id="CLAIM3", span=span, subject=subject,
        )]
    if src.kind == EVENT and tgt.kind == PROCESS:
        return [Diagnostic(
            ERROR,
            f"direct link {src.id!r} -> {tgt.id!r} makes a completed event "
            "drive a process; remodel the impact as a short push process "
            "overlapping the effect, or go through a resultant state",
            rule_id="EP-PATTERN", span=span, subject=subject,
        )]
    legal = {(EVENT, STATE), (PROCESS, PROCESS), (STATE, STATE),
             (PROCESS, STATE), (MAINTAIN, STATE)}
    if (src.kind, tgt.kind) not in legal:
        return [Diagnostic(
            ERROR,
            f"direct link {src.id!r} -> {tgt.id!r} has pattern "
            f"{src.kind}->{tgt.kind}; direct causation is limited to "
            "event->state, process->process and state->state",
            rule_id="ILLEGAL-PATTERN", span=span, subject=subject,
        )]
    return []


def _refinement_cycle(model: Model) -> str:
    """Return an occurrent id on a refinement cycle, or ''. Refinement maps an
    occurrent to the participating finer occurrents of its declared links."""
    graph = {
        occ: sorted({rl.source for rl in links} | {rl.target for rl in links})
        for occ, links in model.refinements.items()
    }
    visiting: set[str] = set()
    done: set[str] = set()

    def walk(node: str) -> str:
        if node in done:
            return ""
        if node in visiting:
            return node
        visiting.add(node)
        for nxt in graph.get(node, ()):
            hit = walk(nxt)
            if hit:
                return hit
        visiting.discard(node)
        done.add(node)
        return ""

    for root in sorted(graph):
        hit = walk(root)
        if hit:
            return hit
    return ""
