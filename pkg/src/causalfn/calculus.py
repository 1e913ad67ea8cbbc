"""The subfunction calculus.

Causal links carry one of five tags.  Achieves is the production of an effect
and is the only primitive; the others reduce to it:

* Prevents x->y: x achieves something incompatible with y in the context.
* Allows x->y: x toggles a precondition of y the enabling way (three branches:
  achieve a facilitative condition, prevent a preventive one, or maintain a
  facilitative one).
* Disallows x->y: the mirror image (achieve a preventive condition, prevent a
  facilitative one, maintain a preventive one).
* Maintain x->s: x keeps state s unchanged (declared maintain occurrents; a
  holding state trivially maintains itself, which is how a state can head an
  Allows or Disallows link on its own).

Direct links exist only in the three patterns event->state, process->process
and state->state.  There is no direct event->event or event->process
causation; those pairs are rejected with a rewrite hint.

Every successful derivation records its rule id and witness ids and can be
re-checked against the model (see ``recheck``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core import (
    Context, Interval, MaintainOccurrent, Model, State,
    CausalModelError, UnknownIdError,
    DIRECT, INDIRECT, EVENT, MAINTAIN, PROCESS, STATE,
    FACILITATIVE, PREVENTIVE,
    overlaps, constitutes,
)

ACHIEVES = "Achieves"
PREVENTS = "Prevents"
ALLOWS = "Allows"
DISALLOWS = "Disallows"
MAINTAINS = "Maintain"

SUBFUNCTIONS = (ACHIEVES, PREVENTS, ALLOWS, DISALLOWS)

PATTERN_ES = "E->S"
PATTERN_PP = "P->P"
PATTERN_SS = "S->S"
PATTERNS = (PATTERN_ES, PATTERN_PP, PATTERN_SS)

DEFAULT_MAX_DEPTH = 8


class PatternRejection(CausalModelError):
    """A pair of occurrents that cannot form a direct achieves link."""

    rule_id = "ILLEGAL-PATTERN"

    def __init__(self, message: str, hint: str = ""):
        super().__init__(message)
        self.hint = hint


class EventEventRejection(PatternRejection):
    rule_id = "CLAIM3"


class EventProcessRejection(PatternRejection):
    rule_id = "EP-PATTERN"


class NoWitness(CausalModelError):
    """A definition-based derivation found no witness; carries diagnostics
    describing every candidate examined."""

    def __init__(self, message: str, examined: tuple[str, ...] = ()):
        super().__init__(message)
        self.examined = examined


class DepthExceeded(CausalModelError):
    def __init__(self, depth: int):
        super().__init__(
            f"derivation search exceeded the recursion bound ({depth}); "
            "raise max_depth if the model genuinely nests this deep"
        )


class StateNotHolding(CausalModelError):
    pass


class BrokenChain(CausalModelError):
    pass


@dataclass(frozen=True)
class CausalLink:
    source: str
    target: str
    subfunction: str
    directness: str
    context: str = ""
    pattern: Optional[str] = None


@dataclass(frozen=True)
class Derivation:
    conclusion: CausalLink
    rule: str
    witnesses: tuple[tuple[str, str], ...]
    children: tuple["Derivation", ...] = ()

    def witness(self, name: str) -> str:
        for key, value in self.witnesses:
            if key == name:
                return value
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "conclusion": {
                "source": self.conclusion.source,
                "target": self.conclusion.target,
                "subfunction": self.conclusion.subfunction,
                "directness": self.conclusion.directness,
                "context": self.conclusion.context,
                "pattern": self.conclusion.pattern,
            },
            "witnesses": {k: v for k, v in self.witnesses},
            "children": [c.to_json() for c in self.children],
        }


@dataclass(frozen=True)
class PatternEvidence:
    pattern: str
    detail: str


# ---------------------------------------------------------------------------
# Achieves
# ---------------------------------------------------------------------------

def achieves_pattern(model: Model, source_id: str, target_id: str) -> PatternEvidence:
    """Classify a direct achieves pair into E->S, P->P or S->S with the
    structural evidence, or raise a rejection naming the violated rule."""
    src = model.occurrent(source_id)
    tgt = model.occurrent(target_id)

    if src.kind == EVENT and tgt.kind == EVENT:
        raise EventEventRejection(
            f"{source_id!r} -> {target_id!r}: no direct causation between "
            "events; a completed occurrent acts on others only through its "
            "resultant states",
            hint=f"link {source_id!r} to a resultant state that mediates "
                 f"{target_id!r}",
        )
    if src.kind == EVENT and tgt.kind == PROCESS:
        raise EventProcessRejection(
            f"{source_id!r} -> {target_id!r}: a completed event cannot drive "
            "a process",
            hint="remodel the impact as a quick push process overlapping "
                 f"{target_id!r}, or mediate through a resultant state",
        )

    if src.kind == EVENT and tgt.kind == STATE:
        if target_id in src.resultant_states:
            return PatternEvidence(PATTERN_ES, f"{target_id} is a resultant state of {source_id}")
        raise PatternRejection(
            f"{source_id!r} -> {target_id!r}: {target_id!r} is not a "
            f"resultant state of {source_id!r}"
        )

    if src.kind == PROCESS and tgt.kind == PROCESS:
        evidence = _process_coupling(model, source_id, target_id)
        if evidence:
            return PatternEvidence(PATTERN_PP, evidence)
        raise PatternRejection(
            f"{source_id!r} -> {target_id!r}: processes are not coupled (no "
            "shared equation over their driven parameters, no asserted direct "
            "link, or they do not run concurrently)"
        )

    if src.kind == STATE and tgt.kind == STATE:
        evidence = _state_state_evidence(model, source_id, target_id)
        if evidence:
            return PatternEvidence(PATTERN_SS, evidence)
        raise PatternRejection(
            f"{source_id!r} -> {target_id!r}: no underlying processes connect "
            "these states and no direct link is asserted"
        )

    raise PatternRejection(
        f"{source_id!r} -> {target_id!r}: pattern {src.kind}->{tgt.kind} is "
        "not a direct achieves pattern (only E->S, P->P, S->S exist)"
    )


def _driven_parameters(model: Model, process_id: str) -> set[str]:
    proc = model.processes[process_id]
    params = set()
    for d in proc.driven:
        state = model.states.get(d.state)
        if state is not None and state.parameter is not None:
            params.add(state.parameter)
    return params


def _process_coupling(model: Model, source_id: str, target_id: str) -> str:
    """Direct P->P evidence: concurrent activity plus either an asserted
    direct link or an equation whose dependent parameter sits on the target
    side (propagation flows toward the effect)."""
    src = model.processes[source_id]
    tgt = model.processes[target_id]
    if src.interval is not None and tgt.interval is not None \
            and not overlaps(src, tgt):
        return ""
    for link in model.asserted_links:
        if link.source == source_id and link.target == target_id \
                and link.directness == DIRECT:
            return f"asserted direct link {source_id} -> {target_id}"
    src_params = _driven_parameters(model, source_id)
    tgt_params = _driven_parameters(model, target_id)
    for eq in sorted(model.equations.values(), key=lambda e: e.id):
        members = set(eq.parameters())
        if members & src_params and eq.dependent in tgt_params:
            return f"equation {eq.id} propagates into {eq.dependent}"
    return ""


def _state_state_evidence(model: Model, source_id: str, target_id: str) -> str:
    for link in model.asserted_links:
        if link.source == source_id and link.target == target_id \
                and link.directness == DIRECT:
            return f"asserted direct link {source_id} -> {target_id}"
    try:
        reduction = reduce_state_state(model, source_id, target_id)
    except NoUnderlyingProcess:
        return ""
    return (f"continuation of {reduction.process_link.source} -> "
            f"{reduction.process_link.target}")


def _achieves_occurrent(model: Model, x_id: str, z_id: str) -> str:
    """Evidence that occurrent x achieves occurrent z (used inside the
    definitions; z may be a state or a process).  Empty string: none."""
    x = model.occurrent(x_id)
    z = model.occurrent(z_id)
    if z.kind == STATE:
        if x.kind == EVENT and z_id in x.resultant_states:
            return f"{z_id} is a resultant state of {x_id}"
        if x.kind == PROCESS:
            for d in x.driven:
                if d.state == z_id and d.delta is not None and d.delta != 0:
                    return f"{x_id} drives {z_id}"
        if x.kind == STATE:
            return _state_state_evidence(model, x_id, z_id)
        return ""
    if z.kind == PROCESS and x.kind == PROCESS:
        return _process_coupling(model, x_id, z_id)
    return ""


def _maintains(model: Model, x, z_id: str, ctx: Context) -> str:
    """Evidence that x maintains state z.  Declared maintain occurrents
    maintain their state over a non-empty interval; a process driving a state
    with an explicit zero delta sustains it unchanged (the conduit case); a
    holding state maintains itself."""
    if x.kind == MAINTAIN and x.state == z_id:
        if x.interval is not None and x.interval.empty:
            return ""
        return f"{x.id} keeps {z_id} unchanged"
    if x.kind == PROCESS:
        for d in x.driven:
            if d.state == z_id and d.delta == 0:
                return f"{x.id} passes {z_id} through unchanged"
    if x.kind == STATE and x.id == z_id and model.holds_statically(z_id, ctx):
        return f"{z_id} holds and so keeps itself unchanged"
    return ""


# ---------------------------------------------------------------------------
# Definition-based derivations
# ---------------------------------------------------------------------------

def _conclusion(model: Model, x_id: str, y_id: str, subfunction: str,
                ctx: Context, pattern: Optional[str]) -> CausalLink:
    """Direct only when the relata themselves form a legal direct pattern;
    otherwise the link is mediated by its witness state and marked indirect."""
    if subfunction in (ACHIEVES, PREVENTS):
        kinds = (model.occurrent(x_id).kind, model.occurrent(y_id).kind)
        own_pattern = {
            (EVENT, STATE): PATTERN_ES,
            (PROCESS, PROCESS): PATTERN_PP,
            (STATE, STATE): PATTERN_SS,
        }.get(kinds)
        if own_pattern is not None:
            return CausalLink(x_id, y_id, subfunction, DIRECT, ctx.id, own_pattern)
        return CausalLink(x_id, y_id, subfunction, INDIRECT, ctx.id, None)
    directness = INDIRECT
    return CausalLink(x_id, y_id, subfunction, directness, ctx.id, pattern)


def derive_achieves(model: Model, x_id: str, y_id: str,
                    ctx=None) -> Derivation:
    """Achieves as a link: the structural pattern evidence, packaged."""
    context = model.resolve_context(ctx)
    evidence = achieves_pattern(model, x_id, y_id)
    rule = {
        PATTERN_ES: "achieves-event-state",
        PATTERN_PP: "achieves-process-process",
        PATTERN_SS: "achieves-state-state",
    }[evidence.pattern]
    link = CausalLink(x_id, y_id, ACHIEVES, DIRECT, context.id, evidence.pattern)
    return Derivation(link, rule, (("x", x_id), ("y", y_id)))


def derive_prevents(model: Model, x_id: str, y_id: str, ctx=None,
                    max_depth: int = DEFAULT_MAX_DEPTH) -> Derivation:
    """x prevents y iff x achieves some occurrent Z declared incompatible
    with y in the context.  Raises NoWitness listing every Z examined."""
    if max_depth <= 0:
        raise DepthExceeded(DEFAULT_MAX_DEPTH)
    context = model.resolve_context(ctx)
    _require_occurrents(model, x_id, y_id)
    examined = []
    for z_id in sorted(model.occurrent_ids()):
        if z_id in (x_id, y_id):
            continue
        if not context.excluded(y_id, z_id):
            continue
        examined.append(z_id)
        evidence = _achieves_occurrent(model, x_id, z_id)
        if evidence:
            link = _conclusion(model, x_id, y_id, PREVENTS, context, None)
            return Derivation(
                link, "def1",
                (("x", x_id), ("y", y_id), ("z", z_id)),
            )
    raise NoWitness(
        f"{x_id!r} does not prevent {y_id!r} in context {context.id!r}: no "
        f"achieved occurrent is declared incompatible with {y_id!r} "
        f"(examined: {', '.join(examined) or 'none'})",
        tuple(examined),
    )


def _derive_gating(model: Model, x_id: str, y_id: str, ctx, subfunction: str,
                   max_depth: int) -> Derivation:
    """Shared body of Allows and Disallows: find a state Z wired to one of
    the three branches for the wanted polarity pair."""
    if max_depth <= 0:
        raise DepthExceeded(DEFAULT_MAX_DEPTH)
    context = model.resolve_context(ctx)
    _require_occurrents(model, x_id, y_id)
    x = model.occurrent(x_id)
    rule_prefix = "def2" if subfunction == ALLOWS else "def3"
    # branch -> polarity the precondition must have
    achieve_polarity = FACILITATIVE if subfunction == ALLOWS else PREVENTIVE
    prevent_polarity = PREVENTIVE if subfunction == ALLOWS else FACILITATIVE
    failures = []
    preconds = model.preconditions_for(y_id)

    # branches in definition order: (i) achieve, (ii) prevent, (iii) maintain
    for pc in preconds:
        z_id = pc.condition
        if pc.polarity != achieve_polarity:
            continue
        if _achieves_occurrent(model, x_id, z_id):
            link = _conclusion(model, x_id, y_id, subfunction, context, None)
            return Derivation(
                link, f"{rule_prefix}-i",
                (("x", x_id), ("y", y_id), ("z", z_id)),
            )
        failures.append(f"(i) {x_id} does not achieve {z_id}")
    for pc in preconds:
        z_id = pc.condition
        if pc.polarity != prevent_polarity:
            continue
        try:
            inner = derive_prevents(model, x_id, z_id, context,
                                    max_depth=max_depth - 1)
        except NoWitness:
            failures.append(f"(ii) {x_id} does not prevent {z_id}")
        else:
            link = _conclusion(model, x_id, y_id, subfunction, context, None)
            return Derivation(
                link, f"{rule_prefix}-ii",
                (("x", x_id), ("y", y_id), ("z", z_id)),
                children=(inner,),
            )
    for pc in preconds:
        z_id = pc.condition
        if pc.polarity != achieve_polarity:
            continue
        if _maintains(model, x, z_id, context):
            link = _conclusion(model, x_id, y_id, subfunction, context, None)
            return Derivation(
                link, f"{rule_prefix}-iii",
                (("x", x_id), ("y", y_id), ("z", z_id)),
            )
        failures.append(f"(iii) {x_id} does not maintain {z_id}")
    raise NoWitness(
        f"{x_id!r} does not {subfunction.lower()} {y_id!r} in context "
        f"{context.id!r}: " + ("; ".join(failures) if failures else
                               f"{y_id!r} has no preconditions to toggle"),
        tuple(failures),
    )


def derive_allows(model: Model, x_id: str, y_id: str, ctx=None,
                  max_depth: int = DEFAULT_MAX_DEPTH) -> Derivation:
    return _derive_gating(model, x_id, y_id, ctx, ALLOWS, max_depth)


def derive_disallows(model: Model, x_id: str, y_id: str, ctx=None,
                     max_depth: int = DEFAULT_MAX_DEPTH) -> Derivation:
    return _derive_gating(model, x_id, y_id, ctx, DISALLOWS, max_depth)


def derive_maintain(model: Model, x_id: str, y_id: str, ctx=None) -> Derivation:
    """Maintain as a link: a declared maintain occurrent (or pass-through
    process) keeping the target state unchanged."""
    context = model.resolve_context(ctx)
    _require_occurrents(model, x_id, y_id)
    x = model.occurrent(x_id)
    if x.kind == STATE:
        raise NoWitness(f"{x_id!r} is a state; self-maintenance is implicit")
    evidence = _maintains(model, x, y_id, context)
    if not evidence:
        raise NoWitness(f"{x_id!r} does not maintain {y_id!r}")
    link = CausalLink(x_id, y_id, MAINTAINS, INDIRECT, context.id, None)
    return Derivation(link, "maintain", (("x", x_id), ("y", y_id)))


def _require_occurrents(model: Model, *ids: str) -> None:
    for oid in ids:
        model.occurrent(oid)  # raises UnknownIdError


def make_maintain(model: Model, state_id: str, interval: Interval,
                  ctx=None, occ_id: str = "") -> MaintainOccurrent:
    """Build a synthetic maintain occurrent for a state that holds at the
    interval start; usable as the x of branch (iii) derivations."""
    context = model.resolve_context(ctx)
    state = model.states.get(state_id)
    if state is None:
        raise UnknownIdError(f"unknown state id {state_id!r}")
    holds = state_id in context.assumptions or (
        state.interval is not None and state.interval.contains(interval.start))
    if not holds:
        raise StateNotHolding(
            f"{state_id!r} does not hold at tick {interval.start}, so there "
            "is nothing to maintain"
        )
    return MaintainOccurrent(
        id=occ_id or f"maintain:{state_id}@{interval.start}",
        state=state_id,
        interval=interval,
    )


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def classify_link(model: Model, source_id: str, target_id: str, ctx=None,
                  max_depth: int = DEFAULT_MAX_DEPTH) -> list[Derivation]:
    """All derivable links from source to target, one derivation per rule
    that fires.  Empty list: no causal link derivable."""
    context = model.resolve_context(ctx)
    out: list[Derivation] = []
    try:
        out.append(derive_achieves(model, source_id, target_id, context))
    except (PatternRejection, UnknownIdError):
        pass
    try:
        out.append(derive_prevents(model, source_id, target_id, context,
                                   max_depth=max_depth))
    except NoWitness:
        pass
    for derive in (derive_allows, derive_disallows):
        try:
            out.append(derive(model, source_id, target_id, context,
                              max_depth=max_depth))
        except NoWitness:
            pass
    try:
        out.append(derive_maintain(model, source_id, target_id, context))
    except NoWitness:
        pass
    out.sort(key=lambda d: (d.conclusion.subfunction, d.rule))
    return out


def subfunctions_of(derivations) -> set[str]:
    return {d.conclusion.subfunction for d in derivations}


def recheck(model: Model, derivation: Derivation) -> bool:
    """Re-run the rule body of a derivation against its recorded witnesses.
    Derivations are self-verifying: this must hold for everything derived."""
    link = derivation.conclusion
    ctx = model.resolve_context(link.context if link.context and
                                link.context in model.contexts else None)
    rule = derivation.rule
    x = derivation.witness("x")
    y = derivation.witness("y")
    if rule.startswith("achieves-"):
        return achieves_pattern(model, x, y).pattern == link.pattern
    if rule == "def1":
        z = derivation.witness("z")
        return bool(_achieves_occurrent(model, x, z)) and ctx.excluded(y, z)
    if rule in ("def2-i", "def2-ii", "def2-iii", "def3-i", "def3-ii", "def3-iii"):
        z = derivation.witness("z")
        wanted = {
            "def2-i": FACILITATIVE, "def2-ii": PREVENTIVE,
            "def2-iii": FACILITATIVE,
            "def3-i": PREVENTIVE, "def3-ii": FACILITATIVE,
            "def3-iii": PREVENTIVE,
        }[rule]
        gated = any(pc.condition == z and pc.polarity == wanted
                    for pc in model.preconditions_for(y))
        if not gated:
            return False
        if rule.endswith("-i"):
            return bool(_achieves_occurrent(model, x, z))
        if rule.endswith("-ii"):
            return (len(derivation.children) == 1
                    and recheck(model, derivation.children[0]))
        return bool(_maintains(model, model.occurrent(x), z, ctx))
    if rule in ("maintain", "maintain-self"):
        return bool(_maintains(model, model.occurrent(x), y, ctx))
    return False


# ---------------------------------------------------------------------------
# Interaction placement
# ---------------------------------------------------------------------------

PLACEMENT_A = "a"
PLACEMENT_B = "b"
PLACEMENT_C = "c"
PLACEMENT_D = "d"


@dataclass(frozen=True)
class PlacementVerdict:
    case: Optional[str]
    valid: bool
    directness: Optional[str]
    mediating_states: tuple[str, ...]
    diagnostic: str


def interaction_placement(model: Model, cause_id: str, effect_id: str) -> PlacementVerdict:
    """Where can the interaction between a cause and its effect sit?

    Overlap: case (d), the only valid direct arrangement.  Cause before
    effect with a mediating state produced by the cause: case (a), valid as
    indirect causation.  A bare meeting point cannot carry an interaction
    (nothing happens in a single instant): cases (b)/(c), always invalid.
    """
    cause = model.occurrent(cause_id)
    effect = model.occurrent(effect_id)
    if cause.interval is None or effect.interval is None:
        raise CausalModelError("interaction placement needs both intervals")

    if overlaps(cause, effect):
        return PlacementVerdict(
            PLACEMENT_D, True, DIRECT, (),
            "cause and effect overlap; the interaction is carried inside "
            "both while they run together",
        )

    if effect.interval.end is not None and effect.interval.end <= cause.interval.start:
        return PlacementVerdict(
            None, False, None, (),
            "the effect ends before the cause starts; no placement applies",
        )

    mediators = _mediating_states(model, cause, effect)
    if mediators:
        return PlacementVerdict(
            PLACEMENT_A, True, INDIRECT, mediators,
            "indirect causation: states produced by the cause span the gap "
            "and mediate the influence",
        )
    if meets(cause, effect):
        return PlacementVerdict(
            PLACEMENT_B, False, None, (),
            "cause and effect only meet; a boundary instant is too short to "
            "carry any interaction, and no mediating state was found",
        )
    return PlacementVerdict(
        PLACEMENT_A, False, None, (),
        "cause completes before the effect starts and nothing mediates the "
        "gap; an interaction cannot run after its bearer has finished",
    )


def meets(a, b) -> bool:
    from .core import meets as core_meets
    return core_meets(a, b)


def _mediating_states(model: Model, cause, effect) -> tuple[str, ...]:
    produced: list[str] = []
    if cause.kind == EVENT:
        produced.extend(cause.resultant_states)
    elif cause.kind == PROCESS:
        produced.extend(cause.driven_state_ids())
    elif cause.kind == MAINTAIN:
        produced.append(cause.state)
    mediators = []
    for sid in produced:
        state = model.states.get(sid)
        if state is None:
            continue
        if any(pc.condition == sid for pc in model.preconditions_for(effect.id)):
            mediators.append(sid)
            continue
        if state.interval is not None and effect.interval is not None \
                and state.interval.contains(effect.interval.start):
            mediators.append(sid)
    return tuple(sorted(set(mediators)))


# ---------------------------------------------------------------------------
# Chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainLinkReport:
    link: CausalLink
    ok: bool
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class ChainReport:
    valid: bool
    necessary: bool
    links: tuple[ChainLinkReport, ...]
    diagnostics: tuple[str, ...] = ()


def validate_chain(model: Model, chain: list[CausalLink]) -> ChainReport:
    """Check a causal chain link by link.

    Each link must carry exactly one subfunction tag; direct links must fit a
    legal pattern (no direct event->event or event->process); consecutive
    links must hand off through a shared occurrent, or — after a negative
    link whose target therefore never happened — through a state declared
    incompatible with that target or with one of its resultant states.  A
    chain is necessary iff it contains no Allows and no Disallows.
    """
    reports = []
    diagnostics: list[str] = []
    valid = True
    for i, link in enumerate(chain):
        notes = []
        ok = True
        if link.subfunction not in SUBFUNCTIONS + (MAINTAINS,):
            ok = False
            notes.append(f"unknown subfunction tag {link.subfunction!r}")
        src = model.occurrent(link.source)
        tgt = model.occurrent(link.target)
        if link.directness == DIRECT:
            if src.kind == EVENT and tgt.kind == EVENT:
                ok = False
                notes.append("direct event->event link is impossible [CLAIM3]")
            elif src.kind == EVENT and tgt.kind == PROCESS:
                ok = False
                notes.append("direct event->process link is impossible [EP-PATTERN]")
            elif link.pattern is None:
                ok = False
                notes.append("direct link lacks its pattern")
        else:
            if link.subfunction in (ALLOWS, DISALLOWS):
                # indirectness must exhibit a mediating state: re-derive
                derivs = classify_link(model, link.source, link.target,
                                       link.context or None)
                tagged = [d for d in derivs
                          if d.conclusion.subfunction == link.subfunction]
                if not tagged:
                    ok = False
                    notes.append(f"{link.subfunction} is not derivable here")
        if i > 0:
            prev = chain[i - 1]
            if not _connected(model, prev, link):
                raise BrokenChain(
                    f"links {i} and {i + 1} share no occurrent: "
                    f"{prev.source}->{prev.target} then {link.source}->{link.target}"
                )
        valid = valid and ok
        reports.append(ChainLinkReport(link, ok, tuple(notes)))
    necessary = all(
        l.subfunction not in (ALLOWS, DISALLOWS) for l in chain
    )
    return ChainReport(valid, necessary if chain else True, tuple(reports),
                       tuple(diagnostics))


def _connected(model: Model, prev: CausalLink, nxt: CausalLink) -> bool:
    prev_ends = {prev.source, prev.target}
    if nxt.source in prev_ends or nxt.target in prev_ends:
        return True
    if prev.subfunction in (PREVENTS, DISALLOWS):
        # the target never happened; the chain may continue from a state
        # incompatible with it (or with what it would have produced)
        blocked = model.occurrent(prev.target)
        shadow = {prev.target}
        if blocked.kind == EVENT:
            shadow.update(blocked.resultant_states)
        ctx = model.resolve_context(
            prev.context if prev.context in model.contexts else None)
        return any(ctx.excluded(nxt.source, sid) for sid in shadow)
    return False


# ---------------------------------------------------------------------------
# State->state reduction
# ---------------------------------------------------------------------------

class NoUnderlyingProcess(CausalModelError):
    """The model has no finer-grained processes behind an S->S link; the link
    stands as a declared primitive."""


@dataclass(frozen=True)
class StateStateReduction:
    process_link: CausalLink
    completion_event: str
    event_state_link: CausalLink


def reduce_state_state(model: Model, s1_id: str, s2_id: str,
                       ctx=None) -> StateStateReduction:
    """Unfold an S1 -> S2 link into the process pair underneath it.

    S1 must be the end-state of a process P1 (via P1's completion event E1),
    S2 must be sustained by a process P2 coupled to P1; the reduction returns
    the P1 -> P2 link and the E1 -> S2 link that takes over at completion.
    """
    context = model.resolve_context(ctx)
    for sid in (s1_id, s2_id):
        if sid not in model.states:
            raise UnknownIdError(f"unknown state id {sid!r}")
    s2 = model.states[s2_id]
    candidates = []
    for event in sorted(model.events.values(), key=lambda e: e.id):
        if s1_id not in event.resultant_states:
            continue
        if event.constituting_process is None:
            continue
        p1 = model.processes.get(event.constituting_process)
        if p1 is None or not constitutes(p1, event):
            continue
        for p2 in sorted(model.processes.values(), key=lambda p: p.id):
            if p2.id == p1.id:
                continue
            if not _sustains(model, p2, s2):
                continue
            coupling = _process_coupling(model, p1.id, p2.id)
            if not coupling:
                continue
            candidates.append((p1, p2, event, coupling))
    if not candidates:
        raise NoUnderlyingProcess(
            f"{s1_id!r} -> {s2_id!r} has no finer-grained process pair in "
            "the model; treat it as a declared primitive"
        )
    p1, p2, event, coupling = candidates[0]
    pp = CausalLink(p1.id, p2.id, ACHIEVES, DIRECT, context.id, PATTERN_PP)
    es = CausalLink(event.id, s2_id, ACHIEVES, DIRECT, context.id, PATTERN_ES)
    return StateStateReduction(pp, event.id, es)


def _sustains(model: Model, process, state: State) -> bool:
    """P2 sustains S2 if it drives S2 itself or the parameter S2 reads."""
    if state.id in process.driven_state_ids():
        return True
    params = set()
    if state.parameter is not None:
        params.add(state.parameter)
    if state.predicate is not None:
        params.add(state.predicate.parameter)
    return bool(params & _driven_parameters(model, process.id))
