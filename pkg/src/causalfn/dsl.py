"""The .cm model language: parser, diagnostics and canonical serializer.

Line-oriented keyword declarations, one per line, `#` comments, UTF-8.
Every diagnostic carries a source span.  The serializer emits a canonical
form (fixed declaration order, sorted ids, fixed spacing) such that
``parse(serialize(m))`` reproduces the model and serialization is
byte-stable.

Declarations::

    model m
    entity door kind artifact
    param x of vessel quantity cross-section = 10
    state s_locked of door prop locked from 4 upto open
    state s_pos tracks x
    state s_low when z < 4
    process p_grow by clot drives s_size delta 1/2 from 0 upto open
    process p_hum by fan intransitive from 0 upto 3
    event ev_lock by john constituted-by p_lock results-in s_locked from 3 upto 4
    maintain m_notlock by tom state s_unlocked from 0 upto 4
    precondition pc1 for p_breakin facilitative s_unlocked
    equation eq1 x = y + z dependent z provenance shared-individual
    context main assumes s_locked
    exclude in main s_locked s_unlocked
    trigger p_move duration open
    refine ev_throw into ev_travel -> s_at_window, ev_hit -> s_broken
    primitive ev_unknown
    roles ev_hit device stone operand window conduit lane medium air input s_intact
    assert-link direct p_push -> p_rotate
    assert-link indirect ev_lock -> p_robbery disallows
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import core
from .core import (
    AssertedLink, Comparison, Context, Diagnostic, DrivenState, Entity,
    Equation, EquationTerm, Event, Interval, MaintainOccurrent, Model,
    Parameter, Precondition, Process, RefineLink, RoleHints, SourceSpan,
    State, TriggerDecl, DIRECT, INDIRECT, ERROR, WARNING,
    FACILITATIVE, PREVENTIVE,
)

_TOKEN_RE = re.compile(
    r"(?P<arrow>->)|(?P<cmp><=|>=|[<>=])|(?P<punct>[,*+])"
    r"|(?P<number>-?\d+(?:/\d+)?)|(?P<minus>-)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_.-]*)"
)

_SUBFUNCTION_WORDS = {
    "achieves": "Achieves", "prevents": "Prevents", "allows": "Allows",
    "disallows": "Disallows", "maintain": "Maintain",
}


@dataclass(frozen=True)
class Token:
    text: str
    line: int
    col: int

    def span(self, filename: str) -> SourceSpan:
        return SourceSpan(filename, self.line, self.col, max(len(self.text), 1))


@dataclass
class ParseResult:
    model: Optional[Model]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.model is not None


class _LineCursor:
    def __init__(self, tokens: list[Token], filename: str, sink: list[Diagnostic]):
        self.tokens = tokens
        self.pos = 0
        self.filename = filename
        self.sink = sink
        self.failed = False

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def at_word(self, *words: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text in words

    def take(self) -> Optional[Token]:
        tok = self.peek()
        if tok is not None:
            self.pos += 1
        return tok

    def error(self, message: str, tok: Optional[Token] = None) -> None:
        tok = tok or (self.tokens[-1] if self.tokens else None)
        span = tok.span(self.filename) if tok else SourceSpan(self.filename, 1, 1)
        self.sink.append(Diagnostic(ERROR, message, rule_id="SYNTAX", span=span))
        self.failed = True

    def expect_word(self, word: str) -> bool:
        tok = self.peek()
        if tok is None or tok.text != word:
            self.error(f"expected {word!r}" + (f", got {tok.text!r}" if tok else ""), tok)
            return False
        self.take()
        return True

    def ident(self, what: str = "identifier") -> Optional[str]:
        tok = self.peek()
        if tok is None or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.-]*", tok.text):
            self.error(f"expected {what}" + (f", got {tok.text!r}" if tok else ""), tok)
            return None
        self.take()
        return tok.text

    def rational(self) -> Optional[Fraction]:
        tok = self.peek()
        if tok is None or not re.fullmatch(r"-?\d+(?:/\d+)?", tok.text):
            self.error("expected a rational number (p or p/q)", tok)
            return None
        self.take()
        try:
            return Fraction(tok.text)
        except ZeroDivisionError:
            self.error("zero denominator", tok)
            return None

    def integer(self) -> Optional[int]:
        tok = self.peek()
        if tok is None or not re.fullmatch(r"-?\d+", tok.text):
            self.error("expected an integer tick", tok)
            return None
        self.take()
        return int(tok.text)

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def expect_end(self) -> None:
        tok = self.peek()
        if tok is not None:
            self.error(f"unexpected trailing {tok.text!r}", tok)


def _tokenize(line: str, lineno: int, filename: str,
              sink: list[Diagnostic]) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(line):
        ch = line[pos]
        if ch == "#":
            break
        if ch.isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            sink.append(Diagnostic(
                ERROR, f"unexpected character {ch!r}", rule_id="SYNTAX",
                span=SourceSpan(filename, lineno, pos + 1),
            ))
            pos += 1
            continue
        out.append(Token(m.group(0), lineno, pos + 1))
        pos = m.end()
    return out


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse(text: str, filename: str = "<string>") -> ParseResult:
    """Parse a .cm document.  Returns the validated model, or None plus a
    non-empty diagnostic list when any error was found."""
    diags: list[Diagnostic] = []
    model = Model()
    link_count = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(raw, lineno, filename, diags)
        if not tokens:
            continue
        cur = _LineCursor(tokens, filename, diags)
        head = cur.take()
        handler = _HANDLERS.get(head.text)
        if handler is None:
            cur.error(f"unknown declaration {head.text!r}", head)
            continue
        if head.text == "assert-link":
            _parse_assert_link(cur, model, head, link_count)
            link_count += 1
        else:
            handler(cur, model, head)

    for diag in core.validate(model):
        diags.append(diag)
    for i, link in enumerate(model.asserted_links):
        if link.directness == INDIRECT:
            diags.append(Diagnostic(
                WARNING,
                f"asserted indirect link {link.source!r} -> {link.target!r} "
                "is taken on trust until analyzed",
                rule_id="ASSERT-UNVERIFIED",
                span=model.spans.get(f"link:{i}"),
            ))
    if any(d.severity == ERROR for d in diags):
        return ParseResult(None, diags)
    return ParseResult(model, diags)


def parse_file(path) -> ParseResult:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), filename=str(path))


def _declare(model: Model, coll: dict, obj, cur: _LineCursor, head: Token) -> None:
    if obj.id in coll:
        cur.error(f"duplicate id {obj.id!r}", head)
        return
    coll[obj.id] = obj
    model.spans[obj.id] = head.span(cur.filename)


def _parse_interval(cur: _LineCursor, bounded_only: bool = False) -> Optional[Interval]:
    if not cur.at_word("from"):
        return None
    cur.take()
    start = cur.integer()
    if start is None:
        return None
    if not cur.expect_word("upto"):
        return None
    if cur.at_word("open"):
        cur.take()
        if bounded_only:
            cur.error("this occurrent needs a bounded interval")
            return None
        return Interval(start, None)
    end = cur.integer()
    if end is None:
        return None
    if end < start:
        cur.error(f"interval end {end} before start {start}")
        return None
    return Interval(start, end)


def _parse_id_list(cur: _LineCursor, stop_words: set[str]) -> list[str]:
    out = []
    while not cur.done() and not cur.at_word(*stop_words):
        name = cur.ident()
        if name is None:
            break
        out.append(name)
    return out


def _parse_model(cur: _LineCursor, model: Model, head: Token) -> None:
    name = cur.ident("model name")
    if name is None:
        return
    model.name = name
    cur.expect_end()


def _parse_entity(cur: _LineCursor, model: Model, head: Token) -> None:
    name = cur.ident("entity id")
    if name is None:
        return
    kind = ""
    if cur.at_word("kind"):
        cur.take()
        kind = cur.ident("entity kind") or ""
    cur.expect_end()
    if not cur.failed:
        _declare(model, model.entities, Entity(name, kind), cur, head)


def _parse_param(cur: _LineCursor, model: Model, head: Token) -> None:
    name = cur.ident("parameter id")
    if name is None:
        return
    bearer = ""
    if cur.at_word("of"):
        cur.take()
        bearer = cur.ident("bearer entity") or ""
    quantity = ""
    if cur.at_word("quantity"):
        cur.take()
        quantity = cur.ident("quantity kind") or ""
    if not cur.expect_word("="):
        return
    value = cur.rational()
    if value is None:
        return
    cur.expect_end()
    if not cur.failed:
        _declare(model, model.parameters,
                 Parameter(name, bearer, quantity, value), cur, head)


def _parse_state(cur: _LineCursor, model: Model, head: Token) -> None:
    name = cur.ident("state id")
    if name is None:
        return
    of = ""
    if cur.at_word("of"):
        cur.take()
        of = cur.ident("bearer entity") or ""
    parameter = predicate = proposition = None
    if cur.at_word("prop"):
        cur.take()
        proposition = cur.ident("proposition name")
        if proposition is None:
            return
    elif cur.at_word("tracks"):
        cur.take()
        parameter = cur.ident("parameter id")
        if parameter is None:
            return
    elif cur.at_word("when"):
        cur.take()
        pid = cur.ident("parameter id")
        op_tok = cur.take()
        if pid is None or op_tok is None or op_tok.text not in core.COMPARISON_OPS:
            cur.error("expected comparison: <param> (<|<=|=|>=|>) <rational>")
            return
        threshold = cur.rational()
        if threshold is None:
            return
        predicate = Comparison(pid, op_tok.text, threshold)
    else:
        cur.error("state needs one of: prop <name> | tracks <param> | when <cmp>")
        return
    interval = _parse_interval(cur)
    cur.expect_end()
    if not cur.failed:
        _declare(model, model.states,
                 State(name, of, parameter, predicate, proposition, interval),
                 cur, head)


_PROCESS_STOPS = {"drives", "intransitive", "from"}


def _parse_process(cur: _LineCursor, model: Model, head: Token) -> None:
    name = cur.ident("process id")
    if name is None:
        return
    participants: list[str] = []
    if cur.at_word("by"):
        cur.take()
        participants = _parse_id_list(cur, _PROCESS_STOPS)
    intransitive = False
    if cur.at_word("intransitive"):
        cur.take()
        intransitive = True
    driven: list[DrivenState] = []
    if cur.at_word("drives"):
        cur.take()
        while True:
            sid = cur.ident("driven state id")
            if sid is None:
                return
            delta = None
            if cur.at_word("delta"):
                cur.take()
                delta = cur.rational()
                if delta is None:
                    return
            driven.append(DrivenState(sid, delta))
            if cur.at_word(","):
                cur.take()
                continue
            break
    interval = _parse_interval(cur)
    cur.expect_end()
    if not cur.failed:
        driven.sort(key=lambda d: d.state)
        _declare(model, model.processes,
                 Process(name, frozenset(participants), tuple(driven),
                         intransitive, interval),
                 cur, head)


_EVENT_STOPS = {"constituted-by", "results-in", "from"}


def _parse_event(cur: _LineCursor, model: Model, head: Token) -> None:
    name = cur.ident("event id")
    if name is None:
        return
    participants: list[str] = []
    if cur.at_word("by"):
        cur.take()
        participants = _parse_id_list(cur, _EVENT_STOPS)
    constituting = None
    if cur.at_word("constituted-by"):
        cur.take()
        constituting = cur.ident("process id")
        if constituting is None:
            return
    resultants: list[str] = []
    if cur.at_word("results-in"):
        cur.take()
        resultants = _parse_id_list(cur, {"from"})
        if not resultants:
            cur.error("results-in needs at least one state id")
            return
    interval = _parse_interval(cur, bounded_only=True)
    if interval is None and constituting and constituting in model.processes:
        interval = model.processes[constituting].interval
    cur.expect_end()
    if not cur.failed:
        _declare(model, model.events,
                 Event(name, constituting, tuple(sorted(resultants)),
                       frozenset(participants), interval),
                 cur, head)


def _parse_maintain(cur: _LineCursor, model: Model, head: Token) -> None:
    name = cur.ident("maintain id")
    if name is None:
        return
    participants: list[str] = []
    if cur.at_word("by"):
        cur.take()
        participants = _parse_id_list(cur, {"state"})
    if not cur.expect_word("state"):
        return
    sid = cur.ident("state id")
    if sid is None:
        return
    interval = _parse_interval(cur)
    cur.expect_end()
    if not cur.failed:
        _declare(model, model.maintains,
                 MaintainOccurrent(name, sid, frozenset(participants), interval),
                 cur, head)


def _parse_precondition(cur: _LineCursor, model: Model, head: Token) -> None:
    name = cur.ident("precondition id")
    if name is None:
        return
    if not cur.expect_word("for"):
        return
    occ = cur.ident("occurrent id")
    pol_tok = cur.take()
    if occ is None or pol_tok is None or pol_tok.text not in (FACILITATIVE, PREVENTIVE):
        cur.error("expected: for <occurrent> facilitative|preventive <state>")
        return
    condition = cur.ident("condition state id")
    if condition is None:
        return
    cur.expect_end()
    if not cur.failed:
        _declare(model, model.preconditions,
                 Precondition(name, occ, pol_tok.text, condition), cur, head)


def _parse_equation(cur: _LineCursor, model: Model, head: Token) -> None:
    name = cur.ident("equation id")
    if name is None:
        return
    lhs = cur.ident("left-hand parameter")
    if lhs is None or not cur.expect_word("="):
        return
    terms: list[EquationTerm] = []
    constant = Fraction(0)
    sign = Fraction(1)
    while True:
        tok = cur.peek()
        if tok is None:
            cur.error("equation right-hand side is empty or truncated")
            return
        if re.fullmatch(r"-?\d+(?:/\d+)?", tok.text):
            value = cur.rational()
            if value is None:
                return
            if cur.at_word("*"):
                cur.take()
                pid = cur.ident("parameter id")
                if pid is None:
                    return
                terms.append(EquationTerm(sign * value, pid))
            else:
                constant += sign * value
        else:
            pid = cur.ident("parameter id")
            if pid is None:
                return
            terms.append(EquationTerm(sign, pid))
        if cur.at_word("+"):
            cur.take()
            sign = Fraction(1)
            continue
        if cur.at_word("-"):
            cur.take()
            sign = Fraction(-1)
            continue
        break
    if not cur.expect_word("dependent"):
        return
    dependent = cur.ident("dependent parameter")
    if dependent is None:
        return
    provenance = core.SHARED_INDIVIDUAL
    if cur.at_word("provenance"):
        cur.take()
        word = cur.ident("provenance")
        if word is None:
            return
        if word not in (core.SHARED_INDIVIDUAL, core.DECLARED_IDENTITY):
            cur.error(f"provenance must be {core.SHARED_INDIVIDUAL} or "
                      f"{core.DECLARED_IDENTITY}")
            return
        provenance = word
    cur.expect_end()
    if not cur.failed:
        terms.sort(key=lambda t: t.parameter)
        _declare(model, model.equations,
                 Equation(name, lhs, tuple(terms), constant, dependent, provenance),
                 cur, head)


def _parse_context(cur: _LineCursor, model: Model, head: Token) -> None:
    name = cur.ident("context id")
    if name is None:
        return
    assumptions: list[str] = []
    if cur.at_word("assumes"):
        cur.take()
        assumptions = _parse_id_list(cur, set())
    cur.expect_end()
    if not cur.failed:
        _declare(model, model.contexts,
                 Context(name, frozenset(assumptions)), cur, head)


def _parse_exclude(cur: _LineCursor, model: Model, head: Token) -> None:
    if not cur.expect_word("in"):
        return
    ctx_id = cur.ident("context id")
    if ctx_id is None:
        return
    members = _parse_id_list(cur, set())
    if len(members) < 2:
        cur.error("an exclusion group needs at least two occurrent ids")
        return
    cur.expect_end()
    if cur.failed:
        return
    ctx = model.contexts.get(ctx_id)
    if ctx is None:
        cur.error(f"unknown context {ctx_id!r} (declare it before exclude)", head)
        return
    groups = ctx.exclusions | {frozenset(members)}
    model.contexts[ctx_id] = Context(ctx.id, ctx.assumptions, groups)


def _parse_trigger(cur: _LineCursor, model: Model, head: Token) -> None:
    occ = cur.ident("occurrent id")
    if occ is None:
        return
    duration: Optional[int] = None
    if cur.at_word("duration"):
        cur.take()
        if cur.at_word("open"):
            cur.take()
        else:
            duration = cur.integer()
            if duration is None:
                return
            if duration < 0:
                cur.error("duration must be non-negative")
                return
    cur.expect_end()
    if cur.failed:
        return
    if occ in model.triggers:
        cur.error(f"duplicate trigger for {occ!r}", head)
        return
    model.triggers[occ] = TriggerDecl(occ, duration)
    model.spans.setdefault(f"trigger:{occ}", head.span(cur.filename))


def _parse_refine(cur: _LineCursor, model: Model, head: Token) -> None:
    occ = cur.ident("occurrent id")
    if occ is None or not cur.expect_word("into"):
        return
    links: list[RefineLink] = []
    while True:
        src = cur.ident("finer source id")
        if src is None or not cur.expect_word("->"):
            return
        tgt = cur.ident("finer target id")
        if tgt is None:
            return
        links.append(RefineLink(src, tgt))
        if cur.at_word(","):
            cur.take()
            continue
        break
    cur.expect_end()
    if cur.failed:
        return
    if occ in model.refinements:
        cur.error(f"duplicate refinement for {occ!r}", head)
        return
    model.refinements[occ] = tuple(links)
    model.spans[f"refine:{occ}"] = head.span(cur.filename)


def _parse_primitive(cur: _LineCursor, model: Model, head: Token) -> None:
    occ = cur.ident("occurrent id")
    if occ is None:
        return
    cur.expect_end()
    if not cur.failed:
        model.primitives.add(occ)
        model.spans.setdefault(occ, head.span(cur.filename))


_ROLE_WORDS = ("device", "operand", "conduit", "medium", "input")


def _parse_roles(cur: _LineCursor, model: Model, head: Token) -> None:
    occ = cur.ident("occurrent id")
    if occ is None:
        return
    parts: dict[str, list[str]] = {w: [] for w in _ROLE_WORDS}
    while not cur.done():
        role_tok = cur.take()
        if role_tok.text not in _ROLE_WORDS:
            cur.error(f"expected a role keyword, got {role_tok.text!r}", role_tok)
            return
        ids = _parse_id_list(cur, set(_ROLE_WORDS))
        if not ids:
            cur.error(f"role {role_tok.text!r} lists no ids", role_tok)
            return
        parts[role_tok.text].extend(ids)
    if cur.failed:
        return
    if occ in model.role_hints:
        cur.error(f"duplicate roles for {occ!r}", head)
        return
    model.role_hints[occ] = RoleHints(
        occ,
        device=tuple(sorted(parts["device"])),
        operand=tuple(sorted(parts["operand"])),
        conduit=tuple(sorted(parts["conduit"])),
        medium=tuple(sorted(parts["medium"])),
        inputs=tuple(sorted(parts["input"])),
    )
    model.spans[f"roles:{occ}"] = head.span(cur.filename)


def _parse_assert_link(cur: _LineCursor, model: Model, head: Token,
                       index: int) -> None:
    dir_tok = cur.take()
    if dir_tok is None or dir_tok.text not in (DIRECT, INDIRECT):
        cur.error("expected direct|indirect", dir_tok)
        return
    src = cur.ident("source occurrent")
    if src is None or not cur.expect_word("->"):
        return
    tgt = cur.ident("target occurrent")
    if tgt is None:
        return
    subfunction = None
    if not cur.done():
        word = cur.take()
        subfunction = _SUBFUNCTION_WORDS.get(word.text)
        if subfunction is None:
            cur.error(f"unknown subfunction {word.text!r}", word)
            return
    cur.expect_end()
    if not cur.failed:
        model.asserted_links.append(
            AssertedLink(src, tgt, dir_tok.text, subfunction))
        model.spans[f"link:{index}"] = head.span(cur.filename)


_HANDLERS = {
    "model": _parse_model,
    "entity": _parse_entity,
    "param": _parse_param,
    "state": _parse_state,
    "process": _parse_process,
    "event": _parse_event,
    "maintain": _parse_maintain,
    "precondition": _parse_precondition,
    "equation": _parse_equation,
    "context": _parse_context,
    "exclude": _parse_exclude,
    "trigger": _parse_trigger,
    "refine": _parse_refine,
    "primitive": _parse_primitive,
    "roles": _parse_roles,
    "assert-link": _parse_assert_link,
}


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _interval_text(interval: Optional[Interval]) -> str:
    if interval is None:
        return ""
    end = "open" if interval.end is None else str(interval.end)
    return f" from {interval.start} upto {end}"


def _ids(items) -> str:
    return " ".join(items)


def serialize(model: Model) -> str:
    """Canonical document; stable bytes for structurally equal models."""
    lines = ["# causal model"]
    if model.name:
        lines.append(f"model {model.name}")
    for ent in sorted(model.entities.values(), key=lambda e: e.id):
        kind = f" kind {ent.kind}" if ent.kind else ""
        lines.append(f"entity {ent.id}{kind}")
    for p in sorted(model.parameters.values(), key=lambda p: p.id):
        of = f" of {p.bearer}" if p.bearer else ""
        quantity = f" quantity {p.quantity_kind}" if p.quantity_kind else ""
        lines.append(f"param {p.id}{of}{quantity} = {p.value}")
    for s in sorted(model.states.values(), key=lambda s: s.id):
        of = f" of {s.of}" if s.of else ""
        if s.proposition is not None:
            form = f"prop {s.proposition}"
        elif s.parameter is not None:
            form = f"tracks {s.parameter}"
        else:
            form = f"when {s.predicate.parameter} {s.predicate.op} {s.predicate.threshold}"
        lines.append(f"state {s.id}{of} {form}{_interval_text(s.interval)}")
    for p in sorted(model.processes.values(), key=lambda p: p.id):
        by = f" by {_ids(sorted(p.participants))}" if p.participants else ""
        intanz = " intransitive" if p.intransitive else ""
        drives = ""
        if p.driven:
            rendered = []
            for d in sorted(p.driven, key=lambda d: d.state):
                rendered.append(d.state + (f" delta {d.delta}" if d.delta is not None else ""))
            drives = " drives " + " , ".join(rendered)
        lines.append(f"process {p.id}{by}{intanz}{drives}{_interval_text(p.interval)}")
    for e in sorted(model.events.values(), key=lambda e: e.id):
        by = f" by {_ids(sorted(e.declared_participants))}" if e.declared_participants else ""
        constituted = f" constituted-by {e.constituting_process}" if e.constituting_process else ""
        results = f" results-in {_ids(e.resultant_states)}" if e.resultant_states else ""
        interval = e.interval
        if e.constituting_process and e.constituting_process in model.processes \
                and model.processes[e.constituting_process].interval == interval:
            interval = None  # re-derived from the process on parse
        lines.append(f"event {e.id}{by}{constituted}{results}{_interval_text(interval)}")
    for m in sorted(model.maintains.values(), key=lambda m: m.id):
        by = f" by {_ids(sorted(m.participants))}" if m.participants else ""
        lines.append(f"maintain {m.id}{by} state {m.state}{_interval_text(m.interval)}")
    for pc in sorted(model.preconditions.values(), key=lambda pc: pc.id):
        lines.append(f"precondition {pc.id} for {pc.for_occurrent} "
                     f"{pc.polarity} {pc.condition}")
    for eq in sorted(model.equations.values(), key=lambda e: e.id):
        lines.append(f"equation {eq.id} {eq.lhs} = {_equation_rhs(eq)} "
                     f"dependent {eq.dependent} provenance {eq.provenance}")
    for ctx in sorted(model.contexts.values(), key=lambda c: c.id):
        assumes = f" assumes {_ids(sorted(ctx.assumptions))}" if ctx.assumptions else ""
        lines.append(f"context {ctx.id}{assumes}")
    for ctx in sorted(model.contexts.values(), key=lambda c: c.id):
        for group in sorted(ctx.exclusions, key=lambda g: tuple(sorted(g))):
            lines.append(f"exclude in {ctx.id} {_ids(sorted(group))}")
    for trig in sorted(model.triggers.values(), key=lambda t: t.occurrent):
        duration = "open" if trig.duration is None else str(trig.duration)
        lines.append(f"trigger {trig.occurrent} duration {duration}")
    for occ in sorted(model.primitives):
        lines.append(f"primitive {occ}")
    for occ in sorted(model.refinements):
        rendered = ", ".join(f"{rl.source} -> {rl.target}"
                             for rl in model.refinements[occ])
        lines.append(f"refine {occ} into {rendered}")
    for hint in sorted(model.role_hints.values(), key=lambda h: h.occurrent):
        pieces = []
        for word, ids in (("device", hint.device), ("operand", hint.operand),
                          ("conduit", hint.conduit), ("medium", hint.medium),
                          ("input", hint.inputs)):
            if ids:
                pieces.append(f"{word} {_ids(ids)}")
        lines.append(f"roles {hint.occurrent} " + " ".join(pieces))
    for link in sorted(model.asserted_links,
                       key=lambda l: (l.source, l.target, l.directness,
                                      l.subfunction or "")):
        tail = f" {link.subfunction.lower()}" if link.subfunction else ""
        lines.append(f"assert-link {link.directness} {link.source} -> {link.target}{tail}")
    return "\n".join(lines) + "\n"


def _equation_rhs(eq: Equation) -> str:
    pieces: list[str] = []
    for term in eq.terms:
        coeff = term.coefficient
        magnitude = abs(coeff)
        body = term.parameter if magnitude == 1 else f"{magnitude}*{term.parameter}"
        if not pieces:
            pieces.append(body if coeff >= 0 else f"-1*{term.parameter}"
                          if magnitude == 1 else f"-{magnitude}*{term.parameter}")
            continue
        pieces.append(("+ " if coeff >= 0 else "- ") + body)
    if eq.constant != 0 or not pieces:
        if not pieces:
            pieces.append(str(eq.constant))
        else:
            magnitude = abs(eq.constant)
            pieces.append(("+ " if eq.constant >= 0 else "- ") + str(magnitude))
    return " ".join(pieces)
