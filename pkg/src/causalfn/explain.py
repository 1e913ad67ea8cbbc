"""Backward-chained explanation trees: why did an occurrent happen?

The tree walks from the effect back to its sources.  An occurrent is
explained through the links derivable into it; a state is explained by what
achieved it, what maintains it, and which of its potential preventers were
themselves disallowed (absences made first-class).  Leaves are achieves
derivations, maintains, or declared primitives; anything else left dangling
is marked unexplained.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .calculus import (
    ACHIEVES, ALLOWS, DISALLOWS, MAINTAINS,
    CausalLink, Derivation, NoWitness, classify_link, derive_maintain,
    derive_prevents,
)
from .core import Model, Context, EVENT, MAINTAIN, PROCESS, STATE

KIND_WHY = "why"
KIND_LINK = "link"
KIND_ABSENT = "absent"
KIND_PRIMITIVE = "primitive"
KIND_UNEXPLAINED = "unexplained"


@dataclass(frozen=True)
class ExplanationNode:
    kind: str
    subject: str
    derivation: Optional[Derivation] = None
    children: tuple["ExplanationNode", ...] = ()

    def leaf_kind(self) -> Optional[str]:
        """Classification of a leaf for the leaves-are-grounded invariant."""
        if self.children:
            return None
        if self.kind == KIND_LINK and self.derivation is not None:
            sub = self.derivation.conclusion.subfunction
            if sub == ACHIEVES:
                return "achieves"
            if sub == MAINTAINS:
                return "maintain"
            return "dangling-" + sub.lower()
        if self.kind == KIND_PRIMITIVE:
            return "primitive"
        if self.kind == KIND_WHY:
            return "unexplained"
        return self.kind


def explain(model: Model, occ_id: str, ctx=None,
            max_depth: int = 6) -> ExplanationNode:
    context = model.resolve_context(ctx)
    children = _incoming(model, occ_id, context, max_depth, seen=frozenset({occ_id}))
    return ExplanationNode(KIND_WHY, occ_id, children=tuple(children))


def _incoming(model: Model, occ_id: str, ctx: Context, depth: int,
              seen: frozenset[str]) -> list[ExplanationNode]:
    """Links that account for occ_id happening (positive side)."""
    if depth <= 0:
        return []
    out: list[ExplanationNode] = []
    if occ_id in model.primitives:
        return [ExplanationNode(KIND_PRIMITIVE, occ_id)]
    for source in sorted(model.occurrent_ids()):
        if source == occ_id or source in seen:
            continue
        for deriv in classify_link(model, source, occ_id, ctx):
            sub = deriv.conclusion.subfunction
            if sub not in (ACHIEVES, ALLOWS, MAINTAINS):
                continue
            if sub == ACHIEVES:
                out.append(ExplanationNode(KIND_LINK, source, deriv))
                continue
            grounds = _explain_source(model, source, ctx, depth - 1,
                                      seen | {occ_id, source})
            out.append(ExplanationNode(KIND_LINK, source, deriv,
                                       children=tuple(grounds)))
    return out


def _explain_source(model: Model, source: str, ctx: Context, depth: int,
                    seen: frozenset[str]) -> list[ExplanationNode]:
    if depth <= 0:
        return []
    occ = model.occurrent(source)
    if source in model.primitives:
        return [ExplanationNode(KIND_PRIMITIVE, source)]
    if occ.kind == MAINTAIN:
        try:
            deriv = derive_maintain(model, source, occ.state, ctx)
        except NoWitness:
            return [ExplanationNode(KIND_UNEXPLAINED, source)]
        return [ExplanationNode(KIND_LINK, source, deriv)]
    if occ.kind == STATE:
        return _explain_state(model, source, ctx, depth, seen)
    nodes = _incoming(model, source, ctx, depth, seen)
    if not nodes:
        return [ExplanationNode(KIND_UNEXPLAINED, source)]
    return nodes


def _explain_state(model: Model, state_id: str, ctx: Context, depth: int,
                   seen: frozenset[str]) -> list[ExplanationNode]:
    """How the state came about, what keeps it, and why nothing removed it."""
    out: list[ExplanationNode] = []
    for source in sorted(model.occurrent_ids()):
        if source == state_id or source in seen:
            continue
        for deriv in classify_link(model, source, state_id, ctx):
            sub = deriv.conclusion.subfunction
            if sub == ACHIEVES:
                out.append(ExplanationNode(KIND_LINK, source, deriv))
            elif sub == MAINTAINS:
                out.append(ExplanationNode(KIND_LINK, source, deriv))
    # potential preventers that were themselves disallowed
    for preventer in sorted(model.occurrent_ids()):
        if preventer == state_id or preventer in seen:
            continue
        try:
            derive_prevents(model, preventer, state_id, ctx)
        except NoWitness:
            continue
        blockers: list[ExplanationNode] = []
        for w in sorted(model.occurrent_ids()):
            if w in (preventer, state_id) or w in seen:
                continue
            for deriv in classify_link(model, w, preventer, ctx):
                if deriv.conclusion.subfunction != DISALLOWS:
                    continue
                grounds = _explain_source(model, w, ctx, depth - 1,
                                          seen | {state_id, preventer, w})
                blockers.append(ExplanationNode(KIND_LINK, w, deriv,
                                                children=tuple(grounds)))
        if blockers:
            out.append(ExplanationNode(KIND_ABSENT, preventer,
                                       children=tuple(blockers)))
    if not out and model.holds_statically(state_id, ctx):
        # a holding state with no further story keeps itself: ground it there
        link = CausalLink(state_id, state_id, MAINTAINS, "indirect", ctx.id)
        deriv = Derivation(link, "maintain-self",
                           (("x", state_id), ("y", state_id)))
        out.append(ExplanationNode(KIND_LINK, state_id, deriv))
    return out


# ---------------------------------------------------------------------------
# Rendering and queries
# ---------------------------------------------------------------------------

def to_text(node: ExplanationNode, indent: int = 0) -> str:
    pad = "  " * indent
    if node.kind == KIND_WHY:
        head = f"why {node.subject}"
        if not node.children:
            head += "  (no incoming links)"
    elif node.kind == KIND_LINK:
        link = node.derivation.conclusion
        witnesses = ", ".join(f"{k}={v}" for k, v in node.derivation.witnesses
                              if k == "z")
        extra = f", {witnesses}" if witnesses else ""
        head = (f"{link.subfunction} {link.source} -> {link.target}"
                f"  [{node.derivation.rule}{extra}]")
    elif node.kind == KIND_ABSENT:
        head = f"absent {node.subject}  (would have prevented the above)"
    elif node.kind == KIND_PRIMITIVE:
        head = f"primitive {node.subject}"
    else:
        head = f"unexplained {node.subject}"
    lines = [pad + head]
    for child in node.children:
        lines.append(to_text(child, indent + 1))
    return "\n".join(lines)


def to_json(node: ExplanationNode) -> dict:
    return {
        "kind": node.kind,
        "subject": node.subject,
        "derivation": node.derivation.to_json() if node.derivation else None,
        "children": [to_json(child) for child in node.children],
    }


def leaf_kinds(node: ExplanationNode) -> list[str]:
    if not node.children:
        kind = node.leaf_kind()
        return [kind] if kind else []
    out = []
    for child in node.children:
        out.extend(leaf_kinds(child))
    return out


def contains_spine(node: ExplanationNode, spine: list[tuple[str, str]]) -> bool:
    """True iff the tree contains a descent matching the (tag, subject)
    sequence: each element matches a node somewhere below the previous one.

    Tags: a subfunction name matches a link node with that tag whose target
    (or source, for Maintain) is the subject; 'absent'/'primitive' match
    those node kinds.
    """
    def matches(n: ExplanationNode, item: tuple[str, str]) -> bool:
        tag, subject = item
        if tag in (KIND_ABSENT, KIND_PRIMITIVE, KIND_UNEXPLAINED):
            return n.kind == tag and n.subject == subject
        if n.kind != KIND_LINK or n.derivation is None:
            return False
        link = n.derivation.conclusion
        if link.subfunction != tag:
            return False
        if tag == MAINTAINS:
            return link.source == subject or link.target == subject
        return link.target == subject

    def search(n: ExplanationNode, remaining: list[tuple[str, str]]) -> bool:
        if not remaining:
            return True
        if matches(n, remaining[0]):
            rest = remaining[1:]
            if not rest or any(search(child, rest) for child in n.children):
                return True
        return any(search(child, remaining) for child in n.children)

    return search(node, spine) if spine else True
