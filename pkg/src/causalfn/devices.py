"""Device identification and recursive decomposition.

A causal pair C -> E names a system: the effect E is what the device is for
(its output states) and the cause C is how it does it (its internal
behavior), performed by an entity composed of everything participating in C.
Declared refinements of C unfold the behavior into finer causal pairs, each
of which identifies a sub-device, until a declared-primitive occurrent or an
unrefined pair is reached.  The engine never invents physics: refinement is
exactly what the model author wrote.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .calculus import CausalLink, ACHIEVES, PATTERN_ES, PATTERN_PP, PATTERN_SS
from .core import (
    CausalModelError, Model, DIRECT, EVENT, MAINTAIN, PROCESS, STATE,
    FACILITATIVE,
)

LEAF_PRIMITIVE = "primitive-proactive"
LEAF_EVENT_STATE = "E->S-leaf"
LEAF_PROCESS_PROCESS = "P->P-leaf"


class MissingParticipants(CausalModelError):
    """The cause has no resolvable participants to compose a device from."""


class DepthExceeded(CausalModelError):
    def __init__(self, message: str, partial: "DeviceTree"):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class Device:
    id: str
    behavior: str                       # the cause occurrent: how to achieve
    output_states: tuple[str, ...]      # from the effect: what to achieve
    input_states: tuple[str, ...] = ()
    role_bindings: tuple[tuple[str, tuple[str, ...]], ...] = ()
    sub_devices: tuple["Device", ...] = ()

    def roles(self) -> dict[str, tuple[str, ...]]:
        return {role: ids for role, ids in self.role_bindings}


@dataclass(frozen=True)
class LeafInfo:
    device_id: str
    kind: str
    note: str = ""


@dataclass(frozen=True)
class DeviceTree:
    root: Device
    leaves: tuple[LeafInfo, ...]

    def depth(self) -> int:
        def walk(dev: Device) -> int:
            if not dev.sub_devices:
                return 1
            return 1 + max(walk(child) for child in dev.sub_devices)
        return walk(self.root)

    def device_count(self) -> int:
        def walk(dev: Device) -> int:
            return 1 + sum(walk(child) for child in dev.sub_devices)
        return walk(self.root)


def identify_device(model: Model, link: CausalLink) -> Device:
    """Bind the device roles for one causal pair, without decomposition."""
    cause = model.occurrent(link.source)
    effect = model.occurrent(link.target)

    if effect.kind == STATE:
        outputs = (effect.id,)
    elif effect.kind == EVENT:
        outputs = tuple(effect.resultant_states)
    elif effect.kind == PROCESS:
        outputs = tuple(effect.driven_state_ids())
    else:
        outputs = (effect.state,)
    if not outputs:
        raise CausalModelError(
            f"effect {effect.id!r} yields no output states; a device must "
            "have something to achieve")

    participants = model.participants_of(cause.id)
    unresolved = sorted(p for p in participants if p not in model.entities)
    if unresolved:
        raise MissingParticipants(
            f"cause {cause.id!r} has participants missing from the model: "
            + ", ".join(unresolved))
    if not participants:
        raise MissingParticipants(
            f"cause {cause.id!r} has no participants to compose a device from")

    hint = model.role_hints.get(cause.id)
    bindings: list[tuple[str, tuple[str, ...]]] = []
    device_ids = hint.device if hint and hint.device else tuple(sorted(participants))
    bindings.append(("device", device_ids))
    operand = hint.operand if hint and hint.operand else _default_operand(model, outputs)
    if operand:
        bindings.append(("operand", operand))
    if hint and hint.conduit:
        bindings.append(("conduit", hint.conduit))
    if hint and hint.medium:
        bindings.append(("medium", hint.medium))

    if hint and hint.inputs:
        inputs = hint.inputs
    else:
        inputs = tuple(sorted(
            pc.condition for pc in model.preconditions_for(cause.id)
            if pc.polarity == FACILITATIVE))

    return Device(
        id=f"device:{cause.id}",
        behavior=cause.id,
        output_states=outputs,
        input_states=inputs,
        role_bindings=tuple(bindings),
    )


def _default_operand(model: Model, outputs: tuple[str, ...]) -> tuple[str, ...]:
    for sid in outputs:
        state = model.states.get(sid)
        if state is None:
            continue
        if state.of:
            return (state.of,)
        if state.parameter and state.parameter in model.parameters:
            bearer = model.parameters[state.parameter].bearer
            if bearer:
                return (bearer,)
    return ()


def decompose(model: Model, device: Device, max_depth: int = 8) -> DeviceTree:
    """Recursively identify sub-devices along the declared refinement of each
    behavior; classify every leaf as a declared primitive or as a minimal
    E->S / P->P pair."""
    if max_depth < 1:
        raise CausalModelError("max_depth must be >= 1")
    leaves: list[LeafInfo] = []

    def grow(dev: Device, target_id: str, depth: int) -> Device:
        behavior = model.occurrent(dev.behavior)
        if behavior.id in model.primitives:
            leaves.append(LeafInfo(dev.id, LEAF_PRIMITIVE))
            return dev
        finer = model.refinements.get(behavior.id)
        if not finer:
            leaves.append(_classify_leaf(model, dev, target_id))
            return dev
        if depth >= max_depth:
            raise DepthExceeded(
                f"refinement of {behavior.id!r} exceeds max depth {max_depth}",
                DeviceTree(dev, tuple(leaves)))
        children = []
        for rl in finer:
            sub_link = CausalLink(rl.source, rl.target, ACHIEVES, DIRECT)
            child = identify_device(model, sub_link)
            children.append(grow(child, rl.target, depth + 1))
        return Device(
            id=dev.id, behavior=dev.behavior,
            output_states=dev.output_states, input_states=dev.input_states,
            role_bindings=dev.role_bindings, sub_devices=tuple(children))

    root = grow(device, device.output_states[0] if device.output_states else "",
                1)
    _check_nesting(model, root)
    return DeviceTree(root, tuple(leaves))


def _classify_leaf(model: Model, dev: Device, target_id: str) -> LeafInfo:
    cause = model.occurrent(dev.behavior)
    target = model.occurrent(target_id) if model.has_occurrent(target_id) else None
    tkind = target.kind if target is not None else STATE
    if cause.kind == EVENT and tkind == STATE:
        return LeafInfo(dev.id, LEAF_EVENT_STATE)
    if cause.kind == PROCESS and tkind in (PROCESS, STATE):
        return LeafInfo(dev.id, LEAF_PROCESS_PROCESS)
    return LeafInfo(
        dev.id, LEAF_PRIMITIVE,
        note=f"unreduced {cause.kind}->{tkind} pair stands as a primitive")


def _check_nesting(model: Model, root: Device) -> None:
    """Sub-device participants must stay inside the parent's."""
    def walk(dev: Device) -> None:
        parent_parts = model.participants_of(dev.behavior)
        for child in dev.sub_devices:
            child_parts = model.participants_of(child.behavior)
            extra = child_parts - parent_parts
            if extra:
                raise CausalModelError(
                    f"sub-device {child.id!r} brings in participants outside "
                    f"its parent {dev.id!r}: {', '.join(sorted(extra))}")
            walk(child)
    walk(root)


# ---------------------------------------------------------------------------
# Adjacency
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinkAdjacency:
    source: str
    target: str
    adjacent: bool
    intermediates: tuple[str, ...] = ()


@dataclass(frozen=True)
class AdjacencyReport:
    links: tuple[LinkAdjacency, ...]

    @property
    def all_adjacent(self) -> bool:
        return all(l.adjacent for l in self.links)


def check_adjacency(model: Model, chain: list[CausalLink]) -> AdjacencyReport:
    """A link is adjacent iff no asserted chain of finer occurrents runs
    between its cause and its effect.  Refining the cause itself (a refine
    declaration) decomposes the occurrent, not the link, so it never breaks
    adjacency; only asserted intermediate links do."""
    graph: dict[str, list[str]] = {}
    for link in model.asserted_links:
        graph.setdefault(link.source, []).append(link.target)
    for targets in graph.values():
        targets.sort()

    results = []
    for link in chain:
        path = _interior_path(graph, link.source, link.target)
        results.append(LinkAdjacency(link.source, link.target,
                                     adjacent=not path,
                                     intermediates=tuple(path)))
    return AdjacencyReport(tuple(results))


def _interior_path(graph: dict[str, list[str]], source: str,
                   target: str) -> list[str]:
    """Shortest asserted path source -> ... -> target with at least one
    interior node; returns the interior nodes."""
    queue: list[list[str]] = [[source]]
    seen = {source}
    best: list[str] = []
    while queue:
        path = queue.pop(0)
        for nxt in graph.get(path[-1], ()):
            if nxt == target:
                if len(path) > 1:
                    return path[1:]
                continue  # the direct edge itself does not count
            if nxt in seen:
                continue
            seen.add(nxt)
            queue.append(path + [nxt])
    return best


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def tree_to_json(tree: DeviceTree) -> dict:
    def render(dev: Device) -> dict:
        return {
            "id": dev.id,
            "behavior": dev.behavior,
            "output_states": list(dev.output_states),
            "input_states": list(dev.input_states),
            "roles": {role: list(ids) for role, ids in dev.role_bindings},
            "sub_devices": [render(child) for child in dev.sub_devices],
        }
    return {
        "root": render(tree.root),
        "leaves": [
            {"device": leaf.device_id, "kind": leaf.kind, "note": leaf.note}
            for leaf in tree.leaves
        ],
    }


def tree_to_dot(tree: DeviceTree) -> str:
    lines = ["digraph devices {", "  rankdir=TB;",
             '  node [shape=box, fontname="monospace"];']
    leaf_kinds = {leaf.device_id: leaf.kind for leaf in tree.leaves}

    def q(text: str) -> str:
        return '"' + text.replace('"', '\\"') + '"'

    declared_states: set[str] = set()

    def state_node(sid: str) -> None:
        if sid not in declared_states:
            declared_states.add(sid)
            lines.append(f"  {q('state:' + sid)} [shape=ellipse];")

    def render(dev: Device) -> None:
        kind = leaf_kinds.get(dev.id)
        label = dev.id + ("\\n" + kind if kind else "")
        lines.append(f"  {q(dev.id)} [label={q(label)}];")
        for sid in dev.input_states:
            state_node(sid)
            lines.append(f"  {q('state:' + sid)} -> {q(dev.id)} [style=dashed];")
        for sid in dev.output_states:
            state_node(sid)
            lines.append(f"  {q(dev.id)} -> {q('state:' + sid)} [style=dashed];")
        for child in dev.sub_devices:
            lines.append(f"  {q(dev.id)} -> {q(child.id)} [label=contains];")
            render(child)

    render(tree.root)
    lines.append("}")
    return "\n".join(lines) + "\n"
