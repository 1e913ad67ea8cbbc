"""Model generators for property and equivalence tests.

``enumerate_models`` walks an exhaustive family: a fixed skeleton of four
non-state occurrents (an achiever event, a maintain, a driving process, a
target event) over at most five states, with every combination of the
event's resultant states, the maintained state, the target's precondition
polarities, and the declared exclusion groups.  ``random_model`` draws
small arbitrary models from a seeded generator.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from causalfn.core import (
    Context, DrivenState, Entity, Event, Interval, MaintainOccurrent, Model,
    Parameter, Precondition, Process, State,
)

STATE_IDS = ("s1", "s2", "s3", "s4")
RESULTANT_CHOICES = ((), ("s1",), ("s1", "s2"))
MAINTAINED_CHOICES = ("s3", "s4")
POLARITIES = (None, "facilitative", "preventive")
GROUP1_CHOICES = (None, frozenset({"s1", "s3"}), frozenset({"s2", "ev_y"}),
                  frozenset({"s1", "s2", "s3"}))
GROUP2_CHOICES = (None, frozenset({"s4", "ev_y"}), frozenset({"s_q", "s3"}))

PAIRS = tuple((x, y)
              for x in ("ev_a", "m_b", "p_y", "s1", "s3")
              for y in ("ev_y", "p_y", "s3")
              if x != y)


def build(resultants, maintained, polarities, group1, group2) -> Model:
    states = {sid: State(sid, of="thing", proposition=sid,
                         interval=Interval(0, None))
              for sid in STATE_IDS}
    states["s_q"] = State("s_q", parameter="w")
    model = Model(
        entities={"thing": Entity("thing")},
        parameters={"w": Parameter("w", "thing", value=Fraction(0))},
        states=states,
        events={
            "ev_a": Event("ev_a", resultant_states=resultants,
                          declared_participants=frozenset({"thing"}),
                          interval=Interval(0, 2)),
            "ev_y": Event("ev_y",
                          declared_participants=frozenset({"thing"})),
        },
        maintains={"m_b": MaintainOccurrent("m_b", maintained,
                                            interval=Interval(0, None))},
        processes={"p_y": Process("p_y", frozenset({"thing"}),
                                  (DrivenState("s_q", Fraction(1)),),
                                  interval=Interval(0, 6))},
    )
    for i, (sid, polarity) in enumerate(zip(STATE_IDS, polarities)):
        if polarity is not None:
            model.preconditions[f"pc{i}"] = Precondition(
                f"pc{i}", "ev_y", polarity, sid)
    groups = frozenset(g for g in (group1, group2) if g is not None)
    model.contexts["main"] = Context("main", exclusions=groups)
    return model


def enumerate_models():
    """Every model in the family, deterministically ordered."""
    for combo in itertools.product(
            RESULTANT_CHOICES, MAINTAINED_CHOICES,
            itertools.product(POLARITIES, repeat=len(STATE_IDS)),
            GROUP1_CHOICES, GROUP2_CHOICES):
        yield build(*combo)


def family_size() -> int:
    return (len(RESULTANT_CHOICES) * len(MAINTAINED_CHOICES)
            * len(POLARITIES) ** len(STATE_IDS)
            * len(GROUP1_CHOICES) * len(GROUP2_CHOICES))


def random_model(rng: random.Random) -> Model:
    """Small random model: events with resultant states, a maintain, a
    process, random preconditions and exclusion groups."""
    n_states = rng.randint(3, 6)
    states = {}
    for i in range(n_states):
        held = rng.random() < 0.7
        states[f"s{i}"] = State(f"s{i}", of="thing", proposition=f"q{i}",
                                interval=Interval(0, None) if held else None)
    model = Model(entities={"thing": Entity("thing")}, states=states)
    for i in range(rng.randint(1, 3)):
        pool = sorted(states)
        rng.shuffle(pool)
        resultants = tuple(sorted(pool[:rng.randint(0, 2)]))
        model.events[f"e{i}"] = Event(
            f"e{i}", resultant_states=resultants,
            declared_participants=frozenset({"thing"}))
    model.maintains["m0"] = MaintainOccurrent(
        "m0", rng.choice(sorted(states)), interval=Interval(0, None))
    driven = rng.choice(sorted(states))
    model.processes["p0"] = Process("p0", frozenset({"thing"}),
                                    (DrivenState(driven),),
                                    interval=Interval(0, 4))
    occs = model.occurrent_ids()
    for i in range(rng.randint(0, 4)):
        model.preconditions[f"pc{i}"] = Precondition(
            f"pc{i}", rng.choice(occs),
            rng.choice(["facilitative", "preventive"]),
            rng.choice(sorted(states)))
    groups = set()
    for _ in range(rng.randint(0, 3)):
        pool = list(occs)
        rng.shuffle(pool)
        group = frozenset(pool[:rng.randint(2, 3)])
        if len(group) >= 2:
            groups.add(group)
    model.contexts["main"] = Context("main", exclusions=frozenset(groups))
    return model
