from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from causalfn import core
from causalfn.core import (
    Comparison, Context, Entity, Event, Interval, MaintainOccurrent, Model,
    Parameter, Process, State, DrivenState, constitutes, meets, overlaps,
    validate,
)


def iv(start, end=None) -> Interval:
    return Interval(start, end)


class TestIntervals:
    def test_overlap_shared_ticks(self):
        assert overlaps(iv(0, 5), iv(3, 9))

    def test_meeting_intervals_do_not_overlap(self):
        assert not overlaps(iv(0, 5), iv(5, 9))
        assert meets(iv(0, 5), iv(5, 9))

    def test_disjoint(self):
        assert not overlaps(iv(0, 5), iv(6, 9))
        assert not meets(iv(0, 5), iv(6, 9))

    def test_open_ends(self):
        assert overlaps(iv(0), iv(100))
        assert overlaps(iv(0, 5), iv(4))
        assert not overlaps(iv(0, 5), iv(5))
        assert not meets(iv(0), iv(5, 9))

    def test_horizon_clamps_open_ends(self):
        assert not overlaps(iv(0), iv(100), horizon=50)
        assert overlaps(iv(0), iv(100), horizon=101)

    def test_empty_interval(self):
        assert iv(3, 3).empty
        assert not iv(3, 3).contains(3)

    def test_end_before_start_rejected(self):
        with pytest.raises(ValueError):
            iv(5, 3)

    @given(st.integers(0, 40), st.integers(0, 40),
           st.integers(0, 40), st.integers(0, 40))
    def test_overlaps_and_meets_mutually_exclusive(self, a, da, b, db):
        one, two = iv(a, a + da), iv(b, b + db)
        assert not (overlaps(one, two) and meets(one, two))

    @given(st.integers(0, 40), st.integers(0, 40),
           st.integers(0, 40), st.integers(0, 40))
    def test_overlap_is_symmetric(self, a, da, b, db):
        one, two = iv(a, a + da), iv(b, b + db)
        assert overlaps(one, two) == overlaps(two, one)


class TestCorpusTemporalFacts:
    def test_lock_event_meets_locked_state(self, corpus_models):
        model = corpus_models["robbery"]
        assert model.events["ev_lock"].interval == iv(3, 4)
        assert model.states["s_locked"].interval == iv(4, None)
        assert meets(model.events["ev_lock"], model.states["s_locked"])

    def test_piston_processes_overlap(self, corpus_models):
        model = corpus_models["piston"]
        assert overlaps(model.processes["p_push"], model.processes["p_rotate"])

    def test_constitutes_in_flowvalve(self, corpus_models):
        model = corpus_models["flowvalve"]
        assert constitutes(model.processes["p_close"], model.events["ev_close"])
        assert constitutes(model.processes["p_cut"], model.events["ev_cut"])
        assert not constitutes(model.processes["p_close"],
                               model.events["ev_cut"])


def tiny_model(**overrides) -> Model:
    model = Model(
        entities={"door": Entity("door")},
        states={
            "s_a": State("s_a", of="door", proposition="a", interval=iv(0, 4)),
            "s_b": State("s_b", of="door", proposition="b", interval=iv(4)),
        },
        processes={
            "p_x": Process("p_x", frozenset({"door"}),
                           (DrivenState("s_b"),), interval=iv(2, 4)),
        },
        events={
            "ev_x": Event("ev_x", constituting_process="p_x",
                          resultant_states=("s_b",), interval=iv(2, 4)),
        },
        contexts={"main": Context("main")},
    )
    for key, value in overrides.items():
        setattr(model, key, value)
    return model


class TestValidation:
    def test_clean_model(self):
        assert validate(tiny_model()) == []

    def test_validation_is_idempotent(self, corpus_models):
        for model in corpus_models.values():
            assert validate(model) == validate(model)

    def test_dangling_reference(self):
        model = tiny_model()
        model.states["s_c"] = State("s_c", of="ghost", proposition="c")
        diags = validate(model)
        assert any(d.rule_id == "DANGLING-REF" for d in diags)

    def test_duplicate_id_across_collections(self):
        model = tiny_model()
        model.parameters["s_a"] = Parameter("s_a", "door")
        assert any(d.rule_id == "DUP-ID" for d in validate(model))

    def test_event_needs_bounded_interval(self):
        model = tiny_model()
        model.events["ev_open"] = Event("ev_open", interval=iv(0, None))
        assert any(d.rule_id == "EVENT-BOUNDED" for d in validate(model))

    def test_resultant_state_must_start_at_event_end(self):
        model = tiny_model()
        model.states["s_b"] = State("s_b", of="door", proposition="b",
                                    interval=iv(5))
        assert any(d.rule_id == "RESULTANT-ONSET" for d in validate(model))

    def test_resultant_onset_holds_corpus_wide(self, corpus_models):
        for name, model in corpus_models.items():
            for event in model.events.values():
                if event.interval is None:
                    continue
                for sid in event.resultant_states:
                    state = model.states[sid]
                    if state.interval is not None:
                        assert state.interval.start == event.interval.end, \
                            (name, event.id, sid)

    def test_event_process_interval_mismatch(self):
        model = tiny_model()
        model.events["ev_x"] = Event("ev_x", constituting_process="p_x",
                                     resultant_states=("s_b",),
                                     interval=iv(1, 4))
        assert any(d.rule_id == "EVENT-PROCESS-INTERVAL"
                   for d in validate(model))

    def test_direct_event_event_link_rejected(self):
        model = tiny_model()
        model.events["ev_y"] = Event("ev_y", interval=iv(4, 5))
        model.asserted_links.append(
            core.AssertedLink("ev_x", "ev_y", core.DIRECT))
        assert any(d.rule_id == "CLAIM3" for d in validate(model))

    def test_direct_event_process_link_rejected(self):
        model = tiny_model()
        model.asserted_links.append(
            core.AssertedLink("ev_x", "p_x", core.DIRECT))
        assert any(d.rule_id == "EP-PATTERN" for d in validate(model))

    def test_overlapping_exclusion_members_warn(self):
        model = tiny_model()
        model.states["s_c"] = State("s_c", of="door", proposition="c",
                                    interval=iv(0, 4))
        model.contexts["main"] = Context(
            "main", exclusions=frozenset({frozenset({"s_a", "s_c"})}))
        diags = validate(model)
        assert any(d.rule_id == "EXCLUSION-OVERLAP" for d in diags)

    def test_delta_needs_parameter_state(self):
        model = tiny_model()
        model.processes["p_bad"] = Process(
            "p_bad", frozenset({"door"}),
            (DrivenState("s_a", Fraction(1)),), interval=iv(0, 2))
        assert any(d.rule_id == "DELTA-TARGET" for d in validate(model))

    def test_operand_bearing_process_must_drive(self):
        model = tiny_model()
        model.processes["p_idle"] = Process("p_idle", frozenset({"door"}),
                                            interval=iv(0, 2))
        assert any(d.rule_id == "PROCESS-DRIVEN" for d in validate(model))

    def test_maintain_state_must_hold_at_start(self):
        model = tiny_model()
        model.maintains["m_a"] = MaintainOccurrent("m_a", "s_a",
                                                   interval=iv(5, 7))
        assert any(d.rule_id == "MAINTAIN-ONSET" for d in validate(model))

    def test_refinement_cycle_detected(self):
        model = tiny_model()
        model.states["s_c"] = State("s_c", of="door", proposition="c")
        model.refinements["ev_x"] = (core.RefineLink("p_x", "s_c"),)
        model.refinements["p_x"] = (core.RefineLink("ev_x", "s_c"),)
        assert any(d.rule_id == "REFINE-CYCLE" for d in validate(model))

    def test_state_needs_exactly_one_form(self):
        model = tiny_model()
        model.parameters["q"] = Parameter("q", "door")
        model.states["s_two"] = State("s_two", parameter="q", proposition="p")
        assert any(d.rule_id == "STATE-FORM" for d in validate(model))

    def test_comparison_ops(self):
        cmp = Comparison("q", "<", Fraction(1, 2))
        assert cmp.holds(Fraction(1, 3))
        assert not cmp.holds(Fraction(1, 2))
        assert Comparison("q", "=", Fraction(2)).holds(Fraction(2))
        assert Comparison("q", ">=", Fraction(2)).holds(Fraction(2))
