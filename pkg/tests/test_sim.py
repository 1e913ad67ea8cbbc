from __future__ import annotations

from fractions import Fraction as F

import pytest

from causalfn import dsl
from causalfn.core import (
    Context, DrivenState, Entity, Equation, EquationTerm, Interval, Model,
    Parameter, Process, State, TriggerDecl, validate,
)
from causalfn.sim import (
    OverconstrainedSystem, TickSnapshot, UnderdeterminedSystem, UnknownState,
    activation_spec, propagate, run, step, to_csv, to_ldjson, trigger_check,
    verify_trace,
)


def iv(start, end=None):
    return Interval(start, end)


class TestPropagate:
    def test_clot_growth_squeezes_the_channel(self, corpus_models):
        model = corpus_models["bloodclot"]
        result = propagate(model, "y", F(3))
        assert result.values["z"] == F(7)          # z = x - y = 10 - 3
        assert result.values["x"] == F(10)
        (update,) = result.updates
        assert update.parameter == "z"
        assert update.source == "eq_section"
        assert update.causal is False

    def test_identity_propagation(self, corpus_models):
        model = corpus_models["piston"]
        result = propagate(model, "x", F(6))
        assert result.values["y"] == F(6)

    def test_unmentioned_parameter_changes_nothing(self, corpus_models):
        model = corpus_models["wall"]
        result = propagate(model, "pos", F(5))
        assert result.updates == []
        assert result.values["pos"] == F(5)

    def test_conflicting_equations_are_overconstrained(self):
        model = _equation_model({
            "eq1": ("a", ((F(1), "b"),), F(0), "b"),
            "eq2": ("a", ((F(1), "b"),), F(1), "b"),
        })
        with pytest.raises(OverconstrainedSystem):
            propagate(model, "a", F(4))

    def test_zero_coefficient_is_underdetermined(self):
        model = _equation_model({
            "eq1": ("a", ((F(0), "b"),), F(0), "b"),
        })
        with pytest.raises(UnderdeterminedSystem):
            propagate(model, "a", F(4))


def _equation_model(equations) -> Model:
    model = Model(
        entities={"thing": Entity("thing")},
        parameters={p: Parameter(p, "thing", value=F(1))
                    for p in ("a", "b")},
    )
    for eq_id, (lhs, terms, constant, dependent) in equations.items():
        model.equations[eq_id] = Equation(
            eq_id, lhs, tuple(EquationTerm(c, p) for c, p in terms),
            constant, dependent)
    return model


BLOODCLOT_Y = [F(2) + F(t, 2) for t in range(11)]
BLOODCLOT_Z = [F(8) - F(t, 2) for t in range(11)]


class TestRun:
    def test_bloodclot_exact_series(self, corpus_models):
        trace = run(corpus_models["bloodclot"], 10)
        assert trace.series("y") == BLOODCLOT_Y
        assert trace.series("z") == BLOODCLOT_Z
        assert trace.series("x") == [F(10)] * 11
        for snap in trace.snapshots:
            assert snap.values["x"] == snap.values["y"] + snap.values["z"]

    def test_ischemia_starts_when_channel_crosses_threshold(self, corpus_models):
        trace = run(corpus_models["bloodclot"], 10)
        assert trace.first_holding_tick("s_low_flow") == 9
        act = trace.activation_of("s_ischemia")
        assert act is not None and act.tick == 9
        assert act.last_flips == ("pc_starved",)
        assert trace.first_holding_tick("s_ischemia") == 9

    def test_machine_starts_with_the_on_state(self, corpus_models):
        trace = run(corpus_models["switch"], 8)
        assert trace.first_holding_tick("s_on") == 4
        act = trace.activation_of("p_machine_work")
        assert act is not None and act.tick == 4
        assert act.last_flips == ("pc_power",)
        assert all(("p_machine_work" in snap.active) == (snap.tick >= 4)
                   for snap in trace.snapshots)

    def test_empty_model(self):
        trace = run(Model(), 3)
        assert len(trace.snapshots) == 4
        assert trace.updates == [] and trace.activations == []

    def test_horizon_zero_is_initial_snapshot_only(self, corpus_models):
        trace = run(corpus_models["bloodclot"], 0)
        assert len(trace.snapshots) == 1
        assert trace.snapshots[0].values["z"] == F(8)

    def test_determinism(self, corpus_models):
        for model in corpus_models.values():
            assert run(model, 9) == run(model, 9)

    def test_update_labels_separate_causal_from_closure(self, corpus_models):
        trace = run(corpus_models["bloodclot"], 10)
        sources = {(u.source, u.causal) for u in trace.updates}
        assert ("p_grow", True) in sources
        assert ("eq_section", False) in sources
        assert not any(u.source == "p_narrow" for u in trace.updates)

    def test_step_extends_a_consistent_prefix(self, corpus_models):
        model = corpus_models["flowvalve"]
        trace = run(model, 2)
        extended = step(model, 3, trace)
        assert extended.snapshots[:3] == trace.snapshots
        assert len(extended.snapshots) == 4


class TestEventCompletion:
    def test_separation_only_at_completion(self, corpus_models):
        trace = run(corpus_models["flowvalve"], 5)
        for snap in trace.snapshots:
            assert ("s_separated" in snap.holding) == (snap.tick >= 4)
        completion = [c for c in trace.completions if c.event == "ev_cut"]
        assert completion and completion[0].tick == 4

    def test_valve_output_continuity(self, corpus_models):
        trace = run(corpus_models["flowvalve"], 5)
        assert trace.first_holding_tick("s_half_closed") == 5
        assert trace.first_holding_tick("s_half_flow") == 5
        completion = [c for c in trace.completions if c.event == "ev_close"]
        assert completion and completion[0].tick == 5

    def test_processes_linked_directly_run_together(self, corpus_models):
        trace = run(corpus_models["flowvalve"], 5)
        for snap in trace.snapshots:
            assert ("p_close" in snap.active) == ("p_flow_drop" in snap.active)

    def test_quiet_tick_extends_trace_unchanged(self, corpus_models):
        model = corpus_models["flowvalve"]
        t6, t8 = run(model, 6), run(model, 8)
        assert t8.snapshots[8].values == t6.snapshots[6].values
        assert t8.snapshots[8].holding == t6.snapshots[6].holding


class TestTriggers:
    def test_wall_removal_fires_move(self, corpus_models):
        model = corpus_models["wall"]
        trace = run(model, 8)
        act = trace.activation_of("p_move")
        assert act is not None and act.tick == 5
        assert act.last_flips == ("pc_wall",)
        assert trace.series("pos") == [F(0)] * 6 + [F(1), F(2), F(3)]

    def test_trigger_check_before_and_after_removal(self, corpus_models):
        model = corpus_models["wall"]
        trace = run(model, 8)
        spec = activation_spec(model, "p_move")
        before = trigger_check(model, spec, trace, tick=4)
        assert not before.fire
        assert before.blocking == ("pc_wall",)
        after = trigger_check(model, spec, trace, tick=5)
        assert after.fire and after.last_flips == ("pc_wall",)

    def test_wall_never_removed_never_fires(self, corpus_dir):
        text = (corpus_dir / "wall.cm").read_text(encoding="utf-8")
        variant = text.replace("state s_wall of wall prop present from 0 upto 5",
                               "state s_wall of wall prop present from 0 upto open")
        assert variant != text
        parsed = dsl.parse(variant, filename="wall-variant.cm")
        assert parsed.ok
        trace = run(parsed.model, 8)
        assert trace.activation_of("p_move") is None
        assert trace.series("pos") == [F(0)] * 9

    def test_missing_force_never_fires(self, corpus_dir):
        text = (corpus_dir / "wall.cm").read_text(encoding="utf-8")
        variant = text.replace(
            "state s_force of pusher prop pushing from 0 upto open",
            "state s_force of pusher prop pushing")
        assert variant != text
        parsed = dsl.parse(variant, filename="wall-variant.cm")
        assert parsed.ok
        trace = run(parsed.model, 8)
        assert trace.activation_of("p_move") is None

    def test_zero_preconditions_fire_immediately(self):
        model = Model(
            entities={"fan": Entity("fan")},
            processes={"p_hum": Process("p_hum", frozenset({"fan"}), (),
                                        intransitive=True)},
            triggers={"p_hum": TriggerDecl("p_hum", None)},
            contexts={"main": Context("main")},
        )
        assert validate(model) == []
        trace = run(model, 3)
        act = trace.activation_of("p_hum")
        assert act is not None and act.tick == 0 and act.last_flips == ()

    def test_unknown_state_rejected(self, corpus_models):
        from causalfn.core import Precondition
        from causalfn.sim import ActivationSpec
        model = corpus_models["wall"]
        trace = run(model, 2)
        ghost = ActivationSpec("p_move", (Precondition("pc_x", "p_move",
                                                       "facilitative",
                                                       "s_ghost"),), ())
        with pytest.raises(UnknownState):
            trigger_check(model, ghost, trace, tick=1)


class TestVerify:
    def test_piston_simultaneity_and_identity(self, corpus_models):
        model = corpus_models["piston"]
        trace = run(model, 8)
        report = verify_trace(model, trace)
        assert report.clean
        for snap in trace.snapshots:
            assert snap.values["x"] == snap.values["y"]

    def test_tampered_resultant_onset_is_flagged(self, corpus_models):
        model = corpus_models["flowvalve"]
        trace = run(model, 5)
        snap = trace.snapshots[2]
        trace.snapshots[2] = TickSnapshot(
            snap.tick, snap.values, snap.holding | {"s_separated"},
            snap.active)
        report = verify_trace(model, trace)
        assert any(v.kind == "resultant-onset" and v.tick == 2
                   for v in report.violations)

    def test_tampered_activity_breaks_simultaneity(self, corpus_models):
        model = corpus_models["piston"]
        trace = run(model, 8)
        snap = trace.snapshots[3]
        trace.snapshots[3] = TickSnapshot(
            snap.tick, snap.values, snap.holding,
            snap.active - {"p_rotate"})
        report = verify_trace(model, trace)
        assert any(v.kind == "simultaneity" for v in report.violations)

    def test_tampered_values_break_equation_exactness(self, corpus_models):
        model = corpus_models["bloodclot"]
        trace = run(model, 10)
        snap = trace.snapshots[4]
        values = dict(snap.values)
        values["z"] += F(1, 7)
        trace.snapshots[4] = TickSnapshot(snap.tick, values, snap.holding,
                                          snap.active)
        report = verify_trace(model, trace)
        assert any(v.kind == "equation" and v.tick == 4
                   for v in report.violations)

    def test_corpus_traces_verify_clean(self, corpus_models):
        horizons = {"bloodclot": 10, "piston": 8, "flowvalve": 5,
                    "switch": 8, "wall": 8}
        for name, horizon in horizons.items():
            model = corpus_models[name]
            assert verify_trace(model, run(model, horizon)).clean, name


class TestExports:
    def test_ldjson_one_record_per_tick(self, corpus_models):
        import json
        trace = run(corpus_models["bloodclot"], 10)
        lines = to_ldjson(trace).strip().split("\n")
        assert len(lines) == 11
        record = json.loads(lines[9])
        assert record["values"]["z"] == "7/2"
        assert any(a["occurrent"] == "s_ischemia"
                   for a in record["activations"])

    def test_csv_columns_exact(self, corpus_models):
        trace = run(corpus_models["bloodclot"], 10)
        lines = to_csv(trace).strip().split("\n")
        assert lines[0] == "tick,x,y,z"
        assert lines[1] == "0,10,2,8"
        assert lines[10] == "9,10,13/2,7/2"
