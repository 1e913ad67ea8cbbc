from __future__ import annotations

import pytest

from causalfn.explain import (
    KIND_ABSENT, KIND_LINK, KIND_PRIMITIVE, KIND_WHY,
    contains_spine, explain, leaf_kinds, to_json, to_text,
)


class TestDogTree:
    def test_spine_maintain_disallows_allows(self, corpus_models):
        tree = explain(corpus_models["dog"], "ev_lose_sight")
        assert contains_spine(tree, [
            ("Allows", "ev_lose_sight"),
            ("Disallows", "ev_cure"),
            ("Maintain", "m_stay"),
        ])

    def test_bite_also_allows_the_outcome(self, corpus_models):
        tree = explain(corpus_models["dog"], "ev_lose_sight")
        sources = {n.subject for n in tree.children if n.kind == KIND_LINK}
        assert "ev_bite" in sources and "s_diseased" in sources

    def test_text_rendering_mentions_the_chain(self, corpus_models):
        text = to_text(explain(corpus_models["dog"], "ev_lose_sight"))
        assert text.startswith("why ev_lose_sight")
        assert "Disallows s_at_home -> ev_cure" in text
        assert "Maintain m_stay -> s_at_home" in text


class TestDeliveryTree:
    def test_three_level_disallows_chain(self, corpus_models):
        tree = explain(corpus_models["delivery"], "ev_breakdown")
        assert contains_spine(tree, [
            ("Allows", "ev_breakdown"),
            ("Disallows", "ev_fix"),
            ("Disallows", "ev_delivery"),
        ])

    def test_unnamed_event_grounds_as_primitive(self, corpus_models):
        tree = explain(corpus_models["delivery"], "ev_breakdown")
        assert contains_spine(tree, [
            ("Disallows", "ev_delivery"),
            ("primitive", "ev_unknown"),
        ])


class TestTreeShape:
    def test_no_incoming_links_single_node(self, corpus_models):
        tree = explain(corpus_models["piston"], "p_push")
        assert tree.kind == KIND_WHY
        assert tree.children == ()

    def test_corpus_explanations_ground_out(self, corpus_models):
        """Every leaf of every corpus explanation is an achieves derivation,
        a maintain, or a declared primitive."""
        for name, model in corpus_models.items():
            for occ_id in model.occurrent_ids():
                tree = explain(model, occ_id)
                for kind in leaf_kinds(tree):
                    assert kind in ("achieves", "maintain", "primitive",
                                    "unexplained"), (name, occ_id, kind)
                    assert not kind.startswith("dangling-"), (name, occ_id)

    def test_json_rendering(self, corpus_models):
        doc = to_json(explain(corpus_models["switch"], "p_machine_work"))
        assert doc["kind"] == KIND_WHY
        assert doc["children"][0]["derivation"]["rule"] == "def2-i"
