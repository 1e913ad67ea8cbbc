from __future__ import annotations

import io
import json
import shutil

import pytest

from causalfn import cli


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def claim3_file(tmp_path):
    path = tmp_path / "bad.cm"
    path.write_text(
        "entity a\n"
        "event ev_a by a from 0 upto 1\n"
        "event ev_b by a from 1 upto 2\n"
        "assert-link direct ev_a -> ev_b\n",
        encoding="utf-8")
    return path


class TestCheck:
    def test_valid_model_exits_zero(self, corpus_dir):
        code, out, err = run_cli("check", str(corpus_dir / "robbery.cm"))
        assert code == 0
        assert "ok" in out

    def test_claim3_file_exits_one(self, claim3_file):
        code, out, err = run_cli("check", str(claim3_file))
        assert code == 1
        assert "CLAIM3" in err

    def test_missing_file_exits_two(self, tmp_path):
        code, out, err = run_cli("check", str(tmp_path / "nope.cm"))
        assert code == 2
        assert "cannot read" in err


class TestClassify:
    def test_lock_disallows_robbery(self, corpus_dir):
        code, out, _ = run_cli("classify", str(corpus_dir / "robbery.cm"),
                               "ev_lock", "p_robbery")
        assert code == 0
        assert "Disallows" in out and "z=s_locked" in out

    def test_double_prevention_allows(self, corpus_dir):
        code, out, _ = run_cli("classify",
                               str(corpus_dir / "doubleprevention.cm"),
                               "ev_billy_shoots", "ev_suzy_bombs")
        assert code == 0
        assert "Allows" in out

    def test_unrelated_pair_is_empty_but_ok(self, corpus_dir):
        code, out, _ = run_cli("classify", str(corpus_dir / "robbery.cm"),
                               "p_breakin", "p_robbery")
        assert code == 0
        assert "no causal link derivable" in out

    def test_unknown_id_exits_one(self, corpus_dir):
        code, _, err = run_cli("classify", str(corpus_dir / "robbery.cm"),
                               "nothing", "p_robbery")
        assert code == 1
        assert "unknown occurrent" in err

    def test_json_format(self, corpus_dir):
        code, out, _ = run_cli("classify", str(corpus_dir / "switch.cm"),
                               "ev_switch_on", "p_machine_work",
                               "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc[0]["rule"] == "def2-i"


class TestExplain:
    def test_dog_tree_text(self, corpus_dir):
        code, out, _ = run_cli("explain", str(corpus_dir / "dog.cm"),
                               "ev_lose_sight")
        assert code == 0
        assert out.startswith("why ev_lose_sight")
        assert "Maintain m_stay -> s_at_home" in out

    def test_single_node_tree(self, corpus_dir):
        code, out, _ = run_cli("explain", str(corpus_dir / "piston.cm"),
                               "p_push")
        assert code == 0
        assert "no incoming links" in out

    def test_unknown_id(self, corpus_dir):
        code, _, err = run_cli("explain", str(corpus_dir / "dog.cm"), "ghost")
        assert code == 1


class TestSimulate:
    def test_bloodclot_clean_run_writes_traces(self, corpus_dir, tmp_path):
        code, out, err = run_cli("simulate", str(corpus_dir / "bloodclot.cm"),
                                 "--horizon", "10", "--out", str(tmp_path))
        assert code == 0, err
        assert "verification clean" in out
        csv_text = (tmp_path / "bloodclot.trace.csv").read_text()
        rows = [line.split(",") for line in csv_text.strip().split("\n")[1:]]
        z_values = [row[3] for row in rows]
        assert z_values[0] == "8" and z_values[-1] == "3"

    def test_horizon_zero_initial_snapshot_only(self, corpus_dir, tmp_path):
        code, _, _ = run_cli("simulate", str(corpus_dir / "piston.cm"),
                             "--horizon", "0", "--out", str(tmp_path))
        assert code == 0
        ldjson = (tmp_path / "piston.trace.ldjson").read_text()
        assert len(ldjson.strip().split("\n")) == 1

    def test_invalid_model_exits_one(self, claim3_file, tmp_path):
        code, _, err = run_cli("simulate", str(claim3_file),
                               "--horizon", "3", "--out", str(tmp_path))
        assert code == 1


class TestExport:
    def test_window_device_dot(self, corpus_dir):
        code, out, _ = run_cli("export", str(corpus_dir / "window.cm"),
                               "--what", "devices", "--format", "dot")
        assert code == 0
        assert out.count('label=contains') == 4
        assert '"device:ev_throw_break" -> "device:ev_travel"' in out
        assert '"device:ev_throw_break" -> "device:ev_hit"' in out

    def test_window_device_json(self, corpus_dir):
        code, out, _ = run_cli("export", str(corpus_dir / "window.cm"),
                               "--what", "devices", "--format", "json")
        doc = json.loads(out)
        assert len(doc) == 1
        assert len(doc[0]["root"]["sub_devices"]) == 2

    def test_empty_model_links_dot_is_empty_graph(self, tmp_path):
        empty = tmp_path / "empty.cm"
        empty.write_text("# nothing here\n", encoding="utf-8")
        code, out, _ = run_cli("export", str(empty), "--what", "links")
        assert code == 0
        assert "digraph links" in out
        assert "->" not in out

    def test_robbery_links_json_has_two_edges(self, corpus_dir):
        code, out, _ = run_cli("export", str(corpus_dir / "robbery.cm"),
                               "--what", "links", "--format", "json")
        doc = json.loads(out)
        assert len(doc["edges"]) == 2
        kinds = {node["id"]: node["kind"] for node in doc["nodes"]}
        assert kinds["ev_lock"] == "event"
        assert kinds["m_notlock"] == "maintain"


class TestCorpus:
    def test_shipped_corpus_all_pass(self):
        code, out, _ = run_cli("corpus")
        assert code == 0
        assert "11/11 models passed" in out

    def test_one_perturbed_expectation_fails(self, corpus_dir, tmp_path):
        work = tmp_path / "corpus"
        shutil.copytree(corpus_dir, work)
        expect = work / "robbery.expect"
        text = expect.read_text(encoding="utf-8")
        expect.write_text(
            text.replace("classify ev_lock -> p_robbery = Disallows",
                         "classify ev_lock -> p_robbery = Allows"),
            encoding="utf-8")
        code, out, _ = run_cli("corpus", str(work))
        assert code == 1
        assert "10/11 models passed" in out
        assert "FAIL" in out

    def test_empty_directory_warns(self, tmp_path):
        code, out, err = run_cli("corpus", str(tmp_path))
        assert code == 0
        assert "0/0 models passed" in out
        assert "warning" in err
