import json
import subprocess
import sys

import numpy as np
import pytest

from causalcorr import bell as bm
from causalcorr import classical as cm
from causalcorr import dist as dm
from causalcorr import graph as gm
from causalcorr import quantum as qm
from causalcorr.cli import run

from conftest import bell_graph, pr_box_dist


@pytest.fixture
def bell_files(tmp_path):
    graph_path = tmp_path / "bell.json"
    dist_path = tmp_path / "pr_box.json"
    graph_path.write_text(json.dumps(gm.graph_to_dict(bm.make_bell_graph(
        bm.BellScenario(settings=(2, 2), outcomes=(2, 2))
    ))))
    dist_path.write_text(json.dumps(dm.dist_to_dict(pr_box_dist())))
    return graph_path, dist_path


def run_json(argv, capsys):
    code = run([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


class TestExitCodes:
    def test_check_correlation_pr_box(self, bell_files, capsys):
        graph_path, dist_path = bell_files
        code, payload = run_json(
            ["check-correlation", "--graph", graph_path, "--dist", dist_path], capsys
        )
        assert code == 0
        assert payload["is_correlation"] is True

    def test_bell_local_pr_box_fails_with_residual(self, bell_files, capsys):
        _, dist_path = bell_files
        code, payload = run_json(["bell-local", "--dist", dist_path], capsys)
        assert code == 1
        assert payload["is_local"] is False
        assert payload["max_residual"] > 0

    def test_missing_file_is_usage_error(self, capsys):
        code = run(["eval-classical", "--model", "missing.json"])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_malformed_json_is_usage_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(["graph-validate", "--graph", str(bad)]) == 2

    def test_unknown_flag_is_usage_error(self, bell_files, capsys):
        graph_path, _ = bell_files
        assert run(["graph-validate", "--graph", str(graph_path), "--bogus"]) == 2

    def test_check_correlation_failing_verdict(self, bell_files, tmp_path, capsys):
        graph_path, _ = bell_files
        # party 2's outcome copies party 1's setting: signalling
        table = np.zeros((1, 2, 2, 2, 2))
        for x, y, a in np.ndindex(2, 2, 2):
            table[0, x, y, a, x] = 1 / 8
        bad = dm.JointDistribution(
            (("s", 1), ("x1", 2), ("x2", 2), ("a1", 2), ("a2", 2)), table
        )
        dist_path = tmp_path / "signalling.json"
        dist_path.write_text(json.dumps(dm.dist_to_dict(bad)))
        code, payload = run_json(
            ["check-correlation", "--graph", graph_path, "--dist", dist_path], capsys
        )
        assert code == 1
        assert payload["is_correlation"] is False
        assert payload["violations"]

    def test_graph_validate_failing_graph(self, tmp_path, capsys):
        data = {
            "nodes": [{"id": "a", "outcomes": 2}, {"id": "b", "outcomes": 2}],
            "edges": [
                {"id": "e1", "src": "a", "dst": "b"},
                {"id": "e2", "src": "b", "dst": "a"},
            ],
        }
        path = tmp_path / "cyclic.json"
        path.write_text(json.dumps(data))
        code, payload = run_json(["graph-validate", "--graph", path], capsys)
        assert code == 1
        assert payload["ok"] is False


class TestPipelines:
    def test_eval_classical_round_trip(self, tmp_path, capsys):
        g = bell_graph()
        model = cm.random_model(g, 2, seed=1)
        model_path = tmp_path / "model.json"
        model_path.write_text(json.dumps(cm.model_to_dict(model)))
        out_path = tmp_path / "joint.json"
        code = run(["eval-classical", "--model", str(model_path), "--out", str(out_path)])
        assert code == 0
        emitted = dm.dist_from_dict(json.loads(out_path.read_text()))
        np.testing.assert_array_equal(emitted.table, cm.evaluate(model).table)

    def test_hbn_round_trip_through_cli(self, tmp_path, capsys):
        g = bell_graph()
        model = cm.random_model(g, 2, seed=2)
        model_path = tmp_path / "model.json"
        model_path.write_text(json.dumps(cm.model_to_dict(model)))
        hbn_path = tmp_path / "net.json"
        assert run(["to-hbn", "--model", str(model_path), "--out", str(hbn_path)]) == 0
        back_path = tmp_path / "back.json"
        assert run(["from-hbn", "--hbn", str(hbn_path), "--out", str(back_path)]) == 0
        back = cm.model_from_dict(json.loads(back_path.read_text()))
        dev = np.abs(cm.evaluate(back).table - cm.evaluate(model).table).max()
        assert dev < 1e-12

    def test_lift_and_reroute_through_cli(self, tmp_path, capsys):
        g = gm.CausalGraph.build(
            [("u", 2), ("v", 2), ("w", 2)], [("uv", "u", "v"), ("vw", "v", "w")]
        )
        model = cm.random_model(g, 2, seed=3)
        model_path = tmp_path / "m.json"
        model_path.write_text(json.dumps(cm.model_to_dict(model)))
        lifted_path = tmp_path / "lifted.json"
        assert (
            run(
                [
                    "lift-edge",
                    "--model",
                    str(model_path),
                    "--src",
                    "u",
                    "--dst",
                    "w",
                    "--out",
                    str(lifted_path),
                ]
            )
            == 0
        )
        rerouted_path = tmp_path / "rerouted.json"
        assert (
            run(
                [
                    "reroute-edge",
                    "--model",
                    str(lifted_path),
                    "--edge",
                    "u->w#lift",
                    "--via",
                    "v",
                    "--out",
                    str(rerouted_path),
                ]
            )
            == 0
        )
        rerouted = cm.model_from_dict(json.loads(rerouted_path.read_text()))
        dev = np.abs(cm.evaluate(rerouted).table - cm.evaluate(model).table).max()
        assert dev < 1e-12

    def test_push_determinism_and_embed_quantum(self, tmp_path, capsys):
        g = bell_graph()
        model = cm.random_model(g, 2, seed=4)
        model_path = tmp_path / "m.json"
        model_path.write_text(json.dumps(cm.model_to_dict(model)))
        pushed_path = tmp_path / "pushed.json"
        assert run(["push-determinism", "--model", str(model_path), "--out", str(pushed_path)]) == 0
        pushed = cm.model_from_dict(json.loads(pushed_path.read_text()))
        assert np.abs(cm.evaluate(pushed).table - cm.evaluate(model).table).max() < 1e-12
        q_path = tmp_path / "q.json"
        assert run(["embed-quantum", "--model", str(model_path), "--out", str(q_path)]) == 0
        q = qm.model_from_dict(json.loads(q_path.read_text()))
        assert np.abs(qm.evaluate(q).table - cm.evaluate(model).table).max() < 1e-10

    def test_eval_quantum_command(self, tmp_path, capsys):
        g = bell_graph()
        model = qm.random_model(g, 2, seed=5)
        path = tmp_path / "q.json"
        path.write_text(json.dumps(qm.model_to_dict(model)))
        out_path = tmp_path / "joint.json"
        assert run(["eval-quantum", "--model", str(path), "--out", str(out_path)]) == 0
        emitted = dm.dist_from_dict(json.loads(out_path.read_text()))
        np.testing.assert_array_equal(emitted.table, qm.evaluate(model).table)

    def test_eval_hbn_command(self, tmp_path, capsys):
        from causalcorr import hbn as hm

        g = bell_graph()
        net = hm.random_hbn(g, 2, seed=5)
        path = tmp_path / "net.json"
        path.write_text(json.dumps(hm.hbn_to_dict(net)))
        out_path = tmp_path / "joint.json"
        assert run(["eval-hbn", "--hbn", str(path), "--out", str(out_path)]) == 0
        emitted = dm.dist_from_dict(json.loads(out_path.read_text()))
        np.testing.assert_array_equal(emitted.table, hm.evaluate(net).table)

    def test_bell_check_ns_command(self, bell_files, capsys):
        _, dist_path = bell_files
        code, payload = run_json(["bell-check-ns", "--dist", dist_path], capsys)
        assert code == 0
        assert payload["passes"] is True

    def test_tol_flag_is_honored(self, bell_files, capsys):
        graph_path, dist_path = bell_files
        code, payload = run_json(
            ["check-correlation", "--graph", graph_path, "--dist", dist_path, "--tol", "0.5"],
            capsys,
        )
        assert code == 0
        assert payload["tol"] == 0.5

    def test_bell_gen_chsh_and_closure(self, tmp_path, capsys):
        code, payload = run_json(["bell-gen", "--parties", "3"], capsys)
        assert code == 0
        assert len(payload["nodes"]) == 7
        code, payload = run_json(
            ["bell-gen", "--parties", "2", "--settings", "3,2", "--outcomes", "2"], capsys
        )
        assert code == 0
        sizes = {n["id"]: n["outcomes"] for n in payload["nodes"]}
        assert sizes["x1"] == 3 and sizes["x2"] == 2

    def test_chsh_command(self, bell_files, capsys):
        _, dist_path = bell_files
        code, payload = run_json(["chsh", "--dist", dist_path], capsys)
        assert code == 0
        assert payload["chsh"] == pytest.approx(4.0)

    def test_poset_closure_command(self, tmp_path, capsys):
        g = gm.CausalGraph.build(
            [("u", 2), ("v", 2), ("w", 2)], [("uv", "u", "v"), ("vw", "v", "w")]
        )
        path = tmp_path / "g.json"
        path.write_text(json.dumps(gm.graph_to_dict(g)))
        code, payload = run_json(["poset-closure", "--graph", path], capsys)
        assert code == 0
        assert {e["id"] for e in payload["edges"]} == {"uv", "vw", "u->w#tc"}

    def test_compress_cg_command(self, tmp_path, capsys):
        f = [[(i + j) % 2 for j in range(3)] for i in range(3)]
        dist_path = tmp_path / "p.json"
        dist_path.write_text(
            json.dumps(
                dm.dist_to_dict(
                    dm.JointDistribution((("v1", 3), ("v2", 3)), np.full((3, 3), 1 / 9))
                )
            )
        )
        cg_path = tmp_path / "cg.json"
        cg_path.write_text(json.dumps({"domain": [3, 3], "codomain": 2, "map": sum(f, [])}))
        code, payload = run_json(
            ["compress-cg", "--dist", dist_path, "--cg", cg_path, "--eps", "0"], capsys
        )
        assert code == 0
        assert sum(payload["sizes"]) == 4
        assert payload["achieved_error"] == 0.0

    def test_bell_quantum_setup(self, tmp_path, capsys):
        def enc(mat):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat, dtype=complex)]

        eye = np.eye(2)
        comp0 = [enc(np.diag([1.0, 0.0])), enc(np.diag([0.0, 1.0]))]
        setup = {
            "scenario": {"settings": [2, 2], "outcomes": [2, 2], "source_outcomes": 1},
            "states": [[[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]],
            "povms": [[comp0, comp0], [comp0, comp0]],
            "setting_dists": [[0.5, 0.5], [0.5, 0.5]],
            "source_dist": [1.0],
        }
        path = tmp_path / "setup.json"
        path.write_text(json.dumps(setup))
        out_path = tmp_path / "qmodel.json"
        assert run(["bell-quantum", "--model", str(path), "--out", str(out_path)]) == 0
        model = qm.model_from_dict(json.loads(out_path.read_text()))
        assert qm.validate_model(model) == []
        joint = qm.evaluate(model)
        assert abs(joint.table.sum() - 1.0) < 1e-9


class TestEntryPoint:
    def test_module_invocation(self, bell_files):
        graph_path, dist_path = bell_files
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "causalcorr.cli",
                "check-correlation",
                "--graph",
                str(graph_path),
                "--dist",
                str(dist_path),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["is_correlation"] is True

    def test_version_flag(self, capsys):
        assert run(["--version"]) == 0
        assert "causalcorr" in capsys.readouterr().out
