import json
from fractions import Fraction as F

import pytest

from martlab.cli import main
from martlab.modelio import Model, NamedProcess, load_model, save_model
from martlab.models import binary_tree_space
from martlab.processes import ProcessPath


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture
def tree_model(tmp_path):
    out = tmp_path / "tree.json"
    assert run(["generate", "--generator", "binary_tree", "--params", "depth=3", "--out", out]) == 0
    return out


@pytest.fixture
def dyadic_model(tmp_path):
    out = tmp_path / "dyadic.json"
    args = ["generate", "--generator", "dyadic_walk", "--params", "grid_level=5,branch_level=2", "--out", out]
    assert run(args) == 0
    return out


class TestGenerate:
    def test_binary_tree_writes_eight_outcomes(self, tree_model):
        model = load_model(tree_model)
        assert model.space.size == 8

    def test_same_seed_same_bytes(self, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        for out in (a, b):
            assert run(
                ["generate", "--generator", "randomized", "--seed", 7, "--out", out]
            ) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_depth_cap_exits_2(self, tmp_path):
        code = run(
            ["generate", "--generator", "binary_tree", "--params", "depth=20", "--out", tmp_path / "x.json"]
        )
        assert code == 2

    def test_unknown_generator_exits_2(self, tmp_path):
        assert run(["generate", "--generator", "nope", "--out", tmp_path / "x.json"]) == 2

    def test_unknown_param_exits_2(self, tmp_path):
        code = run(
            ["generate", "--generator", "binary_tree", "--params", "depht=3", "--out", tmp_path / "x.json"]
        )
        assert code == 2

    def test_every_generator_round_trips(self, tmp_path):
        cases = [
            ("binary_tree", "depth=2,p_up=1/3"),
            ("dyadic_walk", "grid_level=4,branch_level=1"),
            ("poisson", "depth=2,p_jump=1/2,law=2:1/2;0:1/2"),
            ("randomized", "max_outcomes=12,max_steps=4"),
        ]
        for generator, params in cases:
            out = tmp_path / f"{generator}.json"
            assert run(
                ["generate", "--generator", generator, "--params", params, "--seed", 3, "--out", out]
            ) == 0
            assert run(["verify", "--model", out, "--suite", "all"]) == 0


class TestVerify:
    def test_quadratic_suite_on_walk(self, tree_model, capsys):
        assert run(["verify", "--model", tree_model, "--suite", "quadratic"]) == 0
        text = capsys.readouterr().out
        assert "energy_identity:walk" in text
        assert "summary" in text

    def test_corrupted_probs_exit_2(self, tree_model, tmp_path, capsys):
        doc = json.loads(tree_model.read_text())
        doc["space"]["probs"][0] = "1/2"
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert run(["verify", "--model", bad, "--suite", "all"]) == 2
        assert "space" in capsys.readouterr().err

    def test_mislabeled_biased_walk_exits_1_with_witness(self, tmp_path, capsys):
        space, filt = binary_tree_space(2, F(2, 3))
        biased = ProcessPath(filt, [[0] * 4, [1, 1, -1, -1], [2, 0, 0, -2]])
        model = Model(space, filt, (NamedProcess("claimed", "martingale", biased),), ())
        path = tmp_path / "biased.json"
        save_model(model, path)
        assert run(["verify", "--model", path, "--suite", "martingale"]) == 1
        out = capsys.readouterr().out
        assert "FAILED" in out
        assert "1/3" in out
        assert "block" in out

    def test_report_written_and_deterministic(self, tree_model, tmp_path):
        r1 = tmp_path / "r1.tsv"
        r2 = tmp_path / "r2.tsv"
        for r in (r1, r2):
            assert run(
                ["verify", "--model", tree_model, "--suite", "compensator", "--report", r]
            ) == 0
        assert r1.read_bytes() == r2.read_bytes()
        assert (tmp_path / "r1.png").exists()

    def test_no_figures_flag(self, tree_model, tmp_path):
        r = tmp_path / "r.tsv"
        assert run(
            ["verify", "--model", tree_model, "--suite", "mazur", "--report", r, "--no-figures"]
        ) == 0
        assert r.exists()
        assert not (tmp_path / "r.png").exists()


class TestPipelineCommand:
    def test_single_jump_levels_2_to_5(self, dyadic_model):
        code = run(
            [
                "pipeline",
                "--model",
                dyadic_model,
                "--pipeline",
                "compensator",
                "--process",
                "single_jump",
                "--levels",
                "2..5",
                "--window",
                2,
            ]
        )
        assert code == 0

    def test_constant_window_one_report(self, dyadic_model, tmp_path, capsys):
        report = tmp_path / "pipe.tsv"
        code = run(
            [
                "pipeline",
                "--model",
                dyadic_model,
                "--pipeline",
                "compensator",
                "--levels",
                "0..5",
                "--window",
                1,
                "--report",
                report,
            ]
        )
        assert code == 0
        text = report.read_text()
        assert "degenerate" in text
        assert "passed\ttrue" in text
        assert (tmp_path / "pipe.png").exists()

    def test_qv_pipeline_runs(self, dyadic_model):
        code = run(
            ["pipeline", "--model", dyadic_model, "--pipeline", "qv", "--levels", "0..5", "--window", 4]
        )
        assert code == 0

    def test_exact_mazur_flag(self, dyadic_model):
        code = run(
            [
                "pipeline",
                "--model",
                dyadic_model,
                "--pipeline",
                "qv",
                "--levels",
                "0..5",
                "--window",
                4,
                "--exact-mazur",
            ]
        )
        assert code == 0

    def test_levels_not_reaching_grid_exit_2(self, dyadic_model):
        code = run(
            ["pipeline", "--model", dyadic_model, "--pipeline", "qv", "--levels", "0..3", "--window", 2]
        )
        assert code == 2

    def test_report_bytes_stable(self, dyadic_model, tmp_path):
        reports = []
        for name in ("p1.tsv", "p2.tsv"):
            r = tmp_path / name
            assert run(
                [
                    "pipeline",
                    "--model",
                    dyadic_model,
                    "--pipeline",
                    "compensator",
                    "--process",
                    "single_jump",
                    "--levels",
                    "0..5",
                    "--window",
                    4,
                    "--report",
                    r,
                    "--no-figures",
                ]
            ) == 0
            reports.append(r.read_bytes())
        assert reports[0] == reports[1]
