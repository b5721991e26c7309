"""Command-line interface: verbs, formats, exit codes, config files."""

import json

from csbmlab.cli import main
from csbmlab.graphs import Graph


def run(args):
    return main(args)


class TestSample:
    def test_planted_with_latents(self, tmp_path, capsys):
        prefix = str(tmp_path / "smp")
        code = run(["sample", "--model", "P", "--n", "60", "--lambda", "1.5",
                    "--s", "0.8", "--eps", "0.3", "--seed", "5",
                    "--out", prefix, "--format", "json"])
        assert code == 0
        a = Graph.from_json((tmp_path / "smp_A.json").read_text())
        b = Graph.from_json((tmp_path / "smp_B.json").read_text())
        assert a.n_vertices == b.n_vertices == 60
        latent = json.loads((tmp_path / "smp_latent.json").read_text())
        assert len(latent["sigma"]) == 60
        assert sorted(latent["pi"]) == list(range(60))

    def test_null_text_format(self, tmp_path):
        prefix = str(tmp_path / "null")
        code = run(["sample", "--model", "Q", "--n", "40", "--lambda", "2.0",
                    "--s", "0.5", "--out", prefix, "--format", "csv"])
        assert code == 0
        g = Graph.from_text((tmp_path / "null_A.txt").read_text())
        assert g.n_vertices == 40

    def test_truncated_model(self, tmp_path):
        prefix = str(tmp_path / "tr")
        code = run(["sample", "--model", "Pprime", "--n", "80", "--lambda", "1.8",
                    "--s", "0.7", "--eps", "0.4", "--N", "4", "--out", prefix])
        assert code == 0
        assert (tmp_path / "tr_latent.json").exists()

    def test_deterministic(self, tmp_path):
        p1, p2 = str(tmp_path / "x"), str(tmp_path / "y")
        for prefix in (p1, p2):
            run(["sample", "--model", "Q", "--n", "50", "--lambda", "1.0",
                 "--s", "0.9", "--seed", "3", "--out", prefix])
        assert (tmp_path / "x_A.json").read_text() == (tmp_path / "y_A.json").read_text()


class TestDetect:
    def test_roundtrip(self, tmp_path):
        prefix = str(tmp_path / "d")
        run(["sample", "--model", "P", "--n", "60", "--lambda", "2.0",
             "--s", "0.9", "--seed", "2", "--out", prefix])
        out = tmp_path / "decision.json"
        code = run(["detect", "--input-a", f"{prefix}_A.json",
                    "--input-b", f"{prefix}_B.json", "--aleph", "3",
                    "--lambda", "2.0", "--s", "0.9", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert set(payload) >= {"f_value", "tau", "decision", "per_shape"}
        assert payload["decision"] in ("planted", "null")
        assert len(payload["per_shape"]) == 2  # |catalog| at aleph=3

    def test_size_mismatch_is_usage_error(self, tmp_path):
        ga, gb = tmp_path / "a.json", tmp_path / "b.json"
        ga.write_text(Graph.empty(5).to_json())
        gb.write_text(Graph.empty(6).to_json())
        code = run(["detect", "--input-a", str(ga), "--input-b", str(gb),
                    "--aleph", "2", "--lambda", "1.0", "--s", "0.5"])
        assert code == 2


class TestSweep:
    def test_writes_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = run(["sweep", "--n", "100", "--lambda", "2.0", "--s-grid",
                    "0.5,0.9", "--aleph", "2", "--trials", "4",
                    "--seed", "1", "--out", str(out), "--format", "csv"])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# schema=")
        assert any(l.startswith("s,") for l in lines)


class TestVerify:
    def test_verify_passes(self, tmp_path):
        out = tmp_path / "report.json"
        code = run(["verify", "--seed", "0", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["all_passed"] is True
        assert len(payload["checks"]) >= 12


class TestTrees:
    def test_json_listing(self, capsys):
        code = run(["trees", "--aleph", "3"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["shapes"]) == 2
        assert {s["aut"] for s in payload["shapes"]} == {2, 6}

    def test_csv_counts(self, capsys):
        code = run(["trees", "--aleph", "5", "--format", "csv"])
        assert code == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "aleph,count"
        assert out[1:] == ["1,1", "2,1", "3,2", "4,3", "5,6"]


class TestAnalyze:
    def test_triangle_report(self, tmp_path, capsys):
        path = tmp_path / "tri.json"
        path.write_text(Graph.build([(0, 1), (1, 2), (0, 2)], n=3).to_json())
        code = run(["analyze", "--input", str(path), "--N", "3"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["cycles_by_length"] == {"3": 1}
        assert payload["is_admissible"] is False  # contains a 3-cycle

    def test_large_n_regime_override(self, tmp_path, capsys):
        path = tmp_path / "k5.json"
        path.write_text(Graph.complete(5).to_json())
        code = run(["analyze", "--input", str(path), "--N", "3",
                    "--phi-n", "1e126"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["is_bad"] is True
        assert payload["is_self_bad"] is True


class TestConfigAndErrors:
    def test_config_file_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "lab.cfg"
        cfg.write_text("aleph=4\nformat=csv\n")
        code = run(["--config", str(cfg), "trees"])
        assert code == 0
        out = capsys.readouterr().out.splitlines()
        assert out[-1] == "4,3"

    def test_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("nonsense line\n")
        assert run(["--config", str(cfg), "trees", "--aleph", "2"]) == 2

    def test_usage_error_exit_code(self, capsys):
        assert run(["sample", "--model", "X", "--n", "10",
                    "--lambda", "1.0", "--s", "0.5"]) == 2

    def test_missing_file(self, capsys):
        assert run(["analyze", "--input", "/nonexistent/g.json"]) == 2
