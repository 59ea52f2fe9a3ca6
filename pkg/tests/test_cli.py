import json

import pytest

from compsel.cli import main

CATALOG = {
    "format_version": "1",
    "components": [
        {"id": "A", "name": "suite", "provides": ["r1", "r2"], "cost": 3,
         "quality": {"reliability": 5, "security": 9}, "spec": {"memory": 256}},
        {"id": "B", "name": "auth", "provides": ["r1"], "cost": 1,
         "quality": {"reliability": 10, "security": 4}, "spec": {"memory": 128}},
        {"id": "C", "name": "store", "provides": ["r2"], "cost": 1,
         "quality": {"reliability": 2, "security": 10}, "spec": {"memory": 512}},
    ],
}
WEIGHTS = {"reliability": 0.5, "security": 0.5}
SAMPLES = "selection,latency,throughput\nA,40,9\nB,55,4\nC,21,12\nA;B,80,13\nB;C,69,17\nA;C,55,20\nA;B;C,101,25\n"


@pytest.fixture
def files(tmp_path, write_json):
    def make(spec=None, catalog=CATALOG, weights=WEIGHTS, samples=SAMPLES):
        paths = {
            "catalog": write_json("catalog.json", catalog),
            "weights": write_json("weights.json", weights),
            "spec": write_json("spec.json", spec or {"requirements": ["r1", "r2"]}),
            "samples": tmp_path / "samples.csv",
            "model": tmp_path / "model.json",
            "out": tmp_path / "result.json",
        }
        paths["samples"].write_text(samples)
        return {k: str(v) for k, v in paths.items()}
    return make


def _args(paths, *keys):
    out = []
    for k in keys:
        out += [f"--{k}", paths[k]]
    return out


class TestFit:
    def test_two_metrics(self, files, capsys):
        p = files({"requirements": ["r1"], "perf_requirements": [{"metric": "latency", "op": "le", "bound": 70}]})
        code = main(["fit", *_args(p, "catalog", "samples", "spec"), "--out", p["model"]])
        assert code == 0
        model = json.load(open(p["model"]))
        assert set(model["metrics"]) == {"latency", "throughput"}
        assert model["metrics"]["latency"]["n_samples"] == 7
        assert set(model["cond_prob"]) == {"A", "B", "C"}
        out = capsys.readouterr().out
        assert "latency" in out and "throughput" in out

    def test_spec_metric_missing(self, files, capsys):
        p = files({"requirements": ["r1"], "perf_requirements": [{"metric": "power", "op": "le", "bound": 1}]})
        assert main(["fit", *_args(p, "catalog", "samples", "spec"), "--out", p["model"]]) == 1
        assert "power" in capsys.readouterr().err

    def test_empty_samples(self, files, capsys):
        p = files(samples="")
        assert main(["fit", *_args(p, "catalog", "samples"), "--out", p["model"]]) == 1
        assert "samples.csv" in capsys.readouterr().err

    def test_bad_cell_names_line(self, files, capsys):
        p = files(samples="selection,latency\nA,1\nB,slow\n")
        assert main(["fit", *_args(p, "catalog", "samples"), "--out", p["model"]]) == 1
        assert "line 3" in capsys.readouterr().err


class TestScore:
    def test_table(self, files, capsys):
        p = files()
        assert main(["score", *_args(p, "catalog", "weights")]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "component_id,reliability,security,pliability"
        assert len(lines) == 4
        # A: reliability 5/10*10 = 5, security 9/10*10 = 9, pliability 7
        assert lines[1] == "A,5.0,9.0,7.0"

    def test_bad_sum(self, files, capsys):
        p = files(weights={"reliability": 0.5, "security": 0.4})
        assert main(["score", *_args(p, "catalog", "weights")]) == 1
        assert "0.9" in capsys.readouterr().err

    def test_renormalize(self, files, capsys):
        p = files(weights={"reliability": 0.5, "security": 0.4})
        assert main(["score", *_args(p, "catalog", "weights"), "--renormalize-weights"]) == 0
        captured = capsys.readouterr()
        assert "warning" in captured.err and "0.9" in captured.err
        assert len(captured.out.strip().splitlines()) == 4


class TestSelect:
    def test_feasible(self, files, capsys):
        p = files()
        code = main(["select", *_args(p, "catalog", "spec", "weights", "out")])
        assert code == 0
        result = json.load(open(p["out"]))
        assert result["status"] == "feasible"
        assert result["selection"] == ["B", "C"]
        assert "seed: 0" in capsys.readouterr().out

    def test_uncoverable(self, files, capsys):
        p = files({"requirements": ["r1", "r9"]})
        assert main(["select", *_args(p, "catalog", "spec", "weights", "out")]) == 1
        assert "r9" in capsys.readouterr().err

    def test_spec_filter_shrinks_search(self, files, capsys):
        # C (memory 512) is filtered out; greedy takes B (ratio 1) then A for r2
        p = files({"requirements": ["r1", "r2"], "constraints": [{"attribute": "memory", "op": "le", "value": 256}]})
        assert main(["select", *_args(p, "catalog", "spec", "weights", "out"), "--algorithm", "greedy"]) == 0
        assert json.load(open(p["out"]))["selection"] == ["A", "B"]
        assert "spec 2" in capsys.readouterr().out

    def test_filtered_requirement_is_uncoverable(self, files, capsys):
        p = files({"requirements": ["r1", "r2"], "constraints": [{"attribute": "memory", "op": "le", "value": 128}]})
        assert main(["select", *_args(p, "catalog", "spec", "weights", "out")]) == 1
        assert "r2" in capsys.readouterr().err

    def test_perf_infeasible(self, files):
        spec = {"requirements": ["r1", "r2"], "perf_requirements": [{"metric": "latency", "op": "le", "bound": 10}]}
        p = files(spec)
        assert main(["fit", *_args(p, "catalog", "samples", "spec"), "--out", p["model"]]) == 0
        code = main(["select", *_args(p, "catalog", "spec", "weights", "model", "out"), "--max-rounds", "3"])
        assert code == 2
        result = json.load(open(p["out"]))
        assert result["status"] == "infeasible-best-effort"
        assert result["rounds_used"] == 3

    def test_model_required(self, files, capsys):
        p = files({"requirements": ["r1"], "perf_requirements": [{"metric": "latency", "op": "le", "bound": 10}]})
        assert main(["select", *_args(p, "catalog", "spec", "weights")]) == 1
        assert "--model" in capsys.readouterr().err

    def test_rerun_is_byte_identical(self, files, tmp_path):
        p = files()
        second = str(tmp_path / "again.json")
        main(["select", *_args(p, "catalog", "spec", "weights", "out"), "--seed", "17"])
        main(["select", *_args(p, "catalog", "spec", "weights"), "--seed", "17", "--out", second])
        assert open(p["out"], "rb").read() == open(second, "rb").read()

    def test_exhaustive_equals_oracle(self, files, tmp_path):
        p = files()
        other = str(tmp_path / "oracle.json")
        assert main(["select", *_args(p, "catalog", "spec", "weights", "out"), "--algorithm", "exhaustive"]) == 0
        assert main(["oracle", *_args(p, "catalog", "spec", "weights"), "--out", other]) == 0
        assert json.load(open(p["out"])) == json.load(open(other))

    def test_sa_overrides(self, files):
        p = files()
        args = ["--sa-t0", "2.0", "--sa-alpha", "0.8", "--sa-steps", "10", "--algorithm", "sa"]
        assert main(["select", *_args(p, "catalog", "spec", "weights", "out"), *args]) == 0
        assert main(["select", *_args(p, "catalog", "spec", "weights", "out"), "--sa-alpha", "1.5"]) == 1

    def test_threshold_override(self, files):
        p = files()
        # pliabilities: A 7.0, B 7.0, C 6.0
        code = main(["select", *_args(p, "catalog", "spec", "weights", "out"), "--pliability-threshold", "6.5"])
        assert code == 0
        assert json.load(open(p["out"]))["selection"] == ["A"]


class TestOracle:
    def test_three_components(self, files):
        p = files()
        assert main(["oracle", *_args(p, "catalog", "spec", "weights", "out")]) == 0
        assert json.load(open(p["out"]))["selection"] == ["B", "C"]

    def test_guard(self, files):
        big = {"components": [{"id": f"c{k:02d}", "provides": ["r1"], "cost": 1, "quality": {"reliability": 1}}
                              for k in range(21)]}
        p = files({"requirements": ["r1"]}, catalog=big, weights={"reliability": 1})
        assert main(["oracle", *_args(p, "catalog", "spec", "weights", "out")]) == 1

    def test_infeasible(self, files):
        p = files({"requirements": ["r1", "r2", "r3"]})
        assert main(["oracle", *_args(p, "catalog", "spec", "weights", "out")]) == 2
        assert json.load(open(p["out"]))["uncovered"] == ["r3"]


class TestUsage:
    @pytest.mark.parametrize("argv", [
        [],
        ["bogus"],
        ["select", "--algorithm", "genetic"],
        ["select", "--seed", "x"],
        ["score", "--catalog", "/nonexistent/catalog.json", "--weights", "/nonexistent/w.json"],
    ])
    def test_exit_one(self, argv):
        assert main(argv) == 1

    def test_help(self, capsys):
        assert main(["--help"]) == 0
