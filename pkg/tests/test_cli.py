import json
import subprocess
import sys
from pathlib import Path

import pytest

from affknn.cli import main
from affknn.io import read_dataset, read_points

from oracles import rho_oracle, sorted_neighbors

DATA = Path(__file__).parent / "data"
GOLDEN = DATA / "golden20.csv"
QUERIES = DATA / "golden20_queries.csv"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def fields(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


def test_distance_figure_fixture(capsys):
    code, out, _ = run(capsys, "distance", DATA / "figure1.csv", "--a", "8,5", "--b", "9,5")
    assert code == 0
    assert fields(out)["value"] == "4"
    assert fields(out)["total_subsets"] == "10"


def test_distance_line_and_equal_endpoints(capsys):
    assert fields(run(capsys, "distance", DATA / "line1d.csv", "--a", "0", "--b", "4")[1])["value"] == "2"
    assert fields(run(capsys, "distance", DATA / "figure1.csv", "--a", "1,1", "--b", "1,1")[1])["value"] == "0"


def test_distance_sampled_output(capsys):
    code, out, _ = run(
        capsys, "distance", DATA / "figure1.csv", "--a", "8,5", "--b", "9,5",
        "--metric", "sampled", "--m", "10", "--seed", "0",
    )
    f = fields(out)
    assert code == 0 and f["metric"] == "sampled" and f["m"] == "10"
    # Estimate is C(n,d) * cut / m with C(5,2) = 10.
    assert f["value"] == f["cut_count"]


@pytest.mark.parametrize(
    "argv",
    [
        ["distance", DATA / "figure1.csv", "--a", "1,2,3", "--b", "0,0"],
        ["distance", DATA / "figure1.csv", "--a", "x,1", "--b", "0,0"],
        ["distance", DATA / "figure1.csv", "--a", "1,1", "--b", "0,0", "--metric", "sampled"],
        ["distance", DATA / "missing.csv", "--a", "1,1", "--b", "0,0"],
        ["predict", GOLDEN, QUERIES, "--k", "0"],
        ["predict", GOLDEN, QUERIES, "--k", "21"],
        ["predict", GOLDEN, QUERIES, "--k", "3", "--metric", "cosine"],
        ["bench", "--n", "1", "--d", "2"],
        ["nonsense"],
    ],
)
def test_input_errors_exit_one_with_single_line(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1
    assert err.startswith("error: input: ")
    assert err.count("\n") == 1


@pytest.mark.parametrize("metric", ["exact", "euclidean", "rank", "sampled"])
def test_predict_matches_golden(capsys, metric):
    extra = ["--m", "300", "--seed", "7"] if metric == "sampled" else []
    code, out, _ = run(capsys, "predict", GOLDEN, QUERIES, "--k", "4", "--metric", metric, *extra)
    assert code == 0
    assert out == (DATA / f"golden20_pred_{metric}.csv").read_text()


def test_golden_exact_neighbors_agree_with_oracle():
    data = read_dataset(GOLDEN)
    lines = (DATA / "golden20_pred_exact.csv").read_text().splitlines()[1:]
    for query, line in zip(read_points(QUERIES), lines):
        dist = [rho_oracle(data.points, query, p) for p in data.points]
        got = [int(i) for i in line.split(",")[2].split(";")]
        assert got == sorted_neighbors(dist, 4)


def test_predict_k_equals_n_and_constant_responses(capsys, tmp_path):
    data = read_dataset(GOLDEN)
    _, out, _ = run(capsys, "predict", GOLDEN, QUERIES, "--k", data.n)
    preds = {float(line.split(",")[1]) for line in out.splitlines()[1:]}
    assert len(preds) == 1
    assert preds.pop() == pytest.approx(sum(data.responses) / data.n, abs=1e-12)

    const = tmp_path / "const.csv"
    lines = GOLDEN.read_text().splitlines()
    const.write_text("\n".join([lines[0]] + [",".join(l.split(",")[:-1] + ["3.25"]) for l in lines[1:]]) + "\n")
    _, out, _ = run(capsys, "predict", const, QUERIES, "--k", "5")
    assert {line.split(",")[1] for line in out.splitlines()[1:]} == {"3.25"}


def test_predict_out_file_and_parallel(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "predict", GOLDEN, QUERIES, "--k", "4", "--out", a)[0] == 0
    assert run(capsys, "predict", GOLDEN, QUERIES, "--k", "4", "--out", b, "--jobs", "3")[0] == 0
    assert a.read_bytes() == b.read_bytes() == (DATA / "golden20_pred_exact.csv").read_bytes()


def test_invariance_default_and_identity(capsys):
    code, out, _ = run(capsys, "invariance", "--maps", "5")
    assert code == 0 and out.splitlines()[-1] == "0 violations"
    code, out, _ = run(capsys, "invariance", "--maps", "2", "--identity")
    assert code == 0 and out.splitlines()[-1] == "0 violations"


def test_invariance_mutation_is_caught(capsys):
    args = ["invariance", "--data", DATA / "near_degenerate.csv",
            "--query-file", DATA / "near_degenerate_queries.csv", "--maps", "20", "--k", "3"]
    code, out, _ = run(capsys, *args)
    assert code == 0 and out.splitlines()[-1] == "0 violations"
    code, out, _ = run(capsys, *args, "--unsafe-float-predicates")
    assert code == 2
    assert int(out.splitlines()[-1].split()[0]) > 0


def write_config(path, **overrides):
    cfg = {"d": 2, "function": "quadratic", "noise": 0.1, "seed": 1,
           "n_grid": [10, 20], "queries": 4, "replicates": 2, "metric": "exact"}
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return path


def test_experiment_constant_has_zero_error(capsys, tmp_path):
    cfg = write_config(tmp_path / "c.json", function="constant", noise=0.0)
    out = tmp_path / "out.csv"
    assert run(capsys, "experiment", cfg, "--out", out)[0] == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "row,n,replicate,k,metric,p,error,std_error"
    assert all(float(r.split(",")[6]) == 0.0 for r in rows[1:])


def test_experiment_rerun_and_parallel_identical(capsys, tmp_path):
    cfg = write_config(tmp_path / "c.json")
    outs = [tmp_path / f"{i}.csv" for i in range(3)]
    sums = [tmp_path / f"{i}.txt" for i in range(3)]
    for i, jobs in enumerate(["1", "1", "2"]):
        assert run(capsys, "experiment", cfg, "--out", outs[i], "--summary", sums[i], "--jobs", jobs)[0] == 0
    assert outs[0].read_bytes() == outs[1].read_bytes() == outs[2].read_bytes()
    assert sums[0].read_bytes() == sums[1].read_bytes() == sums[2].read_bytes()


@pytest.mark.parametrize(
    "overrides",
    [{"n_grid": []}, {"n_grid": [1]}, {"metric": "cosine"}, {"colour": "red"}, {"function": "nope"}],
)
def test_experiment_bad_config_leaves_no_output(capsys, tmp_path, overrides):
    cfg = write_config(tmp_path / "c.json", **overrides)
    out = tmp_path / "out.csv"
    code, _, err = run(capsys, "experiment", cfg, "--out", out)
    assert code == 1 and err.startswith("error: input: ")
    assert not out.exists()


def test_experiment_invalid_json(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert run(capsys, "experiment", cfg, "--out", tmp_path / "o.csv")[0] == 1


def test_bench_rows_and_sign_counts(capsys):
    code, out, _ = run(capsys, "bench", "--n", "12", "--d", "2", "--m", "30")
    assert code == 0
    rows = [line.split() for line in out.splitlines()[1:]]
    assert [r[2] for r in rows] == ["exact", "sampled"]
    assert int(rows[0][4]) == 66 * 13
    assert int(rows[1][4]) == 30 * 13
    code, out, _ = run(capsys, "bench", "--n", "10", "--m", "0")
    assert len(out.splitlines()) == 2


def test_module_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "affknn", "distance", str(DATA / "figure1.csv"), "--a", "8,5", "--b", "9,5"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "value=4" in proc.stdout
