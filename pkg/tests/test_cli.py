import csv
import io
import json

import numpy as np
import pytest

from invupdate.basis import enumerate_basis
from invupdate.cli import main
from invupdate.moment import fit, load_snapshot
from oracles import rel_fro


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_points(path, pts):
    np.savetxt(path, pts, delimiter=",", fmt="%.17g")
    return path


@pytest.fixture
def model(tmp_path, rng):
    train = rng.standard_normal((150, 2))
    pts = write_points(tmp_path / "train.csv", train)
    snap = tmp_path / "model.snap"
    assert main(["snapshot", "--points", str(pts), "--degree", "3", "--out", str(snap)]) == 0
    return snap, train


def parse(out):
    return list(csv.DictReader(io.StringIO(out)))


def test_thresholds_table(capsys):
    code, out, _ = run(capsys, "thresholds", 1287, 1, 3)
    assert code == 0
    rows = parse(out)
    assert list(rows[0]) == ["s", "di_over_ism", "di_over_wmi_cubic", "di_over_wmi_empirical", "rule_boundary"]
    assert float(rows[0]["di_over_ism"]) == pytest.approx(535.834, abs=1e-3)
    assert float(rows[0]["di_over_wmi_cubic"]) == pytest.approx(343.250, abs=0.5)
    assert float(rows[0]["di_over_wmi_empirical"]) == pytest.approx(343.145, abs=1e-3)
    assert rows[0]["rule_boundary"] == "429"
    assert float(rows[1]["di_over_ism"]) == pytest.approx(0.208, abs=1e-3)
    assert float(rows[1]["di_over_wmi_cubic"]) < 1
    assert float(rows[1]["di_over_wmi_empirical"]) == pytest.approx(0.267, abs=1e-3)
    assert rows[1]["rule_boundary"] == "0"
    assert rows[2]["rule_boundary"] == "1"


def test_thresholds_pretty(capsys):
    code, out, _ = run(capsys, "thresholds", "--pretty", 1287)
    assert code == 0
    assert out.split("\n")[1].split() == ["1287", "535.834", "343.250", "343.145", "429"]


@pytest.mark.parametrize("bad", ["12.5", "abc", "0"])
def test_thresholds_rejects_bad_sizes(capsys, bad):
    code, _, err = run(capsys, "thresholds", bad)
    assert code == 2 and "error" in err


def test_missing_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


def test_bench_empty_ks_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"S": 100, "sizes": [10], "ks": []}))
    code, _, err = run(capsys, "bench", "--config", cfg)
    assert code == 2 and "ks" in err


def test_bench_malformed_json_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert run(capsys, "bench", "--config", cfg)[0] == 2


def test_bench_writes_csv(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"S": 150, "sizes": [10, 20], "ks": [1, 5], "reps": 2}))
    out_csv = tmp_path / "out.csv"
    code, out, _ = run(capsys, "bench", "--config", cfg, "--out", out_csv, "--seed", 3)
    assert code == 0 and out == ""
    rows = parse(out_csv.read_text())
    assert len(rows) == 2 * 2 * 3
    assert {r["method"] for r in rows} == {"di", "ism", "wmi"}
    assert all(float(r["error_frobenius"]) < 1e-10 for r in rows)


def test_bench_strict_reports_failed_cells(tmp_path, capsys):
    # ridge keeps validation happy, but S - k = 10 rows cannot determine s = 12 without it
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"S": 12, "sizes": [12], "ks": [2], "reps": 1, "ridge": 1e-300}))
    code, _, err = run(capsys, "bench", "--config", cfg, "--strict")
    assert code == 4 and "failed cell" in err
    assert run(capsys, "bench", "--config", cfg)[0] == 0


def test_grid_and_svg(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"S": 120, "sizes": [10, 20], "ks": [1, 3], "reps": 2}))
    svg = tmp_path / "grid.svg"
    code, out, _ = run(capsys, "grid", "--config", cfg, "--svg", svg)
    assert code == 0
    rows = parse(out)
    assert [(r["s"], r["k"]) for r in rows] == [("10", "1"), ("10", "3"), ("20", "1"), ("20", "3")]
    assert all(r["winner"] in ("di", "ism", "wmi") for r in rows)
    assert svg.read_text().startswith("<svg")


def test_score_training_mean(model, tmp_path, capsys):
    snap, train = model
    pts = write_points(tmp_path / "pts.csv", train)
    code, out, _ = run(capsys, "score", "--model", snap, "--points", pts)
    assert code == 0
    rows = parse(out)
    assert list(rows[0]) == ["index", "inverse_cf", "score", "is_outlier"]
    scores = np.array([float(r["score"]) for r in rows])
    assert abs(scores.mean() - 1.0) <= 1e-6
    assert {r["is_outlier"] for r in rows} <= {"0", "1"}


def test_score_flags_far_point(model, tmp_path, capsys):
    snap, _ = model
    pts = write_points(tmp_path / "pts.csv", [[0.0, 0.0], [10.0, 10.0]])
    rows = parse(run(capsys, "score", "--model", snap, "--points", pts)[1])
    assert [r["is_outlier"] for r in rows] == ["0", "1"]
    doubled = parse(run(capsys, "score", "--model", snap, "--points", pts, "--gamma", 20)[1])
    # default gamma is s = 10
    assert float(doubled[1]["score"]) == pytest.approx(float(rows[1]["score"]) / 2)


def test_dimension_mismatch_is_data_error(model, tmp_path, capsys):
    snap, _ = model
    pts = write_points(tmp_path / "pts.csv", np.ones((3, 3)))
    assert run(capsys, "score", "--model", snap, "--points", pts)[0] == 3
    assert run(capsys, "stream", "--model", snap, "--points", pts)[0] == 3


def test_unreadable_inputs_are_data_errors(model, tmp_path, capsys):
    snap, _ = model
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\nx,y\n")
    assert run(capsys, "score", "--model", snap, "--points", bad)[0] == 3
    assert run(capsys, "score", "--model", tmp_path / "missing.snap", "--points", bad)[0] == 3
    junk = tmp_path / "junk.snap"
    junk.write_bytes(b"garbage")
    assert run(capsys, "score", "--model", junk, "--points", bad)[0] == 3


def test_stream_never_leaves_snapshot_untouched(model, tmp_path, capsys, rng):
    snap, _ = model
    before = snap.read_bytes()
    pts = write_points(tmp_path / "pts.csv", rng.standard_normal((20, 2)))
    code, out, _ = run(capsys, "stream", "--model", snap, "--points", pts, "--policy", "never", "--save")
    assert code == 0 and len(parse(out)) == 20
    assert snap.read_bytes() == before


@pytest.mark.parametrize("k, method", [(1, "auto"), (4, "wmi"), (5, "ism")])
def test_stream_then_refit(model, tmp_path, capsys, rng, k, method):
    snap, train = model
    new = rng.standard_normal((20, 2))
    pts = write_points(tmp_path / "pts.csv", new)
    code, _, _ = run(
        capsys, "stream", "--model", snap, "--points", pts, "--policy", "always", "--k", k, "--method", method, "--save"
    )
    assert code == 0
    state = load_snapshot(snap)
    assert state.n_samples == 170
    ref = fit(np.vstack([train, new]), enumerate_basis(2, 3))
    assert rel_fro(state.inv_normalized, ref.inv_normalized) < 1e-7


def test_stream_di_without_matrix_is_data_error(model, tmp_path, capsys, rng):
    snap, _ = model
    pts = write_points(tmp_path / "pts.csv", rng.standard_normal((8, 2)))
    code, _, err = run(capsys, "stream", "--model", snap, "--points", pts, "--policy", "always", "--method", "di")
    assert code == 3 and "track_matrix" in err


def test_stream_bad_k_is_usage_error(model, tmp_path, capsys):
    snap, _ = model
    pts = write_points(tmp_path / "pts.csv", np.zeros((2, 2)))
    assert run(capsys, "stream", "--model", snap, "--points", pts, "--k", 0)[0] == 2


def test_snapshot_show(model, capsys):
    snap, _ = model
    code, out, _ = run(capsys, "snapshot", "--show", snap)
    assert code == 0
    assert json.loads(out) == {"d": 2, "n": 3, "s": 10, "N": 150, "ridge": 0.0, "track_matrix": False, "rounds": 0}


def test_snapshot_rank_deficient_is_data_error(tmp_path, capsys):
    pts = write_points(tmp_path / "pts.csv", np.arange(6.0).reshape(3, 2))
    code, _, _ = run(capsys, "snapshot", "--points", pts, "--degree", 2, "--out", tmp_path / "m.snap")
    assert code == 3


def test_snapshot_singular_is_numerical_failure(tmp_path, capsys):
    pts = write_points(tmp_path / "pts.csv", np.ones((30, 2)))
    code, _, err = run(capsys, "snapshot", "--points", pts, "--degree", 1, "--out", tmp_path / "m.snap")
    assert code == 4 and "numerical" in err


def test_snapshot_needs_arguments(capsys):
    assert run(capsys, "snapshot", "--degree", 2)[0] == 2
