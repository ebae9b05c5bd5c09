import csv
import io
import json
import os
from fractions import Fraction as F

import pytest

from vmc.cli import EXIT_DATA, EXIT_USAGE, main


@pytest.fixture
def models(data_dir):
    return os.path.join(data_dir, "models")


@pytest.fixture
def vids(data_dir):
    return os.path.join(data_dir, "vids")


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_clique(models, capsys):
    code, out, _ = run(["check", "--model", f"{models}/infinite_clique.json", "--levels", "16"], capsys)
    assert code == 0
    assert json.loads(out)["violations"] == []


def test_check_bad_explicit_model(tmp_path, capsys):
    spec = {"family": "explicit", "levels": [[["1"]], [["1", "0"], ["1/2", "1/2"]], [["1", "0", "0"], ["0", "1", "0"], ["0", "1", "0"]]]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(spec))
    code, out, _ = run(["check", "--model", str(path)], capsys)
    assert code == EXIT_DATA
    assert json.loads(out)["violations"][0]["kind"] == "projectivity"


def test_decompose_worked_example(data_dir, capsys):
    code, out, _ = run(["decompose", "--paths", f"{data_dir}/worked_example.json", "--amax", "2", "--kmax", "2"], capsys)
    assert code == 0
    js = json.loads(out)
    with open(f"{data_dir}/worked_example_expected.json") as fh:
        expected = json.load(fh)
    assert js["s0"]["entries"] == expected["s0"]
    for key, val in expected["sak"].items():
        assert js["sak"][key] == val


def test_decompose_rejects_inconsistent_prefix(tmp_path, capsys):
    paths = [{"level": 0, "entries": [0, 0, 0]}, {"level": 1, "entries": [1, 1, 0]}, {"level": 2, "entries": [2, 1, 0]}]
    p = tmp_path / "p.json"
    p.write_text(json.dumps(paths))
    code, _, err = run(["decompose", "--paths", str(p)], capsys)
    assert code == EXIT_DATA and "disagree" in err


def test_sternfeld_csv(capsys):
    code, out, _ = run(["simplex", "sternfeld", "--balayage", "uniform", "--M", "2", "--c", "1", "--N", "100", "--amax", "110"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["a"]) for r in rows] == list(range(100, 111))
    for r in rows:
        if int(r["a"]) > 100:
            assert F(r["sum"]) == F(1, 100) + F(98, 400)
        assert float(r["sum_dec"]) == pytest.approx(float(F(r["sum"])), rel=1e-11)


def test_delta_and_k0(capsys):
    code, out, _ = run(["simplex", "delta", "--balayage", "uniform", "--a", "3", "--level", "4"], capsys)
    assert code == 0
    assert json.loads(out)["levels"][2] == ["0", "1/2", "1/2"]
    code, out, _ = run(["simplex", "k0", "--balayage", "two_down", "--N", "2", "--amax", "6"], capsys)
    assert [r.split(",")[2] for r in out.splitlines()[1:]] == ["1", "0", "1", "0", "1"]


def test_limit_scan(capsys):
    code, out, _ = run(["simplex", "limit-scan", "--balayage", "two_down", "--level", "8", "--amax", "64"], capsys)
    assert code == 0
    assert len(json.loads(out)["candidates"]) == 2


def test_classify_csv(models, vids, capsys):
    code, out, _ = run(["classify", "--model", f"{models}/classical_random.json", "--vid", f"{vids}/delta1.json", "--amax", "3"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[1]["p_a"] == "1/2" and rows[1]["verdict"] == "RandomlyVisited"


@pytest.mark.parametrize(
    "model,vid,code",
    [
        ("infinite_clique", "delta1", 0),
        ("infinite_clique", "half_delta1_delta2", 1),
        ("down_from_infinity", "delta2", 1),
        ("two_ladders", "delta1", 1),
    ],
)
def test_zolaw_exit_codes(models, vids, tmp_path, capsys, model, vid, code):
    out = tmp_path / "report.json"
    got, _, _ = run(
        ["zolaw", "--model", f"{models}/{model}.json", "--vid", f"{vids}/{vid}.json", "--amax", "16", "--out", str(out)], capsys
    )
    assert got == code
    assert json.loads(out.read_text())["verdict"] == ["Trivial", "NonTrivial"][code]


def test_zolaw_inconclusive_exit_code(tmp_path, capsys):
    # uniform exit laws at every level but no catalog facts: extremality is open
    levels = []
    for n in range(7):
        rows = [["1"] + ["0"] * n] + [["0"] + [f"1/{n}"] * n for _ in range(n)]
        levels.append(rows)
    model = tmp_path / "m.json"
    model.write_text(json.dumps({"family": "explicit", "levels": levels}))
    top = ["0"] + ["1/6"] * 6
    vid_levels = [["1"], ["0", "1"], ["0", "1/2", "1/2"], ["0"] + ["1/3"] * 3, ["0"] + ["1/4"] * 4, ["0"] + ["1/5"] * 5, top]
    vid = tmp_path / "v.json"
    vid.write_text(json.dumps({"kind": "explicit", "levels": vid_levels}))
    code, out, _ = run(["zolaw", "--model", str(model), "--vid", str(vid), "--amax", "4"], capsys)
    assert code == 2
    assert json.loads(out)["verdict"] == "Inconclusive"


def test_usage_errors(capsys):
    assert run(["zolaw"], capsys)[0] == EXIT_USAGE
    assert run(["classify", "--model", "m", "--vid", "v", "--amax", "-3"], capsys)[0] == EXIT_USAGE
    assert run(["nonsense"], capsys)[0] == EXIT_USAGE
    assert run(["project"], capsys)[0] == EXIT_USAGE


def test_missing_file_is_data_error(capsys):
    assert run(["check", "--model", "/nonexistent.json"], capsys)[0] == EXIT_DATA


def test_simulate_is_reproducible(models, vids, tmp_path, capsys, monkeypatch):
    args = ["simulate", "--model", f"{models}/infinite_clique.json", "--vid", f"{vids}/delta1.json",
            "--level", "5", "--steps", "30", "--replicates", "20", "--amax", "3", "--kmax", "1"]
    monkeypatch.setenv("VMC_SEED", "9")
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--seed", "9"]) == 0
    assert main(args + ["--out", str(tmp_path / "c"), "--seed", "10"]) == 0
    for name in ("paths.csv", "s0.csv", "sak.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "paths.csv").read_bytes() != (tmp_path / "c" / "paths.csv").read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["seed"] == 9 and summary["model"] == {"family": "infinite_clique"}


def test_smc_sample_and_verify(models, vids, capsys):
    code, out, _ = run(["smc", "sample", "--model", f"{models}/infinite_clique.json", "--vid", f"{vids}/uniform_limit.json",
                        "--levels", "5", "--replicates", "4", "--seed", "1"], capsys)
    assert code == 0 and len(out.splitlines()) == 5
    # the uniform limit sits at 1 on level 1, so only 8 of the 16 staircases occur
    code, out, _ = run(["smc", "verify", "--model", f"{models}/infinite_clique.json", "--vid", f"{vids}/uniform_limit.json",
                        "--levels", "4", "--replicates", "500"], capsys)
    js = json.loads(out)
    assert code == 0 and js["exact"] == {"paths": 8, "marginals": True, "backward": True}


def test_project_paths_and_matrix(data_dir, models, capsys):
    top = {"level": 5, "entries": [4, 5, 2, 3, 1, 5, 4, 1, 2, 0], "determined_len": 10}
    path = os.path.join(data_dir, "..", "tests", "_top.json")
    try:
        with open(path, "w") as fh:
            json.dump(top, fh)
        code, out, _ = run(["project", "--paths", path, "--level", "3"], capsys)
    finally:
        os.unlink(path)
    js = json.loads(out)
    assert js[3]["entries"][:5] == [2, 3, 1, 1, 2]
    code, out, _ = run(["project", "--model", f"{models}/two_ladders.json", "--level", "2"], capsys)
    js = json.loads(out)
    assert js["agrees_with_model"] and js["balayage"] == ["0", "1", "0"]


def test_model_json_round_trip(models, tmp_path):
    from vmc.families import vtm_to_spec
    from vmc.io import load_model

    for name in os.listdir(models):
        K = load_model(os.path.join(models, name))
        out = tmp_path / name
        out.write_text(json.dumps(vtm_to_spec(K)))
        K2 = load_model(out)
        assert all(K.level(n) == K2.level(n) for n in range(8))
