import json
from pathlib import Path

import pytest

from ctbn_sentry import save_model
from ctbn_sentry.cli import main


@pytest.fixture()
def chain3_path(chain3, tmp_path):
    path = tmp_path / "chain3.json"
    save_model(chain3, path)
    return str(path)


def run(argv):
    return main(argv)


# -- validate ----------------------------------------------------------------------


def test_validate_ok(chain3_path, capsys):
    assert run(["validate", chain3_path]) == 0
    assert capsys.readouterr().out == ""


def test_validate_bundled_fixture():
    bundled = Path(__file__).resolve().parents[1] / "src/ctbn_sentry/data/chain3.json"
    assert run(["validate", str(bundled)]) == 0


def test_validate_unreadable(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"processes": [')
    assert run(["validate", str(path)]) == 2
    assert run(["validate", str(tmp_path / "missing.json")]) == 2


def test_validate_bad_row_sum(chain3_path, tmp_path, capsys):
    doc = json.loads(Path(chain3_path).read_text())
    doc["cims"]["A"][0][0] = [-0.5, 1.0]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert run(["validate", str(bad)]) == 1
    lines = capsys.readouterr().out.strip().splitlines()
    records = [json.loads(line) for line in lines]
    assert sum(1 for r in records if r["severity"] == "error") == 1
    assert records[0]["code"] == "row-sum"


# -- simulate ----------------------------------------------------------------------


def test_simulate_deterministic(chain3_path, tmp_path):
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["simulate", chain3_path, "--t-end", "5", "--trajectories", "3",
            "--seed", "42", "--single-file"]
    assert run(base + ["--out", str(out_a)]) == 0
    assert run(base + ["--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_simulate_zero_horizon(chain3_path, tmp_path):
    out = tmp_path / "z.csv"
    assert run(["simulate", chain3_path, "--t-end", "0", "--trajectories", "2",
                "--seed", "1", "--single-file", "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 1 + 2 * 3  # header plus initial rows only
    assert all(line.split(",")[1] == "0.0" for line in lines[1:])


def test_simulate_per_trajectory_files(chain3_path, tmp_path):
    out = tmp_path / "dir"
    assert run(["simulate", chain3_path, "--t-end", "2", "--trajectories", "2",
                "--seed", "3", "--out", str(out)]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == ["trajectory_00000.csv", "trajectory_00001.csv"]


def test_simulate_initial_flag(chain3_path, tmp_path):
    out = tmp_path / "i.csv"
    assert run(["simulate", chain3_path, "--initial", "1,1,1", "--t-end", "0",
                "--seed", "1", "--single-file", "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()[1:]
    assert [r.split(",")[3] for r in rows] == ["1", "1", "1"]


def test_simulate_bad_initial(chain3_path, tmp_path, capsys):
    code = run(["simulate", chain3_path, "--initial", "5,0,0", "--t-end", "1",
                "--seed", "1", "--single-file", "--out", str(tmp_path / "x.csv")])
    assert code == 1
    assert "invalid initial state" in capsys.readouterr().err


# -- sentry ------------------------------------------------------------------------


def test_sentry_exact_ranking(chain3_path, tmp_path):
    out = tmp_path / "sentry.csv"
    assert run(["sentry", chain3_path, "--exact", "--alpha", "0.1",
                "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[1].startswith("100,")


def test_sentry_mc_with_max_active(chain3_path, tmp_path):
    out = tmp_path / "sentry_mc.csv"
    assert run(["sentry", chain3_path, "--alpha", "0.2", "--t-end", "30",
                "--trajectories", "40", "--seed", "9", "--max-active", "1",
                "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    bits = {line.split(",")[0] for line in lines[1:]}
    assert {"000", "100", "010", "001"} <= bits


def test_sentry_stopping_rule(chain3_path, tmp_path):
    out = tmp_path / "sentry_eps.csv"
    assert run(["sentry", chain3_path, "--alpha", "0.5", "--t-end", "25",
                "--trajectories", "4000", "--epsilon", "0.05", "--seed", "4",
                "--max-active", "0", "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) >= 2


# -- cascades ----------------------------------------------------------------------


def test_cascades_pipeline(chain3_path, tmp_path):
    traj_csv = tmp_path / "ens.csv"
    run(["simulate", chain3_path, "--t-end", "60", "--trajectories", "30",
         "--seed", "5", "--single-file", "--out", str(traj_csv)])
    out_c, out_s = tmp_path / "cascades.csv", tmp_path / "scores.csv"
    assert run(["cascades", str(traj_csv), "--auto-threshold",
                "--min-length", "2", "--out-cascades", str(out_c),
                "--out-scores", str(out_s)]) == 0
    cascade_lines = out_c.read_text().strip().splitlines()
    score_lines = out_s.read_text().strip().splitlines()
    assert len(cascade_lines) > 30
    best = score_lines[1].split(",")
    assert best[0] == "100"  # the root-on state launches the most cascades


def test_cascades_empty_input(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("time,process,state\n0.0,A,0\n")
    out_c, out_s = tmp_path / "c.csv", tmp_path / "s.csv"
    assert run(["cascades", str(empty), "--auto-threshold",
                "--out-cascades", str(out_c), "--out-scores", str(out_s)]) == 0
    assert len(out_c.read_text().strip().splitlines()) == 1


def test_cascades_min_length_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["cascades", "whatever.csv", "--auto-threshold", "--min-length", "1",
             "--out-cascades", "c.csv", "--out-scores", "s.csv"])
    assert exc.value.code == 2


# -- graph -------------------------------------------------------------------------


def test_graph_separate_json(chain3_path, capsys):
    assert run(["graph", chain3_path, "separate", "--a", "A", "--b", "C",
                "--c", "B"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["separated"] is True
    assert doc["A"] == ["A"] and doc["B"] == ["C"] and doc["C"] == ["B"]
    assert doc["ancestral_set"] == ["A", "B", "C"]


def test_graph_condense_blocks(tmp_path, capsys):
    from ctbn_sentry import experiment_spec

    spec = experiment_spec("cycle-chain6")
    path = tmp_path / "six.json"
    save_model(spec.build_model(), path)
    assert run(["graph", str(path), "condense"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["blocks"]) == 4
    assert sorted(doc["blocks"]["A"]) == ["A", "B", "C"]


def test_graph_moralize_dot(chain3_path, capsys):
    assert run(["graph", chain3_path, "moralize"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("graph") and '"A" -- "B"' in out


def test_graph_partition_file(chain3_path, tmp_path, capsys):
    blocks = tmp_path / "blocks.json"
    blocks.write_text(json.dumps({"root": ["A"], "rest": ["B", "C"]}))
    assert run(["graph", chain3_path, "partition", "--blocks-file", str(blocks)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["edges"] == [["root", "rest"]]


# -- experiment --------------------------------------------------------------------


def test_experiment_bundle_and_config(tmp_path):
    out = tmp_path / "bundle"
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"trajectories": 150, "t-end": 25.0,
                                  "display-trajectories": 2}))
    assert run(["--config", str(config), "experiment", "chain3", "--seed", "7",
                "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["cascades.csv", "comparison.csv", "manifest.json",
                     "model.json", "naive_scores.csv", "sentry.csv",
                     "trajectories.csv"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["trajectory_count"] == 150  # config applied
    assert manifest["seed"] == 7                # flag wins over default
    sentry_lines = (out / "sentry.csv").read_text().strip().splitlines()
    assert sentry_lines[1].startswith("100,")


def test_experiment_unknown_name(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["experiment", "nope", "--out", str(tmp_path / "x")])
    assert exc.value.code == 2
