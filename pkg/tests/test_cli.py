from __future__ import annotations

import pytest

from glauberlearn.cli import main
from glauberlearn.dynamics import read_trace
from glauberlearn.learner import read_edges
from glauberlearn.model import read_model


def test_simulate_then_learn(tmp_path, capsys):
    tr, mf, ed = tmp_path / "t.txt", tmp_path / "m.txt", tmp_path / "e.txt"
    assert main(["simulate", "--graph", "single-edge", "--p", "2", "--couplings", "const", "--theta", "1.0",
                 "--T", "3000", "--seed", "1", "--out", str(tr), "--model-out", str(mf)]) == 0
    trace = read_trace(tr)
    assert trace.p == 2 and trace.horizon == 3000
    assert read_model(mf).graph.edges == ((0, 1),)
    assert main(["learn", "--trace", str(tr), "--L", "1", "--tau", "0.0005", "--out", str(ed)]) == 0
    assert read_edges(ed) == {(0, 1)}
    assert "edges=1" in capsys.readouterr().out


def test_simulate_discrete_and_from_file(tmp_path):
    mf, tr = tmp_path / "m.txt", tmp_path / "t.txt"
    assert main(["simulate", "--graph", "cycle", "--p", "4", "--seed", "2", "--steps", "50",
                 "--out", str(tr), "--model-out", str(mf)]) == 0
    assert read_trace(tr).mode == "discrete"
    assert main(["simulate", "--model-file", str(mf), "--seed", "2", "--T", "5", "--out", str(tr)]) == 0
    assert read_trace(tr).p == 4


def test_errors_exit_2(tmp_path, capsys):
    out = str(tmp_path / "t.txt")
    assert main(["simulate", "--graph", "cycle", "--p", "4", "--T", "5", "--out", out]) == 2  # no seed
    assert main(["simulate", "--graph", "cycle", "--p", "4", "--seed", "1", "--out", out]) == 2
    assert main(["learn", "--trace", str(tmp_path / "missing"), "--L", "1", "--out", out]) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["learn", "--trace", out, "--tau", "lots", "--out", out])


def test_learn_theory_warns(tmp_path, capsys):
    tr = tmp_path / "t.txt"
    main(["simulate", "--graph", "empty", "--p", "3", "--T", "10", "--seed", "1", "--out", str(tr)])
    code = main(["learn", "--trace", str(tr), "--mode", "theory", "--d", "1", "--alpha", "1", "--beta", "1",
                 "--out", str(tmp_path / "e.txt")])
    assert code == 0
    assert "shorter than the required T" in capsys.readouterr().err


def test_experiment_config_and_override(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("graph = empty\np = 4\nL = 1\nT = 300\ntrials = 2\nseed = 9\n")
    out = tmp_path / "run"
    assert main(["experiment", "--config", str(cfg), "--out", str(out), "--min-success", "1.0"]) == 0
    assert "trial,recovered" in (out / "results.csv").read_text()
    assert main(["experiment", "--config", str(cfg), "--graph", "cycle", "--p", "4", "--tau", "10",
                 "--out", str(out), "--min-success", "0.5"]) == 1


def test_verify(tmp_path, capsys):
    assert main(["verify", "--only", "eq5,ratio-bracket", "--out", str(tmp_path / "v.txt")]) == 0
    lines = (tmp_path / "v.txt").read_text().splitlines()
    assert [ln.split()[0] for ln in lines] == ["eq5", "ratio-bracket"]
    bad = tmp_path / "bad.txt"
    bad.write_text("not a model\n")
    assert main(["verify", "--only", "eq5", "--model", str(bad)]) == 1
    assert main(["verify", "--only", "nope"]) == 2


def test_lowerbound(tmp_path, capsys):
    out = tmp_path / "kl.csv"
    assert main(["lowerbound", "--p", "8", "--d", "3", "--alpha", "0.5", "--beta", "1", "--n", "80", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "variant,u,v,C1,Cl,total,bound,margin" and len(rows) == 5
    assert "M=4" in capsys.readouterr().out


def test_benchmark(tmp_path):
    code = main(["benchmark", "--p", "10", "20", "--T", "30", "--repeats", "1", "--exponent-range", "-10", "10",
                 "--out", str(tmp_path / "b.csv")])
    assert code == 0 and (tmp_path / "b.csv").exists()
