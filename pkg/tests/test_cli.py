import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from kcsr.cli import main

TOY = Path(__file__).resolve().parents[1] / "data" / "toy_two_segments.csv"


def run(capsys, *argv):
    try:
        code = main([str(a) for a in argv])
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def test_segment_toy(capsys, tmp_path):
    out_json = tmp_path / "r.json"
    code, out, err = run(capsys, "segment", "--input", TOY, "--k", 2, "--output", out_json)
    assert code == 0
    assert "boundaries: 3" in out and "final J:" in out and "wall time:" in out
    assert "sigma (median heuristic): 4.0" in err
    doc = json.loads(out_json.read_text())
    assert doc["boundaries"] == [3] and doc["labels"] == [1, 1, 1, 2, 2, 2]
    assert doc["kernel"] == {"kind": "rbf", "sigma": 4.0}


def test_segment_skcsr_deterministic(capsys, tmp_path):
    synth = tmp_path / "c.csv"
    assert run(capsys, "synth", "--out", synth, "--counts", "40,50,30,60", "--seed", 3)[0] == 0
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        code, _, _ = run(capsys, "segment", "--input", synth, "--k", 4, "--method", "skcsr",
                         "--seed", 7, "--batch", 64, "--iters", 200, "--output", p)
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert json.loads(paths[0].read_text())["seed"] == 7


def test_segment_trace_out(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    assert run(capsys, "segment", "--input", TOY, "--k", 2, "--trace-out", trace)[0] == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "series,index,value"
    assert sum(line.startswith("tau,") for line in lines) == 6
    assert any(line.startswith("objective,0,") for line in lines)


def test_mkcsr_single_input_is_error(capsys):
    code, out, err = run(capsys, "segment", "--input", TOY, "--k", 2, "--method", "mkcsr")
    assert code == 1 and "mkcsr" in err and out == ""


def test_mkcsr_two_inputs(capsys, tmp_path):
    r = np.random.default_rng(1)
    p = tmp_path / "two.csv"
    X = np.concatenate([r.normal(0, 0.3, 40), r.normal(5, 0.3, 60)])
    p.write_text("".join(f"{float(v)!r}\n" for v in X))
    code, out, _ = run(capsys, "segment", "--input", p, "--input", p, "--k", 2,
                       "--method", "mkcsr", "--batch", 64)
    assert code == 0
    assert "boundaries[1]: 40" in out and "boundaries[2]: 40" in out


def test_resource_refusal(capsys, monkeypatch):
    monkeypatch.setenv("KCSR_MEM_CAP_BYTES", "100")
    code, out, err = run(capsys, "segment", "--input", TOY, "--k", 2)
    assert code == 3 and "skcsr" in err and out == ""


def test_numerical_error_exit(capsys, monkeypatch):
    from kcsr import cli
    from kcsr.errors import NumericalError

    def boom(*a, **k):
        raise NumericalError("non-finite update")

    monkeypatch.setattr(cli, "kcsr_segment", boom)
    code, _, err = run(capsys, "segment", "--input", TOY, "--k", 2)
    assert code == 2 and "non-finite" in err


def test_bad_flags_exit_one(capsys, tmp_path):
    assert run(capsys, "segment", "--input", TOY)[0] == 1
    assert run(capsys, "segment", "--input", TOY, "--k", 2, "--sigma", "-1")[0] == 1
    assert run(capsys, "segment", "--input", tmp_path / "missing.csv", "--k", 2)[0] == 1
    assert run(capsys, "segment", "--input", TOY, "--k", 9)[0] == 1


def test_synth_default_and_seeded(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    code, out, _ = run(capsys, "synth", "--out", a, "--seed", 5)
    assert code == 0
    counts = [int(c) for c in out.split(":")[1].split()]
    assert len(counts) == 4 and all(500 <= c <= 1500 for c in counts)
    run(capsys, "synth", "--out", b, "--seed", 5)
    assert a.read_bytes() == b.read_bytes()


def test_synth_small(capsys, tmp_path):
    p = tmp_path / "s.csv"
    assert run(capsys, "synth", "--out", p, "--counts", "3,3", "--radii", "1,2")[0] == 0
    assert len(p.read_text().splitlines()) == 1 + 6


def test_synth_unwritable(capsys, tmp_path):
    assert run(capsys, "synth", "--out", tmp_path / "no" / "dir.csv")[0] == 1


def _result_json(tmp_path, labels):
    doc = {"method": "kcsr", "k": int(max(labels)), "alpha": 10.0, "lambda": 0.0,
           "kernel": {"kind": "rbf", "sigma": 1.0}, "betas": [], "tau": [float(v) for v in labels],
           "labels": list(labels), "boundaries": [], "objective_trace": [[0, 1.0]],
           "seed": None, "block_lengths": None}
    p = tmp_path / "pred.json"
    p.write_text(json.dumps(doc))
    return p


def _truth_csv(tmp_path, labels):
    p = tmp_path / "truth.csv"
    p.write_text("x0,label\n" + "".join(f"{i}.0,{v}\n" for i, v in enumerate(labels)))
    return p


@pytest.mark.parametrize("pred, expected", [
    ([1, 1, 2, 2], "ACC 1.0000 NMI 1.0000"),
    ([2, 2, 1, 1], "ACC 1.0000 NMI 1.0000"),
    ([1, 2, 1, 2], "ACC 0.5000 NMI 0.0000"),
])
def test_eval(capsys, tmp_path, pred, expected):
    code, out, _ = run(capsys, "eval", "--pred", _result_json(tmp_path, pred),
                       "--truth", _truth_csv(tmp_path, [1, 1, 2, 2]))
    assert code == 0 and out.strip() == expected


def test_eval_length_mismatch(capsys, tmp_path):
    code, _, err = run(capsys, "eval", "--pred", _result_json(tmp_path, [1, 2]),
                       "--truth", _truth_csv(tmp_path, [1, 1, 2]))
    assert code == 1 and "differ" in err


def test_oracle(capsys, tmp_path):
    code, out, _ = run(capsys, "oracle", "--input", TOY, "--k", 2, "--kernel", "linear",
                       "--output", tmp_path / "o.json")
    assert code == 0 and "boundaries: 3" in out
    assert json.loads((tmp_path / "o.json").read_text())["boundaries"] == [3]
    code, out, _ = run(capsys, "oracle", "--input", TOY, "--k", 6, "--kernel", "linear")
    assert code == 0 and "cost: 0" in out
    assert run(capsys, "oracle", "--input", TOY, "--k", 2, "--cap", 5)[0] == 1


def test_oracle_agrees_with_segment(capsys, tmp_path):
    r = np.random.default_rng(0)
    X = np.concatenate([r.normal(0, 0.3, 30), r.normal(4, 0.3, 25), r.normal(-3, 0.3, 35)])
    p = tmp_path / "x.csv"
    p.write_text("".join(f"{float(v)!r}\n" for v in X))
    _, seg_out, _ = run(capsys, "segment", "--input", p, "--k", 3, "--kernel", "linear")
    _, dp_out, _ = run(capsys, "oracle", "--input", p, "--k", 3, "--kernel", "linear")
    line = lambda out: [int(v) for v in out.split("boundaries:")[1].splitlines()[0].split()]
    assert np.all(np.abs(np.array(line(seg_out)) - np.array(line(dp_out))) <= 1)


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kcsr.cli", "oracle", "--input", str(TOY), "--k", "2",
                           "--kernel", "linear"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("boundaries: 3")
