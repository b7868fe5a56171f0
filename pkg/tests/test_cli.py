import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from graphonlab.cli import run
from graphonlab.graphs import load_graph

DATA = Path(__file__).parent / "data"

INVOCATIONS = {
    "density": ["density", "--graph", "triangle", "--graphon", "builtin:half", "--method", "mc",
                "--budget", "300000", "--seed", "5"],
    "degree": ["degree", "--graphon", "builtin:rademacher", "--x", "0.95", "0.05", "--method", "mc",
               "--budget", "100000", "--seed", "2"],
    "sample": ["sample", "--graphon", "builtin:rademacher", "--order", "600", "--seed", "3"],
    "converge": ["converge", "--graph", "edge", "--graphon", "builtin:half",
                 "--orders", "50,100,200", "--seed", "4"],
    "check": ["check", "--constraints", str(DATA / "wr_constraints.json"), "--graphon",
              "builtin:rademacher", "--method", "mc", "--budget", "200000", "--seed", "6"],
    "verify-wr": ["verify-wr", "--graphon", "builtin:rademacher", "--budget", "200000",
                  "--seed", "7"],
    "vertex-space": ["vertex-space", "--eps", "0.0625", "--count", "4"],
    "heatmap": ["heatmap", "--graphon", "builtin:rademacher", "--res", "18"],
}


def invoke(capsys, argv):
    code = run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(text):
    lines = text.strip().splitlines()
    return [ln.split(",") for ln in lines]


def test_degree_example(capsys):
    code, out, _ = invoke(capsys, ["degree", "--graphon", "builtin:rademacher", "--x", "0.95"])
    rows = csv_rows(out)
    assert code == 0 and rows[0] == ["x", "degree", "stderr", "method"]
    assert float(rows[1][1]) == pytest.approx(8 / 45, abs=1e-4)


def test_heatmap_example(capsys):
    code, out, _ = invoke(capsys, ["heatmap", "--graphon", "builtin:half", "--res", "4"])
    rows = csv_rows(out)
    assert code == 0 and len(rows) == 5 and len(rows[0]) == 4
    mids = (np.arange(4) + 0.5) / 4
    expected = (mids[:, None] + mids[None, :] >= 1).astype(float)
    assert np.array_equal(np.array(rows[1:], dtype=float), expected)


def test_verify_wr_example(capsys):
    code, out, _ = invoke(capsys, ["verify-wr", "--graphon", "builtin:rademacher",
                                   "--budget", "1000000", "--seed", "7"])
    rows = csv_rows(out)
    assert code == 0
    assert rows[0] == ["identity", "target", "estimate", "stderr", "verdict"]
    assert len(rows) > 40 and all(r[-1] == "satisfied" for r in rows[1:])


def test_check_exit_codes(capsys, tmp_path):
    code, out, _ = invoke(capsys, ["check", "--constraints", str(DATA / "wr_constraints.json"),
                                   "--graphon", "builtin:rademacher"])
    assert code == 0 and "violated" not in out
    spec = tmp_path / "w.json"
    spec.write_text(json.dumps({"kind": "modified", "inner": {"kind": "rademacher"},
                                "blocks": [["C", "D", "set", 0.1]]}))
    code, out, _ = invoke(capsys, ["check", "--constraints", str(DATA / "wr_constraints.json"),
                                   "--graphon", str(spec)])
    assert code == 1 and "no edges C-D,decorated" in out and "violated" in out


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run(["density", "--graph", "edge", "--graphon", "builtin:half", "--bogus"])
    assert exc.value.code == 2
    code, _, err = invoke(capsys, ["density", "--graph", "no-such-file",
                                   "--graphon", "builtin:half"])
    assert code == 2 and "error" in err
    code, _, _ = invoke(capsys, ["density", "--graph", "edge", "--graphon", "builtin:zzz"])
    assert code == 2
    code, _, _ = invoke(capsys, ["vertex-space", "--eps", "0.5", "--count", "2"])
    assert code == 2


def test_graph_file_and_env_seed(capsys, monkeypatch):
    argv = ["density", "--graph", str(DATA / "cherry.txt"), "--graphon", "builtin:half",
            "--method", "mc", "--budget", "50000"]
    monkeypatch.setenv("GRAPHONLAB_SEED", "13")
    _, a, _ = invoke(capsys, argv)
    _, b, _ = invoke(capsys, argv + ["--seed", "13"])
    _, c, _ = invoke(capsys, argv + ["--seed", "14"])
    assert a == b != c


@pytest.mark.parametrize("name", sorted(INVOCATIONS))
def test_json_mirror(capsys, name):
    _, text, _ = invoke(capsys, INVOCATIONS[name])
    _, js, _ = invoke(capsys, INVOCATIONS[name] + ["--json"])
    rows = csv_rows(text)
    records = json.loads(js)
    assert len(records) == len(rows) - 1
    assert all(list(r) == rows[0] for r in records)
    for rec, row in zip(records, rows[1:]):
        for v, s in zip(rec.values(), row):
            if isinstance(v, float):
                assert repr(v) == s
            else:
                assert str(v) == s


@pytest.mark.parametrize("name", sorted(set(INVOCATIONS) - {"sample"}))
def test_out_file_matches_stdout(capsys, tmp_path, name):
    _, text, _ = invoke(capsys, INVOCATIONS[name])
    target = tmp_path / "out.csv"
    _, quiet, _ = invoke(capsys, INVOCATIONS[name] + ["--out", str(target)])
    assert quiet == "" and target.read_text() == text


def test_sample_out_is_graph_file(capsys, tmp_path):
    target = tmp_path / "g.txt"
    code, out, _ = invoke(capsys, ["sample", "--graphon", "builtin:constant:1", "--order", "5",
                                   "--seed", "1", "--out", str(target)])
    g = load_graph(target)
    assert code == 0 and g.order == 5 and len(g.edges) == 10
    assert csv_rows(out) == [["order", "edges", "seed"], ["5", "10", "1"]]


def test_vertex_space_sections(capsys, tmp_path):
    target = tmp_path / "sections.csv"
    code, out, _ = invoke(capsys, ["vertex-space", "--eps", "0.0625", "--count", "3",
                                   "--grid", "256", "--emit-sections", str(target)])
    rows = csv_rows(out)
    assert code == 0 and [r[0] for r in rows[1:]] == ["5", "6", "7"]
    assert all(r[-1] == "True" for r in rows[1:])
    lines = target.read_text().splitlines()
    assert lines[0] == "x,g,g_5,g_6,g_7" and len(lines) == 257


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "graphonlab", "degree", "--graphon",
                          "builtin:constant:0.25", "--x", "0.5"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.splitlines()[1].split(",")[1] == "0.25"


@pytest.mark.parametrize("name", sorted(INVOCATIONS))
def test_output_independent_of_threads(capsys, name):
    outputs = {invoke(capsys, INVOCATIONS[name] + ["--threads", str(t)])[1] for t in (1, 4, 8)}
    assert len(outputs) == 1
