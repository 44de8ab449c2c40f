import csv
import json
import math

import pytest

from coarset import __version__, graphs
from coarset.boxspace import FiniteGroupPresentation, box_space
from coarset.cli import main
from coarset.io import canonical, dumps, load_kernel, read_json
from coarset.errors import InputError


def _write(path, obj):
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


@pytest.fixture
def c8(tmp_path):
    return _write(tmp_path / "c8.json", graphs.cycle(8).to_json())


def _run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_spectrum_c8(c8, capsys):
    code, out, _ = _run(["spectrum", "--input", c8], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["schema_version"] == "1"
    assert rep["version"] == __version__
    assert rep["tolerances"] == {"eig": 1e-8, "id": 1e-10}
    assert rep["config"]["input"] == c8
    gap = rep["result"]["components"][0]["gap"]
    assert abs(gap - (2 - 2 * math.cos(math.pi / 4))) <= 1e-12
    assert rep["result"]["sigma_max_available"] is False
    assert rep["result"]["kernel_is_constants"]["ok"] is True


def test_expander_on_cyclic_tower(tmp_path, capsys):
    box = box_space(FiniteGroupPresentation("cyclic", [2**k for k in range(1, 9)]))
    path = _write(tmp_path / "tower.json", box.space.to_json())
    code, out, _ = _run(["expander", "--c", "0.1", "--input", path], capsys)
    assert code == 0
    verdict = json.loads(out)["result"]["verdict"]
    assert verdict["expander"] is False
    assert verdict["failing"] == ["iii"]


def test_missing_file_exit_2(capsys):
    code, out, err = _run(["spectrum", "--input", "/no/such/space.json"], capsys)
    assert code == 2
    assert out == ""
    assert json.loads(err)["error"] == "input error"


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"components": [\n  {"size": 3,, "edges": []}\n]}', encoding="utf-8")
    code, _, err = _run(["girth", "--input", str(bad)], capsys)
    assert code == 2
    assert f"{bad}:2:14" in json.loads(err)["detail"]


def test_invalid_space_and_usage_errors(tmp_path, capsys):
    path = _write(tmp_path / "split.json", {"components": [{"size": 3, "edges": [[0, 1]]}]})
    assert _run(["spectrum", "--input", path], capsys)[0] == 2
    assert _run(["spectrum", "--input", path, "--tol-eig", "-1"], capsys)[0] == 2
    assert _run(["nonsense"], capsys)[0] == 2
    assert _run(["girth"], capsys)[0] == 2


def test_self_check_failure_exit_3(tmp_path, capsys):
    space = _write(tmp_path / "p.json", graphs.petersen().to_json())
    part = _write(tmp_path / "part.json", {"Y": [0, 2, 4, 6, 8], "radius": 2})
    code, out, _ = _run(["morita-suite", "--input", space, "--partition", part], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["self_checks"]["passed"]
    assert max(rep["result"]["deviations"].values()) <= 1e-10
    # an impossible tolerance turns rounding noise into a self-check failure
    code, out, err = _run(
        ["morita-suite", "--input", space, "--partition", part, "--tol-id", "1e-300"], capsys
    )
    assert code == 3
    assert json.loads(out)["self_checks"]["passed"] is False
    assert json.loads(err)["error"] == "invariant violation"


def test_env_overrides(c8, capsys, monkeypatch):
    monkeypatch.setenv("COARSET_TOL_EIG", "1e-6")
    monkeypatch.setenv("COARSET_SEED", "42")
    _, out, _ = _run(["spectrum", "--input", c8], capsys)
    rep = json.loads(out)
    assert rep["tolerances"]["eig"] == 1e-6
    assert rep["config"]["seed"] == 42
    # flags win over the environment
    _, out, _ = _run(["spectrum", "--input", c8, "--tol-eig", "1e-7"], capsys)
    assert json.loads(out)["tolerances"]["eig"] == 1e-7
    monkeypatch.setenv("COARSET_SEED", "many")
    assert _run(["spectrum", "--input", c8], capsys)[0] == 2


def test_out_file_and_determinism(tmp_path, c8, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for target in (a, b):
        assert main(["match-annulus", "--input", c8, "--r", "1", "--seed", "7", "--out", str(target)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert capsys.readouterr().out == ""


def test_witness_csv(c8, capsys):
    code, out, _ = _run(["witness", "--input", c8, "--t", "0.5,1"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# schema_version: 1"
    body = [l for l in lines if not l.startswith("#")]
    rows = list(csv.reader(body))
    assert rows[0] == ["component", "t", "value"]
    assert [r[1] for r in rows[1:]] == ["0.5", "1.0"]
    # girth 8 caps distances at 8/3 > 1, so every edge term is 1 - e^{-t}
    assert float(rows[2][2]) == pytest.approx(2 * (1 - math.exp(-1)), abs=1e-12)


def test_witness_with_kernel_file(tmp_path, c8, capsys):
    kpath = _write(tmp_path / "k.json", {"kind": "distance"})
    code, out, _ = _run(["witness", "--input", c8, "--kernel", kpath, "--t", "1"], capsys)
    assert code == 0
    assert "# kernel: distance" in out
    bad = _write(tmp_path / "k2.json", {"kind": "explicit", "matrices": [[[0.0]]]})
    assert _run(["witness", "--input", c8, "--kernel", bad], capsys)[0] == 2


def test_decompose_and_factor(tmp_path, c8, capsys):
    code, out, _ = _run(["decompose", "--input", c8], capsys)
    assert code == 0
    res = json.loads(out)["result"]["elementary_decomposition"]
    assert res["rounds"] <= res["bounded_geometry_constant"]

    t = _write(tmp_path / "t.json", {"domain": list(range(8)), "image": [(x + 2) % 8 for x in range(8)]})
    code, out, _ = _run(["factor", "--input", c8, "--translation", t, "--n", "2"], capsys)
    assert code == 0
    assert json.loads(out)["self_checks"]["passed"]
    code, _, err = _run(["factor", "--input", c8, "--translation", t, "--n", "1"], capsys)
    assert code == 2
    assert "not in E" in json.loads(err)["detail"]

    code, out, _ = _run(["decompose", "--input", c8, "--translation", t], capsys)
    assert code == 0
    parts = json.loads(out)["result"]["tripartition"]["parts"]
    assert sorted(x for p in parts for x in p) == list(range(8))


def test_girth_cheeger_boxspace(tmp_path, c8, capsys):
    _, out, _ = _run(["girth", "--input", c8], capsys)
    assert json.loads(out)["result"]["girth"] == [{"component": 0, "girth": 8}]
    _, out, _ = _run(["cheeger", "--input", c8], capsys)
    assert json.loads(out)["result"]["cheeger"][0]["h"] == 0.5

    space_out = tmp_path / "sl2.json"
    code, out, _ = _run(
        ["boxspace", "--family", "sl2", "--primes", "3,5", "--space-out", str(space_out), "--jobs", "2"], capsys
    )
    assert code == 0
    rep = json.loads(out)["result"]
    assert rep["box_space"]["sizes"] == [24, 120]
    assert rep["group_laplacian_matches"] == [True, True]
    assert read_json(space_out)["components"][0]["size"] == 24

    code, out, _ = _run(["boxspace", "--family", "cyclic", "--tower", "2,4,8"], capsys)
    assert code == 0
    assert json.loads(out)["result"]["group_laplacian_matches"] == [False, True, True]
    assert _run(["boxspace", "--family", "cyclic", "--tower", "2,5"], capsys)[0] == 2
    assert _run(["boxspace", "--family", "sl2"], capsys)[0] == 2


def test_canonical_floats():
    assert canonical(0.1 + 0.2) == 0.3
    assert canonical(float("inf")) == "inf"
    assert canonical(-0.0) == 0.0
    assert dumps({"b": 1, "a": [1.0]}) == '{\n  "a": [\n    1.0\n  ],\n  "b": 1\n}\n'


def test_load_kernel_shape_check(tmp_path):
    space = graphs.cycle(4)
    path = _write(tmp_path / "k.json", {"kind": "explicit", "matrices": [[[0, 1], [1, 0]]]})
    with pytest.raises(InputError, match="shapes"):
        load_kernel(path, space)
    with pytest.raises(InputError):
        load_kernel(_write(tmp_path / "k2.json", {"kind": "magic"}), space)
