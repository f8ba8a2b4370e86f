import csv
import json

import numpy as np
import pytest

from hypnet.cli import run
from hypnet.config import ConfigParseError, dumps, load_config, system_from_dict, system_to_dict
from hypnet.models import instantiate, list_models
from hypnet.wellposed import classify


def _dump(tmp_path, name, capsys, params=None):
    argv = ["models", "dump", name] + (["--params", json.dumps(params)] if params else [])
    assert run(argv) == 0
    path = tmp_path / f"{name}.json"
    path.write_text(capsys.readouterr().out)
    return path


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_models_list(capsys):
    assert run(["models", "list"]) == 0
    assert json.loads(capsys.readouterr().out) == list_models()


@pytest.mark.parametrize("name", sorted(list_models()))
def test_dump_then_classify_matches_in_memory(tmp_path, capsys, name):
    path = _dump(tmp_path, name, capsys)
    assert run(["classify", str(path)]) == 0
    assert capsys.readouterr().out == dumps(classify(instantiate(name).system).to_dict())


def test_config_roundtrip_preserves_data():
    sys = instantiate("dirac_network").system
    back = system_from_dict(json.loads(json.dumps(system_to_dict(sys))))
    for v in sys.sites:
        a, b = sys.conditions[v], back.conditions[v]
        assert np.allclose(a.P_Y, b.P_Y) and np.allclose(a.B, b.B) and np.allclose(a.Qv, b.Qv)
    assert np.allclose(sys.edges[1].N(0.5), back.edges[1].N(0.5))


def test_maxwell_classify_verdict(tmp_path, capsys):
    path = _dump(tmp_path, "maxwell_two_intervals", capsys)
    run(["classify", str(path), "--lambda", "0", "--mu", "0"])
    rep = json.loads(capsys.readouterr().out)
    assert rep["verdict"] == "unitary_group"
    assert all(e["lambda"]["holds"] and e["mu"]["holds"] for e in rep["shift_checks"].values())


def test_singular_M_reports_edge_and_node(tmp_path, capsys):
    doc = json.loads(_dump(tmp_path, "maxwell_two_intervals", capsys).read_text())
    doc["coefficients"]["2"]["M"] = [[0.0, 0.0], [0.0, 0.0]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert run(["check", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "M_e invertible" in err and "edge 2, node 0" in err


def test_syntax_error_has_line(tmp_path, capsys):
    p = tmp_path / "syn.json"
    p.write_text('{\n  "graph": {\n    "vertices": [1, 2,]\n}')
    assert run(["classify", str(p)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_semantic_error_names_section(tmp_path, capsys):
    doc = json.loads(_dump(tmp_path, "second_sound", capsys).read_text())
    doc["vertex_conditions"]["v1"]["B"] = [[1.0, 2.0]]
    p = tmp_path / "sem.json"
    p.write_text(json.dumps(doc, indent=1))
    assert run(["check", str(p)]) == 2
    err = capsys.readouterr().err
    assert "vertex_conditions.v1" in err


def test_missing_section(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"graph": {"vertices": [], "edges": []}}))
    with pytest.raises(ConfigParseError) as exc:
        load_config(str(p))
    assert exc.value.section == "coefficients"


def test_tolerance_precedence(tmp_path, capsys):
    doc = json.loads(_dump(tmp_path, "transport", capsys).read_text())
    doc["tolerances"]["tol_eig"] = 1e-7
    p = tmp_path / "t.json"
    p.write_text(json.dumps(doc))
    assert load_config(str(p))[0].tol.tol_eig == 1e-7
    assert load_config(str(p), {"tol_eig": 1e-5})[0].tol.tol_eig == 1e-5


def test_simulate_dirac_energy_constant(tmp_path, capsys):
    path = _dump(tmp_path, "dirac_network", capsys)
    out = tmp_path / "sim"
    assert run(["simulate", str(path), "--t-final", "1", "--method", "expm", "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["max_relative_energy_drift"] < 1e-6
    rows = _rows(out / "energy.csv")
    assert rows[0] == ["t", "E", "constraint_residual"]
    E = np.array([float(r[1]) for r in rows[1:]])
    assert np.abs(E / E[0] - 1).max() < 1e-6
    edge = _rows(out / "edge_1.csv")
    assert edge[0] == ["t", "x", "re_u1", "im_u1", "re_u2", "im_u2"]
    assert len(edge) == 1 + 51 * 65
    assert _rows(out / "boundary.csv")[0][:3] == ["t", "re_x_v1_1", "im_x_v1_1"]


def test_simulate_is_deterministic(tmp_path, capsys):
    path = _dump(tmp_path, "second_sound", capsys)
    outs = []
    for d in ("a", "b"):
        run(["simulate", str(path), "--cells", "16", "--t-final", "0.5", "--seed", "3", "--out", str(tmp_path / d)])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    assert (tmp_path / "a" / "edge_1.csv").read_bytes() == (tmp_path / "b" / "edge_1.csv").read_bytes()


def test_resolvent_from_csv(tmp_path, capsys):
    path = _dump(tmp_path, "maxwell_two_intervals", capsys)
    xs = np.linspace(0, 1, 1001)
    for eid in (1, 2):
        with open(tmp_path / f"f{eid}.csv", "w") as fh:
            fh.write("x,re_u1,im_u1,re_u2,im_u2\n")
            for x in xs:
                fh.write(f"{x:.17g},{np.sin(3 * x):.17g},0.0,{np.cos(x):.17g},{x * x:.17g}\n")
    (tmp_path / "g.json").write_text(json.dumps({"v0": [0.5, 0.0, 0.5, 0.0]}))
    out = tmp_path / "res"
    code = run(["resolvent", str(path), "--f", f"1={tmp_path / 'f1.csv'}", "--f", f"2={tmp_path / 'f2.csv'}",
                "--g", str(tmp_path / "g.json"), "--out", str(out), "--strict"])
    rep = json.loads(capsys.readouterr().out)
    assert code == 0 and rep["residual"] < 1e-6
    assert _rows(out / "solution_edge_1.csv")[0] == ["x", "re_u1", "im_u1", "re_u2", "im_u2"]


def test_resolvent_singular_is_input_error(tmp_path, capsys):
    path = _dump(tmp_path, "dirac_network", capsys)
    assert run(["resolvent", str(path), "--cells", "20"]) == 2
    assert "SingularBoundarySystem" in capsys.readouterr().err


def test_qual_strict_and_seeded(tmp_path, capsys):
    path = _dump(tmp_path, "maxwell_two_intervals", capsys)
    assert run(["qual", str(path), "--property", "positive", "--strict"]) == 1
    capsys.readouterr()
    path = _dump(tmp_path, "transport", capsys)
    texts = []
    for _ in range(2):
        assert run(["qual", str(path), "--property", "positive", "--trials", "2", "--seed", "4", "--strict"]) == 0
        texts.append(capsys.readouterr().out)
    assert texts[0] == texts[1]
    assert json.loads(texts[0])["static_verdict"].startswith("certified")


def test_bad_arguments_exit_2(capsys):
    assert run(["simulate"]) == 2
    assert run(["models", "dump", "nonexistent"]) == 2
