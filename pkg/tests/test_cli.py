import csv
import json

import pytest

from proxipoint.cli import main
from proxipoint.config import instance_from_dict, instance_to_dict, load_config, load_instance
from proxipoint.engine import compute_proximal_pair
from proxipoint.errors import IoError, MapSyntaxError, SchemaError
from proxipoint.registry import EXAMPLES, example_config, run_example, solve
from proxipoint.report import dumps, emit_trace, fmt_float
from proxipoint.solvers import IterationTrace, solve_first_kind

BASE = {
    "metric": {"kind": "L2", "dim": 1},
    "G": {"shape": "interval", "lo": 2, "hi": None},
    "H": {"shape": "interval", "lo": "-inf", "hi": -1},
    "map": "(2-3*x)/4",
    "relation": {"text": "0.75*max(r,s,t)", "class": "A"},
    "contraction_type": "first",
    "solver": {"x0": [2]},
}


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# --- config loading ----------------------------------------------------------------


def test_load_basha(tmp_path):
    inst = load_instance(write(tmp_path, BASE))
    assert compute_proximal_pair(inst).dist == 3.0
    assert inst.tolerances.tol_residual == 1e-6


def test_dim2_with_scalar_map_rejected():
    doc = dict(BASE, metric={"kind": "L1", "dim": 2}, G={"shape": "box", "intervals": [[4, 5], [0, 1]]},
               H={"shape": "box", "intervals": [[0, 1], [0, 1]]}, map="x/2")
    with pytest.raises(SchemaError):
        instance_from_dict(doc)


def test_Aprime_relation_accepted():
    doc = dict(BASE, relation={"text": "(1/3)*(s+t)", "class": "Aprime"})
    assert instance_from_dict(doc).instance.f.declared_class == "Aprime"


def test_catalog_relation_accepted():
    doc = dict(BASE, relation={"catalog": "basha", "params": {"alpha": 0.75}})
    assert instance_from_dict(doc).instance.f.to_text() == "0.75*r"


@pytest.mark.parametrize(
    "patch,key",
    [
        ({"extra": 1}, "<root>"),
        ({"metric": {"kind": "L3", "dim": 1}}, "metric/kind"),
        ({"relation": {"class": "A"}}, "relation"),
        ({"solver": {"x0": [2], "bogus": 1}}, "solver"),
        ({"solver": {"x0": [2, 3]}}, "solver/x0"),
        ({"G": {"shape": "interval", "lo": 3, "hi": 2}}, "G/H"),
    ],
)
def test_schema_errors(patch, key):
    with pytest.raises(SchemaError) as exc:
        instance_from_dict(dict(BASE, **patch))
    assert exc.value.key == key


def test_missing_key():
    doc = {k: v for k, v in BASE.items() if k != "map"}
    with pytest.raises(SchemaError):
        instance_from_dict(doc)


def test_dsl_error_surfaces():
    with pytest.raises(MapSyntaxError):
        instance_from_dict(dict(BASE, map="(2-3*x"))


def test_unreadable_config(tmp_path):
    with pytest.raises(SchemaError):
        load_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(SchemaError):
        load_config(bad)


@pytest.mark.parametrize("name", sorted(EXAMPLES))
def test_round_trip_reproduces_reports(name):
    cfg = example_config(name)
    doc = instance_to_dict(cfg.instance, scheme=cfg.scheme, x0=cfg.x0, max_iter=cfg.max_iter, p_max=cfg.p_max)
    again = instance_from_dict(json.loads(dumps(doc)))
    assert instance_to_dict(again.instance) == instance_to_dict(cfg.instance)
    assert again.scheme == cfg.scheme and again.x0 == cfg.x0
    assert dumps(solve(again)) == dumps(solve(cfg))


# --- traces ------------------------------------------------------------------------


def test_trace_csv(tmp_path):
    res = solve_first_kind(example_config("l1-second-type").instance, (4, 1))
    path = tmp_path / "t.csv"
    emit_trace(res.trace, "csv", path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["n", "x1", "x2", "step", "residual"]
    steps = [float(r[3]) for r in rows[1:6]]
    assert steps == [0.5, 0.25, 0.125, 0.0625, 0.03125]
    assert rows[-1][3] == ""
    assert len(rows) == len(res.trace.iterates) + 1


def test_trace_json(tmp_path):
    res = solve_first_kind(example_config("l1-second-type").instance, (4, 1))
    path = tmp_path / "t.json"
    emit_trace(res.trace, "json", path)
    doc = json.loads(path.read_text())
    assert set(doc) == {"iterates", "steps", "image_steps", "residuals"}
    assert doc["steps"][:2] == [0.5, 0.25]


def test_empty_trace_header_only(tmp_path):
    path = tmp_path / "e.csv"
    emit_trace(IterationTrace(), "csv", path, dim=2)
    assert path.read_text() == "n,x1,x2,step,residual\n"


def test_trace_invalid_path(tmp_path):
    with pytest.raises(IoError):
        emit_trace(IterationTrace(), "csv", tmp_path / "missing" / "t.csv", dim=1)


def test_float_format():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(float("inf")) == '"inf"'
    assert dumps({"b": 1, "a": [0.5]}) == '{\n  "a": [0.5],\n  "b": 1\n}\n'


# --- registry ----------------------------------------------------------------------


def test_run_example_reports():
    rep = run_example("segment-union")
    assert rep["match"] and rep["solve"]["point"] == [2.0, 0.0]
    assert any("(4, 0)" in n for n in rep["fixture_notes"])
    strong = run_example("strong-ex")
    assert strong["solve"]["point"] == pytest.approx([1.0], abs=1e-6)
    assert len(strong["solve"]["family"]["levels"]) == 64


# --- command line ------------------------------------------------------------------


def test_cli_solve(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    code, out, _ = run(capsys, "solve", "-c", write(tmp_path, BASE), "--trace", str(trace))
    assert code == 0
    rep = json.loads(out)
    assert rep["solve"]["point"] == [2.0] and rep["seed"] == 0xBA5E
    assert trace.read_text().startswith("n,x1,step,residual\n")


def test_cli_hypothesis_failure(tmp_path, capsys):
    doc = dict(BASE, G={"shape": "interval", "lo": 0, "hi": 1}, H={"shape": "interval", "lo": 3, "hi": 4},
               map="3+x", solver={"x0": [1]})
    code, _, err = run(capsys, "solve", "-c", write(tmp_path, doc))
    assert code == 2 and "NoFeasiblePoint" in err


def test_cli_certify_violation(tmp_path, capsys):
    doc = json.loads(json.dumps(instance_to_dict(example_config("l1-second-type").instance)))
    doc["relation"] = {"text": "0.1*r"}
    code, out, _ = run(capsys, "certify", "-c", write(tmp_path, doc), "--quadruples", "500")
    assert code == 3 and json.loads(out)["cert_report"]["verdict"] == "violated"


def test_cli_classify(capsys):
    assert run(capsys, "classify-relation", "-e", "(1/3)*(s+t)", "--class", "Aprime")[0] == 0
    code, out, _ = run(capsys, "classify-relation", "-e", "r", "--class", "A")
    assert code == 3 and json.loads(out)["class_report"]["witnesses"]


def test_cli_distance(tmp_path, capsys):
    code, out, _ = run(capsys, "distance", "-c", write(tmp_path, BASE), "--grid")
    rep = json.loads(out)
    assert code == 0 and rep["distance"]["dist"] == 3.0
    assert abs(rep["grid_distance"]["value"] - 3.0) <= rep["grid_distance"]["resolution"]


def test_cli_examples(capsys):
    code, out, _ = run(capsys, "list-examples")
    assert code == 0 and set(json.loads(out)) == set(EXAMPLES)
    assert run(capsys, "run-example", "kannan-ex")[0] == 0
    assert run(capsys, "run-example", "nope")[0] == 4


@pytest.mark.parametrize(
    "argv",
    [["solve"], ["frobnicate"], ["solve", "-c", "/nonexistent.json"], ["classify-relation", "-e", "(r", "--class", "A"]],
)
def test_cli_usage_errors(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:  # argparse exits directly
        code = exc.code
    assert code == 4


def test_cli_start_not_proximal(tmp_path, capsys):
    doc = dict(BASE, solver={"x0": [5]})
    assert run(capsys, "solve", "-c", write(tmp_path, doc))[0] == 4


@pytest.mark.parametrize(
    "argv",
    [
        ["run-example", "two-interval"],
        ["certify", "-c", "CFG", "--quadruples", "2000"],
        ["solve", "-c", "CFG"],
        ["classify-relation", "-e", "0.9*sqrt(s*t)", "--class", "A"],
        ["distance", "-c", "CFG", "--grid"],
    ],
)
def test_cli_deterministic(argv, tmp_path, capsys):
    cfg = write(tmp_path, BASE)
    argv = [cfg if a == "CFG" else a for a in argv]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second
