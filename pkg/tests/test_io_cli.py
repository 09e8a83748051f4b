import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from coopbc.cli import CSV_COLUMNS, main
from coopbc.errors import ValidationError
from coopbc.estimators import AuxiliarySearch, MarginEvaluator
from coopbc.instances import bsc, dsbs, noiseless8_aux, noiseless_problem, pure_noise_problem
from coopbc.io import SpecError, dumps, parse_spec, parse_spec_dict, spec_to_dict
from coopbc.model import full_joint
from coopbc.region import theorem1_margins
from oracles import oracle_margins

SPECS = Path(__file__).resolve().parents[1] / "specs"


def _minimal():
    return {
        "alphabets": {n: 2 for n in ("S", "T", "X", "Y11", "Y21", "X1", "Y22", "X2", "Y12")},
        "source": [0.25] * 4,
        "channels": {"bc": [0.25] * 8, "link1": [0.5] * 4, "link2": [0.5] * 4},
    }


def _cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# -- parsing ----------------------------------------------------------------


def test_minimal_spec_parses():
    spec = parse_spec_dict(_minimal())
    assert spec.aux is None and spec.seed is None
    assert spec.problem.sizes["K"] == 1


def test_dsbs_bsc_file_transcribes_exactly():
    spec = parse_spec(SPECS / "dsbs_bsc.json")
    p = 0.25
    assert spec.problem.p_st.mass.tolist() == [[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]]
    assert np.array_equal(spec.problem.p_st.mass, dsbs(0.25))
    assert np.array_equal(spec.problem.link1.mass, bsc(0.1))
    assert spec.problem.bc.mass[0, 0, 0] == 0.9 * 0.9
    assert spec.problem.bc.mass[1, 0, 1] == 0.1 * 0.9


def test_renormalize_boundary():
    doc = _minimal()
    doc["source"] = [0.25, 0.25, 0.25, 0.249999]
    with pytest.raises(SpecError, match="source"):
        parse_spec_dict(doc)
    spec = parse_spec_dict(doc, renormalize=True)
    assert spec.problem.p_st.mass.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d.pop("source"), "source"),
    (lambda d: d["channels"].update(bc=[0.25] * 7), "channels.bc"),
    (lambda d: d["channels"].update(link1=[0.5, 0.5, "x", 0.5]), "channels.link1"),
    (lambda d: d["channels"].update(link2=[1.5, -0.5, 0.5, 0.5]), "channels.link2"),
    (lambda d: d["alphabets"].update(S=0), "alphabets.S"),
    (lambda d: d["alphabets"].pop("Y22"), "alphabets.Y22"),
    (lambda d: d.update(seed=-1), "seed"),
    (lambda d: d.update(search={"restarts": "many"}), "search.restarts"),
    (lambda d: d.update(auxiliary={"wuv": []}), "alphabets.W"),
])
def test_errors_carry_field_path(mutate, path):
    doc = _minimal()
    mutate(doc)
    with pytest.raises(SpecError) as e:
        parse_spec_dict(doc)
    assert e.value.path == path


def test_nan_rejected():
    from coopbc.io import load_json

    with pytest.raises(ValidationError):
        load_json('{"source": [NaN]}')


def test_spec_round_trip_is_exact():
    p = noiseless_problem(8)
    doc = spec_to_dict(p, noiseless8_aux(p), seed=3)
    again = parse_spec_dict(json.loads(dumps(doc)))
    assert dumps(again.to_dict()) == dumps(parse_spec_dict(doc).to_dict())
    m = theorem1_margins(full_joint(again.problem, again.aux))
    assert m.values == pytest.approx(oracle_margins(p, noiseless8_aux(p)), abs=1e-12)


# -- commands ---------------------------------------------------------------


def test_evaluate_noiseless8(capsys):
    code, out, _ = _cli(capsys, "evaluate", "--spec", SPECS / "noiseless8.json")
    assert code == 0
    lines = dict(line.split(None, 1) for line in out.splitlines() if line.strip())
    for k, v in zip(("m1", "m2", "m3", "m4", "c1", "c2"), (1, 1, 1, 2, 1, 1)):
        assert lines[k] == f"{v:.9f}"
    assert lines["admissible"] == "true"


def test_evaluate_pure_noise_is_a_report(capsys):
    code, out, _ = _cli(capsys, "evaluate", "--spec", SPECS / "pure_noise.json", "--format", "csv")
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["admissible"] == "false"


def test_csv_and_pretty_agree(capsys):
    _, out_csv, _ = _cli(capsys, "oracle", "--spec", SPECS / "dsbs_bsc.json", "--format", "csv")
    _, out_pretty, _ = _cli(capsys, "oracle", "--spec", SPECS / "dsbs_bsc.json")
    row = next(csv.DictReader(io.StringIO(out_csv)))
    assert tuple(row) == CSV_COLUMNS
    pretty = dict(l.split(None, 1) for l in out_pretty.splitlines()[:len(CSV_COLUMNS)])
    for k in ("m1", "m2", "m3", "m4", "c1", "c2"):
        assert float(pretty[k]) == pytest.approx(float(row[k]), abs=1e-9)
    assert pretty["oracle_feasible"] == row["oracle_feasible"]


def test_reduce_noncoop_reports_tiny_deviation(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, _, _ = _cli(capsys, "reduce", "--mode", "noncoop", "--spec", SPECS / "dsbs_bsc.json",
                      "--format", "structured", "--out", out)
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["reduction"]["max_deviation"] < 1e-9


def test_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _cli(capsys, "evaluate", "--spec", bad)[0] == 2
    assert _cli(capsys, "evaluate", "--spec", tmp_path / "missing.json")[0] == 2
    assert _cli(capsys, "evaluate", "--spec", SPECS / "noiseless8.json", "--budget", "10")[0] == 3
    doc = json.loads((SPECS / "noiseless8.json").read_text())
    doc["auxiliary"]["margins"] = {"m1": 1.5}
    forged = tmp_path / "forged.json"
    forged.write_text(json.dumps(doc))
    code, _, err = _cli(capsys, "evaluate", "--spec", forged)
    assert code == 4 and "inconsistency" in err
    doc["auxiliary"]["margins"] = {"m1": 1.0, "m4": 2.0}
    forged.write_text(json.dumps(doc))
    assert _cli(capsys, "evaluate", "--spec", forged)[0] == 0
    assert _cli(capsys, "evaluate")[0] == 2
    assert _cli(capsys, "simulate", "--spec", SPECS / "noiseless8.json")[0] == 2


def test_seed_precedence(capsys, tmp_path):
    doc = json.loads((SPECS / "dsbs_bsc.json").read_text())
    doc["seed"] = 11
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "o.json"

    def seed_of(*extra):
        _cli(capsys, "evaluate", "--spec", path, "--format", "structured", "--out", out, *extra)
        return json.loads(out.read_text())["config"]["seed"]

    assert seed_of() == 11
    assert seed_of("--seed", "5") == 5
    doc.pop("seed")
    path.write_text(json.dumps(doc))
    assert seed_of() == 0


def test_structured_report_reruns_from_its_echo(capsys, tmp_path):
    out = tmp_path / "a.json"
    _cli(capsys, "simulate", "--spec", SPECS / "dsbs_bsc.json", "--seed", "3",
         "--format", "structured", "--out", out)
    first = json.loads(out.read_text())
    echo = tmp_path / "echo.json"
    echo.write_text(json.dumps(first["config"]["spec"]))
    out2 = tmp_path / "b.json"
    _cli(capsys, "simulate", "--spec", echo, "--seed", str(first["config"]["seed"]),
         "--format", "structured", "--out", out2)
    second = json.loads(out2.read_text())
    assert second["simulation"] == first["simulation"]
    assert second["margins"] == first["margins"]
    assert "elapsed" not in out.read_text()


def test_search_certificate_feeds_evaluate(capsys, tmp_path):
    out = tmp_path / "s.json"
    assert _cli(capsys, "search", "--spec", SPECS / "dsbs_bsc.json", "--format", "structured",
                "--out", out)[0] == 0
    cert = json.loads(out.read_text())["certificate"]
    path = tmp_path / "cert.json"
    path.write_text(json.dumps(cert))
    assert _cli(capsys, "evaluate", "--spec", path)[0] == 0  # stored margins re-verified


def test_batch_csv(capsys):
    code, out, _ = _cli(capsys, "batch", "--spec", SPECS / "noiseless8.json",
                        "--spec", SPECS / "pure_noise.json")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["instance_id"] for r in rows] == ["noiseless8", "pure_noise"]
    assert rows[0]["admissible"] == rows[0]["oracle_feasible"] == "true"
    assert rows[1]["admissible"] == rows[1]["oracle_feasible"] == "false"
    assert float(rows[0]["max_reduction_dev"]) < 1e-9


# -- estimators -------------------------------------------------------------


def test_margin_evaluator():
    p = noiseless_problem(8)
    est = MarginEvaluator().fit()
    X = [(p, noiseless8_aux(p))]
    assert np.allclose(est.transform(X), [[1, 1, 1, 2, 1, 1]], atol=1e-12)
    assert est.predict(X).tolist() == [True]
    with pytest.raises(ValidationError):
        est.transform([p])


def test_auxiliary_search_estimator():
    est = AuxiliarySearch(restarts=2, iterations=40, random_state=1)
    assert est.get_params()["random_state"] == 1
    est.fit(pure_noise_problem())
    assert est.predict() is False
    assert est.score() == est.report_.min_margin
    assert est.restart_objectives_.shape == (2,)
    clone = AuxiliarySearch(**est.get_params()).fit(pure_noise_problem())
    assert clone.report_ == est.report_
