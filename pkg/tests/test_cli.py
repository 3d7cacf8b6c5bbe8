import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from gwed.cli import EXIT_INPUT, EXIT_OK, REPORT_SCHEMA, main, read_observations, InputError
from gwed.core import GwedParams
from gwed.moments import moment_summary
from gwed.sampling import RngStream, sample_inverse


@pytest.fixture(scope="module")
def data_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "sim.txt"
    # seed chosen so the fit is interior; some replications hit the s -> 0 boundary
    sample_inverse((1.0, 1.0, 0.5, -0.35), 2000, RngStream(8)).write(path)
    return path


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fit_report_validates(data_file, tmp_path, capsys):
    out = tmp_path / "fit.json"
    curves = tmp_path / "curves.tsv"
    code, _, _ = _run(["fit", data_file, "--out", out, "--curves", curves], capsys)
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, REPORT_SCHEMA)
    assert doc["n"] == 2000 and doc["model"] == "gwed"
    assert set(doc["estimates"]) == {"lambda1", "lambda2", "alpha", "theta"}
    for name in ("lambda1", "theta"):
        assert doc["estimates"][name]["std_error"] > 0
        assert doc["estimates"][name]["identified"]
    # lambda2 and alpha only enter through their product
    assert doc["estimates"]["lambda2"]["std_error"] is None
    assert not doc["estimates"]["alpha"]["identified"]
    assert doc["aic"] == pytest.approx(8 - 2 * doc["loglik"], rel=1e-9)
    header = curves.read_text().splitlines()[0]
    assert header == "#x\tpdf\tcdf\tsurvival\thazard\tecdf\thist_density"


def test_fit_wed_and_aic(data_file, tmp_path, capsys):
    gw, we = tmp_path / "g.json", tmp_path / "w.json"
    assert _run(["fit", data_file, "--out", gw], capsys)[0] == EXIT_OK
    assert _run(["fit", data_file, "--model", "wed", "--out", we], capsys)[0] == EXIT_OK
    dg, dw = json.loads(gw.read_text()), json.loads(we.read_text())
    jsonschema.validate(dw, REPORT_SCHEMA)
    assert set(dw["estimates"]) == {"alpha", "lambda"}
    # these data pull the WED to its alpha -> 0 (gamma) edge
    assert dw["convergence"]["boundary"]
    assert dg["loglik"] >= dw["loglik"] - 1e-6


def test_report_round_trips(data_file, tmp_path, capsys):
    out = tmp_path / "fit.json"
    _run(["fit", data_file, "--out", out], capsys)
    doc = json.loads(out.read_text())
    assert json.loads(json.dumps(doc)) == doc
    for v in doc["estimates"].values():
        assert float(f"{v['estimate']:.10g}") == v["estimate"]


def test_sample_then_fit_is_deterministic(tmp_path, capsys):
    reports = []
    for k in range(2):
        s = tmp_path / f"s{k}.txt"
        r = tmp_path / f"r{k}.json"
        assert _run(["sample", "--params", "0.7,0.9,0.8,0.8", "--n", 500, "--seed", 5,
                     "--out", s], capsys)[0] == EXIT_OK
        assert _run(["fit", s, "--out", r], capsys)[0] in (0, 2)
        doc = json.loads(r.read_text())
        doc["input"].pop("path")
        reports.append(doc)
    assert (tmp_path / "s0.txt").read_bytes() == (tmp_path / "s1.txt").read_bytes()
    assert reports[0] == reports[1]


def test_sample_rejection_mean(tmp_path, capsys):
    out = tmp_path / "s.txt"
    code, _, _ = _run(["sample", "--params", "1,1,1,0", "--n", 100000, "--seed", 7,
                       "--method", "rejection", "--out", out], capsys)
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# seed=7 method=rejection")
    assert np.mean([float(v) for v in lines[1:]]) == pytest.approx(1.5, abs=0.02)


def test_sample_invalid_theta(capsys):
    code, _, err = _run(["sample", "--params", "1,1,1,1.5", "--n", 10], capsys)
    assert code == EXIT_INPUT
    assert "theta must lie in [-1,1]" in err


def test_empty_file(tmp_path, capsys):
    f = tmp_path / "empty.txt"
    f.write_text("")
    code, _, err = _run(["fit", f], capsys)
    assert code == EXIT_INPUT
    assert "no observations" in err


def test_bad_line_is_reported_with_number(tmp_path, capsys):
    f = tmp_path / "bad.txt"
    f.write_text("1.0\n2.0\nabc\n3.0\n")
    code, _, err = _run(["fit", f], capsys)
    assert code == EXIT_INPUT
    assert "bad.txt:3" in err


def test_nonpositive_and_missing_file(tmp_path, capsys):
    f = tmp_path / "neg.txt"
    f.write_text("1.0\n-2.0\n")
    assert _run(["fit", f], capsys)[0] == EXIT_INPUT
    assert _run(["fit", tmp_path / "nope.txt"], capsys)[0] == EXIT_INPUT
    assert _run(["fit", f, "--out", tmp_path / "no" / "dir.json"], capsys)[0] == EXIT_INPUT


def test_csv_column_and_header(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("id,value\n1,0.5\n2,1.5\n")
    x, digest = read_observations(f, column=2, skip_header=True)
    assert np.array_equal(x, [0.5, 1.5]) and len(digest) == 64
    with pytest.raises(InputError, match="no column 3"):
        read_observations(f, column=3, skip_header=True)


def test_eval_figure_one_curve(tmp_path, capsys):
    out = tmp_path / "c.tsv"
    code, _, _ = _run(["eval", "--params", "1,1,1,-0.99", "--grid", "0:8:801", "--out", out], capsys)
    assert code == EXIT_OK
    tab = np.loadtxt(out)
    pdf_col = tab[:, 1]
    assert np.all(pdf_col >= 0)
    k = int(np.argmax(pdf_col))
    assert 0 < k < len(pdf_col) - 1
    assert np.all(np.diff(pdf_col[: k + 1]) >= 0) and np.all(np.diff(pdf_col[k:]) <= 0)


def test_eval_hazard_tends_to_lambda1(tmp_path, capsys):
    out = tmp_path / "c.tsv"
    _run(["eval", "--params", "2,1,1,0.5", "--grid", "0:40:101", "--out", out], capsys)
    assert np.loadtxt(out)[-1, 4] == pytest.approx(2.0, rel=1e-6)


@pytest.mark.parametrize("params, tail", [("1,1,1,-0.99", 1e-3), ("1,1,1,0.99", 1e-3),
                                          ("1,1,0.5,-0.99", 1e-3),
                                          # survival at 8 is 1.09e-3 for this set
                                          ("1,1,0.5,0.99", 1.1e-3)])
def test_eval_tail_mass_at_eight(params, tail, tmp_path, capsys):
    out = tmp_path / "c.tsv"
    _run(["eval", "--params", params, "--grid", "0:8:81", "--out", out], capsys)
    assert abs(np.loadtxt(out)[-1, 2] - 1) <= tail


def test_eval_bad_grid(capsys):
    code, _, err = _run(["eval", "--params", "1,1,1,0", "--grid", "0:8"], capsys)
    assert code == EXIT_INPUT and "x_min:x_max:steps" in err


def test_moments_command(capsys):
    code, out, _ = _run(["moments", "--params", "1,1,1,0", "--x0", 500, "--pwm"], capsys)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["raw_moments"][0] == pytest.approx(1.5)
    assert doc["conditional_moments"]["values"][0] == pytest.approx(1.5)
    assert {(e["s"], e["r"]) for e in doc["pwm"]} == {(s, r) for s in range(3) for r in range(3)}
    code, out, _ = _run(["moments", "--params", "5,2,1,0.99"], capsys)
    assert json.loads(out)["skewness"] == pytest.approx(moment_summary(GwedParams(5, 2, 1, 0.99)).skewness,
                                                        rel=1e-9)
    code, out, _ = _run(["moments", "--params", "1,1,1e6,0"], capsys)
    assert json.loads(out)["skewness"] == pytest.approx(2.0, abs=1e-4)


def test_moments_invalid_params(capsys):
    assert _run(["moments", "--params", "1,1,1"], capsys)[0] == EXIT_INPUT
    assert _run(["moments", "--params", "1,0,1,0"], capsys)[0] == EXIT_INPUT


def test_gof_command(data_file, capsys):
    code, out, _ = _run(["gof", data_file, "--params", "1,1,0.5,-0.35"], capsys)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["k"] == 4 and doc["n"] == 2000
    assert doc["aic"] == pytest.approx(8 - 2 * doc["loglik"], rel=1e-9)
    code, out, _ = _run(["gof", data_file, "--model", "wed", "--params", "1,1"], capsys)
    assert json.loads(out)["k"] == 2


def test_usage_error_exit_code():
    proc = subprocess.run([sys.executable, "-m", "gwed", "fit"], capture_output=True, text=True)
    assert proc.returncode == EXIT_INPUT
    assert "usage" in proc.stderr
