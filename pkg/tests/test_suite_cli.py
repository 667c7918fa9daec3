import json
import math

import pytest

from csl import catalog
from csl import suite as st
from csl.cli import main, parse_spec

SMALL = {"cases": [{"surface": {"kind": "torus"}, "factor": {"kind": "linear_harmonic"}}],
         "torus_grid": 48, "points": 20, "fields": 1, "nodes": 4,
         "suites": ["ambient", "surface", "integrals"]}


def test_catalog_entries():
    listing = catalog.catalog_list()
    text = json.dumps(listing)
    for name in ("sphere", "torus", "harmonic_potential"):
        assert name in text


def test_non_harmonic_factor_fails_harmonicity():
    cfg = {"cases": [{"surface": {"kind": "sphere"},
                      "factor": {"kind": "expr", "sigma": "x^2", "harmonic_intent": True}}],
           "suites": ["ambient"], "points": 10, "grid": 16}
    report = st.run_suite(cfg)
    check = next(c for c in report.checks if c.name == "harmonicity")
    assert check.verdict == "fail"
    # at the origin the residual is exactly 2; on the unit sphere it is 2 e^-1 scale or above
    assert check.value > 0.5
    assert report.exit_code == 1


def test_empty_selection():
    report = st.run_suite({"suites": []})
    assert report.checks == [] and report.exit_code == 0
    report = st.run_suite({"cases": []})
    assert report.checks == [] and report.exit_code == 0


def test_small_suite_passes():
    report = st.run_suite(SMALL)
    assert report.counts()["fail"] == 0
    names = {c.name for c in report.checks}
    assert {"curvature_law", "harmonicity", "gauss_equation", "codazzi_general",
            "gauss_bonnet"} <= names
    tangent = next(c for c in report.checks if c.name == "codazzi_tangent_form")
    assert tangent.verdict == "report-only"


def test_report_is_byte_identical(tmp_path):
    cfg = dict(SMALL, suites=["ambient", "identities", "variations"])
    a = st.write_report(st.run_suite(cfg), tmp_path / "a")
    b = st.write_report(st.run_suite(cfg), tmp_path / "b")
    for key in ("report", "checks"):
        assert open(a[key], "rb").read() == open(b[key], "rb").read()
    doc = json.loads(open(a["report"]).read())
    assert doc["summary"]["fail"] == 0
    assert "total" in json.loads(open(a["timings"]).read())


def test_suite_selection_does_not_shift_samples():
    full = st.run_suite(dict(SMALL, suites=["ambient", "surface"]))
    only = st.run_suite(dict(SMALL, suites=["surface"]))
    pick = lambda r: [(c.name, c.value) for c in r.checks if c.name.startswith("codazzi")]
    assert pick(full) == pick(only)


@pytest.mark.parametrize("text, line, fragment", [
    ('{\n  "grid": 32,\n  "bogus": 1\n}\n', 3, "unknown key"),
    ('{\n  "suites": ["ambient",\n     "nope"]\n}\n', 2, "unknown suite"),
    ('{\n  "grid": 32,\n  "grid": -1\n}\n', 2, "positive integer"),
    ('{\n  "cases": [\n  {"surface": {"kind": "cube"}, "factor": {"kind": "zero"}}]\n}\n', 2, "cube"),
    ('{\n  "grid": 32,\n  oops\n}\n', 3, ""),
])
def test_config_errors_report_line_numbers(tmp_path, capsys, text, line, fragment):
    path = tmp_path / "run.json"
    path.write_text(text)
    with pytest.raises(st.ConfigError) as exc:
        st.load_config(path)
    assert exc.value.line == line
    assert fragment in str(exc.value)
    assert str(exc.value).startswith(f"{path}:{line}:")
    assert main(["check", "--config", str(path)]) == 2
    assert f"{path}:{line}:" in capsys.readouterr().err


def test_parse_spec():
    assert parse_spec("torus") == {"kind": "torus"}
    assert parse_spec("torus:R=3,r=0.5") == {"kind": "torus", "R": 3, "r": 0.5}
    assert parse_spec('{"kind": "expr", "sigma": "x"}') == {"kind": "expr", "sigma": "x"}
    assert parse_spec("perturbed_torus:mode=cos(u)")["mode"] == "cos(u)"


# -- command line --------------------------------------------------------

def test_cli_catalog(tmp_path, capsys):
    assert main(["catalog", "--out-dir", str(tmp_path)]) == 0
    assert "harmonic_potential" in capsys.readouterr().out
    assert (tmp_path / "catalog.json").exists()


def test_cli_check(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps(dict(SMALL, suites=["ambient"])))
    out = tmp_path / "out"
    assert main(["--threads", "1", "check", "--config", str(cfg), "--out-dir", str(out)]) == 0
    assert "0 fail" in capsys.readouterr().out
    assert json.loads((out / "report.json").read_text())["summary"]["fail"] == 0
    assert main(["check", "--config", str(cfg), "--suites", ""]) == 0


def test_cli_check_failure_exit_code(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"cases": [{"surface": {"kind": "sphere"},
                                          "factor": {"kind": "expr", "sigma": "x^2",
                                                     "harmonic_intent": True}}],
                               "suites": ["ambient"], "points": 5, "grid": 8}))
    assert main(["check", "--config", str(cfg)]) == 1


def test_cli_integrate(capsys):
    assert main(["integrate", "--surface", "sphere", "--integrand", "H2", "--grid", "32"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["value"] == pytest.approx(4 * math.pi, abs=1e-10)
    assert main(["integrate", "--surface", "torus", "--factor", "linear_harmonic",
                 "--integrand", "K", "--grid", "64"]) == 0
    assert abs(json.loads(capsys.readouterr().out)["chi"]) < 1e-6


def test_cli_vary(tmp_path, capsys):
    report = tmp_path / "vary.json"
    assert main(["vary", "--surface", "torus", "--factor", "linear_harmonic", "--f", "sin(u)*cos(v)",
                 "--quantity", "lambda1", "--nodes", "5", "--report", str(report)]) == 0
    doc = json.loads(report.read_text())
    assert doc["verdict"] == "pass" and doc["discrepancy"] < 1e-6
    capsys.readouterr()
    assert main(["vary", "--seed", "3", "--quantity", "area", "--grid", "32"]) == 0


def test_cli_flow_and_resume(tmp_path, capsys):
    out = tmp_path / "flow"
    args = ["flow", "--bandlimit", "8", "--max-steps", "1", "--tol", "0", "--out-dir", str(out)]
    assert main(args) == 0
    first = json.loads((out / "flow_summary.json").read_text())
    assert first["steps"] == 1 and first["monotone"]
    assert (out / "trace.csv").exists()
    ckpt = out / "checkpoint.json"
    assert json.loads(ckpt.read_text())["factor"] == {"kind": "zero"}
    assert main(["flow", "--initial", str(ckpt), "--max-steps", "1", "--tol", "0",
                 "--trace", str(tmp_path / "t2.csv"), "--checkpoint", str(tmp_path / "c2.json")]) == 0
    assert json.loads((tmp_path / "c2.json").read_text())["step"] == 2


def test_cli_config_supplies_defaults(tmp_path, capsys):
    cfg = tmp_path / "opts.json"
    cfg.write_text(json.dumps({"integrand": "one", "grid": 32}))
    assert main(["integrate", "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(4 * math.pi, abs=1e-10)
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert main(["integrate", "--config", str(cfg)]) == 2


def test_cli_bad_surface(capsys):
    assert main(["integrate", "--surface", "cube"]) == 2
    assert "unknown surface" in capsys.readouterr().err


@pytest.mark.slow
def test_default_suite_has_no_failures():
    report = st.run_suite(st.RunConfig())
    counts = report.counts()
    assert counts["fail"] == 0, [(c.case, c.name, c.discrepancy) for c in report.failed]
    assert counts["pass"] > 0
    cases = {c.case for c in report.checks}
    assert len(cases) == len(st.DEFAULT_CASES)
