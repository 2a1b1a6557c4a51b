"""Integration tests of the command-line surface.

Everything runs in-process through main(argv) so exit codes, stdout,
stderr, and written files are all observable.  The exit-code contract
(0 pass / 1 usage / 2 validity / 3 verification failure / 4 blow-up)
and byte-level JSON determinism are the load-bearing assertions.
"""

import json

import jsonschema
import pytest

from mdpv.cli import (
    EXIT_BLOWUP, EXIT_FAIL, EXIT_INVALID, EXIT_OK, EXIT_USAGE,
    SEED_ENV_VAR, main, render_json,
)
from mdpv.expr import evaluate, parse


@pytest.fixture(autouse=True)
def _isolate_seed_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


def run_cli(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def run_json(capsys, argv):
    rc, out, err = run_cli(capsys, argv + ["--json", "-"])
    doc = json.loads(out[out.index("{"):])
    return rc, doc, out, err


# ---------------------------------------------------------------------
# JSON rendering

def test_render_json_fixed_form():
    doc = {"a": 1.0, "b": [True, None, 0.1], "c": {"d": "x"}}
    text = render_json(doc)
    assert json.loads(text) == {"a": 1.0, "b": [True, None, 0.1],
                                "c": {"d": "x"}}
    assert "0.10000000000000001" in text  # 17 significant digits
    assert render_json(doc) == text


def test_render_json_rejects_nonfinite():
    with pytest.raises(ValueError):
        render_json({"v": float("nan")})
    with pytest.raises(ValueError):
        render_json([float("inf")])


# ---------------------------------------------------------------------
# usage errors -> exit 1

@pytest.mark.parametrize("argv", [
    [],
    ["list", "--bogus"],
    ["frobnicate"],
    ["verify", "--family", "u99", "--b", "3"],
    ["verify", "--family", "u20", "--b", "3", "--param", "alpha=1"],
    ["verify", "--family", "u20", "--b", "3", "--param", "alpha"],
    ["verify", "--family", "u3", "--b", "3", "--window", "8,-8"],
    ["verify", "--expr", "xi + q", "--b", "3"],
    ["verify", "--expr", "xi", "--family", "u3", "--b", "3"],
    ["verify", "--expr", "xi +* 2", "--b", "3"],
    ["verify", "--family", "all", "--b", "3", "--param", "mu=1"],
    ["system-verify", "--method", "colehopf", "--family", "u20"],
    ["system-verify", "--method", "tanhcoth", "--family", "u20",
     "--perturb", "zz=1"],
    ["system-verify", "--method", "tanhcoth", "--family", "u20",
     "--b", "x,y"],
    ["simulate", "--family", "u6", "--N", "100"],
    ["simulate", "--family", "u6", "--dt", "1e-3", "--T", "0.0015"],
])
def test_usage_errors(capsys, argv):
    rc, _out, err = run_cli(capsys, argv)
    assert rc == EXIT_USAGE
    assert err.startswith("error:")


def test_bad_seed_env(capsys, monkeypatch):
    monkeypatch.setenv(SEED_ENV_VAR, "not-a-number")
    rc, _out, err = run_cli(capsys, ["verify", "--family", "u3",
                                     "--b", "3"])
    assert rc == EXIT_USAGE
    assert SEED_ENV_VAR in err


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


# ---------------------------------------------------------------------
# exit-code contract (negative controls included)

def test_verify_family_passes(capsys):
    rc, out, _ = run_cli(capsys, ["verify", "--family", "u3", "--b", "3"])
    assert rc == EXIT_OK
    assert "pass" in out and "all passed" in out


def test_verify_all_families_pass(capsys):
    rc, out, _ = run_cli(capsys, ["verify", "--family", "all",
                                  "--b", "0.5", "--seed", "7"])
    assert rc == EXIT_OK
    assert "all passed (23 scans)" in out


def test_verify_excluded_b_exits_2(capsys):
    rc, _out, err = run_cli(capsys, ["verify", "--family", "u3",
                                     "--b", "-1"])
    assert rc == EXIT_INVALID
    assert "-1" in err


def test_verify_invalid_params_exit_2(capsys):
    # mu = 0 violates the nonzero constraint
    rc, _out, err = run_cli(capsys, ["verify", "--family", "u1",
                                     "--b", "3", "--param", "mu=0"])
    assert rc == EXIT_INVALID
    assert "violate" in err


def test_linear_profile_fails_residual(capsys):
    rc, out, _ = run_cli(capsys, ["verify", "--expr", "xi", "--b", "3"])
    assert rc == EXIT_FAIL
    assert "FAIL" in out


def test_family_fails_other_variant(capsys):
    rc, out, _ = run_cli(capsys, ["verify", "--family", "u3", "--b", "3",
                                  "--variant", "dp"])
    assert rc == EXIT_FAIL
    assert "FAIL" in out


def test_expr_can_pass(capsys):
    # constant background solves the flat reduction
    rc, out, _ = run_cli(capsys, ["verify", "--expr", "0", "--b", "3"])
    assert rc == EXIT_OK
    assert "pass" in out


def test_perturbed_system_exits_3(capsys):
    rc, out, _ = run_cli(capsys, ["system-verify", "--method", "tanhcoth",
                                  "--family", "u20",
                                  "--perturb", "a0=1e-3"])
    assert rc == EXIT_FAIL
    assert "VIOLATED" in out


def test_singular_family_simulation_exits_2(capsys):
    rc, _out, err = run_cli(capsys, ["simulate", "--family", "u5"])
    assert rc == EXIT_INVALID
    assert err.startswith("error:")


def test_unstable_step_refused(capsys):
    rc, _out, err = run_cli(capsys, ["simulate", "--family", "u6",
                                     "--dt", "0.1"])
    assert rc == EXIT_INVALID
    assert "guard" in err


def test_blowup_exits_4(capsys):
    rc, _out, err = run_cli(capsys, ["simulate", "--family", "u6",
                                     "--blowup-threshold", "1.0",
                                     "--T", "0.01", "--dt", "5e-4"])
    assert rc == EXIT_BLOWUP
    assert "blow-up" in err


# ---------------------------------------------------------------------
# list

def test_list_table(capsys):
    rc, out, _ = run_cli(capsys, ["list"])
    assert rc == EXIT_OK
    lines = out.strip().splitlines()
    assert len(lines) == 25  # header + 23 rows + count
    assert lines[-1] == "23 families"
    u11 = next(l for l in lines if l.startswith("u11 "))
    assert "tanhcoth" in u11


LIST_SCHEMA = {
    "type": "object",
    "required": ["manifest", "families"],
    "properties": {
        "manifest": {
            "type": "object",
            "required": ["command", "seed", "version", "parameters",
                         "outputs"],
            "properties": {"command": {"const": "list"}},
        },
        "families": {
            "type": "array",
            "minItems": 23,
            "maxItems": 23,
            "items": {
                "type": "object",
                "required": ["family_id", "method", "description",
                             "parameters", "profile", "wave_speed",
                             "constraints", "singular_denominators"],
                "properties": {
                    "method": {"enum": ["colehopf", "hyperbolic",
                                        "tanhcoth"]},
                    "parameters": {"type": "array",
                                   "items": {"type": "string"}},
                },
            },
        },
    },
}


def test_list_json_schema(capsys):
    rc, doc, _out, _err = run_json(capsys, ["list"])
    assert rc == EXIT_OK
    jsonschema.validate(doc, LIST_SCHEMA)
    u11 = next(r for r in doc["families"] if r["family_id"] == "u11")
    speed = parse(u11["wave_speed"])
    assert evaluate(speed, {"b": 3.0}) == pytest.approx(-4.0)


# ---------------------------------------------------------------------
# determinism + manifest

def test_verify_json_byte_identical(capsys):
    argv = ["verify", "--family", "u20", "--b", "3", "--draws", "2"]
    rc1, _doc1, out1, _ = run_json(capsys, argv)
    rc2, _doc2, out2, _ = run_json(capsys, argv)
    assert rc1 == rc2 == EXIT_OK
    assert out1 == out2


def test_seed_resolution(capsys, monkeypatch):
    _rc, doc, _out, _err = run_json(capsys, ["verify", "--family", "u3",
                                             "--b", "3"])
    assert doc["manifest"]["seed"] == 42
    monkeypatch.setenv(SEED_ENV_VAR, "7")
    _rc, doc, _out, _err = run_json(capsys, ["verify", "--family", "u3",
                                             "--b", "3"])
    assert doc["manifest"]["seed"] == 7
    _rc, doc, _out, _err = run_json(capsys, ["verify", "--family", "u3",
                                             "--b", "3", "--seed", "11"])
    assert doc["manifest"]["seed"] == 11


def test_seed_changes_draws(capsys):
    argv = ["verify", "--family", "u20", "--b", "3"]
    _rc, d42, _o, _e = run_json(capsys, argv)
    _rc, d7, _o, _e = run_json(capsys, argv + ["--seed", "7"])
    assert d42["results"][0]["params"] != d7["results"][0]["params"]


def test_json_file_and_manifest_outputs(capsys, tmp_path):
    report = tmp_path / "report.json"
    argv = ["verify", "--family", "u6", "--b", "3",
            "--json", str(report)]
    rc = main(argv)
    capsys.readouterr()
    assert rc == EXIT_OK
    doc = json.loads(report.read_text())
    assert doc["manifest"]["outputs"] == [str(report)]
    assert doc["all_passed"] is True
    report2 = tmp_path / "again.json"
    rc = main(["verify", "--family", "u6", "--b", "3",
               "--json", str(report2)])
    capsys.readouterr()
    assert rc == EXIT_OK
    a = report.read_text().replace(str(report), "PATH")
    b = report2.read_text().replace(str(report2), "PATH")
    assert a == b


def test_verify_explicit_params_recorded(capsys):
    rc, doc, _out, _err = run_json(capsys, [
        "verify", "--family", "u1", "--b", "3", "--param", "mu=0.9"])
    assert rc == EXIT_OK
    assert doc["manifest"]["parameters"]["params"] == {"mu": 0.9}
    assert doc["results"][0]["params"] == {"mu": 0.9}


# ---------------------------------------------------------------------
# riccati-audit

def test_riccati_audit_table(capsys):
    rc, out, _ = run_cli(capsys, ["riccati-audit"])
    assert rc == EXIT_OK
    assert "corrected branches: all pass" in out
    assert "unevaluable" in out      # complex-radical printed entry
    assert "repaired" in out


def test_riccati_audit_json(capsys):
    rc, doc, _out, _err = run_json(capsys, ["riccati-audit"])
    assert rc == EXIT_OK
    rows = {r["case"]: r for r in doc["rows"]}
    assert len(rows) == 10
    assert all(r["corrected_passes"] for r in rows.values())
    assert doc["all_corrected_pass"] is True
    # alpha*gamma < 0 with a square root of the product: not real
    assert rows["4b"]["max_residual_printed"] is None
    assert rows["4b"]["printed_passes"] is False
    assert rows["1"]["printed_passes"] is True


# ---------------------------------------------------------------------
# system-verify

def test_system_verify_colehopf_first_family(capsys):
    rc, out, _ = run_cli(capsys, ["system-verify", "--method", "colehopf",
                                  "--family", "u1"])
    assert rc == EXIT_OK
    assert "system annihilated" in out


def test_system_verify_json_rows(capsys):
    rc, doc, _out, _err = run_json(capsys, [
        "system-verify", "--method", "tanhcoth", "--family", "u20",
        "--draws", "2"])
    assert rc == EXIT_OK
    assert doc["all_passed"] is True
    assert len(doc["equations"]) == 15
    for row in doc["equations"]:
        assert set(row) == {"power", "coefficient_formatted"}
        parse(row["coefficient_formatted"])  # well-formed expression
    assert len(doc["checks"]) == 4 * 2
    assert all(c["passed"] for c in doc["checks"])


def test_system_verify_explicit_params(capsys):
    rc, doc, _out, _err = run_json(capsys, [
        "system-verify", "--method", "hyperbolic", "--family", "u7",
        "--b", "1", "--param", "a2=2"])
    assert rc == EXIT_OK
    assert doc["checks"][0]["params"] == {"a2": 2.0}


def test_system_verify_invalid_explicit_params(capsys):
    # a2 below the radical floor is inadmissible, not a usage slip
    rc, _out, err = run_cli(capsys, [
        "system-verify", "--method", "hyperbolic", "--family", "u7",
        "--b", "1", "--param", "a2=0.1"])
    assert rc == EXIT_INVALID
    assert "violate" in err


def test_system_verify_excluded_b(capsys):
    rc, _out, _err = run_cli(capsys, [
        "system-verify", "--method", "tanhcoth", "--family", "u20",
        "--b", "0,-1"])
    assert rc == EXIT_INVALID


# ---------------------------------------------------------------------
# simulate

def test_simulate_short_run_with_outputs(capsys, tmp_path):
    csv_path = tmp_path / "snaps.csv"
    json_path = tmp_path / "run.json"
    rc = main(["simulate", "--family", "u6", "--N", "256",
               "--T", "0.1", "--csv", str(csv_path),
               "--json", str(json_path)])
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "linf_error" in out
    doc = json.loads(json_path.read_text())
    assert list(doc["summary"]) == ["family", "b", "N", "L", "dt", "T",
                                    "linf_error", "mass_drift",
                                    "measured_speed", "expected_speed"]
    assert doc["summary"]["linf_error"] <= 1e-4
    assert doc["summary"]["mass_drift"] <= 1e-10
    assert set(doc["manifest"]["outputs"]) == {str(csv_path),
                                               str(json_path)}
    header = csv_path.read_text().splitlines()[0]
    assert header == "t,x,u_numeric,u_exact,error"


def test_simulate_defaults_meet_criteria(capsys):
    rc, doc, out, _err = run_json(capsys, ["simulate", "--family", "u6"])
    assert rc == EXIT_OK
    s = doc["summary"]
    assert s["linf_error"] <= 1e-3
    assert s["mass_drift"] <= 1e-8
    assert abs(s["measured_speed"] - (-2.5)) <= 0.01 * 2.5
    assert s["expected_speed"] == pytest.approx(-2.5)
    assert doc["manifest"]["parameters"]["scheme"] == "spectral"


def test_simulate_family_with_parameters(capsys):
    rc, doc, _out, _err = run_json(capsys, [
        "simulate", "--family", "u20", "--b", "1.0",
        "--param", "alpha=1", "--param", "beta=1.5",
        "--param", "gamma=0.3125", "--N", "256", "--T", "0.1"])
    assert rc == EXIT_OK
    assert doc["summary"]["expected_speed"] == pytest.approx(-1.5)
    assert doc["summary"]["linf_error"] <= 1e-5
