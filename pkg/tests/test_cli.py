import csv
import io
import json
import subprocess
import sys

import jsonschema
import pytest

from delayq import cli, report, validation

MM_INF = {
    "k": 1,
    "interarrival": {"family": "exponential", "rate": 1.0},
    "delays": [{"family": "exponential", "rate": 1.0}],
    "delta": 0.0,
    "batch": {"kind": "independent", "moments": [[1, 1, 1, 1, 1, 1, 1, 1]]},
}
TRIAD = {
    "k": 2,
    "interarrival": {"family": "exponential", "rate": 1.0},
    "delays": [{"family": "exponential", "rate": 1.0}, {"family": "exponential", "rate": 1.0}],
    "delta": 0.2,
    "batch": {"kind": "multinomial", "M": 2, "p": [0.5, 0.5]},
}
ERLANG = dict(MM_INF, interarrival={"family": "erlang", "shape": 2, "rate": 2.0})


@pytest.fixture
def write_model(tmp_path):
    def _write(obj, name="model.json"):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return str(path)

    return _write


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def schema_valid(obj):
    jsonschema.validate(obj, report.output_schema())


class TestChi:
    def test_single(self, capsys, write_model):
        code, out, _ = run(capsys, "chi", "--model", write_model(MM_INF), "--n", "2")
        assert code == 0
        obj = json.loads(out)
        schema_valid(obj)
        assert obj["n"] == [2] and obj["chi"] == pytest.approx(2.0, rel=1e-12)

    def test_all_upto_csv(self, capsys, write_model):
        code, out, _ = run(capsys, "chi", "--model", write_model(TRIAD), "--all-upto", "2", "--format", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert code == 0
        assert rows[0] == ["n_1", "n_2", "eta", "chi"]
        assert len(rows) - 1 == 5

    def test_below_counts(self, capsys, write_model):
        code, out, _ = run(capsys, "chi", "--model", write_model(TRIAD), "--below", "2,2", "--format", "csv")
        assert code == 0
        assert len(out.strip().splitlines()) - 1 == 8

    def test_table_json(self, capsys, write_model):
        code, out, _ = run(capsys, "chi", "--model", write_model(TRIAD), "--all-upto", "3")
        obj = json.loads(out)
        schema_valid(obj)
        assert len(obj["rows"]) == 9

    def test_seventeen_digits(self, capsys, write_model):
        _, out, _ = run(capsys, "chi", "--model", write_model(TRIAD), "--n", "1,0", "--format", "csv")
        value = out.splitlines()[1].split(",")[-1]
        assert float(value) == 1 / 1.2
        assert value == report.fmt_float(1 / 1.2)

    def test_byte_identical_files(self, capsys, write_model, tmp_path):
        model = write_model(TRIAD)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(capsys, "chi", "--model", model, "--all-upto", "3", "--format", "csv", "--out", a)
        run(capsys, "chi", "--model", model, "--all-upto", "3", "--format", "csv", "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_dat_format(self, capsys, write_model):
        _, out, _ = run(capsys, "chi", "--model", write_model(TRIAD), "--all-upto", "1", "--format", "dat")
        lines = out.splitlines()
        assert lines[0].startswith("# ")
        assert len(lines[1].split()) == 4

    def test_needs_selector(self, capsys, write_model):
        code, _, err = run(capsys, "chi", "--model", write_model(TRIAD))
        assert code == 2 and "error" in err


class TestOtherCommands:
    def test_transient_csv(self, capsys, write_model):
        code, out, err = run(
            capsys, "transient", "--model", write_model(MM_INF), "--n", "1", "--h", "0.01", "--tmax", "5", "--every", "100"
        )
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["t", "M_tilde", "h_lower_or_upper", "R_bound"]
        assert len(rows) - 1 == 6
        assert float(rows[2][1]) == pytest.approx(1 - 2.718281828459045**-1, abs=1e-5)
        assert "h column role: exact" in err

    def test_transient_json(self, capsys, write_model):
        code, out, _ = run(
            capsys, "transient", "--model", write_model(ERLANG), "--n", "2", "--h", "0.01", "--tmax", "5", "--format", "json"
        )
        obj = json.loads(out)
        schema_valid(obj)
        assert obj["bound_role"] == "lower"
        assert all(h <= m + 1e-9 for h, m in zip(obj["h_bound"], obj["M_tilde"]))

    def test_transient_without_bound(self, capsys, write_model):
        uniform = dict(MM_INF, interarrival={"family": "uniform", "b": 2.0})
        code, _, err = run(capsys, "transient", "--model", write_model(uniform), "--n", "1", "--h", "0.05", "--tmax", "2")
        assert code == 0 and "h column role: lower" in err

    def test_bounds(self, capsys, write_model):
        code, out, _ = run(capsys, "bounds", "--model", write_model(TRIAD), "--n", "2,1")
        obj = json.loads(out)
        schema_valid(obj)
        assert code == 0 and len(obj["rows"]) == 5
        assert all(r["R"] >= r["E_tau_chi"] for r in obj["rows"])

    def test_bounds_general_delay(self, capsys, write_model):
        det = dict(MM_INF, delays=[{"family": "deterministic", "d": 2.0}])
        code, out, _ = run(capsys, "bounds", "--model", write_model(det), "--n", "2")
        obj = json.loads(out)
        schema_valid(obj)
        assert obj["rows"][0]["E_tau_chi"] is None

    def test_expansion(self, capsys, write_model):
        poisson = dict(MM_INF, interarrival={"family": "exponential", "rate": 2.0})
        model = write_model(poisson)
        code, out, _ = run(capsys, "expansion", "--model", model, "--type", "1")
        obj = json.loads(out)
        schema_valid(obj)
        assert obj["A_star"] == pytest.approx(-2.0) and obj["sign_convention"] == "corrected"
        _, out, _ = run(capsys, "expansion", "--model", model, "--type", "1", "--paper-literal-sign")
        assert json.loads(out)["A_star"] == pytest.approx(-6.0)

    def test_expansion_roots(self, capsys, write_model):
        _, out, _ = run(capsys, "expansion", "--model", write_model(dict(ERLANG, delays=[{"family": "exponential", "rate": 0.5}])), "--type", "1")
        obj = json.loads(out)
        assert obj["roots"][0]["z_re"] == pytest.approx(4.0)
        assert obj["roots"][0]["gamma_re"] == pytest.approx(0.25)

    def test_expansion_bad_type(self, capsys, write_model):
        code, _, _ = run(capsys, "expansion", "--model", write_model(MM_INF), "--type", "2")
        assert code == 2

    def test_workload(self, capsys, write_model):
        model = write_model(dict(MM_INF, delays=[{"family": "exponential", "rate": 2.0}]))
        code, out, _ = run(capsys, "workload", "--model", model)
        obj = json.loads(out)
        schema_valid(obj)
        assert obj["mean_limit"] == 0.25 and obj["cov_limit"] == pytest.approx(0.25)

    def test_workload_scope(self, capsys, write_model):
        code, _, err = run(capsys, "workload", "--model", write_model(TRIAD))
        assert code == 2 and "single type" in err

    def test_simulate(self, capsys, write_model):
        model = write_model(MM_INF)
        argv = ("simulate", "--model", model, "--t", "10", "--reps", "500", "--seed", "42", "--stats", "n=1;n=2;workload")
        code, out, _ = run(capsys, *argv)
        obj = json.loads(out)
        schema_valid(obj)
        assert code == 0 and len(obj) == 4
        _, again, _ = run(capsys, *argv)
        assert again == out

    def test_simulate_bad_stat(self, capsys, write_model):
        code, _, _ = run(capsys, "simulate", "--model", write_model(MM_INF), "--t", "1", "--stats", "var")
        assert code == 2


class TestValidate:
    ARGS = ("--upto", "3", "--h", "0.01", "--tmax", "40", "--reps", "20000", "--seed", "1")

    def test_mm_inf_passes(self, capsys, write_model):
        code, out, err = run(capsys, "validate", "--model", write_model(MM_INF), *self.ARGS)
        obj = json.loads(out)
        schema_valid(obj)
        assert code == 0 and obj["passed"] and len(obj["rows"]) == 3
        assert "FAIL" not in err

    def test_corrupted_chi_fails(self, capsys, write_model, monkeypatch):
        real = validation.chi

        def corrupted(n, table):
            value = real(n, table)
            return value * 1.05 if tuple(n) == (2,) else value

        monkeypatch.setattr(validation, "chi", corrupted)
        code, out, err = run(capsys, "validate", "--model", write_model(MM_INF), *self.ARGS, "--format", "csv")
        assert code == 1
        assert "FAIL n=2" in err
        assert "n,chi,M_tilde" in out.splitlines()[0]

    def test_perturbation_hook(self, write_model):
        from delayq.model import load_model
        from delayq.transient import Grid

        rep = validation.run_validation(
            load_model(write_model(MM_INF)), 1, grid=Grid(0.01, 40.0), reps=2000, chi_perturbation={(1,): 1.1}
        )
        assert not rep.passed and [tuple(r.n) for r in rep.failures()] == [(1,)]

    def test_empty_range(self, capsys, write_model):
        code, out, _ = run(capsys, "validate", "--model", write_model(MM_INF), "--upto", "0")
        obj = json.loads(out)
        assert code == 0 and obj["rows"] == [] and obj["passed"]

    def test_needs_exponential_delays(self, capsys, write_model):
        det = dict(MM_INF, delays=[{"family": "deterministic", "d": 2.0}])
        code, _, _ = run(capsys, "validate", "--model", write_model(det), "--upto", "1")
        assert code == 2


class TestExitCodes:
    def test_missing_model(self, capsys, tmp_path):
        code, _, err = run(capsys, "chi", "--model", tmp_path / "none.json", "--n", "1")
        assert code == 2 and "does not exist" in err

    def test_malformed_json(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{")
        assert run(capsys, "chi", "--model", path, "--n", "1")[0] == 2

    def test_bad_index(self, capsys, write_model):
        model = write_model(TRIAD)
        assert run(capsys, "chi", "--model", model, "--n", "1")[0] == 2
        assert run(capsys, "chi", "--model", model, "--n", "a,b")[0] == 2
        assert run(capsys, "chi", "--model", model, "--n", "1,-1")[0] == 2

    def test_unwritable_output(self, capsys, write_model, tmp_path):
        out = tmp_path / "missing_dir" / "x.json"
        assert run(capsys, "chi", "--model", write_model(MM_INF), "--n", "1", "--out", out)[0] == 2

    def test_console_script(self, write_model):
        proc = subprocess.run(
            [sys.executable, "-m", "delayq.cli", "chi", "--model", write_model(MM_INF), "--n", "3"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["chi"] == pytest.approx(5.0)
        proc = subprocess.run([sys.executable, "-m", "delayq.cli", "chi", "--model", "/nonexistent", "--n", "1"])
        assert proc.returncode == 2
