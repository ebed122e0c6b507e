import math
import subprocess
import sys

import numpy as np
import pytest

from degelliptic.cli import main, parse_config, serialize_config
from degelliptic.errors import ConfigError
from degelliptic.model import (
    CoefficientLambdaN,
    LambdaK,
    LinearDegenerate,
    MinMax,
    MongeAmpere,
    WeightedEigenvalues,
)

MODEL_INI = """\
[params]
beta = 2.0
b = 1.0
p = 2.0
M = 1.0

[problem]
operator = CoefficientLambdaN
coefficient = 2.0
hamiltonian = PowerNorm
ham_b = 1.0
ham_p = 2.0
f = -1.0
"""


def write_config(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def run_cli(capsys, *args) -> tuple[int, str, str]:
    code = main([str(a) for a in args])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestConfigParsing:
    def test_empty_config_gives_defaults(self):
        cfg = parse_config("")
        assert cfg.command == ""
        assert cfg.out == "out"
        assert cfg.beta == 1.0 and cfg.M == 1.0
        assert cfg.h == 0.0625 and cfg.K == 8
        assert cfg.tau is None
        assert cfg.centers == ((0.0, 0.0),)
        assert cfg.radii == (0.2, 0.5, 0.8)
        assert cfg.R_values == ()

    def test_round_trip_identity(self):
        text = MODEL_INI + (
            "\n[domain]\nradius = 0.7\ncenters = -0.3, 0.0; 0.3, 0.0\n"
            "\n[solver]\ntau = 0.001\ntol = 1e-07\n"
            "\n[sweep]\nR_values = 0.9, 1.0, 1.1\n"
        )
        cfg = parse_config(text)
        assert parse_config(serialize_config(cfg)) == cfg
        # and serialization is a fixed point after one pass
        assert serialize_config(parse_config(serialize_config(cfg))) == (
            serialize_config(cfg)
        )

    def test_keys_are_case_sensitive(self):
        cfg = parse_config("[params]\nM = 2.5\n")
        assert cfg.M == 2.5
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config("[params]\nm = 2.5\n")

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match=r"\[bogus\]"):
            parse_config("[bogus]\nx = 1\n")

    def test_bad_number_names_the_key(self):
        with pytest.raises(ConfigError, match=r"\[params\] beta"):
            parse_config("[params]\nbeta = fast\n")
        with pytest.raises(ConfigError, match=r"\[solver\] max_iter"):
            parse_config("[solver]\nmax_iter = many\n")

    def test_unknown_command_rejected(self):
        with pytest.raises(ConfigError, match="unknown command"):
            parse_config("[run]\ncommand = dance\n")

    def test_rows_and_tau(self):
        cfg = parse_config("[problem]\nrows = 1, 0; 0.4, 0.8\n[solver]\ntau = 0.01\n")
        assert cfg.rows == ((1.0, 0.0), (0.4, 0.8))
        assert cfg.tau == 0.01

    def test_syntax_error(self):
        with pytest.raises(ConfigError, match="syntax"):
            parse_config("params]\nbeta = 2\n")


class TestSelections:
    def _cfg(self, extra):
        return parse_config("[problem]\n" + extra)

    def test_operator_catalog(self):
        from degelliptic.cli import _operator_from

        assert isinstance(
            _operator_from(self._cfg("operator = CoefficientLambdaN\n")),
            CoefficientLambdaN,
        )
        assert _operator_from(self._cfg("operator = LambdaK\nindex = 2\n")) == LambdaK(2)
        op = _operator_from(
            self._cfg("operator = WeightedEigenvalues\nweights = 1.0, 1.0\n")
        )
        assert isinstance(op, WeightedEigenvalues)
        assert isinstance(_operator_from(self._cfg("operator = MinMax\n")), MinMax)
        assert isinstance(
            _operator_from(self._cfg("operator = MongeAmpere\n")), MongeAmpere
        )
        assert isinstance(
            _operator_from(self._cfg("operator = LinearDegenerate\nrows = 1,0; 0,1\n")),
            LinearDegenerate,
        )

    def test_operator_validation(self):
        from degelliptic.cli import _operator_from

        with pytest.raises(ConfigError, match="weights"):
            _operator_from(self._cfg("operator = WeightedEigenvalues\n"))
        with pytest.raises(ConfigError, match="rows"):
            _operator_from(self._cfg("operator = LinearDegenerate\n"))
        with pytest.raises(ConfigError, match="unknown operator"):
            _operator_from(self._cfg("operator = Tricky\n"))

    def test_hamiltonian_selection(self):
        from degelliptic.cli import _hamiltonian_from

        assert _hamiltonian_from(self._cfg("hamiltonian = none\n")) is None
        ham = _hamiltonian_from(self._cfg("hamiltonian = PowerNorm\nham_p = 0.5\n"))
        assert ham.p == 0.5
        with pytest.raises(ConfigError, match="gradient term"):
            _hamiltonian_from(self._cfg("hamiltonian = Weird\n"))


class TestRbar:
    def test_model_fifteen_digits(self, tmp_path, capsys):
        path = write_config(tmp_path, MODEL_INI)
        code, out, err = run_cli(capsys, "rbar", "--config", path)
        assert code == 0
        assert "rbar = 1.00000000000000" in out

    def test_cubic_exponent_digits(self, tmp_path, capsys):
        # 2^(2/3)/3 printed to 15 significant digits
        path = write_config(tmp_path, "[params]\nbeta = 1.0\nb = 1.0\np = 3.0\nM = 1.0\n")
        code, out, _ = run_cli(capsys, "rbar", "--config", path)
        assert code == 0
        assert "0.529133683989400" in out

    def test_zero_forcing_is_infinite(self, tmp_path, capsys):
        path = write_config(tmp_path, "[params]\nbeta = 2.0\nb = 1.0\np = 2.0\nM = 0.0\n")
        code, out, _ = run_cli(capsys, "rbar", "--config", path)
        assert code == 0
        assert "rbar = inf" in out
        assert "every ball" in out

    def test_sublinear_rejected(self, tmp_path, capsys):
        path = write_config(tmp_path, "[params]\nbeta = 1.0\nb = 1.0\np = 0.5\nM = 1.0\n")
        code, out, err = run_cli(capsys, "rbar", "--config", path)
        assert code == 2
        assert "no existence threshold" in err


class TestRadial:
    def test_model_profile_csv(self, tmp_path, capsys):
        path = write_config(
            tmp_path, MODEL_INI + "\n[radial]\nR = 1.0\ninclude_radii = 0.5\n"
        )
        out_dir = tmp_path / "results"
        code, out, _ = run_cli(capsys, "radial", "--config", path, "--out", out_dir)
        assert code == 0
        rows = {
            line.split(",")[0]: line.split(",")
            for line in (out_dir / "profile.csv").read_text().splitlines()[2:]
        }
        u_half = float(rows["0.5"][2])
        assert u_half == pytest.approx(0.24221468741956725, abs=1e-6)

    def test_threshold_refusal_no_partial_output(self, tmp_path, capsys):
        path = write_config(tmp_path, MODEL_INI + "\n[radial]\nR = 1.3\n")
        out_dir = tmp_path / "results"
        code, _, err = run_cli(capsys, "radial", "--config", path, "--out", out_dir)
        assert code == 3
        assert "threshold" in err
        assert not out_dir.exists()


class TestBlowup:
    def test_model_decades(self, tmp_path, capsys):
        path = write_config(tmp_path, MODEL_INI + "\n[radial]\ndecades = 3\n")
        out_dir = tmp_path / "results"
        code, out, _ = run_cli(capsys, "blowup", "--config", path, "--out", out_dir)
        assert code == 0
        assert "Blowup" in out
        data = np.loadtxt(
            out_dir / "blowup.csv", delimiter=",", skiprows=2, usecols=(0, 1, 2)
        )
        # each decade toward the center adds 2*log(10) up to the O(r^2)
        # tail of the bounded terms
        growth = np.diff(data[:, 2])
        assert np.all(growth >= 0.5)
        assert growth == pytest.approx([2 * math.log(10.0)] * 2, abs=5e-3)

    def test_bounded_exponent(self, tmp_path, capsys):
        path = write_config(
            tmp_path,
            "[params]\nbeta = 1.0\nb = 1.0\np = 3.0\nM = 1.0\n"
            "\n[radial]\nR = 0.5\ndecades = 3\n",
        )
        out_dir = tmp_path / "results"
        code, out, _ = run_cli(capsys, "blowup", "--config", path, "--out", out_dir)
        assert code == 0
        assert "Bounded" in out and "1.45483151462896" in out
        data = np.loadtxt(
            out_dir / "blowup.csv", delimiter=",", skiprows=2, usecols=(2,)
        )
        assert np.all(data <= 1.4548315146289619)


class TestExplicit:
    def test_monge_ampere_form(self, tmp_path, capsys):
        path = write_config(
            tmp_path,
            "[params]\np = 0.5\n\n[radial]\nkind = MongeAmpere\nnode_count = 65\n",
        )
        out_dir = tmp_path / "results"
        code, out, _ = run_cli(capsys, "explicit", "--config", path, "--out", out_dir)
        assert code == 0
        assert "u(0) = -0.166666666666667" in out
        header = (out_dir / "explicit.csv").read_text().splitlines()[0]
        assert "K=0.16666666666666666" in header and "g=3" in header

    def test_superlinear_rejected(self, tmp_path, capsys):
        path = write_config(tmp_path, "[params]\np = 2.0\n")
        code, _, err = run_cli(capsys, "explicit", "--config", path)
        assert code == 2
        assert "p in (0, 1)" in err


LENS_INI = MODEL_INI + """
[domain]
radius = 1.0
centers = -0.3, 0.0; 0.3, 0.0

[solver]
h = 0.125
K = 8
tol = 0.0001
"""


class TestBarrier:
    def test_lens_barriers_ordered(self, tmp_path, capsys):
        path = write_config(tmp_path, LENS_INI)
        out_dir = tmp_path / "results"
        code, out, _ = run_cli(capsys, "barrier", "--config", path, "--out", out_dir)
        assert code == 0
        data = np.loadtxt(out_dir / "barrier.csv", delimiter=",", skiprows=2)
        lower, upper = data[:, 2], data[:, 3]
        assert np.all(upper >= lower)
        assert "min upper-lower gap" in out


class TestSolve:
    def test_lens_solve_outputs(self, tmp_path, capsys):
        path = write_config(tmp_path, LENS_INI)
        out_dir = tmp_path / "results"
        code, out, _ = run_cli(capsys, "solve", "--config", path, "--out", out_dir)
        assert code == 0
        assert "solved" in out and "residual" in out
        report = (out_dir / "report.txt").read_text()
        assert "iterations:" in report
        data = np.loadtxt(out_dir / "solution.csv", delimiter=",", skiprows=2)
        assert data.shape[1] == 3
        assert np.all(data[:, 2] >= 0.0)

    def test_reruns_byte_identical(self, tmp_path, capsys):
        path = write_config(tmp_path, LENS_INI)
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli(capsys, "solve", "--config", path, "--out", a)[0] == 0
        assert run_cli(capsys, "solve", "--config", path, "--out", b)[0] == 0
        assert (a / "solution.csv").read_bytes() == (b / "solution.csv").read_bytes()

    def test_envelope_mismatch_is_config_error(self, tmp_path, capsys):
        # gradient growth above the declared envelope b
        bad = LENS_INI.replace("ham_b = 1.0", "ham_b = 2.0")
        path = write_config(tmp_path, bad)
        code, _, err = run_cli(capsys, "solve", "--config", path, "--out", tmp_path / "o")
        assert code == 2
        assert not (tmp_path / "o").exists()


VERIFY_INI = MODEL_INI + """
[radial]
R = 0.9

[verify]
radii = 0.2, 0.5, 0.8
tolerance = 1e-06
sigma = 0.9
epsilon = 0.1
"""


class TestVerify:
    def test_model_suite_passes(self, tmp_path, capsys):
        path = write_config(tmp_path, VERIFY_INI)
        out_dir = tmp_path / "results"
        code, out, _ = run_cli(capsys, "verify", "--config", path, "--out", out_dir)
        assert code == 0
        assert "residual: PASS" in out
        assert "sigma_perturbation: PASS" in out
        assert "threshold_probe: PASS" in out
        report = (out_dir / "verify_report.txt").read_text()
        assert report.count("PASS") == 3 and "FAIL" not in report

    def test_sublinear_suite_uses_scaling(self, tmp_path, capsys):
        text = (
            "[params]\nbeta = 1.0\nb = 1.0\np = 0.5\nM = 1.0\n\n"
            "[problem]\noperator = LambdaK\nindex = 2\nhamiltonian = PowerNorm\n"
            "ham_b = 1.0\nham_p = 0.5\nf = -1.0\n\n"
            "[radial]\nbranch = FirstZeroSublinear\nR = 1.0\n"
        )
        path = write_config(tmp_path, text)
        out_dir = tmp_path / "results"
        code, out, _ = run_cli(capsys, "verify", "--config", path, "--out", out_dir)
        assert code == 0
        assert "epsilon_scaling: PASS" in out

    def test_wrong_coefficient_fails_with_report(self, tmp_path, capsys):
        bad = VERIFY_INI.replace("coefficient = 2.0", "coefficient = 3.0")
        path = write_config(tmp_path, bad)
        out_dir = tmp_path / "results"
        code, out, err = run_cli(capsys, "verify", "--config", path, "--out", out_dir)
        assert code == 4
        assert "residual: FAIL" in out
        assert "verification failed" in err
        assert "FAIL" in (out_dir / "verify_report.txt").read_text()


class TestSweep:
    def test_threshold_bracket(self, tmp_path, capsys):
        path = write_config(
            tmp_path, MODEL_INI + "\n[sweep]\nR_values = 0.9, 1.0, 1.1\n"
        )
        out_dir = tmp_path / "results"
        code, out, _ = run_cli(capsys, "sweep", "--config", path, "--out", out_dir)
        assert code == 0
        lines = out.splitlines()
        assert lines[0].endswith("Exists")
        assert "(endpoint)" in lines[1]
        assert "FailsAt" in lines[2]
        assert "2 of 3" in lines[3]
        rows = (out_dir / "sweep.csv").read_text().splitlines()
        assert rows[0] == "R,exists,endpoint,fails_at,gap"
        assert len(rows) == 4

    def test_empty_sweep_rejected(self, tmp_path, capsys):
        path = write_config(tmp_path, MODEL_INI)
        code, _, err = run_cli(capsys, "sweep", "--config", path)
        assert code == 2
        assert "R_values" in err


class TestFlagsAndDispatch:
    def test_out_flag_overrides_config(self, tmp_path, capsys):
        text = MODEL_INI + f"\n[run]\nout = {tmp_path / 'from_config'}\n"
        path = write_config(tmp_path, text + "\n[sweep]\nR_values = 0.5\n")
        code, _, _ = run_cli(
            capsys, "sweep", "--config", path, "--out", tmp_path / "flagged"
        )
        assert code == 0
        assert (tmp_path / "flagged" / "sweep.csv").exists()
        assert not (tmp_path / "from_config").exists()

    def test_command_mismatch_rejected(self, tmp_path, capsys):
        path = write_config(tmp_path, MODEL_INI + "\n[run]\ncommand = rbar\n")
        code, _, err = run_cli(capsys, "radial", "--config", path)
        assert code == 2
        assert "rbar" in err

    def test_matching_command_key_allowed(self, tmp_path, capsys):
        path = write_config(tmp_path, MODEL_INI + "\n[run]\ncommand = rbar\n")
        assert run_cli(capsys, "rbar", "--config", path)[0] == 0

    def test_missing_config_file(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "rbar", "--config", tmp_path / "nope.ini")
        assert code == 2
        assert "cannot read config" in err

    def test_bad_thread_count(self, tmp_path, capsys):
        path = write_config(tmp_path, MODEL_INI)
        code, _, err = run_cli(capsys, "rbar", "--config", path, "--threads", 0)
        assert code == 2
        assert "threads" in err

    def test_seed_and_threads_accepted(self, tmp_path, capsys):
        path = write_config(tmp_path, MODEL_INI)
        code, out, _ = run_cli(
            capsys, "rbar", "--config", path, "--seed", 7, "--threads", 2
        )
        assert code == 0
        assert "rbar = 1.00000000000000" in out

    def test_module_entry_point(self, tmp_path):
        path = write_config(tmp_path, MODEL_INI)
        proc = subprocess.run(
            [sys.executable, "-m", "degelliptic.cli", "rbar", "--config", str(path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "1.00000000000000" in proc.stdout
