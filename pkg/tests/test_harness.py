import math
import re
from pathlib import Path

import numpy as np
import pytest

import covphase as cp
from covphase.cli import main
from covphase.errors import ConfigError

DEPHASING_CFG = """\
spectrum.kind = cyclic
spectrum.dim = 2
state.which = uniform
generator.kind = explicit
generator.shifts = 0
generator.weights = linear
costs = phase_deviation, rpl
run.seed = 7
run.t_end = 1.0
run.dt = 0.001
run.stride = 100
output.dir = {out}
"""

PRESERVING_CFG = """\
spectrum.kind = naturals
spectrum.dim = 32
state.which = coherent
state.alpha = 1.0
generator.kind = preserving
generator.u = 1.0
costs = phase_deviation
run.seed = 3
run.t_end = 1.0
run.dt = 0.01
run.stride = 10
run.max_moment = 8
output.dir = {out}
"""


def read_csv(path):
    columns, rows = None, []
    header = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            header.append(line)
        elif columns is None:
            columns = line.split(",")
        else:
            rows.append([float(tok) for tok in line.split(",")])
    return header, columns, np.array(rows)


def col(columns, rows, name):
    return rows[:, columns.index(name)]


class TestConfigParsing:
    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError) as exc:
            cp.ExperimentConfig.from_text("spectrum.kind = cyclic\nbogus.key = 1\n")
        assert "line 2" in str(exc.value)

    def test_duplicate_key(self):
        text = "spectrum.kind = cyclic\nspectrum.kind = naturals\n"
        with pytest.raises(ConfigError, match="duplicate"):
            cp.ExperimentConfig.from_text(text)

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="spectrum.kind"):
            cp.ExperimentConfig.from_text("run.dt = 0.1\n")

    def test_bad_number(self):
        text = DEPHASING_CFG.format(out=".").replace("run.dt = 0.001", "run.dt = fast")
        with pytest.raises(ConfigError, match="run.dt"):
            cp.ExperimentConfig.from_text(text)

    def test_weight_count_mismatch(self):
        text = DEPHASING_CFG.format(out=".").replace(
            "generator.shifts = 0", "generator.shifts = 0, 1"
        )
        with pytest.raises(ConfigError, match="weight"):
            cp.ExperimentConfig.from_text(text)

    def test_even_two_sided_dim(self):
        text = DEPHASING_CFG.format(out=".").replace(
            "spectrum.kind = cyclic", "spectrum.kind = integers"
        )
        with pytest.raises(ConfigError, match="odd"):
            cp.ExperimentConfig.from_text(text)

    def test_unknown_cost(self):
        text = DEPHASING_CFG.format(out=".").replace(
            "costs = phase_deviation, rpl", "costs = variance"
        )
        with pytest.raises(ConfigError, match="cost"):
            cp.ExperimentConfig.from_text(text)

    def test_full_roundtrip(self, tmp_path):
        cfg = cp.ExperimentConfig.from_text(DEPHASING_CFG.format(out=tmp_path))
        assert cfg.spectrum.kind is cp.SpectrumKind.CYCLIC
        assert cfg.seed == 7
        assert list(cfg.costs) == ["phase_deviation", "rpl"]
        assert len(cfg.digest) == 64


class TestRunSimulate:
    def test_dephasing_closed_form_column(self, tmp_path):
        cfg = cp.ExperimentConfig.from_text(DEPHASING_CFG.format(out=tmp_path))
        paths = cp.run_simulate(cfg)
        header, columns, rows = read_csv(paths["trajectory"])
        assert header[0] == f"# covphase {cp.__version__}"
        assert any("seed = 7" in line for line in header)
        assert any("config_sha256 = " + cfg.digest in line for line in header)
        assert columns[:6] == [
            "t",
            "trace_err",
            "min_eig",
            "tail_mass",
            "number_mean",
            "number_variance",
        ]
        # closed form: |rho_01|(t) = 0.5 exp(-t/2), delta_phi = 2(1 - mu^2)
        mu_end = 0.5 * math.exp(-0.5)
        dphi = col(columns, rows, "delta_phi_phase_deviation")
        assert dphi[-1] == pytest.approx(2.0 * (1.0 - mu_end**2), abs=1e-8)
        mom = col(columns, rows, "moment_k1")
        assert mom[-1] == pytest.approx(mu_end, abs=1e-8)
        assert col(columns, rows, "trace_err").max() <= 1e-9

    def test_seventeen_significant_digits(self, tmp_path):
        cfg = cp.ExperimentConfig.from_text(DEPHASING_CFG.format(out=tmp_path))
        paths = cp.run_simulate(cfg)
        first_data = [
            line
            for line in Path(paths["trajectory"]).read_text().splitlines()
            if line and not line.startswith("#") and not line.startswith("t,")
        ][0]
        token = first_data.split(",")[4]
        assert re.fullmatch(r"-?\d\.\d{16}e[+-]\d{2,3}", token)

    def test_empty_generator_constant_uncertainty(self, tmp_path):
        text = DEPHASING_CFG.format(out=tmp_path).replace(
            "generator.shifts = 0", "generator.shifts ="
        ).replace("generator.weights = linear", "generator.weights =")
        cfg = cp.ExperimentConfig.from_text(text)
        paths = cp.run_simulate(cfg)
        _, columns, rows = read_csv(paths["trajectory"])
        for name in ("delta_phi_phase_deviation", "delta_phi_rpl"):
            vals = col(columns, rows, name)
            assert np.max(np.abs(vals - vals[0])) == 0.0

    def test_preserving_config_csv(self, tmp_path):
        cfg = cp.ExperimentConfig.from_text(PRESERVING_CFG.format(out=tmp_path))
        paths = cp.run_simulate(cfg)
        _, columns, rows = read_csv(paths["trajectory"])
        for k in range(1, 9):
            vals = col(columns, rows, f"moment_k{k}")
            assert np.max(np.abs(vals - vals[0])) <= 1e-6
        variance = col(columns, rows, "number_variance")
        assert np.all(np.diff(variance) >= -1e-12)
        assert variance[-1] > variance[0]

    def test_phase_dist_rows_match_samples(self, tmp_path):
        cfg = cp.ExperimentConfig.from_text(DEPHASING_CFG.format(out=tmp_path))
        paths = cp.run_simulate(cfg)
        _, traj_cols, traj_rows = read_csv(paths["trajectory"])
        _, dist_cols, dist_rows = read_csv(paths["phase_dist"])
        assert len(dist_cols) == cfg.grid_points
        assert dist_rows.shape[0] == traj_rows.shape[0]
        m = cfg.grid_points
        assert (2 * math.pi / m) * dist_rows[0].sum() == pytest.approx(1.0, abs=1e-9)

    def test_deterministic_outputs(self, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        text_a = DEPHASING_CFG.format(out=out_a) + "output.svg = true\n"
        text_b = DEPHASING_CFG.format(out=out_b) + "output.svg = true\n"
        # identical config content except the output directory itself
        cp.run_simulate(cp.ExperimentConfig.from_text(text_a))
        cp.run_simulate(cp.ExperimentConfig.from_text(text_a))
        first = {p.name: p.read_bytes() for p in out_a.iterdir()}
        cp.run_simulate(cp.ExperimentConfig.from_text(text_b))
        for p in out_b.iterdir():
            # bodies differ only through the config digest header line
            a_lines = first[p.name].split(b"\n")
            b_lines = p.read_bytes().split(b"\n")
            differing = [
                (x, y) for x, y in zip(a_lines, b_lines) if x != y
            ]
            assert all(x.startswith(b"# config_sha256") for x, _ in differing)
        # rerun into the same directory: byte identical
        cp.run_simulate(cp.ExperimentConfig.from_text(text_a))
        for p in out_a.iterdir():
            assert p.read_bytes() == first[p.name]


class TestReverseDemo:
    def _config(self, tmp_path, extra=""):
        text = DEPHASING_CFG.format(out=tmp_path).replace(
            "spectrum.dim = 2", "spectrum.dim = 4"
        ).replace("run.t_end = 1.0", "run.t_pre = 1.0" + extra)
        return cp.ExperimentConfig.from_text(text)

    def test_recovery_and_monotone_decrease(self, tmp_path):
        cfg = self._config(tmp_path)
        paths = cp.run_reverse_demo(cfg)
        header, columns, rows = read_csv(paths["reversal_report"])
        recovery = col(columns, rows, "recovery_err")
        assert recovery[-1] <= 1e-6  # back at the initial state
        for name in ("phase_deviation", "rpl"):
            dec = col(columns, rows, f"decrease_{name}")
            assert np.all(dec >= -1e-9)
        assert any("first_negative_eig_time = none" in line for line in header)

    def test_extension_reports_positivity_violation(self, tmp_path):
        cfg = self._config(tmp_path, "\nrun.t_extra = 1.0")
        paths = cp.run_reverse_demo(cfg)
        header, _, _ = read_csv(paths["reversal_report"])
        line = next(l for l in header if "first_negative_eig_time" in l)
        value = float(line.split("=")[1])
        assert value > 1.0

    def test_reversed_from_fock_constant(self, tmp_path):
        text = (
            DEPHASING_CFG.format(out=tmp_path)
            .replace("state.which = uniform", "state.which = fock\nstate.n = 1")
            .replace("spectrum.dim = 2", "spectrum.dim = 4")
            .replace("run.t_end = 1.0", "run.t_pre = 0.5")
        )
        cfg = cp.ExperimentConfig.from_text(text)
        paths = cp.run_reverse_demo(cfg)
        _, columns, rows = read_csv(paths["reversal_report"])
        dphi = col(columns, rows, "delta_phi_phase_deviation")
        assert np.max(np.abs(dphi - dphi[0])) == 0.0

    def test_requires_t_pre(self, tmp_path):
        cfg = cp.ExperimentConfig.from_text(DEPHASING_CFG.format(out=tmp_path))
        with pytest.raises(ConfigError, match="t_pre"):
            cp.run_reverse_demo(cfg)


class TestRunVerify:
    def test_pass_and_report(self, tmp_path):
        report = cp.run_verify(trials=40, dims=[2, 3, 5], seed=11)
        assert report.ok
        assert report.attempted == 120
        path = report.write_csv(tmp_path / "report.csv")
        lines = Path(path).read_text().splitlines()
        assert any("status = pass" in line for line in lines if line.startswith("#"))
        data = [line for line in lines if line and not line.startswith("#")]
        assert data[0].startswith("kind,")
        assert len(data) == 5  # header row, three kinds, overall
        assert data[-1].startswith("overall,120,120,")

    def test_sign_flip_hook_caught(self):
        report = cp.run_verify(
            trials=3, dims=[4], kinds=[cp.SpectrumKind.NATURALS], seed=1,
            inject_sign_flip=True,
        )
        assert not report.ok
        assert report.counterexamples
        dump = report.counterexamples[0]
        assert "state" in dump and "generator" in dump and dump["failures"]

    def test_trials_validation(self):
        with pytest.raises(ValueError):
            cp.run_verify(trials=0)


class TestCli:
    def test_simulate_exit_codes(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(DEPHASING_CFG.format(out=tmp_path / "out"))
        assert main(["simulate", str(cfg)]) == 0
        assert (tmp_path / "out" / "trajectory.csv").exists()

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("nonsense\n")
        assert main(["simulate", str(cfg)]) == 2
        missing = tmp_path / "missing.cfg"
        assert main(["simulate", str(missing)]) == 2

    def test_numerical_failure_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "overflow.cfg"
        cfg.write_text(
            "spectrum.kind = naturals\nspectrum.dim = 8\nstate.which = uniform\n"
            "generator.kind = explicit\ngenerator.shifts = 1\n"
            "generator.weights = const:1.0\nrun.t_end = 1.0\nrun.dt = 0.01\n"
            f"output.dir = {tmp_path / 'out'}\n"
        )
        assert main(["simulate", str(cfg)]) == 3

    def test_verify_deterministic_and_exit_zero(self, tmp_path, capsys):
        out1 = tmp_path / "r1.csv"
        out2 = tmp_path / "r2.csv"
        assert main(["verify", "--trials", "30", "--seed", "7", "--out", str(out1)]) == 0
        assert main(["verify", "--trials", "30", "--seed", "7", "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_phase_dist_command(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(DEPHASING_CFG.format(out=tmp_path / "out"))
        assert main(["phase-dist", str(cfg)]) == 0
        header, columns, rows = read_csv(tmp_path / "out" / "phase_dist.csv")
        assert rows.shape[0] == 1
        assert any("seed = 7" in line for line in header)

    def test_reverse_command(self, tmp_path, capsys):
        cfg = tmp_path / "rev.cfg"
        cfg.write_text(
            DEPHASING_CFG.format(out=tmp_path / "out").replace(
                "run.t_end = 1.0", "run.t_pre = 0.5"
            )
        )
        assert main(["reverse", str(cfg)]) == 0
        assert (tmp_path / "out" / "reversal_report.csv").exists()
