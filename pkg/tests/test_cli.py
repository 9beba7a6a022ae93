import csv

import numpy as np
import pytest

from nlcsim import runner
from nlcsim.cli import EXIT_BLOWUP, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from nlcsim.diagnostics import CSV_COLUMNS
from nlcsim.solver import RunResult


def run_config(tmp_path, **overrides):
    base = {
        "n": 32,
        "dt": 0.001,
        "t_end": 0.02,
        "u_kind": "taylor_green",
        "u_amplitude": 1.0,
        "checkpoint_interval": 10,
        "outdir": tmp_path / "out",
    }
    base.update(overrides)
    text = f"""
[grid]
dim = 2
n = {base['n']}

[solver]
dt = {base['dt']}
t_end = {base['t_end']}

[init]
u_kind = {base['u_kind']}
u_amplitude = {base['u_amplitude']}
d_kind = equatorial
d_theta_amplitude = 0.1

[monitor]
epsilon0 = 0.1
cadence = 1

[output]
directory = {base['outdir']}
checkpoint_interval = {base['checkpoint_interval']}
"""
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return path


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestRunCommand:
    def test_taylor_green_csv(self, tmp_path):
        cfg = run_config(tmp_path)
        cfg.write_text(
            cfg.read_text().replace("d_kind = equatorial", "d_kind = constant_director")
        )
        assert main(["run", "--config", str(cfg), "--quiet"]) == EXIT_OK
        rows = read_rows(tmp_path / "out" / "diagnostics.csv")
        assert list(rows[0].keys()) == list(CSV_COLUMNS)
        assert len(rows) == 21  # t = 0 plus 20 steps at cadence 1
        e0 = float(rows[0]["energy"])
        for row in rows:
            decay = np.exp(-4 * float(row["t"]))
            assert float(row["energy"]) == pytest.approx(e0 * decay, rel=1e-5)
        assert {row["blowup_flag"] for row in rows} == {"0"}

    def test_zero_data_all_zero_columns(self, tmp_path):
        cfg = run_config(tmp_path, u_kind="zero", u_amplitude=0.0)
        text = cfg.read_text().replace("d_kind = equatorial", "d_kind = constant_director")
        cfg.write_text(text)
        assert main(["run", "--config", str(cfg), "--quiet"]) == EXIT_OK
        for row in read_rows(tmp_path / "out" / "diagnostics.csv"):
            for name in ("energy", "dissipation", "besov_u", "besov_grad_d",
                         "acc_H2", "acc_bkm", "acc_hw", "acc_llw"):
                assert float(row[name]) == 0.0

    def test_all_cells_finite(self, tmp_path):
        cfg = run_config(tmp_path)
        main(["run", "--config", str(cfg), "--quiet"])
        for row in read_rows(tmp_path / "out" / "diagnostics.csv"):
            for value in row.values():
                assert np.isfinite(float(value))

    def test_output_dir_override(self, tmp_path):
        cfg = run_config(tmp_path)
        override = tmp_path / "elsewhere"
        assert main(["run", "--config", str(cfg), "--output-dir", str(override),
                     "--quiet"]) == EXIT_OK
        assert (override / "diagnostics.csv").exists()


class TestResume:
    def test_resume_matches_unbroken(self, tmp_path):
        cfg = run_config(tmp_path)
        assert main(["run", "--config", str(cfg), "--quiet"]) == EXIT_OK
        full = {r["t"]: r for r in read_rows(tmp_path / "out" / "diagnostics.csv")}
        chk = tmp_path / "out" / "checkpoint_00000010.bin"
        resumed_dir = tmp_path / "resumed"
        assert main(["resume", str(chk), "--config", str(cfg), "--output-dir",
                     str(resumed_dir), "--quiet"]) == EXIT_OK
        rows = read_rows(resumed_dir / "diagnostics.csv")
        assert len(rows) == 11
        for row in rows:
            ref = full[row["t"]]
            for key, val in row.items():
                a, b = float(val), float(ref[key])
                assert abs(a - b) <= 1e-12 * max(1.0, abs(b))

    def test_resume_with_altered_config_refused(self, tmp_path, capsys):
        cfg = run_config(tmp_path)
        main(["run", "--config", str(cfg), "--quiet"])
        altered = tmp_path / "altered.cfg"
        altered.write_text(cfg.read_text().replace("epsilon0 = 0.1", "epsilon0 = 0.2"))
        chk = tmp_path / "out" / "checkpoint_00000010.bin"
        code = main(["resume", str(chk), "--config", str(altered), "--quiet"])
        assert code == EXIT_USAGE
        assert "digest" in capsys.readouterr().err


class TestInspect:
    def test_header_printed(self, tmp_path, capsys):
        cfg = run_config(tmp_path)
        main(["run", "--config", str(cfg), "--quiet"])
        chk = tmp_path / "out" / "checkpoint_00000010.bin"
        assert main(["inspect-checkpoint", str(chk)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "scheme: IF-RK2" in out
        assert "payload_bytes: 81920" in out


class TestAudit:
    def audit_config(self, tmp_path, amplitude=1.0, corpus=5):
        text = f"""
[grid]
dim = 2

[audit]
corpus_size = {corpus}
seed = 42
n_low = 32
n_high = 64
band = 8
amplitude = {amplitude}
"""
        path = tmp_path / "audit.cfg"
        path.write_text(text)
        return path

    def test_report_written_and_deterministic(self, tmp_path):
        cfg = self.audit_config(tmp_path)
        out1, out2 = tmp_path / "a1", tmp_path / "a2"
        assert main(["audit", "--config", str(cfg), "--output-dir", str(out1),
                     "--quiet"]) == EXIT_OK
        assert main(["audit", "--config", str(cfg), "--output-dir", str(out2),
                     "--quiet"]) == EXIT_OK
        a = (out1 / "audit_report.csv").read_bytes()
        b = (out2 / "audit_report.csv").read_bytes()
        assert a == b
        rows = read_rows(out1 / "audit_report.csv")
        assert any("interpolation" in r["inequality_id"] for r in rows)
        for r in rows:
            assert np.isfinite(float(r["max_ratio_low"]))

    def test_zero_corpus_gives_header_only(self, tmp_path):
        cfg = self.audit_config(tmp_path, amplitude=0.0, corpus=1)
        out = tmp_path / "z"
        assert main(["audit", "--config", str(cfg), "--output-dir", str(out),
                     "--quiet"]) == EXIT_OK
        lines = (out / "audit_report.csv").read_text().strip().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("inequality_id,")


class TestExitCodes:
    def test_usage_error(self, capsys):
        assert main(["run"]) == EXIT_USAGE
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_config_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[grid]\ndim = 5\n")
        assert main(["run", "--config", str(bad)]) == EXIT_USAGE
        assert "grid.dim" in capsys.readouterr().err

    def test_missing_config_file_is_io_error(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == EXIT_IO

    def test_blowup_exit_code(self, tmp_path, monkeypatch):
        cfg = run_config(tmp_path)

        def fake_run(*args, **kwargs):
            state = kwargs.get("state")
            return RunResult(final_state=None, records=[], blown_up=True, steps_taken=0)

        monkeypatch.setattr(runner, "run", fake_run)
        assert main(["run", "--config", str(cfg), "--quiet"]) == EXIT_BLOWUP

    def test_cfl_violation_rejected(self, tmp_path, capsys):
        cfg = run_config(tmp_path, u_amplitude=100.0, dt=0.01, t_end=0.1)
        assert main(["run", "--config", str(cfg), "--quiet"]) == EXIT_USAGE
        assert "stability" in capsys.readouterr().err
