import json
import subprocess
import sys

import pytest

from spheresgd.harness.cli import main


def write_config(tmp_path, **overrides):
    raw = dict(
        gamma=2.0,
        s=1.0,
        n_grid=[8, 16, 32],
        kernel={"kind": "ntk", "depth": 2},
        schedule="avg",
        target={"kind": "kernel_combination", "num_anchors": 2},
        eta0={"value": 0.2},
        seeds=[0, 1],
        n_test=50,
        noise_sigma=0.5,
        max_degree=4,
    )
    raw.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path


class TestSpectrumCommand:
    def test_stdout_csv(self, capsys):
        assert main(["spectrum", "--kernel", "ntk:2", "--d", "3", "--max-degree", "4"]) == 0
        out = capsys.readouterr().out
        assert "# kernel: " in out
        assert "k,mu,multiplicity,cumulative_trace_fraction" in out
        lines = [ln for ln in out.splitlines() if ln and ln[0].isdigit()]
        assert len(lines) == 5
        first = lines[0].split(",")
        assert first[0] == "0" and first[2] == "1"

    def test_file_outputs(self, tmp_path, capsys):
        out = tmp_path / "spec.csv"
        lam = tmp_path / "lam.csv"
        code = main(
            [
                "spectrum",
                "--kernel",
                "linear",
                "--d",
                "5",
                "--max-degree",
                "3",
                "--out",
                str(out),
                "--lambda-out",
                str(lam),
            ]
        )
        assert code == 0
        assert "wrote" in capsys.readouterr().out
        body = out.read_text()
        assert "# d: 5" in body
        mu1 = [ln for ln in body.splitlines() if ln.startswith("1,")][0]
        assert float(mu1.split(",")[1]) == pytest.approx(1.0 / 6.0, abs=1e-12)
        lam_lines = lam.read_text().splitlines()
        assert "rank,lambda" in lam_lines
        data = [ln for ln in lam_lines if ln and ln[0].isdigit()]
        assert len(data) == 1 + 6 + 20 + 50  # degrees 0..3 multiplicities on S^5

    def test_kernel_shorthands(self, capsys):
        assert main(["spectrum", "--kernel", "power:0.5,0.5", "--d", "3", "--max-degree", "2"]) == 0
        capsys.readouterr()
        assert (
            main(["spectrum", "--kernel", '{"kind": "ntk", "depth": 3}', "--d", "3", "--max-degree", "2"])
            == 0
        )
        capsys.readouterr()

    def test_bad_kernel_text_exits_1(self, capsys):
        assert main(["spectrum", "--kernel", "rbf", "--d", "3"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_out_dir_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("SPHERESGD_OUT_DIR", str(tmp_path))
        assert main(["spectrum", "--kernel", "linear", "--d", "3", "--out", "nested/s.csv"]) == 0
        capsys.readouterr()
        assert (tmp_path / "nested" / "s.csv").exists()


class TestTheoryCommand:
    def test_rate_plan_json(self, capsys):
        assert main(["theory", "--gamma", "2.0", "--s", "0.5", "--d", "10", "--n", "1024"]) == 0
        data = json.loads(capsys.readouterr().out)
        plan = data["rate_plan"]
        assert plan["p"] == 1 and plan["region"] == "i"
        assert plan["exponent_d"] == -1.0
        assert data["minimax"]["highdim_risk"] == pytest.approx(0.1)
        assert "asymptotic_risk" in data["minimax"]
        assert set(data["eta0"]) == {"dec", "avg", "asymptotic"}
        assert isinstance(data["eta0"]["dec"], float)

    def test_bounds_from_spectrum_file(self, tmp_path, capsys):
        spec = tmp_path / "spec.csv"
        assert (
            main(
                ["spectrum", "--kernel", "ntk:2", "--d", "4", "--max-degree", "6", "--out", str(spec)]
            )
            == 0
        )
        capsys.readouterr()
        code = main(
            [
                "theory",
                "--gamma",
                "2.0",
                "--s",
                "1.0",
                "--n",
                "256",
                "--spectrum",
                str(spec),
                "--sigma",
                "1.0",
                # the uncapped recommendation lands exactly on 1/kappa^2, where the
                # averaged upper bound is undefined; pin a step size safely below it
                "--eta0",
                "0.3",
            ]
        )
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        b = data["bounds"]
        assert b["n"] == 256 and b["kappa2"] == 2.0
        assert b["eta0"] == 0.3
        assert b["dec_exact"] <= b["dec_upper"] * (1 + 1e-9)
        assert b["avg_exact"] <= b["avg_upper"] * (1 + 1e-9)
        assert b["avg_lower"] <= b["avg_upper"] * (1 + 1e-9)
        assert b["k_star"] >= 1

    def test_spectrum_without_n_is_an_error(self, tmp_path, capsys):
        spec = tmp_path / "spec.csv"
        main(["spectrum", "--kernel", "linear", "--d", "3", "--out", str(spec)])
        capsys.readouterr()
        assert main(["theory", "--gamma", "2.0", "--s", "1.0", "--spectrum", str(spec)]) == 1
        assert "needs --n" in capsys.readouterr().err

    def test_missing_spectrum_file(self, capsys):
        code = main(["theory", "--gamma", "2.0", "--s", "1.0", "--n", "64", "--spectrum", "/nope.csv"])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestSweepCommand:
    def test_end_to_end(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        assert "fitted slope" in printed
        assert out.exists() and (tmp_path / "sweep.csv.meta.json").exists()
        assert len(out.read_text().splitlines()) == 1 + 9

    def test_out_defaults_to_config_field(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SPHERESGD_OUT_DIR", str(tmp_path))
        cfg = write_config(tmp_path, out="from_config.csv")
        assert main(["sweep", "--config", str(cfg)]) == 0
        capsys.readouterr()
        assert (tmp_path / "from_config.csv").exists()

    def test_missing_config(self, capsys):
        assert main(["sweep", "--config", "/does/not/exist.json"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_malformed_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"gamma": -1}')
        assert main(["sweep", "--config", str(bad)]) == 1
        assert "error:" in capsys.readouterr().err


class TestRunCommand:
    def test_single_cell_dump(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        out = tmp_path / "cell.csv"
        code = main(["run", "--config", str(cfg), "--n", "8", "--seed", "1", "--out", str(out)])
        assert code == 0
        capsys.readouterr()
        lines = out.read_text().splitlines()
        assert sum(1 for ln in lines if not ln.startswith("#")) == 1 + 8

    def test_cell_outside_grid(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        out = tmp_path / "cell.csv"
        code = main(["run", "--config", str(cfg), "--n", "12", "--seed", "0", "--out", str(out)])
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestVerifyCommand:
    def test_quick_exits_zero(self, capsys):
        assert main(["verify", "--level", "quick"]) == 0
        out = capsys.readouterr().out
        assert "backend:" in out
        assert "checks passed" in out


class TestModuleEntryPoint:
    def test_python_dash_m(self):
        proc = subprocess.run(
            [sys.executable, "-m", "spheresgd", "--help"],
            capture_output=True,
            text=True,
            timeout=60,
        )
        assert proc.returncode == 0
        assert "spectrum" in proc.stdout and "verify" in proc.stdout
