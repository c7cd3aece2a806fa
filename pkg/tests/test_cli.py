import json
import subprocess
import sys

import numpy as np
import pytest

from gendisc.cli import main
from gendisc.fileio import (
    ConfigError,
    config_from_dict,
    config_to_dict,
    read_dataset_csv,
    read_matrix_csv,
    read_results_csv,
    write_dataset_csv,
    write_matrix_csv,
)
from gendisc.moments import Dataset

TINY_CONFIG = {
    "n_x": 4,
    "n_y": 5,
    "snr_grid": [1.0, 10.0],
    "nt_grid": [50],
    "mc_trials": 15,
    "seed": 5,
}

WORKED_CSV = "3,1,1\n3.0,1.0\n5.0,2.0\n7.0,3.0\n"
PRIOR_JSON = '{"mu_y": [0.0], "C_yy": [[1.0]], "sigma2": 1.0}'


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def _parse_printed(name, out):
    """Grab the numbers printed under a `name =` block."""
    lines = out.splitlines()
    start = lines.index(f"{name} =") + 1
    rows = []
    for line in lines[start:]:
        if not line.startswith("  "):
            break
        rows.append([float(tok) for tok in line.split(",")])
    return np.array(rows)


class TestConfigIO:
    def test_defaults_fill_missing_fields(self):
        cfg = config_from_dict({})
        assert cfg.n_x == 28 and cfg.n_y == 30
        assert len(cfg.snr_grid) == 13
        assert cfg.mc_trials == 10_000

    def test_round_trip(self):
        cfg = config_from_dict(TINY_CONFIG)
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_unknown_field_named(self):
        with pytest.raises(ConfigError, match="snr_gird"):
            config_from_dict({"snr_gird": [1.0]})

    def test_bad_type_named(self):
        with pytest.raises(ConfigError, match="mc_trials"):
            config_from_dict({"mc_trials": "many"})
        with pytest.raises(ConfigError, match="nonlinearity"):
            config_from_dict({"nonlinearity": {"kind": "sigmoid"}})

    def test_nonlinearity_round_trip(self):
        for spec in ({"kind": "linear"}, {"kind": "tanh", "scale": 2.0}, {"kind": "cubic", "alpha": 0.3}):
            cfg = config_from_dict(dict(TINY_CONFIG, nonlinearity=spec))
            assert config_to_dict(cfg)["nonlinearity"] == spec


class TestMatrixAndDatasetFiles:
    def test_matrix_round_trip(self, tmp_path):
        M = np.array([[1.5, -2.0, 3.0], [0.0, 0.25, -1.0]])
        path = tmp_path / "m.csv"
        write_matrix_csv(path, M)
        assert np.array_equal(read_matrix_csv(path), M)

    def test_matrix_header_mismatch_rejected(self, tmp_path):
        path = _write(tmp_path / "bad.csv", "2,2\n1.0,2.0\n")
        with pytest.raises(ValueError, match="promises 2 rows"):
            read_matrix_csv(path)

    def test_dataset_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        data = Dataset(xs=rng.standard_normal((6, 2)), ys=rng.standard_normal((6, 3)))
        path = tmp_path / "d.csv"
        write_dataset_csv(path, data)
        back = read_dataset_csv(path)
        assert np.array_equal(back.xs, data.xs)
        assert np.array_equal(back.ys, data.ys)

    def test_dataset_bad_column_count_rejected(self, tmp_path):
        path = _write(tmp_path / "bad.csv", "1,2,1\n1.0,2.0\n")
        with pytest.raises(ValueError, match="columns"):
            read_dataset_csv(path)


class TestValidateCommand:
    def test_zero_trials_rejected(self, tmp_path, capsys):
        path = _write(tmp_path / "c.json", json.dumps(dict(TINY_CONFIG, mc_trials=0)))
        assert main(["validate", path]) == 1
        assert "mc_trials must be >= 1" in capsys.readouterr().err

    def test_negative_ridge_rejected(self, tmp_path, capsys):
        path = _write(tmp_path / "c.json", json.dumps(dict(TINY_CONFIG, ridge=-0.5)))
        assert main(["validate", path]) == 1
        assert "ridge" in capsys.readouterr().err

    def test_two_multi_grids_rejected(self, tmp_path, capsys):
        path = _write(
            tmp_path / "c.json",
            json.dumps(dict(TINY_CONFIG, snr_grid=[1.0, 2.0], nt_grid=[10, 20])),
        )
        assert main(["validate", path]) == 1
        assert "one grid" in capsys.readouterr().err

    def test_valid_config_prints_resolved_json(self, tmp_path, capsys):
        path = _write(tmp_path / "c.json", json.dumps(TINY_CONFIG))
        assert main(["validate", path]) == 0
        resolved = json.loads(capsys.readouterr().out)
        assert resolved["mc_trials"] == 15
        assert resolved["prior_mode"] == "true_prior"  # default filled

    def test_bundled_configs_are_valid(self, capsys):
        for name in ("mse_vs_snr", "mse_vs_nt"):
            assert main(["validate", name]) == 0
            resolved = json.loads(capsys.readouterr().out)
            assert resolved["n_x"] == 28 and resolved["n_y"] == 30
            assert resolved["mc_trials"] == 10_000

    def test_missing_config_is_usage_error(self, capsys):
        assert main(["validate", "no_such_config"]) == 2
        assert "cannot read config" in capsys.readouterr().err


class TestRunCommand:
    def test_smoke_run_outputs(self, tmp_path, capsys):
        cfg_path = _write(tmp_path / "c.json", json.dumps(TINY_CONFIG))
        out_dir = tmp_path / "out"
        assert main(["run", cfg_path, "--out", str(out_dir)]) == 0

        rows = read_results_csv(out_dir / "results.csv")
        assert list(rows[0].keys()) == [
            "sweep_name",
            "sweep_value",
            "estimator",
            "mean_mse",
            "std_err",
            "trials_ok",
            "trials_failed",
        ]
        assert len(rows) == 2 * 3  # two SNR cells, three estimators

        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["config"]["mc_trials"] == 15
        assert manifest["master_seed"] == 5
        assert manifest["sweep"] == "snr"
        assert manifest["duration_seconds"] > 0.0
        assert len(manifest["cells"]) == 2
        assert (out_dir / "plot_results.py").exists()

    def test_trials_override_keeps_schema(self, tmp_path):
        cfg_path = _write(tmp_path / "c.json", json.dumps(TINY_CONFIG))
        main(["run", cfg_path, "--out", str(tmp_path / "a")])
        main(["run", cfg_path, "--trials", "7", "--out", str(tmp_path / "b")])
        rows_a = read_results_csv(tmp_path / "a" / "results.csv")
        rows_b = read_results_csv(tmp_path / "b" / "results.csv")
        assert list(rows_a[0].keys()) == list(rows_b[0].keys())
        assert all(row["trials_ok"] == "7" for row in rows_b)

    def test_byte_identical_across_threads_and_reruns(self, tmp_path):
        cfg_path = _write(tmp_path / "c.json", json.dumps(TINY_CONFIG))
        for i, threads in enumerate(("1", "3", "1")):
            main(["run", cfg_path, "--threads", threads, "--out", str(tmp_path / f"r{i}")])
        blobs = [(tmp_path / f"r{i}" / "results.csv").read_bytes() for i in range(3)]
        assert blobs[0] == blobs[1] == blobs[2]

    def test_manifest_config_reproduces_csv(self, tmp_path):
        # The manifest's config echo, fed back as a config file, must
        # reproduce results.csv byte for byte.
        cfg_path = _write(tmp_path / "c.json", json.dumps(TINY_CONFIG))
        main(["run", cfg_path, "--trials", "9", "--out", str(tmp_path / "a")])
        manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
        echo_path = _write(tmp_path / "echo.json", json.dumps(manifest["config"]))
        main(["run", echo_path, "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "results.csv").read_bytes() == (
            tmp_path / "b" / "results.csv"
        ).read_bytes()

    def test_seed_override_changes_results(self, tmp_path):
        cfg_path = _write(tmp_path / "c.json", json.dumps(TINY_CONFIG))
        main(["run", cfg_path, "--out", str(tmp_path / "a")])
        main(["run", cfg_path, "--seed", "6", "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "results.csv").read_bytes() != (
            tmp_path / "b" / "results.csv"
        ).read_bytes()
        manifest_b = json.loads((tmp_path / "b" / "manifest.json").read_text())
        assert manifest_b["master_seed"] == 6

    def test_invalid_config_fails_with_diagnostic(self, tmp_path, capsys):
        cfg_path = _write(tmp_path / "c.json", json.dumps(dict(TINY_CONFIG, n_x=0)))
        assert main(["run", cfg_path, "--out", str(tmp_path / "out")]) == 1
        assert "n_x" in capsys.readouterr().err

    def test_plot_script_renders(self, tmp_path):
        cfg_path = _write(tmp_path / "c.json", json.dumps(dict(TINY_CONFIG, mc_trials=5)))
        out_dir = tmp_path / "out"
        main(["run", cfg_path, "--out", str(out_dir)])
        proc = subprocess.run(
            [sys.executable, str(out_dir / "plot_results.py")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (out_dir / "mse_curves.png").stat().st_size > 0


class TestThreadResolution:
    def test_flag_beats_env(self, monkeypatch):
        from gendisc.cli import THREADS_ENV_VAR, _resolve_threads

        monkeypatch.setenv(THREADS_ENV_VAR, "8")
        assert _resolve_threads(3) == 3
        assert _resolve_threads(None) == 8

    def test_default_is_single_thread(self, monkeypatch):
        from gendisc.cli import THREADS_ENV_VAR, _resolve_threads

        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        assert _resolve_threads(None) == 1

    def test_garbage_env_ignored(self, monkeypatch, capsys):
        from gendisc.cli import THREADS_ENV_VAR, _resolve_threads

        monkeypatch.setenv(THREADS_ENV_VAR, "lots")
        assert _resolve_threads(None) == 1
        assert THREADS_ENV_VAR in capsys.readouterr().err


class TestEstimateCommand:
    def test_discriminative_worked_example(self, tmp_path, capsys):
        data = _write(tmp_path / "d.csv", WORKED_CSV)
        assert main(["estimate", "--data", data, "--method", "discriminative"]) == 0
        out = capsys.readouterr().out
        assert _parse_printed("A", out)[0, 0] == pytest.approx(0.5, abs=1e-12)
        assert _parse_printed("b", out)[0, 0] == pytest.approx(-0.5, abs=1e-12)

    def test_generative_worked_example(self, tmp_path, capsys):
        data = _write(tmp_path / "d.csv", WORKED_CSV)
        prior = _write(tmp_path / "p.json", PRIOR_JSON)
        assert main(
            ["estimate", "--data", data, "--prior", prior, "--method", "generative"]
        ) == 0
        out = capsys.readouterr().out
        assert _parse_printed("H_hat", out)[0, 0] == pytest.approx(2.0, abs=1e-12)
        assert _parse_printed("mu_hat", out)[0, 0] == pytest.approx(1.0, abs=1e-12)
        # Gain under the unit prior: 2 / (4 + 1); offset -G (x_bar - H y_bar).
        assert _parse_printed("A", out)[0, 0] == pytest.approx(0.4, abs=1e-12)
        assert _parse_printed("b", out)[0, 0] == pytest.approx(-0.4, abs=1e-12)

    def test_generative_requires_prior(self, tmp_path, capsys):
        data = _write(tmp_path / "d.csv", WORKED_CSV)
        assert main(["estimate", "--data", data, "--method", "generative"]) == 2
        assert "--prior" in capsys.readouterr().err

    def test_prior_dimension_mismatch_names_fields(self, tmp_path, capsys):
        data = _write(tmp_path / "d.csv", WORKED_CSV)
        prior = _write(
            tmp_path / "p.json",
            '{"mu_y": [0.0, 0.0], "C_yy": [[1.0, 0.0], [0.0, 1.0]], "sigma2": 1.0}',
        )
        assert main(
            ["estimate", "--data", data, "--prior", prior, "--method", "generative"]
        ) == 1
        err = capsys.readouterr().err
        assert "C_yy" in err and "ys" in err

    def test_singular_moment_is_named(self, tmp_path, capsys):
        constant_targets = "3,1,1\n1.0,5.0\n2.0,5.0\n3.0,5.0\n"
        data = _write(tmp_path / "d.csv", constant_targets)
        prior = _write(tmp_path / "p.json", PRIOR_JSON)
        assert main(
            ["estimate", "--data", data, "--prior", prior, "--method", "generative"]
        ) == 1
        assert "target sample covariance" in capsys.readouterr().err

    def test_degenerate_input_covariance_suggests_fix(self, tmp_path, capsys):
        two_samples = "2,2,1\n1.0,0.0,1.0\n0.0,1.0,2.0\n"
        data = _write(tmp_path / "d.csv", two_samples)
        assert main(["estimate", "--data", data, "--method", "discriminative"]) == 1
        err = capsys.readouterr().err
        assert "input sample covariance" in err
        assert "ridge" in err
