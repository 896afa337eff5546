import csv
import json

import numpy as np
import pytest

from flime.cli import main


def _write_config(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


def _base_config(**overrides):
    config = {
        "system": {"kind": "driven_2ls_full", "omega0": 6.283185307179586,
                   "omega": 6.283185307179586, "Omega": 3.141592653589793,
                   "Omega_tilde": 3.141592653589793},
        "channels": [{"operator": "sigma_minus", "rate": 0.5}],
        "solver": "flime",
        "secular_cutoff": "inf",
        "k_max": 10,
        "evolution": {"n_periods": 2, "samples_per_period": 100},
        "outputs": ["excited_population"],
        "seed": 0,
    }
    config.update(overrides)
    return config


def _read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestEvolveCommand:
    def test_writes_csv_with_expected_shape(self, tmp_path):
        cfg = _write_config(tmp_path, _base_config())
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 0
        header, rows = _read_csv(tmp_path / "evolve_flime.csv")
        assert header == ["time", "excited_population"]
        assert len(rows) == 201
        pops = np.array([float(r[1]) for r in rows])
        assert np.all((pops >= 0.0) & (pops <= 1.0))
        # 17 significant digits make the serialization lossless
        times = np.linspace(0.0, 2.0, 201)
        assert all(float(r[0]) == t for r, t in zip(rows, times))
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert meta["library_version"]
        assert "flime" in meta["results"]

    def test_both_solvers_and_agreement_report(self, tmp_path):
        cfg = _write_config(tmp_path, _base_config(solver="both"))
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 0
        assert (tmp_path / "evolve_flime.csv").exists()
        assert (tmp_path / "evolve_reference.csv").exists()
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert meta["agreement"]["max_trace_distance"] < 1e-5

    def test_byte_identical_reruns(self, tmp_path):
        cfg = _write_config(tmp_path, _base_config())
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["evolve", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["evolve", "--config", cfg, "--out", str(out2)]) == 0
        assert (out1 / "evolve_flime.csv").read_bytes() == (out2 / "evolve_flime.csv").read_bytes()

    def test_set_override(self, tmp_path):
        cfg = _write_config(tmp_path, _base_config())
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path),
                     "--set", "evolution.n_periods=1",
                     "--set", "evolution.samples_per_period=10"]) == 0
        _, rows = _read_csv(tmp_path / "evolve_flime.csv")
        assert len(rows) == 11

    def test_unit_tagged_values(self, tmp_path):
        config = _base_config()
        config["system"]["Omega"] = {"value": 0.5, "unit": "GHz"}
        config["system"]["Omega_tilde"] = {"value": 0.5, "unit": "GHz"}
        config["channels"] = [{"operator": "sigma_minus", "rate": {"lifetime": 2.0, "unit": "ns"}}]
        cfg = _write_config(tmp_path, config)
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 0


class TestConfigValidation:
    def test_invalid_system_names_allowed_values(self, tmp_path, capsys):
        cfg = _write_config(tmp_path, _base_config(system={"kind": "nonsense"}))
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "driven_2ls_rwa" in err and "pulse_train" in err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        config = _base_config()
        config["typo_key"] = 1
        cfg = _write_config(tmp_path, config)
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "typo_key" in capsys.readouterr().err

    def test_unknown_observable_rejected(self, tmp_path, capsys):
        cfg = _write_config(tmp_path, _base_config(outputs=["entropy"]))
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "entropy" in capsys.readouterr().err

    def test_bad_json_reports_line(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"system": }')
        assert main(["evolve", "--config", str(path), "--out", str(tmp_path)]) == 2
        assert "line" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert main(["evolve", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)]) == 2

    def test_ness_rejects_both(self, tmp_path):
        cfg = _write_config(tmp_path, _base_config(solver="both"))
        assert main(["ness", "--config", cfg, "--out", str(tmp_path)]) == 2


class TestNessCommand:
    def test_cycle_csv_and_metadata(self, tmp_path):
        config = _base_config(solver="reference")
        config["channels"] = [{"operator": "sigma_minus", "rate": 1.5}]
        config["ness"] = {"conv_tol": 1e-7, "max_periods": 400, "samples_per_period": 16}
        cfg = _write_config(tmp_path, config)
        assert main(["ness", "--config", cfg, "--out", str(tmp_path)]) == 0
        header, rows = _read_csv(tmp_path / "ness_cycle.csv")
        assert header == ["tau", "excited_population"]
        assert len(rows) == 16
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert meta["ness"]["converged"] is True
        assert meta["ness"]["periods_to_converge"] >= 1


class TestSpectrumCommand:
    def test_rwa_triplet_is_symmetric(self, tmp_path):
        config = {
            "system": {"kind": "driven_2ls_rwa", "omega0": 100.0, "omega": 100.0,
                       "Omega": 8.0},
            "channels": [{"operator": "sigma_minus", "rate": 1.0}],
            "solver": "reference",
            "spectrum": {"tau_max": 40.0, "n_tau": 800, "resolution": 0.25},
            "ness": {"conv_tol": 1e-9, "max_periods": 2000, "samples_per_period": 8},
        }
        cfg = _write_config(tmp_path, config)
        assert main(["spectrum", "--config", cfg, "--out", str(tmp_path)]) == 0
        header, rows = _read_csv(tmp_path / "spectrum.csv")
        assert header == ["detuning", "intensity"]
        det = np.array([float(r[0]) for r in rows])
        s = np.array([float(r[1]) for r in rows])
        # symmetric triplet: peaks at 0 and +-Omega
        for target in (-8.0, 0.0, 8.0):
            idx = np.argmin(np.abs(det - target))
            window = s[max(0, idx - 3):idx + 4]
            assert window.max() > 0.2 * s.max()
        sym = s[::-1]
        assert np.max(np.abs(s - sym)) < 0.05 * s.max()
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert meta["spectrum"]["frame"] == "rotating"


class TestBenchCommand:
    def test_structure_and_quotients(self, tmp_path):
        config = _base_config()
        config["tolerances"] = {"rtol": 1e-6, "atol": 1e-8}
        config["bench"] = {"periods": [2, 4], "repeats": 3, "samples_total": 20}
        cfg = _write_config(tmp_path, config)
        assert main(["bench", "--config", cfg, "--out", str(tmp_path)]) == 0
        header, rows = _read_csv(tmp_path / "bench.csv")
        assert header[0] == "n_periods"
        assert "solution_quotient" in header and "total_quotient" in header
        assert len(rows) == 2
        for row in rows:
            values = dict(zip(header, [float(x) for x in row]))
            assert all(v >= 0.0 for v in values.values())
            # quotient is the reference mean divided by the flime mean
            assert values["solution_quotient"] == pytest.approx(
                values["reference_solution_mean_s"] / values["flime_solution_mean_s"])
            assert values["total_quotient"] == pytest.approx(
                values["reference_total_mean_s"] / values["flime_total_mean_s"])

    def test_repeats_validation(self, tmp_path):
        config = _base_config()
        config["bench"] = {"periods": [2], "repeats": 2}
        cfg = _write_config(tmp_path, config)
        assert main(["bench", "--config", cfg, "--out", str(tmp_path)]) == 2


class TestCompareCommand:
    def test_compare_runs_both(self, tmp_path):
        cfg = _write_config(tmp_path, _base_config())
        assert main(["compare", "--config", cfg, "--out", str(tmp_path)]) == 0
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert "agreement" in meta


class TestOtherSystems:
    def test_pulse_train_cutoff_levels_differ(self, tmp_path):
        config = {
            "system": {"kind": "pulse_train", "delta": 0.0, "period": 0.1,
                       "n_harmonics": 40},
            "channels": [{"operator": "sigma_minus", "rate": 0.5}],
            "solver": "flime",
            "secular_cutoff": 0.0,
            "evolution": {"n_periods": 5, "samples_per_period": 50},
            "outputs": ["excited_population", "ground_population"],
        }
        cfg = _write_config(tmp_path, config)
        out0, out1 = tmp_path / "secular", tmp_path / "full"
        assert main(["evolve", "--config", cfg, "--out", str(out0)]) == 0
        assert main(["evolve", "--config", cfg, "--out", str(out1),
                     "--set", "secular_cutoff=inf"]) == 0
        _, rows0 = _read_csv(out0 / "evolve_flime.csv")
        _, rows1 = _read_csv(out1 / "evolve_flime.csv")
        p0 = np.array([float(r[1]) for r in rows0])
        p1 = np.array([float(r[1]) for r in rows1])
        # the two cutoff levels give visibly different inter-pulse behavior
        assert np.max(np.abs(p0 - p1)) > 1e-3

    def test_bichromatic_system(self, tmp_path):
        config = {
            "system": {"kind": "bichromatic", "delta_bar": 1.0, "beat": 3.0,
                       "Omega1": 1.2, "Omega2": 0.8},
            "channels": [{"operator": "sigma_minus", "rate": 0.3}],
            "solver": "both",
            "secular_cutoff": "inf",
            "k_max": 12,
            "evolution": {"n_periods": 3, "samples_per_period": 40},
        }
        cfg = _write_config(tmp_path, config)
        assert main(["evolve", "--config", cfg, "--out", str(tmp_path)]) == 0
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert meta["agreement"]["max_trace_distance"] < 1e-5


class TestEntryPoint:
    def test_module_invocation(self):
        import subprocess
        import sys
        proc = subprocess.run([sys.executable, "-m", "flime", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "evolve" in proc.stdout and "bench" in proc.stdout
