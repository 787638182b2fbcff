import json
import math

import numpy as np
import pytest

from mechcat.cli import main
from mechcat.io import ConfigError, parse_protocol_config


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


BASE_CONFIG = {
    "steps": 2,
    "coupling": 1.0,
    "initial_occupation": 0.1,
    "preset": "cat01",
    "efficiency": 0.9,
    "per_step_thermal": 1e-3,
}


class TestConfigParsing:
    def test_preset_fills_phases_and_clicks(self):
        cfg = parse_protocol_config(dict(BASE_CONFIG))
        assert cfg.steps == 2
        assert cfg.click_sequence == ((0, 1), (0, 1))

    def test_explicit_phases(self):
        doc = {
            "steps": 2, "coupling": 0.5,
            "phases": [0.3, 1.7],
            "clicks": [[0, 1], [1, 0]],
        }
        cfg = parse_protocol_config(doc)
        assert cfg.phases == (0.3, 1.7)

    def test_fractional_turn_phases(self):
        doc = {
            "steps": 2, "coupling": 0.5,
            "phases": {"turns": [[1, 2], [1, 1]]},
            "clicks": [[0, 1], [0, 1]],
        }
        cfg = parse_protocol_config(doc)
        from fractions import Fraction

        assert cfg.phases == (Fraction(1, 2), Fraction(1, 1))

    @pytest.mark.parametrize(
        "patch,field",
        [
            ({"steps": "three"}, "steps"),
            ({"coupling": None}, "coupling"),
            ({"preset": "catXY"}, "preset"),
            ({"efficiency": "high"}, "efficiency"),
        ],
    )
    def test_errors_name_the_field(self, patch, field):
        doc = dict(BASE_CONFIG)
        doc.update(patch)
        if patch.get("coupling", "x") is None:
            doc.pop("coupling")
        with pytest.raises(ConfigError, match=field):
            parse_protocol_config(doc)

    def test_coherent_alpha_forms(self):
        doc = dict(BASE_CONFIG)
        doc["input"] = {"kind": "coherent", "alpha": [0.3, 0.1]}
        cfg = parse_protocol_config(doc)
        assert cfg.alpha == complex(0.3, 0.1)


class TestStateVerb:
    def test_dry_run(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE_CONFIG)
        assert main(["state", "--config", cfg, "--dry-run"]) == 0
        assert "config ok" in capsys.readouterr().out

    def test_writes_grids_and_metadata(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG)
        out = tmp_path / "run"
        assert main(["state", "--config", cfg, "--out", str(out)]) == 0
        for j in range(3):
            assert (out / f"wigner_step{j}.csv").exists()
            assert (out / f"wigner_step{j}.bin").exists()
            assert (out / f"wigner_step{j}.bin.json").exists()
            assert (out / f"wigner_step{j}.png").exists()
        meta = json.loads((out / "state_run.json").read_text())
        assert meta["version"]
        assert len(meta["step_weights"]) == 3
        # binary matches its sidecar shape and is finite
        sidecar = json.loads((out / "wigner_step2.bin.json").read_text())
        raw = np.fromfile(out / "wigner_step2.bin", dtype="<f8")
        assert raw.size == sidecar["shape"][0] * sidecar["shape"][1]
        assert np.all(np.isfinite(raw))

    def test_deterministic_csv(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["state", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["state", "--config", cfg, "--out", str(out2)]) == 0
        for j in range(3):
            a = (out1 / f"wigner_step{j}.csv").read_bytes()
            b = (out2 / f"wigner_step{j}.csv").read_bytes()
            assert a == b

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"steps": 2})
        assert main(["state", "--config", cfg, "--dry-run"]) == 1
        assert "coupling" in capsys.readouterr().err

    def test_grid_override(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG)
        out = tmp_path / "g"
        assert main(["state", "--config", cfg, "--out", str(out),
                     "--grid", "32,48"]) == 0
        sidecar = json.loads((out / "wigner_step0.bin.json").read_text())
        assert sidecar["shape"] == [32, 48]


class TestHeraldVerb:
    def test_with_config(self, tmp_path):
        cfg = write_config(tmp_path, BASE_CONFIG)
        out = tmp_path / "h"
        assert main(["herald", "--config", cfg, "--out", str(out)]) == 0
        payload = json.loads((out / "herald.json").read_text())
        ratio = payload["trace_to_printed_ratio"]
        assert ratio == pytest.approx(2.0 ** -BASE_CONFIG["steps"], rel=1e-9)

    def test_with_device(self, tmp_path):
        out = tmp_path / "h"
        assert main(["herald", "--device", "proposal_iii", "--out", str(out)]) == 0
        payload = json.loads((out / "herald.json").read_text())
        assert payload["herald_probability"] == pytest.approx(0.170, abs=5e-4)
        assert payload["t_tot_seconds"] == pytest.approx(5.90, abs=0.02)

    def test_unknown_device(self, tmp_path, capsys):
        assert main(["herald", "--device", "nope", "--out", str(tmp_path)]) == 1
        assert "unknown device" in capsys.readouterr().err


class TestPulseVerb:
    def test_matched(self, tmp_path):
        out = tmp_path / "p"
        assert main(["pulse", "--g0", "1e3", "--kappa", "1e7",
                     "--out", str(out)]) == 0
        payload = json.loads((out / "pulse.json").read_text())
        assert payload["mu"] == pytest.approx(3e3 / (math.sqrt(2) * 1e7), rel=1e-6)

    def test_table_shape(self, tmp_path):
        samples = tmp_path / "env.csv"
        t = np.linspace(-15.0, 15.0, 4001)
        f = np.exp(-np.abs(t))
        np.savetxt(samples, np.column_stack([t, f]), delimiter=",")
        out = tmp_path / "p"
        assert main(["pulse", "--shape", f"csv:{samples}", "--g0", "1.0",
                     "--kappa", "1.0", "--out", str(out)]) == 0
        payload = json.loads((out / "pulse.json").read_text())
        assert payload["mu"] == pytest.approx(3.0 / math.sqrt(2.0), rel=1e-4)

    def test_unknown_shape(self, tmp_path, capsys):
        assert main(["pulse", "--shape", "sawtooth", "--g0", "1", "--kappa", "1",
                     "--out", str(tmp_path)]) == 1


class TestSweepVerb:
    def test_tiny_sweep(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps(
            {"steps": [0, 1], "mu": [1.0], "nth": [1e-3], "nbar": [0.0]}
        ))
        out = tmp_path / "s"
        assert main(["sweep", "--spec", str(spec), "--out", str(out),
                     "--jobs", "1", "--no-plots"]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        data = [l for l in lines if not l.startswith("#")]
        assert data[0].startswith("n_steps,")
        assert len(data) == 3
        # N=0 row is the bare thermal state: M = 1/(1+2nbar) = 1
        row0 = dict(zip(data[0].split(","), data[1].split(",")))
        assert float(row0["macroscopicity"]) == pytest.approx(1.0, abs=1e-6)

    def test_sweep_plots(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps(
            {"steps": [1, 2], "mu": [1.0], "nth": [1e-3], "nbar": [0.0]}
        ))
        out = tmp_path / "s"
        assert main(["sweep", "--spec", str(spec), "--out", str(out),
                     "--jobs", "1"]) == 0
        assert (out / "sweep_macroscopicity_mu1.png").exists()

    def test_bad_spec_field(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"stepz": [1]}))
        assert main(["sweep", "--spec", str(spec), "--out", str(tmp_path),
                     "--jobs", "1"]) == 1


class TestTable1Verb:
    def _params(self, tmp_path, expected):
        doc = {
            "protocol": {"steps": 3, "efficiency": 0.9,
                         "input_kind": "single_photon", "runs": 1000},
            "tolerances": {
                "nth": {"relative": 0.015}, "t_tot": {"relative": 0.015},
                "min_w": {"last_digit": True}, "delta": {"last_digit": True},
                "lee_jeong": {"last_digit": True},
                "macroscopicity": {"last_digit": True},
            },
            "rows": [{
                "label": "proposal_iii",
                "mu": 1.00, "frequency_hz": 1.00e6, "quality_factor": 6.28e6,
                "initial_occupation": 0.1, "bath": {"temperature_K": 0.1},
                "expected": expected,
            }],
        }
        path = tmp_path / "params.json"
        path.write_text(json.dumps(doc))
        return str(path)

    def test_consistent_row_passes(self, tmp_path):
        # expected values pinned from this engine's verified output
        params = self._params(tmp_path, {
            "nth": "2.085e-3", "t_tot": "5.90", "min_w": "-0.2319",
            "delta": "0.1667", "lee_jeong": "0.9011", "macroscopicity": "4.818",
        })
        assert main(["table1", "--params", params, "--out", str(tmp_path / "t")]) == 0

    def test_mismatched_cell_sets_exit_code(self, tmp_path, capsys):
        params = self._params(tmp_path, {
            "nth": "2.085e-3", "t_tot": "5.90", "min_w": "-0.2319",
            "delta": "0.1667", "lee_jeong": "0.9011", "macroscopicity": "9.999",
        })
        assert main(["table1", "--params", params, "--out", str(tmp_path / "t")]) == 2
        assert "macroscopicity" in capsys.readouterr().out


class TestOracleCheckVerb:
    def test_single_cell_wiring(self, tmp_path, monkeypatch):
        import mechcat.validation as validation

        monkeypatch.setattr(validation, "matrix_cells",
                            lambda quick=False: iter([(1, 1.0, 0.0, 0.0)]))
        assert main(["oracle-check", "--jobs", "1", "--out", str(tmp_path)]) == 0
        payload = json.loads((tmp_path / "oracle_check.json").read_text())
        assert len(payload["results"]) == 1
        assert payload["results"][0]["pass"] is True
