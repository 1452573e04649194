import json
import math

import numpy as np
import pytest

from dcollapse import cli
from dcollapse import localization as loc
from dcollapse.ensemble import ExperimentConfig


def read_csv(path):
    with open(path) as f:
        schema = f.readline().strip()
        header = f.readline().strip().split(",")
    body = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    return schema, header, body


class TestConstants:
    def test_natural_units_json(self, tmp_path, capsys):
        rc = cli.main(["constants", "--units", "natural", "--format", "json",
                       "--out", str(tmp_path)])
        assert rc == 0
        with open(tmp_path / "constants.json") as f:
            row = json.load(f)
        assert row["schema"] == "constants-v1"
        assert row["hbar"] == 1.0
        assert row["omega"] == pytest.approx(0.6328504467012849, rel=1e-12)
        assert row["theta"] == pytest.approx(0.7604189655364769, rel=1e-12)
        assert row["sigma_q_bar"]**2 == pytest.approx(1.6211486820500447,
                                                      rel=1e-12)
        assert row["uncertainty_product"] >= 0.5 * row["hbar"]
        assert "constants.json" in capsys.readouterr().out

    def test_si_reference_mass_csv(self, tmp_path):
        rc = cli.main(["constants", "--units", "si", "--out", str(tmp_path)])
        assert rc == 0
        with open(tmp_path / "constants.csv") as f:
            assert f.readline().strip() == "# schema=constants-v1"
            assert f.readline().strip() == "name,value"
            vals = {}
            for line in f:
                k, v = line.strip().split(",")
                vals[k] = float(v)
        assert vals["mass"] == pytest.approx(1.67262192369e-27, rel=1e-12)
        assert vals["omega"] == pytest.approx(5.021912987305437e-05, rel=1e-10)
        assert vals["theta"] == pytest.approx(math.pi / 4, abs=1e-10)
        assert vals["sigma_q_bar"] == pytest.approx(0.035432728469966285,
                                                    rel=1e-10)
        assert vals["temperature"] == pytest.approx(0.12039577943343933,
                                                    rel=1e-10)
        assert vals["energy_inf"] == pytest.approx(8.31121562394993e-25,
                                                   rel=1e-10)

    def test_si_mass_scaling(self, tmp_path):
        cli.main(["constants", "--units", "si", "--mass", "1.0",
                  "--format", "json", "--out", str(tmp_path / "kg")])
        cli.main(["constants", "--units", "si",
                  "--format", "json", "--out", str(tmp_path / "ref")])
        with open(tmp_path / "kg" / "constants.json") as f:
            kg = json.load(f)
        with open(tmp_path / "ref" / "constants.json") as f:
            ref = json.load(f)
        # frequency, angle and temperature do not depend on the mass; the
        # stationary width shrinks as 1/sqrt(mass)
        assert kg["omega"] == pytest.approx(ref["omega"], rel=1e-12)
        assert kg["theta"] == pytest.approx(ref["theta"], rel=1e-12)
        assert kg["temperature"] == pytest.approx(ref["temperature"],
                                                  rel=1e-12)
        ratio = ref["sigma_q_bar"] / kg["sigma_q_bar"]
        assert ratio == pytest.approx(1.0 / math.sqrt(ref["mass"]), rel=1e-9)


class TestTables:
    def test_gaussian_csv(self, tmp_path):
        rc = cli.main(["gaussian", "--out", str(tmp_path)])
        assert rc == 0
        schema, header, body = read_csv(str(tmp_path / "gaussian.csv"))
        assert schema == "# schema=gaussian-relaxation-v1"
        assert header[:4] == ["t", "a_real", "a_imag", "sigma_q"]
        assert body.shape == (21, 10)
        assert body[0, 0] == 0.0
        assert body[-1, 0] == pytest.approx(2.0)
        # default initial width is already stationary, so nothing moves
        assert np.ptp(body[:, 3]) < 1e-12

    def test_gaussian_json_format(self, tmp_path):
        rc = cli.main(["gaussian", "--format", "json", "--out",
                       str(tmp_path)])
        assert rc == 0
        with open(tmp_path / "gaussian.json") as f:
            payload = json.load(f)
        assert payload["schema"] == "gaussian-relaxation-v1"
        assert len(payload["columns"]) == 10
        assert len(payload["rows"]) == 21

    def test_master_flow_purity(self, tmp_path):
        rc = cli.main(["master", "--out", str(tmp_path)])
        assert rc == 0
        schema, header, body = read_csv(str(tmp_path / "master.csv"))
        assert schema == "# schema=master-flow-v1"
        assert header[-1] == "purity"
        # decoherence degrades purity monotonically from the pure start
        pur = body[:, -1]
        assert pur[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(pur) < 0)
        assert np.all((pur > 0) & (pur <= 1 + 1e-12))

    def test_density_methods(self, tmp_path, capsys):
        cfg = ExperimentConfig(n_steps=100, dt=0.01)
        path = str(tmp_path / "exp.cfg")
        cfg.to_file(path)
        rc = cli.main(["density", "--config", path, "--out", str(tmp_path)])
        assert rc == 0
        schema, header, body = read_csv(str(tmp_path / "density.csv"))
        assert schema == "# schema=density-v1"
        assert header == ["x", "exact", "expansion", "smoothed", "free"]
        dx = body[1, 0] - body[0, 0]
        for j in range(1, 5):
            assert body[:, j].sum() * dx == pytest.approx(1.0, abs=1e-3)
        out = capsys.readouterr().out
        assert "beta_t=" in out


class TestTrajectory:
    def test_nonlinear_run(self, tmp_path):
        cfg = ExperimentConfig(n_steps=40, record_every=8, master_seed=7)
        path = str(tmp_path / "exp.cfg")
        cfg.to_file(path)
        rc = cli.main(["trajectory", "--config", path, "--out",
                       str(tmp_path)])
        assert rc == 0
        schema, header, body = read_csv(str(tmp_path / "trajectory.csv"))
        assert schema == "# schema=trajectory-v1"
        assert header[0] == "t"
        assert header[-1] == "norm_sq"
        assert body.shape[0] == 6
        assert np.allclose(body[:, -1], 1.0, atol=1e-12)

    def test_seed_flag_changes_noise(self, tmp_path):
        for seed, name in ((3, "a"), (4, "b")):
            out = tmp_path / name
            rc = cli.main(["trajectory", "--seed", str(seed), "--out",
                           str(out)])
            assert rc == 0
        a = open(tmp_path / "a" / "trajectory.csv").read()
        b = open(tmp_path / "b" / "trajectory.csv").read()
        assert a != b

    def test_aborted_trajectory_exits_1(self, tmp_path, capsys):
        cfg = ExperimentConfig(n_steps=4, xbar0=15.0)
        path = str(tmp_path / "exp.cfg")
        cfg.to_file(path)
        rc = cli.main(["trajectory", "--config", path, "--out",
                       str(tmp_path)])
        assert rc == 1
        assert "aborted" in capsys.readouterr().err


class TestEnsemble:
    def test_csv_outputs_and_determinism(self, tmp_path):
        cfg = ExperimentConfig(n_trajectories=8, n_steps=20, batch_size=4,
                               record_every=10, master_seed=12)
        path = str(tmp_path / "exp.cfg")
        cfg.to_file(path)
        rc = cli.main(["ensemble", "--config", path, "--out",
                       str(tmp_path / "one")])
        assert rc == 0
        for name in ("moments.csv", "density.csv", "final_q_hist.csv"):
            assert (tmp_path / "one" / name).exists()
        rc = cli.main(["ensemble", "--config", path, "--out",
                       str(tmp_path / "two")])
        assert rc == 0
        for name in ("moments.csv", "density.csv", "final_q_hist.csv"):
            one = open(tmp_path / "one" / name).read()
            two = open(tmp_path / "two" / name).read()
            assert one == two

    def test_json_summary(self, tmp_path, capsys):
        cfg = ExperimentConfig(n_trajectories=6, n_steps=10, batch_size=3,
                               record_every=5)
        path = str(tmp_path / "exp.json")
        cfg.to_file(path)
        rc = cli.main(["ensemble", "--config", path, "--format", "json",
                       "--out", str(tmp_path)])
        assert rc == 0
        with open(tmp_path / "summary.json") as f:
            payload = json.load(f)
        assert payload["schema"] == "ensemble-summary-v1"
        assert payload["n_trajectories"] == 6
        out = capsys.readouterr().out
        assert "6 trajectories, 0 aborted" in out


class TestErrors:
    def test_missing_config_exits_1(self, tmp_path, capsys):
        rc = cli.main(["constants", "--config",
                       str(tmp_path / "missing.cfg")])
        assert rc == 1
        assert "error" in capsys.readouterr().err

    def test_bad_config_key_exits_1(self, tmp_path, capsys):
        path = str(tmp_path / "bad.cfg")
        with open(path, "w") as f:
            f.write("frobnicate = 2\n")
        rc = cli.main(["gaussian", "--config", path])
        assert rc == 1
        assert "frobnicate" in capsys.readouterr().err

    def test_unknown_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["frobnicate"])
        assert exc.value.code == 2


class TestVerify:
    def test_passes_on_defaults(self, tmp_path, capsys):
        rc = cli.main(["verify", "--out", str(tmp_path)])
        assert rc == 0
        with open(tmp_path / "verify.json") as f:
            report = json.load(f)
        assert report["schema"] == "verify-v1"
        assert report["passed"] is True
        assert set(report["checks"]) == {
            "stationary_identities", "relaxation_weights",
            "width_closed_form", "coefficient_routes",
            "stationary_covariance", "localization_drift",
            "ensemble_vs_master",
        }
        assert all(c["passed"] for c in report["checks"].values())
        out = capsys.readouterr().out
        assert out.count("PASS") == 7
        assert "FAIL" not in out

    def test_failing_check_exits_2(self, tmp_path, capsys, monkeypatch):
        broken = loc.StationarityResiduals(drift=1.0, mixed=0.0,
                                           uncertainty=0.0)
        monkeypatch.setattr(cli.loc, "stationarity_residuals",
                            lambda p, d: broken)
        rc = cli.main(["verify", "--out", str(tmp_path)])
        assert rc == 2
        with open(tmp_path / "verify.json") as f:
            report = json.load(f)
        assert report["passed"] is False
        assert report["checks"]["stationary_identities"]["passed"] is False
        assert "FAIL" in capsys.readouterr().out
