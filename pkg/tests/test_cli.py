import csv
import json

import pytest
import yaml

from mvlab.cli import main, run, validate


def base_config(**overrides):
    cfg = {
        "model": {"name": "ou_perturbation", "params": {"dim": 2, "eps": 0.0}},
        "scheme": {"kind": "euler_maruyama", "dt": 0.01},
        "ensemble": {"seed": 42, "N": 64, "T": 1.0, "T_burn": 1.0,
                     "T_sample": 1.0},
    }
    cfg.update(overrides)
    return cfg


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestValidate:
    def test_missing_seed(self):
        cfg = base_config()
        del cfg["ensemble"]["seed"]
        bad = validate(cfg, "invariant")
        assert any(p == "ensemble.seed" and "required" in r for p, r in bad)

    def test_dt_must_divide_delay(self):
        cfg = base_config()
        cfg["model"] = {"name": "spectral_delay",
                        "params": {"modes": 2, "alpha": 1.0, "d": 1,
                                   "diameter": 3.14159, "a1": 0.1,
                                   "theta_weights": [1.0, 0.0, 0.0],
                                   "r0": 0.5}}
        cfg["scheme"]["dt"] = 0.03
        bad = validate(cfg, "simulate")
        assert any(p == "scheme.dt" and "0.03" in r and "0.5" in r
                   for p, r in bad)

    def test_unknown_model_lists_available(self):
        cfg = base_config()
        cfg["model"]["name"] = "nosuch"
        bad = validate(cfg, "invariant")
        assert any(p == "model.name" and "ou_perturbation" in r for p, r in bad)

    def test_clean_config_passes(self):
        assert validate(base_config(), "invariant") == []

    def test_schema_violation_exit_code(self, tmp_path):
        cfg = base_config()
        del cfg["ensemble"]["seed"]
        assert run(cfg, "invariant", out_dir=tmp_path) == 3


class TestCheckCommand:
    def test_hamiltonian_report(self, tmp_path):
        cfg = {
            "model": {"name": "hamiltonian",
                      "params": {"m": 1, "lam": 2.0, "a1": 1.0, "a2": 0.5,
                                 "a3": 0.2}},
            "scheme": {"kind": "euler_maruyama", "dt": 0.01},
            "ensemble": {"seed": 1, "N": 4},
        }
        code = run(cfg, "check", out_dir=tmp_path, figures=False)
        assert code == 0
        rows = read_csv(tmp_path / "report.csv")
        assert rows[0] == ["name", "lhs", "rhs", "verdict", "optimizer"]
        by_name = {r[0]: r for r in rows[1:]}
        rep = by_name["hamiltonian_condition"]
        assert float(rep[1]) == 8.0
        assert rep[3] == "True"

    def test_false_verdict_exits_two(self, tmp_path):
        cfg = {
            "ensemble": {"seed": 1},
            "scheme": {"kind": "euler_maruyama", "dt": 0.01},
            "model": {"name": "hamiltonian",
                      "params": {"m": 1, "lam": 0.1, "a1": 2.0, "a2": 2.0,
                                 "a3": 1.0}},
        }
        assert run(cfg, "check", out_dir=tmp_path, figures=False) == 2

    def test_extra_checks(self, tmp_path):
        cfg = {
            "ensemble": {"seed": 1},
            "scheme": {"kind": "euler_maruyama", "dt": 0.01},
            "model": None,
            "experiment_params": {"checks": [
                {"name": "spectral_summability",
                 "params": {"gamma": 0.4, "power": 2.0}},
            ]},
        }
        cfg.pop("model")
        code = run(cfg, "check", out_dir=tmp_path, figures=False)
        assert code == 3  # check needs a model section per the schema

    def test_report_json_has_warnings(self, tmp_path):
        cfg = {
            "ensemble": {"seed": 1},
            "scheme": {"kind": "euler_maruyama", "dt": 0.25},
            "model": {"name": "degenerate_pair",
                      "params": {"modes": 1, "a1": 0.5, "a2": 0.2, "a3": 0.0,
                                 "r0": 0.25}},
        }
        code = run(cfg, "check", out_dir=tmp_path, figures=False)
        assert code == 2  # the floored infimum condition fails as written
        payload = json.loads((tmp_path / "report.json").read_text())
        pair = [r for r in payload
                if r["name"] == "degenerate_pair_condition"][0]
        assert pair["warnings"]


class TestPipelines:
    def test_contraction_outputs(self, tmp_path):
        cfg = base_config()
        cfg["ensemble"].update(N=64, T=2.0)
        cfg["experiment_params"] = {
            "init_a": {"kind": "dirac", "point": [0.0, 0.0]},
            "init_b": {"kind": "gaussian", "mean": [4.0, 4.0], "std": 1.0},
            "fit_window": [0.5, 2.0],
        }
        assert run(cfg, "contraction", out_dir=tmp_path, figures=False) == 0
        dist = read_csv(tmp_path / "law_distances.csv")
        assert dist[0] == ["t", "value"]
        fit = read_csv(tmp_path / "rate_fit.csv")
        assert fit[0][:3] == ["rate", "intercept", "r_squared"]
        assert float(fit[1][0]) > 0.2  # laws do contract

    def test_simulate_trajectory_schema(self, tmp_path):
        cfg = base_config()
        assert run(cfg, "simulate", out_dir=tmp_path, figures=False) == 0
        rows = read_csv(tmp_path / "trajectory.csv")
        assert rows[0] == ["t", "x_1", "x_2"]

    def test_picard_outputs(self, tmp_path):
        cfg = base_config()
        cfg["model"]["params"]["eps"] = 0.05
        cfg["experiment_params"] = {"n_iter": 3}
        assert run(cfg, "picard", out_dir=tmp_path, figures=False) == 0
        rows = read_csv(tmp_path / "picard_ratios.csv")
        assert rows[0] == ["n", "ratio"]
        assert len(rows) == 3

    def test_compare_outputs(self, tmp_path):
        cfg = base_config()
        cfg["ensemble"].update(N=32, T=2.0, T_burn=1.0, T_sample=1.0,
                               init={"kind": "gaussian", "mean": [3.0, 3.0]})
        cfg["experiment_params"] = {"n_report": 4, "snapshot_dt": 0.25,
                                    "n_checkpoints": 4, "invariant_N": 32}
        assert run(cfg, "compare", out_dir=tmp_path, figures=False) == 0
        rows = read_csv(tmp_path / "comparison_checkpoints.csv")
        assert rows[0] == ["t", "rho", "integral", "bound"]
        for r in rows[1:]:
            assert float(r[1]) <= float(r[3]) + 1e-10

    def test_dvrate_grid(self, tmp_path):
        cfg = {"ensemble": {"seed": 0},
               "scheme": {"kind": "euler_maruyama", "dt": 0.01},
               "experiment_params": {"lambda_ref": 1.0, "sigma_ref": 1.4142135623730951,
                                     "m_values": [0.0, 1.0], "v_values": [1.0, 2.0]}}
        assert run(cfg, "dvrate", out_dir=tmp_path, figures=False) == 0
        rows = read_csv(tmp_path / "dvrate.csv")
        assert rows[0] == ["m", "v", "value"]
        vals = {(float(r[0]), float(r[1])): float(r[2]) for r in rows[1:]}
        assert vals[(1.0, 1.0)] == pytest.approx(0.25)

    def test_hitting_outputs(self, tmp_path):
        cfg = base_config()
        cfg["ensemble"].update(N=16, T_burn=1.0, T_sample=1.0)
        cfg["experiment_params"] = {"k_radius": 2.0, "lambda_exp": 0.1,
                                    "n_samples": 16, "t_cap": 5.0,
                                    "starts": [[0.1, 0.1]], "invariant_N": 16}
        assert run(cfg, "hitting", out_dir=tmp_path, figures=False) == 0
        rows = read_csv(tmp_path / "hitting.csv")
        assert rows[0][0] == "estimate"
        assert float(rows[1][0]) == 1.0


class TestFigures:
    def test_check_renders_png(self, tmp_path):
        cfg = {
            "model": {"name": "hamiltonian",
                      "params": {"m": 1, "lam": 2.0, "a1": 0.5}},
            "scheme": {"kind": "euler_maruyama", "dt": 0.01},
            "ensemble": {"seed": 3, "N": 4},
            "experiment_params": {"n_probes": 100},
        }
        assert run(cfg, "check", out_dir=tmp_path) == 0
        assert (tmp_path / "checks.png").stat().st_size > 0

    def test_contraction_renders_png(self, tmp_path):
        cfg = base_config()
        cfg["ensemble"].update(N=24, T=1.0)
        cfg["experiment_params"] = {"fit_window": [0.2, 1.0],
                                    "init_b": {"kind": "gaussian",
                                               "mean": [3.0, 3.0]}}
        assert run(cfg, "contraction", out_dir=tmp_path) == 0
        assert (tmp_path / "contraction.png").stat().st_size > 0


class TestDeterminism:
    def _cfg(self):
        cfg = base_config()
        cfg["ensemble"].update(N=48, T_burn=0.5, T_sample=0.5)
        return cfg

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(self._cfg(), "invariant", out_dir=a, figures=False) == 0
        assert run(self._cfg(), "invariant", out_dir=b, figures=False) == 0
        for name in ("invariant_atoms.csv", "invariant_summary.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_thread_count_does_not_change_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(self._cfg(), "invariant", out_dir=a, figures=False, threads=1)
        run(self._cfg(), "invariant", out_dir=b, figures=False, threads=8)
        assert ((a / "invariant_atoms.csv").read_bytes()
                == (b / "invariant_atoms.csv").read_bytes())

    def test_manifest_written(self, tmp_path):
        run(self._cfg(), "invariant", out_dir=tmp_path, figures=False)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["seed"] == 42
        assert "config_sha256" in manifest and "model_hash" in manifest


class TestMainEntry:
    def test_main_round_trip(self, tmp_path):
        cfg = base_config()
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text(yaml.safe_dump(cfg))
        code = main(["invariant", "--config", str(cfg_path),
                     "--out", str(tmp_path / "out"), "--no-figures",
                     "--seed", "99"])
        assert code == 0
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["seed"] == 99

    def test_main_bad_config_exit_three(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text("- not\n- a\n- mapping\n")
        assert main(["invariant", "--config", str(cfg_path)]) == 3
