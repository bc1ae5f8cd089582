"""Subcommand behavior, file schemas, exit codes and determinism."""

import json

import pytest

from kkwaves.cli import DEFAULTS, load_config, main
from kkwaves.io import read_csv

from conftest import CUSP_REF, FAMILY_B


def run_cli(*argv):
    return main(list(argv))


class TestConfig:
    def test_defaults_complete(self):
        cfg = load_config(None)
        assert cfg == {**DEFAULTS}

    def test_file_and_override(self, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"pde.n_points": 256}))
        cfg = load_config(str(cfgfile), {"output.dir": str(tmp_path)})
        assert cfg["pde.n_points"] == 256
        assert cfg["output.dir"] == str(tmp_path)

    def test_unknown_key_rejected(self, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text(json.dumps({"nope.key": 1}))
        with pytest.raises(ValueError):
            load_config(str(cfgfile))

    def test_env_var_overrides_output_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("KKWAVES_OUTPUT_ROOT", str(tmp_path / "envroot"))
        cfg = load_config(None)
        assert cfg["output.dir"] == str(tmp_path / "envroot")


class TestEquilibriaCommand:
    def test_cusp_parameters_single_row(self, capsys):
        K_q, K_vg = 0.31676238087955233, 0.7529375784557453
        rc = run_cli("equilibria", "--q-g", repr(K_q), "--v-g", repr(K_vg))
        out = capsys.readouterr().out
        assert rc == 0
        data = [l for l in out.splitlines()
                if l and not l.startswith("#") and not l.startswith("v_c")]
        assert len(data) == 1
        v_c = float(data[0].split(",")[0])
        assert v_c == pytest.approx(CUSP_REF["v_c"], abs=2e-4)

    def test_three_root_rows(self, capsys):
        rc = run_cli("equilibria", "--q-g", str(FAMILY_B["q_g"]), "--v-g", "0.19")
        out = capsys.readouterr().out
        assert rc == 0
        data = [l for l in out.splitlines()
                if l and not l.startswith("#") and not l.startswith("v_c")]
        assert len(data) == 3
        kinds = [l.split(",")[1] for l in data]
        assert kinds[0] == "saddle" and kinds[2] == "saddle"
        assert "focus" in kinds[1]

    def test_domain_error_exit_code(self, capsys):
        rc = run_cli("equilibria", "--q-g", "0.1", "--v-g", "-2.0")
        assert rc == 2
        assert "error" in capsys.readouterr().err


class TestCuspCommand:
    def test_values_and_dbt(self, tmp_path, capsys):
        rc = run_cli("--output-dir", str(tmp_path), "cusp")
        assert rc == 0
        doc = json.loads((tmp_path / "cusp.json").read_text())
        assert doc["q_g"] == pytest.approx(CUSP_REF["q_g"], rel=1e-6)
        assert doc["theta_BT"] == pytest.approx(CUSP_REF["theta"], rel=1e-6)
        assert doc["dbt"]["saddle_case"] is True
        assert float(doc["residuals"]["cusp"]) < 1e-10
        assert doc["meta"]["config_hash"]


class TestCurveCommands:
    def test_fold_schema(self, tmp_path):
        rc = run_cli("--output-dir", str(tmp_path), "fold")
        assert rc == 0
        cols, rows, meta = read_csv(tmp_path / "fold_curve.csv")
        assert cols == ["q_g", "v_g", "v_c", "branch", "residual"]
        assert {r["branch"] for r in rows} == {"gamma_plus", "gamma_minus"}
        assert max(r["residual"] for r in rows) < 1e-10
        assert "theta0_policy" in meta

    def test_gh_curve_schema_and_determinism(self, tmp_path):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        assert run_cli("--output-dir", str(out1), "gh-curve") == 0
        assert run_cli("--output-dir", str(out2), "gh-curve") == 0
        b1 = (out1 / "gh_curve.csv").read_bytes()
        b2 = (out2 / "gh_curve.csv").read_bytes()
        assert b1 == b2
        cols, rows, _ = read_csv(out1 / "gh_curve.csv")
        assert cols == ["q_g", "v_g", "ell1_residual"]
        assert max(abs(r["ell1_residual"]) for r in rows) < 1e-10

    def test_hopf_continue_labels(self, tmp_path):
        rc = run_cli("--output-dir", str(tmp_path), "hopf-continue",
                     "--theta0", "0.16")
        assert rc == 0
        cols, rows, _ = read_csv(tmp_path / "hopf_curve_theta0.16.csv")
        labels = [r["label"] for r in rows if r["label"]]
        assert labels == ["BT", "GH", "BT"]
        assert rows[0]["label"] == "BT" and rows[-1]["label"] == "BT"


@pytest.fixture(scope="module")
def cycle_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("cycles")
    period = 262.6123026867913
    rc = run_cli("--output-dir", str(out), "cycles",
                 "--q-g", str(FAMILY_B["q_g"]), "--period", str(period),
                 "--n-steps", "40", "--export-cycles", "1")
    assert rc == 0
    return out, period


class TestCyclesAndPde:
    def test_cycle_family_csv(self, cycle_run):
        out, period = cycle_run
        cols, rows, meta = read_csv(out / f"cycle_family_T{period:g}.csv")
        assert "period" in cols and "multiplier" in cols
        assert all(abs(r["period"] - period) < 1e-6 * period for r in rows)
        assert "resonance_convention" in meta

    def test_cycle_mesh_contract(self, cycle_run):
        out, period = cycle_run
        doc = json.loads(next(out.glob("cycle_T*_000.json")).read_text())
        assert set(doc["params"]) == {"lam", "mu", "theta0", "q_g", "v_g"}
        assert doc["period"] == pytest.approx(period, rel=1e-12)
        row = doc["mesh"][0]
        assert set(row) == {"z", "v", "y"}
        zs = [r["z"] for r in doc["mesh"]]
        assert zs[0] == 0.0 and zs[-1] == pytest.approx(period, rel=1e-12)

    def test_pde_command(self, cycle_run, tmp_path):
        out, period = cycle_run
        mesh = next(out.glob("cycle_T*_000.json"))
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"pde.n_points": 256,
                                   "pde.t_end_min": 4.0}))
        rc = run_cli("--config", str(cfg), "--output-dir", str(tmp_path),
                     "pde", "--cycle-json", str(mesh), "--m", "1")
        assert rc == 0
        rep = json.loads((tmp_path / "wave_report.json").read_text())
        assert rep["verdict"] in ("traveling_wave", "evolved_to_other_wave",
                                  "dispersed")
        assert rep["road_length_km"] == pytest.approx(period / 140.0, rel=1e-9)
        snaps = sorted(tmp_path.glob("pde_t*min.csv"))
        assert snaps
        cols, rows, meta = read_csv(snaps[0])
        assert cols == ["x", "rho", "V"]
        assert len(rows) == 256
        assert "t" in meta


class TestDiagramCommand:
    def test_manifest_and_cross_checks(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"fold.n_points": 40, "gh.n_points": 20,
                                   "diagram.n_hopf_curves": 2}))
        rc = run_cli("--config", str(cfg), "--output-dir", str(tmp_path),
                     "diagram")
        assert rc == 0
        man = json.loads((tmp_path / "manifest.json").read_text())
        kinds = {a["kind"] for a in man["artifacts"]}
        assert {"cusp", "fold", "gh", "hopf"} <= kinds
        cusp_art = [a for a in man["artifacts"] if a["kind"] == "cusp"][0]
        assert float(cusp_art["max_residual"]) < 1e-10
        for a in man["artifacts"]:
            assert (tmp_path / a["path"]).exists()
        # GH markers sit on the l1=0 curve
        for mk in man["gh_markers"]:
            assert abs(float(mk["q_g"]) - mk["q_g"]) == 0
            assert abs(mk["v_g"] - mk["gh_curve_v_g"]) < 1e-4
        # byte-identical rerun of one artifact
        fold_bytes = (tmp_path / "fold_curve.csv").read_bytes()
        out2 = tmp_path / "again"
        assert run_cli("--config", str(cfg), "--output-dir", str(out2),
                       "diagram") == 0
        assert (out2 / "fold_curve.csv").read_bytes() == fold_bytes
