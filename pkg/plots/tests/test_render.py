"""Pixel-hash regressions on checked-in fixtures, schema errors, determinism."""

import json
import shutil
from pathlib import Path

import pytest

from kkplots.render import (
    EXIT_SCHEMA_ERROR,
    FigureSpec,
    SchemaError,
    main,
    pixel_hash,
    plot_diagram,
    plot_evolution,
    read_curve_csv,
    render,
)

FIXTURES = Path(__file__).parent / "fixtures"
HASHES = json.loads((FIXTURES / "hashes.json").read_text())


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """Fixture CSVs/JSONs copied beside the spec files, cwd moved there."""
    for f in FIXTURES.iterdir():
        shutil.copy(f, tmp_path / f.name)
    monkeypatch.chdir(tmp_path)
    return tmp_path


class TestPixelRegression:
    @pytest.mark.parametrize("name", ["diagram", "phase_family", "evolution"])
    def test_hash_matches_reference(self, workdir, name):
        rc = main(["render", f"spec_{name}.json"])
        assert rc == 0
        got = pixel_hash(workdir / f"{name}.png")
        assert got == HASHES[name]["sha256_rgba"]

    @pytest.mark.parametrize("name", ["diagram", "phase_family", "evolution"])
    def test_series_counts(self, workdir, name):
        spec = FigureSpec.from_json(workdir / f"spec_{name}.json")
        res = render(spec)
        assert res.n_series == HASHES[name]["n_series"]

    def test_evolution_overlay_matches_snapshot_count(self, workdir):
        spec = FigureSpec.from_json(workdir / "spec_evolution.json")
        assert render(spec).n_series == len(spec.inputs["snapshots"])

    def test_rerender_is_byte_identical(self, workdir):
        spec = FigureSpec.from_json(workdir / "spec_diagram.json")
        render(spec)
        first = (workdir / "diagram.png").read_bytes()
        render(spec)
        assert (workdir / "diagram.png").read_bytes() == first


class TestDegenerateInputs:
    def test_empty_curve_renders_empty_axes(self, workdir):
        spec = FigureSpec(kind="diagram",
                          inputs={"gh": "empty_curve.csv"},
                          output="empty.png")
        res = plot_diagram(spec)
        assert res.n_series == 0
        assert res.path.exists()

    def test_empty_via_cli_exit_zero(self, workdir):
        (workdir / "spec_empty.json").write_text(json.dumps({
            "kind": "diagram", "inputs": {"gh": "empty_curve.csv"},
            "output": "empty.png"}))
        assert main(["render", "spec_empty.json"]) == 0


class TestSchemaViolations:
    def test_wrong_columns_raise(self, workdir):
        with pytest.raises(SchemaError):
            read_curve_csv("bad_schema.csv", "fold")

    def test_wrong_columns_exit_nonzero(self, workdir):
        (workdir / "spec_bad.json").write_text(json.dumps({
            "kind": "diagram", "inputs": {"fold": "bad_schema.csv"},
            "output": "bad.png"}))
        assert main(["render", "spec_bad.json"]) == EXIT_SCHEMA_ERROR

    def test_missing_input_file(self, workdir):
        (workdir / "spec_missing.json").write_text(json.dumps({
            "kind": "evolution", "inputs": {"snapshots": ["nope.csv"]},
            "output": "x.png"}))
        assert main(["render", "spec_missing.json"]) != 0

    def test_spec_missing_keys(self, workdir):
        (workdir / "spec_broken.json").write_text(json.dumps({"kind": "diagram"}))
        assert main(["render", "spec_broken.json"]) == EXIT_SCHEMA_ERROR

    def test_unknown_kind(self, workdir):
        (workdir / "spec_kind.json").write_text(json.dumps({
            "kind": "pie", "inputs": {}, "output": "x.png"}))
        assert main(["render", "spec_kind.json"]) == EXIT_SCHEMA_ERROR

    def test_cycle_json_missing_mesh(self, workdir, tmp_path):
        bad = tmp_path / "badcycle.json"
        bad.write_text(json.dumps({"params": {}, "period": 1.0}))
        spec = FigureSpec(kind="phase_family",
                          inputs={"cycles": [str(bad)]}, output="x.png")
        with pytest.raises(SchemaError):
            plot_diagram(spec)

    def test_usage_error(self):
        assert main(["paint", "x.json"]) == 2


class TestEvolutionDetails:
    def test_snapshot_time_in_legend_labels(self, workdir):
        # times come from the '# t=' header of each snapshot file
        spec = FigureSpec.from_json(workdir / "spec_evolution.json")
        res = plot_evolution(spec)
        assert res.n_series == 3
