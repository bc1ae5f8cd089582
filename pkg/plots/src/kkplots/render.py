"""Publication-style figures from kkwaves CSV/JSON artifacts.

This package never links against the analysis code: the documented file
formats are the whole interface. Figures are deterministic (fixed style,
Agg backend, no timestamps), so rerendering identical inputs produces
identical images.

Figure specs are JSON:

    {
      "kind": "diagram" | "phase_family" | "evolution",
      "inputs": {...role -> path or [paths]...},
      "output": "figure.png",
      "axis_ranges": {"x": [lo, hi], "y": [lo, hi]},   # optional
      "title": "..."                                    # optional
    }

diagram inputs: fold (CSV), gh (CSV), hopf (list of CSVs), cusp (JSON,
optional). phase_family inputs: cycles (list of cycle-mesh JSONs).
evolution inputs: snapshots (list of x,rho,V CSVs).
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

EXIT_SCHEMA_ERROR = 3

_STYLE = {
    "figure.figsize": (7.0, 5.2),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.25,
}

REQUIRED_COLUMNS = {
    "fold": {"q_g", "v_g", "v_c", "branch", "residual"},
    "gh": {"q_g", "v_g", "ell1_residual"},
    "hopf": {"q_g", "v_g", "label"},
    "snapshot": {"x", "rho", "V"},
}


class SchemaError(ValueError):
    """An input file does not conform to the documented format."""


@dataclass
class FigureSpec:
    kind: str
    inputs: dict
    output: str
    axis_ranges: dict = field(default_factory=dict)
    title: str | None = None

    @classmethod
    def from_json(cls, path: str | Path) -> "FigureSpec":
        doc = json.loads(Path(path).read_text())
        try:
            return cls(kind=doc["kind"], inputs=doc["inputs"],
                       output=doc["output"],
                       axis_ranges=doc.get("axis_ranges", {}),
                       title=doc.get("title"))
        except KeyError as exc:
            raise SchemaError(f"figure spec missing key {exc}") from None


@dataclass
class RenderResult:
    path: Path
    n_series: int


def read_curve_csv(path: str | Path, role: str) -> tuple[list[str], dict]:
    """Parse a '#'-headered CSV into column arrays, validating the schema."""
    lines = [l for l in Path(path).read_text().splitlines() if l]
    rows = [l for l in lines if not l.startswith("#")]
    if not rows:
        raise SchemaError(f"{path}: no column header")
    columns = rows[0].split(",")
    missing = REQUIRED_COLUMNS[role] - set(columns)
    if missing:
        raise SchemaError(f"{path}: missing columns {sorted(missing)}")
    data: dict = {c: [] for c in columns}
    for line in rows[1:]:
        vals = line.split(",")
        if len(vals) != len(columns):
            raise SchemaError(f"{path}: ragged row")
        for c, v in zip(columns, vals):
            data[c].append(v)
    out = {}
    for c in columns:
        try:
            out[c] = np.array([float(v) for v in data[c]])
        except ValueError:
            out[c] = np.array(data[c], dtype=object)
    return columns, out


def read_cycle_json(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text())
    for key in ("params", "period", "mesh"):
        if key not in doc:
            raise SchemaError(f"{path}: cycle JSON missing {key!r}")
    mesh = doc["mesh"]
    if mesh and set(mesh[0]) != {"z", "v", "y"}:
        raise SchemaError(f"{path}: mesh rows must have z, v, y")
    return doc


def _apply_ranges(ax, spec: FigureSpec):
    if "x" in spec.axis_ranges:
        ax.set_xlim(spec.axis_ranges["x"])
    if "y" in spec.axis_ranges:
        ax.set_ylim(spec.axis_ranges["y"])


def plot_diagram(spec: FigureSpec) -> RenderResult:
    """Parameter-plane diagram (fold/GH/Hopf) or phase-space cycle family."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        n_series = 0
        if spec.kind == "phase_family":
            for path in spec.inputs.get("cycles", []):
                doc = read_cycle_json(path)
                v = [row["v"] for row in doc["mesh"]]
                y = [row["y"] for row in doc["mesh"]]
                ax.plot(v, y, lw=0.9,
                        label=f"T={float(doc['period']):g}")
                n_series += 1
            ax.set_xlabel("v")
            ax.set_ylabel("y = dv/dz")
        else:
            if "fold" in spec.inputs:
                _, fold = read_curve_csv(spec.inputs["fold"], "fold")
                for branch, color in (("gamma_plus", "tab:blue"),
                                      ("gamma_minus", "tab:red")):
                    sel = fold["branch"] == branch
                    if np.any(sel):
                        ax.plot(fold["q_g"][sel], fold["v_g"][sel],
                                color=color, label=f"fold {branch}")
                        n_series += 1
            if "gh" in spec.inputs:
                _, gh = read_curve_csv(spec.inputs["gh"], "gh")
                if len(gh["q_g"]):
                    ax.plot(gh["q_g"], gh["v_g"], "k--", lw=1.1,
                            label="Bautin locus")
                    n_series += 1
            for path in spec.inputs.get("hopf", []):
                _, hopf = read_curve_csv(path, "hopf")
                if not len(hopf["q_g"]):
                    continue
                ax.plot(hopf["q_g"], hopf["v_g"], color="tab:green", lw=0.9)
                n_series += 1
                marks = hopf["label"] != ""
                for kind, style in (("GH", "k*"), ("BT", "ko")):
                    sel = hopf["label"] == kind
                    if np.any(sel):
                        ax.plot(hopf["q_g"][sel], hopf["v_g"][sel], style,
                                ms=8 if kind == "GH" else 4, mfc="none")
            if "cusp" in spec.inputs:
                doc = json.loads(Path(spec.inputs["cusp"]).read_text())
                if "q_g" not in doc or "v_g" not in doc:
                    raise SchemaError(f"{spec.inputs['cusp']}: not a cusp JSON")
                ax.plot(float(doc["q_g"]), float(doc["v_g"]), "kD", ms=7,
                        label="cusp K")
                n_series += 1
            ax.set_xlabel("q_g")
            ax.set_ylabel("v_g")
        if n_series:
            ax.legend(fontsize=7, loc="best")
        if spec.title:
            ax.set_title(spec.title)
        _apply_ranges(ax, spec)
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, metadata={"Software": None})
        plt.close(fig)
    return RenderResult(path=out, n_series=n_series)


def plot_evolution(spec: FigureSpec) -> RenderResult:
    """Speed and density profiles overlaid across snapshot times."""
    with plt.rc_context(_STYLE):
        fig, (ax_v, ax_r) = plt.subplots(2, 1, sharex=True,
                                         figsize=(7.0, 6.4))
        n_series = 0
        for path in spec.inputs.get("snapshots", []):
            _, snap = read_curve_csv(path, "snapshot")
            meta_t = None
            for line in Path(path).read_text().splitlines():
                if line.startswith("# t="):
                    meta_t = float(line[4:])
                    break
            if not len(snap["x"]):
                continue
            label = f"t = {meta_t * 60:.0f} min" if meta_t is not None else None
            ax_v.plot(snap["x"], snap["V"], lw=0.9, label=label)
            ax_r.plot(snap["x"], snap["rho"], lw=0.9)
            n_series += 1
        ax_v.set_ylabel("V (km/h)")
        ax_r.set_ylabel("rho (veh/km)")
        ax_r.set_xlabel("x (km)")
        if n_series:
            ax_v.legend(fontsize=7, loc="best")
        if spec.title:
            ax_v.set_title(spec.title)
        _apply_ranges(ax_v, spec)
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, metadata={"Software": None})
        plt.close(fig)
    return RenderResult(path=out, n_series=n_series)


def render(spec: FigureSpec) -> RenderResult:
    if spec.kind in ("diagram", "phase_family"):
        return plot_diagram(spec)
    if spec.kind == "evolution":
        return plot_evolution(spec)
    raise SchemaError(f"unknown figure kind {spec.kind!r}")


def pixel_hash(path: str | Path) -> str:
    """SHA-256 of the decoded RGBA pixels (ignores container metadata)."""
    import hashlib

    from PIL import Image

    with Image.open(path) as im:
        data = im.convert("RGBA").tobytes()
    return hashlib.sha256(data).hexdigest()


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2 or argv[0] != "render":
        print("usage: kkplots render <figure_spec.json>", file=sys.stderr)
        return 2
    try:
        spec = FigureSpec.from_json(argv[1])
        result = render(spec)
    except (SchemaError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA_ERROR
    print(f"wrote {result.path} ({result.n_series} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
