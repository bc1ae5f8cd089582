"""File contracts: CSV/JSON writers with deterministic, round-trippable output.

Every artifact carries the package version, a short hash of the effective
configuration and the variance convention in force, either as '#' header
lines (CSV) or under a "meta" key (JSON). Floats print with 17 significant
digits so values round-trip exactly; nothing here embeds timestamps, so
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .curves import BifurcationCurve
from .model import ModelParams
from .shooting import CycleStability, LimitCycle

FORMAT_VERSION = 1


def fmt(x) -> str:
    """17-significant-digit decimal form; exact float round trip."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=fmt)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def header_lines(meta: dict) -> list[str]:
    lines = [f"# kkwaves v{__version__} format={FORMAT_VERSION}"]
    for key in sorted(meta):
        lines.append(f"# {key}={meta[key]}")
    return lines


def write_csv(path: str | Path, columns: list[str], rows: list[dict],
              meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = header_lines(meta)
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join(fmt(row.get(col, "")) for col in columns))
    path.write_text("\n".join(out) + "\n")
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[dict], dict]:
    """Inverse of write_csv; numeric fields parse back to float."""
    meta: dict = {}
    columns: list[str] = []
    rows: list[dict] = []
    for line in Path(path).read_text().splitlines():
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, val = body.partition("=")
                meta[key.strip()] = val
            continue
        if not columns:
            columns = line.split(",")
            continue
        vals = line.split(",")
        row = {}
        for col, val in zip(columns, vals):
            try:
                row[col] = float(val)
            except ValueError:
                row[col] = val
        rows.append(row)
    return columns, rows, meta


def write_json(path: str | Path, payload: dict, meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"meta": {"version": __version__, "format": FORMAT_VERSION, **meta}}
    doc.update(payload)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=fmt) + "\n")
    return path


def curve_csv(path: str | Path, curve: BifurcationCurve, meta: dict) -> Path:
    """One row per point; the label column is empty except at markers."""
    columns = sorted({k for pt in curve.points for k in pt})
    lead = [c for c in ("q_g", "v_g") if c in columns]
    columns = lead + [c for c in columns if c not in lead] + ["label"]
    label_at = {lab.index: lab.kind for lab in curve.labels}
    rows = []
    for i, pt in enumerate(curve.points):
        row = dict(pt)
        row["label"] = label_at.get(i, "")
        rows.append(row)
    return write_csv(path, columns, rows, {**meta, "curve_kind": curve.kind})


def params_to_dict(p: ModelParams) -> dict:
    return {"lam": p.lam, "mu": p.mu, "theta0": p.theta0,
            "q_g": p.q_g, "v_g": p.v_g}


def cycle_to_json(path: str | Path, c: LimitCycle, meta: dict) -> Path:
    """The cycle-mesh contract consumed by the PDE side."""
    payload = {
        "params": params_to_dict(c.params),
        "period": c.period,
        "floquet_multiplier": c.floquet_multiplier,
        "stability": c.stability.value,
        "closure_residual": c.closure_residual,
        "mesh": [{"z": float(z), "v": float(v), "y": float(y)}
                 for z, v, y in zip(c.mesh_z, c.mesh_v, c.mesh_y)],
    }
    return write_json(path, payload, meta)


def cycle_from_json(path: str | Path) -> LimitCycle:
    doc = json.loads(Path(path).read_text())
    pd = doc["params"]
    p = ModelParams(lam=float(pd["lam"]), mu=float(pd["mu"]),
                    theta0=float(pd["theta0"]), q_g=float(pd["q_g"]),
                    v_g=float(pd["v_g"]))
    mesh = doc["mesh"]
    z = np.array([float(row["z"]) for row in mesh])
    v = np.array([float(row["v"]) for row in mesh])
    y = np.array([float(row["y"]) for row in mesh])
    nodes = np.column_stack([v[:-1:max(len(v) // 20, 1)],
                             y[:-1:max(len(y) // 20, 1)]])
    return LimitCycle(period=float(doc["period"]), params=p, nodes=nodes,
                      mesh_z=z, mesh_v=v, mesh_y=y,
                      floquet_multiplier=float(doc["floquet_multiplier"]),
                      stability=CycleStability(doc["stability"]),
                      closure_residual=float(doc["closure_residual"]))


def snapshot_csv(path: str | Path, state, meta: dict) -> Path:
    rows = [{"x": x, "rho": r, "V": v}
            for x, r, v in zip(state.x, state.rho, state.V)]
    return write_csv(path, ["x", "rho", "V"], rows,
                     {**meta, "t": fmt(state.t), "L": fmt(state.L)})
