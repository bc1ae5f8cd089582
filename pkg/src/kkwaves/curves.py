"""Labeled polylines in parameter space shared by the curve-producing modules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CurveLabel:
    index: int
    kind: str  # "BT" | "GH" | "LPC" | "Cusp"


@dataclass
class BifurcationCurve:
    """An ordered polyline of parameter-space points with sparse markers.

    Each point is a dict with at least q_g and v_g; curve producers attach
    whatever auxiliary fields they track (v_c, omega0, ell1, period, ...).
    """

    kind: str  # "hopf" | "fold" | "cycle_family" | "gh"
    points: list[dict] = field(default_factory=list)
    labels: list[CurveLabel] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([pt[name] for pt in self.points], dtype=float)

    def labeled_points(self, kind: str) -> list[dict]:
        return [self.points[lab.index] for lab in self.labels if lab.kind == kind]

    def __len__(self) -> int:
        return len(self.points)
