"""The organizing landscape in the (q_g, v_g) parameter plane.

The fold curve gamma bounds the cusp region; its two branches meet at the
cusp K, a degenerate Takens-Bogdanov point of saddle type. Fixed-variance
Hopf curves run between BT points on the lower and upper branch, each
carrying one Bautin (GH) point. The GH points line up exactly on the
closed-form curve where the first Lyapunov coefficient vanishes: stable
cycles above, unstable below.

Run:  python3 demos/02_bifurcation_landscape.py
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kkwaves.continuation import continue_hopf
from kkwaves.equilibria import FoldBranch, cusp_point, fold_curve
from kkwaves.normalforms import bt_points_at_theta0, dbt_coefficients, gh_curve

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

K = cusp_point()
dbt = dbt_coefficients(K)
print(f"cusp K: q_g={K.q_g:.9f} v_g={K.v_g:.9f} theta_BT={K.theta_BT:.9f}")
print(f"degenerate-TB verdict: a3={dbt.a3:.6e} b2={dbt.b2:.6e} "
      f"saddle case: {dbt.saddle_case}")

fig, ax = plt.subplots(figsize=(7, 5.5))
pts = fold_curve(q_g_range=(0.02, K.q_g), n_points=300)
for branch, color, label in ((FoldBranch.UPPER_GAMMA_PLUS, "tab:blue", "fold gamma+"),
                             (FoldBranch.LOWER_GAMMA_MINUS, "tab:red", "fold gamma-")):
    sel = [p for p in pts if p.branch is branch]
    ax.plot([p.q_g for p in sel], [p.v_g for p in sel], color=color, label=label)

gh = gh_curve(q_g_range=(0.02, K.q_g), n_points=150)
ax.plot(gh.column("q_g"), gh.column("v_g"), "k--", lw=1.2,
        label="Bautin locus l1=0")

for theta0 in (0.1, 0.16, 0.25, 0.36):
    bts = bt_points_at_theta0(theta0)
    curve = continue_hopf(bts[0], theta0=theta0)
    ax.plot(curve.column("q_g"), curve.column("v_g"), lw=0.9, color="tab:green")
    for gh_pt in curve.labeled_points("GH"):
        ax.plot(gh_pt["q_g"], gh_pt["v_g"], "k*", ms=10)
    for bt_pt in curve.labeled_points("BT"):
        ax.plot(bt_pt["q_g"], bt_pt["v_g"], "ko", ms=4, mfc="none")
    print(f"theta0={theta0:.2f}: Hopf curve {curve.points[0]['q_g']:.4f} -> "
          f"{curve.points[-1]['q_g']:.4f}, GH at "
          f"q_g={curve.labeled_points('GH')[0]['q_g']:.6f}")

ax.plot(K.q_g, K.v_g, "kD", ms=7, label="cusp K (DBT, saddle case)")
ax.set_xlabel("q_g")
ax.set_ylabel("v_g")
ax.set_title("fold branches, Hopf curves (green) with BT/GH markers,\n"
             "and the Bautin locus; stable cycles bifurcate above the dashes")
ax.legend(fontsize=8, loc="lower right")
fig.tight_layout()
fig.savefig(OUT / "02_bifurcation_landscape.png", dpi=130)
print(f"\nwrote {OUT / '02_bifurcation_landscape.png'}")
