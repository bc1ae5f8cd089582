"""Families of periodic orbits at fixed period.

Holding the period fixed while letting (q_g, v_g) move traces a family of
cycles anchored at the Hopf point whose linear frequency matches. Family A
(period 1469.90) lives next to a Takens-Bogdanov point and hugs the saddle
almost immediately; family B (period ~262.6) is a plump short-period
orbit. Longer-period families pile up on the homoclinic curve.

Run:  python3 demos/03_limit_cycle_families.py
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kkwaves.continuation import fixed_period_family, resonant_road_length

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

fig, axes = plt.subplots(1, 3, figsize=(14, 4.6))

# family A: long period, anchored at the published Hopf point
fam_a = fixed_period_family(0.164212226, 0.16, 1469.90, n_steps=60,
                            step=5e-4, max_step=4e-3)
for c in fam_a.cycles[::8] + [fam_a.cycles[-1]]:
    axes[0].plot(c.mesh_v, c.mesh_y, lw=0.8)
axes[0].set_title("family A cycles (T = 1469.90)")
ca = fam_a.cycles[-1]
print(f"family A: {len(fam_a.cycles)} cycles, last at q_g={ca.params.q_g:.6f} "
      f"v_g={ca.params.v_g:.6f}, multiplier={ca.floquet_multiplier:.4f}")
print(f"  one-bump road length m=1: {resonant_road_length(ca, 1):.8f} km")
print(f"  two-bump road length m=2: {resonant_road_length(ca, 2):.8f} km")

# family B: short period
fam_b = fixed_period_family(0.133886021, 0.16, 262.6123026867913, n_steps=80,
                            step=5e-4, max_step=4e-3)
for c in fam_b.cycles[::10] + [fam_b.cycles[-1]]:
    axes[1].plot(c.mesh_v, c.mesh_y, lw=0.8)
axes[1].set_title("family B cycles (T = 262.61)")
cb = fam_b.cycles[-1]
print(f"family B: last amplitude {cb.amplitude:.4f}, "
      f"multiplier={cb.floquet_multiplier:.4f}, "
      f"minimal road {resonant_road_length(cb, 1):.8f} km")

# nested fixed-period families in parameter space accumulate on the
# homoclinic side as the period grows
for T, color in ((300.0, "tab:blue"), (600.0, "tab:orange"),
                 (1200.0, "tab:green")):
    fam = fixed_period_family(0.162, 0.16, T, n_steps=140, step=1e-3,
                              max_step=8e-3)
    axes[2].plot(fam.column("q_g"), fam.column("v_g"), color=color,
                 label=f"T = {T:g}")
axes[2].set_title("fixed-period families in (q_g, v_g)")
axes[2].set_xlabel("q_g")
axes[2].set_ylabel("v_g")
axes[2].legend(fontsize=8)
for ax in axes[:2]:
    ax.set_xlabel("v")
    ax.set_ylabel("y = dv/dz")
fig.tight_layout()
fig.savefig(OUT / "03_limit_cycle_families.png", dpi=130)
print(f"\nwrote {OUT / '03_limit_cycle_families.png'}")
