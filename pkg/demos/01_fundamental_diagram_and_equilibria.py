"""Where traveling waves can anchor: the diagram and its critical points.

The wave-frame velocity profile v(z) has equilibria wherever the composed
fundamental diagram ve(v) = ve_r(q_g/(v+v_g)) meets the identity. Sliding
(q_g, v_g) bends the sigmoid through one, two (tangency) or three
intersections; the middle root of three is the focus/node every cycle and
wave in the later demos winds around.

Run:  python3 demos/01_fundamental_diagram_and_equilibria.py
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kkwaves.equilibria import cusp_point, find_equilibria
from kkwaves.model import ModelParams, ve_derivs, ve_of_r, ve_of_v

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# dimensionless diagram itself
r = np.linspace(0.0, 1.0, 400)
fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(11, 4.5))
ax0.plot(r, ve_of_r(r), "k")
ax0.set_xlabel("scaled density r")
ax0.set_ylabel("equilibrium speed ve(r)")
ax0.set_title("Kerner-Konhauser fundamental diagram")

# three regimes of ve(v) against the identity
K = cusp_point()
cases = {
    "tangent (cusp K)": ModelParams(q_g=K.q_g, v_g=K.v_g),
    "three roots": ModelParams(q_g=0.133886021, v_g=0.204071932),
    "one root": ModelParams(q_g=0.05, v_g=0.40),
}
v = np.linspace(0.0, 1.05, 500)
for label, p in cases.items():
    line, = ax1.plot(v, ve_of_v(p, v), label=f"{label}")
    for e in find_equilibria(p):
        slope = ve_derivs(p, e.v_c, 1)
        marker = "o" if slope > 1 else "s"
        ax1.plot(e.v_c, e.v_c, marker, color=line.get_color(), ms=7,
                 mfc="none" if slope > 1 else line.get_color())
        print(f"{label:18s} v_c={e.v_c:.6f}  ve'={slope:+.3f}  {e.kind.value}")
ax1.plot(v, v, "k--", lw=0.8)
ax1.set_xlabel("v")
ax1.set_ylabel("ve(v)")
ax1.legend(fontsize=8)
ax1.set_title("intersections with the identity\n(squares: saddles, circles: interior point)")
fig.tight_layout()
fig.savefig(OUT / "01_diagram_and_equilibria.png", dpi=130)
print(f"\nwrote {OUT / '01_diagram_and_equilibria.png'}")
