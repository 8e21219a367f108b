"""Shapes of the enhanced penalty: from l1 to a hard count.

The enhanced scalar penalty with B = 1/sqrt(gamma), weighted by 2/gamma,
equals the classic minimax-concave curve: quadratic-corrected |x| inside
[-gamma, gamma], constant 1 outside. As gamma shrinks it approaches the
0-1 indicator of "x is nonzero", while B = 0 keeps plain |x|. The same
bridge carries over to vectors (l1 -> support count) and to matrices
(nuclear norm -> rank).

Writes penalty_shapes.csv (x, then one column per gamma) and, if
matplotlib is importable, penalty_shapes.png.
"""

import os

import numpy as np

from ligme import DenseOperator, L1Norm, gme_value

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

gammas = [1.0, 0.5, 0.1]
xs = np.linspace(-2.0, 2.0, 201)
penalty = L1Norm(1)

columns = {}
for gamma in gammas:
    b = DenseOperator([[1.0 / np.sqrt(gamma)]])
    # weight 2/gamma normalizes the saturation value to 1
    columns[gamma] = [(2.0 / gamma) * gme_value(penalty, b, np.array([x])) for x in xs]

closed_form = np.where(np.abs(xs) >= 1.0, 1.0, 2.0 * np.abs(xs) - xs ** 2)
worst = np.max(np.abs(np.array(columns[1.0]) - closed_form))
print(f"gamma=1 matches the closed-form minimax-concave curve within {worst:.2e}")
print("value at x=0.05 as gamma shrinks (should approach 1):",
      ["%.4f" % columns[g][np.searchsorted(xs, 0.05)] for g in gammas])

csv_path = os.path.join(OUT, "penalty_shapes.csv")
with open(csv_path, "w") as fh:
    fh.write("x," + ",".join(f"gamma_{g}" for g in gammas) + "\n")
    for i, x in enumerate(xs):
        fh.write(",".join(repr(float(v)) for v in [x] + [columns[g][i] for g in gammas]) + "\n")
print("wrote", csv_path)

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for g in gammas:
        ax.plot(xs, columns[g], label=f"gamma = {g}")
    ax.plot(xs, np.abs(xs), "k:", label="|x| (no enhancement)")
    ax.set_xlabel("x")
    ax.set_ylabel("scaled enhanced penalty")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(OUT, "penalty_shapes.png"), dpi=120)
    print("wrote", os.path.join(OUT, "penalty_shapes.png"))
except ImportError:
    print("matplotlib not available; skipped the plot")
