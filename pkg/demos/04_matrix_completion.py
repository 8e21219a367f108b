"""Low-rank matrix completion: nuclear norm versus its enhancement.

A rank-3 16x16 matrix loses 64 of its 256 entries; the rest are observed
at 30 dB SNR. The nuclear-norm penalty shrinks every singular value and
leaves a tail of spurious small ones; the enhanced penalty (designed at
theta = 0.99 through the identity completion) recovers the numerical rank
exactly.
"""

import os

import numpy as np

from ligme import ExperimentSpec, run_experiment

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

spec = ExperimentSpec("completion", replications=5, seed=0)
result = run_experiment(spec)

truth_s = np.linalg.svd(result.x_true.reshape(result.mat_shape, order="F"),
                        compute_uv=False)

print("singular values (first six) and numerical rank at threshold 1e-8:")
print(f"  {'original':<14}", np.array2string(truth_s[:6], precision=4),
      f" num-rank {int(np.sum(truth_s > 1e-8))}")
for name, report in result.reports.items():
    print(f"  {name:<14}", np.array2string(report.singular_values[:6], precision=4),
          f" num-rank {report.num_rank}")
print()
for name, report in result.reports.items():
    frac = float(np.mean(report.num_ranks == 3))
    print(f"{name}: MSE = {report.mse:.5f}; exact rank recovered in "
          f"{100 * frac:.0f}% of replications")

with open(os.path.join(OUT, "completion_singvals.csv"), "w") as fh:
    fh.write("which," + ",".join(f"sigma_{i+1}" for i in range(truth_s.size)) + "\n")
    fh.write("original," + ",".join(repr(float(s)) for s in truth_s) + "\n")
    for name, report in result.reports.items():
        fh.write(name + "," + ",".join(repr(float(s)) for s in report.singular_values) + "\n")
print("wrote", os.path.join(OUT, "completion_singvals.csv"))
