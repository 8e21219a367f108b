"""Completion with two structural priors: low rank and smoothness.

The same rank-3 block matrix is completed from 75% of its entries at
20 dB SNR, now with a three-part penalty: l1 of vertical differences, l1
of horizontal differences, and the nuclear norm, weighted (mu_a, mu_a,
mu_b). Four variants toggle the enhancement of the smoothness pair and of
the low-rankness term; enhancing both wins, and each partial enhancement
already helps. The block-diagonal B is designed by splitting the data
term in three equal parts.
"""

import os

import numpy as np

from ligme import ExperimentSpec, run_experiment

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

spec = ExperimentSpec("completion_tv", replications=3, iters=1000, seed=0)
result = run_experiment(spec)

base = result.reports["convex"].mse
print(f"{'variant':<18} {'(mu_a, mu_b)':<16} {'MSE':>10}  vs convex")
for name, report in result.reports.items():
    print(f"{name:<18} {str(report.mu):<16} {report.mse:>10.5f}  "
          f"{100 * report.mse / base:6.1f}%")

with open(os.path.join(OUT, "lowrank_smooth_mse.csv"), "w") as fh:
    fh.write("variant,mu_a,mu_b,mse\n")
    for name, report in result.reports.items():
        mu_a, mu_b = report.mu
        fh.write(f"{name},{mu_a!r},{mu_b!r},{report.mse!r}\n")
print("wrote", os.path.join(OUT, "lowrank_smooth_mse.csv"))
