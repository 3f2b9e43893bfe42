"""
Forster vs accurate preintegration
==================================

Holding world acceleration constant across a sample is a first-order
approximation; holding body-frame signals constant is exact under the same
sampling model. We sweep the sample period and compare both against a
dense reference integrator.
"""

import numpy as np

from pifeat.cli import compare_methods

w = np.array([[1.0, -2.0, 2.0]])   # |w| = 3 rad/s
a = np.array([[2.0, 0.5, 9.8]])

rows = compare_methods(w, a, [0.04, 0.02, 0.01, 0.005], horizon=0.2, substeps=10_000)
print(f"{'dt':>7} {'forster dp':>12} {'accurate dp':>12}")
for dt, fp, ap, fv, av in rows:
    print(f"{dt:7.3f} {fp:12.3e} {ap:12.3e}")

# Forster error halves with dt
fp = np.array([r[1] for r in rows])
print("halving ratios:", fp[:-1] / fp[1:])
