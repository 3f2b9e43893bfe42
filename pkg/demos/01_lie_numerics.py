"""
Rotation numerics: exp, log and the two correctives
====================================================

Gamma and Lambda are the series sum (theta^)^n/(n+1)! and sum (theta^)^n/(n+2)!.
Here we compare the closed forms with brute-force quadrature and look at the
small-angle switch.
"""

import numpy as np

from pifeat.lie import gamma, lam, so3_exp, so3_log
from pifeat.oracle import quadrature_gamma, quadrature_lambda

rng = np.random.default_rng(0)

# %%
# exp and log undo each other away from pi
theta = np.array([0.3, -1.2, 0.8])
R = so3_exp(theta)
print("log(exp(theta)) - theta:", so3_log(R) - theta)

# %%
# closed forms against midpoint quadrature
for norm in (1e-6, 0.1, 1.0, 3.0):
    th = rng.normal(size=3)
    th *= norm / np.linalg.norm(th)
    eg = np.abs(gamma(th) - quadrature_gamma(th, 10_000)).max()
    el = np.abs(lam(th) - quadrature_lambda(th, 10_000)).max()
    print(f"|theta|={norm:<6g} Gamma err {eg:.1e}  Lambda err {el:.1e}")

# %%
# the series and closed branches meet smoothly at the switch
axis = np.array([1.0, 2.0, 2.0]) / 3.0
for a in (0.9e-4, 1.1e-4):
    s = lam(a * axis, _branch="series")
    c = lam(a * axis, _branch="closed")
    print(f"angle {a:.1e}: branch gap {np.abs(s - c).max():.1e}")

# limits at zero are exact
print(np.array_equal(gamma(np.zeros(3)), np.eye(3)), np.array_equal(lam(np.zeros(3)), 0.5 * np.eye(3)))
