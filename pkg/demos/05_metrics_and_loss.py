"""
Trajectory metrics and the geodesic loss
========================================

KITTI-style relative errors, the normalized displacement error and the
Mahalanobis-weighted geodesic residual, on hand-built trajectories.
"""

import numpy as np

from pifeat import PoseState, simulate_trajectory
from pifeat.dataset_io import make_labels
from pifeat.evaluation import (empirical_covariance, format_table, geodesic_residual,
                               kitti_relative_errors, kitti_table, normalized_displacement_error,
                               weighted_loss)
from pifeat.lie import se3_log
from pifeat.states import Trajectory

# %%
# a straight 1 km run and a prediction that overshoots by 1 %
n = 1001
gt = Trajectory(np.arange(n) * 0.1, np.tile(np.eye(3), (n, 1, 1)), np.outer(np.arange(n), [1, 0, 0]))
pred = Trajectory(gt.t, gt.rotations, gt.positions * 1.01)
rep = kitti_relative_errors(pred, gt)
print(format_table(*kitti_table({"model": {"00": rep}})))
print("displacement error:", normalized_displacement_error(pred, gt).percent, "%")

# %%
# loss weights from the spread of training labels
rng = np.random.default_rng(4)
segments = [(2.0, rng.normal(0, 0.3, 3), rng.normal(0, 1.0, 3)) for _ in range(5)]
traj, _ = simulate_trajectory(segments, PoseState(0.0, velocity=[3.0, 0, 0]), 100.0)
labels = make_labels(traj, np.arange(0.0, 10.0, 0.1))
W = empirical_covariance(labels)

# a perfect predictor scores zero; a noisy one does not
perfect = [geodesic_residual(l.delta_T, se3_log(l.delta_T)) for l in labels]
noisy = [geodesic_residual(l.delta_T, se3_log(l.delta_T) + rng.normal(0, 1e-3, 6)) for l in labels]
print("loss perfect:", weighted_loss(perfect, W), " noisy:", weighted_loss(noisy, W))
