"""Preintegrated IMU features (Forster and accurate formulations), the
numerics they rest on, and the data/evaluation plumbing around them."""

from .lie import (Transform, gamma, hat, lam, lambda_, se3_exp, se3_log, so3_exp,
                  so3_log, vee)
from .states import GRAVITY, ImuSample, ImuStream, PoseState, Trajectory
from .imu import (NoiseSpec, corrupt, propagate_euler, propagate_exact,
                  propagate_stream, simulate_trajectory)
from .preintegration import (FeatureWindow, PiFeature, apply, compose, compose_all,
                             preintegrate, preintegrate_accurate, preintegrate_forster,
                             window_features)

__version__ = "0.1.0"
