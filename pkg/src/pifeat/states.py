"""Value types shared across the package: IMU samples/streams, navigation
states and trajectories."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lie import Transform, so3_exp, so3_log

GRAVITY = np.array([0.0, 0.0, -9.80665])


@dataclass(frozen=True)
class ImuSample:
    t: float
    gyro: np.ndarray
    accel: np.ndarray


@dataclass
class ImuStream:
    """Column-wise container for a raw IMU stream.

    ``gyro`` and ``accel`` are ``(N, 3)`` arrays in the body frame; the sample
    at ``t[k]`` governs the interval ``[t[k], t[k+1])``.
    """

    t: np.ndarray
    gyro: np.ndarray
    accel: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).reshape(-1)
        n = self.t.shape[0]
        self.gyro = np.asarray(self.gyro, dtype=float).reshape(n, 3)
        self.accel = np.asarray(self.accel, dtype=float).reshape(n, 3)

    def __len__(self):
        return self.t.shape[0]

    def __getitem__(self, key):
        if isinstance(key, slice):
            return ImuStream(self.t[key], self.gyro[key], self.accel[key])
        return ImuSample(float(self.t[key]), self.gyro[key].copy(), self.accel[key].copy())

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    @classmethod
    def from_samples(cls, samples):
        samples = list(samples)
        if not samples:
            return cls(np.zeros(0), np.zeros((0, 3)), np.zeros((0, 3)))
        return cls([s.t for s in samples],
                   np.array([s.gyro for s in samples]),
                   np.array([s.accel for s in samples]))

    @property
    def rate(self):
        """Effective sample rate in Hz (median spacing)."""
        if len(self) < 2:
            return float("nan")
        return 1.0 / float(np.median(np.diff(self.t)))

    def validate(self):
        if not (np.all(np.isfinite(self.t)) and np.all(np.isfinite(self.gyro))
                and np.all(np.isfinite(self.accel))):
            raise ValueError("IMU stream contains non-finite values")
        bad = np.nonzero(np.diff(self.t) <= 0.0)[0]
        if bad.size:
            raise ValueError(f"timestamps not strictly increasing at t={self.t[bad[0] + 1]!r}")


@dataclass
class PoseState:
    """Navigation state: world-from-body rotation, world velocity and position."""

    t: float
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.t = float(self.t)
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        self.position = np.asarray(self.position, dtype=float)

    @property
    def transform(self):
        return Transform(self.rotation, self.position)


class Trajectory:
    """Time-ordered poses with knot lookup and geodesic interpolation."""

    def __init__(self, t, rotations, positions, velocities=None):
        self.t = np.asarray(t, dtype=float).reshape(-1)
        n = self.t.shape[0]
        self.rotations = np.asarray(rotations, dtype=float).reshape(n, 3, 3)
        self.positions = np.asarray(positions, dtype=float).reshape(n, 3)
        if velocities is None:
            velocities = _finite_difference(self.t, self.positions)
        self.velocities = np.asarray(velocities, dtype=float).reshape(n, 3)
        if n > 1 and np.any(np.diff(self.t) <= 0.0):
            raise ValueError("trajectory timestamps must be strictly increasing")

    @classmethod
    def from_states(cls, states):
        states = list(states)
        return cls([s.t for s in states],
                   [s.rotation for s in states],
                   [s.position for s in states],
                   [s.velocity for s in states])

    def __len__(self):
        return self.t.shape[0]

    def __getitem__(self, k):
        return PoseState(self.t[k], self.rotations[k].copy(),
                         self.velocities[k].copy(), self.positions[k].copy())

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def transform(self, k):
        return Transform(self.rotations[k], self.positions[k])

    @property
    def span(self):
        return float(self.t[0]), float(self.t[-1])

    def interpolate(self, t):
        """Pose at time ``t``.

        Position is linear between the bracketing knots, rotation follows
        ``R_a exp(s log(R_a^T R_b))`` and velocity is the chord slope. Knot
        times return the stored knot exactly.
        """
        t = float(t)
        t0, t1 = self.span
        if not (t0 <= t <= t1):
            raise ValueError(f"t={t!r} outside trajectory span [{t0!r}, {t1!r}]")
        j = int(np.searchsorted(self.t, t, side="left"))
        if self.t[j] == t:
            return self[j]
        i = j - 1
        s = (t - self.t[i]) / (self.t[j] - self.t[i])
        Ra, Rb = self.rotations[i], self.rotations[j]
        R = Ra @ so3_exp(s * so3_log(Ra.T @ Rb))
        p = (1.0 - s) * self.positions[i] + s * self.positions[j]
        v = (self.positions[j] - self.positions[i]) / (self.t[j] - self.t[i])
        return PoseState(t, R, v, p)


def _finite_difference(t, p):
    n = t.shape[0]
    if n < 2:
        return np.zeros((n, 3))
    return np.gradient(p, t, axis=0)
