"""Preintegrated (PI) features: the Forster and accurate formulations,
feature composition, state application and sliding-window extraction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lie import RENORM_EVERY, gamma, lam, normalize_rotation, so3_exp, so3_log
from .states import GRAVITY, PoseState

TIMESTAMP_JITTER = 1e-6
METHODS = ("forster", "accurate")

_EYE = np.eye(3)
_HALF_EYE = 0.5 * np.eye(3)


@dataclass(frozen=True)
class PiFeature:
    """Relative motion constraint between sample ``i`` and sample ``j``.

    ``delta_R`` maps body-j vectors into body-i; ``delta_v`` and ``delta_p``
    are expressed in body-i with gravity and the initial velocity removed.
    """

    delta_R: np.ndarray
    delta_v: np.ndarray
    delta_p: np.ndarray
    dt_ij: float
    n_samples: int
    t_start: float = 0.0

    @property
    def t_end(self):
        return self.t_start + self.dt_ij

    @classmethod
    def identity(cls, t_start=0.0):
        return cls(np.eye(3), np.zeros(3), np.zeros(3), 0.0, 0, t_start)

    def as_vector(self):
        """``[rotvec(dR), dv, dp]`` as a flat 9-vector."""
        return np.concatenate([so3_log(self.delta_R), self.delta_v, self.delta_p])


@dataclass(frozen=True)
class FeatureWindow:
    features: tuple
    t_start: float
    t_end: float
    start_index: int = 0

    def __len__(self):
        return len(self.features)


def _forster_correctives(theta):
    return _EYE, _HALF_EYE


def _accurate_correctives(theta):
    return gamma(theta), lam(theta)


_CORRECTIVES = {"forster": _forster_correctives, "accurate": _accurate_correctives}


def _check_uniform(samples, dt):
    if len(samples) == 0:
        raise ValueError("cannot preintegrate an empty sample slice")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if len(samples) > 1:
        jitter = np.abs(np.diff(samples.t) - dt)
        k = int(np.argmax(jitter))
        if jitter[k] > TIMESTAMP_JITTER:
            raise ValueError(
                f"non-uniform timestamps: spacing {samples.t[k + 1] - samples.t[k]!r} "
                f"at t={samples.t[k]!r} differs from dt={dt!r}")


def _preintegrate(samples, dt, method):
    _check_uniform(samples, dt)
    correctives = _CORRECTIVES[method]
    dR = np.eye(3)
    dv = np.zeros(3)
    dp = np.zeros(3)
    dt2 = dt * dt
    for k in range(len(samples)):
        theta = samples.gyro[k] * dt
        a = samples.accel[k]
        G, L = correctives(theta)
        # dR and dv on the right-hand side are the values before step k
        dp = dp + dv * dt + (dR @ (L @ a)) * dt2
        dv = dv + (dR @ (G @ a)) * dt
        dR = dR @ so3_exp(theta)
        if (k + 1) % RENORM_EVERY == 0:
            dR = normalize_rotation(dR)
    n = len(samples)
    return PiFeature(dR, dv, dp, n * dt, n, float(samples.t[0]))


def preintegrate_forster(samples, dt):
    """PI feature assuming constant world-frame acceleration between samples."""
    return _preintegrate(samples, dt, "forster")


def preintegrate_accurate(samples, dt):
    """PI feature assuming constant body-frame rate and specific force.

    Velocity increments are weighted by ``gamma(theta_k)`` and position
    increments by ``lam(theta_k)`` in place of the 1/2 factor.
    """
    return _preintegrate(samples, dt, "accurate")


def preintegrate(samples, dt, method="forster"):
    if method not in _CORRECTIVES:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return _preintegrate(samples, dt, method)


def apply(state, f, g=GRAVITY):
    """Predict the state at the end of ``f`` from ``state`` at its start."""
    g = np.asarray(g, dtype=float)
    R, v, p = state.rotation, state.velocity, state.position
    dt = f.dt_ij
    return PoseState(
        state.t + dt,
        R @ f.delta_R,
        v + g * dt + R @ f.delta_v,
        p + v * dt + 0.5 * g * dt * dt + R @ f.delta_p,
    )


def compose(f_ij, f_jk, tol=1e-9):
    """Concatenate two contiguous features into one spanning both."""
    if abs(f_ij.t_end - f_jk.t_start) > tol:
        raise ValueError(
            f"features are not contiguous: first ends at {f_ij.t_end!r}, "
            f"second starts at {f_jk.t_start!r}")
    R = f_ij.delta_R
    return PiFeature(
        R @ f_jk.delta_R,
        f_ij.delta_v + R @ f_jk.delta_v,
        f_ij.delta_p + f_ij.delta_v * f_jk.dt_ij + R @ f_jk.delta_p,
        f_ij.dt_ij + f_jk.dt_ij,
        f_ij.n_samples + f_jk.n_samples,
        f_ij.t_start,
    )


def compose_all(features):
    features = list(features)
    if not features:
        raise ValueError("nothing to compose")
    out = features[0]
    for f in features[1:]:
        out = compose(out, f)
    return out


def window_features(stream, window=200, step=10, method="forster", dt=None):
    """Yield sliding :class:`FeatureWindow` objects over ``stream``.

    Windows advance by ``step`` samples and hold ``window // step`` features
    each. A feature is computed once and reused by every window that
    contains it. Streams shorter than ``window`` yield nothing.
    """
    if method not in _CORRECTIVES:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if step <= 0 or window <= 0 or window % step:
        raise ValueError(f"window ({window}) must be a positive multiple of step ({step})")
    n = len(stream)
    if n < window:
        return
    if dt is None:
        dt = float(np.median(np.diff(stream.t)))
    per_window = window // step
    cache = {}
    for start in range(0, n - window + 1, step):
        for key in [k for k in cache if k[0] < start]:
            del cache[key]
        feats = []
        for m in range(per_window):
            i = start + m * step
            key = (i, method)
            if key not in cache:
                cache[key] = _preintegrate(stream[i:i + step], dt, method)
            feats.append(cache[key])
        yield FeatureWindow(tuple(feats), feats[0].t_start, feats[-1].t_end, start)


def step_features(stream, step=10, method="forster", dt=None):
    """Non-overlapping features over consecutive ``step``-sample chunks."""
    if dt is None:
        dt = float(np.median(np.diff(stream.t)))
    return [preintegrate(stream[i:i + step], dt, method)
            for i in range(0, len(stream) - step + 1, step)]
