"""IMU sensor model: trajectory synthesis, noise corruption and single-step
state propagation under the two inter-sample hold assumptions."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lie import RENORM_EVERY, gamma, lam, normalize_rotation, so3_exp
from .states import GRAVITY, ImuSample, ImuStream, PoseState, Trajectory


@dataclass(frozen=True)
class NoiseSpec:
    """White noise and bias random-walk parameters.

    Walk standard deviations are per square-root second, so a bias step over
    ``dt`` seconds has variance ``walk_std**2 * dt``.
    """

    gyro_noise_std: float = 0.0
    accel_noise_std: float = 0.0
    gyro_bias_walk_std: float = 0.0
    accel_bias_walk_std: float = 0.0
    initial_gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    initial_accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    seed: int = 0

    def __post_init__(self):
        for name in ("gyro_noise_std", "accel_noise_std",
                     "gyro_bias_walk_std", "accel_bias_walk_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        object.__setattr__(self, "initial_gyro_bias",
                           np.asarray(self.initial_gyro_bias, dtype=float).reshape(3))
        object.__setattr__(self, "initial_accel_bias",
                           np.asarray(self.initial_accel_bias, dtype=float).reshape(3))


def propagate_euler(state, sample, dt, g=GRAVITY):
    """One step holding body rate and *world* acceleration constant."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    R, v, p = state.rotation, state.velocity, state.position
    g = np.asarray(g, dtype=float)
    acc_w = R @ sample.accel
    R_next = R @ so3_exp(sample.gyro * dt)
    v_next = v + g * dt + acc_w * dt
    p_next = p + v * dt + 0.5 * g * dt * dt + 0.5 * acc_w * dt * dt
    return PoseState(state.t + dt, R_next, v_next, p_next)


def propagate_exact(state, sample, dt, g=GRAVITY):
    """One step holding body rate and *body* specific force constant.

    This is the closed-form solution of the switched linear system, exact
    whenever the measured signals really are constant over ``[t, t + dt)``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    R, v, p = state.rotation, state.velocity, state.position
    g = np.asarray(g, dtype=float)
    theta = sample.gyro * dt
    a = sample.accel
    R_next = R @ so3_exp(theta)
    v_next = v + g * dt + R @ (gamma(theta) @ a) * dt
    p_next = p + v * dt + 0.5 * g * dt * dt + R @ (lam(theta) @ a) * dt * dt
    return PoseState(state.t + dt, R_next, v_next, p_next)


PROPAGATORS = {"forster": propagate_euler, "euler": propagate_euler,
               "accurate": propagate_exact, "exact": propagate_exact}


def propagate_stream(state, stream, dt, g=GRAVITY, method="accurate"):
    """Chain single-step propagation over every sample in ``stream``.

    Returns the list of states including the initial one.
    """
    step = PROPAGATORS[method]
    states = [state]
    for k in range(len(stream)):
        state = step(state, stream[k], dt, g)
        if (k + 1) % RENORM_EVERY == 0:
            state.rotation = normalize_rotation(state.rotation)
        states.append(state)
    return states


def simulate_trajectory(segments, initial, rate, g=GRAVITY):
    """Synthesize a trajectory and its ideal IMU stream.

    ``segments`` is a sequence of ``(duration, body_rate, body_accel)`` with
    signals held constant in the body frame. Each sample reports
    ``accel = body_accel - R_k^T g`` and the truth is obtained by exact
    propagation of those samples, so the accurate formulation reproduces it
    without model error.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    segments = list(segments)
    if not segments:
        raise ValueError("segment list is empty")
    g = np.asarray(g, dtype=float)
    dt = 1.0 / rate

    counts = []
    for duration, _, _ in segments:
        if duration <= 0:
            raise ValueError("segment durations must be positive")
        counts.append(max(1, int(round(duration * rate))))

    state = PoseState(initial.t, initial.rotation, initial.velocity, initial.position)
    states = [state]
    t, gyro, accel = [], [], []
    k = 0
    for n, (_, w, a_body) in zip(counts, segments):
        w = np.asarray(w, dtype=float).reshape(3)
        a_body = np.asarray(a_body, dtype=float).reshape(3)
        for _ in range(n):
            # keep timestamps on an exact grid rather than accumulating dt
            t_k = initial.t + k * dt
            sample = ImuSample(t_k, w, a_body - state.rotation.T @ g)
            t.append(t_k)
            gyro.append(sample.gyro)
            accel.append(sample.accel)
            state = propagate_exact(state, sample, dt, g)
            state.t = initial.t + (k + 1) * dt
            k += 1
            if k % RENORM_EVERY == 0:
                state.rotation = normalize_rotation(state.rotation)
            states.append(state)
    return Trajectory.from_states(states), ImuStream(t, gyro, accel)


def corrupt(stream, noise):
    """Add white noise and random-walk biases to a clean stream.

    The output depends only on ``stream`` and ``noise`` (including its seed).
    """
    n = len(stream)
    rng = np.random.default_rng(noise.seed)
    dts = np.diff(stream.t, prepend=stream.t[0]) if n else np.zeros(0)

    def walk(b0, std):
        steps = rng.standard_normal((n, 3)) * (std * np.sqrt(dts))[:, None]
        # first sample carries the initial bias; walk starts after it
        steps[:1] = 0.0
        return b0 + np.cumsum(steps, axis=0)

    gyro_white = rng.standard_normal((n, 3)) * noise.gyro_noise_std
    accel_white = rng.standard_normal((n, 3)) * noise.accel_noise_std
    bg = walk(noise.initial_gyro_bias, noise.gyro_bias_walk_std)
    ba = walk(noise.initial_accel_bias, noise.accel_bias_walk_std)
    return ImuStream(stream.t.copy(), stream.gyro + bg + gyro_white,
                     stream.accel + ba + accel_white)
