import numpy as np
import pytest

from pifeat.imu import (NoiseSpec, corrupt, propagate_euler, propagate_exact,
                        propagate_stream, simulate_trajectory)
from pifeat.lie import so3_exp
from pifeat.states import GRAVITY, ImuSample, ImuStream, PoseState

from conftest import random_state

ZERO_G = np.zeros(3)


def euler_by_hand(R, v, p, w, a, dt, g):
    # direct transcription of the constant-world-acceleration update
    R1 = R @ so3_exp(w * dt)
    v1 = v + g * dt + R @ a * dt
    p1 = p + v * dt + 0.5 * g * dt ** 2 + 0.5 * R @ a * dt ** 2
    return R1, v1, p1


def test_simulate_stationary_without_gravity():
    traj, stream = simulate_trajectory([(1.0, np.zeros(3), np.zeros(3))], PoseState(0.0), 100.0, ZERO_G)
    assert len(stream) == 100 and len(traj) == 101
    assert np.array_equal(stream.accel, np.zeros((100, 3)))
    assert np.array_equal(stream.gyro, np.zeros((100, 3)))
    assert np.array_equal(traj.positions, np.zeros((101, 3)))


def test_simulate_stationary_reads_gravity():
    traj, stream = simulate_trajectory([(1.0, np.zeros(3), np.zeros(3))], PoseState(0.0), 100.0)
    assert np.array_equal(stream.accel, np.tile([0.0, 0.0, 9.80665], (100, 1)))
    assert np.abs(traj.positions).max() < 1e-12


def test_simulate_circle_radius():
    w, s = 0.5, 2.0
    start = PoseState(0.0, velocity=[0.0, s, 0.0])
    traj, _ = simulate_trajectory([(20.0, [0, 0, w], [-w * s, 0, 0])], start, 100.0)
    r = s / w
    center = np.array([-r, 0.0, 0.0])
    dist = np.linalg.norm(traj.positions - center, axis=1)
    assert np.abs(dist - r).max() < 1e-9
    # heading tracks the yaw rate
    assert np.allclose(traj.rotations[-1], so3_exp([0, 0, w * 20.0]), atol=1e-10)


def test_simulate_rejects_bad_input():
    with pytest.raises(ValueError):
        simulate_trajectory([], PoseState(0.0), 100.0)
    with pytest.raises(ValueError):
        simulate_trajectory([(1.0, np.zeros(3), np.zeros(3))], PoseState(0.0), 0.0)


def test_corrupt_zero_spec_is_identity(rng):
    _, stream = simulate_trajectory([(2.0, rng.normal(size=3), rng.normal(size=3))], PoseState(0.0), 100.0)
    out = corrupt(stream, NoiseSpec())
    assert np.array_equal(out.gyro, stream.gyro)
    assert np.array_equal(out.accel, stream.accel)


def test_corrupt_is_seed_deterministic(rng):
    _, stream = simulate_trajectory([(2.0, rng.normal(size=3), rng.normal(size=3))], PoseState(0.0), 100.0)
    spec = NoiseSpec(0.01, 0.1, 1e-3, 1e-2, [0.1, 0, 0], [0, 0.2, 0], seed=7)
    a, b = corrupt(stream, spec), corrupt(stream, spec)
    assert np.array_equal(a.gyro, b.gyro) and np.array_equal(a.accel, b.accel)
    c = corrupt(stream, NoiseSpec(0.01, 0.1, 1e-3, 1e-2, seed=8))
    assert not np.array_equal(a.gyro, c.gyro)


def test_corrupt_noise_mean_is_zero():
    n = 1_000_000
    clean = ImuStream(np.arange(n) * 0.01, np.zeros((n, 3)), np.zeros((n, 3)))
    sigma = 0.05
    out = corrupt(clean, NoiseSpec(gyro_noise_std=sigma, seed=3))
    mean = (out.gyro - clean.gyro).mean(axis=0)
    assert np.all(np.abs(mean) < 5 * sigma / np.sqrt(n))
    assert np.allclose((out.gyro - clean.gyro).std(axis=0), sigma, rtol=0.01)


def test_corrupt_bias_walk_variance():
    n, dt, walk = 200, 0.01, 0.3
    clean = ImuStream(np.arange(n) * dt, np.zeros((n, 3)), np.zeros((n, 3)))
    finals = np.array([corrupt(clean, NoiseSpec(gyro_bias_walk_std=walk, seed=s)).gyro[-1]
                       for s in range(2000)])
    expected = walk ** 2 * dt * (n - 1)
    assert abs(finals.var() / expected - 1.0) < 0.1


def test_noise_spec_rejects_negative_std():
    with pytest.raises(ValueError):
        NoiseSpec(gyro_noise_std=-1.0)


def test_euler_zero_input_without_gravity(rng):
    s = PoseState(0.0, so3_exp(rng.normal(size=3)), [1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    out = propagate_euler(s, ImuSample(0.0, np.zeros(3), np.zeros(3)), 0.1, ZERO_G)
    assert np.array_equal(out.rotation, s.rotation)
    assert np.array_equal(out.velocity, s.velocity)
    assert np.allclose(out.position, s.position + 0.1 * s.velocity, atol=0)


@pytest.mark.parametrize("step", [propagate_euler, propagate_exact])
def test_gravity_compensating_input_is_fixed_point(step, rng):
    R = so3_exp(rng.normal(size=3))
    s = PoseState(0.0, R, np.zeros(3), [1.0, -2.0, 0.5])
    sample = ImuSample(0.0, np.zeros(3), -R.T @ GRAVITY)
    out = step(s, sample, 0.01, GRAVITY)
    assert np.abs(out.velocity).max() < 1e-12
    assert np.abs(out.position - s.position).max() < 1e-12
    assert np.array_equal(out.rotation, R)


def test_euler_matches_transcription(rng):
    for _ in range(100):
        s = random_state(rng)
        w, a, dt, g = rng.normal(size=3), rng.normal(size=3), rng.uniform(1e-3, 0.1), rng.normal(size=3)
        out = propagate_euler(s, ImuSample(0.0, w, a), dt, g)
        R1, v1, p1 = euler_by_hand(s.rotation, s.velocity, s.position, w, a, dt, g)
        assert np.allclose(out.rotation, R1, atol=1e-14)
        assert np.allclose(out.velocity, v1, atol=1e-12)
        assert np.allclose(out.position, p1, atol=1e-12)


def test_exact_equals_euler_without_rotation(rng):
    for _ in range(50):
        s = random_state(rng)
        sample = ImuSample(0.0, np.zeros(3), rng.normal(size=3))
        a = propagate_exact(s, sample, 0.01)
        b = propagate_euler(s, sample, 0.01)
        assert np.array_equal(a.rotation, b.rotation)
        assert np.array_equal(a.velocity, b.velocity)
        assert np.array_equal(a.position, b.position)


def test_exact_matches_fine_euler_substeps(rng):
    # Euler substep error is about |w| dt / (2 n) relative; keep it below 1e-6
    dt, n = 0.01, 1000
    for _ in range(20):
        s = random_state(rng)
        w = rng.normal(size=3)
        w *= 0.1 / np.linalg.norm(w)
        a = rng.normal(0.0, 3.0, 3)
        exact = propagate_exact(s, ImuSample(0.0, w, a), dt)
        fine = s
        for _ in range(n):
            fine = propagate_euler(fine, ImuSample(0.0, w, a), dt / n)
        scale = dt * np.linalg.norm(a)
        assert np.linalg.norm(exact.velocity - fine.velocity) < 1e-6 * scale
        assert np.linalg.norm(exact.position - fine.position) < 1e-6 * scale * dt
        assert np.abs(exact.rotation - fine.rotation).max() < 1e-12


def test_exact_refinement_closure(rng):
    for _ in range(20):
        s = random_state(rng)
        w, a, dt = rng.normal(0, 2, 3), rng.normal(0, 3, 3), 0.05
        one = propagate_exact(s, ImuSample(0.0, w, a), dt)
        for n in (2, 5, 16):
            many = s
            for _ in range(n):
                many = propagate_exact(many, ImuSample(0.0, w, a), dt / n, GRAVITY)
            # the constant body-frame signals must still be the same specific force
            assert np.abs(one.rotation - many.rotation).max() < 1e-12
            assert np.abs(one.velocity - many.velocity).max() < 1e-12
            assert np.abs(one.position - many.position).max() < 1e-12


def test_euler_first_order_convergence(rng):
    ratios = []
    T = 0.1
    for _ in range(30):
        s = random_state(rng)
        w = rng.normal(size=3)
        w *= rng.uniform(1.0, 5.0) / np.linalg.norm(w)
        a = rng.normal(0.0, 3.0, 3)
        exact = propagate_exact(s, ImuSample(0.0, w, a), T, ZERO_G)

        def err(n):
            st = s
            for _ in range(n):
                st = propagate_euler(st, ImuSample(0.0, w, a), T / n, ZERO_G)
            return np.linalg.norm(np.concatenate([st.velocity - exact.velocity,
                                                  st.position - exact.position]))
        ratios.append(err(10) / err(20))
    assert 1.7 <= min(ratios) and max(ratios) <= 2.3


@pytest.mark.parametrize("step", [propagate_euler, propagate_exact])
def test_velocity_conserved_without_forces(step, rng):
    s = random_state(rng)
    out = step(s, ImuSample(0.0, rng.normal(size=3), np.zeros(3)), 0.02, ZERO_G)
    assert np.array_equal(out.velocity, s.velocity)


def test_propagate_stream_reproduces_simulation(rng):
    segs = [(0.5, rng.normal(size=3), rng.normal(size=3)) for _ in range(4)]
    traj, stream = simulate_trajectory(segs, PoseState(0.0), 100.0)
    states = propagate_stream(PoseState(0.0), stream, 0.01, GRAVITY, "accurate")
    assert np.abs(states[-1].position - traj.positions[-1]).max() < 1e-12
