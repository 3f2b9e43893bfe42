import numpy as np
import pytest

from pifeat.imu import propagate_stream
from pifeat.oracle import reference_deltas
from pifeat.preintegration import (PiFeature, apply, compose, compose_all, preintegrate,
                                   preintegrate_accurate, preintegrate_forster,
                                   step_features, window_features)
from pifeat.states import GRAVITY, ImuStream, PoseState

from conftest import constant_stream, random_state, random_stream

METHODS = ["forster", "accurate"]


def assert_features_close(a, b, tol):
    assert np.abs(a.delta_R - b.delta_R).max() <= tol
    assert np.abs(a.delta_v - b.delta_v).max() <= tol
    assert np.abs(a.delta_p - b.delta_p).max() <= tol
    assert abs(a.dt_ij - b.dt_ij) <= 1e-12


@pytest.mark.parametrize("method", METHODS)
def test_zero_samples_give_identity(method):
    s = constant_stream(np.zeros(3), np.zeros(3), 10, 0.01)
    f = preintegrate(s, 0.01, method)
    assert np.array_equal(f.delta_R, np.eye(3))
    assert np.array_equal(f.delta_v, np.zeros(3)) and np.array_equal(f.delta_p, np.zeros(3))
    assert f.n_samples == 10 and abs(f.dt_ij - 0.1) < 1e-9


def test_single_sample_sums():
    s = constant_stream(np.zeros(3), [1.0, 0.0, 0.0], 1, 0.01)
    f = preintegrate_forster(s, 0.01)
    assert np.allclose(f.delta_v, [0.01, 0, 0], atol=1e-18)
    assert np.allclose(f.delta_p, [5e-5, 0, 0], atol=1e-18)


def test_errors():
    with pytest.raises(ValueError):
        preintegrate_forster(ImuStream(np.zeros(0), np.zeros((0, 3)), np.zeros((0, 3))), 0.01)
    jittery = ImuStream([0.0, 0.01, 0.0201], np.zeros((3, 3)), np.zeros((3, 3)))
    with pytest.raises(ValueError, match="non-uniform"):
        preintegrate_accurate(jittery, 0.01)
    ok = ImuStream([0.0, 0.01, 0.0200005], np.zeros((3, 3)), np.zeros((3, 3)))
    preintegrate_accurate(ok, 0.01)
    with pytest.raises(ValueError):
        preintegrate(ok, 0.01, "rk4")


@pytest.mark.parametrize("method", METHODS)
def test_separation_identity(method, rng):
    for _ in range(20):
        s = random_stream(rng, 10)
        state = random_state(rng)
        g = rng.normal(0.0, 10.0, 3)
        stepped = propagate_stream(state, s, 0.01, g, method)[-1]
        applied = apply(state, preintegrate(s, 0.01, method), g)
        assert np.abs(applied.rotation - stepped.rotation).max() < 1e-10
        assert np.abs(applied.velocity - stepped.velocity).max() < 1e-10
        assert np.abs(applied.position - stepped.position).max() < 1e-10


def test_feature_independent_of_initial_state(rng):
    s = random_stream(rng, 30)
    a = preintegrate_accurate(s, 0.01)
    _ = apply(random_state(rng), a)
    b = preintegrate_accurate(s, 0.01)
    assert np.array_equal(a.delta_R, b.delta_R)
    assert np.array_equal(a.delta_v, b.delta_v) and np.array_equal(a.delta_p, b.delta_p)


def test_methods_identical_without_rotation(rng):
    s = random_stream(rng, 50)
    s.gyro[:] = 0.0
    f, a = preintegrate_forster(s, 0.01), preintegrate_accurate(s, 0.01)
    assert np.array_equal(f.delta_R, a.delta_R)
    assert np.array_equal(f.delta_v, a.delta_v)
    assert np.array_equal(f.delta_p, a.delta_p)


def test_rotation_part_bit_identical(rng):
    for _ in range(20):
        s = random_stream(rng, 37, gyro_scale=3.0)
        assert np.array_equal(preintegrate_forster(s, 0.01).delta_R,
                              preintegrate_accurate(s, 0.01).delta_R)


def test_accurate_matches_oracle_forster_does_not(rng):
    dt = 0.01
    w = rng.normal(size=3)
    w *= 0.2 / dt / np.linalg.norm(w)
    a = rng.normal(0.0, 3.0, 3)
    s = constant_stream(w, a, 10, dt)
    R_ref, v_ref, p_ref = reference_deltas(s, dt, 10_000)
    acc = preintegrate_accurate(s, dt)
    fst = preintegrate_forster(s, dt)
    rel = lambda x, ref: np.linalg.norm(x - ref) / np.linalg.norm(ref)
    assert rel(acc.delta_p, p_ref) < 1e-9 and rel(acc.delta_v, v_ref) < 1e-9
    assert np.abs(acc.delta_R - R_ref).max() < 1e-12
    assert rel(fst.delta_p, p_ref) > 1e-4


def test_forster_error_shrinks_with_dt(rng):
    T = 0.2
    for _ in range(10):
        w = rng.normal(size=3)
        w *= rng.uniform(1.0, 4.0) / np.linalg.norm(w)
        a = rng.normal(0.0, 3.0, 3)
        errs = []
        for n in (10, 20):
            dt = T / n
            s = constant_stream(w, a, n, dt)
            _, _, p_ref = reference_deltas(s, dt, 2000)
            errs.append(np.linalg.norm(preintegrate_forster(s, dt).delta_p - p_ref))
        assert errs[1] <= 0.6 * errs[0]


def test_apply_identity_feature(rng):
    s = random_state(rng)
    f = PiFeature(np.eye(3), np.zeros(3), np.zeros(3), 0.1, 10)
    out = apply(s, f, np.zeros(3))
    assert np.array_equal(out.rotation, s.rotation)
    assert np.array_equal(out.velocity, s.velocity)
    assert np.allclose(out.position, s.position + 0.1 * s.velocity, atol=1e-15)
    rest = PoseState(0.0)
    fall = apply(rest, f, GRAVITY)
    assert np.allclose(fall.position, [0, 0, -0.5 * 9.80665 * 0.01], atol=1e-15)


@pytest.mark.parametrize("method", METHODS)
def test_compose_split_vs_whole(method, rng):
    for _ in range(20):
        s = random_stream(rng, 10, gyro_scale=2.0)
        whole = preintegrate(s, 0.01, method)
        split = compose(preintegrate(s[:5], 0.01, method), preintegrate(s[5:], 0.01, method))
        assert_features_close(whole, split, 1e-10)
        assert split.n_samples == 10


def test_compose_with_identity(rng):
    f = preintegrate_accurate(random_stream(rng, 10), 0.01)
    g = compose(f, PiFeature.identity(f.t_end))
    assert_features_close(f, g, 0.0)


@pytest.mark.parametrize("method", METHODS)
def test_compose_associative(method, rng):
    for _ in range(20):
        s = random_stream(rng, 15, gyro_scale=2.0)
        a, b, c = (preintegrate(s[i:i + 5], 0.01, method) for i in (0, 5, 10))
        assert_features_close(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-10)


def test_compose_rejects_gap(rng):
    s = random_stream(rng, 20)
    with pytest.raises(ValueError, match="contiguous"):
        compose(preintegrate_forster(s[:5], 0.01), preintegrate_forster(s[10:15], 0.01))


def test_window_of_exactly_200(rng):
    wins = list(window_features(random_stream(rng, 200), 200, 10, "accurate"))
    assert len(wins) == 1 and len(wins[0]) == 20
    f = wins[0].features
    for a, b in zip(f[:-1], f[1:]):
        assert abs(a.t_end - b.t_start) < 1e-12
    assert abs(wins[0].t_end - wins[0].t_start - 2.0) < 1e-9


def test_windows_share_features(rng):
    wins = list(window_features(random_stream(rng, 210), 200, 10, "forster"))
    assert len(wins) == 2
    shared = sum(any(x is y for y in wins[1].features) for x in wins[0].features)
    assert shared == 19
    assert wins[0].features[1] is wins[1].features[0]


def test_short_stream_yields_nothing(rng):
    assert list(window_features(random_stream(rng, 150))) == []


def test_window_must_divide(rng):
    with pytest.raises(ValueError):
        list(window_features(random_stream(rng, 300), 200, 30))


@pytest.mark.parametrize("method", METHODS)
def test_window_composition_equals_whole(method, rng):
    s = random_stream(rng, 230, gyro_scale=1.5)
    for win in window_features(s, 200, 10, method):
        i = win.start_index
        whole = preintegrate(s[i:i + 200], 0.01, method)
        assert_features_close(compose_all(win.features), whole, 1e-10)


def test_step_features_count(rng):
    assert len(step_features(random_stream(rng, 105), 10)) == 10
