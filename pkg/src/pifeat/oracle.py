"""Brute-force reference integrators used to certify the closed forms.

Nothing here calls into :mod:`pifeat.lie` or :mod:`pifeat.preintegration`;
the rotation exponential is re-implemented locally (and can itself be checked
against :func:`expm_series`).
"""
from __future__ import annotations

import numpy as np

from .states import GRAVITY, PoseState


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def rodrigues(thetas):
    """Batched rotation exponential for an ``(N, 3)`` array of rotation vectors."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    angle = np.linalg.norm(thetas, axis=1)
    out = np.broadcast_to(np.eye(3), (thetas.shape[0], 3, 3)).copy()
    nz = angle > 0.0
    if np.any(nz):
        k = thetas[nz] / angle[nz, None]
        K = np.zeros((k.shape[0], 3, 3))
        K[:, 0, 1], K[:, 0, 2] = -k[:, 2], k[:, 1]
        K[:, 1, 0], K[:, 1, 2] = k[:, 2], -k[:, 0]
        K[:, 2, 0], K[:, 2, 1] = -k[:, 1], k[:, 0]
        s = np.sin(angle[nz])[:, None, None]
        c = (1.0 - np.cos(angle[nz]))[:, None, None]
        out[nz] += s * K + c * (K @ K)
    return out


def expm_series(theta, terms=40):
    """Matrix exponential of ``hat(theta)`` by direct power series."""
    S = _skew(np.asarray(theta, dtype=float))
    out = np.eye(3)
    term = np.eye(3)
    for n in range(1, terms):
        term = term @ S / n
        out = out + term
    return out


def _weighted_exp_sum(theta, s, w):
    """``sum_j w_j exp(s_j hat(theta))`` via the Rodrigues decomposition."""
    angle = float(np.linalg.norm(theta))
    total = float(np.sum(w))
    if angle == 0.0:
        return total * np.eye(3)
    K = _skew(np.asarray(theta, dtype=float) / angle)
    sin_part = float(np.sum(w * np.sin(s * angle)))
    cos_part = float(np.sum(w * (1.0 - np.cos(s * angle))))
    return total * np.eye(3) + sin_part * K + cos_part * (K @ K)


def quadrature_gamma(theta, n=10_000):
    """Midpoint rule for ``int_0^1 exp(s hat(theta)) ds``."""
    if n < 100:
        raise ValueError("use at least 100 quadrature nodes")
    s = (np.arange(n) + 0.5) / n
    return _weighted_exp_sum(theta, s, np.ones(n)) / n


def quadrature_lambda(theta, n=10_000):
    """Nested midpoint rule for ``int_0^1 int_0^s exp(u hat(theta)) du ds``.

    The inner integral up to the outer node ``(j + 1/2)/n`` is the sum of the
    ``j`` full cells before it plus a half cell sampled at ``(j + 1/4)/n``.
    """
    if n < 100:
        raise ValueError("use at least 100 quadrature nodes")
    j = np.arange(n)
    full = (j + 0.5) / n
    quarter = (j + 0.25) / n
    # cell l is counted by every outer node after it: weight n - 1 - l
    nodes = np.concatenate([full, quarter])
    weights = np.concatenate([(n - 1 - j).astype(float), np.full(n, 0.5)])
    return _weighted_exp_sum(theta, nodes, weights) / (float(n) * n)


def integrate_fine(state, samples, dt, substeps, g=GRAVITY):
    """Propagate through ``samples`` with ``substeps`` Euler micro-steps each.

    The body-frame rate and specific force of a sample are held over its
    whole interval; each micro-step applies the constant-world-acceleration
    update, so the result converges at first order to the exact solution.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    g = np.asarray(g, dtype=float)
    R = np.asarray(state.rotation, dtype=float)
    v = np.asarray(state.velocity, dtype=float)
    p = np.asarray(state.position, dtype=float)
    n = int(substeps)
    h = dt / n
    m = np.arange(n, dtype=float)
    for k in range(len(samples)):
        w = samples.gyro[k]
        a = samples.accel[k]
        # micro-step rotations R exp(m w h), m = 0..n-1
        rots = R @ rodrigues(np.outer(m * h, w))
        acc = rots @ a
        # velocity at the start of each micro-step
        cum = np.cumsum(acc, axis=0) - acc
        v_m = v + np.outer(m * h, g) + h * cum
        p = p + h * v_m.sum(axis=0) + n * 0.5 * h * h * g + 0.5 * h * h * acc.sum(axis=0)
        v = v + n * h * g + h * acc.sum(axis=0)
        R = R @ rodrigues(w * dt)[0]
    return PoseState(state.t + dt * len(samples), R, v, p)


def integrate_fine_extrapolated(state, samples, dt, substeps, g=GRAVITY):
    """Richardson combination ``2 F(2n) - F(n)`` of :func:`integrate_fine`.

    Cancels the leading first-order micro-step error; the rotation is exact
    in both runs and is taken from the finer one.
    """
    coarse = integrate_fine(state, samples, dt, substeps, g)
    fine = integrate_fine(state, samples, dt, 2 * substeps, g)
    return PoseState(fine.t, fine.rotation,
                     2.0 * fine.velocity - coarse.velocity,
                     2.0 * fine.position - coarse.position)


def reference_deltas(samples, dt, substeps=10_000, extrapolate=True):
    """Oracle ``(dR, dv, dp)`` for a sample batch, started from rest at the
    origin with zero gravity, where the final state equals the PI feature."""
    start = PoseState(0.0)
    run = integrate_fine_extrapolated if extrapolate else integrate_fine
    end = run(start, samples, dt, substeps, np.zeros(3))
    return end.rotation, end.velocity, end.position


def exp_taylor_error(theta):
    """Frobenius gap between :func:`rodrigues` and :func:`expm_series`."""
    return float(np.linalg.norm(rodrigues(theta)[0] - expm_series(theta)))


__all__ = [
    "rodrigues", "expm_series", "quadrature_gamma", "quadrature_lambda",
    "integrate_fine", "integrate_fine_extrapolated", "reference_deltas",
    "exp_taylor_error",
]
