"""SO(3) / SE(3) numerics and the Gamma / Lambda integral correctives.

Rotations are plain 3x3 ``numpy`` arrays. Twists are 6-vectors laid out as
``[rho, theta]`` (translation part first). :class:`Transform` bundles a
rotation with a translation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SMALL_ANGLE = 1e-4
# log() switches to diagonal axis extraction once cos(angle) drops below this
_NEAR_PI_COS = -0.9
_LOG_COS_TOL = 1e-7
RENORM_EVERY = 256


def _as_vec3(v, name="v"):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite components: {v}")
    return v


def hat(v):
    """Skew-symmetric matrix such that ``hat(v) @ w == cross(v, w)``."""
    x, y, z = _as_vec3(v)
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def vee(M, tol=1e-9):
    """Inverse of :func:`hat`."""
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)) or np.linalg.norm(M + M.T) >= tol:
        raise ValueError("matrix is not skew-symmetric")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def _series_coeffs(theta2):
    # Taylor expansions (through theta^4) of the four scalar coefficients
    #   a = sin(t)/t, b = (1-cos t)/t^2, c = (t-sin t)/t^3, d = (cos t-1+t^2/2)/t^4
    t4 = theta2 * theta2
    a = 1.0 - theta2 / 6.0 + t4 / 120.0
    b = 0.5 - theta2 / 24.0 + t4 / 720.0
    c = 1.0 / 6.0 - theta2 / 120.0 + t4 / 5040.0
    d = 1.0 / 24.0 - theta2 / 720.0 + t4 / 40320.0
    return a, b, c, d


def _closed_coeffs(angle):
    s = np.sin(angle)
    half = np.sin(0.5 * angle)
    one_minus_cos = 2.0 * half * half
    t2 = angle * angle
    a = s / angle
    b = one_minus_cos / t2
    # angle - sin(angle) loses ~t^-2 relative digits; lam() multiplies c by
    # hat(theta) (not its square), so evaluate this one in extended precision
    al = np.longdouble(angle)
    c = float((al - np.sin(al)) / (al * al * al))
    # t^2/2 - (1 - cos t): both terms O(t^2), so the rounding error stays O(eps t^2)
    d = (0.5 * t2 - one_minus_cos) / (t2 * t2)
    return a, b, c, d


def _coeffs(theta, force=None):
    angle = float(np.linalg.norm(theta))
    use_series = angle < SMALL_ANGLE if force is None else force == "series"
    if use_series:
        return _series_coeffs(angle * angle)
    return _closed_coeffs(angle)


def so3_exp(theta, *, _branch=None):
    """Rodrigues formula ``exp(hat(theta))``."""
    theta = _as_vec3(theta, "theta")
    a, b, _, _ = _coeffs(theta, _branch)
    S = hat(theta)
    return np.eye(3) + a * S + b * (S @ S)


def gamma(theta, *, _branch=None):
    """First-order corrective ``sum_n hat(theta)^n / (n+1)!``.

    Equal to ``int_0^1 exp(s hat(theta)) ds``, i.e. the left Jacobian of SO(3).
    Tends to the identity as ``theta -> 0``.
    """
    theta = _as_vec3(theta, "theta")
    _, b, c, _ = _coeffs(theta, _branch)
    S = hat(theta)
    return np.eye(3) + b * S + c * (S @ S)


def lam(theta, *, _branch=None):
    """Second-order corrective ``sum_n hat(theta)^n / (n+2)!``.

    Equal to ``int_0^1 int_0^s exp(u hat(theta)) du ds``; tends to ``I/2``.
    """
    theta = _as_vec3(theta, "theta")
    _, _, c, d = _coeffs(theta, _branch)
    S = hat(theta)
    return 0.5 * np.eye(3) + c * S + d * (S @ S)


def so3_log(R):
    """Rotation vector of ``R`` with norm in ``[0, pi]``."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise ValueError("so3_log expects a finite 3x3 rotation matrix")
    cos_angle = 0.5 * (np.trace(R) - 1.0)
    if abs(cos_angle) > 1.0 + _LOG_COS_TOL:
        raise ValueError(f"not a rotation: cos(angle) = {cos_angle}")
    cos_angle = min(1.0, max(-1.0, cos_angle))
    w = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    sin_angle = float(np.linalg.norm(w))
    angle = np.arctan2(sin_angle, cos_angle)

    if cos_angle > _NEAR_PI_COS:
        if angle < SMALL_ANGLE:
            # angle/sin(angle) = 1 + t^2/6 + 7 t^4/360
            t2 = angle * angle
            return (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) * w
        return (angle / sin_angle) * w

    # near pi: symmetric part is (1 - cos) a a^T + cos I
    B = 0.5 * (R + R.T) - cos_angle * np.eye(3)
    k = int(np.argmax(np.diag(B)))
    axis = B[:, k] / np.sqrt(B[k, k] * (1.0 - cos_angle))
    axis /= np.linalg.norm(axis)
    if axis @ w < 0.0:
        axis = -axis
    return angle * axis


def normalize_rotation(R):
    """Nearest rotation matrix in the Frobenius sense."""
    U, _, Vt = np.linalg.svd(R)
    out = U @ Vt
    if np.linalg.det(out) < 0.0:
        U[:, -1] = -U[:, -1]
        out = U @ Vt
    return out


def is_rotation(R, tol=1e-9):
    R = np.asarray(R, dtype=float)
    return (R.shape == (3, 3)
            and np.linalg.norm(R.T @ R - np.eye(3)) < tol
            and abs(np.linalg.det(R) - 1.0) < tol)


@dataclass(frozen=True)
class Transform:
    """Rigid transform ``x -> rotation @ x + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, T):
        T = np.asarray(T, dtype=float)
        return cls(T[:3, :3].copy(), T[:3, 3].copy())

    def matrix(self):
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def inverse(self):
        Rt = self.rotation.T
        return Transform(Rt, -Rt @ self.translation)

    def __matmul__(self, other):
        if isinstance(other, Transform):
            return Transform(self.rotation @ other.rotation,
                             self.rotation @ other.translation + self.translation)
        return self.rotation @ np.asarray(other) + self.translation


def se3_exp(xi):
    """Exponential of a twist ``[rho, theta]``."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (6,):
        raise ValueError(f"twist must be a 6-vector, got shape {xi.shape}")
    rho, theta = xi[:3], xi[3:]
    return Transform(so3_exp(theta), gamma(theta) @ _as_vec3(rho, "rho"))


def se3_log(T):
    """Twist ``[rho, theta]`` with ``se3_exp(result) == T``."""
    theta = so3_log(T.rotation)
    rho = np.linalg.solve(gamma(theta), T.translation)
    return np.concatenate([rho, theta])


lambda_ = lam
