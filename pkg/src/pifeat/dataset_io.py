"""Dataset ingestion and export.

Canonical formats (UTF-8 CSV, ``.`` decimal separator, floats written with
``repr`` so a write/read cycle is bit-exact):

* IMU:        ``t,gx,gy,gz,ax,ay,az``           (s, rad/s, m/s^2)
* trajectory: ``t,px,py,pz,qx,qy,qz,qw``        (s, m, unit quaternion world<-body)

Source adapters:

* ``kitti_oxts``: a KITTI raw ``oxts`` directory holding ``timestamps.txt``
  and ``data/NNNNNNNNNN.txt``. Body rates come from fields ``wf, wl, wu``
  (indices 20-22) and specific force from ``af, al, au`` (indices 14-16).
  Times are seconds relative to the first timestamp.
* ``kitti_poses``: KITTI odometry pose file, 12 values per row (row-major
  3x4 ``[R|p]``). Timestamps come from a sibling ``times.txt`` when present,
  otherwise from ``rate`` (10 Hz).
* ``oxford_io``: OxIOD ``imu*.csv`` without header. Column 0 is time (s),
  columns 4-6 rotation rate (rad/s), 7-9 gravity (g) and 10-12 user
  acceleration (g). CoreMotion reports acceleration along the device axes
  with the opposite sign of specific force, so
  ``accel = -(gravity + user_acc) * 9.80665``.
* ``oxford_vicon``: OxIOD ``vi*.csv`` without header: time, header,
  ``tx, ty, tz, qx, qy, qz, qw``.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation as _SciRotation
from scipy.spatial.transform import Slerp

from .lie import Transform, se3_log
from .states import GRAVITY, ImuStream, Trajectory

IMU_HEADER = ["t", "gx", "gy", "gz", "ax", "ay", "az"]
TRAJECTORY_HEADER = ["t", "px", "py", "pz", "qx", "qy", "qz", "qw"]
FEATURE_HEADER = [
    "window_id", "step_id",
    "rot_x", "rot_y", "rot_z",
    "dv_x", "dv_y", "dv_z",
    "dp_x", "dp_y", "dp_z",
    "dt",
    "xi_rho_x", "xi_rho_y", "xi_rho_z",
    "xi_theta_x", "xi_theta_y", "xi_theta_z",
]
IMU_FORMATS = ("canonical", "kitti_oxts", "oxford_io")
TRAJECTORY_FORMATS = ("canonical", "kitti_poses", "oxford_vicon")
DATA_ROOT_ENV = "PIFEAT_DATA_ROOT"
STANDARD_GRAVITY = 9.80665

_OXTS_ACCEL = slice(14, 17)
_OXTS_GYRO = slice(20, 23)


class ParseError(ValueError):
    """Malformed input; carries the source path and 1-based line number."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


@dataclass(frozen=True)
class OdometryLabel:
    delta_T: Transform
    t_i: float
    t_j: float

    def __post_init__(self):
        if not self.t_j > self.t_i:
            raise ValueError("label must satisfy t_j > t_i")

    @property
    def twist(self):
        return se3_log(self.delta_T)


def _fmt(x):
    return repr(float(x))


def resolve_path(path):
    """Relative paths are taken under ``$PIFEAT_DATA_ROOT`` when it is set."""
    path = Path(path)
    root = os.environ.get(DATA_ROOT_ENV)
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _parse_floats(path, lineno, fields, n_expected=None, names=None):
    if n_expected is not None and len(fields) != n_expected:
        raise ParseError(path, lineno, f"expected {n_expected} columns, got {len(fields)}")
    try:
        values = [float(f) for f in fields]
    except ValueError as exc:
        raise ParseError(path, lineno, f"bad number ({exc})") from None
    names = names or range(len(values))
    for name, v in zip(names, values):
        if not math.isfinite(v):
            raise ParseError(path, lineno, f"non-finite value in column {name}")
    return values


def _read_canonical(path, header):
    path = Path(path)
    rows, lines = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [h.strip() for h in first] != header:
            raise ParseError(path, 1, f"expected header {','.join(header)}")
        for fields in reader:
            if not fields:
                continue
            lineno = reader.line_num
            values = _parse_floats(path, lineno, fields, len(header), header)
            rows.append(values)
            lines.append(lineno)
    return np.array(rows, dtype=float).reshape(-1, len(header)), lines


def _order_rows(path, data, lines):
    """Drop exact duplicate rows; reject any other non-increasing time."""
    keep = np.ones(len(data), dtype=bool)
    for k in range(1, len(data)):
        prev = k - 1
        while not keep[prev]:
            prev -= 1
        if data[k, 0] > data[prev, 0]:
            continue
        if data[k, 0] == data[prev, 0] and np.array_equal(data[k], data[prev]):
            keep[k] = False
            continue
        raise ParseError(path, lines[k],
                         f"timestamp {data[k, 0]!r} does not increase "
                         f"(previous {data[prev, 0]!r})")
    return data[keep]


def write_imu(stream, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(IMU_HEADER) + "\n")
        for k in range(len(stream)):
            row = [stream.t[k], *stream.gyro[k], *stream.accel[k]]
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _quaternions(traj):
    # reuse parsed quaternions while the matrices are untouched, so text round-trips exactly
    src = getattr(traj, "_source_quat", None)
    if src is not None and np.array_equal(src[1], traj.rotations):
        return src[0]
    return _SciRotation.from_matrix(traj.rotations).as_quat() if len(traj) else []


def write_trajectory(traj, path):
    quats = _quaternions(traj)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(TRAJECTORY_HEADER) + "\n")
        for k in range(len(traj)):
            row = [traj.t[k], *traj.positions[k], *quats[k]]
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def load_imu(path, format="canonical"):
    path = resolve_path(path)
    if format == "canonical":
        data, lines = _read_canonical(path, IMU_HEADER)
    elif format == "kitti_oxts":
        data, lines = _read_kitti_oxts(path)
    elif format == "oxford_io":
        data, lines = _read_oxford_imu(path)
    else:
        raise ValueError(f"unknown IMU format {format!r}; expected one of {IMU_FORMATS}")
    data = _order_rows(path, data, lines)
    return ImuStream(data[:, 0], data[:, 1:4], data[:, 4:7])


def _read_kitti_oxts(path):
    path = Path(path)
    stamps_file = path / "timestamps.txt"
    data_dir = path / "data"
    if not stamps_file.is_file() or not data_dir.is_dir():
        raise ParseError(path, 0, "expected timestamps.txt and data/ in OXTS directory")
    stamps = [s.strip() for s in stamps_file.read_text(encoding="utf-8").splitlines() if s.strip()]
    try:
        ns = np.array([np.datetime64(s.replace(" ", "T"), "ns").astype(np.int64) for s in stamps])
    except ValueError as exc:
        raise ParseError(stamps_file, 0, f"bad timestamp ({exc})") from None
    files = sorted(data_dir.glob("*.txt"))
    if len(files) != len(ns):
        raise ParseError(path, 0, f"{len(files)} OXTS records but {len(ns)} timestamps")
    rows = []
    for k, f in enumerate(files):
        fields = f.read_text(encoding="utf-8").split()
        values = _parse_floats(f, 1, fields, 30)
        rows.append([(ns[k] - ns[0]) * 1e-9, *values[_OXTS_GYRO], *values[_OXTS_ACCEL]])
    return np.array(rows, dtype=float).reshape(-1, 7), list(range(1, len(rows) + 1))


def _read_oxford_imu(path):
    rows, lines = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields:
                continue
            if len(fields) < 13:
                raise ParseError(path, lineno, f"expected at least 13 columns, got {len(fields)}")
            v = _parse_floats(path, lineno, fields[:13])
            grav = np.array(v[7:10])
            user = np.array(v[10:13])
            accel = -(grav + user) * STANDARD_GRAVITY
            rows.append([v[0], *v[4:7], *accel])
            lines.append(lineno)
    return np.array(rows, dtype=float).reshape(-1, 7), lines


def load_trajectory(path, format="canonical", rate=10.0):
    path = resolve_path(path)
    if format == "canonical":
        data, lines = _read_canonical(path, TRAJECTORY_HEADER)
        data = _order_rows(path, data, lines)
        return _trajectory_from_quat_rows(path, data, lines)
    if format == "kitti_poses":
        return _read_kitti_poses(path, rate)
    if format == "oxford_vicon":
        rows, lines = [], []
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, fields in enumerate(csv.reader(fh), start=1):
                if not fields:
                    continue
                v = _parse_floats(path, lineno, fields, 9)
                rows.append([v[0], *v[2:9]])
                lines.append(lineno)
        data = _order_rows(path, np.array(rows).reshape(-1, 8), lines)
        return _trajectory_from_quat_rows(path, data, lines, normalize=True)
    raise ValueError(f"unknown trajectory format {format!r}; expected one of {TRAJECTORY_FORMATS}")


def _trajectory_from_quat_rows(path, data, lines, normalize=False):
    q = data[:, 4:8]
    norms = np.linalg.norm(q, axis=1)
    if not normalize:
        bad = np.nonzero(np.abs(norms - 1.0) > 1e-6)[0]
        if bad.size:
            raise ParseError(path, lines[bad[0]], f"quaternion norm {norms[bad[0]]!r} is not 1")
    R = _SciRotation.from_quat(q).as_matrix() if len(q) else np.zeros((0, 3, 3))
    traj = Trajectory(data[:, 0], R, data[:, 1:4])
    if not normalize:
        traj._source_quat = (q.copy(), traj.rotations.copy())
    return traj


def _read_kitti_poses(path, rate):
    path = Path(path)
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rows.append(_parse_floats(path, lineno, line.split(), 12))
    M = np.array(rows, dtype=float).reshape(-1, 3, 4)
    times_file = path.parent / "times.txt"
    if times_file.is_file():
        t = np.array([float(x) for x in times_file.read_text(encoding="utf-8").split()])
        if len(t) != len(M):
            raise ParseError(times_file, 0, f"{len(t)} times for {len(M)} poses")
    else:
        t = np.arange(len(M)) / rate
    return Trajectory(t, M[:, :, :3], M[:, :, 3])


def resample_uniform(stream, rate):
    """Linear resampling of an irregular stream onto a ``1/rate`` grid."""
    t0, t1 = stream.t[0], stream.t[-1]
    n = int(math.floor((t1 - t0) * rate + 1e-9)) + 1
    t = t0 + np.arange(n) / rate
    gyro = np.column_stack([np.interp(t, stream.t, stream.gyro[:, i]) for i in range(3)])
    accel = np.column_stack([np.interp(t, stream.t, stream.accel[:, i]) for i in range(3)])
    return ImuStream(t, gyro, accel)


def interpolate_pose(traj, t):
    """Pose at ``t``; see :meth:`Trajectory.interpolate`."""
    return traj.interpolate(t)


def make_labels(traj, step_times):
    """Relative ground-truth transforms between consecutive step times."""
    poses = [traj.interpolate(t).transform for t in step_times]
    return [OdometryLabel(a.inverse() @ b, float(ti), float(tj))
            for a, b, ti, tj in zip(poses[:-1], poses[1:], step_times[:-1], step_times[1:])]


def export_features(windows, labels, path):
    """Write windows to the feature CSV, one row per (window, step).

    ``labels[s]`` is the ground truth for global step ``s`` (step ``m`` of a
    window starting at sample ``i`` is global step ``i // step + m``), so a
    list of ``n_windows + steps_per_window - 1`` labels covers every row.
    Returns the number of rows written.
    """
    windows = list(windows)
    labels = list(labels)
    n_steps = 0
    if windows:
        step = windows[0].features[0].n_samples
        n_steps = windows[-1].start_index // step + len(windows[-1].features)
    if len(labels) != n_steps:
        raise ValueError(f"{len(labels)} labels supplied for {n_steps} distinct features")
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(FEATURE_HEADER) + "\n")
        for w_id, win in enumerate(windows):
            base = win.start_index // step
            for m, f in enumerate(win.features):
                twist = labels[base + m].twist
                row = [*f.as_vector(), f.dt_ij, *twist]
                fh.write(f"{w_id},{m}," + ",".join(_fmt(x) for x in row) + "\n")
                count += 1
    return count


@dataclass
class FeatureTable:
    window_id: np.ndarray
    step_id: np.ndarray
    features: np.ndarray  # (N, 9): rotvec, dv, dp
    dt: np.ndarray
    label_twist: np.ndarray  # (N, 6): rho, theta


def load_features(path):
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FEATURE_HEADER:
            raise ParseError(path, 1, "unexpected feature header")
        for fields in reader:
            rows.append(_parse_floats(path, reader.line_num, fields, len(FEATURE_HEADER)))
    data = np.array(rows, dtype=float).reshape(-1, len(FEATURE_HEADER))
    return FeatureTable(data[:, 0].astype(int), data[:, 1].astype(int),
                        data[:, 2:11], data[:, 11], data[:, 12:18])


def _rotations_at(traj, times):
    if len(traj) == 1:
        return np.repeat(traj.rotations[:1], len(times), axis=0)
    slerp = Slerp(traj.t, _SciRotation.from_matrix(traj.rotations))
    return slerp(times).as_matrix()


def dynamic_acceleration(stream, traj, g=GRAVITY):
    """World-frame acceleration ``R a_meas + g`` at every sample time."""
    t0, t1 = traj.span
    if len(stream) and (stream.t[0] < t0 or stream.t[-1] > t1):
        raise ValueError(f"IMU span [{stream.t[0]!r}, {stream.t[-1]!r}] "
                         f"is out of range of trajectory span [{t0!r}, {t1!r}]")
    R = _rotations_at(traj, stream.t)
    return np.einsum("nij,nj->ni", R, stream.accel) + np.asarray(g, dtype=float)


def acceleration_cdf(stream, traj, g=GRAVITY, n_thresholds=100, max_threshold=None,
                     zero_tol=1e-9):
    """Empirical CDF of dynamic-acceleration magnitude.

    Returns an ``(n_thresholds, 2)`` array of ``(threshold, fraction <= threshold)``
    on an even grid from 0 to ``max_threshold`` (default: the largest
    magnitude). Magnitudes below ``zero_tol`` count as exactly zero.
    """
    mags = np.linalg.norm(dynamic_acceleration(stream, traj, g), axis=1)
    mags[mags < zero_tol] = 0.0
    top = float(mags.max()) if max_threshold is None else float(max_threshold)
    thresholds = np.linspace(0.0, top, n_thresholds)
    sorted_mags = np.sort(mags)
    frac = np.searchsorted(sorted_mags, thresholds, side="right") / len(mags)
    return np.column_stack([thresholds, frac])


def acceleration_percentile(stream, traj, q=90.0, g=GRAVITY):
    mags = np.linalg.norm(dynamic_acceleration(stream, traj, g), axis=1)
    return float(np.percentile(mags, q))


def write_cdf(cdf, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("threshold,fraction\n")
        for thr, frac in cdf:
            fh.write(f"{_fmt(thr)},{_fmt(frac)}\n")


def load_split_manifest(path=None):
    """Train/test sequence lists; defaults to the bundled KITTI split."""
    if path is None:
        path = Path(__file__).with_name("data") / "kitti_split.json"
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    unknown = set(manifest) - {"dataset", "train", "test"}
    if unknown:
        raise ValueError(f"unknown manifest keys: {sorted(unknown)}")
    if set(manifest["train"]) & set(manifest["test"]):
        raise ValueError("train and test sequences overlap")
    return manifest


__all__ = [
    "ParseError", "OdometryLabel", "FeatureTable", "load_imu", "load_trajectory",
    "write_imu", "write_trajectory", "resample_uniform", "interpolate_pose",
    "make_labels", "export_features", "load_features", "acceleration_cdf",
    "acceleration_percentile", "dynamic_acceleration", "write_cdf",
    "load_split_manifest", "resolve_path",
]
