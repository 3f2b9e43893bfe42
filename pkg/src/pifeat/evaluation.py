"""Trajectory metrics and the geodesic training loss.

* KITTI relative errors: translation (%) and rotation (deg/m) averaged over
  every sub-sequence of 100..800 m of ground-truth path length.
* Normalized displacement error over fixed-size batches.
* Geodesic residual ``log(label^-1 exp(xi))`` and its Mahalanobis-weighted
  sum, with the weight taken from the empirical twist covariance.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .lie import RENORM_EVERY, normalize_rotation, se3_exp, se3_log
from .states import Trajectory

KITTI_LENGTHS = (100, 200, 300, 400, 500, 600, 700, 800)


def integrate_predictions(start, deltas):
    """Chain relative transforms ``T_k = T_{k-1} dT_k`` from ``start``.

    ``deltas`` are :class:`~pifeat.dataset_io.OdometryLabel`-like objects
    (``delta_T``, ``t_j``). The first pose of the result is ``start``.
    """
    R = np.asarray(start.rotation, dtype=float)
    p = np.asarray(start.position, dtype=float)
    t = [start.t]
    rots = [R]
    pos = [p]
    for k, d in enumerate(deltas, start=1):
        dT = d.delta_T
        p = R @ dT.translation + p
        R = R @ dT.rotation
        if k % RENORM_EVERY == 0:
            R = normalize_rotation(R)
        t.append(d.t_j)
        rots.append(R)
        pos.append(p)
    return Trajectory(t, rots, pos)


def _rotation_angles(R):
    cos = 0.5 * (np.trace(R, axis1=-2, axis2=-1) - 1.0)
    w = 0.5 * np.stack([R[..., 2, 1] - R[..., 1, 2],
                        R[..., 0, 2] - R[..., 2, 0],
                        R[..., 1, 0] - R[..., 0, 1]], axis=-1)
    return np.arctan2(np.linalg.norm(w, axis=-1), np.clip(cos, -1.0, 1.0))


def _relative(rots, pos, i, j):
    """Batched ``T_i^-1 T_j`` for index arrays ``i``, ``j``."""
    Ri_t = np.swapaxes(rots[i], -1, -2)
    R = Ri_t @ rots[j]
    p = np.einsum("nij,nj->ni", Ri_t, pos[j] - pos[i])
    return R, p


def path_lengths(traj):
    steps = np.linalg.norm(np.diff(traj.positions, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def _check_aligned(pred, gt):
    if len(pred) != len(gt):
        raise ValueError(f"trajectories are not aligned: {len(pred)} vs {len(gt)} poses")


@dataclass
class RelErrorReport:
    """``t_rel`` in percent and ``r_rel`` in deg/m.

    ``details`` rows are ``(start_frame, length_m, t_err_pct, r_err_deg_per_m)``.
    """

    t_rel: float
    r_rel: float
    details: np.ndarray = field(repr=False)
    too_short: bool = False

    @property
    def n_segments(self):
        return len(self.details)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["start_frame", "length_m", "t_err (%)", "r_err (deg/m)"])
            for row in self.details:
                w.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2])),
                            repr(float(row[3]))])


def kitti_relative_errors(pred, gt, lengths=KITTI_LENGTHS, start_stride=1):
    """KITTI odometry relative errors of ``pred`` against ``gt``.

    For each start frame and length ``L`` the end frame is the first one
    whose accumulated ground-truth path length reaches ``L``; the error
    transform is ``(gt_i^-1 gt_j)^-1 (pred_i^-1 pred_j)``.
    """
    _check_aligned(pred, gt)
    dist = path_lengths(gt)
    starts = np.arange(0, len(gt), start_stride)
    chunks = []
    for L in lengths:
        j = np.searchsorted(dist, dist[starts] + L, side="left")
        ok = j < len(gt)
        if not np.any(ok):
            continue
        i, j = starts[ok], j[ok]
        Rg, pg = _relative(gt.rotations, gt.positions, i, j)
        Rp, pp = _relative(pred.rotations, pred.positions, i, j)
        Rg_t = np.swapaxes(Rg, -1, -2)
        RE = Rg_t @ Rp
        tE = np.einsum("nij,nj->ni", Rg_t, pp - pg)
        t_err = np.linalg.norm(tE, axis=1) / L * 100.0
        r_err = np.degrees(_rotation_angles(RE)) / L
        chunks.append(np.column_stack([i, np.full(i.shape, float(L)), t_err, r_err]))
    if not chunks:
        return RelErrorReport(0.0, 0.0, np.zeros((0, 4)), too_short=True)
    details = np.concatenate(chunks)
    details = details[np.lexsort((details[:, 1], details[:, 0]))]
    return RelErrorReport(float(details[:, 2].mean()), float(details[:, 3].mean()), details)


@dataclass
class DisplacementReport:
    percent: float
    batch_errors: np.ndarray = field(repr=False)
    skipped: int = 0

    def __float__(self):
        return self.percent


def normalized_displacement_error(pred, gt, batch=200, samples_per_pose=1,
                                  min_displacement=0.01):
    """Mean displacement error per batch, normalized by the true displacement.

    A batch covers ``batch`` IMU samples, i.e. ``batch // samples_per_pose``
    pose intervals. Batches whose true displacement is under
    ``min_displacement`` metres are skipped and counted.
    """
    _check_aligned(pred, gt)
    span = batch // samples_per_pose
    if span < 1 or batch % samples_per_pose:
        raise ValueError("batch must be a positive multiple of samples_per_pose")
    starts = np.arange(0, len(gt) - span, span)
    d_gt = gt.positions[starts + span] - gt.positions[starts]
    d_pred = pred.positions[starts + span] - pred.positions[starts]
    norm_gt = np.linalg.norm(d_gt, axis=1)
    keep = norm_gt >= min_displacement
    skipped = int(np.count_nonzero(~keep))
    if not np.any(keep):
        raise ValueError(f"metric undefined: all {skipped} batches have displacement "
                         f"below {min_displacement} m")
    errs = np.linalg.norm(d_pred[keep] - d_gt[keep], axis=1) / norm_gt[keep] * 100.0
    return DisplacementReport(float(errs.mean()), errs, skipped)


def geodesic_residual(label, prediction):
    """``log(label^-1 exp(prediction))`` as a twist ``[rho, theta]``."""
    return se3_log(label.inverse() @ se3_exp(prediction))


@dataclass(frozen=True)
class LossWeights:
    sigma_inv: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.sigma_inv, dtype=float)
        if W.shape != (6, 6):
            raise ValueError("loss weights must be 6x6")
        if np.max(np.abs(W - W.T)) > 1e-9 * max(1.0, np.max(np.abs(W))):
            raise ValueError("loss weights are not symmetric")
        if np.min(np.linalg.eigvalsh(0.5 * (W + W.T))) <= 0.0:
            raise ValueError("loss weights are not positive definite")
        object.__setattr__(self, "sigma_inv", W)

    @classmethod
    def identity(cls):
        return cls(np.eye(6))


def weighted_loss(residuals, weights):
    """Sum of ``phi^T W phi`` over the residuals."""
    if not isinstance(weights, LossWeights):
        weights = LossWeights(weights)
    Phi = np.asarray(residuals, dtype=float).reshape(-1, 6)
    return float(np.einsum("ni,ij,nj->", Phi, weights.sigma_inv, Phi))


def empirical_covariance(labels, eps=1e-8, max_condition=1e12):
    """Inverse of the (mean-removed, +eps I) covariance of label twists."""
    labels = list(labels)
    if len(labels) < 7:
        raise ValueError("need at least 7 labels to estimate a 6x6 covariance")
    X = np.array([se3_log(getattr(l, "delta_T", l)) for l in labels])
    X = X - X.mean(axis=0)
    sigma = X.T @ X / len(X) + eps * np.eye(6)
    sigma = 0.5 * (sigma + sigma.T)
    cond = np.linalg.cond(sigma)
    if cond > max_condition:
        raise ValueError(f"covariance condition number {cond:.3g} exceeds {max_condition:.0e}; "
                         "increase eps")
    inv = np.linalg.inv(sigma)
    return LossWeights(0.5 * (inv + inv.T))


def covariance_matrix(weights):
    return np.linalg.inv(weights.sigma_inv)


# --- report tables -------------------------------------------------------

def kitti_table(results, average_label="avg."):
    """Table with one row per sequence and a ``t_rel``/``r_rel`` pair per method.

    ``results`` maps method name -> {sequence: RelErrorReport}. Returns
    ``(header, rows)`` where the last row holds the per-column mean.
    """
    methods = list(results)
    seqs = list(dict.fromkeys(s for m in methods for s in results[m]))
    header = ["test seq."]
    for m in methods:
        header += [f"{m} t_rel (%)", f"{m} r_rel (deg/m)"]
    rows = []
    for s in seqs:
        row = [s]
        for m in methods:
            rep = results[m].get(s)
            row += [rep.t_rel, rep.r_rel] if rep is not None else [np.nan, np.nan]
        rows.append(row)
    if rows:
        cols = np.array([r[1:] for r in rows], dtype=float)
        rows.append([average_label, *np.nanmean(cols, axis=0)])
    return header, rows


def displacement_table(results, average_label="average"):
    """Table with one row per sequence and one normalized-error column per method."""
    methods = list(results)
    seqs = list(dict.fromkeys(s for m in methods for s in results[m]))
    header = ["Test seq."] + [f"{m} (%)" for m in methods]
    rows = []
    for s in seqs:
        row = [s]
        for m in methods:
            v = results[m].get(s)
            row.append(float(v) if v is not None else np.nan)
        rows.append(row)
    if rows:
        cols = np.array([r[1:] for r in rows], dtype=float)
        rows.append([average_label, *np.nanmean(cols, axis=0)])
    return header, rows


def format_table(header, rows, digits=3):
    cells = [header] + [[r[0]] + [f"{v:.{digits}f}" for v in r[1:]] for r in rows]
    widths = [max(len(str(c[i])) for c in cells) for i in range(len(header))]
    lines = []
    for n, c in enumerate(cells):
        lines.append(" | ".join(str(x).ljust(w) for x, w in zip(c, widths)))
        if n == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines)


def table_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([r[0]] + [repr(float(v)) for v in r[1:]])
    return buf.getvalue()


__all__ = [
    "KITTI_LENGTHS", "integrate_predictions", "kitti_relative_errors",
    "RelErrorReport", "normalized_displacement_error", "DisplacementReport",
    "geodesic_residual", "LossWeights", "weighted_loss", "empirical_covariance",
    "kitti_table", "displacement_table", "format_table", "table_csv", "path_lengths",
]
