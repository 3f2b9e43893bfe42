"""Command-line front end: ``pifeat {simulate,extract,evaluate,compare,cdf}``.

Every option can also come from a JSON file passed with ``--config``;
command-line flags override the file, which overrides the defaults. Exit
status is 0 on success, 2 for usage/validation errors and 3 for I/O errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import dataset_io, evaluation, oracle
from .imu import NoiseSpec, corrupt, simulate_trajectory
from .preintegration import METHODS, preintegrate, window_features
from .states import GRAVITY, ImuStream, PoseState

log = logging.getLogger("pifeat")

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3

DEFAULTS = {
    "simulate": {
        "preset": "stationary", "duration": 10.0, "rate": 100.0, "seed": 0,
        "speed": 2.0, "yaw_rate": 0.5,
        "gyro_noise": 0.0, "accel_noise": 0.0, "gyro_walk": 0.0, "accel_walk": 0.0,
        "out_imu": "imu.csv", "out_traj": "traj.csv",
    },
    "extract": {
        "imu": None, "gt": None, "format": "canonical", "gt_format": "canonical",
        "method": "forster", "window": 200, "step": 10, "out": "features.csv",
    },
    "evaluate": {
        "pred": None, "gt": None, "format": "canonical", "metric": "kitti",
        "lengths": list(evaluation.KITTI_LENGTHS), "batch": 200, "samples_per_pose": 1,
        "name": "pred", "seq": "seq", "out": None,
    },
    "compare": {
        "imu": None, "format": "canonical", "preset": "dynamic", "seed": 0,
        "dts": [0.04, 0.02, 0.01, 0.005], "horizon": 0.2, "substeps": 10_000,
        "out": None,
    },
    "cdf": {
        "imu": None, "gt": None, "format": "canonical", "gt_format": "canonical",
        "thresholds": 100, "out": "cdf.csv",
    },
}
REQUIRED = {"extract": ("imu", "gt"), "evaluate": ("pred", "gt"), "cdf": ("imu", "gt")}


class UsageError(ValueError):
    pass


def _float_list(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def build_parser():
    parser = argparse.ArgumentParser(prog="pifeat", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def common(p):
        p.add_argument("--config", help="JSON file with option values")
        return p

    p = common(sub.add_parser("simulate", help="synthesize IMU + ground-truth CSVs"))
    p.add_argument("--preset", choices=["stationary", "circle", "dynamic"], default=S)
    p.add_argument("--duration", type=float, default=S)
    p.add_argument("--rate", type=float, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--speed", type=float, default=S, help="circle preset speed (m/s)")
    p.add_argument("--yaw-rate", dest="yaw_rate", type=float, default=S)
    p.add_argument("--gyro-noise", dest="gyro_noise", type=float, default=S)
    p.add_argument("--accel-noise", dest="accel_noise", type=float, default=S)
    p.add_argument("--gyro-walk", dest="gyro_walk", type=float, default=S)
    p.add_argument("--accel-walk", dest="accel_walk", type=float, default=S)
    p.add_argument("--out-imu", dest="out_imu", default=S)
    p.add_argument("--out-traj", dest="out_traj", default=S)

    p = common(sub.add_parser("extract", help="windowed PI features + labels to CSV"))
    p.add_argument("--imu", default=S)
    p.add_argument("--gt", default=S)
    p.add_argument("--format", choices=dataset_io.IMU_FORMATS, default=S)
    p.add_argument("--gt-format", dest="gt_format", choices=dataset_io.TRAJECTORY_FORMATS, default=S)
    p.add_argument("--method", choices=METHODS, default=S)
    p.add_argument("--window", type=int, default=S)
    p.add_argument("--step", type=int, default=S)
    p.add_argument("--out", default=S)

    p = common(sub.add_parser("evaluate", help="KITTI or normalized-displacement metrics"))
    p.add_argument("--pred", default=S)
    p.add_argument("--gt", default=S)
    p.add_argument("--format", choices=dataset_io.TRAJECTORY_FORMATS, default=S)
    p.add_argument("--metric", choices=["kitti", "displacement"], default=S)
    p.add_argument("--lengths", type=_float_list, default=S)
    p.add_argument("--batch", type=int, default=S)
    p.add_argument("--samples-per-pose", dest="samples_per_pose", type=int, default=S)
    p.add_argument("--name", default=S, help="method column label")
    p.add_argument("--seq", default=S, help="sequence row label")
    p.add_argument("--out", default=S)

    p = common(sub.add_parser("compare", help="Forster vs accurate PI against the oracle"))
    p.add_argument("--imu", default=S)
    p.add_argument("--format", choices=dataset_io.IMU_FORMATS, default=S)
    p.add_argument("--preset", choices=["zero-rotation", "circle", "dynamic"], default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--dts", type=_float_list, default=S)
    p.add_argument("--horizon", type=float, default=S)
    p.add_argument("--substeps", type=int, default=S)
    p.add_argument("--out", default=S)

    p = common(sub.add_parser("cdf", help="CDF of dynamic acceleration magnitude"))
    p.add_argument("--imu", default=S)
    p.add_argument("--gt", default=S)
    p.add_argument("--format", choices=dataset_io.IMU_FORMATS, default=S)
    p.add_argument("--gt-format", dest="gt_format", choices=dataset_io.TRAJECTORY_FORMATS, default=S)
    p.add_argument("--thresholds", type=int, default=S)
    p.add_argument("--out", default=S)
    return parser


def resolve_config(command, args):
    """Merge defaults < config file < flags and validate before any I/O."""
    cfg = dict(DEFAULTS[command])
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                from_file = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(from_file, dict):
            raise UsageError(f"{args.config}: expected a JSON object")
        unknown = sorted(set(from_file) - set(cfg))
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
        cfg.update(from_file)
    cfg.update(flags)
    for key in REQUIRED.get(command, ()):
        if cfg.get(key) is None:
            raise UsageError(f"--{key.replace('_', '-')} is required")
    _validate(command, cfg)
    return cfg


def _validate(command, cfg):
    if command in ("simulate",):
        if cfg["rate"] <= 0 or cfg["duration"] <= 0:
            raise UsageError("rate and duration must be positive")
    if command == "extract":
        if cfg["method"] not in METHODS:
            raise UsageError(f"method must be one of {METHODS}")
        if cfg["window"] <= 0 or cfg["step"] <= 0 or cfg["window"] % cfg["step"]:
            raise UsageError("window must be a positive multiple of step")
    if command == "evaluate":
        if cfg["metric"] not in ("kitti", "displacement"):
            raise UsageError("metric must be kitti or displacement")
        if not cfg["lengths"] or min(cfg["lengths"]) <= 0:
            raise UsageError("lengths must be positive")
    if command == "compare":
        if not cfg["dts"] or min(cfg["dts"]) <= 0 or cfg["horizon"] <= 0 or cfg["substeps"] < 1:
            raise UsageError("dts, horizon and substeps must be positive")
    if command == "cdf" and cfg["thresholds"] < 2:
        raise UsageError("need at least 2 thresholds")


# --- simulate ------------------------------------------------------------

def preset_segments(cfg):
    """``(segments, initial_state)`` for a simulation preset."""
    duration = cfg["duration"]
    if cfg["preset"] == "stationary":
        return [(duration, np.zeros(3), np.zeros(3))], PoseState(0.0)
    if cfg["preset"] == "circle":
        w, s = cfg["yaw_rate"], cfg["speed"]
        initial = PoseState(0.0, velocity=np.array([0.0, s, 0.0]))
        return [(duration, np.array([0.0, 0.0, w]), np.array([-w * s, 0.0, 0.0]))], initial
    rng = np.random.default_rng(cfg["seed"])
    n = max(1, int(np.ceil(duration)))
    seg = duration / n
    segments = [(seg, rng.normal(0.0, 1.0, 3), rng.normal(0.0, 2.0, 3)) for _ in range(n)]
    return segments, PoseState(0.0)


def cmd_simulate(cfg):
    segments, initial = preset_segments(cfg)
    traj, stream = simulate_trajectory(segments, initial, cfg["rate"])
    noise = NoiseSpec(cfg["gyro_noise"], cfg["accel_noise"], cfg["gyro_walk"],
                      cfg["accel_walk"], seed=cfg["seed"])
    stream = corrupt(stream, noise)
    dataset_io.write_imu(stream, cfg["out_imu"])
    dataset_io.write_trajectory(traj, cfg["out_traj"])
    print(f"wrote {len(stream)} IMU samples to {cfg['out_imu']} and "
          f"{len(traj)} poses to {cfg['out_traj']}")
    return EXIT_OK


# --- extract -------------------------------------------------------------

def _uniform(stream):
    dt = float(np.median(np.diff(stream.t)))
    if np.max(np.abs(np.diff(stream.t) - dt)) > 1e-6:
        log.warning("non-uniform timestamps; resampling to %.6g Hz", 1.0 / dt)
        stream = dataset_io.resample_uniform(stream, 1.0 / dt)
    return stream, dt


def cmd_extract(cfg):
    stream = dataset_io.load_imu(cfg["imu"], cfg["format"])
    gt = dataset_io.load_trajectory(cfg["gt"], cfg["gt_format"])
    window, step = cfg["window"], cfg["step"]
    if len(stream) < window:
        log.warning("stream has %d samples, fewer than one window of %d", len(stream), window)
        dataset_io.export_features([], [], cfg["out"])
        print("windows: 0, features: 0")
        return EXIT_OK
    stream, dt = _uniform(stream)
    windows = list(window_features(stream, window, step, cfg["method"], dt))
    n_steps = windows[-1].start_index // step + len(windows[-1].features)
    step_times = [stream.t[0] + s * step * dt for s in range(n_steps + 1)]
    labels = dataset_io.make_labels(gt, step_times)
    rows = dataset_io.export_features(windows, labels, cfg["out"])
    print(f"windows: {len(windows)}, features: {n_steps}, rows: {rows}")
    return EXIT_OK


# --- evaluate ------------------------------------------------------------

def cmd_evaluate(cfg):
    pred = dataset_io.load_trajectory(cfg["pred"], cfg["format"])
    gt = dataset_io.load_trajectory(cfg["gt"], cfg["format"])
    if len(pred) != len(gt) or not np.allclose(pred.t, gt.t, atol=1e-6):
        raise UsageError(f"prediction ({len(pred)} poses) and ground truth "
                         f"({len(gt)} poses) are not time-aligned")
    if cfg["metric"] == "kitti":
        report = evaluation.kitti_relative_errors(pred, gt, cfg["lengths"])
        if report.too_short:
            log.warning("trajectory shorter than %g m; no sub-sequences", min(cfg["lengths"]))
        header, rows = evaluation.kitti_table({cfg["name"]: {cfg["seq"]: report}})
    else:
        report = evaluation.normalized_displacement_error(
            pred, gt, cfg["batch"], cfg["samples_per_pose"])
        header, rows = evaluation.displacement_table({cfg["name"]: {cfg["seq"]: report}})
    print(evaluation.format_table(header, rows, digits=4))
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            fh.write(evaluation.table_csv(header, rows))
    return EXIT_OK


# --- compare -------------------------------------------------------------

def _compare_signals(cfg):
    if cfg["imu"]:
        stream = dataset_io.load_imu(cfg["imu"], cfg["format"])
        return stream.gyro, stream.accel
    preset = cfg["preset"]
    if preset == "zero-rotation":
        return np.zeros((1, 3)), np.array([[1.0, -0.5, 9.80665]])
    if preset == "circle":
        return np.array([[0.0, 0.0, 0.5]]), np.array([[-1.0, 0.0, 9.80665]])
    rng = np.random.default_rng(cfg["seed"])
    w = rng.normal(size=3)
    w *= 3.0 / np.linalg.norm(w)
    return w[None, :], rng.normal(0.0, 3.0, (1, 3))


def compare_methods(gyro, accel, dts, horizon, substeps):
    """Per-``dt`` discrepancy of both PI formulations against the oracle.

    Signals are held per sample (zero-order hold); with a single row the
    signal is constant. Rows are ``(dt, forster_dp, accurate_dp, forster_dv,
    accurate_dv)`` with absolute Euclidean norms over a fixed ``horizon``.
    """
    rows = []
    for dt in dts:
        n = max(1, int(round(horizon / dt)))
        idx = np.arange(n) % len(gyro) if len(gyro) < n else np.arange(n)
        batch = ImuStream(np.arange(n) * dt, gyro[idx], accel[idx])
        _, v_ref, p_ref = oracle.reference_deltas(batch, dt, substeps)
        f = preintegrate(batch, dt, "forster")
        a = preintegrate(batch, dt, "accurate")
        rows.append((dt,
                     float(np.linalg.norm(f.delta_p - p_ref)),
                     float(np.linalg.norm(a.delta_p - p_ref)),
                     float(np.linalg.norm(f.delta_v - v_ref)),
                     float(np.linalg.norm(a.delta_v - v_ref))))
    return rows


def cmd_compare(cfg):
    gyro, accel = _compare_signals(cfg)
    rows = compare_methods(gyro, accel, cfg["dts"], cfg["horizon"], cfg["substeps"])
    lines = ["dt,forster_dp,accurate_dp,forster_dv,accurate_dv"]
    lines += [",".join(repr(float(x)) for x in r) for r in rows]
    text = "\n".join(lines) + "\n"
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK


# --- cdf -----------------------------------------------------------------

def cmd_cdf(cfg):
    stream = dataset_io.load_imu(cfg["imu"], cfg["format"])
    gt = dataset_io.load_trajectory(cfg["gt"], cfg["gt_format"])
    cdf = dataset_io.acceleration_cdf(stream, gt, GRAVITY, cfg["thresholds"])
    dataset_io.write_cdf(cdf, cfg["out"])
    p90 = dataset_io.acceleration_percentile(stream, gt, 90.0)
    print(f"90th percentile: {p90:.4f} m/s^2, max: {cdf[-1, 0]:.4f} m/s^2")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "extract": cmd_extract, "evaluate": cmd_evaluate,
            "compare": cmd_compare, "cdf": cmd_cdf}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(args.command, args)
        return COMMANDS[args.command](cfg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
