"""
Sliding windows, labels and export
==================================

Windows of 200 samples slide by 10; each holds 20 step features and each
step is paired with the ground-truth relative pose over the same interval.
"""

import tempfile
from pathlib import Path

import numpy as np

from pifeat import PoseState, simulate_trajectory, window_features
from pifeat.dataset_io import export_features, load_features, make_labels

rng = np.random.default_rng(2)
segments = [(1.0, rng.normal(0, 0.4, 3), rng.normal(0, 1.0, 3)) for _ in range(3)]
traj, stream = simulate_trajectory(segments, PoseState(0.0), 100.0)

windows = list(window_features(stream, window=200, step=10, method="accurate"))
print(len(windows), "windows of", len(windows[0]), "features")

# neighbouring windows share 19 of their 20 features
print(windows[0].features[1] is windows[1].features[0])

n_steps = windows[-1].start_index // 10 + 20
labels = make_labels(traj, np.arange(n_steps + 1) * 0.1)

out = Path(tempfile.mkdtemp()) / "features.csv"
rows = export_features(windows, labels, out)
table = load_features(out)
print(rows, "rows; first feature vector:", table.features[0])
