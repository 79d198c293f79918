#!/usr/bin/env python3
"""Builds the miniature SHD-format HDF5 fixtures plus an expected-values
sidecar computed independently of the converter (counts, truncated ticks).

Run from this directory: python3 make_fixtures.py
"""

import json

import h5py
import numpy as np

rng = np.random.default_rng(20240817)
NUM_SAMPLES = 20
vlen_f64 = h5py.special_dtype(vlen=np.dtype("float64"))
vlen_u16 = h5py.special_dtype(vlen=np.dtype("uint16"))


def build(path, samples):
    with h5py.File(path, "w") as f:
        g = f.create_group("spikes")
        dt = g.create_dataset("times", (len(samples),), dtype=vlen_f64)
        du = g.create_dataset("units", (len(samples),), dtype=vlen_u16)
        for i, (t, u, _) in enumerate(samples):
            dt[i] = t
            du[i] = u
        f.create_dataset("labels", data=np.array([s[2] for s in samples], dtype=np.int64))


samples = []
for i in range(NUM_SAMPLES):
    if i == 5:
        count = 0  # a silent sample must still convert
    else:
        count = int(rng.integers(30, 120))
    times = np.sort(rng.uniform(0.0, 1.0, size=count))
    units = rng.integers(0, 700, size=count).astype(np.uint16)
    samples.append((times, units, i % 20))
build("shd_mini.h5", samples)

expected = {
    "num_samples": NUM_SAMPLES,
    "counts": [len(t) for t, _, _ in samples],
    "labels": [label for _, _, label in samples],
    "total_events": int(sum(len(t) for t, _, _ in samples)),
    "sample0_first_events": [
        # independent truncation oracle: seconds -> microsecond ticks
        {"tick": int(np.floor(t * 1e6)), "channel": int(c)}
        for t, c in zip(samples[0][0][:3], samples[0][1][:3])
    ],
    "max_unit": int(max(u.max() for t, u, _ in samples if len(u))),
}
with open("expected.json", "w") as fh:
    json.dump(expected, fh, indent=2)

# one out-of-range unit index
bad = [(np.array([0.1, 0.2]), np.array([3, 700], dtype=np.uint16), 0)]
build("shd_bad_unit.h5", bad)

# upstream schema violation: no labels dataset
with h5py.File("shd_missing_labels.h5", "w") as f:
    g = f.create_group("spikes")
    g.create_dataset("times", (1,), dtype=vlen_f64)
    g.create_dataset("units", (1,), dtype=vlen_u16)

print("fixtures written")
