"""Synthetic desk-scale tasks: timing-only classification and pattern association.

The classification task makes spike timing the only usable cue. Spikes arrive
as volleys on fixed channel groups; a volley is either synchronous (the whole
group in one step) or dispersed (the same spikes spread over a short window).
Which volley slots are synchronous defines the class, so per-channel spike
counts are exactly class-independent: classes share firing rates and differ
only in spike timing.
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError


def _class_patterns(num_classes: int, slots: int, rng: np.random.Generator) -> np.ndarray:
    """Balanced sync/disperse patterns per class, half the slots synchronous."""
    half = slots // 2
    alternating = np.array([1, 0] * half + [1] * (slots - 2 * half), dtype=bool)
    fixed = [
        alternating,
        np.roll(alternating, 1),
        np.concatenate([np.ones(half, bool), np.zeros(slots - half, bool)]),
        np.concatenate([np.zeros(slots - half, bool), np.ones(half, bool)]),
    ]
    patterns = [fixed[c] for c in range(min(num_classes, 4))]
    seen = {p.tobytes() for p in patterns}
    while len(patterns) < num_classes:
        candidate = np.zeros(slots, dtype=bool)
        candidate[rng.choice(slots, size=half, replace=False)] = True
        if candidate.tobytes() not in seen:
            seen.add(candidate.tobytes())
            patterns.append(candidate)
    return np.stack(patterns)


def make_timing_classification(
    num_classes: int = 4,
    channels: int = 64,
    num_steps: int = 100,
    train_per_class: int = 100,
    test_per_class: int = 50,
    slots: int = 10,
    spread: int = 8,
    jitter: int = 1,
    seed: int = 0,
):
    """Build (train_x, train_y, test_x, test_y) for the timing task.

    Channels split into `num_classes` groups; `slots` volley slots cycle
    through the groups at evenly spaced times. Per class, half the slots fire
    synchronously and the rest disperse over `spread` steps; slot times
    jitter by up to `jitter` steps per sample.
    """
    if num_classes < 2 or num_steps < 4:
        raise ArgumentError("need >= 2 classes and >= 4 steps")
    if channels < num_classes or slots < num_classes:
        raise ArgumentError("need at least one channel and one slot per class")
    if num_steps < spread + 12:
        raise ArgumentError("num_steps too small for the volley schedule")
    rng = np.random.default_rng(seed)
    group_size = channels // num_classes
    groups = rng.permutation(channels)[: group_size * num_classes]
    groups = groups.reshape(num_classes, group_size)
    slot_times = np.linspace(5, num_steps - spread - 2, slots).astype(int)
    slot_group = np.arange(slots) % num_classes
    patterns = _class_patterns(num_classes, slots, rng)

    def render(label: int, gen: np.random.Generator) -> np.ndarray:
        frames = np.zeros((num_steps, channels))
        for j in range(slots):
            t = int(np.clip(slot_times[j] + gen.integers(-jitter, jitter + 1),
                            0, num_steps - spread - 1))
            chs = groups[slot_group[j]]
            if patterns[label, j]:
                frames[t, chs] = 1.0
            else:
                offsets = gen.integers(0, spread, size=group_size)
                frames[t + offsets, chs] = 1.0
        return frames

    def build(per_class: int):
        x = np.zeros((per_class * num_classes, num_steps, channels))
        y = np.zeros(per_class * num_classes, dtype=np.int64)
        i = 0
        for label in range(num_classes):
            for _ in range(per_class):
                x[i] = render(label, rng)
                y[i] = label
                i += 1
        return x, y

    train_x, train_y = build(train_per_class)
    test_x, test_y = build(test_per_class)
    return train_x, train_y, test_x, test_y


def make_association_pairs(
    num_pairs: int = 20,
    in_trains: int = 64,
    out_trains: int = 32,
    num_steps: int = 100,
    in_rate: float = 0.06,
    target_rate: float = 0.05,
    seed: int = 0,
):
    """Random input patterns paired with random target rasters.

    Returns (inputs [N,T,in_trains], targets [N,T,out_trains]), both binary.
    """
    if num_pairs < 1:
        raise ArgumentError("need at least one pair")
    rng = np.random.default_rng(seed)
    inputs = (rng.random((num_pairs, num_steps, in_trains)) < in_rate).astype(np.float64)
    targets = (rng.random((num_pairs, num_steps, out_trains)) < target_rate).astype(np.float64)
    return inputs, targets


def poisson_spike_steps(rate: float, num_steps: int, rng: np.random.Generator) -> np.ndarray:
    """Step indices of a Bernoulli-per-bin spike train."""
    return np.nonzero(rng.random(num_steps) < rate)[0]
