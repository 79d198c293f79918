"""Training losses: rate-coded classification and kernelized spike-train distance.

Both losses return (value, dE/dO) with dE/dO shaped like the output frames;
the dependence of future outputs on present ones is the network's business,
the loss treats every O[t] as a free variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError


@dataclass(frozen=True)
class DistanceConfig:
    """Kernel constants of f[t] = exp(-t/tau_m) - exp(-t/tau_s).

    tau_m > tau_s > 0 keeps the kernel positive for t >= 1; f[0] is exactly 0,
    so the distance reacts to a spike one step after it happens.
    """

    tau_m: float = 4.0
    tau_s: float = 1.0

    def __post_init__(self):
        if not (self.tau_m > self.tau_s > 0):
            raise ArgumentError("need tau_m > tau_s > 0")

    @property
    def decay_m(self) -> float:
        return math.exp(-1.0 / self.tau_m)

    @property
    def decay_s(self) -> float:
        return math.exp(-1.0 / self.tau_s)


def distance_kernel(num_steps: int, cfg: DistanceConfig) -> np.ndarray:
    """f[t] sampled at t = 0 .. num_steps-1."""
    t = np.arange(num_steps, dtype=np.float64)
    return np.exp(-t / cfg.tau_m) - np.exp(-t / cfg.tau_s)


def filtered_trace(trains: np.ndarray, cfg: DistanceConfig) -> np.ndarray:
    """Causal convolution f * S via two first-order filter recursions.

    Works on any [..., T] array; O(T) per train.
    """
    trains = np.asarray(trains, dtype=np.float64)
    num_steps = trains.shape[-1]
    m = np.zeros(trains.shape[:-1])
    s = np.zeros(trains.shape[:-1])
    out = np.empty_like(trains)
    for t in range(num_steps):
        m = cfg.decay_m * m + trains[..., t]
        s = cfg.decay_s * s + trains[..., t]
        out[..., t] = m - s
    return out


def filtered_trace_direct(train: np.ndarray, cfg: DistanceConfig) -> np.ndarray:
    """O(T^2) direct convolution with the sampled kernel; test oracle."""
    train = np.asarray(train, dtype=np.float64)
    num_steps = train.shape[-1]
    kernel = distance_kernel(num_steps, cfg)
    return np.convolve(train, kernel)[:num_steps]


def van_rossum_distance(si: np.ndarray, sj: np.ndarray, cfg: DistanceConfig | None = None) -> float:
    """Kernelized distance (1/2T) * sum_t (f*Si - f*Sj)^2 between two trains."""
    cfg = cfg or DistanceConfig()
    si = np.asarray(si, dtype=np.float64)
    sj = np.asarray(sj, dtype=np.float64)
    if si.shape != sj.shape or si.ndim != 1:
        raise ArgumentError("spike trains must be 1-D and of equal length")
    num_steps = si.shape[0]
    if num_steps == 0:
        raise ArgumentError("spike trains must be non-empty")
    diff = filtered_trace(si, cfg) - filtered_trace(sj, cfg)
    return float(np.sum(diff * diff) / (2.0 * num_steps))


def van_rossum_distance_direct(si, sj, cfg: DistanceConfig | None = None) -> float:
    """Same distance via direct convolution; kept as an independent oracle."""
    cfg = cfg or DistanceConfig()
    si = np.asarray(si, dtype=np.float64)
    sj = np.asarray(sj, dtype=np.float64)
    if si.shape != sj.shape or si.ndim != 1:
        raise ArgumentError("spike trains must be 1-D and of equal length")
    diff = filtered_trace_direct(si, cfg) - filtered_trace_direct(sj, cfg)
    return float(np.sum(diff * diff) / (2.0 * si.shape[0]))


def rate_softmax_ce(output: np.ndarray, label: int):
    """Cross-entropy on softmax of per-class spike rates.

    output is [T x N]; returns (loss, dE/dO [T x N]) where every step of a
    class shares the same gradient (p_i - 1{i=label}) / T.
    """
    output = np.asarray(output, dtype=np.float64)
    if output.ndim != 2:
        raise ArgumentError("output frames must be [T x N]")
    num_steps, num_classes = output.shape
    if not 0 <= label < num_classes:
        raise ArgumentError(f"label {label} outside [0, {num_classes})")
    logits = output.sum(axis=0) / num_steps
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    p = exp / exp.sum()
    loss = -float(np.log(p[label]))
    grad_logits = p.copy()
    grad_logits[label] -= 1.0
    de_do = np.tile(grad_logits / num_steps, (num_steps, 1))
    return loss, de_do


def association_loss(outputs: np.ndarray, targets: np.ndarray, cfg: DistanceConfig | None = None):
    """Sum of kernel distances between each output train and its target.

    outputs/targets are [T x N] (or [B x T x N]); the gradient at time t is
    the reverse-time correlation of the trace residual with the kernel:
    dE/dO_i[t] = (1/T) * sum_{s>=t} f[s-t] * (trace_out_i[s] - trace_tgt_i[s]).
    """
    cfg = cfg or DistanceConfig()
    outputs = np.asarray(outputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if outputs.shape != targets.shape:
        raise ArgumentError(f"shape mismatch: outputs {outputs.shape} vs targets {targets.shape}")
    if outputs.ndim not in (2, 3):
        raise ArgumentError("frames must be [T x N] or [B x T x N]")
    batched = outputs.ndim == 3
    time_axis = 1 if batched else 0
    num_steps = outputs.shape[time_axis]

    # residual in trace space, filters run along the time axis
    out_tc = np.moveaxis(outputs, time_axis, -1)
    tgt_tc = np.moveaxis(targets, time_axis, -1)
    residual = filtered_trace(out_tc, cfg) - filtered_trace(tgt_tc, cfg)  # [..., N, T] layout

    if batched:
        loss = np.sum(residual * residual, axis=(-2, -1)) / (2.0 * num_steps)
    else:
        loss = float(np.sum(residual * residual) / (2.0 * num_steps))

    # reverse-time filtering; f[0] = 0 removes the same-step residual term
    rm = np.zeros(residual.shape[:-1])
    rs = np.zeros(residual.shape[:-1])
    grad = np.empty_like(residual)
    for t in range(num_steps - 1, -1, -1):
        grad[..., t] = (cfg.decay_m * rm - cfg.decay_s * rs) / num_steps
        rm = cfg.decay_m * rm + residual[..., t]
        rs = cfg.decay_s * rs + residual[..., t]
    de_do = np.moveaxis(grad, -1, time_axis)
    return loss, de_do
