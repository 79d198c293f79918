"""Reverse-mode differentiation through the unrolled spiking dynamics.

The spike step function has no usable derivative, so the backward pass
substitutes the derivative of a smooth step (half a complementary error
function): a Gaussian of width sigma centered on the firing threshold. On the
smooth-relaxed forward graph this backward pass is exact, which is what
`grad_check` exploits to validate it against finite differences.

Two modes: "full" differentiates the entire forward graph, including the
credit that flows through both filter recursions across time; "truncated"
propagates the error signal only one step through each filter, which is the
limit of the full mode when both filter decay factors vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import ArgumentError
from .network import Network, Trace, forward

DEFAULT_SIGMA = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SurrogateConfig:
    """Sharpness of the spike pseudo-derivative."""

    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        if not self.sigma > 0:
            raise ArgumentError("sigma must be positive")


def surrogate_derivative(x, sigma: float = DEFAULT_SIGMA):
    """Gaussian stand-in for the step derivative: exp(-x^2/(2s^2)) / (sqrt(2pi) s).

    x is the membrane margin v - v_th. Positive by construction so that a
    rising membrane increases the firing indicator.
    """
    if not sigma > 0:
        raise ArgumentError("sigma must be positive")
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(-(x * x) / (2.0 * sigma * sigma)) / (math.sqrt(2.0 * math.pi) * sigma)
    return float(out) if out.ndim == 0 else out


def smooth_step(x, sigma: float = DEFAULT_SIGMA):
    """Smooth approximation of the unit step whose derivative is the surrogate."""
    x = np.asarray(x, dtype=np.float64)
    out = 0.5 * erfc(-x / (math.sqrt(2.0) * sigma))
    return float(out) if out.ndim == 0 else out


def backward(
    net: Network,
    trace: Trace,
    de_do_last: np.ndarray,
    surrogate: SurrogateConfig | None = None,
    mode: str = "full",
) -> list[np.ndarray]:
    """Backpropagate dE/dO of the last layer into per-layer weight gradients.

    `trace` must come from a recorded adaptive forward pass. de_do_last is
    [T x N_L] or [batch x T x N_L] matching the trace batch; gradients are
    summed over the batch.
    """
    surrogate = surrogate or SurrogateConfig()
    if mode not in ("full", "truncated"):
        raise ArgumentError(f"unknown backward mode {mode!r}")
    if trace is None or not trace.outputs:
        raise ArgumentError("trace was not recorded; run forward with record=True")
    de_do_last = np.asarray(de_do_last, dtype=np.float64)
    if de_do_last.ndim == 2:
        de_do_last = de_do_last[None, :, :]
    if de_do_last.shape != trace.outputs[-1].shape:
        raise ArgumentError(
            f"upstream gradient shape {de_do_last.shape} does not match "
            f"last-layer outputs {trace.outputs[-1].shape}"
        )
    if not np.all(np.isfinite(de_do_last)):
        raise ArgumentError("upstream gradient contains non-finite values")

    num_layers = len(net.layers)
    batch, num_steps, _ = de_do_last.shape
    chains = mode == "full"

    grads = [np.zeros_like(layer.weights) for layer in net.layers]
    # dE/dk and dE/dh carried from step t+1, per layer
    kbar_next = [np.zeros((batch, l.weights.shape[1])) for l in net.layers]
    hbar_next = [np.zeros((batch, l.weights.shape[0])) for l in net.layers]

    for t in range(num_steps - 1, -1, -1):
        kbar_above = None  # dE/dk of the layer above at this step
        for li in range(num_layers - 1, -1, -1):
            layer = net.layers[li]
            cfg = layer.cfg
            # O_li[t] feeds the loss (last layer), the layer above's synapse
            # filter at this step, and this layer's reset filter at t+1
            do = hbar_next[li].copy()
            if li == num_layers - 1:
                do += de_do_last[:, t, :]
            if kbar_above is not None:
                do += kbar_above
            eps = surrogate_derivative(trace.v[li][:, t, :] - cfg.v_th, surrogate.sigma)
            dv = do * eps
            dg = dv  # v = g - theta*h
            hbar = -cfg.theta * dv
            kbar = dg @ layer.weights
            if chains:
                hbar += cfg.decay_h * hbar_next[li]
                kbar += cfg.decay_k * kbar_next[li]
            hbar_next[li] = hbar
            kbar_next[li] = kbar
            grads[li] += dg.T @ trace.k[li][:, t, :]
            kbar_above = kbar
    return grads


def forward_relaxed(net: Network, frames: np.ndarray, sigma: float = DEFAULT_SIGMA):
    """Forward pass with the hard step replaced by its smooth approximation.

    Only used to validate the backward pass: on this graph the surrogate
    derivative is the true derivative.
    """
    return forward(net, frames, record=True, spike_fn=lambda x: smooth_step(x, sigma))


def grad_check(
    net: Network,
    loss_fn,
    frames: np.ndarray,
    eps: float = 1e-5,
    sigma: float = DEFAULT_SIGMA,
    num_weights: int = 120,
    seed: int = 0,
) -> float:
    """Compare backward() with central finite differences on the relaxed forward.

    loss_fn maps last-layer output frames [T x N_L] to (loss, dE/dO). A random
    subset of at least `num_weights` weight coordinates is probed (all weights
    if the network is smaller). Returns the largest relative error observed.
    Each coordinate is compared against max(|bp|, |fd|, 1e-3 * gmax) with gmax
    the largest gradient magnitude probed, so that finite-difference round-off
    on negligible entries does not drown the comparison.
    """
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise ArgumentError("grad_check expects a single [T x C] sample")

    out, trace = forward_relaxed(net, frames, sigma)
    _, de_do = loss_fn(out)
    analytic = backward(net, trace, de_do, SurrogateConfig(sigma))

    rng = np.random.default_rng(seed)
    coords = []
    for li, layer in enumerate(net.layers):
        for flat in range(layer.weights.size):
            coords.append((li, flat))
    if len(coords) > num_weights:
        picked = rng.choice(len(coords), size=num_weights, replace=False)
        coords = [coords[i] for i in picked]

    def loss_at(li: int, flat: int, value: float) -> float:
        saved = net.layers[li].weights.flat[flat]
        net.layers[li].weights.flat[flat] = value
        try:
            o, _ = forward_relaxed(net, frames, sigma)
            loss, _ = loss_fn(o)
        finally:
            net.layers[li].weights.flat[flat] = saved
        return float(loss)

    pairs = []
    for li, flat in coords:
        w0 = float(net.layers[li].weights.flat[flat])
        fd = (loss_at(li, flat, w0 + eps) - loss_at(li, flat, w0 - eps)) / (2.0 * eps)
        bp = float(analytic[li].flat[flat])
        pairs.append((bp, fd))
    gmax = max((max(abs(bp), abs(fd)) for bp, fd in pairs), default=0.0)
    worst = 0.0
    for bp, fd in pairs:
        denom = max(abs(bp), abs(fd), 1e-3 * gmax)
        if denom == 0.0:
            continue
        worst = max(worst, abs(bp - fd) / denom)
    return worst
