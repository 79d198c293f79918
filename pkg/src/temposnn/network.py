"""Feedforward multi-layer SNN: construction and time-unrolled forward pass."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .neuron import HardResetState, LayerState, NeuronConfig


@dataclass
class Layer:
    weights: np.ndarray  # [num_neurons x num_inputs]
    cfg: NeuronConfig

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ArgumentError("layer weights must be 2-D")
        if not np.all(np.isfinite(self.weights)):
            raise ArgumentError("layer weights must be finite")


@dataclass
class Network:
    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise ArgumentError("network needs at least one layer")
        for i in range(1, len(self.layers)):
            n_prev = self.layers[i - 1].weights.shape[0]
            n_in = self.layers[i].weights.shape[1]
            if n_prev != n_in:
                raise ArgumentError(
                    f"layer {i} expects {n_in} inputs but layer {i - 1} has {n_prev} neurons"
                )

    @property
    def architecture(self) -> list[int]:
        sizes = [self.layers[0].weights.shape[1]]
        sizes += [layer.weights.shape[0] for layer in self.layers]
        return sizes

    def copy(self) -> "Network":
        return Network([Layer(l.weights.copy(), l.cfg) for l in self.layers])


@dataclass
class Trace:
    """Everything the forward pass computed, per layer and time step.

    Arrays are [batch, T, width]: k over layer inputs; h, g, v, outputs over
    layer neurons. `inputs` keeps the frames the pass consumed so the
    backward pass can replay the graph exactly.
    """

    inputs: np.ndarray
    k: list[np.ndarray] = field(default_factory=list)
    h: list[np.ndarray] = field(default_factory=list)
    g: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    outputs: list[np.ndarray] = field(default_factory=list)


def init_weights(
    architecture: list[int],
    seed: int,
    gain: float = 1.0,
    cfg: NeuronConfig | list[NeuronConfig] | None = None,
) -> Network:
    """Build a network with Uniform(-gain/sqrt(fan_in), +gain/sqrt(fan_in)) weights."""
    if len(architecture) < 2:
        raise ArgumentError("architecture needs an input size and at least one layer")
    if any(n < 1 for n in architecture):
        raise ArgumentError("layer sizes must be >= 1")
    if cfg is None:
        cfg = NeuronConfig()
    cfgs = cfg if isinstance(cfg, list) else [cfg] * (len(architecture) - 1)
    if len(cfgs) != len(architecture) - 1:
        raise ArgumentError("need one NeuronConfig per layer")
    rng = np.random.default_rng(seed)
    layers = []
    for n_in, n_out, c in zip(architecture[:-1], architecture[1:], cfgs):
        bound = gain / np.sqrt(n_in)
        layers.append(Layer(rng.uniform(-bound, bound, size=(n_out, n_in)), c))
    return Network(layers)


def _as_batched(frames: np.ndarray) -> tuple[np.ndarray, bool]:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim == 2:
        return frames[None, :, :], True
    if frames.ndim == 3:
        return frames, False
    raise ArgumentError("input frames must be [T x C] or [batch x T x C]")


def forward(
    net: Network,
    frames: np.ndarray,
    record: bool = False,
    variant: str = "adaptive",
    form: str = "membrane",
    strict_binary: bool = False,
    spike_fn=None,
):
    """Run the full time-unrolled forward pass.

    frames is [T x C] or [batch x T x C] with C equal to the first layer
    fan-in. Returns (output_frames, trace); trace is None unless `record`.
    `spike_fn`, when given, replaces the hard step with a smooth activation
    of (v - v_th) and is only meant for gradient checking.
    """
    x, squeeze = _as_batched(frames)
    batch, num_steps, channels = x.shape
    if channels != net.architecture[0]:
        raise ArgumentError(
            f"input has {channels} channels, network expects {net.architecture[0]}"
        )
    if variant not in ("adaptive", "hard_reset"):
        raise ArgumentError(f"unknown variant {variant!r}")
    if x.size and (x.max() > 1 or np.any((x != 0) & (x != 1))):
        if strict_binary:
            raise ArgumentError("input frames must be binary in strict mode")
        warnings.warn("non-binary input frames clamped to {0,1}", stacklevel=2)
        x = np.minimum(x, 1.0)
        x[x > 0] = 1.0

    trace = Trace(inputs=x) if record else None
    if record:
        for layer in net.layers:
            n_out, n_in = layer.weights.shape
            trace.k.append(np.zeros((batch, num_steps, n_in)))
            trace.h.append(np.zeros((batch, num_steps, n_out)))
            trace.g.append(np.zeros((batch, num_steps, n_out)))
            trace.v.append(np.zeros((batch, num_steps, n_out)))
            trace.outputs.append(np.zeros((batch, num_steps, n_out)))

    if variant == "adaptive":
        states = [
            LayerState.zeros(l.weights.shape[1], l.weights.shape[0], (batch,))
            for l in net.layers
        ]
    else:
        states = [HardResetState.zeros(l.weights.shape[0], (batch,)) for l in net.layers]

    n_last = net.layers[-1].weights.shape[0]
    out = np.zeros((batch, num_steps, n_last))
    for t in range(num_steps):
        signal = x[:, t, :]
        for li, layer in enumerate(net.layers):
            if variant == "adaptive":
                state = states[li]
                k = layer.cfg.decay_k * state.k + signal
                g = k @ layer.weights.T
                h = layer.cfg.decay_h * state.h + state.prev_output
                v = g - layer.cfg.theta * h
                if spike_fn is not None:
                    o = spike_fn(v - layer.cfg.v_th)
                elif form == "membrane":
                    o = (v >= layer.cfg.v_th).astype(np.float64)
                else:
                    o = (g >= layer.cfg.v_th + layer.cfg.theta * h).astype(np.float64)
                states[li] = LayerState(k=k, h=h, prev_output=o)
                if record:
                    trace.k[li][:, t, :] = k
                    trace.h[li][:, t, :] = h
                    trace.g[li][:, t, :] = g
                    trace.v[li][:, t, :] = v
                    trace.outputs[li][:, t, :] = o
            else:
                v = layer.cfg.decay_k * states[li].v + signal @ layer.weights.T
                o = (v >= layer.cfg.v_th).astype(np.float64)
                states[li] = HardResetState(v=np.where(o > 0, layer.cfg.v_rest, v))
                if record:
                    trace.v[li][:, t, :] = v
                    trace.outputs[li][:, t, :] = o
            signal = o
        out[:, t, :] = signal
    if squeeze:
        out = out[0]
    return out, trace
