"""Discrete-time spiking neuron dynamics.

Two variants: the filter-based adaptive-threshold LIF (the model this package
trains) and a hard-reset ODE baseline. The adaptive model keeps all memory in
two first-order low-pass filters that are never cleared:

    k[t] = exp(-1/tau)   * k[t-1] + x[t]        (synapse filter, per input)
    h[t] = exp(-1/tau_r) * h[t-1] + O[t-1]      (reset filter, per neuron)
    g[t] = W k[t]
    v[t] = g[t] - theta * h[t]
    O[t] = 1  iff  v[t] >= V_th
         (equivalently: g[t] >= V_th + theta * h[t], an adaptive threshold)

The hard-reset baseline integrates input directly into the membrane and wipes
it to rest after every output spike, discarding history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, NumericError


@dataclass(frozen=True)
class NeuronConfig:
    """Neuron hyperparameters, fixed during training.

    tau / tau_r are the synapse and reset filter time constants in steps,
    theta scales the reset charge (the per-spike threshold jump), v_th is the
    firing threshold and v_rest the rest potential.
    """

    tau: float = 4.0
    tau_r: float = 4.0
    theta: float = 1.0
    v_th: float = 1.0
    v_rest: float = 0.0

    def __post_init__(self):
        if not (self.tau > 0 and self.tau_r > 0):
            raise ArgumentError("tau and tau_r must be positive")
        if self.theta < 0:
            raise ArgumentError("theta must be non-negative")
        if not self.v_th > self.v_rest:
            raise ArgumentError("v_th must exceed v_rest")

    @property
    def decay_k(self) -> float:
        return math.exp(-1.0 / self.tau)

    @property
    def decay_h(self) -> float:
        return math.exp(-1.0 / self.tau_r)


@dataclass
class LayerState:
    """Filter state of one adaptive layer: k per input channel, h and the
    previous output per neuron. Leading batch dimensions are allowed."""

    k: np.ndarray
    h: np.ndarray
    prev_output: np.ndarray

    @classmethod
    def zeros(cls, num_inputs: int, num_neurons: int, batch_shape: tuple = ()) -> "LayerState":
        return cls(
            k=np.zeros(batch_shape + (num_inputs,)),
            h=np.zeros(batch_shape + (num_neurons,)),
            prev_output=np.zeros(batch_shape + (num_neurons,)),
        )


@dataclass
class HardResetState:
    """Membrane potential of a hard-reset layer."""

    v: np.ndarray

    @classmethod
    def zeros(cls, num_neurons: int, batch_shape: tuple = ()) -> "HardResetState":
        return cls(v=np.zeros(batch_shape + (num_neurons,)))


def _check_step_args(input_spikes: np.ndarray, weights: np.ndarray) -> None:
    if weights.ndim != 2:
        raise ArgumentError("weights must be a [num_neurons x num_inputs] matrix")
    if input_spikes.shape[-1] != weights.shape[1]:
        raise ArgumentError(
            f"input has {input_spikes.shape[-1]} channels, weights expect {weights.shape[1]}"
        )
    if not np.all(np.isfinite(weights)):
        raise NumericError("weights contain non-finite values")


def step_adaptive(
    state: LayerState,
    input_spikes: np.ndarray,
    weights: np.ndarray,
    cfg: NeuronConfig,
    form: str = "membrane",
):
    """Advance one adaptive-threshold layer by a single time step.

    `form` selects between the two equivalent spike conditions:
    "membrane" compares v = g - theta*h against v_th, "threshold" compares
    g against the adaptive threshold v_th + theta*h. Spikes fire on ties
    (>=). Returns (output_spikes, new_state, aux) where aux carries the g
    and v vectors of this step.
    """
    input_spikes = np.asarray(input_spikes, dtype=np.float64)
    _check_step_args(input_spikes, weights)
    if form not in ("membrane", "threshold"):
        raise ArgumentError(f"unknown spike-condition form {form!r}")
    k = cfg.decay_k * state.k + input_spikes
    g = k @ weights.T
    h = cfg.decay_h * state.h + state.prev_output
    v = g - cfg.theta * h
    if form == "membrane":
        output = (v >= cfg.v_th).astype(np.float64)
    else:
        output = (g >= cfg.v_th + cfg.theta * h).astype(np.float64)
    return output, LayerState(k=k, h=h, prev_output=output), {"g": g, "v": v}


def step_hard_reset(
    state: HardResetState,
    input_spikes: np.ndarray,
    weights: np.ndarray,
    cfg: NeuronConfig,
):
    """Advance one hard-reset LIF layer by a single time step.

    v decays by exp(-1/tau), integrates the weighted input, fires on
    v >= v_th and is set back to v_rest for every spiking neuron.
    """
    input_spikes = np.asarray(input_spikes, dtype=np.float64)
    _check_step_args(input_spikes, weights)
    v = cfg.decay_k * state.v + input_spikes @ weights.T
    output = (v >= cfg.v_th).astype(np.float64)
    v = np.where(output > 0, cfg.v_rest, v)
    return output, HardResetState(v=v)


def psp_kernel(t, tau: float):
    """Continuous post-synaptic kernel exp(-t/tau), the impulse response the
    discrete synapse filter reproduces at integer steps."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ArgumentError("kernel time must be non-negative")
    if tau <= 0:
        raise ArgumentError("tau must be positive")
    out = np.exp(-t / tau)
    return float(out) if out.ndim == 0 else out
