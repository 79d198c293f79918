"""Post-training hardware effects and a behavioral model of the neuron circuit.

Covers three things: uniform symmetric weight quantization (crossbar
conductance levels), multiplicative Gaussian resistance variation, and a
continuous-time simulation of the RC-filter/comparator neuron whose sampled
behavior reproduces the discrete adaptive-threshold model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import ArgumentError
from .network import Network
from .neuron import NeuronConfig
from .training import evaluate_accuracy


@dataclass(frozen=True)
class QuantSpec:
    """Uniform symmetric quantization to 2^bits - 1 signed levels.

    w_max of None means each layer scales to its own max |w|.
    """

    bits: int
    w_max: float | None = None

    def __post_init__(self):
        if not 2 <= self.bits <= 16:
            raise ArgumentError("bits must be in [2, 16]")
        if self.w_max is not None and self.w_max <= 0:
            raise ArgumentError("w_max must be positive")


def quantize_weights(weights: np.ndarray, spec: QuantSpec) -> np.ndarray:
    """Snap weights to the symmetric level grid over [-w_max, +w_max].

    Rounds half away from zero. An all-zero matrix has no scale and is
    returned unchanged.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if not np.all(np.isfinite(weights)):
        raise ArgumentError("weights must be finite")
    w_max = spec.w_max if spec.w_max is not None else float(np.max(np.abs(weights)))
    if w_max == 0.0:
        return weights.copy()
    half_levels = 2 ** (spec.bits - 1) - 1
    scaled = weights * (half_levels / w_max)
    q = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    q = np.clip(q, -half_levels, half_levels)
    return (q / half_levels) * w_max


def quantize_network(net: Network, spec: QuantSpec) -> Network:
    out = net.copy()
    for layer in out.layers:
        layer.weights = quantize_weights(layer.weights, spec)
    return out


def apply_variation(weights: np.ndarray, deviation: float, seed) -> np.ndarray:
    """Perturb each weight by w * (1 + e), e ~ Normal(0, deviation^2)."""
    if deviation < 0:
        raise ArgumentError("deviation must be non-negative")
    weights = np.asarray(weights, dtype=np.float64)
    if deviation == 0.0:
        return weights.copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return weights * (1.0 + rng.normal(0.0, deviation, size=weights.shape))


def apply_variation_network(net: Network, deviation: float, seed) -> Network:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = net.copy()
    for layer in out.layers:
        layer.weights = apply_variation(layer.weights, deviation, rng)
    return out


@dataclass
class SweepRow:
    bits: int
    deviation: float
    trial: int
    accuracy: float


def robustness_sweep(
    net: Network,
    dataset,
    bits_list: list[int],
    deviation_grid: list[float],
    trials: int,
    seed: int = 0,
    variant: str = "adaptive",
) -> list[SweepRow]:
    """Accuracy under every (bits, deviation) pair, `trials` device draws each.

    Quantization happens once per bit width; each trial draws a fresh device
    instance from its own RNG stream (seed, trial index), so rows are
    reproducible and independent of evaluation order.
    """
    frames, labels = dataset
    if len(frames) == 0:
        raise ArgumentError("dataset is empty")
    if trials < 1:
        raise ArgumentError("trials must be >= 1")
    rows = []
    for bits in bits_list:
        quantized = quantize_network(net, QuantSpec(bits=bits))
        for deviation in deviation_grid:
            for trial in range(trials):
                rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))
                noisy = apply_variation_network(quantized, deviation, rng)
                acc = evaluate_accuracy(noisy, frames, labels, variant=variant)
                rows.append(SweepRow(bits=bits, deviation=float(deviation),
                                     trial=trial, accuracy=acc))
    return rows


# --- continuous-time circuit model ---------------------------------------


@dataclass
class CircuitParams:
    """Component values and timing of the RC-filter/comparator neuron.

    The physical step dt_phys is the width of one input spike rectangle
    (spike_width, equal by default); tau of the matching discrete model
    equals R*C/dt_phys. The comparator is ideal in level; once it trips,
    the inverter pair shapes one step-wide output rectangle at v_dd which
    also drives the feedback filter.
    """

    resistance: float = 4.56e3
    capacitance: float = 10.14e-12
    dt_phys: float = 10e-9
    spike_width: float | None = None
    v_dd: float = 3.0
    v_th_bias: float = 0.55
    v_in_amp: float = 3.0
    conductance: np.ndarray = field(default_factory=lambda: np.array([[1e-4]]))
    r_out: float = 1e4
    sim_dt: float | None = None

    def __post_init__(self):
        if self.spike_width is None:
            self.spike_width = self.dt_phys
        if self.sim_dt is None:
            self.sim_dt = self.dt_phys / 100.0
        self.conductance = np.atleast_2d(np.asarray(self.conductance, dtype=np.float64))
        for name in ("resistance", "capacitance", "dt_phys", "spike_width", "sim_dt"):
            if getattr(self, name) <= 0:
                raise ArgumentError(f"{name} must be positive")
        if self.sim_dt > self.dt_phys / 10.0:
            raise ArgumentError("sim_dt must be at most dt_phys / 10")

    @property
    def rc(self) -> float:
        return self.resistance * self.capacitance

    @property
    def tau_steps(self) -> float:
        """Equivalent discrete time constant tau = RC / dt_phys."""
        return self.rc / self.dt_phys

    @property
    def num_inputs(self) -> int:
        return self.conductance.shape[1]

    @property
    def num_neurons(self) -> int:
        return self.conductance.shape[0]


@dataclass
class AnalogTrace:
    """Sampled waveforms of one circuit run plus shaped output spike times."""

    times: np.ndarray          # [n]
    k: np.ndarray              # [n, num_inputs] synapse filter voltages
    g: np.ndarray              # [n, num_neurons] bit-line PSP voltages
    h: np.ndarray              # [n, num_neurons] feedback filter voltages
    threshold: np.ndarray      # [n, num_neurons] bias + h
    cmp_out: np.ndarray        # [n, num_neurons] shaped comparator output
    spike_times: list[np.ndarray]  # per neuron, seconds


def circuit_sim(input_spike_times, params: CircuitParams, duration: float) -> AnalogTrace:
    """Integrate the synapse/neuron circuit over `duration` seconds.

    input_spike_times is a list of arrays, one per input channel; each spike
    applies a v_in_amp rectangle of spike_width to that channel's RC filter.
    State updates use the exact exponential response to piecewise-constant
    drive at sim_dt resolution, so filter accuracy is limited only by the
    granularity of comparator trip times.

    The comparator trips when the bit-line voltage exceeds bias plus the
    feedback voltage; the spike time is the trip instant. The inverter pair
    then shapes one ideal output rectangle (amplitude v_dd, one physical step
    wide) over the next step window, which is what the feedback filter and
    any following layer see; the comparator cannot retrigger until that
    rectangle ends. Step-aligned rectangles keep every window-end sample of
    the circuit on the discrete model's difference equations.
    """
    if duration <= 0:
        raise ArgumentError("duration must be positive")
    spikes = [np.asarray(s, dtype=np.float64) for s in input_spike_times]
    if len(spikes) != params.num_inputs:
        raise ArgumentError(
            f"got spike lists for {len(spikes)} channels, conductance expects "
            f"{params.num_inputs}"
        )
    dt = params.sim_dt
    slices_per_window = int(round(params.dt_phys / dt))
    num_windows = int(math.ceil(duration / params.dt_phys))
    n = num_windows * slices_per_window
    decay = math.exp(-dt / params.rc)

    # state is integrated over slices [i*dt, (i+1)*dt) with constant drive and
    # sampled at slice ends; the slice midpoint decides rectangle membership,
    # robust to floating-point jitter on the grid
    mids = (np.arange(n) + 0.5) * dt
    times = (np.arange(n) + 1) * dt

    # the synapse filters see no feedback, so integrate them in one shot
    v_in = np.zeros((n, params.num_inputs))
    for ch, s in enumerate(spikes):
        for start in s:
            lo = np.searchsorted(mids, start)
            hi = np.searchsorted(mids, start + params.spike_width)
            v_in[lo:hi, ch] = params.v_in_amp
    k = lfilter([1.0 - decay], [1.0, -decay], v_in, axis=0)
    g = k @ (params.r_out * params.conductance.T)

    # feedback pulses are aligned to physical step windows, so h is a closed
    # form within each window; only the window loop is sequential. At most
    # one trip per neuron per window, and a pulse window cannot retrigger.
    h = np.zeros((n, params.num_neurons))
    cmp_out = np.zeros((n, params.num_neurons))
    h_state = np.zeros(params.num_neurons)
    pulse_here = np.zeros(params.num_neurons, dtype=bool)
    spike_times: list[list[float]] = [[] for _ in range(params.num_neurons)]
    seg_decay = decay ** (np.arange(1, slices_per_window + 1))

    for w in range(num_windows):
        lo, hi = w * slices_per_window, (w + 1) * slices_per_window
        v_fb = np.where(pulse_here, params.v_dd, 0.0)
        h_seg = v_fb[None, :] + (h_state - v_fb)[None, :] * seg_decay[:, None]
        h[lo:hi] = h_seg
        cmp_out[lo:hi] = np.where(pulse_here, params.v_dd, 0.0)[None, :]

        crossed = g[lo:hi] > params.v_th_bias + h_seg
        tripped = ~pulse_here & crossed.any(axis=0)
        for neuron in np.nonzero(tripped)[0]:
            first = int(np.argmax(crossed[:, neuron]))
            spike_times[neuron].append(float(mids[lo + first]))

        h_state = h_seg[-1]
        pulse_here = tripped

    threshold = params.v_th_bias + h
    return AnalogTrace(
        times=times, k=k, g=g, h=h, threshold=threshold, cmp_out=cmp_out,
        spike_times=[np.asarray(s) for s in spike_times],
    )


def discrete_twin(params: CircuitParams):
    """Map circuit parameters onto the equivalent discrete adaptive model.

    Returns (NeuronConfig, weights, scale) such that simulating the discrete
    model with those weights reproduces the circuit when sampled at dt_phys:
    scale converts discrete filter units to volts on the bit line.
    """
    a = math.exp(-params.dt_phys / params.rc)
    k_unit = params.v_in_amp * (1.0 - a)        # end-of-step k per input spike
    g_unit = params.r_out * k_unit              # volts per unit conductance weight
    tau = params.tau_steps
    cfg = NeuronConfig(
        tau=tau,
        tau_r=tau,
        theta=params.v_dd * (1.0 - a) / g_unit,
        v_th=params.v_th_bias / g_unit,
    )
    weights = params.conductance.copy()
    return cfg, weights, g_unit


@dataclass
class MatchReport:
    max_abs_step_deviation: int
    unmatched_analog: int
    unmatched_discrete: int
    analog_steps: np.ndarray
    discrete_steps: np.ndarray


def match_discrete(analog: AnalogTrace, discrete_output, dt_phys: float,
                   neuron: int = 0) -> MatchReport:
    """Pair analog output spikes (quantized to dt_phys) with discrete spikes.

    discrete_output is the [T x N] spike frame matrix of the discrete model.
    Spikes pair up in order; surplus on either side counts as unmatched.
    """
    values = discrete_output.values if hasattr(discrete_output, "values") else discrete_output
    analog_steps = np.floor(analog.spike_times[neuron] / dt_phys).astype(np.int64)
    discrete_steps = np.nonzero(np.asarray(values)[:, neuron] > 0)[0]
    paired = min(analog_steps.size, discrete_steps.size)
    if paired:
        max_dev = int(np.max(np.abs(analog_steps[:paired] - discrete_steps[:paired])))
    else:
        max_dev = 0
    return MatchReport(
        max_abs_step_deviation=max_dev,
        unmatched_analog=int(analog_steps.size - paired),
        unmatched_discrete=int(discrete_steps.size - paired),
        analog_steps=analog_steps,
        discrete_steps=discrete_steps,
    )
