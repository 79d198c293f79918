"""Temporal-pattern learning for filter-based adaptive-threshold spiking networks."""

from .backprop import SurrogateConfig, backward, grad_check, surrogate_derivative
from .errors import ArgumentError, DataFormatError, NumericError, TempoSnnError
from .events import EventStream, SpikeFrames, bin_events, image_to_raster, parse_nmnist_bin
from .losses import DistanceConfig, association_loss, rate_softmax_ce, van_rossum_distance
from .network import Layer, Network, Trace, forward, init_weights
from .neuron import HardResetState, LayerState, NeuronConfig, psp_kernel, step_adaptive, step_hard_reset
from .training import AdamWConfig, OptimizerState, TrainResult, adamw_step, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"
