"""Pydantic request/response models of the experiment service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class NeuronParams(BaseModel):
    tau: float = 4.0
    tau_r: float = 4.0
    theta: float = 1.0
    v_th: float = 1.0
    v_rest: float = 0.0


class OptimizerParams(BaseModel):
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01


class DistanceParams(BaseModel):
    tau_m: float = 4.0
    tau_s: float = 1.0


class ConvertRequest(BaseModel):
    kind: Literal["nmnist-dir", "image-dir", "canonical-dir"]
    source: str
    out_dir: str
    threshold: float = 0.5
    num_steps: int = 300
    num_trains: int = 300


class ConvertResponse(BaseModel):
    manifest: str
    converted: int
    failed: list[str] = Field(default_factory=list)


class TrainRequest(BaseModel):
    manifest: str
    architecture: list[int]
    neuron: NeuronParams = NeuronParams()
    optimizer: OptimizerParams = OptimizerParams()
    surrogate_sigma: Optional[float] = None
    epochs: int = 10
    batch_size: int = 64
    seed: int = 0
    num_steps: int = 300
    gain: float = 1.0
    out_dir: str


class AssociateRequest(BaseModel):
    inputs_manifest: str
    targets_manifest: str
    architecture: list[int]
    neuron: NeuronParams = NeuronParams()
    optimizer: OptimizerParams = OptimizerParams(lr=1e-3)
    distance: DistanceParams = DistanceParams()
    surrogate_sigma: Optional[float] = None
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0
    num_steps: int = 300
    gain: float = 1.0
    dump_rasters: bool = True
    out_dir: str


class TrainResponse(BaseModel):
    checkpoint: Optional[str] = None
    history_csv: Optional[str] = None
    final_loss: Optional[float] = None
    final_accuracy: Optional[float] = None
    diverged: bool = False
    raster_files: list[str] = Field(default_factory=list)


class EvalRequest(BaseModel):
    checkpoint: str
    manifest: str
    num_steps: int = 300
    variant: Literal["adaptive", "hard_reset"] = "adaptive"
    out_dir: Optional[str] = None


class EvalResponse(BaseModel):
    accuracy: float
    num_samples: int
    metrics_csv: Optional[str] = None


class GradcheckRequest(BaseModel):
    architecture: list[int] = Field(default_factory=lambda: [8, 16, 4])
    num_steps: int = 20
    seed: int = 0
    eps: float = 1e-5
    surrogate_sigma: Optional[float] = None
    gain: float = 2.0
    loss: Literal["classification", "association", "both"] = "both"


class GradcheckResponse(BaseModel):
    max_relative_error: float
    per_loss: dict[str, float]


class SweepRequest(BaseModel):
    checkpoint: str
    manifest: str
    num_steps: int = 300
    bits: list[int] = Field(default_factory=lambda: [4, 5])
    deviations: list[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    trials: int = 10
    seed: int = 0
    variant: Literal["adaptive", "hard_reset"] = "adaptive"
    out_dir: str


class SweepResponse(BaseModel):
    sweep_csv: str
    rows: int
    summary: list[dict]


class CircuitSpec(BaseModel):
    resistance: float = 4.56e3
    capacitance: float = 10.14e-12
    dt_phys: float = 10e-9
    v_dd: float = 3.0
    v_th_bias: float = 0.55
    v_in_amp: float = 3.0
    conductance: float = 1e-4
    r_out: float = 1e4
    sim_dt: Optional[float] = None


class CircuitRequest(BaseModel):
    circuit: CircuitSpec = CircuitSpec()
    demo: bool = False
    spike_steps: Optional[list[int]] = None
    poisson_rate: float = 0.03
    num_steps: int = 200
    seed: int = 0
    compare_discrete: bool = True
    out_dir: str


class CircuitResponse(BaseModel):
    waveforms_csv: str
    spikes_csv: str
    output_spikes: int
    max_step_deviation: Optional[int] = None
    unmatched_analog: Optional[int] = None
    unmatched_discrete: Optional[int] = None


class SynthRequest(BaseModel):
    task: Literal["timing-classification", "association"]
    out_dir: str
    seed: int = 0
    num_classes: int = 4
    channels: int = 64
    num_steps: int = 100
    train_per_class: int = 100
    test_per_class: int = 50
    jitter: int = 1
    num_pairs: int = 20
    in_trains: int = 64
    out_trains: int = 32


class SynthResponse(BaseModel):
    manifests: list[str]
    samples: int


class ErrorBody(BaseModel):
    kind: Literal["validation", "data", "numeric"]
    detail: str
