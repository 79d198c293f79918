"""AdamW optimization, the mini-batch training loop, and checkpoint files."""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backprop import SurrogateConfig, backward
from .errors import ArgumentError, DataFormatError, NumericError
from .losses import DistanceConfig, association_loss, rate_softmax_ce
from .network import Layer, Network, forward
from .neuron import NeuronConfig

_CKPT_MAGIC = b"SNNC"
_CKPT_VERSION = 1


@dataclass
class AdamWConfig:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01


@dataclass
class OptimizerState:
    """First/second moment estimates per weight matrix plus the step counter."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, weights: list[np.ndarray]) -> "OptimizerState":
        return cls(m=[np.zeros_like(w) for w in weights],
                   v=[np.zeros_like(w) for w in weights])


def adamw_step(
    weights: list[np.ndarray],
    grads: list[np.ndarray],
    state: OptimizerState,
    cfg: AdamWConfig,
):
    """One AdamW update; weight decay is decoupled from the gradient moments.

    Returns (new_weights, new_state); inputs are not mutated.
    """
    if len(weights) != len(grads):
        raise ArgumentError("weights and grads must pair up")
    for i, (w, g) in enumerate(zip(weights, grads)):
        if w.shape != g.shape:
            raise ArgumentError(f"gradient {i} shape {g.shape} does not match weights {w.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in layer {i}; aborting step")
    t = state.step + 1
    new_w, new_m, new_v = [], [], []
    for w, g, m, v in zip(weights, grads, state.m, state.v):
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        m_hat = m / (1.0 - cfg.beta1 ** t)
        v_hat = v / (1.0 - cfg.beta2 ** t)
        w = w - cfg.lr * (m_hat / (np.sqrt(v_hat) + cfg.eps) + cfg.weight_decay * w)
        new_w.append(w)
        new_m.append(m)
        new_v.append(v)
    return new_w, OptimizerState(m=new_m, v=new_v, step=t)


@dataclass
class EpochStats:
    epoch: int
    loss: float
    accuracy: float | None = None


@dataclass
class TrainResult:
    net: Network
    history: list[EpochStats]
    diverged: bool = False
    optimizer_state: OptimizerState | None = None


def predict_labels(net: Network, frames: np.ndarray, variant: str = "adaptive") -> np.ndarray:
    """Argmax of output spike counts; ties resolve to the lowest class index."""
    out, _ = forward(net, frames, variant=variant)
    counts = out.sum(axis=-2)
    return np.argmax(counts, axis=-1)


def evaluate_accuracy(
    net: Network, frames: np.ndarray, labels: np.ndarray, variant: str = "adaptive",
    batch_size: int = 256,
) -> float:
    hits = 0
    for start in range(0, len(labels), batch_size):
        chunk = frames[start:start + batch_size]
        pred = predict_labels(net, chunk, variant=variant)
        hits += int(np.sum(pred == labels[start:start + batch_size]))
    return hits / len(labels) if len(labels) else 0.0


def _classification_batch(net, x, y, surrogate):
    out, trace = forward(net, x, record=True)
    batch = x.shape[0]
    losses = np.empty(batch)
    de_do = np.empty_like(out)
    for b in range(batch):
        losses[b], de_do[b] = rate_softmax_ce(out[b], int(y[b]))
    grads = backward(net, trace, de_do / batch, surrogate)
    preds = np.argmax(out.sum(axis=1), axis=-1)
    return float(losses.mean()), grads, int(np.sum(preds == y))


def _association_batch(net, x, targets, distance_cfg, surrogate):
    out, trace = forward(net, x, record=True)
    batch = x.shape[0]
    losses, de_do = association_loss(out, targets, distance_cfg)
    grads = backward(net, trace, de_do / batch, surrogate)
    return float(np.mean(losses)), grads, None


def train(
    net: Network,
    dataset,
    loss: str = "classification",
    epochs: int = 1,
    batch_size: int = 64,
    seed: int = 0,
    optimizer: AdamWConfig | None = None,
    surrogate: SurrogateConfig | None = None,
    distance: DistanceConfig | None = None,
) -> TrainResult:
    """Mini-batch AdamW training, deterministic for a given seed.

    dataset is (frames [N,T,C], labels [N]) for classification or
    (frames [N,T,C], targets [N,T,N_L]) for association. The last incomplete
    batch is kept. On a non-finite loss the loop stops and returns the last
    good weights with `diverged` set.
    """
    if loss not in ("classification", "association"):
        raise ArgumentError(f"unknown loss {loss!r}")
    x, y = dataset
    if len(x) == 0:
        raise ArgumentError("dataset is empty")
    if epochs < 0 or batch_size < 1:
        raise ArgumentError("epochs must be >= 0 and batch_size >= 1")
    optimizer = optimizer or AdamWConfig()
    surrogate = surrogate or SurrogateConfig()
    distance = distance or DistanceConfig()

    net = net.copy()
    weights = [layer.weights for layer in net.layers]
    opt_state = OptimizerState.zeros_like(weights)
    rng = np.random.default_rng(seed)
    history: list[EpochStats] = []
    num = len(x)

    for epoch in range(epochs):
        order = rng.permutation(num)
        epoch_loss = 0.0
        hits = 0
        for start in range(0, num, batch_size):
            idx = order[start:start + batch_size]
            xb = x[idx]
            if loss == "classification":
                batch_loss, grads, batch_hits = _classification_batch(
                    net, xb, y[idx], surrogate)
                hits += batch_hits
            else:
                batch_loss, grads, _ = _association_batch(
                    net, xb, y[idx], distance, surrogate)
            if not np.isfinite(batch_loss):
                return TrainResult(net, history, diverged=True, optimizer_state=opt_state)
            try:
                stepped, new_state = adamw_step(weights, grads, opt_state, optimizer)
                if any(not np.all(np.isfinite(w)) for w in stepped):
                    raise NumericError("weights left the finite range")
            except NumericError:
                # keep the last state whose loss and weights were finite
                return TrainResult(net, history, diverged=True, optimizer_state=opt_state)
            weights, opt_state = stepped, new_state
            for layer, w in zip(net.layers, weights):
                layer.weights = w
            epoch_loss += batch_loss * len(idx)
        stats = EpochStats(epoch=epoch, loss=epoch_loss / num)
        if loss == "classification":
            stats.accuracy = hits / num
        history.append(stats)
    return TrainResult(net, history, diverged=False, optimizer_state=opt_state)


def save_checkpoint(
    path,
    net: Network,
    seed: int = 0,
    optimizer: AdamWConfig | None = None,
    optimizer_state: OptimizerState | None = None,
    metadata: dict | None = None,
) -> None:
    """Write a checkpoint: JSON metadata followed by float32 weight blobs."""
    meta = {
        "architecture": net.architecture,
        "neuron": [
            {
                "tau": l.cfg.tau, "tau_r": l.cfg.tau_r, "theta": l.cfg.theta,
                "v_th": l.cfg.v_th, "v_rest": l.cfg.v_rest,
            }
            for l in net.layers
        ],
        "seed": seed,
        "has_optimizer_state": optimizer_state is not None,
    }
    if optimizer is not None:
        meta["optimizer"] = {
            "lr": optimizer.lr, "beta1": optimizer.beta1, "beta2": optimizer.beta2,
            "eps": optimizer.eps, "weight_decay": optimizer.weight_decay,
        }
    if optimizer_state is not None:
        meta["optimizer_step"] = optimizer_state.step
    if metadata:
        meta["extra"] = metadata
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")

    buf = io.BytesIO()
    buf.write(_CKPT_MAGIC)
    buf.write(struct.pack("<HI", _CKPT_VERSION, len(meta_bytes)))
    buf.write(meta_bytes)
    for layer in net.layers:
        buf.write(layer.weights.astype("<f4").tobytes(order="C"))
    if optimizer_state is not None:
        for m in optimizer_state.m:
            buf.write(m.astype("<f4").tobytes(order="C"))
        for v in optimizer_state.v:
            buf.write(v.astype("<f4").tobytes(order="C"))
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path):
    """Read a checkpoint; returns (net, meta, optimizer_state or None)."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataFormatError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(raw) < 10 or raw[:4] != _CKPT_MAGIC:
        raise DataFormatError(f"{path}: not a checkpoint file (bad magic)")
    version, meta_len = struct.unpack_from("<HI", raw, 4)
    if version != _CKPT_VERSION:
        raise DataFormatError(f"{path}: unsupported checkpoint version {version}")
    offset = 10
    if len(raw) < offset + meta_len:
        raise DataFormatError(f"{path}: truncated metadata")
    meta = json.loads(raw[offset:offset + meta_len].decode("utf-8"))
    offset += meta_len

    arch = meta["architecture"]
    layers = []
    for i, (n_in, n_out) in enumerate(zip(arch[:-1], arch[1:])):
        nbytes = n_in * n_out * 4
        if len(raw) < offset + nbytes:
            raise DataFormatError(
                f"{path}: truncated weight blob for layer {i} "
                f"(expected {nbytes} bytes)"
            )
        w = np.frombuffer(raw[offset:offset + nbytes], dtype="<f4").astype(np.float64)
        offset += nbytes
        cfg = NeuronConfig(**meta["neuron"][i])
        layers.append(Layer(w.reshape(n_out, n_in), cfg))
    net = Network(layers)

    opt_state = None
    if meta.get("has_optimizer_state"):
        moments = []
        for name in ("m", "v"):
            blobs = []
            for i, layer in enumerate(net.layers):
                nbytes = layer.weights.size * 4
                if len(raw) < offset + nbytes:
                    raise DataFormatError(
                        f"{path}: truncated optimizer blob '{name}' for layer {i}"
                    )
                blob = np.frombuffer(raw[offset:offset + nbytes], dtype="<f4")
                blobs.append(blob.astype(np.float64).reshape(layer.weights.shape))
                offset += nbytes
            moments.append(blobs)
        opt_state = OptimizerState(m=moments[0], v=moments[1], step=meta.get("optimizer_step", 0))
    if offset != len(raw):
        raise DataFormatError(f"{path}: {len(raw) - offset} trailing bytes after payload")
    return net, meta, opt_state
