"""The work behind each service endpoint.

Every job validates its whole request before creating any output file, writes
deterministic CSVs (fixed row order, shortest-repr floats), and reports what
it wrote. The service and the CLI share these functions.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np

from .. import events as ev
from ..backprop import DEFAULT_SIGMA, SurrogateConfig, grad_check
from ..errors import ArgumentError, DataFormatError
from ..hardware import (
    CircuitParams,
    circuit_sim,
    discrete_twin,
    match_discrete,
    robustness_sweep,
)
from ..losses import DistanceConfig, association_loss, rate_softmax_ce
from ..network import Layer, Network, forward, init_weights
from ..neuron import NeuronConfig
from ..synth import make_association_pairs, make_timing_classification, poisson_spike_steps
from ..training import (
    AdamWConfig,
    evaluate_accuracy,
    load_checkpoint,
    save_checkpoint,
    train,
)
from . import schemas as sc


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


def _neuron_config(p: sc.NeuronParams) -> NeuronConfig:
    return NeuronConfig(tau=p.tau, tau_r=p.tau_r, theta=p.theta, v_th=p.v_th, v_rest=p.v_rest)


def _optimizer_config(p: sc.OptimizerParams) -> AdamWConfig:
    return AdamWConfig(lr=p.lr, beta1=p.beta1, beta2=p.beta2, eps=p.eps,
                       weight_decay=p.weight_decay)


def _surrogate(sigma: float | None) -> SurrogateConfig:
    return SurrogateConfig(sigma if sigma is not None else DEFAULT_SIGMA)


def _ensure_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _label_from_path(path: Path) -> int:
    if path.parent.name.isdigit():
        return int(path.parent.name)
    match = re.search(r"\d+", path.stem)
    return int(match.group()) if match else -1


# --- convert ---------------------------------------------------------------


def run_convert(req: sc.ConvertRequest) -> sc.ConvertResponse:
    source = Path(req.source)
    if not source.is_dir():
        raise ArgumentError(f"source directory {source} does not exist")
    out_dir = _ensure_dir(req.out_dir)

    suffix = {"nmnist-dir": "*.bin", "image-dir": "*", "canonical-dir": "*.spke"}[req.kind]
    files = sorted(p for p in source.rglob(suffix) if p.is_file())
    if req.kind == "image-dir":
        files = [p for p in files if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp", ".pgm", ".npy")]

    samples, failed = [], []
    num_channels = None
    for path in files:
        rel = path.relative_to(source)
        name = "_".join(rel.with_suffix("").parts) + ".spke"
        try:
            if req.kind == "nmnist-dir":
                stream = ev.parse_nmnist_bin(path.read_bytes())
            elif req.kind == "canonical-dir":
                stream = ev.load_canonical(path.read_bytes())
            else:
                stream = _image_file_to_stream(path, req)
        except (ArgumentError, DataFormatError, OSError) as exc:
            failed.append(f"{rel}: {exc}")
            continue
        if num_channels is None:
            num_channels = stream.num_channels
        elif stream.num_channels != num_channels:
            failed.append(f"{rel}: {stream.num_channels} channels, expected {num_channels}")
            continue
        (out_dir / name).write_bytes(ev.save_canonical(stream))
        samples.append({"path": name, "label": _label_from_path(path)})

    manifest = out_dir / "manifest.json"
    ev.write_manifest(manifest, samples, num_channels or 0)
    return sc.ConvertResponse(manifest=str(manifest), converted=len(samples), failed=failed)


def _image_file_to_stream(path: Path, req: sc.ConvertRequest) -> ev.EventStream:
    if path.suffix.lower() == ".npy":
        image = np.load(path)
    else:
        from PIL import Image

        image = np.asarray(Image.open(path).convert("L"), dtype=np.float64) / 255.0
    frames = ev.image_to_raster(image, req.threshold, req.num_steps, req.num_trains)
    return ev.frames_to_stream(frames)


# --- training and evaluation ----------------------------------------------


def _history_rows(history):
    for stats in history:
        yield (stats.epoch, stats.loss, "" if stats.accuracy is None else stats.accuracy)


def run_train(req: sc.TrainRequest) -> sc.TrainResponse:
    x, y = ev.load_dataset(req.manifest, req.num_steps)
    if len(x) == 0:
        raise ArgumentError("manifest lists no samples")
    if req.architecture[0] != x.shape[-1]:
        raise ArgumentError(
            f"architecture input size {req.architecture[0]} does not match "
            f"dataset channels {x.shape[-1]}"
        )
    if y.min() < 0 or y.max() >= req.architecture[-1]:
        raise DataFormatError(
            f"labels span [{y.min()}, {y.max()}], output layer has {req.architecture[-1]} classes"
        )
    net = init_weights(req.architecture, req.seed, req.gain, _neuron_config(req.neuron))
    if req.epochs == 0:
        # eval-only: report accuracy of the initialized network, write nothing
        accuracy = evaluate_accuracy(net, x, y)
        return sc.TrainResponse(final_accuracy=accuracy)
    out_dir = _ensure_dir(req.out_dir)
    result = train(
        net, (x, y), loss="classification", epochs=req.epochs, batch_size=req.batch_size,
        seed=req.seed, optimizer=_optimizer_config(req.optimizer),
        surrogate=_surrogate(req.surrogate_sigma),
    )
    ckpt = out_dir / "checkpoint.snnc"
    save_checkpoint(ckpt, result.net, seed=req.seed,
                    optimizer=_optimizer_config(req.optimizer),
                    optimizer_state=result.optimizer_state)
    history_csv = out_dir / "history.csv"
    _write_csv(history_csv, ["epoch", "loss", "accuracy"], _history_rows(result.history))
    last = result.history[-1]
    return sc.TrainResponse(
        checkpoint=str(ckpt), history_csv=str(history_csv),
        final_loss=last.loss, final_accuracy=last.accuracy,
        diverged=result.diverged,
    )


def run_eval(req: sc.EvalRequest) -> sc.EvalResponse:
    net, _, _ = load_checkpoint(req.checkpoint)
    x, y = ev.load_dataset(req.manifest, req.num_steps)
    if len(x) == 0:
        raise ArgumentError("manifest lists no samples")
    if x.shape[-1] != net.architecture[0]:
        raise ArgumentError(
            f"dataset channels {x.shape[-1]} do not match checkpoint input "
            f"size {net.architecture[0]}"
        )
    accuracy = evaluate_accuracy(net, x, y, variant=req.variant)
    metrics_csv = None
    if req.out_dir:
        out_dir = _ensure_dir(req.out_dir)
        metrics_csv = out_dir / "metrics.csv"
        _write_csv(metrics_csv, ["metric", "value"], [
            ("accuracy", accuracy),
            ("num_samples", len(y)),
            ("variant", req.variant),
        ])
    return sc.EvalResponse(accuracy=accuracy, num_samples=len(y),
                           metrics_csv=str(metrics_csv) if metrics_csv else None)


def run_associate(req: sc.AssociateRequest) -> sc.TrainResponse:
    x, labels = ev.load_dataset(req.inputs_manifest, req.num_steps)
    tframes, tlabels = ev.load_dataset(req.targets_manifest, req.num_steps)
    if len(x) == 0 or len(tframes) == 0:
        raise ArgumentError("empty inputs or targets manifest")
    by_label = {int(l): tframes[i] for i, l in enumerate(tlabels)}
    missing = sorted(set(int(l) for l in labels) - set(by_label))
    if missing:
        raise DataFormatError(f"no target pattern for labels {missing}")
    targets = np.stack([by_label[int(l)] for l in labels])
    if req.architecture[0] != x.shape[-1] or req.architecture[-1] != targets.shape[-1]:
        raise ArgumentError(
            f"architecture {req.architecture} does not bridge {x.shape[-1]} input "
            f"channels to {targets.shape[-1]} target trains"
        )
    out_dir = _ensure_dir(req.out_dir)
    net = init_weights(req.architecture, req.seed, req.gain, _neuron_config(req.neuron))
    distance = DistanceConfig(tau_m=req.distance.tau_m, tau_s=req.distance.tau_s)
    result = train(
        net, (x, targets), loss="association", epochs=req.epochs,
        batch_size=req.batch_size, seed=req.seed,
        optimizer=_optimizer_config(req.optimizer),
        surrogate=_surrogate(req.surrogate_sigma), distance=distance,
    )
    ckpt = out_dir / "checkpoint.snnc"
    save_checkpoint(ckpt, result.net, seed=req.seed,
                    optimizer=_optimizer_config(req.optimizer),
                    optimizer_state=result.optimizer_state)
    history_csv = out_dir / "history.csv"
    _write_csv(history_csv, ["epoch", "loss", "accuracy"], _history_rows(result.history))

    raster_files = []
    if req.dump_rasters:
        outputs, _ = forward(result.net, x)
        for i in range(len(x)):
            for tag, frames in (("output", outputs[i]), ("target", targets[i])):
                path = out_dir / f"raster_{tag}_{i:03d}.csv"
                t_idx, train_idx = np.nonzero(frames)
                rows = [(int(t), int(tr), 1) for t, tr in zip(t_idx, train_idx)]
                _write_csv(path, ["time", "train_index", "value"], rows)
                raster_files.append(str(path))
    last = result.history[-1] if result.history else None
    return sc.TrainResponse(
        checkpoint=str(ckpt), history_csv=str(history_csv),
        final_loss=last.loss if last else None,
        final_accuracy=None, diverged=result.diverged, raster_files=raster_files,
    )


# --- gradcheck, sweep, circuit ---------------------------------------------


def run_gradcheck(req: sc.GradcheckRequest) -> sc.GradcheckResponse:
    rng = np.random.default_rng(req.seed)
    net = init_weights(req.architecture, req.seed, req.gain)
    frames = (rng.random((req.num_steps, req.architecture[0])) < 0.3).astype(np.float64)
    sigma = req.surrogate_sigma if req.surrogate_sigma is not None else DEFAULT_SIGMA
    per_loss = {}
    if req.loss in ("classification", "both"):
        per_loss["classification"] = grad_check(
            net, lambda o: rate_softmax_ce(o, 0), frames, eps=req.eps, sigma=sigma,
            seed=req.seed)
    if req.loss in ("association", "both"):
        targets = (rng.random((req.num_steps, req.architecture[-1])) < 0.2).astype(np.float64)
        per_loss["association"] = grad_check(
            net, lambda o: association_loss(o, targets), frames, eps=req.eps, sigma=sigma,
            seed=req.seed)
    return sc.GradcheckResponse(max_relative_error=max(per_loss.values()), per_loss=per_loss)


def run_sweep(req: sc.SweepRequest) -> sc.SweepResponse:
    net, _, _ = load_checkpoint(req.checkpoint)
    x, y = ev.load_dataset(req.manifest, req.num_steps)
    if len(x) == 0:
        raise ArgumentError("manifest lists no samples")
    rows = robustness_sweep(net, (x, y), req.bits, req.deviations, req.trials,
                            seed=req.seed, variant=req.variant)
    out_dir = _ensure_dir(req.out_dir)
    sweep_csv = out_dir / "sweep.csv"
    _write_csv(sweep_csv, ["bits", "deviation", "trial", "accuracy"],
               [(r.bits, r.deviation, r.trial, r.accuracy) for r in rows])
    summary = []
    for bits in req.bits:
        for dev in req.deviations:
            accs = [r.accuracy for r in rows if r.bits == bits and r.deviation == dev]
            summary.append({
                "bits": bits, "deviation": dev,
                "mean_accuracy": float(np.mean(accs)),
                "std_accuracy": float(np.std(accs)),
            })
    return sc.SweepResponse(sweep_csv=str(sweep_csv), rows=len(rows), summary=summary)


def run_circuit(req: sc.CircuitRequest) -> sc.CircuitResponse:
    spec = req.circuit
    params = CircuitParams(
        resistance=spec.resistance, capacitance=spec.capacitance, dt_phys=spec.dt_phys,
        v_dd=spec.v_dd, v_th_bias=spec.v_th_bias, v_in_amp=spec.v_in_amp,
        conductance=np.array([[spec.conductance]]), r_out=spec.r_out,
        sim_dt=spec.sim_dt,
    )
    if req.demo:
        steps = np.array([5, 6])
        num_steps = max(req.num_steps, 20)
    elif req.spike_steps is not None:
        steps = np.asarray(sorted(req.spike_steps), dtype=np.int64)
        num_steps = req.num_steps
    else:
        steps = poisson_spike_steps(req.poisson_rate, req.num_steps,
                                    np.random.default_rng(req.seed))
        num_steps = req.num_steps
    if steps.size and steps.max() >= num_steps:
        raise ArgumentError("spike steps must fall inside the simulated window")

    analog = circuit_sim([steps * params.dt_phys], params, num_steps * params.dt_phys)
    out_dir = _ensure_dir(req.out_dir)
    waveforms_csv = out_dir / "waveforms.csv"
    _write_csv(
        waveforms_csv, ["time_s", "k", "g", "h", "threshold", "cmp_out"],
        ((analog.times[i], analog.k[i, 0], analog.g[i, 0], analog.h[i, 0],
          analog.threshold[i, 0], analog.cmp_out[i, 0]) for i in range(len(analog.times))),
    )
    spikes_csv = out_dir / "spikes.csv"

    max_dev = unm_a = unm_d = None
    if req.compare_discrete:
        cfg, weights, _ = discrete_twin(params)
        frames = np.zeros((num_steps, 1))
        frames[steps, 0] = 1.0
        out, _ = forward(Network([Layer(weights, cfg)]), frames)
        report = match_discrete(analog, out, params.dt_phys)
        max_dev = report.max_abs_step_deviation
        unm_a, unm_d = report.unmatched_analog, report.unmatched_discrete
    _write_csv(spikes_csv, ["time_s", "step"],
               [(t, int(t / params.dt_phys)) for t in analog.spike_times[0]])
    return sc.CircuitResponse(
        waveforms_csv=str(waveforms_csv), spikes_csv=str(spikes_csv),
        output_spikes=len(analog.spike_times[0]), max_step_deviation=max_dev,
        unmatched_analog=unm_a, unmatched_discrete=unm_d,
    )


# --- synthetic datasets ----------------------------------------------------


def _frames_to_file(frames: np.ndarray, path: Path) -> None:
    stream = ev.frames_to_stream(ev.SpikeFrames(frames.astype(np.uint8)))
    path.write_bytes(ev.save_canonical(stream))


def run_synth(req: sc.SynthRequest) -> sc.SynthResponse:
    out_dir = _ensure_dir(req.out_dir)
    manifests = []
    total = 0
    if req.task == "timing-classification":
        train_x, train_y, test_x, test_y = make_timing_classification(
            num_classes=req.num_classes, channels=req.channels, num_steps=req.num_steps,
            train_per_class=req.train_per_class, test_per_class=req.test_per_class,
            jitter=req.jitter, seed=req.seed,
        )
        for split, (x, y) in (("train", (train_x, train_y)), ("test", (test_x, test_y))):
            split_dir = _ensure_dir(out_dir / split)
            samples = []
            for i in range(len(x)):
                name = f"{split}_{i:05d}.spke"
                _frames_to_file(x[i], split_dir / name)
                samples.append({"path": name, "label": int(y[i])})
            manifest = split_dir / "manifest.json"
            ev.write_manifest(manifest, samples, req.channels)
            manifests.append(str(manifest))
            total += len(x)
    else:
        inputs, targets = make_association_pairs(
            num_pairs=req.num_pairs, in_trains=req.in_trains, out_trains=req.out_trains,
            num_steps=req.num_steps, seed=req.seed,
        )
        in_dir = _ensure_dir(out_dir / "inputs")
        tgt_dir = _ensure_dir(out_dir / "targets")
        in_samples, tgt_samples = [], []
        for i in range(len(inputs)):
            in_name = f"input_{i:05d}.spke"
            tgt_name = f"target_{i:05d}.spke"
            _frames_to_file(inputs[i], in_dir / in_name)
            _frames_to_file(targets[i], tgt_dir / tgt_name)
            in_samples.append({"path": in_name, "label": i})
            tgt_samples.append({"path": tgt_name, "label": i})
        in_manifest = in_dir / "manifest.json"
        tgt_manifest = tgt_dir / "manifest.json"
        ev.write_manifest(in_manifest, in_samples, req.in_trains)
        ev.write_manifest(tgt_manifest, tgt_samples, req.out_trains)
        manifests = [str(in_manifest), str(tgt_manifest)]
        total = len(inputs) * 2
    return sc.SynthResponse(manifests=manifests, samples=total)
