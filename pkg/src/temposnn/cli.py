"""Command-line client of the experiment service.

Every subcommand builds a request, sends it to the service over HTTP, and
renders the response. Without --server the service app runs in-process, so
the CLI works standalone; with --server it talks to a running `temposnn
serve` instance sharing the same filesystem.

Exit codes: 0 success, 1 validation error, 2 data error (including partial
convert failures), 3 numeric failure (divergence, failed gradient check).
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

GRADCHECK_GATE = 1e-4


def _request(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)

    import asyncio

    from .service.app import app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, timeout=None,
                                     base_url="http://temposnn.local") as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _parse_int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p != ""]


def _parse_grid(text: str) -> list[float]:
    """Comma list ("0,0.25,0.5") or inclusive range ("0:0.5:0.1")."""
    if ":" in text:
        start, stop, step = (float(p) for p in text.split(":"))
        values = []
        v = start
        while v <= stop + 1e-12:
            values.append(round(v, 12))
            v += step
        return values
    return [float(p) for p in text.split(",") if p != ""]


def _merge_config(args, keys: dict) -> dict:
    payload = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            payload.update(json.load(fh))
    for field, value in keys.items():
        if value is not None:
            payload[field] = value
    return payload


def _nested(payload: dict, group: str, **values) -> None:
    present = {k: v for k, v in values.items() if v is not None}
    if present:
        payload.setdefault(group, {})
        payload[group].update(present)


def _post(args, path: str, payload: dict) -> dict:
    response = _request(args.server, path, payload)
    if response.status_code == 200:
        return response.json()
    try:
        body = response.json()
    except ValueError:
        body = {"kind": "validation", "detail": response.text}
    kind = body.get("kind", "validation")
    detail = body.get("detail", body)
    print(f"error ({kind}): {detail}", file=sys.stderr)
    sys.exit({"validation": EXIT_VALIDATION, "data": EXIT_DATA,
              "numeric": EXIT_NUMERIC}.get(kind, EXIT_VALIDATION))


def _neuron_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau", type=float)
    parser.add_argument("--tau-r", type=float, dest="tau_r")
    parser.add_argument("--theta", type=float)
    parser.add_argument("--v-th", type=float, dest="v_th")


def cmd_convert(args) -> int:
    payload = _merge_config(args, {
        "kind": args.kind, "source": args.source, "out_dir": args.out,
        "threshold": args.threshold, "num_steps": args.steps, "num_trains": args.trains,
    })
    body = _post(args, "/v1/convert", payload)
    print(f"converted {body['converted']} samples -> {body['manifest']}")
    for line in body["failed"]:
        print(f"failed: {line}", file=sys.stderr)
    return EXIT_DATA if body["failed"] else EXIT_OK


def cmd_synth(args) -> int:
    payload = _merge_config(args, {
        "task": args.task, "out_dir": args.out, "seed": args.seed,
        "num_classes": args.classes, "channels": args.channels,
        "num_steps": args.steps, "train_per_class": args.train_per_class,
        "test_per_class": args.test_per_class, "jitter": args.jitter,
        "num_pairs": args.pairs, "in_trains": args.in_trains,
        "out_trains": args.out_trains,
    })
    body = _post(args, "/v1/synth", payload)
    print(f"wrote {body['samples']} samples; manifests: {', '.join(body['manifests'])}")
    return EXIT_OK


def cmd_train(args) -> int:
    payload = _merge_config(args, {
        "manifest": args.manifest, "out_dir": args.out,
        "architecture": _parse_int_list(args.arch) if args.arch else None,
        "epochs": args.epochs, "batch_size": args.batch_size, "seed": args.seed,
        "num_steps": args.steps, "gain": args.gain, "surrogate_sigma": args.sigma,
    })
    _nested(payload, "neuron", tau=args.tau, tau_r=args.tau_r, theta=args.theta,
            v_th=args.v_th)
    _nested(payload, "optimizer", lr=args.lr, weight_decay=args.weight_decay)
    body = _post(args, "/v1/train", payload)
    if body["checkpoint"] is None:
        print(f"accuracy {body['final_accuracy']:.4f} (eval-only, nothing written)")
        return EXIT_OK
    acc = body.get("final_accuracy")
    acc_text = f", accuracy {acc:.4f}" if acc is not None else ""
    print(f"checkpoint: {body['checkpoint']}")
    print(f"history:    {body['history_csv']}")
    print(f"final loss {body['final_loss']:.6f}{acc_text}")
    if body["diverged"]:
        print("training diverged; checkpoint holds the last finite state", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_eval(args) -> int:
    payload = _merge_config(args, {
        "checkpoint": args.checkpoint, "manifest": args.manifest,
        "num_steps": args.steps, "variant": args.variant, "out_dir": args.out,
    })
    body = _post(args, "/v1/eval", payload)
    print(f"accuracy {body['accuracy']:.4f} on {body['num_samples']} samples "
          f"({payload.get('variant', 'adaptive')})")
    if body.get("metrics_csv"):
        print(f"metrics:    {body['metrics_csv']}")
    return EXIT_OK


def cmd_associate(args) -> int:
    payload = _merge_config(args, {
        "inputs_manifest": args.inputs, "targets_manifest": args.targets,
        "out_dir": args.out,
        "architecture": _parse_int_list(args.arch) if args.arch else None,
        "epochs": args.epochs, "batch_size": args.batch_size, "seed": args.seed,
        "num_steps": args.steps, "gain": args.gain, "surrogate_sigma": args.sigma,
        "dump_rasters": False if args.no_rasters else None,
    })
    _nested(payload, "neuron", tau=args.tau, tau_r=args.tau_r, theta=args.theta,
            v_th=args.v_th)
    _nested(payload, "optimizer", lr=args.lr, weight_decay=args.weight_decay)
    _nested(payload, "distance", tau_m=args.tau_m, tau_s=args.tau_s)
    body = _post(args, "/v1/associate", payload)
    print(f"checkpoint: {body['checkpoint']}")
    print(f"history:    {body['history_csv']}")
    loss_text = f"{body['final_loss']:.6f}" if body["final_loss"] is not None else "n/a"
    print(f"final loss {loss_text}; {len(body['raster_files'])} raster files")
    if body["diverged"]:
        print("training diverged; checkpoint holds the last finite state", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    payload = _merge_config(args, {
        "architecture": _parse_int_list(args.arch) if args.arch else None,
        "num_steps": args.steps, "seed": args.seed, "eps": args.eps,
        "surrogate_sigma": args.sigma, "loss": args.loss, "gain": args.gain,
    })
    body = _post(args, "/v1/gradcheck", payload)
    for name, err in sorted(body["per_loss"].items()):
        print(f"{name}: max relative error {err:.3e}")
    worst = body["max_relative_error"]
    print(f"max relative error {worst:.3e} (gate {GRADCHECK_GATE:.0e})")
    return EXIT_OK if worst < GRADCHECK_GATE else EXIT_NUMERIC


def cmd_sweep(args) -> int:
    payload = _merge_config(args, {
        "checkpoint": args.checkpoint, "manifest": args.manifest,
        "num_steps": args.steps, "out_dir": args.out,
        "bits": _parse_int_list(args.bits) if args.bits else None,
        "deviations": _parse_grid(args.dev) if args.dev else None,
        "trials": args.trials, "seed": args.seed, "variant": args.variant,
    })
    body = _post(args, "/v1/sweep", payload)
    print(f"sweep: {body['rows']} rows -> {body['sweep_csv']}")
    for row in body["summary"]:
        print(f"  bits={row['bits']} dev={row['deviation']:.2f} "
              f"accuracy {row['mean_accuracy']:.4f} +- {row['std_accuracy']:.4f}")
    return EXIT_OK


def cmd_circuit(args) -> int:
    payload = _merge_config(args, {
        "demo": True if args.demo else None,
        "spike_steps": _parse_int_list(args.spikes) if args.spikes else None,
        "poisson_rate": args.rate, "num_steps": args.steps, "seed": args.seed,
        "out_dir": args.out,
        "compare_discrete": False if args.no_compare else None,
    })
    _nested(payload, "circuit", resistance=args.resistance, capacitance=args.capacitance,
            dt_phys=args.dt_phys, v_dd=args.v_dd, v_th_bias=args.bias,
            v_in_amp=args.amp, conductance=args.conductance, r_out=args.r_out,
            sim_dt=args.sim_dt)
    body = _post(args, "/v1/circuit", payload)
    print(f"waveforms: {body['waveforms_csv']}")
    print(f"spikes:    {body['spikes_csv']} ({body['output_spikes']} output spikes)")
    if body.get("max_step_deviation") is not None:
        print(f"discrete match: max |dstep| {body['max_step_deviation']}, "
              f"unmatched analog/discrete {body['unmatched_analog']}/{body['unmatched_discrete']}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="temposnn",
        description="Temporal-pattern SNN experiments: data conversion, training, "
                    "hardware robustness, circuit simulation.",
    )
    parser.add_argument("--server", help="base URL of a running service; default runs in-process")
    parser.add_argument("--config", help="JSON file with request fields; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert raw datasets to canonical event files")
    p.add_argument("--kind", required=True, choices=["nmnist-dir", "image-dir", "canonical-dir"])
    p.add_argument("--source", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--trains", type=int)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("synth", help="generate synthetic benchmark datasets")
    p.add_argument("--task", required=True, choices=["timing-classification", "association"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--classes", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--train-per-class", type=int, dest="train_per_class")
    p.add_argument("--test-per-class", type=int, dest="test_per_class")
    p.add_argument("--jitter", type=int)
    p.add_argument("--pairs", type=int)
    p.add_argument("--in-trains", type=int, dest="in_trains")
    p.add_argument("--out-trains", type=int, dest="out_trains")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a classifier on a canonical dataset")
    p.add_argument("--manifest")
    p.add_argument("--out")
    p.add_argument("--arch", help="comma-separated layer sizes, e.g. 2312,500,500,10")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--gain", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", type=float, dest="weight_decay")
    _neuron_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint; --variant hard_reset swaps the neuron model")
    p.add_argument("--checkpoint")
    p.add_argument("--manifest")
    p.add_argument("--steps", type=int)
    p.add_argument("--variant", choices=["adaptive", "hard_reset"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("associate", help="train pattern association and dump rasters")
    p.add_argument("--inputs")
    p.add_argument("--targets")
    p.add_argument("--out")
    p.add_argument("--arch")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--gain", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", type=float, dest="weight_decay")
    p.add_argument("--tau-m", type=float, dest="tau_m")
    p.add_argument("--tau-s", type=float, dest="tau_s")
    p.add_argument("--no-rasters", action="store_true")
    _neuron_flags(p)
    p.set_defaults(func=cmd_associate)

    p = sub.add_parser("gradcheck", help="validate the backward pass against finite differences")
    p.add_argument("--arch")
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--gain", type=float)
    p.add_argument("--loss", choices=["classification", "association", "both"])
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("sweep", help="quantization / process-variation robustness sweep")
    p.add_argument("--checkpoint")
    p.add_argument("--manifest")
    p.add_argument("--out")
    p.add_argument("--bits", help="comma list, e.g. 4,5")
    p.add_argument("--dev", help="comma list or start:stop:step, e.g. 0:0.5:0.1")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--variant", choices=["adaptive", "hard_reset"])
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("circuit", help="simulate the RC/comparator neuron circuit")
    p.add_argument("--out", required=False)
    p.add_argument("--demo", action="store_true",
                   help="two input spikes one step apart: fire then suppress")
    p.add_argument("--spikes", help="explicit input spike steps, comma list")
    p.add_argument("--rate", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-compare", action="store_true")
    p.add_argument("--resistance", type=float)
    p.add_argument("--capacitance", type=float)
    p.add_argument("--dt-phys", type=float, dest="dt_phys")
    p.add_argument("--v-dd", type=float, dest="v_dd")
    p.add_argument("--bias", type=float)
    p.add_argument("--amp", type=float)
    p.add_argument("--conductance", type=float)
    p.add_argument("--r-out", type=float, dest="r_out")
    p.add_argument("--sim-dt", type=float, dest="sim_dt")
    p.set_defaults(func=cmd_circuit)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
