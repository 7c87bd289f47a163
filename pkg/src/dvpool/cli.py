"""Command-line front end for pooling, metrics, data generation and probes.

Subcommands:

``pool``
    Pool a batch of feature maps (NPY, N x C x H x W or N x C x D x H x W)
    into feature vectors with a JSON pooling config.

``metrics``
    Evaluate probabilities or logits against labels; writes a JSON report
    with percent-formatted headline numbers (raw values under ``raw``).

``synth``
    Generate a synthetic dual-view dataset into a directory.

``probe``
    Train a linear probe on feature vectors; writes weights, bias, its
    predicted probabilities on the training inputs, and a JSON sidecar.

Every run writes exactly one run manifest recording the command, the
effective config, sha256 hashes of the inputs, the output paths, wall time
and library version. Exit status is 0 only when all outputs were written
and re-read successfully.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .metrics import PredictionSet, accuracy, balanced_accuracy, brier, cohen_kappa, ece, macro_f1, temperature_fit
from .npyio import read_labels, read_npy_file, write_npy_file
from .pooling import DvppConfig, pool_batch
from .probe import TrainSpec, save_probe, train
from .synth import SynthSpec, generate
from .tensor import ContractError


def _resolve_threads(flag: int | None) -> int:
    if flag is not None:
        value = flag
    else:
        env = os.environ.get("DVPOOL_THREADS")
        if env is not None:
            try:
                value = int(env)
            except ValueError:
                raise ContractError(f"DVPOOL_THREADS must be an integer, got {env!r}") from None
        else:
            value = os.cpu_count() or 1
    if value < 1:
        raise ContractError(f"thread count must be at least 1, got {value}")
    return value


def _sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(path: Path, command: str, config: dict,
                    inputs: list, outputs: list, started: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(o) for o in outputs],
        "wall_time_s": round(time.perf_counter() - started, 6),
        "version": __version__,
    }
    path.write_text(json.dumps(manifest, indent=2) + "\n")


def _check_written(path: Path, expected: np.ndarray) -> None:
    back = read_npy_file(path)
    if back.shape != expected.shape or not np.array_equal(back, expected):
        raise ContractError(f"verification re-read of {path} does not match what was written")


def _cmd_pool(args) -> int:
    started = time.perf_counter()
    threads = _resolve_threads(args.threads)
    cfg = DvppConfig.from_json(Path(args.config).read_text())
    maps = read_npy_file(args.input)
    feats = pool_batch(maps, cfg, threads=threads)
    out = Path(args.output)
    write_npy_file(out, feats)
    _check_written(out, feats)
    _write_manifest(Path(str(out) + ".manifest.json"), "pool", cfg.to_dict(),
                    [args.input, args.config], [out], started)
    print(f"pooled {feats.shape[0]} maps -> {feats.shape[1]} features each: {out}")
    return 0


def _percent(x: float) -> float:
    return round(100.0 * x, 2)


def _cmd_metrics(args) -> int:
    started = time.perf_counter()
    if (args.probs is None) == (args.logits is None):
        raise ContractError("exactly one of --probs or --logits is required")
    labels = read_labels(args.labels)
    if args.probs is not None:
        source = Path(args.probs)
        probs = read_npy_file(source)
        pset = PredictionSet(probs, labels)
        logits = np.log(np.maximum(pset.probs, 1e-300))
    else:
        source = Path(args.logits)
        logits = read_npy_file(source)
        pset = PredictionSet.from_logits(logits, labels)

    table = ece(pset, args.bins)
    raw = {
        "acc": accuracy(pset),
        "bacc": balanced_accuracy(pset),
        "mf1": macro_f1(pset),
        "kappa": cohen_kappa(pset, args.kappa),
        "ece": table.ece,
        "brier": brier(pset),
    }
    report = {name: _percent(value) for name, value in raw.items()}
    report["bins"] = table.to_dict()["bins"]
    report["raw"] = raw
    report["kappa_weighting"] = args.kappa
    report["n"] = pset.n_samples

    if args.fit_temperature:
        fit = temperature_fit(logits, pset.labels)
        scaled = PredictionSet.from_logits(logits / fit.temperature, pset.labels)
        scaled_raw = {"ece": ece(scaled, args.bins).ece, "brier": brier(scaled)}
        report["temperature"] = {
            "t": fit.temperature,
            "nll": fit.nll,
            "degenerate": fit.degenerate,
            "at_boundary": fit.at_boundary,
        }
        report["post_scaling"] = {
            "ece": _percent(scaled_raw["ece"]),
            "brier": _percent(scaled_raw["brier"]),
            "raw": scaled_raw,
        }

    out = Path(args.output)
    out.write_text(json.dumps(report, indent=2) + "\n")
    outputs = [out]
    if args.reliability_csv:
        csv_path = Path(args.reliability_csv)
        lines = ["lower,upper,count,confidence,accuracy"]
        lines += [f"{b.lower},{b.upper},{b.count},{b.mean_confidence},{b.accuracy}"
                  for b in table.bins]
        csv_path.write_text("\n".join(lines) + "\n")
        outputs.append(csv_path)
    config = {"bins": args.bins, "kappa": args.kappa, "fit_temperature": bool(args.fit_temperature)}
    _write_manifest(Path(str(out) + ".manifest.json"), "metrics", config,
                    [source, args.labels], outputs, started)
    print(json.dumps({k: report[k] for k in ("acc", "bacc", "mf1", "kappa", "ece", "brier")}))
    return 0


def _cmd_synth(args) -> int:
    started = time.perf_counter()
    if args.spec:
        spec = SynthSpec.from_dict(json.loads(Path(args.spec).read_text()))
        inputs = [args.spec]
    else:
        spec = SynthSpec()
        inputs = []
    result = generate(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    features_path = out_dir / "features.npy"
    labels_path = out_dir / "labels.npy"
    write_npy_file(features_path, result.features)
    write_npy_file(labels_path, result.labels)
    _check_written(features_path, result.features)
    _check_written(labels_path, result.labels)
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(result.manifest, indent=2) + "\n")
    outputs = [features_path, labels_path, manifest_path]
    _write_manifest(out_dir / "run_manifest.json", "synth", spec.to_dict(),
                    inputs, outputs, started)
    print(f"generated {result.features.shape[0]} samples in {out_dir}")
    return 0


def _cmd_probe(args) -> int:
    started = time.perf_counter()
    features = read_npy_file(args.features)
    labels = read_labels(args.labels)
    if args.spec:
        spec = TrainSpec.from_dict(json.loads(Path(args.spec).read_text()))
        inputs = [args.features, args.labels, args.spec]
    else:
        spec = TrainSpec()
        inputs = [args.features, args.labels]
    model, _ = train(features, labels, spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_probe(model, out_dir, spec)
    probs = model.predict_proba(features)
    probs_path = out_dir / "probs.npy"
    write_npy_file(probs_path, probs)
    _check_written(out_dir / "weights.npy", model.weights)
    _check_written(out_dir / "bias.npy", model.bias)
    _check_written(probs_path, probs)
    outputs = [out_dir / "weights.npy", out_dir / "bias.npy",
               out_dir / "probe.json", probs_path]
    _write_manifest(out_dir / "run_manifest.json", "probe", spec.to_dict(),
                    inputs, outputs, started)
    print(f"trained probe on {features.shape[0]} samples -> {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dvpool",
                                     description="Dual-view pyramid pooling toolkit")
    parser.add_argument("--version", action="version", version=f"dvpool {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pool", help="pool feature maps into feature vectors")
    p.add_argument("--input", required=True, help="NPY batch of feature maps")
    p.add_argument("--config", required=True, help="pooling config JSON")
    p.add_argument("--output", required=True, help="NPY feature-vector output")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: DVPOOL_THREADS or CPU count)")
    p.set_defaults(handler=_cmd_pool)

    m = sub.add_parser("metrics", help="evaluate predictions against labels")
    m.add_argument("--probs", help="NPY N x K probability matrix")
    m.add_argument("--logits", help="NPY N x K logit matrix")
    m.add_argument("--labels", required=True, help="NPY int64 vector or CSV with 'label' header")
    m.add_argument("--bins", type=int, default=15, help="calibration bins (default 15)")
    m.add_argument("--kappa", choices=("unweighted", "quadratic"), default="unweighted")
    m.add_argument("--fit-temperature", action="store_true",
                   help="also fit a temperature and report post-scaling calibration")
    m.add_argument("--output", required=True, help="JSON report path")
    m.add_argument("--reliability-csv", help="optional per-bin CSV table")
    m.set_defaults(handler=_cmd_metrics)

    s = sub.add_parser("synth", help="generate a synthetic dual-view dataset")
    s.add_argument("--spec", help="generator spec JSON (defaults used when omitted)")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(handler=_cmd_synth)

    q = sub.add_parser("probe", help="train a linear probe on feature vectors")
    q.add_argument("--features", required=True, help="NPY N x D feature matrix")
    q.add_argument("--labels", required=True, help="NPY int64 vector or CSV with 'label' header")
    q.add_argument("--spec", help="training spec JSON (defaults used when omitted)")
    q.add_argument("--out", required=True, help="output directory")
    q.set_defaults(handler=_cmd_probe)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
