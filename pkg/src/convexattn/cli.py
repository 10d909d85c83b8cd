"""Command-line front end.

Subcommands: synth, train, eval, predict, verify, bench, export.
Exit codes: 0 success, 1 check/assertion failure, 2 usage/config error.
Diagnostics go to stderr; data goes to stdout or files.
"""

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dataio, trainer, verify
from .features import PatchSpec
from .model import (
    ModelFormatError,
    load_model,
    param_count,
    predict,
    save_model,
)
from .numutil import RngStream

CONFIG_KEYS = {
    "nuclear_radius", "m", "gamma", "eta", "epochs", "batch_size",
    "batches_per_epoch", "loss_kind", "seed", "n_classes",
    "channels", "frames", "patches", "variance_meta",
}


class UsageError(Exception):
    pass


def _load_config(args):
    """Build a TrainConfig from --preset and/or --config plus overrides."""
    values = {}
    if args.preset:
        if args.preset not in trainer.PRESETS:
            raise UsageError(
                f"unknown preset {args.preset!r}; valid: {sorted(trainer.PRESETS)}"
            )
        values.update(trainer.PRESETS[args.preset])
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise UsageError(f"{path}: invalid JSON: {e}")
        unknown = set(loaded) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"{path}: unknown config keys {sorted(unknown)}")
        values.update(loaded)
    if not values:
        raise UsageError("need --preset or --config")
    if args.seed is not None:
        values["seed"] = args.seed
    if getattr(args, "loss", None):
        values["loss_kind"] = args.loss
    values.setdefault("channels", 4)
    values.setdefault("seed", 0)
    spec = PatchSpec(
        channels=values.pop("channels"),
        frames=values.pop("frames"),
        patches=values.pop("patches"),
    )
    try:
        cfg = trainer.TrainConfig(spec=spec, **values)
    except (TypeError, ValueError) as e:
        raise UsageError(f"bad configuration: {e}")
    print(f"config: {cfg}", file=sys.stderr)
    return cfg


def _load_dataset(path):
    path = Path(path)
    if not path.exists():
        raise UsageError(f"data file not found: {path}")
    try:
        return dataio.load_csv(path)
    except ValueError as e:
        raise UsageError(str(e))


def cmd_synth(args):
    try:
        cfg = dataio.SynthConfig(
            kind=args.kind,
            samples_per_class=args.n_per_class,
            noise_stddev=args.noise,
            amplitude=args.amplitude,
            drift_rate=args.drift,
            seed=args.seed if args.seed is not None else 0,
        )
    except ValueError as e:
        raise UsageError(f"{e}; valid kinds: tap, swipe")
    ds = dataio.synth_generate(cfg)
    dataio.save_csv(ds, args.out)
    print(f"wrote {len(ds.samples)} samples ({len(ds.class_names)} classes) to {args.out}")
    return 0


def cmd_train(args):
    cfg = _load_config(args)
    ds = _load_dataset(args.data)
    try:
        bundle, report = trainer.train(ds, cfg)
    except ValueError as e:
        raise UsageError(str(e))
    trainable, fixed = param_count(bundle)
    print(f"trainable={trainable} fixed={fixed} total={trainable + fixed}")
    print(
        f"final loss={report.epoch_loss[-1]:.6f} "
        f"train_acc={report.epoch_accuracy[-1]:.4f} "
        f"nuclear_norm={report.final_nuclear_norm:.4f} "
        f"converged_epoch={report.epochs_to_convergence}"
    )
    nbytes = save_model(bundle, args.out_model)
    print(f"wrote model ({nbytes} bytes) to {args.out_model}")
    if args.report:
        lines = ["epoch\tloss\ttrain_accuracy\tnuclear_norm"]
        for i, (l, a, nn) in enumerate(
            zip(report.epoch_loss, report.epoch_accuracy, report.epoch_nuclear_norm), 1
        ):
            lines.append(f"{i}\t{l:.12g}\t{a:.6f}\t{nn:.12g}")
        Path(args.report).write_text("\n".join(lines) + "\n")
    return 0


def cmd_eval(args):
    cfg = _load_config(args)
    ds = _load_dataset(args.data)
    try:
        if args.mode == "kfold":
            print(f"methodology: stratified {args.folds}-fold cross-validation")
            res = trainer.kfold_evaluate(ds, cfg, folds=args.folds, jobs=args.jobs)
            print(
                f"accuracy: {res.mean_accuracy:.4f} +/- {res.std_accuracy:.4f}  "
                f"macro_f1: {res.mean_f1:.4f} +/- {res.std_f1:.4f}"
            )
        else:
            print("methodology: stratified 60-20-20 train-validation-test split")
            res = trainer.split_evaluate(ds, cfg)
            print(
                f"accuracy: {res['test_accuracy']:.4f}  "
                f"macro_f1: {res['test_macro_f1']:.4f}  "
                f"split sizes: {res['sizes']}"
            )
    except ValueError as e:
        raise UsageError(str(e))
    return 0


def _load_bundle(path):
    path = Path(path)
    if not path.exists():
        raise UsageError(f"model file not found: {path}")
    try:
        return load_model(path)
    except ModelFormatError as e:
        raise UsageError(f"{path}: {e}")


def cmd_predict(args):
    bundle = _load_bundle(args.model)
    ds = _load_dataset(args.data)
    lines = ["gesture_id,predicted_class," + ",".join(
        f"score_{c}" for c in ds.class_names[: bundle.n_classes]
    )]
    for s in ds.samples:
        try:
            label, f = predict(s.X, bundle)
        except ValueError as e:
            raise UsageError(f"sample {s.meta}: {e}")
        scores = ",".join(f"{v:.9g}" for v in f)
        lines.append(f"{s.meta},{ds.class_names[label]},{scores}")
    out = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)
    return 0


def cmd_verify(args):
    bundle = _load_bundle(args.model)
    ds = _load_dataset(args.data)
    X, y = ds.stacked()
    rng = RngStream(args.seed if args.seed is not None else 0)
    failed = False
    for off, kind in enumerate(("hinge", "squared")):
        try:
            rep = verify.convexity_check(
                bundle, X, y, trials=args.trials, noise_stddev=args.noise,
                rng=rng.derive(10 + off), loss_kind=kind,
            )
        except ValueError as e:
            raise UsageError(str(e))
        print(
            f"{kind}: {rep.satisfied}/{rep.trials} satisfied "
            f"(mean violation {rep.mean_violation:.3e}, "
            f"max {rep.max_violation:.3e})"
        )
        failed |= not rep.passed
    sweep = verify.nonexpansiveness_sweep(1000, bundle.spec.patches, rng.derive(7))
    print(
        f"nonexpansiveness: max ratio {sweep.max_ratio:.9f} "
        f"firm_ok={sweep.firm_ok} skipped={sweep.skipped}"
    )
    failed |= not sweep.passed
    ce = verify.softmax_counterexample()
    print(
        f"softmax counterexample: midpoint {ce.midpoint_first:.3f} vs "
        f"interpolated {ce.interpolated_first:.3f} "
        f"jensen_violated={ce.jensen_violated} "
        f"distance_convex_ok={ce.distance_convex_ok}"
    )
    failed |= not ce.passed
    return 1 if failed else 0


def cmd_bench(args):
    bundle = _load_bundle(args.model)
    ds = _load_dataset(args.data)
    X0 = ds.samples[0].X
    for _ in range(10):
        predict(X0, bundle)
    times = np.empty(args.iters)
    for i in range(args.iters):
        s = ds.samples[i % len(ds.samples)].X
        t0 = time.perf_counter_ns()
        predict(s, bundle)
        times[i] = time.perf_counter_ns() - t0
    mean_us = times.mean() / 1000.0
    std_us = times.std() / 1000.0 if args.iters > 1 else 0.0
    size = len(Path(args.model).read_bytes())
    print(f"latency: mean {mean_us:.2f} us, std {std_us:.2f} us over {args.iters} runs")
    # preprocessing cost measured separately; inference latency above
    # deliberately excludes it
    t0 = time.perf_counter_ns()
    for _ in range(10):
        dataio.smooth(dataio.remove_drift(X0, sample_rate=ds.sample_rate))
    pp_us = (time.perf_counter_ns() - t0) / 10 / 1000.0 / X0.shape[1]
    print(f"preprocessing: {pp_us:.2f} us per frame (excluded from latency)")
    print(f"model size: {size} bytes")
    return 0


def cmd_export(args):
    bundle = _load_bundle(args.model)
    nbytes = save_model(bundle, args.out, precision=args.precision)
    print(f"wrote {args.precision}-bit model ({nbytes} bytes) to {args.out}")
    if args.data:
        ds = _load_dataset(args.data)
        exported = load_model(args.out)
        mismatch = sum(
            predict(s.X, bundle)[0] != predict(s.X, exported)[0]
            for s in ds.samples
        )
        print(f"label parity: {len(ds.samples) - mismatch}/{len(ds.samples)} match")
        if mismatch:
            return 1
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="convexattn",
        description="Convex attention gesture classifier: data synthesis, "
        "training, evaluation, verification, and export.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic gesture dataset")
    s.add_argument("--kind", required=True)
    s.add_argument("--n-per-class", type=int, default=100)
    s.add_argument("--noise", type=float, default=0.05)
    s.add_argument("--amplitude", type=float, default=1.0)
    s.add_argument("--drift", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    def add_cfg(sp):
        sp.add_argument("--preset", choices=sorted(trainer.PRESETS), default=None)
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--loss", choices=["hinge", "squared"], default=None)

    s = sub.add_parser("train", help="train a model")
    s.add_argument("--data", required=True)
    add_cfg(s)
    s.add_argument("--out-model", required=True)
    s.add_argument("--report", default=None)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="k-fold or split evaluation")
    s.add_argument("--data", required=True)
    s.add_argument("--mode", choices=["kfold", "split"], default="kfold")
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--jobs", type=int, default=1,
                   help="fold-level worker processes (results identical)")
    add_cfg(s)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("predict", help="classify gestures from a CSV")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("verify", help="run convexity checks")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--noise", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("bench", help="measure single-sample inference latency")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--iters", type=int, default=100)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("export", help="write a compact 32-bit model file")
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--precision", type=int, choices=[32, 64], default=32)
    s.add_argument("--data", default=None, help="optional parity-check dataset")
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
