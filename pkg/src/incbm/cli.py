"""Command-line interface.

Subcommands: synth, ingest, train, eval, explain, select-concepts. Exit
codes are fixed: 0 success, 1 runtime failure, 2 invalid configuration or
usage, 3 data errors. Commands never mutate their input directories;
everything they write goes to explicitly named output paths. Errors print
as a single machine-parsable line on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bundle import EmbeddingBundle, ingest_bundle, save_bundle, task_view
from .checkpoint import load_checkpoint
from .config import load_run_config
from .exceptions import ConfigError, DataError, IncbmError
from .explain import build_report, render_svg, report_to_json
from .metrics import (build_metrics_report, confusion_summary, save_metrics,
                      task_accuracy)
from .synth import SynthSpec, make_synthetic_bundle
from .trainer import run_sequence, select_task_concepts


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        tasks=args.tasks,
        classes_per_task=args.classes_per_task,
        dim=args.dim,
        train_per_class=args.train_per_class,
        test_per_class=args.test_per_class,
        concepts_per_class=args.concepts_per_class,
        distractors_per_class=args.distractors_per_class,
        feature_noise=args.feature_noise,
        concept_noise=args.concept_noise,
        seed=args.seed,
    )
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    bundle = make_synthetic_bundle(spec)
    save_bundle(bundle, args.out)
    print(json.dumps({"out": str(args.out), "classes": bundle.n_classes,
                      "samples": bundle.n_samples, "concepts": len(bundle.concepts),
                      "tasks": len(bundle.task_plan), "seed": spec.seed},
                     sort_keys=True))
    return 0


def _cmd_ingest(args) -> int:
    bundle = ingest_bundle(args.bundle)
    if args.out is not None:
        save_bundle(bundle, args.out)
    n_test = int(bundle.split.sum())
    print(json.dumps({
        "dim": bundle.dim,
        "classes": bundle.n_classes,
        "samples": bundle.n_samples,
        "train": bundle.n_samples - n_test,
        "test": n_test,
        "concepts": len(bundle.concepts),
        "tasks": len(bundle.task_plan),
    }, sort_keys=True))
    return 0


def _load_bundle_for(config) -> EmbeddingBundle:
    bundle = ingest_bundle(config.dataset)
    if config.task_plan is not None:
        bundle = bundle.with_task_plan(config.task_plan)
    return bundle


def _cmd_train(args) -> int:
    config = load_run_config(args.config).with_seed(args.seed)
    if args.no_augment:
        config = replace(config, train=replace(config.train, augment=False))
    bundle = _load_bundle_for(config)
    run = run_sequence(bundle, config.train, out_dir=args.out)
    print(json.dumps({
        "out": str(args.out),
        "last_accuracy": run.metrics.last_accuracy,
        "average_incremental_accuracy": run.metrics.average_incremental_accuracy,
        "seed": config.train.seed,
    }, sort_keys=True))
    return 0


def _checkpoint_dirs(run_dir: Path) -> list[Path]:
    dirs = sorted(p for p in run_dir.iterdir() if p.is_dir() and p.name.startswith("task_"))
    if not dirs:
        raise DataError(f"no task checkpoints found under {run_dir}")
    return dirs


def _cmd_eval(args) -> int:
    run_dir = Path(args.run)
    if not run_dir.is_dir():
        raise DataError(f"run directory {run_dir} does not exist")
    bundle = ingest_bundle(args.data)

    accuracies: list[float] = []
    confusions: list[dict] = []
    seed = None
    for ckpt_dir in _checkpoint_dirs(run_dir):
        ckpt = load_checkpoint(ckpt_dir)
        seed = ckpt.config.get("seed", 0) if seed is None else seed
        evald = bundle.with_task_plan(ckpt.task_plan)
        view = task_view(evald, ckpt.task)
        model = ckpt.to_model()
        if model.dim != bundle.dim:
            raise DataError(
                f"checkpoint dim {model.dim} does not match bundle dim {bundle.dim}")
        accuracies.append(task_accuracy(model, view.test_features, view.test_labels))
        confusions.append(confusion_summary(model, view.test_features, view.test_labels))

    report = build_metrics_report(accuracies, confusions, seed if seed is not None else 0)
    save_metrics(report, args.out)
    print(json.dumps({
        "out": str(args.out),
        "last_accuracy": report.last_accuracy,
        "average_incremental_accuracy": report.average_incremental_accuracy,
    }, sort_keys=True))
    return 0


def _cmd_explain(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    bundle = ingest_bundle(args.data)
    model = ckpt.to_model()
    if model.dim != bundle.dim:
        raise DataError(f"checkpoint dim {model.dim} does not match bundle dim {bundle.dim}")
    if not 0 <= args.sample < bundle.n_samples:
        raise DataError(f"sample {args.sample} out of range 0..{bundle.n_samples - 1}")
    feature = bundle.images[args.sample].astype(np.float64)

    if args.class_id is not None:
        if args.class_id not in model.class_registry:
            raise DataError(f"class {args.class_id} is not registered in this checkpoint")
        class_id = args.class_id
    else:
        class_id = int(model.predict(feature[None, :])[0])

    report = build_report(model, feature, args.sample, class_id, top_k=args.top_k)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f"{args.sample}.explain.json"
    json_path.write_text(report_to_json(report), encoding="utf-8")
    written = [str(json_path)]
    if args.svg:
        svg_path = out_dir / f"{args.sample}.explain.svg"
        svg_path.write_text(render_svg(report), encoding="utf-8")
        written.append(str(svg_path))
    print(json.dumps({"written": written, "class": class_id,
                      "logit": report.logit}, sort_keys=True))
    return 0


def _cmd_select_concepts(args) -> int:
    config = load_run_config(args.config).with_seed(args.seed)
    bundle = _load_bundle_for(config)
    n_tasks = len(bundle.task_plan)
    if not 1 <= args.task <= n_tasks:
        raise DataError(f"task {args.task} out of range 1..{n_tasks}")
    view = task_view(bundle, args.task)
    rng = np.random.default_rng(config.train.seed)
    selection = select_task_concepts(view, config.train, rng)
    ids = [int(view.concept_ids[i]) for i in selection.indices]
    payload = {
        "task": args.task,
        "seed": config.train.seed,
        "concept_ids": ids,
        "concepts": [view.concept_strings[i] for i in selection.indices],
        "n_pool": int(view.concept_ids.shape[0]),
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        Path(args.out).write_text(text, encoding="utf-8")
        print(json.dumps({"out": str(args.out), "selected": len(ids)}, sort_keys=True))
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="incbm",
        description="Class-incremental concept-bottleneck training over embedding bundles.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic embedding bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--tasks", type=int, default=5)
    p.add_argument("--classes-per-task", type=int, default=4)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--train-per-class", type=int, default=100)
    p.add_argument("--test-per-class", type=int, default=50)
    p.add_argument("--concepts-per-class", type=int, default=10)
    p.add_argument("--distractors-per-class", type=int, default=2)
    p.add_argument("--feature-noise", type=float, default=0.2)
    p.add_argument("--concept-noise", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=1993)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="validate a bundle directory")
    p.add_argument("bundle")
    p.add_argument("--out", default=None,
                   help="write the normalized bundle to this directory")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("train", help="run the incremental training sequence")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--no-augment", action="store_true",
                   help="disable prototype-based pseudo-features")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="recompute metrics from saved checkpoints")
    p.add_argument("--run", required=True, help="directory written by train")
    p.add_argument("--data", required=True, help="bundle directory")
    p.add_argument("--out", required=True, help="metrics.json destination")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("explain", help="write a concept attribution report")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--sample", type=int, required=True,
                   help="row index into the bundle")
    p.add_argument("--class", dest="class_id", type=int, default=None,
                   help="class to explain (default: the prediction)")
    p.add_argument("--top-k", type=int, default=7)
    p.add_argument("--svg", action="store_true", help="also render an SVG bar chart")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("select-concepts", help="run concept selection for one task")
    p.add_argument("--config", required=True)
    p.add_argument("--task", type=int, required=True, help="1-based task index")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_select_concepts)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except IncbmError as exc:
        kind = {2: "config", 3: "data"}.get(exc.exit_code, "runtime")
        print(f"error: {kind}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError, IndexError, TypeError, RuntimeError) as exc:
        print(f"error: runtime: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
