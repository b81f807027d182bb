"""Command-line entry point: simulate, train, evaluate, report, all.

Commands compose through the output directory only:

    <out>/dataset/   manifest.json + split_*.bin        (simulate)
    <out>/run/       checkpoint.bin, logs, config snapshot  (train)
    <out>/eval/      report.json, timing.json, scores_*.txt (evaluate)
    <out>/eval/plots/  ROC/PR/confusion images            (report)
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import torch

from .config import EvalConfig, RunConfig, worker_count
from .dataset import build_dataset
from .detector import HaroodDetector
from .evaluate import evaluate_detector, save_report
from .network import (
    load_checkpoint,
    load_module_tensors,
    module_tensors,
    save_checkpoint,
)
from .plots import render_plots
from .store import DatasetManifest, read_samples, records_to_arrays


class CliError(Exception):
    pass


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise CliError(f"config not found: {path}")
        config = RunConfig.from_file(path)
    else:
        config = RunConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None):
        overrides["out_dir"] = args.out
    if overrides:
        data = config.to_dict()
        data.update(overrides)
        config = RunConfig.from_dict(data)
    return config


def _dataset_dir(config: RunConfig) -> Path:
    return Path(config.out_dir) / "dataset"


def _run_dir(config: RunConfig) -> Path:
    return Path(config.out_dir) / "run"


def _eval_dir(config: RunConfig) -> Path:
    return Path(config.out_dir) / "eval"


def cmd_simulate(args) -> int:
    config = _load_config(args)
    out = _dataset_dir(config)
    manifest = build_dataset(
        config.recipe,
        config.radar,
        out,
        seed=config.seed,
        accum_window=config.accum_window,
        accum_decay=config.accum_decay,
        workers=worker_count(),
    )
    config.save(out / "config_snapshot.json")
    counts = manifest.split_counts()
    print(f"dataset written to {out} ({counts})")
    return 0


def _load_split_arrays(manifest: DatasetManifest, split: str):
    records = read_samples(manifest, split)
    if not records:
        return None, None, None
    X, y = records_to_arrays(records)
    ids = np.array([rec.id for rec in records], dtype=np.int64)
    return X, y, ids


def _detector_from_config(config: RunConfig) -> HaroodDetector:
    return HaroodDetector(
        encoder_channels=config.model.encoder_channels,
        head_channels=config.model.head_channels,
        embed_dim=config.model.embed_dim,
        classifier_hidden=config.model.classifier_hidden,
        stage1_epochs=config.train.stage1_epochs,
        contrastive_epochs=config.train.contrastive_epochs,
        batch_size=config.train.batch_size,
        stage1_lr=config.train.stage1_lr,
        stage2_epochs=config.train.stage2_epochs,
        stage2_lr=config.train.stage2_lr,
        triplet_margin=config.train.triplet_margin,
        contrastive_margin=config.train.contrastive_margin,
        macro_weight=config.eval.macro_weight,
        micro_weight=config.eval.micro_weight,
        target_tpr=config.eval.target_tpr,
        seed=config.seed,
    )


def cmd_train(args) -> int:
    config = _load_config(args)
    dataset_dir = _dataset_dir(config)
    if not (dataset_dir / "manifest.json").exists():
        raise CliError(f"dataset not found under {dataset_dir}; run `harood simulate` first")
    manifest = DatasetManifest.load(dataset_dir)

    X_train, y_train, _ = _load_split_arrays(manifest, "train")
    X_oe, y_oe, _ = _load_split_arrays(manifest, "oe")
    X_cal, _, _ = _load_split_arrays(manifest, "calibration")
    if X_train is None:
        raise CliError("train split is empty")
    if X_oe is None:
        raise CliError("oe split is empty; the contrastive stage needs it")

    X_fit = np.concatenate([X_train, X_oe], axis=0)
    y_fit = np.concatenate([y_train, y_oe], axis=0)

    detector = _detector_from_config(config)
    detector.fit(X_fit, y_fit, X_calibration=X_cal)

    run_dir = _run_dir(config)
    run_dir.mkdir(parents=True, exist_ok=True)
    tensors = module_tensors(detector.net_, prefix="net.")
    tensors.update(module_tensors(detector.classifier_, prefix="classifier."))
    tensors["ood.threshold"] = np.float32(detector.threshold_.value)
    tensors["ood.target_tpr"] = np.float32(detector.threshold_.target_tpr)
    tensors["ood.n_calibration"] = np.float32(detector.threshold_.n_calibration)
    save_checkpoint(run_dir / "checkpoint.bin", tensors)
    detector.stage1_log_.save(run_dir / "stage1_log.json")
    detector.stage2_log_.save(run_dir / "stage2_log.json")
    config.save(run_dir / "config_snapshot.json")
    print(f"checkpoint written to {run_dir / 'checkpoint.bin'}")
    return 0


def load_detector(checkpoint_path: Path, config: RunConfig) -> HaroodDetector:
    """Rebuild a fitted detector from a checkpoint plus its config."""
    from .network import ActivityClassifier, HaroodNet
    from .scoring import Threshold

    tensors = load_checkpoint(checkpoint_path)
    detector = _detector_from_config(config)
    torch.manual_seed(0)
    net = HaroodNet(config.model)
    load_module_tensors(net, tensors, prefix="net.")
    classifier = ActivityClassifier(config.model.embed_dim, config.model.classifier_hidden)
    load_module_tensors(classifier, tensors, prefix="classifier.")
    for key in ("ood.threshold", "ood.target_tpr", "ood.n_calibration"):
        if key not in tensors:
            raise CliError(f"checkpoint missing tensor {key!r}")
    detector.net_ = net
    detector.classifier_ = classifier
    detector.threshold_ = Threshold(
        value=float(tensors["ood.threshold"]),
        target_tpr=float(tensors["ood.target_tpr"]),
        n_calibration=int(tensors["ood.n_calibration"]),
    )
    return detector


def _resolve_eval_config(config: RunConfig, args) -> EvalConfig:
    if getattr(args, "baselines", None):
        names = tuple(n.strip() for n in args.baselines.split(",") if n.strip())
        data = config.to_dict()
        data["eval"]["baselines"] = list(names)
        config = RunConfig.from_dict(data)
    if getattr(args, "plots", False):
        data = config.to_dict()
        data["eval"]["plots"] = True
        config = RunConfig.from_dict(data)
    return config.eval


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    checkpoint = Path(args.checkpoint) if args.checkpoint else _run_dir(config) / "checkpoint.bin"
    if not checkpoint.exists():
        raise CliError(f"checkpoint not found: {checkpoint}")
    snapshot = checkpoint.parent / "config_snapshot.json"
    if snapshot.exists() and not getattr(args, "config", None):
        config = RunConfig.from_file(snapshot)
        if getattr(args, "out", None):
            data = config.to_dict()
            data["out_dir"] = args.out
            config = RunConfig.from_dict(data)
    eval_config = _resolve_eval_config(config, args)

    manifest = DatasetManifest.load(_dataset_dir(config))
    X_test, y_test, ids = _load_split_arrays(manifest, "test")
    if X_test is None:
        raise CliError("test split is empty")

    detector = load_detector(checkpoint, config)
    report = evaluate_detector(detector, X_test, y_test, eval_config)
    eval_dir = _eval_dir(config)
    save_report(report, eval_dir, y_test=y_test, sample_ids=ids)
    config.save(eval_dir / "config_snapshot.json")
    if eval_config.plots:
        render_plots(report._scores, y_test, report.confusion, eval_dir / "plots")
    print(
        f"report written to {eval_dir / 'report.json'} "
        f"(avg accuracy {report.average_accuracy:.4f}, avg AUROC {report.average_auroc:.4f})"
    )
    return 0


def cmd_report(args) -> int:
    config = _load_config(args)
    eval_dir = _eval_dir(config)
    report_path = eval_dir / "report.json"
    if not report_path.exists():
        raise CliError(f"report not found: {report_path}; run `harood evaluate` first")
    with open(report_path) as fh:
        report = json.load(fh)
    labels_path = eval_dir / "labels.txt"
    if not labels_path.exists():
        raise CliError(f"labels file not found: {labels_path}")
    labels = np.loadtxt(labels_path, dtype=np.int64, ndmin=2)[:, 1]
    scores_by_method = {}
    for path in sorted(eval_dir.glob("scores_*.txt")):
        method = path.stem.replace("scores_", "")
        scores_by_method[method] = np.loadtxt(path, ndmin=2)[:, 1]
    if not scores_by_method:
        raise CliError(f"no score files found under {eval_dir}")
    written = render_plots(scores_by_method, labels, report["confusion"], eval_dir / "plots")
    print(f"wrote {len(written)} plots to {eval_dir / 'plots'}")
    return 0


def cmd_all(args) -> int:
    for step in (cmd_simulate, cmd_train, cmd_evaluate):
        rc = step(args)
        if rc != 0:
            return rc
    if getattr(args, "plots", False):
        return cmd_report(args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harood",
        description="Synthetic radar activity classification and OOD detection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON run configuration (defaults used if omitted)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", help="override the output directory")

    p_sim = sub.add_parser("simulate", help="build the synthetic dataset")
    add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_train = sub.add_parser("train", help="run stage-1 and stage-2 training")
    add_common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="score the test split and write the report")
    add_common(p_eval)
    p_eval.add_argument("--checkpoint", help="checkpoint file (default <out>/run/checkpoint.bin)")
    p_eval.add_argument("--baselines", help="comma list: msp,maxlogit,energy,odin")
    p_eval.add_argument("--plots", action="store_true", help="also render figures")
    p_eval.set_defaults(func=cmd_evaluate)

    p_rep = sub.add_parser("report", help="render plots from an existing report")
    add_common(p_rep)
    p_rep.set_defaults(func=cmd_report)

    p_all = sub.add_parser("all", help="simulate, train and evaluate in sequence")
    add_common(p_all)
    p_all.add_argument("--checkpoint", help="checkpoint path override for evaluate")
    p_all.add_argument("--baselines", help="comma list: msp,maxlogit,energy,odin")
    p_all.add_argument("--plots", action="store_true", help="also render figures")
    p_all.set_defaults(func=cmd_all)
    return parser


def main(argv=None) -> int:
    torch.set_num_threads(worker_count())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
