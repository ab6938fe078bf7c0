"""Command-line entry point.

Subcommands: train, eval, predict, saliency, dataset validate, dataset synth,
generate, serve. Every report-producing command supports --json, and every
invocation echoes its effective configuration so runs are reproducible from
their output alone. Exit codes: 0 success, 1 validation/domain failure,
2 usage error. ARTBRAIN_WEIGHTS provides the default weights path.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import labels
from .errors import ArtbrainError, ConfigurationError
from .evaluation import (
    evaluate_probabilities,
    render_attribution_text,
    render_classification_text,
    attribution_scores,
)
from .model import ModelConfig, Predictor, build_network, prediction_from_probs
from .preprocess import decode_image
from .train import FreezeSpec, TrainConfig, train_model

DEFAULT_SWEEP = "-100:100:25"


def _weights_argument(parser: argparse.ArgumentParser):
    default = os.environ.get("ARTBRAIN_WEIGHTS")
    parser.add_argument(
        "--weights",
        default=default,
        required=default is None,
        help="weight archive path (defaults to $ARTBRAIN_WEIGHTS)",
    )


def _echo(args, config: dict, payload: dict, text: str) -> int:
    """Emit either one JSON document or a config header plus text report."""
    if getattr(args, "json", False):
        print(json.dumps({"config": config, **payload}, indent=2, sort_keys=True))
    else:
        print(f"config: {json.dumps(config, sort_keys=True)}")
        if text:
            print(text)
    return 0


def _load_predictor(args) -> Predictor:
    return Predictor.from_archive(args.weights)


def _freeze_from_arg(value: str) -> FreezeSpec:
    if value == "none":
        return FreezeSpec(low=False, mid=False, high=False)
    groups = {part.strip() for part in value.split(",") if part.strip()}
    unknown = groups - {"low", "mid", "high", "attention", "classifier"}
    if unknown:
        raise ConfigurationError(f"unknown freeze groups: {sorted(unknown)}")
    return FreezeSpec(
        low="low" in groups,
        mid="mid" in groups,
        high="high" in groups,
        attention="attention" in groups,
        classifier="classifier" in groups,
    )


def _model_config(variant: str, use_attention: bool) -> ModelConfig:
    base = ModelConfig.tiny() if variant == "tiny" else ModelConfig.full()
    return dataclasses.replace(base, use_attention=use_attention)


def cmd_train(args) -> int:
    from .dataset import load_split, validate_manifest

    manifest, report = validate_manifest(args.data)
    if not report.ok:
        print(json.dumps(report.to_json_dict(), indent=2), file=sys.stderr)
        raise ArtbrainError("dataset validation failed; fix the report above")
    model_config = _model_config(args.variant, not args.no_attention)
    train_config = TrainConfig(
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        initial_lr=args.lr,
        lr_factor=args.lr_factor,
        patience_epochs=args.patience,
        seed=args.seed,
        freeze=_freeze_from_arg(args.freeze),
        val_fraction=args.val_fraction,
        validate_on_test=args.validate_on_test,
    )
    from .preprocess import PreprocessConfig

    pre = PreprocessConfig(target_side=model_config.backbone.input_side)
    train_x, train_y = load_split(args.data, manifest, "train", pre)
    test_x = test_y = None
    if train_config.validate_on_test:
        test_x, test_y = load_split(args.data, manifest, "test", pre)
    model = build_network(model_config)
    result = train_model(
        model, train_x, train_y, train_config,
        test_images=test_x, test_targets=test_y,
        out_dir=args.out, quiet=args.json,
    )
    config_echo = {
        "command": "train",
        "data": str(args.data),
        "out": str(args.out),
        "variant": args.variant,
        "use_attention": not args.no_attention,
        "train": {**asdict(train_config), "freeze": train_config.freeze.to_dict()},
    }
    payload = {
        "best_epoch": result.best_epoch,
        "best_val_loss": result.best_val_loss,
        "best_path": str(result.best_path),
        "history": [asdict(record) for record in result.history],
    }
    text = (
        f"best epoch: {result.best_epoch} (val loss {result.best_val_loss:.4f})\n"
        f"weights: {result.best_path}"
    )
    return _echo(args, config_echo, payload, text)


def _predict_probs(predictor: Predictor, images: np.ndarray, batch_size: int) -> np.ndarray:
    import torch

    model = predictor.model
    model.eval()
    probs = np.empty((len(images), labels.NUM_CLASSES), dtype=np.float64)
    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            batch = torch.from_numpy(images[start : start + batch_size]).float()
            probs[start : start + batch_size] = torch.softmax(
                model(batch).double(), dim=-1
            ).numpy()
    return probs


def cmd_eval(args) -> int:
    from .dataset import load_split, validate_manifest

    predictor = _load_predictor(args)
    manifest, _ = validate_manifest(args.data)
    images, targets = load_split(args.data, manifest, args.split, predictor.preprocess_config)
    probs = _predict_probs(predictor, images, args.batch_size)
    report = evaluate_probabilities(probs, targets)
    config_echo = {
        "command": "eval",
        "weights": str(args.weights),
        "data": str(args.data),
        "split": args.split,
        "batch_size": args.batch_size,
        "model_version": predictor.model_version,
    }
    if args.report:
        with open(args.report, "w", encoding="utf-8") as handle:
            json.dump({"config": config_echo, **report}, handle, indent=2, sort_keys=True)
    scores = attribution_scores(
        [prediction_from_probs(row) for row in probs],
        [labels.source_of(int(t)) for t in targets],
    )
    text = (
        render_classification_text(report["classification"])
        + "\n\n"
        + render_attribution_text(scores)
        + f"\n\nStyle accuracy: {report['style_accuracy']:.4f}"
    )
    return _echo(args, config_echo, report, text)


def _parse_sweep(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"sweep must be start:stop:step, got {spec!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise ConfigurationError(f"sweep step must be positive, got {step}")
    levels = []
    level = start
    while level <= stop + 1e-9:
        levels.append(round(level, 6))
        level += step
    return levels


def _prediction_dict(prediction, contrast: float) -> dict:
    entries = []
    for class_index, prob in prediction.top_k:
        source, style = labels.parts_of(class_index)
        entries.append(
            {
                "class_index": class_index,
                "style": style.display_name,
                "source": source.display_name,
                "probability": float(prob),
            }
        )
    return {
        "contrast_percent": contrast,
        "top_k": entries,
        "source_marginals": [float(p) for p in prediction.source_marginals],
        "style_marginals": [float(p) for p in prediction.style_marginals],
    }


def cmd_predict(args) -> int:
    predictor = _load_predictor(args)
    with open(args.image, "rb") as handle:
        raster = decode_image(handle.read())
    levels = _parse_sweep(args.contrast_sweep) if args.contrast_sweep else [args.contrast]
    results = [
        _prediction_dict(
            predictor.predict(raster, k=args.top_k, contrast_percent=level), level
        )
        for level in levels
    ]
    config_echo = {
        "command": "predict",
        "image": str(args.image),
        "weights": str(args.weights),
        "top_k": args.top_k,
        "contrast": args.contrast,
        "contrast_sweep": args.contrast_sweep,
        "model_version": predictor.model_version,
    }
    lines = []
    for result in results:
        top = result["top_k"][0]
        lines.append(
            f"contrast {result['contrast_percent']:+7.1f}  ->  "
            f"{top['source']} / {top['style']}  (p={top['probability']:.4f})"
        )
    payload = {"predictions": results} if args.contrast_sweep else results[0]
    return _echo(args, config_echo, payload, "\n".join(lines))


def cmd_saliency(args) -> int:
    from PIL import Image

    from .preprocess import adjust_contrast, preprocess, resize_and_crop
    from .saliency import fm_g_cam, overlay

    predictor = _load_predictor(args)
    with open(args.image, "rb") as handle:
        raster = decode_image(handle.read())
    tensor = preprocess(raster, predictor.preprocess_config, contrast_percent=args.contrast)
    fused = fm_g_cam(predictor.model, tensor, k=args.k)
    side = predictor.preprocess_config.target_side
    display01 = adjust_contrast(
        resize_and_crop(raster, side).astype(np.float64) / 255.0, args.contrast
    )
    display = np.clip(np.round(display01 * 255.0), 0, 255).astype(np.uint8)
    blended = overlay(display, fused, args.alpha)
    Image.fromarray(blended, mode="RGB").save(args.out, format="PNG")
    config_echo = {
        "command": "saliency",
        "image": str(args.image),
        "weights": str(args.weights),
        "k": args.k,
        "alpha": args.alpha,
        "contrast": args.contrast,
        "out": str(args.out),
        "model_version": predictor.model_version,
    }
    payload = {"legend": fused.legend, "overlay": str(args.out)}
    lines = [f"overlay written to {args.out}"]
    for entry in fused.legend:
        lines.append(
            f"  rank {entry['rank']}: {entry['source']} / {entry['style']}"
            f"  p={entry['probability']:.4f}  color rgb{tuple(entry['color'])}"
        )
    return _echo(args, config_echo, payload, "\n".join(lines))


def cmd_dataset_validate(args) -> int:
    from .dataset import validate_manifest

    manifest, report = validate_manifest(args.root)
    config_echo = {"command": "dataset validate", "root": str(args.root)}
    payload = {
        "manifest": manifest.to_json_dict(),
        "report": report.to_json_dict(),
    }
    lines = [
        f"files seen: {report.files_seen}",
        f"records accepted: {report.records_accepted}",
        f"counts match: {report.counts_match}",
        f"balanced test split: {manifest.balanced_test()}",
    ]
    for issue in report.issues[:50]:
        lines.append(f"  [{issue.kind}] {issue.path}: {issue.detail}")
    if len(report.issues) > 50:
        lines.append(f"  ... and {len(report.issues) - 50} more issues")
    _echo(args, config_echo, payload, "\n".join(lines))
    return 0 if report.ok else 1


def cmd_dataset_synth(args) -> int:
    from .dataset import ToySpec, generate_toy

    spec = ToySpec(
        num_sources=args.sources,
        num_styles=args.styles,
        train_per_subclass=args.train,
        test_per_subclass=args.test,
        image_side=args.side,
    )
    manifest = generate_toy(spec, args.seed, args.out)
    config_echo = {
        "command": "dataset synth",
        "out": str(args.out),
        **asdict(spec),
        "seed": args.seed,
    }
    payload = {"manifest": manifest.to_json_dict()}
    text = (
        f"wrote {manifest.total('train')} train / {manifest.total('test')} test samples"
        f" to {args.out}"
    )
    return _echo(args, config_echo, payload, text)


def cmd_generate(args) -> int:
    from .dataset import job_for, run_generation

    styles = (
        list(labels.Style)
        if args.styles == "all"
        else [labels.Style[name.strip().upper()] for name in args.styles.split(",")]
    )
    models = [m.strip() for m in args.models.split(",")]
    jobs = [
        job_for(model, style, seed)
        for model in models
        for style in styles
        for seed in range(args.seed_start, args.seed_start + args.count)
    ]
    report = run_generation(
        jobs, args.endpoint, args.out, parallel=args.parallel
    )
    config_echo = {
        "command": "generate",
        "endpoint": args.endpoint,
        "out": str(args.out),
        "models": models,
        "styles": [s.name.lower() for s in styles],
        "count": args.count,
        "seed_start": args.seed_start,
        "parallel": args.parallel,
    }
    payload = {
        "written": report.written,
        "skipped": report.skipped,
        "failed": report.failed,
        "ledger": str(report.ledger_path),
    }
    text = (
        f"written {report.written}, skipped {report.skipped}, failed {report.failed}\n"
        f"ledger: {report.ledger_path}"
    )
    _echo(args, config_echo, payload, text)
    return 0 if report.failed == 0 else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        weights_path=args.weights,
        pool_dir=args.pool,
        session_db_path=args.db,
        rate_limit_per_minute=args.rate_limit,
        static_dir=args.static,
    )
    print(
        "config: "
        + json.dumps(
            {
                "command": "serve",
                "weights": str(args.weights),
                "pool": str(args.pool) if args.pool else None,
                "host": args.host,
                "port": args.port,
                "db": str(args.db),
                "rate_limit": args.rate_limit,
            },
            sort_keys=True,
        )
    )
    uvicorn.run(create_app(config), host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="artbrain",
        description="Detect AI-generated artwork and attribute it to its source model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a dataset tree")
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--out", required=True, help="output directory for checkpoints and logs")
    p.add_argument("--variant", choices=("tiny", "full"), default="tiny")
    p.add_argument("--no-attention", action="store_true", help="plain backbone baseline")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--epochs", type=int, default=18)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lr-factor", type=float, default=0.1)
    p.add_argument("--patience", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument(
        "--validate-on-test",
        action="store_true",
        help="validate on the test split (leaks test data into model selection)",
    )
    p.add_argument(
        "--freeze",
        default="none",
        help="comma list from low,mid,high,attention,classifier or 'none'",
    )
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="evaluate weights on a dataset split")
    _weights_argument(p)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--report", help="write the JSON report to this path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("predict", help="classify one image")
    _weights_argument(p)
    p.add_argument("--image", required=True)
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--contrast", type=float, default=0.0)
    p.add_argument(
        "--contrast-sweep",
        nargs="?",
        const=DEFAULT_SWEEP,
        default=None,
        help=f"start:stop:step sweep of contrast levels (default {DEFAULT_SWEEP})",
    )
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("saliency", help="write a fused class-activation overlay")
    _weights_argument(p)
    p.add_argument("--image", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--alpha", type=float, default=0.45)
    p.add_argument("--contrast", type=float, default=0.0)
    p.add_argument("--out", required=True, help="overlay PNG path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_saliency)

    p = sub.add_parser("dataset", help="dataset tooling")
    dataset_sub = p.add_subparsers(dest="dataset_command", required=True)
    v = dataset_sub.add_parser("validate", help="validate a dataset tree")
    v.add_argument("--root", required=True)
    v.add_argument("--json", action="store_true")
    v.set_defaults(handler=cmd_dataset_validate)
    s = dataset_sub.add_parser("synth", help="generate the synthetic toy dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--sources", type=int, default=3)
    s.add_argument("--styles", type=int, default=2)
    s.add_argument("--train", type=int, default=100)
    s.add_argument("--test", type=int, default=25)
    s.add_argument("--side", type=int, default=64)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--json", action="store_true")
    s.set_defaults(handler=cmd_dataset_synth)

    p = sub.add_parser("generate", help="drive an external generation endpoint")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--models", default="latent,stable", help="comma list of latent,stable")
    p.add_argument("--styles", default="all", help="'all' or comma list of style names")
    p.add_argument("--count", type=int, default=1, help="seeds per (model, style)")
    p.add_argument("--seed-start", type=int, default=0)
    p.add_argument("--parallel", type=int, default=4)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("serve", help="run the HTTP service")
    _weights_argument(p)
    p.add_argument("--pool", help="dataset root providing the study image pool")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--db", default="turing-sessions.sqlite3")
    p.add_argument("--static", help="directory of built frontend assets to serve at /")
    p.add_argument("--rate-limit", type=int, default=30)
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ArtbrainError as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "OSError", "detail": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
