"""``darkwatch`` command line.

Every invocation prints one JSON summary line on stdout. Exit codes: 0 ok,
1 usage error, 2 data error, 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import charts, dataset, eda, imaging, linear_models, metrics, pipeline
from .cnn import CnnTrainConfig
from .errors import DarkwatchError, DataError

log = logging.getLogger("darkwatch")

DISPLAY_NAMES = {"logistic": "Logistic Regression", "svm": "SVM"}
_DEFAULTS = linear_models.TrainConfig()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------- io

def write_atomic(path, data) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, doc) -> None:
    write_atomic(path, json.dumps(doc, indent=2, allow_nan=False) + "\n")


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None


def read_config(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key] = value
    return values


def _out_dir(args, default_leaf: str) -> Path:
    if args.out:
        return Path(args.out)
    root = os.environ.get("DARKWATCH_OUT")
    if root:
        return Path(root) / default_leaf
    raise UsageError("--out is required (or set DARKWATCH_OUT)")


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) in (None, []):
            raise UsageError(f"--{name.replace('_', '-')} is required")


# --------------------------------------------------------------------- commands

def cmd_validate(args):
    _require(args, "data")
    table = dataset.read_threat_csv(args.data)
    report = dataset.validate_no_nulls(table)
    doc = {"source": str(args.data), "rows": len(table), **report.to_dict()}
    if args.out:
        write_json(Path(args.out) / "validation.json", doc)
    summary = {"command": "validate", "rows": len(table), "nulls": report.counts,
               "clean": report.clean}
    return summary, 0 if report.clean else 2


def cmd_eda(args):
    _require(args, "data")
    out = _out_dir(args, "eda")
    table = dataset.read_threat_csv(args.data)
    report = eda.eda_report(table, args.bins)
    report["source"] = str(args.data)
    write_json(out / "report.json", report)

    groups = eda.summarize_by_threat(table)
    keys = [g.group_key for g in groups]
    hist = eda.impact_histogram(table, args.bins)
    corr = eda.correlation(table)
    svgs = {
        "attempts_by_threat.svg": charts.bar_chart(
            keys, [g.attempt_total for g in groups], "Number of attempts per threat type",
            "Type of threat", "Number of attempts"),
        "impact_histogram.svg": charts.histogram_chart(
            hist.bin_edges, hist.counts, "Distribution of the impact level", "Impact level"),
        "sector_shares.svg": charts.pie_chart(
            eda.sector_shares(table), "Distribution of the targeted sectors"),
        "attempts_box.svg": charts.box_chart(
            eda.box_stats_by_threat(table), "Number of attempts per threat type",
            "Type of threat", "Number of attempts"),
        "correlation_heatmap.svg": charts.heatmap(
            list(corr.variable_names), corr.cells, "Correlation heatmap"),
        "attempts_impact_by_threat.svg": charts.grouped_bar_chart(
            keys, {"Number of attempts (mean)": [g.attempt_mean for g in groups],
                   "Impact level (mean)": [g.impact_mean for g in groups]},
            "Attempts and impact level per threat type", "Type of threat"),
    }
    for name, svg in svgs.items():
        write_atomic(out / name, svg)
    return {"command": "eda", "rows": len(table), "out": str(out),
            "files": ["report.json", *svgs]}, 0


def _train_config(args) -> linear_models.TrainConfig:
    return linear_models.TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, l2_strength=args.l2,
        svm_lambda=args.lam, tolerance=args.tolerance, seed=args.seed,
    )


def _evaluate(model, data, threshold, **extra) -> dict:
    predicted, _ = linear_models.predict(model, data.features, threshold)
    cm = metrics.confusion(data.labels, predicted)
    return metrics.metrics_document(
        cm, metrics.scores(cm), name=DISPLAY_NAMES[model.kind], model=model.kind,
        threshold=threshold, **extra,
    )


def cmd_train(args):
    _require(args, "model", "data", "seed")
    out = _out_dir(args, "train")
    table = dataset.read_threat_csv(args.data)
    encoded = dataset.encode(table, scale_numeric=not args.no_scale)
    parts = dataset.split(encoded, args.split, args.seed)
    model = linear_models.train(parts.train, args.model, _train_config(args))
    split_info = {"ratio": args.split, "seed": args.seed,
                  "train_rows": len(parts.train), "test_rows": len(parts.test)}
    write_json(out / "model.json", model.to_dict())
    doc = _evaluate(model, parts.test, args.threshold, split=split_info)
    write_json(out / "metrics.json", doc)
    return {"command": "train", "model": args.model, "out": str(out),
            "epochs_run": len(model.history), "final_loss": model.history[-1],
            "split": split_info, "metrics": doc}, 0


def cmd_evaluate(args):
    _require(args, "model", "data")
    model = linear_models.LinearModel.from_dict(read_json(args.model))
    table = dataset.read_threat_csv(args.data)
    encoded = dataset.transform(table, model.encoders, model.scaling)
    if encoded.features.shape[1] != model.weights.shape[0]:
        raise DataError("data encodes to a different feature width than the model")
    extra = {}
    data = encoded
    if args.split is not None:
        _require(args, "seed")
        parts = dataset.split(encoded, args.split, args.seed)
        data = parts.test
        extra["split"] = {"ratio": args.split, "seed": args.seed,
                          "train_rows": len(parts.train), "test_rows": len(parts.test)}
    doc = _evaluate(model, data, args.threshold, **extra)
    if args.out or os.environ.get("DARKWATCH_OUT"):
        write_json(_out_dir(args, "evaluate") / "metrics.json", doc)
    return {"command": "evaluate", "rows": len(data), "metrics": doc}, 0


def cmd_compare(args):
    _require(args, "metrics")
    out = _out_dir(args, "compare")
    names = [n.strip() for n in args.names.split(",")] if args.names else None
    if names is not None and len(names) != len(args.metrics):
        raise UsageError("--names must list one name per metrics file")
    reports = []
    for i, path in enumerate(args.metrics):
        doc = read_json(path)
        name = names[i] if names else doc.get("name") or Path(path).parent.name or Path(path).stem
        reports.append((name, metrics.report_from_document(doc)))
    result = metrics.compare(reports)
    write_json(out / "comparison.json", result.to_dict())
    labels = [name for name, _ in result.entries]
    values = [r.accuracy for _, r in result.entries]
    write_atomic(out / "accuracy.svg", charts.bar_chart(
        labels, values, f"Accuracy comparison (winner: {result.winner})", "Model", "Accuracy"))
    return {"command": "compare", "winner": result.winner, "out": str(out),
            "ranking": [{"name": n, "accuracy": a} for n, a in zip(labels, values)]}, 0


def _hog_params(args) -> imaging.HogParams:
    return imaging.HogParams(cell_size=args.cell_size, block_size=args.block_size,
                             bins=args.bins, signed=args.signed)


def cmd_img_denoise(args):
    _require(args, "input", "output")
    img = imaging.read_image(args.input)
    clean = imaging.denoise(img, args.method, args.radius, args.sigma)
    write_atomic(args.output, imaging.encode_pnm(clean))
    return {"command": "img denoise", "method": args.method, "width": img.width,
            "height": img.height, "output": str(args.output)}, 0


def cmd_img_hog(args):
    _require(args, "input", "output")
    img = imaging.denoise(imaging.read_image(args.input), args.denoise, args.radius, args.sigma)
    desc = imaging.hog(img, _hog_params(args))
    if args.format == "csv":
        write_atomic(args.output, desc.to_csv())
    else:
        write_json(args.output, desc.to_dict())
    return {"command": "img hog", "layout": list(desc.layout), "length": int(desc.values.size),
            "output": str(args.output)}, 0


def cmd_img_train(args):
    _require(args, "corpus", "seed")
    out = _out_dir(args, "img-train")
    images, labels, _ = pipeline.load_corpus(args.corpus)
    pipe = pipeline.Pipeline(args.denoise, args.radius, args.sigma, args.mode, _hog_params(args))
    model, history = pipeline.train_image_model(
        pipe, images, labels, seed=args.seed,
        cnn_config=CnnTrainConfig(args.lr, args.epochs, args.batch_size, args.seed),
        n_kernels=args.kernels, kernel_size=args.kernel_size,
        linear_kind=args.linear_kind,
        linear_config=linear_models.TrainConfig(
            learning_rate=args.linear_lr, epochs=args.linear_epochs, seed=args.seed),
    )
    predicted = [pipeline.classify_image(pipe, model, img)[0] for img in images]
    acc = pipeline.accuracy(predicted, labels)
    write_json(out / "model.json", pipeline.model_document(pipe, model))
    write_json(out / "training.json", {"mode": args.mode, "samples": len(images),
                                       "training_accuracy": acc, "history": history})
    return {"command": "img train", "mode": args.mode, "samples": len(images),
            "training_accuracy": acc, "final_loss": history[-1], "out": str(out)}, 0


def cmd_img_classify(args):
    _require(args, "model", "inputs")
    pipe, model = pipeline.load_model_document(read_json(args.model))
    results = []
    for path in args.inputs:
        label, confidence = pipeline.classify_image(pipe, model, imaging.read_image(path))
        results.append({"input": str(path), "label": label, "confidence": confidence})
    if args.out:
        write_json(Path(args.out) / "classification.json", {"results": results})
    return {"command": "img classify", "results": results}, 0


# ----------------------------------------------------------------------- parser

def _common(p):
    p.add_argument("--config", help="key = value file; command-line flags win")
    return p


def _hog_flags(p):
    p.add_argument("--cell-size", type=int, default=8, help="pixels per cell side (8)")
    p.add_argument("--block-size", type=int, default=2, help="cells per block side (2)")
    p.add_argument("--bins", type=int, default=9, help="orientation bins (9)")
    p.add_argument("--signed", action="store_true", help="use 0-360 degree orientations")


def _denoise_flags(p, default="median"):
    p.add_argument("--denoise", choices=pipeline.DENOISE_METHODS, default=default,
                   help="denoising step")
    p.add_argument("--radius", type=int, default=1, help="median window radius (1)")
    p.add_argument("--sigma", type=float, default=1.0, help="gaussian sigma (1.0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="darkwatch", description="Threat-table analysis and image classification.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = _common(sub.add_parser("validate", help="parse a threat CSV and count null cells"))
    p.add_argument("--data", help="threat CSV file")
    p.add_argument("--out", help="output directory (default: $DARKWATCH_OUT/<command>)")
    p.set_defaults(func=cmd_validate, _parser=p)

    p = _common(sub.add_parser("eda", help="summary statistics and six SVG charts"))
    p.add_argument("--data", help="threat CSV file")
    p.add_argument("--out", help="output directory (default: $DARKWATCH_OUT/<command>)")
    p.add_argument("--bins", type=int, default=10, help="impact histogram bins (10)")
    p.set_defaults(func=cmd_eda, _parser=p)

    p = _common(sub.add_parser("train", help="train logistic regression or a linear SVM"))
    p.add_argument("--model", choices=linear_models.KINDS, help="classifier to train")
    p.add_argument("--data", help="threat CSV file")
    p.add_argument("--split", type=float, default=0.8, help="train fraction (0.8)")
    p.add_argument("--seed", type=int, help="random seed (required)")
    p.add_argument("--out", help="output directory (default: $DARKWATCH_OUT/<command>)")
    p.add_argument("--lr", type=float, default=_DEFAULTS.learning_rate,
                   help=f"learning rate ({_DEFAULTS.learning_rate})")
    p.add_argument("--epochs", type=int, default=_DEFAULTS.epochs,
                   help=f"max epochs ({_DEFAULTS.epochs})")
    p.add_argument("--l2", type=float, default=_DEFAULTS.l2_strength,
                   help=f"logistic L2 strength ({_DEFAULTS.l2_strength})")
    p.add_argument("--lam", type=float, default=_DEFAULTS.svm_lambda,
                   help=f"SVM regularization lambda ({_DEFAULTS.svm_lambda})")
    p.add_argument("--tolerance", type=float, default=_DEFAULTS.tolerance,
                   help=f"early stop on |loss change| ({_DEFAULTS.tolerance})")
    p.add_argument("--no-scale", action="store_true", help="skip min-max scaling")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="probability cut-off for logistic models (0.5)")
    p.set_defaults(func=cmd_train, _parser=p)

    p = _common(sub.add_parser("evaluate", help="score a saved model on a threat CSV"))
    p.add_argument("--model", help="model.json written by train")
    p.add_argument("--data", help="threat CSV file")
    p.add_argument("--split", type=float, help="evaluate the held-out part of this split")
    p.add_argument("--seed", type=int, help="random seed (required)")
    p.add_argument("--out", help="output directory (default: $DARKWATCH_OUT/<command>)")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="probability cut-off for logistic models (0.5)")
    p.set_defaults(func=cmd_evaluate, _parser=p)

    p = _common(sub.add_parser("compare", help="rank metrics files by accuracy"))
    p.add_argument("metrics", nargs="*", help="metrics.json files")
    p.add_argument("--names", help="comma-separated display names")
    p.add_argument("--out", help="output directory (default: $DARKWATCH_OUT/<command>)")
    p.set_defaults(func=cmd_compare, _parser=p)

    img = sub.add_parser("img", help="image pipeline")
    isub = img.add_subparsers(dest="img_command", parser_class=_Parser)

    p = _common(isub.add_parser("denoise", help="median or gaussian denoising"))
    p.add_argument("--input", help="PGM/PPM image to read")
    p.add_argument("--output", help="file to write")
    p.add_argument("--method", choices=("median", "gaussian"), default="median",
                   help="filter to apply (median)")
    p.add_argument("--radius", type=int, default=1, help="median window radius (1)")
    p.add_argument("--sigma", type=float, default=1.0, help="gaussian sigma (1.0)")
    p.set_defaults(func=cmd_img_denoise, _parser=p)

    p = _common(isub.add_parser("hog", help="HOG descriptor of one image"))
    p.add_argument("--input", help="PGM/PPM image to read")
    p.add_argument("--output", help="file to write")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="descriptor file format (json)")
    _denoise_flags(p, default="none")
    _hog_flags(p)
    p.set_defaults(func=cmd_img_hog, _parser=p)

    p = _common(isub.add_parser("train", help="train an image classifier on a labeled corpus"))
    p.add_argument("--corpus", help="directory with labels.csv and PGM files")
    p.add_argument("--mode", choices=pipeline.FEATURE_MODES, default="raw-cnn",
                   help="feature extraction and classifier (raw-cnn)")
    p.add_argument("--seed", type=int, help="random seed (required)")
    p.add_argument("--out", help="output directory (default: $DARKWATCH_OUT/<command>)")
    p.add_argument("--epochs", type=int, default=200, help="CNN training epochs (200)")
    p.add_argument("--lr", type=float, default=0.05, help="CNN learning rate (0.05)")
    p.add_argument("--batch-size", type=int, default=16, help="CNN mini-batch size (16)")
    p.add_argument("--kernels", type=int, default=4, help="conv output channels (4)")
    p.add_argument("--kernel-size", type=int, default=3, help="conv kernel side (3)")
    p.add_argument("--linear-kind", choices=linear_models.KINDS, default="logistic",
                   help="hog+dense head type (logistic)")
    p.add_argument("--linear-lr", type=float, default=_DEFAULTS.learning_rate,
                   help="hog+dense head learning rate")
    p.add_argument("--linear-epochs", type=int, default=_DEFAULTS.epochs,
                   help="hog+dense head epochs")
    _denoise_flags(p)
    _hog_flags(p)
    p.set_defaults(func=cmd_img_train, _parser=p)

    p = _common(isub.add_parser("classify", help="classify images with a trained model"))
    p.add_argument("inputs", nargs="*", help="PGM/PPM images")
    p.add_argument("--model", help="model.json written by img train")
    p.add_argument("--out", help="output directory (default: $DARKWATCH_OUT/<command>)")
    p.set_defaults(func=cmd_img_classify, _parser=p)
    return parser


def _convert(action: argparse.Action, raw: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        flag = raw.lower()
        if flag not in ("true", "false", "1", "0", "yes", "no"):
            raise UsageError(f"config key {action.dest!r} expects a boolean, got {raw!r}")
        value = flag in ("true", "1", "yes")
        return value if isinstance(action, argparse._StoreTrueAction) else not value
    if action.nargs in ("*", "+"):
        return [item.strip() for item in raw.split(",") if item.strip()]
    value = action.type(raw) if action.type else raw
    if action.choices is not None and value not in action.choices:
        raise UsageError(f"config key {action.dest!r}: {value!r} not in {list(action.choices)}")
    return value


def parse_args(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc)) from None
    if getattr(args, "func", None) is None:
        parser.print_help(sys.stderr)
        raise UsageError("a subcommand is required")
    if args.config:
        sub = args._parser
        actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
        defaults = {}
        for key, raw in read_config(args.config).items():
            dest = key.replace("-", "_")
            if dest not in actions:
                raise UsageError(f"unknown config key {key!r}")
            try:
                defaults[dest] = _convert(actions[dest], raw)
            except (TypeError, ValueError):
                raise UsageError(f"config key {key!r}: bad value {raw!r}") from None
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _command_name(argv) -> str:
    words = [a for a in argv if not a.startswith("-")][:2]
    if words[:1] == ["img"]:
        return " ".join(words)
    return words[0] if words else ""


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    code = 0
    summary = None
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        summary, code = args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 1
    except DarkwatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = exc.exit_code
    except (OSError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = 2
    if summary is None:
        summary = {"command": _command_name(argv), "status": "error", "exit_code": code}
    else:
        summary = {**summary, "status": "ok" if code == 0 else "error", "exit_code": code}
    print(json.dumps(summary, sort_keys=True, default=_json_default))
    return code


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def main() -> None:
    sys.exit(run())
