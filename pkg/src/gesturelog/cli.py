"""Command-line entry points: dataset prep, training, serving, replay."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx
import yaml

from .classifier import LandmarkClassifier, TrainingConfig, evaluate
from .datasets import ingest_dataset, preprocess_batch, prototype_model, save_dataset, train_eval
from .raster import RasterSpec, RasterStyle
from .replay import ProtocolViolation, load_trace, replay
from .segmenter import SegmenterConfig, parse_csv, summarize
from .server import create_app

ENV_PREFIX = "GESTURELOG_"


class _Parser(argparse.ArgumentParser):
    # usage mistakes are validation failures, same exit code as bad data
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _load_config_file(path):
    if path is None:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith((".yaml", ".yml")):
        doc = yaml.safe_load(text)
    else:
        doc = json.loads(text)
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ValueError("config file must contain a mapping")
    return doc


def _resolve(name, flag_value, file_config, default, env=False, cast=None):
    """Option precedence: explicit flag, then environment, then config file."""
    if flag_value is not None:
        return flag_value
    if env:
        raw = os.environ.get(ENV_PREFIX + name.upper())
        if raw is not None:
            return cast(raw) if cast else raw
    if name in file_config:
        value = file_config[name]
        return cast(value) if cast else value
    return default


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=None, help="deterministic seed")
    parser.add_argument("--config", default=None, help="JSON or YAML config file")


def build_parser():
    parser = _Parser(prog="gesturelog")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[], help="load or synthesize a landmark dataset")
    p.add_argument("--format", choices=["landmark-jsonl", "synthetic"], default="landmark-jsonl")
    p.add_argument("--input", default=None, help="input jsonl (landmark-jsonl format)")
    p.add_argument("--out", required=True, help="output dataset jsonl")
    p.add_argument("--per-class", type=int, default=None)
    p.add_argument("--noise-sigma", type=float, default=None)
    _add_common(p)

    p = sub.add_parser("preprocess", help="rasterize a dataset to PNGs with a manifest")
    p.add_argument("--input", required=True, help="dataset jsonl")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--style", choices=["type1", "type2"], default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--node-radius", type=int, default=None)
    p.add_argument("--line-width", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("train", help="train a classifier on a dataset")
    p.add_argument("--data", required=True, help="dataset jsonl")
    p.add_argument("--model-out", required=True)
    p.add_argument("--report-out", default=None)
    p.add_argument("--hidden-dim", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--patience", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--report-out", default=None)
    _add_common(p)

    p = sub.add_parser("serve", help="run the annotation server")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--model", default=None, help="model file (built-in prototype model if omitted)")
    p.add_argument("--store-dir", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--open-count", type=int, default=None)
    p.add_argument("--close-count", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("replay", help="replay a trace file against a running server")
    p.add_argument("--trace", required=True)
    p.add_argument("--server", required=True, help="base URL, e.g. http://127.0.0.1:8000")
    p.add_argument("--speed", type=float, default=None)
    _add_common(p)

    p = sub.add_parser("report", help="summarize an exported session CSV")
    p.add_argument("--csv", required=True)
    _add_common(p)

    return parser


def _cmd_ingest(args, cfg):
    fmt = args.format
    if fmt == "landmark-jsonl" and args.input is None:
        raise ValueError("--input is required for landmark-jsonl")
    dataset = ingest_dataset(
        path=args.input,
        format=fmt,
        per_class=_resolve("per_class", args.per_class, cfg, 100, cast=int),
        seed=_resolve("seed", args.seed, cfg, 0, cast=int),
        noise_sigma=_resolve("noise_sigma", args.noise_sigma, cfg, 0.01, cast=float),
    )
    save_dataset(dataset, args.out)
    print(f"wrote {len(dataset.samples)} samples to {args.out}")
    return 0


def _cmd_preprocess(args, cfg):
    dataset = ingest_dataset(path=args.input, format="landmark-jsonl")
    spec = RasterSpec(
        width=_resolve("width", args.width, cfg, 224, cast=int),
        height=_resolve("height", args.height, cfg, 224, cast=int),
        node_radius=_resolve("node_radius", args.node_radius, cfg, 4, cast=int),
        line_width=_resolve("line_width", args.line_width, cfg, 2, cast=int),
        style=RasterStyle(_resolve("style", args.style, cfg, "type2")),
    )
    rows = preprocess_batch(dataset, spec, args.out_dir)
    print(f"rasterized {len(rows)} samples into {args.out_dir}")
    return 0


def _training_config(args, cfg):
    return TrainingConfig(
        batch_size=_resolve("batch_size", args.batch_size, cfg, 64, cast=int),
        learning_rate=_resolve("learning_rate", args.learning_rate, cfg, 1e-3, cast=float),
        max_epochs=_resolve("epochs", args.epochs, cfg, 100, cast=int),
        patience=_resolve("patience", args.patience, cfg, 5, cast=int),
        seed=_resolve("seed", args.seed, cfg, 0, cast=int),
    )


def _cmd_train(args, cfg):
    dataset = ingest_dataset(path=args.data, format="landmark-jsonl")
    config = _training_config(args, cfg)
    _, report = train_eval(
        dataset,
        split_seed=config.seed,
        config=config,
        hidden_dim=_resolve("hidden_dim", args.hidden_dim, cfg, 64, cast=int),
        model_path=args.model_out,
        report_path=args.report_out,
    )
    print(f"model written to {args.model_out}")
    print(f"test macro F1: {report.macro_f1:.4f}")
    return 0


def _cmd_eval(args, cfg):
    dataset = ingest_dataset(path=args.data, format="landmark-jsonl")
    model = LandmarkClassifier.load(args.model)
    report = evaluate(model, dataset.features(), dataset.labels())
    for gesture, f1 in zip(report.classes, report.f1):
        print(f"{gesture.value:8s} f1={f1:.4f}")
    accuracy = float(report.confusion.trace()) / report.n_samples
    print(f"macro F1: {report.macro_f1:.4f}  accuracy: {accuracy:.4f}")
    if args.report_out:
        Path(args.report_out).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def serve_settings(args, cfg) -> dict:
    return {
        "host": _resolve("host", args.host, cfg, "127.0.0.1", env=True),
        "port": _resolve("port", args.port, cfg, 8000, env=True, cast=int),
        "model": _resolve("model", args.model, cfg, None, env=True),
        "store_dir": _resolve("store_dir", args.store_dir, cfg, "./sessions", env=True),
        "config": SegmenterConfig(
            confidence_threshold=_resolve(
                "threshold", args.threshold, cfg, 0.7, env=True, cast=float
            ),
            open_count=_resolve("open_count", args.open_count, cfg, 5, env=True, cast=int),
            close_count=_resolve("close_count", args.close_count, cfg, 10, env=True, cast=int),
        ),
    }


def _cmd_serve(args, cfg):
    import uvicorn

    settings = serve_settings(args, cfg)
    model = LandmarkClassifier.load(settings["model"]) if settings["model"] else prototype_model()
    app = create_app(model, settings["store_dir"], default_config=settings["config"])
    uvicorn.run(app, host=settings["host"], port=settings["port"], log_level="info")
    return 0


def _cmd_replay(args, cfg):
    trace = load_trace(args.trace)
    speed = _resolve("speed", args.speed, cfg, 1.0, cast=float)
    report = replay(trace, args.server, speed=speed)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_report(args, cfg):
    log = parse_csv(Path(args.csv).read_bytes())
    summary = summarize(log)
    rows = [("label", "duration_ms", "intervals", "share")]
    for label in sorted(summary.per_label_duration_ms):
        rows.append(
            (
                label,
                str(summary.per_label_duration_ms[label]),
                str(summary.per_label_count[label]),
                f"{summary.shares[label]:.4f}",
            )
        )
    rows.append(("total", str(summary.total_annotated_ms), str(len(log.intervals)), ""))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for r in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "preprocess": _cmd_preprocess,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "replay": _cmd_replay,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _load_config_file(args.config)
        return _COMMANDS[args.command](args, cfg)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except ProtocolViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (httpx.HTTPError, ConnectionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
