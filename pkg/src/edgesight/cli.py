"""Command-line entry point.

Subcommands: detect, train, bench, eval, analyze. Human-readable output
goes to stdout, diagnostics to stderr. Exit codes: 0 success, 2 config
error, 3 model/format error, 4 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import annotations as ann
from . import evalbench, haar, hog, svm
from .cnn import architecture, complexity, serialize, ssd, train as cnn_train
from .errors import (BoundsError, ChannelError, ConfigError, FormatError,
                     InputError, ShapeError, ToolkitError)
from .geometry import BoundingBox, Detection, clamp_box, iou
from .image import Image, draw_boxes, load_image, resize_nearest, save_image, to_grayscale
from .integral import integral

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FORMAT = 3
EXIT_DATA = 4

IMAGE_SUFFIXES = (".pgm", ".ppm")


def _collect_images(paths) -> list[Path]:
    files: list[Path] = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            files.extend(sorted(q for q in path.iterdir()
                                if q.suffix.lower() in IMAGE_SUFFIXES))
        elif path.is_file():
            files.append(path)
        else:
            raise ConfigError(f"input path does not exist: {path}")
    if not files:
        raise ConfigError("no input images found")
    return files


def _require_model(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FormatError(f"model file not found: {p}")
    return p


def _check_conf(value: float) -> float:
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"--conf must be in [0, 1], got {value}")
    return value


def _load_detector(args):
    """(detect_fn, model) for the chosen detector family."""
    model_path = _require_model(args.model)
    if args.detector == "haar":
        model = haar.load_cascade(model_path)

        def run(img: Image):
            return haar.cascade_detect(model, to_grayscale(img), step=args.step,
                                       scale_factor=args.scale_factor,
                                       nms_iou=args.nms_iou)
        return run, model
    if args.detector == "hogsvm":
        model = hog.load_hog_svm(model_path)

        def run(img: Image):
            return hog.detect_multiscale(model, img, step=args.step,
                                         scale_factor=args.scale_factor,
                                         merge=args.merge,
                                         merge_iou=args.nms_iou)
        return run, model
    model = serialize.load_model(model_path)

    def run(img: Image):
        size = model.input_size
        resized = img if (img.width, img.height) == (size, size) \
            else resize_nearest(img, size, size)
        dets = ssd.ssd_detect(model, resized, conf_threshold=args.conf,
                              nms_iou=args.nms_iou)
        sx = img.width / size
        sy = img.height / size
        mapped = []
        for d in dets:
            box = clamp_box(BoundingBox(d.box.x * sx, d.box.y * sy,
                                        d.box.w * sx, d.box.h * sy),
                            img.width, img.height)
            if box is not None:
                mapped.append(Detection(box, d.label, d.score))
        return mapped
    return run, model


def cmd_detect(args) -> int:
    _check_conf(args.conf)
    detect, _ = _load_detector(args)
    files = _collect_images(args.input)

    def process(path: Path):
        return path.stem, load_image(path), detect(load_image(path))

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(process, files))
    else:
        results = [process(p) for p in files]

    lines = []
    for image_id, img, dets in results:
        for det in dets:
            lines.append(ann.detection_line(image_id, det))
        if args.annotate:
            out_dir = Path(args.annotate)
            out_dir.mkdir(parents=True, exist_ok=True)
            rgb = img if img.channels == 3 else Image(
                np.repeat(img.pixels, 3, axis=2))
            save_image(draw_boxes(rgb, [d.box for d in dets]),
                       out_dir / (image_id + ".ppm"))
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _load_dataset(args):
    """(images by id, ground truth by id) for training commands."""
    data_dir = Path(args.data)
    if not data_dir.is_dir():
        raise ConfigError(f"data directory does not exist: {data_dir}")
    truth_path = Path(args.truth) if args.truth else data_dir / "annotations.txt"
    if not truth_path.is_file():
        raise ConfigError(f"annotation file does not exist: {truth_path}")
    truth = ann.load_annotations(truth_path)
    images = {}
    for p in sorted(data_dir.iterdir()):
        if p.suffix.lower() in IMAGE_SUFFIXES:
            images[p.stem] = load_image(p)
    if not images:
        raise ConfigError(f"no images in {data_dir}")
    return images, truth


def _window_crops(images, truth, window_w, window_h, negatives_per_image, seed):
    """Positive crops from ground-truth boxes plus random negative crops."""
    rng = np.random.default_rng(seed)
    positives, negatives = [], []
    for image_id, img in images.items():
        gray = to_grayscale(img)
        boxes = [b for b, _ in truth.get(image_id, [])]
        for box in boxes:
            clipped = clamp_box(box, gray.width, gray.height)
            if clipped is None or clipped.w < 2 or clipped.h < 2:
                continue
            crop = gray.pixels[int(clipped.y):int(clipped.bottom),
                               int(clipped.x):int(clipped.right), :]
            positives.append(resize_nearest(Image(crop), window_w, window_h))
        for _ in range(negatives_per_image):
            if gray.width <= window_w or gray.height <= window_h:
                break
            x = int(rng.integers(0, gray.width - window_w))
            y = int(rng.integers(0, gray.height - window_h))
            cand = BoundingBox(x, y, window_w, window_h)
            if any(iou(cand, b) > 0.3 for b in boxes):
                continue
            crop = gray.pixels[y:y + window_h, x:x + window_w, :]
            negatives.append(Image(crop))
    if not positives or not negatives:
        raise InputError("training needs both positive boxes and negative crops")
    return positives, negatives


def cmd_train(args) -> int:
    images, truth = _load_dataset(args)
    out_path = Path(args.output)

    if args.detector == "haar":
        w = h = args.window
        positives, negatives = _window_crops(images, truth, w, h,
                                             args.negatives, args.seed)
        pos_ii = [integral(p) for p in positives]
        neg_ii = [integral(n) for n in negatives]
        features = haar.generate_haar_features(w, h, stride=args.feature_stride)
        model = haar.train_cascade(pos_ii, neg_ii, features,
                                   stage_plan=((args.rounds, 0.0),),
                                   window_w=w, window_h=h)
        samples = pos_ii + neg_ii
        labels = [1] * len(pos_ii) + [-1] * len(neg_ii)
        window = BoundingBox(0, 0, w, h)
        errors = sum(1 for ii, y in zip(samples, labels)
                     if (model.classify_window(ii, window)[0]) != (y > 0))
        haar.save_cascade(model, out_path)
        print(f"training-error {errors / len(samples):.4f}")
        return EXIT_OK

    if args.detector == "hogsvm":
        cfg = hog.HogConfig()
        positives, negatives = _window_crops(images, truth, cfg.window_w,
                                             cfg.window_h, args.negatives,
                                             args.seed)
        X = [hog.hog_descriptor(p, cfg) for p in positives]
        X += [hog.hog_descriptor(n, cfg) for n in negatives]
        y = [1.0] * len(positives) + [-1.0] * len(negatives)
        model = svm.svm_train(np.asarray(X), np.asarray(y), cfg,
                              lam=args.lam, epochs=args.epochs, seed=args.seed)
        acc = svm.training_accuracy(np.asarray(X), np.asarray(y),
                                    model.weights.astype(np.float64),
                                    model.bias)
        hog.save_hog_svm(model, out_path)
        print(f"training-accuracy {acc:.4f}")
        return EXIT_OK

    # lcnn
    model = architecture.build_lite_cnn(width_mult=args.width_mult,
                                        seed=args.seed)
    size = model.input_size
    dataset = []
    for image_id, img in images.items():
        boxes = [b for b, _ in truth.get(image_id, [])]
        if not boxes:
            continue
        sx, sy = size / img.width, size / img.height
        scaled = [BoundingBox(b.x * sx, b.y * sy, b.w * sx, b.h * sy)
                  for b in boxes]
        dataset.append((resize_nearest(img, size, size), scaled))
    if not dataset:
        raise InputError("no annotated images for training")
    losses = cnn_train.train_toy(model, dataset, steps=args.steps, lr=args.lr)
    serialize.save_model(model, out_path)
    print(f"loss-initial {losses[0]:.6f}")
    print(f"loss-final {losses[-1]:.6f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.stub_ms is not None:
        def detector(img):
            time.sleep(args.stub_ms / 1000.0)
            return []
        name = args.name or f"stub-{args.stub_ms:g}ms"
    else:
        if not args.model:
            raise ConfigError("either --stub-ms or --model is required")
        detector, _ = _load_detector(args)
        name = args.name or args.detector
    files = _collect_images(args.input)
    frames = [load_image(p) for p in files]

    from .procstat import ProcessSampler

    sampler = ProcessSampler(period_ms=args.period_ms).start()
    stats = evalbench.bench_fps(detector, frames, duration_s=args.duration)
    series = sampler.stop()
    report = evalbench.EvalReport(
        name=name, fps_avg=stats["fps_avg"], fps_peak=stats["fps_peak"],
        cpu_avg=series.cpu_avg, mem_peak=series.mem_peak_mb,
        frames=stats["frames"], duration=stats["duration"])
    text = evalbench.emit_report([report], fmt=args.format,
                                 paper_ref=args.paper_ref)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_eval(args) -> int:
    det_path = Path(args.detections)
    truth_path = Path(args.truth)
    for p in (det_path, truth_path):
        if not p.is_file():
            raise ConfigError(f"file does not exist: {p}")
    preds = ann.load_detections(det_path)
    truth = ann.load_annotations(truth_path)
    totals = {"tp": 0, "fp": 0, "fn": 0}
    for image_id in sorted(set(preds) | set(truth)):
        counts = evalbench.match_detections(
            preds.get(image_id, []),
            [b for b, _ in truth.get(image_id, [])],
            iou_threshold=args.iou)
        for k in totals:
            totals[k] += counts[k]
    r = evalbench.rates(totals)
    report = evalbench.EvalReport(name=args.name, fpr=r["fpr"], fnr=r["fnr"])
    text = evalbench.emit_report([report], fmt=args.format,
                                 paper_ref=args.paper_ref)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _analyze_rows_text(rows) -> str:
    cols = ("layer", "op", "in_channels", "out_channels", "kernel", "stride",
            "out_size", "macs", "macs_conventional", "reduction", "params")
    cells = []
    for row in rows:
        cells.append([f"{row[c]:.6f}" if c == "reduction" and row[c] != ""
                      else str(row[c]) for c in cols])
    widths = [max(len(c), *(len(r[i]) for r in cells))
              for i, c in enumerate(cols)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in cells:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    if args.arch:
        arch_path = Path(args.arch)
        if not arch_path.is_file():
            raise FormatError(f"architecture file not found: {arch_path}")
        try:
            data = json.loads(arch_path.read_text(encoding="utf-8"))
            specs = architecture.specs_from_dict(data)
        except (json.JSONDecodeError, ConfigError) as exc:
            raise FormatError(f"malformed architecture JSON: {exc}") from exc
    else:
        specs = architecture.default_layer_specs(width_mult=args.width_mult,
                                                 input_size=args.input_size)
    rows = complexity.layer_table(specs)
    if args.format == "json":
        text = json.dumps(rows, indent=1)
    elif args.format == "csv":
        import csv as _csv
        import io as _io
        buf = _io.StringIO()
        writer = _csv.DictWriter(buf, fieldnames=list(rows[0].keys()),
                                 lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = _analyze_rows_text(rows)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgesight",
        description="Human-object detection toolkit: Haar cascade, HOG+SVM, "
                    "and a lightweight separable-convolution CNN.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--format", choices=("table", "json", "csv"),
                       default="table")
        p.add_argument("--output", default=None)
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("detect", help="run a trained detector over images")
    common(p)
    p.add_argument("--detector", choices=("haar", "hogsvm", "lcnn"),
                   required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--annotate", default=None,
                   help="directory for PPM copies with box overlays")
    p.add_argument("--conf", type=float, default=0.5)
    p.add_argument("--nms-iou", type=float, default=0.3)
    p.add_argument("--step", type=int, default=4)
    p.add_argument("--scale-factor", type=float, default=1.25)
    p.add_argument("--merge", choices=("nms", "biggest-box"), default="nms")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("train", help="train a detector at desk scale")
    common(p)
    p.add_argument("--detector", choices=("haar", "hogsvm", "lcnn"),
                   required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--truth", default=None,
                   help="annotation file (default <data>/annotations.txt)")
    p.add_argument("--rounds", type=int, default=5, help="boosting rounds")
    p.add_argument("--epochs", type=int, default=20, help="SVM epochs")
    p.add_argument("--steps", type=int, default=100, help="CNN SGD steps")
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--lam", type=float, default=1e-3)
    p.add_argument("--width-mult", type=float, default=0.25)
    p.add_argument("--window", type=int, default=24)
    p.add_argument("--negatives", type=int, default=8,
                   help="negative crops per image")
    p.add_argument("--feature-stride", type=int, default=4)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="timed FPS/CPU/memory benchmark")
    common(p)
    p.add_argument("--detector", choices=("haar", "hogsvm", "lcnn"))
    p.add_argument("--model", default=None)
    p.add_argument("--stub-ms", type=float, default=None,
                   help="benchmark a stub detector sleeping this long per frame")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--duration", type=float, default=30.0)
    p.add_argument("--period-ms", type=float, default=100.0)
    p.add_argument("--paper-ref", action="store_true")
    p.add_argument("--name", default=None)
    p.add_argument("--conf", type=float, default=0.5)
    p.add_argument("--nms-iou", type=float, default=0.3)
    p.add_argument("--step", type=int, default=4)
    p.add_argument("--scale-factor", type=float, default=1.25)
    p.add_argument("--merge", choices=("nms", "biggest-box"), default="nms")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="FPR/FNR against ground truth")
    common(p)
    p.add_argument("--detections", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--paper-ref", action="store_true")
    p.add_argument("--name", default="detector")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="per-layer MAC/parameter analysis")
    common(p)
    p.add_argument("--arch", default=None,
                   help="architecture JSON (default: built-in network)")
    p.add_argument("--width-mult", type=float, default=1.0)
    p.add_argument("--input-size", type=int, default=224)
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, ShapeError, BoundsError, ChannelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (InputError, ToolkitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
