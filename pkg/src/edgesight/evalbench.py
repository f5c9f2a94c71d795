"""Detector evaluation and benchmarking: greedy detection/ground-truth
matching, false-positive and false-negative rates, timed FPS runs, and
report emission as a text table, JSON, or CSV.

FPR here is the fraction of emitted detections that are false (the
precision complement) and FNR the fraction of ground-truth objects missed;
the number of windows a detector examined plays no role, since it differs
wildly between detector families.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, fields

from .errors import ConfigError, InputError
from .geometry import iou

# Published reference measurements for these detector families on a
# Raspberry Pi 3 class device, for optional side-by-side report columns.
# Values not published are None. Keys: detector name -> metric row.
REFERENCE_ROWS = {
    "lcnn": {"fps_avg": 1.79, "fps_peak": 2.06, "fpr": 6.6, "fnr": 18.1,
             "mem_peak": 139.5},
    "haar": {"fps_avg": None, "fps_peak": None, "fpr": 26.3, "fnr": 34.9,
             "mem_peak": None},
    "ssd-googlenet": {"fps_avg": 0.39, "fps_peak": None, "fpr": 5.3,
                      "fnr": 15.6, "mem_peak": 320.4},
    "hogsvm": {"fps_avg": None, "fps_peak": None, "fpr": None, "fnr": None,
               "mem_peak": None},
    "vgg": {"fps_avg": None, "fps_peak": None, "fpr": None, "fnr": None,
            "mem_peak": 2459.8},
    "squeezenet": {"fps_avg": None, "fps_peak": None, "fpr": None, "fnr": None,
                   "mem_peak": 145.3},
    "mobilenet": {"fps_avg": None, "fps_peak": None, "fpr": None, "fnr": None,
                  "mem_peak": 172.2},
}

REPORT_COLUMNS = ("name", "fps_avg", "fps_peak", "cpu_avg", "mem_peak",
                  "fpr", "fnr", "frames", "duration")

WARMUP_FRAMES = 3


@dataclass
class EvalReport:
    """One comparison-table row for one detector."""

    name: str
    fps_avg: float | None = None
    fps_peak: float | None = None
    cpu_avg: float | None = None
    mem_peak: float | None = None  # MB
    fpr: float | None = None       # percent; None marks not-applicable
    fnr: float | None = None
    frames: int | None = None
    duration: float | None = None  # seconds

    def __post_init__(self):
        if self.fps_avg is not None and self.fps_peak is not None:
            if self.fps_peak < self.fps_avg:
                raise InputError("fps_peak cannot be below fps_avg")
        for name in ("fpr", "fnr"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 100.0:
                raise InputError(f"{name} must be a percentage, got {v}")


def match_detections(preds, gt, iou_threshold: float = 0.5) -> dict:
    """Greedy matching by descending score.

    Each prediction claims the unmatched ground-truth box it overlaps best,
    and counts as a true positive when that IoU reaches the threshold; every
    ground-truth box is matched at most once. Returns {"tp", "fp", "fn"}.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ConfigError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    order = sorted(range(len(preds)), key=lambda i: -preds[i].score)
    taken = [False] * len(gt)
    tp = fp = 0
    for i in order:
        best_j = -1
        best_iou = 0.0
        for j, gt_box in enumerate(gt):
            if taken[j]:
                continue
            v = iou(preds[i].box, gt_box)
            if v > best_iou:
                best_iou, best_j = v, j
        if best_j >= 0 and best_iou >= iou_threshold:
            taken[best_j] = True
            tp += 1
        else:
            fp += 1
    fn = len(gt) - tp
    return {"tp": tp, "fp": fp, "fn": fn}


def rates(counts: dict) -> dict:
    """{"fpr", "fnr"} percentages; None marks an undefined (0/0) rate."""
    tp, fp, fn = counts["tp"], counts["fp"], counts["fn"]
    if tp + fp + fn == 0:
        raise InputError("need at least one prediction or ground-truth object")
    fpr = 100.0 * fp / (tp + fp) if tp + fp else None
    fnr = 100.0 * fn / (tp + fn) if tp + fn else None
    return {"fpr": fpr, "fnr": fnr}


def bench_fps(detector, frames, duration_s: float = 30.0) -> dict:
    """Run `detector` over cycled frames for at least `duration_s` seconds.

    The first WARMUP_FRAMES calls are excluded from timing. fps_peak is the
    densest 1-second window of frame completions (never reported below
    fps_avg). Returns {"fps_avg", "fps_peak", "frames", "duration"}.
    """
    frames = list(frames)
    if not frames:
        raise InputError("need at least one frame")
    if duration_s < 1.0:
        raise ConfigError(f"duration must be >= 1 s, got {duration_s}")

    for i in range(WARMUP_FRAMES):
        detector(frames[i % len(frames)])

    done: list[float] = []
    start = time.perf_counter()
    i = 0
    while True:
        detector(frames[i % len(frames)])
        now = time.perf_counter()
        done.append(now - start)
        i += 1
        if now - start >= duration_s:
            break
    elapsed = done[-1]
    fps_avg = len(done) / elapsed

    peak = 0
    lo = 0
    for hi in range(len(done)):
        while done[hi] - done[lo] > 1.0:
            lo += 1
        peak = max(peak, hi - lo + 1)
    fps_peak = max(float(peak), fps_avg)
    return {"fps_avg": fps_avg, "fps_peak": fps_peak, "frames": len(done),
            "duration": elapsed}


def _format_cell(value):
    if value is None:
        return "N/A"
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def emit_report(reports, fmt: str = "table", paper_ref: bool = False) -> str:
    """Render reports in a fixed column order.

    JSON and CSV carry full precision and round-trip losslessly through
    `parse_report_json` / `parse_report_csv`; the table is for reading.
    With `paper_ref`, reference columns from REFERENCE_ROWS are appended.
    """
    if not reports:
        raise InputError("need at least one report")
    ref_cols = ("ref_fps_avg", "ref_fps_peak", "ref_fpr", "ref_fnr",
                "ref_mem_peak") if paper_ref else ()

    def row_values(r: EvalReport):
        vals = {c: getattr(r, c) for c in REPORT_COLUMNS}
        if paper_ref:
            ref = REFERENCE_ROWS.get(r.name.lower(), {})
            vals.update({
                "ref_fps_avg": ref.get("fps_avg"),
                "ref_fps_peak": ref.get("fps_peak"),
                "ref_fpr": ref.get("fpr"),
                "ref_fnr": ref.get("fnr"),
                "ref_mem_peak": ref.get("mem_peak"),
            })
        return vals

    columns = REPORT_COLUMNS + ref_cols
    rows = [row_values(r) for r in reports]

    if fmt == "json":
        return json.dumps(rows, indent=1)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if row[c] is None else repr(row[c])
                             if isinstance(row[c], float) else row[c]
                             for c in columns])
        return buf.getvalue()
    if fmt == "table":
        cells = [[_format_cell(row[c]) for c in columns] for row in rows]
        widths = [max(len(col), *(len(r[i]) for r in cells))
                  for i, col in enumerate(columns)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
        lines.append("  ".join("-" * w for w in widths))
        for r in cells:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown report format {fmt!r}")


def _coerce(name: str, value):
    if value is None or value == "":
        return None
    if name == "name":
        return str(value)
    if name == "frames":
        return int(float(value))
    return float(value)


def parse_report_json(text: str) -> list[EvalReport]:
    data = json.loads(text)
    keep = {f.name for f in fields(EvalReport)}
    return [EvalReport(**{k: _coerce(k, v) for k, v in row.items() if k in keep})
            for row in data]


def parse_report_csv(text: str) -> list[EvalReport]:
    reader = csv.DictReader(io.StringIO(text))
    keep = {f.name for f in fields(EvalReport)}
    return [EvalReport(**{k: _coerce(k, v) for k, v in row.items() if k in keep})
            for row in reader]
