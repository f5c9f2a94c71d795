"""Ground-truth and detection text files.

One line per box, space-separated:

    <image-id> <x> <y> <w> <h> <class-name> [<score>]

Lines starting with '#' and blank lines are ignored. Ground-truth files carry
six fields; detection files append a seventh score column.
"""

from __future__ import annotations

from .errors import FormatError
from .geometry import BoundingBox, Detection


def _parse_lines(path, min_fields, max_fields):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if not min_fields <= len(fields) <= max_fields:
                raise FormatError(f"{path}:{lineno}: expected "
                                  f"{min_fields}-{max_fields} fields, got {len(fields)}")
            try:
                box = BoundingBox(*(float(v) for v in fields[1:5]))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric box field") from None
            yield lineno, fields, box


def load_annotations(path) -> dict[str, list[tuple[BoundingBox, str]]]:
    """Ground-truth boxes grouped by image id."""
    truth: dict[str, list[tuple[BoundingBox, str]]] = {}
    for _, fields, box in _parse_lines(path, 6, 6):
        truth.setdefault(fields[0], []).append((box, fields[5]))
    return truth


def load_detections(path) -> dict[str, list[Detection]]:
    """Detection lines (with score column) grouped by image id."""
    dets: dict[str, list[Detection]] = {}
    for lineno, fields, box in _parse_lines(path, 7, 7):
        try:
            score = float(fields[6])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric score") from None
        dets.setdefault(fields[0], []).append(Detection(box, fields[5], score))
    return dets


def detection_line(image_id: str, det: Detection) -> str:
    b = det.box
    return (f"{image_id} {b.x:.0f} {b.y:.0f} {b.w:.0f} {b.h:.0f} "
            f"{det.label} {det.score:.6g}")


def save_detections(path, per_image: dict[str, list[Detection]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for image_id in per_image:
            for det in per_image[image_id]:
                fh.write(detection_line(image_id, det) + "\n")
