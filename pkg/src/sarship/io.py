"""File formats: JSON-lines detection records and F32GRID / PGM grids.

A detection record is one JSON object per line with the fields
``image_id, cx, cy, w, h, theta_deg`` and, for predictions, ``score``.
``h`` is the side along ``theta_deg``.  Records are canonicalized on read,
so a record with ``w > h`` comes back with the sides swapped and the angle
turned by 90 degrees.

F32GRID is the ASCII header ``F32GRID <width> <height>\\n`` followed by
``width*height`` little-endian float32 values, row-major, top row first.
"""

from __future__ import annotations

import json
import math
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Iterable, List

import numpy as np

from .errors import FormatError, InvalidBoxError
from .geometry import ObbBox, canonicalize_obb

F32_MAGIC = b"F32GRID"
MAX_CELLS = 1 << 28

RECORD_FIELDS = ("image_id", "cx", "cy", "w", "h", "theta_deg", "score")


def _number(rec, key, path, lineno):
    v = rec.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise FormatError(f"field {key!r} must be a finite number, got {v!r}", path, lineno)
    return float(v)


def parse_record(line: str, path=None, lineno=None, require_score=False):
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON ({exc.msg})", path, lineno) from None
    if not isinstance(rec, dict):
        raise FormatError("record must be a JSON object", path, lineno)
    unknown = set(rec) - set(RECORD_FIELDS)
    if unknown:
        raise FormatError(f"unknown fields {sorted(unknown)}", path, lineno)
    image_id = rec.get("image_id")
    if not isinstance(image_id, str) or not image_id:
        raise FormatError("image_id must be a non-empty string", path, lineno)
    cx, cy, w, h, theta_deg = (_number(rec, k, path, lineno) for k in ("cx", "cy", "w", "h", "theta_deg"))
    score = rec.get("score")
    if score is None:
        if require_score:
            raise FormatError("prediction record is missing 'score'", path, lineno)
    else:
        score = _number(rec, "score", path, lineno)
    try:
        box = canonicalize_obb(cx, cy, h, w, math.radians(theta_deg), score=score)
    except InvalidBoxError as exc:
        raise FormatError(str(exc), path, lineno) from None
    return image_id, box


def parse_detections(path, require_score: bool = False) -> Dict[str, List[ObbBox]]:
    """Read a detection file into ``{image_id: [boxes]}`` in file order.

    Blank lines are ignored.  Errors name the offending line.
    """
    out: Dict[str, List[ObbBox]] = OrderedDict()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            image_id, box = parse_record(line, path, lineno, require_score)
            out.setdefault(image_id, []).append(box)
    return out


def box_record(image_id: str, box: ObbBox) -> dict:
    """Record for a canonical box, angle wrapped to [-90, 90) degrees."""
    rec = {
        "image_id": image_id,
        "cx": box.cx,
        "cy": box.cy,
        "w": box.w,
        "h": box.h,
        "theta_deg": math.degrees(box.theta),
    }
    if rec["theta_deg"] >= 90.0 or rec["theta_deg"] < -90.0:
        rec["theta_deg"] = -90.0
    if box.score is not None:
        rec["score"] = box.score
    return rec


def dumps_record(rec: dict) -> str:
    return json.dumps(rec, sort_keys=False, separators=(", ", ": "))


def write_detections(path, boxes_by_image: Dict[str, Iterable[ObbBox]]):
    with open(path, "w", encoding="utf-8") as fh:
        for image_id in sorted(boxes_by_image):
            for box in boxes_by_image[image_id]:
                fh.write(dumps_record(box_record(image_id, box)) + "\n")


def write_grid(path, grid):
    g = np.asarray(grid)
    if g.ndim != 2:
        raise ValueError(f"grid must be 2-D, got shape {g.shape}")
    height, width = g.shape
    with open(path, "wb") as fh:
        fh.write(b"%s %d %d\n" % (F32_MAGIC, width, height))
        fh.write(np.ascontiguousarray(g, dtype="<f4").tobytes())


def _read_f32(path, data):
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError("missing header line", path)
    parts = data[:nl].split()
    if len(parts) != 3 or parts[0] != F32_MAGIC:
        raise FormatError("bad F32GRID header", path)
    try:
        width, height = int(parts[1]), int(parts[2])
    except ValueError:
        raise FormatError("non-integer grid dimensions", path) from None
    if width <= 0 or height <= 0 or width * height > MAX_CELLS:
        raise FormatError(f"grid dimensions {width}x{height} out of range", path)
    payload = data[nl + 1 :]
    expected = 4 * width * height
    if len(payload) != expected:
        raise FormatError(f"payload is {len(payload)} bytes, expected {expected}", path)
    return np.frombuffer(payload, dtype="<f4").reshape(height, width).copy()


def _pgm_tokens(data, count):
    # header tokens separated by whitespace; '#' comments run to end of line
    tokens, pos = [], 2
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def _read_pgm(path, data):
    try:
        (w, h, maxval), start = _pgm_tokens(data, 3)
        width, height, maxval = int(w), int(h), int(maxval)
    except (ValueError, FormatError):
        raise FormatError("bad PGM header", path) from None
    if width <= 0 or height <= 0 or width * height > MAX_CELLS:
        raise FormatError(f"grid dimensions {width}x{height} out of range", path)
    if not 0 < maxval < 256:
        raise FormatError(f"only 8-bit PGM is supported (maxval {maxval})", path)
    payload = data[start:]
    expected = width * height
    if len(payload) < expected:
        raise FormatError(f"payload is {len(payload)} bytes, expected {expected}", path)
    px = np.frombuffer(payload[:expected], dtype=np.uint8).reshape(height, width)
    return (px.astype(np.float32) / np.float32(maxval)).astype(np.float32)


def read_grid(path) -> np.ndarray:
    """Read an F32GRID file or an 8-bit binary PGM (P5) as float32."""
    data = Path(path).read_bytes()
    if data.startswith(F32_MAGIC):
        return _read_f32(path, data)
    if data.startswith(b"P5"):
        return _read_pgm(path, data)
    raise FormatError("unrecognised grid format (expected F32GRID or P5)", path)
