"""CSV readers and writers for observations, triangulations and sweep tables."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

SCHEMA_LINE = "# mvtri-schema v1"
OBS_HEADER = ["frame", "joint", "camera", "u", "v"]
TRI_HEADER = ["frame", "joint", "x", "y", "z", "residual", "iterations", "method", "flag"]


class ParseError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def fmt(value) -> str:
    """17 significant digits; empty string for missing values."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.17g}"


def _data_lines(fh):
    for lineno, line in enumerate(fh, start=1):
        if line.strip() and not line.lstrip().startswith("#"):
            yield lineno, line


@dataclass(frozen=True)
class ObservationRecord:
    frame: int
    joint: int
    camera: str
    u: float
    v: float
    line: int


def read_observations(path, camera_names) -> list[ObservationRecord]:
    """Parse an observation CSV; every camera must be one of ``camera_names``."""
    known = set(camera_names)
    records = []
    seen = set()
    with open(path, newline="") as fh:
        lines = list(_data_lines(fh))
    if not lines:
        raise ParseError(path, 1, "empty observation file")
    header_line, header = lines[0]
    cols = [c.strip() for c in next(csv.reader([header]))]
    if cols != OBS_HEADER:
        raise ParseError(path, header_line, f"expected header {','.join(OBS_HEADER)}, got {','.join(cols)}")
    for lineno, line in lines[1:]:
        fields = [c.strip() for c in next(csv.reader([line]))]
        if len(fields) != 5:
            raise ParseError(path, lineno, f"expected 5 fields, got {len(fields)}")
        frame, joint, cam, u, v = fields
        try:
            rec = ObservationRecord(int(frame), int(joint), cam, float(u), float(v), lineno)
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        if not (math.isfinite(rec.u) and math.isfinite(rec.v)):
            raise ParseError(path, lineno, "non-finite pixel coordinate")
        if cam not in known:
            raise ParseError(path, lineno, f"unknown camera {cam!r}")
        key = (rec.frame, rec.joint, cam)
        if key in seen:
            raise ParseError(path, lineno, f"duplicate observation of frame {rec.frame} joint {rec.joint} in camera {cam!r}")
        seen.add(key)
        records.append(rec)
    return records


def write_observations(path, rows) -> None:
    """``rows`` are (frame, joint, camera, u, v) tuples."""
    with open(path, "w", newline="") as fh:
        fh.write(SCHEMA_LINE + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(OBS_HEADER)
        for frame, joint, cam, u, v in rows:
            w.writerow([frame, joint, cam, fmt(u), fmt(v)])


def write_table(path, header, rows, comments=()) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(SCHEMA_LINE + "\n")
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = [next(csv.reader([line])) for _, line in _data_lines(fh)]
    return rows[0], rows[1:]


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump({"schema": "mvtri-schema v1", **payload}, fh, indent=2, allow_nan=False)
