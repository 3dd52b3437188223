"""Posterior and annotation file formats.

Posterior file: TSV with header ``frame<TAB>label1...labelC`` and one row per
frame, plus a ``<stem>.meta.json`` sidecar ``{clip_id, base_hop_seconds,
factor}``.

Annotation file: DCASE-style TSV ``filename<TAB>onset<TAB>offset<TAB>event_label``.
A row with only a filename marks a clip without events.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Dict, Iterable, List, Union

import numpy as np

from .core import ClassMap, Event, EventList, InvalidInputError, PosteriorClip, TimeGrid, validate_clip

PathLike = Union[str, Path]

ANNOTATION_HEADER = ("filename", "onset", "offset", "event_label")
META_SUFFIX = ".meta.json"


def format_float(x: float, min_decimals: int = 3) -> str:
    """Shortest round-tripping repr of ``x`` with at least ``min_decimals`` decimals."""
    s = repr(float(x))
    if "e" in s or "E" in s:
        s = np.format_float_positional(float(x), unique=True, trim="-")
    if "." not in s:
        s += "."
    whole, frac = s.split(".")
    return f"{whole}.{frac.ljust(min_decimals, '0')}"


def meta_path(tsv_path: PathLike) -> Path:
    return Path(tsv_path).with_suffix(META_SUFFIX)


def write_posterior(clip: PosteriorClip, path: PathLike) -> Path:
    path = Path(path)
    lines = ["\t".join(("frame",) + clip.classes.labels)]
    for t, row in enumerate(clip.probs):
        lines.append("\t".join([str(t)] + [repr(float(v)) for v in row]))
    path.write_text("\n".join(lines) + "\n")
    meta = {
        "clip_id": clip.clip_id,
        "base_hop_seconds": clip.grid.base_hop,
        "factor": clip.grid.factor,
    }
    meta_path(path).write_text(json.dumps(meta, indent=2) + "\n")
    return path


def read_posterior(path: PathLike) -> PosteriorClip:
    """Load a posterior TSV and its sidecar.

    A missing sidecar falls back to the file stem, a 20 ms hop and factor 1.
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"{path}: no such posterior file")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE) if r]
    if not rows or rows[0][0] != "frame":
        raise InvalidInputError(f"{path}: missing 'frame' header")
    labels = tuple(rows[0][1:])
    if not labels:
        raise InvalidInputError(f"{path}: header names no classes")
    probs = np.empty((len(rows) - 1, len(labels)), dtype=np.float64)
    for i, row in enumerate(rows[1:]):
        if len(row) != len(labels) + 1:
            raise InvalidInputError(f"{path}:{i + 2}: expected {len(labels) + 1} fields, got {len(row)}")
        try:
            frame = int(row[0])
            probs[i] = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{i + 2}: {exc}") from None
        if frame != i:
            raise InvalidInputError(f"{path}:{i + 2}: frame index {frame}, expected {i}")

    clip_id, base_hop, factor = path.stem, 0.020, 1
    mpath = meta_path(path)
    if mpath.is_file():
        try:
            meta = json.loads(mpath.read_text())
            clip_id = str(meta.get("clip_id", clip_id))
            base_hop = float(meta.get("base_hop_seconds", base_hop))
            factor = int(meta.get("factor", factor))
        except (ValueError, TypeError) as exc:
            raise InvalidInputError(f"{mpath}: {exc}") from None
    clip = PosteriorClip(clip_id, probs, TimeGrid(base_hop, factor), ClassMap(labels))
    problem = validate_clip(clip)
    if problem is not None:
        raise InvalidInputError(f"{path}: {problem}")
    return clip


def collect_posterior_paths(inputs: Iterable[PathLike]) -> List[Path]:
    """Expand directories into their ``*.tsv`` posterior files, sorted."""
    out = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            out.extend(sorted(p.glob("*.tsv")))
        else:
            out.append(p)
    return out


def write_annotations(lists: Iterable[EventList], path: PathLike) -> Path:
    path = Path(path)
    lines = ["\t".join(ANNOTATION_HEADER)]
    for el in sorted(lists, key=lambda e: e.clip_id):
        if not el.events:
            lines.append(el.clip_id + "\t\t\t")
        for ev in el.events:
            lines.append(
                "\t".join((el.clip_id, format_float(ev.onset), format_float(ev.offset), ev.label))
            )
    path.write_text("\n".join(lines) + "\n")
    return path


def read_annotations(path: PathLike) -> Dict[str, EventList]:
    """Load an annotation TSV into ``{clip_id: EventList}``."""
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"{path}: no such annotation file")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE))
    if not rows or tuple(c.strip() for c in rows[0][:4]) != ANNOTATION_HEADER:
        raise InvalidInputError(f"{path}: header must be {'<TAB>'.join(ANNOTATION_HEADER)}")
    events: Dict[str, list] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not any(c.strip() for c in row):
            continue
        clip_id = row[0]
        bucket = events.setdefault(clip_id, [])
        rest = [c.strip() for c in row[1:]]
        if not any(rest):
            continue
        if len(rest) < 3 or not all(rest[:3]):
            raise InvalidInputError(f"{path}:{lineno}: expected onset, offset and event_label")
        try:
            bucket.append(Event(rest[2], float(rest[0]), float(rest[1])))
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
    return {cid: EventList(cid, tuple(evs)) for cid, evs in events.items()}
