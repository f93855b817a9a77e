"""Readers and writers for embedding, matrix, boundary, scores and report files."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .core import Boundary, BoundarySet, Timeline
from .refine import TableScorer
from .simatrix import EmbeddingSet, SimilarityMatrix


class DataError(ValueError):
    """An input file is missing, malformed, or inconsistent."""


def _read_json(path: Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None


def _require(obj: Any, key: str, path: Path, kind: type | tuple = object) -> Any:
    if not isinstance(obj, dict):
        raise DataError(f"{path}: expected a JSON object at top level")
    if key not in obj:
        raise DataError(f"{path}: missing key {key!r}")
    val = obj[key]
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise DataError(f"{path}: key {key!r} has wrong type {type(val).__name__}")
    return val


def _read_csv(path: Path) -> np.ndarray:
    rows = []
    try:
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or all(not c.strip() for c in row):
                    continue
                try:
                    rows.append([float(c) for c in row])
                except ValueError:
                    raise DataError(f"{path}:{lineno}: non-numeric value") from None
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    if not rows:
        raise DataError(f"{path}: no rows")
    width = len(rows[0])
    for i, r in enumerate(rows, start=1):
        if len(r) != width:
            raise DataError(f"{path}: row {i} has {len(r)} values, expected {width}")
    return np.array(rows)


def _write_json(path: Path, obj: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _is_csv(path: Path) -> bool:
    return Path(path).suffix.lower() == ".csv"


# -- embeddings ------------------------------------------------------------------


def load_embeddings(path, kind: str | None = None, dim: int | None = None, model_id: str | None = None) -> EmbeddingSet:
    """JSON ``{"model_id", "kind", "dim", "vectors"}`` or headerless CSV (kind from caller)."""
    path = Path(path)
    if _is_csv(path):
        if kind is None:
            raise DataError(f"{path}: CSV embeddings need an explicit kind")
        vecs = _read_csv(path)
        mid = model_id or path.stem
    else:
        obj = _read_json(path)
        vecs = _require(obj, "vectors", path, list)
        file_kind = _require(obj, "kind", path, str)
        if kind is not None and file_kind != kind:
            raise DataError(f"{path}: key 'kind' is {file_kind!r}, expected {kind!r}")
        kind = file_kind
        mid = obj.get("model_id", model_id or path.stem)
        file_dim = obj.get("dim")
        try:
            vecs = np.array(vecs, dtype=np.float64)
        except (TypeError, ValueError):
            raise DataError(f"{path}: key 'vectors' must be a list of equal-length numeric lists") from None
        if file_dim is not None and (vecs.ndim != 2 or vecs.shape[1] != file_dim):
            raise DataError(f"{path}: key 'dim' is {file_dim} but vectors have shape {vecs.shape}")
    if dim is not None and (vecs.ndim != 2 or vecs.shape[1] != dim):
        raise DataError(f"{path}: expected dimension {dim}, got shape {vecs.shape}")
    try:
        return EmbeddingSet(vecs, kind, mid)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def save_embeddings(path, emb: EmbeddingSet) -> None:
    _write_json(
        Path(path),
        {"model_id": emb.model_id, "kind": emb.kind, "dim": emb.dim, "vectors": emb.vectors.tolist()},
    )


# -- similarity matrices ------------------------------------------------------------


def load_matrix(path) -> SimilarityMatrix:
    path = Path(path)
    if _is_csv(path):
        values = _read_csv(path)
        video_id = path.name.split(".")[0]
    else:
        obj = _read_json(path)
        values = _require(obj, "values", path, list)
        m = _require(obj, "frames", path, int)
        n = _require(obj, "captions", path, int)
        try:
            values = np.array(values, dtype=np.float64)
        except (TypeError, ValueError):
            raise DataError(f"{path}: key 'values' must be a rectangular numeric array") from None
        if values.shape != (m, n):
            raise DataError(f"{path}: key 'values' has shape {values.shape}, but frames={m}, captions={n}")
        video_id = obj.get("video_id") or path.name.split(".")[0]
    try:
        return SimilarityMatrix(values, video_id=video_id)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def matrix_json(s: SimilarityMatrix) -> dict:
    return {"video_id": s.video_id, "frames": s.frame_count, "captions": s.n_captions, "values": s.values.tolist()}


def save_matrix(path, s: SimilarityMatrix) -> None:
    path = Path(path)
    if _is_csv(path):
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in s.values:
                w.writerow([repr(float(x)) for x in row])
    else:
        _write_json(path, matrix_json(s))


# -- boundaries --------------------------------------------------------------------


def boundaries_json(
    video_id: str, frames: int, bset: BoundarySet, stage: int | None = None, losses=None
) -> dict:
    """``losses`` overrides ``bset.losses`` per event; ``None`` entries are omitted."""
    if losses is None:
        losses = bset.losses if bset.losses is not None else [None] * len(bset)
    events = []
    for i, b in enumerate(bset):
        ev = {"index": i, "start": b.start, "end": b.end}
        if losses[i] is not None:
            ev["loss"] = losses[i]
        if bset.flagged[i]:
            ev["flagged"] = True
        events.append(ev)
    out = {"video_id": video_id, "frames": frames, "events": events}
    if stage is not None:
        out["stage"] = stage
    return out


def save_boundaries(
    path, video_id: str, frames: int, bset: BoundarySet, stage: int | None = None, losses=None, **extra
) -> None:
    obj = boundaries_json(video_id, frames, bset, stage, losses)
    obj.update(extra)
    _write_json(Path(path), obj)


def load_boundaries(path) -> tuple[str, Timeline, BoundarySet]:
    path = Path(path)
    obj = _read_json(path)
    return parse_boundaries(obj, path)


def boundary_stage(path) -> int:
    obj = _read_json(Path(path))
    stage = obj.get("stage", 0) if isinstance(obj, dict) else 0
    if not isinstance(stage, int) or isinstance(stage, bool) or stage < 0:
        raise DataError(f"{path}: key 'stage' must be a non-negative integer")
    return stage


def parse_boundaries(obj: Any, path: Path) -> tuple[str, Timeline, BoundarySet]:
    video_id = _require(obj, "video_id", path, str)
    frames = _require(obj, "frames", path, int)
    events = _require(obj, "events", path, list)
    try:
        timeline = Timeline(frames)
    except ValueError as exc:
        raise DataError(f"{path}: key 'frames': {exc}") from None
    by_index = {}
    for k, ev in enumerate(events):
        where = f"{path}: events[{k}]"
        if not isinstance(ev, dict):
            raise DataError(f"{where}: expected an object")
        for key in ("index", "start", "end"):
            if key not in ev:
                raise DataError(f"{where}: missing key {key!r}")
            if not isinstance(ev[key], (int, float)) or isinstance(ev[key], bool):
                raise DataError(f"{where}: key {key!r} must be numeric")
        loss = ev.get("loss")
        if loss is not None and (not isinstance(loss, (int, float)) or isinstance(loss, bool)):
            raise DataError(f"{where}: key 'loss' must be numeric")
        try:
            b = Boundary(ev["start"], ev["end"])
        except ValueError as exc:
            raise DataError(f"{where}: {exc}") from None
        if not b.within(timeline):
            raise DataError(f"{where}: [{b.start}, {b.end}) outside [0, {frames})")
        by_index[int(ev["index"])] = (b, ev.get("loss"), bool(ev.get("flagged", False)))
    if sorted(by_index) != list(range(len(events))):
        raise DataError(f"{path}: key 'index' values must be 0..{len(events) - 1} without repeats")
    ordered = [by_index[i] for i in range(len(events))]
    have_loss = bool(ordered) and all(x[1] is not None for x in ordered)
    bset = BoundarySet(
        tuple(x[0] for x in ordered),
        tuple(float(x[1]) for x in ordered) if have_loss else None,
        tuple(x[2] for x in ordered),
    )
    return video_id, timeline, bset


# -- scorer tables -------------------------------------------------------------------


def load_scores(path, timeline: Timeline | None = None) -> TableScorer:
    """``{"queries": [{"start", "end", "event_logit", "caption_logits": [...]}, ...]}``."""
    path = Path(path)
    obj = _read_json(path)
    queries = _require(obj, "queries", path, list)
    bounds, ev, cap = [], [], []
    for k, q in enumerate(queries):
        where = f"{path}: queries[{k}]"
        if not isinstance(q, dict):
            raise DataError(f"{where}: expected an object")
        for key in ("start", "end", "event_logit", "caption_logits"):
            if key not in q:
                raise DataError(f"{where}: missing key {key!r}")
        try:
            bounds.append(Boundary(q["start"], q["end"]))
            ev.append(float(q["event_logit"]))
            cap.append([float(x) for x in q["caption_logits"]])
        except (TypeError, ValueError) as exc:
            raise DataError(f"{where}: {exc}") from None
    return TableScorer(bounds, ev, cap, timeline)


# -- reports / manifests ------------------------------------------------------------------


def save_json(path, obj: Any) -> None:
    _write_json(Path(path), obj)


def load_json(path) -> Any:
    return _read_json(Path(path))


REPORT_SCHEMA = {
    "type": "object",
    "required": ["arm", "avg_precision", "avg_recall", "f1", "mean_iou", "per_threshold", "n_videos"],
    "properties": {
        "arm": {"type": "string"},
        "avg_precision": {"type": "number", "minimum": 0, "maximum": 1},
        "avg_recall": {"type": "number", "minimum": 0, "maximum": 1},
        "f1": {"type": "number", "minimum": 0, "maximum": 1},
        "mean_iou": {"type": "number", "minimum": 0, "maximum": 1},
        "n_videos": {"type": "integer", "minimum": 0},
        "failures": {"type": "integer", "minimum": 0},
        "per_threshold": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["precision", "recall"],
                "properties": {
                    "precision": {"type": "number", "minimum": 0, "maximum": 1},
                    "recall": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}
