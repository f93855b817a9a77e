"""Caption-aware pseudo boundary generation with soft time constraints.

For every caption independently the search starts from its slot in a uniform
split of the video. Each iteration collects the top-k most similar frames in a
local window around the current boundary, picks their medoid as the new centre,
sizes a coarse interval from the spread of the top-k frames, and tightens it to
the extreme top-k frames it contains. The iteration with the lowest
similarity-weighted distance loss wins.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import Boundary, BoundarySet, Timeline, resolve_overlaps, uniform_init
from .simatrix import SimilarityMatrix

TOP_K_CHOICES = (15, 20, 25, 30)


@dataclass(frozen=True)
class GenConfig:
    top_k: int = 15
    iterations: int = 5
    alpha: float = 2.0
    window_margin: float = 0.5
    resolve_overlaps: bool = False

    def __post_init__(self) -> None:
        if int(self.top_k) != self.top_k or self.top_k < 1:
            raise ValueError(f"top_k must be a positive integer, got {self.top_k!r}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be a positive integer, got {self.iterations!r}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.window_margin >= 0:
            raise ValueError(f"window_margin must be >= 0, got {self.window_margin}")


@dataclass(frozen=True)
class TopKFrames:
    positions: tuple[int, ...]
    scores: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", tuple(int(p) for p in self.positions))
        object.__setattr__(self, "scores", tuple(float(x) for x in self.scores))
        if len(self.positions) != len(self.scores):
            raise ValueError("positions and scores differ in length")
        if len(set(self.positions)) != len(self.positions):
            raise ValueError("top-k positions must be unique")

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class IterationRecord:
    boundary: Boundary
    loss: float
    center: int
    std: float
    window: Boundary


def window_frames(window: Boundary, timeline: Timeline) -> range:
    """Integer frames f with ``window.start <= f < window.end`` inside the video."""
    lo = max(0, math.ceil(window.start))
    hi = min(timeline.frame_count, math.ceil(window.end))
    return range(lo, hi)


def topk_local(s: SimilarityMatrix, n: int, window: Boundary, k: int) -> TopKFrames:
    frames = window_frames(window, s.timeline)
    if len(frames) == 0:
        raise ValueError(f"window [{window.start}, {window.end}) contains no frame")
    col = s.values[frames.start:frames.stop, n]
    # stable sort on -score: ties resolved toward the lower frame index
    order = np.argsort(-col, kind="stable")[: min(k, len(col))]
    return TopKFrames(tuple(frames.start + int(i) for i in order), tuple(float(col[i]) for i in order))


def medoid_center(t: TopKFrames) -> int:
    if not len(t):
        raise ValueError("medoid of an empty frame set")
    pos = np.asarray(t.positions, dtype=np.int64)
    total = np.abs(pos[:, None] - pos[None, :]).sum(axis=1)
    best = total.min()
    return int(pos[total == best].min())


def boundary_std(t: TopKFrames, center: int) -> float:
    if not len(t):
        raise ValueError("std of an empty frame set")
    pos = np.asarray(t.positions, dtype=np.float64)
    return float(np.sqrt(np.mean((pos - center) ** 2)))


def tighten(center: int, std: float, alpha: float, t: TopKFrames, timeline: Timeline) -> Boundary:
    if std < 0:
        raise ValueError(f"std must be >= 0, got {std}")
    lo = min(max(center - alpha * std, 0.0), float(timeline.frame_count))
    hi = min(max(center + alpha * std, 0.0), float(timeline.frame_count))
    inside = [p for p in t.positions if lo <= p <= hi]
    if not inside:
        return Boundary(float(center), float(center + 1))
    return Boundary(float(min(inside)), float(max(inside) + 1))


def dis(f: float, b: Boundary) -> float:
    """Signed distance of frame position ``f`` to ``b``: negative inside, positive outside."""
    if b.start < f < b.end:
        return -min(f - b.start, b.end - f)
    if f < b.start or f > b.end:
        return max(b.start - f, f - b.end)
    return 0.0


def caption_loss(s: SimilarityMatrix, n: int, t: TopKFrames, b: Boundary) -> float:
    col = s.values[:, n]
    return float(sum(col[p] * dis(p, b) for p in t.positions))


def _usable_window(window: Boundary, timeline: Timeline) -> Boundary:
    # a window narrower than one frame is widened to the frame holding its centre
    if len(window_frames(window, timeline)):
        return window
    f = min(int(math.floor(window.center)), timeline.frame_count - 1)
    return Boundary(float(f), float(f + 1))


def localize_caption(
    s: SimilarityMatrix, n: int, init: Boundary, cfg: GenConfig, global_search: bool = False
) -> list[IterationRecord]:
    """Run all iterations for caption ``n`` and return the per-iteration trace."""
    tl = s.timeline
    window = tl.full if global_search else init.expand(cfg.window_margin, tl)
    trace = []
    for _ in range(cfg.iterations):
        window = _usable_window(window, tl)
        top = topk_local(s, n, window, cfg.top_k)
        center = medoid_center(top)
        std = boundary_std(top, center)
        b = tighten(center, std, cfg.alpha, top, tl)
        loss = caption_loss(s, n, top, b)
        trace.append(IterationRecord(b, loss, center, std, window))
        window = tl.full if global_search else b.expand(cfg.window_margin, tl)
    return trace


def select_min_loss(trace: list[IterationRecord]) -> IterationRecord:
    best = trace[0]
    for rec in trace[1:]:
        if rec.loss < best.loss:
            best = rec
    return best


def _generate(s: SimilarityMatrix, cfg: GenConfig, global_search: bool, jobs: int) -> BoundarySet:
    if s.n_captions > s.frame_count:
        raise ValueError(f"more captions ({s.n_captions}) than frames ({s.frame_count})")
    init = uniform_init(s.timeline, s.n_captions)

    def one(n: int) -> IterationRecord:
        return select_min_loss(localize_caption(s, n, init[n], cfg, global_search))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            picks = list(ex.map(one, range(s.n_captions)))
    else:
        picks = [one(n) for n in range(s.n_captions)]
    out = BoundarySet(tuple(r.boundary for r in picks), tuple(r.loss for r in picks))
    return resolve_overlaps(out) if cfg.resolve_overlaps else out


def generate(s: SimilarityMatrix, cfg: GenConfig | None = None, jobs: int = 1) -> BoundarySet:
    """Pseudo boundaries with soft time constraints (local search windows)."""
    return _generate(s, cfg or GenConfig(), False, jobs)


def generate_global(s: SimilarityMatrix, cfg: GenConfig | None = None, jobs: int = 1) -> BoundarySet:
    """Ablation arm: every iteration searches the whole video."""
    return _generate(s, cfg or GenConfig(), True, jobs)


def generate_uniform(s: SimilarityMatrix) -> BoundarySet:
    return uniform_init(s.timeline, s.n_captions)
