"""Frame x caption similarity matrices: cosine construction, aggregation, synthesis."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Boundary, BoundarySet, Timeline, uniform_init

FRAME = "frame"
CAPTION = "caption"


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    vectors: np.ndarray
    kind: str
    model_id: str = ""

    def __post_init__(self) -> None:
        if self.kind not in (FRAME, CAPTION):
            raise ValueError(f"kind must be 'frame' or 'caption', got {self.kind!r}")
        vecs = np.asarray(self.vectors, dtype=np.float64)
        if vecs.ndim != 2 or vecs.shape[0] == 0 or vecs.shape[1] == 0:
            raise ValueError(f"embeddings must be a non-empty 2-D array, got shape {vecs.shape}")
        if not np.all(np.isfinite(vecs)):
            raise ValueError("embeddings contain non-finite values")
        norms = np.linalg.norm(vecs, axis=1)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ValueError(f"{self.kind} vector {int(zero[0])} has zero norm")
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Similarity of frame ``m`` (rows) to caption ``n`` (columns)."""

    values: np.ndarray
    video_id: str = ""

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape[0] < 1 or vals.shape[1] < 1:
            raise ValueError(f"similarity matrix must be 2-D and non-empty, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("similarity matrix contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def frame_count(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_captions(self) -> int:
        return int(self.values.shape[1])

    @property
    def timeline(self) -> Timeline:
        return Timeline(self.frame_count)

    @property
    def shape(self) -> tuple[int, int]:
        return self.frame_count, self.n_captions

    def column(self, n: int) -> np.ndarray:
        return self.values[:, n]


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine of a zero-norm vector is undefined")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def build_matrix(frames: EmbeddingSet, captions: EmbeddingSet, video_id: str = "") -> SimilarityMatrix:
    if frames.kind != FRAME:
        raise ValueError(f"first argument must hold frame embeddings, got kind={frames.kind!r}")
    if captions.kind != CAPTION:
        raise ValueError(f"second argument must hold caption embeddings, got kind={captions.kind!r}")
    if frames.dim != captions.dim:
        raise ValueError(f"embedding dims differ: frames D={frames.dim}, captions D={captions.dim}")
    f = frames.vectors / np.linalg.norm(frames.vectors, axis=1, keepdims=True)
    c = captions.vectors / np.linalg.norm(captions.vectors, axis=1, keepdims=True)
    return SimilarityMatrix(np.clip(f @ c.T, -1.0, 1.0), video_id=video_id)


def aggregate(matrices: Sequence[SimilarityMatrix]) -> SimilarityMatrix:
    """Element-wise mean of same-shaped matrices (multi-model averaging)."""
    if not matrices:
        raise ValueError("aggregate needs at least one matrix")
    shape = matrices[0].shape
    for i, s in enumerate(matrices):
        if s.shape != shape:
            raise ValueError(f"matrix {i} has shape {s.shape}, expected {shape}")
    if len(matrices) == 1:
        return matrices[0]
    # sorted summation keeps the result independent of input order
    stacked = np.sort(np.stack([s.values for s in matrices]), axis=0)
    return SimilarityMatrix(stacked.sum(axis=0) / len(matrices), video_id=matrices[0].video_id)


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic similarity matrix with known event boundaries.

    Event ``n`` lives in the n-th uniform slot of the video: its length is a seeded
    fraction in ``event_coverage`` of the slot length and its centre is shifted by
    up to ``center_jitter`` slot lengths, then events are clipped so they stay
    ordered and disjoint. Column profiles by ``shape``:

    - ``gaussian``: a bump of std ``peak_width`` at the event centre
    - ``plateau``: 1 inside the event, Gaussian shoulders of std ``peak_width``
    - ``block``: 1 inside the event, 0 elsewhere
    """

    frame_count: int = 200
    n_events: int = 6
    peak_width: float = 3.0
    distractor_peaks: int = 0
    noise_sigma: float = 0.0
    seed: int = 0
    shape: str = "gaussian"
    event_coverage: tuple[float, float] = (0.3, 0.8)
    center_jitter: float = 0.2
    peak_height: float | tuple[float, float] = 1.0
    distractor_height: float = 0.5

    def __post_init__(self) -> None:
        if not (1 <= self.n_events <= self.frame_count):
            raise ValueError(f"need frame_count >= n_events >= 1, got M={self.frame_count}, N={self.n_events}")
        if not self.peak_width > 0:
            raise ValueError(f"peak_width must be > 0, got {self.peak_width}")
        if self.distractor_peaks < 0:
            raise ValueError(f"distractor_peaks must be >= 0, got {self.distractor_peaks}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        lo, hi = self.event_coverage
        object.__setattr__(self, "event_coverage", (float(lo), float(hi)))
        if not 0 < lo <= hi <= 1:
            raise ValueError(f"event_coverage must satisfy 0 < lo <= hi <= 1, got {self.event_coverage}")
        if not 0 <= self.center_jitter <= 0.5:
            raise ValueError(f"center_jitter must be in [0, 0.5], got {self.center_jitter}")


SHAPES = ("gaussian", "plateau", "block")


def _synth_gt(cfg: SynthConfig, rng: np.random.Generator) -> BoundarySet:
    m, n = cfg.frame_count, cfg.n_events
    slot = m / n
    lo, hi = cfg.event_coverage
    length = np.maximum(1, np.round(slot * rng.uniform(lo, hi, size=n))).astype(int)
    shift = rng.uniform(-cfg.center_jitter, cfg.center_jitter, size=n) * slot
    out = []
    prev_end = 0
    for i in range(n):
        start = int(round(slot * (i + 0.5) + shift[i] - length[i] / 2))
        # clip to order: after the previous event, leaving one frame for each later one
        start = min(max(start, prev_end), m - (n - i))
        end = min(start + int(length[i]), m - (n - i - 1))
        end = max(end, start + 1)
        out.append(Boundary(float(start), float(end)))
        prev_end = end
    return BoundarySet(tuple(out))


def synth_matrix(cfg: SynthConfig) -> tuple[SimilarityMatrix, BoundarySet]:
    rng = np.random.default_rng(cfg.seed)
    gt = _synth_gt(cfg, rng)
    m, n = cfg.frame_count, cfg.n_events
    frames = np.arange(m, dtype=np.float64) + 0.5
    values = np.zeros((m, n))
    lo, hi = _height_range(cfg.peak_height)
    heights = rng.uniform(lo, hi, size=n) if hi > lo else np.full(n, lo)
    for j, b in enumerate(gt):
        height = heights[j]
        inside = (frames >= b.start) & (frames < b.end)
        if cfg.shape == "block":
            col = np.where(inside, height, 0.0)
        elif cfg.shape == "gaussian":
            col = height * np.exp(-0.5 * ((frames - b.center) / cfg.peak_width) ** 2)
        else:
            gap = np.maximum(np.maximum(b.start - frames, frames - b.end), 0.0)
            col = np.where(inside, height, height * np.exp(-0.5 * (gap / cfg.peak_width) ** 2))
        placed: list[float] = []
        for _ in range(cfg.distractor_peaks):
            pos = _distractor_position(frames, b, placed, cfg.peak_width, rng)
            placed.append(pos)
            bump = cfg.distractor_height * np.exp(-0.5 * ((frames - pos) / cfg.peak_width) ** 2)
            col = np.maximum(col, bump)
        values[:, j] = col
    if cfg.noise_sigma > 0:
        values = values + rng.normal(0.0, cfg.noise_sigma, size=values.shape)
    values = np.clip(values, 0.0, 1.0)
    return SimilarityMatrix(values, video_id=f"synth_{cfg.seed}"), gt


def _height_range(h) -> tuple[float, float]:
    if isinstance(h, (int, float)):
        return float(h), float(h)
    lo, hi = h
    return float(lo), float(hi)


def _distractor_position(
    frames: np.ndarray, gt: Boundary, placed: list[float], width: float, rng: np.random.Generator
) -> float:
    # distractors sit >= 3 widths from their own event and from other peaks, so
    # each stays a separate local maximum; constraints relax when M is too small
    outside = (frames < gt.start) | (frames >= gt.end)
    far = np.maximum(gt.start - frames, frames - gt.end) >= 3 * width
    for p in placed:
        far &= np.abs(frames - p) >= 3 * width
    for mask in (outside & far, outside, np.ones_like(outside)):
        cand = frames[mask]
        if cand.size:
            return float(cand[rng.integers(cand.size)])
    raise AssertionError("unreachable: frames is non-empty")


def uniform_boundaries(s: SimilarityMatrix) -> BoundarySet:
    return uniform_init(s.timeline, s.n_captions)


def local_maxima(column: np.ndarray) -> list[int]:
    """Indices of strict local maxima (plateaus count once, at their first index)."""
    col = np.asarray(column, dtype=np.float64)
    peaks = []
    i, m = 0, len(col)
    while i < m:
        j = i
        while j + 1 < m and col[j + 1] == col[i]:
            j += 1
        left = col[i - 1] if i > 0 else -math.inf
        right = col[j + 1] if j + 1 < m else -math.inf
        if col[i] > left and col[i] > right:
            peaks.append(i)
        i = j + 1
    return peaks
