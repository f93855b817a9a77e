"""Monotone caption-to-frame alignment with a per-frame drop option.

Every frame is either matched to a caption or dropped. Matched caption indices
must be non-decreasing along the frame axis; a caption may receive no frames.
The objective is ``sum over matched frames of (S[m, n] - drop_cost)``, so a frame
whose similarity is below the drop cost is never worth keeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Boundary, BoundarySet, Timeline
from .simatrix import SimilarityMatrix

DROP = -1
DEFAULT_PERCENTILE = 30.0


@dataclass(frozen=True)
class DropDtwConfig:
    drop_cost: float | None = None
    percentile: float | None = DEFAULT_PERCENTILE

    def __post_init__(self) -> None:
        if (self.drop_cost is None) == (self.percentile is None):
            raise ValueError("set exactly one of drop_cost / percentile")
        if self.percentile is not None and not 0.0 < self.percentile < 100.0:
            raise ValueError(f"percentile must be in (0, 100), got {self.percentile}")

    @classmethod
    def fixed(cls, drop_cost: float) -> DropDtwConfig:
        return cls(drop_cost=float(drop_cost), percentile=None)

    def resolve(self, s: SimilarityMatrix) -> float:
        if self.drop_cost is not None:
            return float(self.drop_cost)
        return percentile_drop_cost(s, self.percentile)


@dataclass(frozen=True)
class Alignment:
    """``assignment[m]`` is the caption index of frame ``m`` or ``DROP``."""

    assignment: tuple[int, ...]
    score: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignment", tuple(int(a) for a in self.assignment))
        last = -1
        for m, a in enumerate(self.assignment):
            if a == DROP:
                continue
            if a < last:
                raise ValueError(f"alignment not monotone at frame {m}: {a} after {last}")
            last = a


def percentile_drop_cost(s: SimilarityMatrix, p: float) -> float:
    if not 0.0 < p < 100.0:
        raise ValueError(f"percentile must be in (0, 100), got {p}")
    return float(np.percentile(s.values, p, method="linear"))


def alignment_score(s: SimilarityMatrix, assignment, drop_cost: float) -> float:
    vals = s.values
    return float(sum(vals[m, a] - drop_cost for m, a in enumerate(assignment) if a != DROP))


def drop_dtw_align(s: SimilarityMatrix, cfg: DropDtwConfig | None = None) -> Alignment:
    cfg = cfg or DropDtwConfig()
    d = cfg.resolve(s)
    gain = s.values - d
    m_count, n_count = s.shape

    # best[m, n]: best score over frames [0, m) with every matched caption <= n
    best = np.zeros((m_count + 1, n_count))
    for m in range(1, m_count + 1):
        row_prev = best[m - 1]
        g = gain[m - 1]
        acc = -np.inf
        for n in range(n_count):
            cand = max(row_prev[n], row_prev[n] + g[n])
            acc = max(acc, cand)
            best[m, n] = acc

    assignment = [DROP] * m_count
    n = n_count - 1
    for m in range(m_count, 0, -1):
        target = best[m, n]
        g = gain[m - 1]
        choice = DROP
        # prefer a match, and among matches the smallest caption index
        for k in range(n + 1):
            if best[m - 1, k] + g[k] == target:
                choice = k
                break
        if choice == DROP and best[m - 1, n] != target:
            raise AssertionError(f"drop-dtw traceback lost the optimum at frame {m - 1}")
        assignment[m - 1] = choice
        if choice != DROP:
            n = choice
    return Alignment(tuple(assignment), float(best[m_count, n_count - 1]))


def alignment_to_boundaries(a: Alignment, timeline: Timeline, n_captions: int) -> BoundarySet:
    """Matched frames of caption n become ``[min, max + 1)``.

    Captions without any matched frame get a zero-length boundary at the video
    midpoint and are flagged.
    """
    lo = [None] * n_captions
    hi = [None] * n_captions
    for m, c in enumerate(a.assignment):
        if c == DROP:
            continue
        if not 0 <= c < n_captions:
            raise ValueError(f"frame {m} assigned to caption {c}, but only {n_captions} captions")
        lo[c] = m if lo[c] is None else min(lo[c], m)
        hi[c] = m if hi[c] is None else max(hi[c], m)
    mid = timeline.frame_count / 2.0
    out, flags = [], []
    for n in range(n_captions):
        if lo[n] is None:
            out.append(Boundary(mid, mid))
            flags.append(True)
        else:
            out.append(Boundary(float(lo[n]), float(hi[n] + 1)))
            flags.append(False)
    return BoundarySet(tuple(out), flagged=tuple(flags))


def dropdtw_boundaries(s: SimilarityMatrix, cfg: DropDtwConfig | None = None) -> BoundarySet:
    return alignment_to_boundaries(drop_dtw_align(s, cfg), s.timeline, s.n_captions)
