"""Domain types and 1-D interval arithmetic.

Boundaries live on a continuous frame axis and are half-open: ``[start, end)``.
Integer frame ``f`` occupies ``[f, f + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class InvariantError(AssertionError):
    """An internal invariant was violated (a bug, not bad input)."""


@dataclass(frozen=True)
class Timeline:
    frame_count: int

    def __post_init__(self) -> None:
        if int(self.frame_count) != self.frame_count or self.frame_count < 1:
            raise ValueError(f"frame_count must be a positive integer, got {self.frame_count!r}")
        object.__setattr__(self, "frame_count", int(self.frame_count))

    def clip(self, start: float, end: float) -> Boundary:
        """Clamp ``[start, end)`` into ``[0, frame_count]``, keeping start <= end."""
        m = float(self.frame_count)
        s = min(max(float(start), 0.0), m)
        e = min(max(float(end), 0.0), m)
        if e < s:
            s = e = 0.5 * (s + e)
        return Boundary(s, e)

    @property
    def full(self) -> Boundary:
        return Boundary(0.0, float(self.frame_count))


@dataclass(frozen=True)
class Boundary:
    start: float
    end: float

    def __post_init__(self) -> None:
        s, e = float(self.start), float(self.end)
        if not (math.isfinite(s) and math.isfinite(e)):
            raise ValueError(f"boundary endpoints must be finite, got [{s}, {e})")
        if s < 0.0:
            raise ValueError(f"boundary start must be >= 0, got {s}")
        if e < s:
            raise ValueError(f"boundary end ({e}) < start ({s})")
        object.__setattr__(self, "start", s)
        object.__setattr__(self, "end", e)

    @classmethod
    def from_center(cls, center: float, duration: float) -> Boundary:
        half = 0.5 * duration
        return cls(center - half, center + half)

    @property
    def center(self) -> float:
        return 0.5 * (self.start + self.end)

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def degenerate(self) -> bool:
        return self.end == self.start

    def within(self, timeline: Timeline) -> bool:
        return 0.0 <= self.start <= self.end <= timeline.frame_count

    def expand(self, margin: float, timeline: Timeline) -> Boundary:
        """Grow by ``margin * duration`` on both sides, clipped to the timeline."""
        if math.isinf(margin):
            return timeline.full
        pad = margin * self.duration
        return timeline.clip(self.start - pad, self.end + pad)

    def as_list(self) -> list[float]:
        return [self.start, self.end]


@dataclass(frozen=True)
class BoundarySet:
    """Ordered boundaries, one per caption.

    ``flagged[n]`` marks boundaries produced by a fallback rule (e.g. a caption that
    matched no frame, or a merge with all-zero weights).
    """

    boundaries: tuple[Boundary, ...]
    losses: tuple[float, ...] | None = None
    flagged: tuple[bool, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        n = len(self.boundaries)
        if self.losses is not None:
            object.__setattr__(self, "losses", tuple(float(x) for x in self.losses))
            if len(self.losses) != n:
                raise ValueError(f"{len(self.losses)} losses for {n} boundaries")
        flagged = tuple(bool(x) for x in self.flagged) or (False,) * n
        if len(flagged) != n:
            raise ValueError(f"{len(flagged)} flags for {n} boundaries")
        object.__setattr__(self, "flagged", flagged)

    def __len__(self) -> int:
        return len(self.boundaries)

    def __iter__(self):
        return iter(self.boundaries)

    def __getitem__(self, i: int) -> Boundary:
        return self.boundaries[i]

    def within(self, timeline: Timeline) -> bool:
        return all(b.within(timeline) for b in self.boundaries)

    def total_loss(self) -> float | None:
        return None if self.losses is None else float(sum(self.losses))


def iou(a: Boundary, b: Boundary) -> float:
    inter = max(0.0, min(a.end, b.end) - max(a.start, b.start))
    union = a.duration + b.duration - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def giou(a: Boundary, b: Boundary) -> float:
    """Generalized IoU in [-1, 1]; 0 when the enclosing hull has zero length."""
    hull = max(a.end, b.end) - min(a.start, b.start)
    if hull <= 0.0:
        return 0.0
    inter = max(0.0, min(a.end, b.end) - max(a.start, b.start))
    union = a.duration + b.duration - inter
    base = inter / union if union > 0.0 else 0.0
    return base - (hull - union) / hull


def uniform_init(timeline: Timeline, n_events: int) -> BoundarySet:
    """Split ``[0, M)`` into ``n_events`` contiguous equal segments."""
    if int(n_events) != n_events or n_events < 1:
        raise ValueError(f"n_events must be a positive integer, got {n_events!r}")
    m = timeline.frame_count
    n = int(n_events)
    # cut points computed from integer ratios so the last end is exactly M
    cuts = [m * i / n for i in range(n + 1)]
    return BoundarySet(tuple(Boundary(cuts[i], cuts[i + 1]) for i in range(n)))


def resolve_overlaps(bset: BoundarySet) -> BoundarySet:
    """Clip overlaps between consecutive boundaries at the midpoint of the overlap.

    Boundaries are processed in caption order; only neighbours are compared.
    """
    out = list(bset.boundaries)
    for i in range(len(out) - 1):
        a, b = out[i], out[i + 1]
        if a.end > b.start and a.start <= b.start:
            mid = 0.5 * (a.end + b.start)
            mid = min(max(mid, a.start), b.end)
            out[i] = Boundary(a.start, mid)
            out[i + 1] = Boundary(mid, max(mid, b.end))
    return BoundarySet(tuple(out), bset.losses, bset.flagged)


def check_boundaries(bset: Iterable[Boundary], timeline: Timeline) -> None:
    for i, b in enumerate(bset):
        if not b.within(timeline):
            raise InvariantError(f"boundary {i} [{b.start}, {b.end}) outside [0, {timeline.frame_count})")


def mean(values: Sequence[float]) -> float:
    return float(sum(values) / len(values)) if values else 0.0
