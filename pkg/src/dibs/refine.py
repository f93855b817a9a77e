"""Online pseudo boundary refinement.

Each boundary is jittered into a proposal set, every proposal is linked to one
query of a set-prediction model by bipartite matching on GIoU, the linked
queries' heads score the proposals, and the top-K proposals are averaged with
their scores as weights. The model heads are abstracted by :class:`Scorer`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .core import Boundary, BoundarySet, Timeline, uniform_init
from .simatrix import SimilarityMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RefineConfig:
    jitter_ratio_center: float = 0.2
    jitter_ratio_duration: float = 0.2
    n_proposals: int = 16
    merge_k: int = 4
    stages: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.jitter_ratio_center < 0 or self.jitter_ratio_duration < 0:
            raise ValueError("jitter ratios must be >= 0")
        if self.n_proposals < 1:
            raise ValueError(f"n_proposals must be >= 1, got {self.n_proposals}")
        if not 1 <= self.merge_k <= self.n_proposals:
            raise ValueError(f"merge_k must be in [1, n_proposals={self.n_proposals}], got {self.merge_k}")
        if self.stages < 1:
            raise ValueError(f"stages must be >= 1, got {self.stages}")


# best merge count per dataset family, from the merge-count ablation
MERGE_K_BROAD_EVENTS = 4
MERGE_K_SHORT_EVENTS = 5
MERGE_K_CHOICES = (3, 4, 5)


@dataclass(frozen=True)
class Query:
    predicted_boundary: Boundary
    id: int


class Scorer(Protocol):
    def queries(self) -> list[Query]: ...

    def event_logit(self, query: Query) -> float: ...

    def caption_logit(self, query: Query, caption: int) -> float: ...


@dataclass
class ProposalSet:
    proposals: list[Boundary]
    linked_queries: list[Query]
    event_scores: np.ndarray
    caption_scores: np.ndarray
    combined: np.ndarray

    def to_json(self) -> list[dict]:
        return [
            {
                "start": b.start,
                "end": b.end,
                "query": q.id,
                "event_score": float(pe),
                "caption_score": float(pc),
                "score": float(p),
            }
            for b, q, pe, pc, p in zip(
                self.proposals, self.linked_queries, self.event_scores, self.caption_scores, self.combined
            )
        ]


# -- proposals ---------------------------------------------------------------


def _clip_min_width(start: float, end: float, min_width: float, timeline: Timeline) -> Boundary:
    m = float(timeline.frame_count)
    s, e = max(start, 0.0), min(end, m)
    min_width = min(min_width, m)
    if e - s < min_width:
        c = min(max(0.5 * (start + end), 0.5 * min_width), m - 0.5 * min_width)
        s, e = c - 0.5 * min_width, c + 0.5 * min_width
    return timeline.clip(s, e)


def jitter(b: Boundary, cfg: RefineConfig, timeline: Timeline, rng: np.random.Generator | None = None) -> list[Boundary]:
    """``n_proposals`` boundaries; index 0 is ``b`` itself."""
    if b.degenerate:
        raise ValueError(f"cannot jitter a zero-length boundary at {b.start}")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    u = cfg.n_proposals - 1
    dt = rng.uniform(-cfg.jitter_ratio_center, cfg.jitter_ratio_center, size=u)
    dd = rng.uniform(-cfg.jitter_ratio_duration, cfg.jitter_ratio_duration, size=u)
    t, d = b.center, b.duration
    out = [b]
    for i in range(u):
        if dt[i] == 0.0 and dd[i] == 0.0:
            out.append(b)
            continue
        c = t + dt[i] * d
        w = d * (1.0 + dd[i])
        out.append(_clip_min_width(c - 0.5 * w, c + 0.5 * w, min(1.0, w), timeline))
    return out


# -- assignment --------------------------------------------------------------


def _solve(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Shortest augmenting path Hungarian method, ``n_rows <= n_cols``.

    Returns (row -> column assignment, column potentials). Row potentials are
    implied. Potentials satisfy ``u[i] + v[j] <= cost[i, j]`` with equality on
    assigned pairs, and ``v[j] == 0`` for every unassigned column.
    """
    n, m = cost.shape
    inf = math.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.int64)  # p[j]: row (1-based) matched to column j
    way = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            upd = free & (cur < minv[1:])
            minv[1:][upd] = cur[upd]
            way[1:][upd] = j0
            cand = np.where(free, minv[1:], inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            used_idx = np.flatnonzero(used)
            u[p[used_idx]] += delta
            v[used_idx] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = np.zeros(n, dtype=np.int64)
    for j in range(1, m + 1):
        if p[j]:
            row_to_col[p[j] - 1] = j - 1
    reduced = cost - u[1:, None] - v[None, 1:]
    return row_to_col, reduced, v[1:]


def hungarian(cost) -> list[int]:
    """Minimum-cost assignment of every row to a distinct column.

    Among optimal assignments the lexicographically smallest row -> column
    vector is returned. Requires ``n_rows <= n_cols``.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError(f"cost must be 2-D, got shape {c.shape}")
    rows, cols = c.shape
    if rows > cols:
        raise ValueError(f"need at least as many columns as rows, got {rows}x{cols}")
    if rows == 0:
        return []
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix contains non-finite values")
    match, reduced, v = _solve(c)
    # optimal assignments are exactly the row-covering matchings on tight edges
    # that also cover every column with a negative potential
    tol = 1e-9 * max(1.0, float(np.abs(c).max()))
    tight = np.abs(reduced) <= tol
    may_idle = v >= -tol
    match_col = np.full(cols, _IDLE, dtype=np.int64)
    match_col[match] = np.arange(rows)
    fixed = np.zeros(rows, dtype=bool)

    for r in range(rows):
        for j in np.flatnonzero(tight[r]):
            old = int(match[r])
            if old == j:
                break
            holder = int(match_col[j])
            if holder != _IDLE and fixed[holder]:
                continue
            path = _alternating_path(holder, old, tight, may_idle, match, match_col, fixed, r)
            if path is None:
                continue
            match_col[old] = _IDLE
            for node, col in path:
                match_col[col] = node
                if node != _IDLE:
                    match[node] = col
            match[r] = j
            match_col[j] = r
            break
        fixed[r] = True
    return [int(x) for x in match]


# idle columns behave like zero-cost dummy rows; all dummies are interchangeable,
# so the path search treats them as one node
_IDLE = -1


def _alternating_path(start, target_col, tight, may_idle, match, match_col, fixed, skip_row):
    """BFS for a re-assignment moving ``start`` off its column and ending at ``target_col``.

    Nodes are real rows or the idle pool. Returns [(node, new column), ...] or None.
    """
    parent = {start: None}
    via = {}
    queue = [start]
    head = 0
    while head < len(queue):
        node = queue[head]
        head += 1
        cols = np.flatnonzero(may_idle) if node == _IDLE else np.flatnonzero(tight[node])
        for col in cols:
            if node != _IDLE and col == match[node]:
                continue
            if col == target_col:
                steps = [(node, int(col))]
                while parent[node] is not None:
                    prev = parent[node]
                    steps.append((prev, via[node]))
                    node = prev
                return steps
            nxt = int(match_col[col])
            if nxt == node or nxt == skip_row or nxt in parent or (nxt != _IDLE and fixed[nxt]):
                continue
            parent[nxt] = node
            via[nxt] = int(col)
            queue.append(nxt)
    return None


# -- linking, scoring, merging -------------------------------------------------


def link_queries(proposals: Sequence[Boundary], scorer: Scorer) -> list[Query]:
    queries = scorer.queries()
    if len(queries) < len(proposals):
        raise ValueError(f"{len(proposals)} proposals but only {len(queries)} queries")
    cost = -giou_matrix(proposals, [q.predicted_boundary for q in queries])
    return [queries[i] for i in hungarian(cost)]


def giou_matrix(a: Sequence[Boundary], b: Sequence[Boundary]) -> np.ndarray:
    """Pairwise :func:`dibs.core.giou`, vectorised."""
    s1 = np.array([x.start for x in a])[:, None]
    e1 = np.array([x.end for x in a])[:, None]
    s2 = np.array([x.start for x in b])[None, :]
    e2 = np.array([x.end for x in b])[None, :]
    inter = np.maximum(0.0, np.minimum(e1, e2) - np.maximum(s1, s2))
    union = (e1 - s1) + (e2 - s2) - inter
    hull = np.maximum(e1, e2) - np.minimum(s1, s2)
    with np.errstate(divide="ignore", invalid="ignore"):
        base = np.where(union > 0, inter / union, 0.0)
        out = np.where(hull > 0, base - (hull - union) / hull, 0.0)
    return out


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(x - x.max())
    return e / e.sum()


def score_proposals(
    proposals: Sequence[Boundary], linked: Sequence[Query], scorer: Scorer, caption: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(proposals) != len(linked):
        raise ValueError(f"{len(proposals)} proposals but {len(linked)} linked queries")
    pe = sigmoid(np.array([scorer.event_logit(q) for q in linked]))
    pc = softmax(np.array([scorer.caption_logit(q, caption) for q in linked]))
    return pe, pc, pe + pc


def _merge(proposals: Sequence[Boundary], p: Sequence[float], k: int) -> tuple[Boundary, bool]:
    p = np.asarray(p, dtype=np.float64)
    if not 1 <= k <= len(proposals):
        raise ValueError(f"merge_k must be in [1, {len(proposals)}], got {k}")
    if np.any(p < 0):
        raise ValueError("proposal scores must be non-negative")
    top = np.argsort(-p, kind="stable")[:k]
    w = p[top]
    total = w.sum()
    if total <= 0:
        return proposals[int(top[0])], True
    starts = np.array([proposals[i].start for i in top])
    ends = np.array([proposals[i].end for i in top])
    s = float(np.dot(w, starts) / total)
    e = float(np.dot(w, ends) / total)
    # rounding can break hull containment by an ulp
    s = min(max(s, starts.min()), starts.max())
    e = min(max(e, ends.min()), ends.max())
    return Boundary(s, max(s, e)), False


def merge_topk(proposals: Sequence[Boundary], p: Sequence[float], merge_k: int) -> Boundary:
    """Score-weighted average of the ``merge_k`` best proposals."""
    b, fallback = _merge(proposals, p, merge_k)
    if fallback:
        log.warning("all top-%d proposal scores are zero; keeping the best-ranked proposal", merge_k)
    return b


def refine_one(
    b: Boundary,
    caption: int,
    scorer: Scorer,
    cfg: RefineConfig,
    timeline: Timeline,
    rng: np.random.Generator,
) -> tuple[Boundary, bool, ProposalSet]:
    proposals = jitter(b, cfg, timeline, rng)
    linked = link_queries(proposals, scorer)
    pe, pc, p = score_proposals(proposals, linked, scorer, caption)
    merged, fallback = _merge(proposals, p, cfg.merge_k)
    return merged, fallback, ProposalSet(proposals, linked, pe, pc, p)


def stage_rng(seed: int, stage: int, caption: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, stage, caption])


@dataclass
class RefineTrace:
    """Per (stage, caption) proposal sets, filled when debugging is requested."""

    entries: list[dict] = field(default_factory=list)


def refine(
    boundaries: BoundarySet,
    scorer: Scorer,
    cfg: RefineConfig | None = None,
    timeline: Timeline | None = None,
    start_stage: int = 0,
    trace: RefineTrace | None = None,
) -> BoundarySet:
    """Run ``cfg.stages`` refinement stages; stage ``s`` feeds stage ``s + 1``.

    Random streams are keyed by (seed, absolute stage index, caption), so running
    stages [0, a) and then [a, a + b) equals running [0, a + b) in one call.
    """
    cfg = cfg or RefineConfig()
    if timeline is None:
        timeline = getattr(scorer, "timeline", None)
        if timeline is None:
            raise ValueError("timeline is required when the scorer does not carry one")
    current = list(boundaries.boundaries)
    flagged = list(boundaries.flagged)
    for stage in range(start_stage, start_stage + cfg.stages):
        for n, b in enumerate(current):
            try:
                merged, fallback, props = refine_one(b, n, scorer, cfg, timeline, stage_rng(cfg.seed, stage, n))
            except ValueError as exc:
                raise ValueError(f"stage {stage}, caption {n}: {exc}") from exc
            current[n] = merged
            flagged[n] = flagged[n] or fallback
            if trace is not None:
                trace.entries.append({"stage": stage, "caption": n, "proposals": props.to_json()})
    return BoundarySet(tuple(current), None, tuple(flagged))


# -- scorers -------------------------------------------------------------------


def _mean_inside(cumsum: np.ndarray, b: Boundary, m: int) -> np.ndarray:
    lo = max(0, math.ceil(b.start))
    hi = min(m, math.ceil(b.end))
    if hi <= lo:
        lo = min(int(math.floor(b.center)), m - 1)
        hi = lo + 1
    return (cumsum[hi] - cumsum[lo]) / (hi - lo)


DEFAULT_QUERIES = 200


class OracleScorer:
    """Stand-in for trained prediction heads, driven by a similarity matrix.

    Queries predict seeded jitters of the uniform slots. The caption logit of a
    query is the mean similarity to that caption inside its predicted boundary;
    the event logit is the logit of the same mean for the caption whose slot
    centre is nearest to the query.
    """

    def __init__(
        self,
        s: SimilarityMatrix,
        n_queries: int = DEFAULT_QUERIES,
        seed: int = 0,
        center_jitter: float = 0.5,
        width_range: tuple[float, float] = (0.2, 1.2),
        eps: float = 1e-4,
    ):
        if n_queries < 1:
            raise ValueError(f"n_queries must be >= 1, got {n_queries}")
        self.timeline = s.timeline
        m, n = s.shape
        rng = np.random.default_rng(seed)
        slots = uniform_init(self.timeline, n)
        lo, hi = math.log(width_range[0]), math.log(width_range[1])
        self._queries = []
        for i in range(n_queries):
            slot = slots[i % n]
            # the first N queries predict the uniform slots themselves
            if i < n:
                b = slot
            else:
                c = slot.center + rng.uniform(-center_jitter, center_jitter) * slot.duration
                w = slot.duration * math.exp(rng.uniform(lo, hi))
                b = _clip_min_width(c - 0.5 * w, c + 0.5 * w, 1.0, self.timeline)
            self._queries.append(Query(b, i))
        cumsum = np.vstack([np.zeros((1, n)), np.cumsum(s.values, axis=0)])
        self._means = np.array([_mean_inside(cumsum, q.predicted_boundary, m) for q in self._queries])
        centers = np.array([sl.center for sl in slots])
        self._nearest = [int(np.argmin(np.abs(centers - q.predicted_boundary.center))) for q in self._queries]
        self._eps = eps

    def queries(self) -> list[Query]:
        return list(self._queries)

    def event_logit(self, query: Query) -> float:
        x = float(np.clip(self._means[query.id, self._nearest[query.id]], self._eps, 1 - self._eps))
        return math.log(x / (1 - x))

    def caption_logit(self, query: Query, caption: int) -> float:
        return float(self._means[query.id, caption])


def oracle_scorer(s: SimilarityMatrix, n_queries: int = DEFAULT_QUERIES, seed: int = 0) -> OracleScorer:
    return OracleScorer(s, n_queries, seed)


class TableScorer:
    """Scorer backed by externally computed logits (e.g. a trained model's heads)."""

    def __init__(self, boundaries: Sequence[Boundary], event_logits: Sequence[float], caption_logits, timeline: Timeline | None = None):
        if not (len(boundaries) == len(event_logits) == len(caption_logits)):
            raise ValueError("queries, event logits and caption logits differ in length")
        self.timeline = timeline
        self._queries = [Query(b, i) for i, b in enumerate(boundaries)]
        self._event = [float(x) for x in event_logits]
        self._caption = [list(map(float, row)) for row in caption_logits]

    def queries(self) -> list[Query]:
        return list(self._queries)

    def event_logit(self, query: Query) -> float:
        return self._event[query.id]

    def caption_logit(self, query: Query, caption: int) -> float:
        row = self._caption[query.id]
        if not 0 <= caption < len(row):
            raise ValueError(f"query {query.id} has no logit for caption {caption}")
        return row[caption]
