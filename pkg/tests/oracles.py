"""Slow, obviously-correct reference implementations used as test oracles."""

from __future__ import annotations

import functools
import itertools
import math

import numpy as np


def monotone_drop_alignments(m: int, n: int):
    """Every length-m assignment over {-1} u [0, n) whose matched entries never decrease."""

    def rec(prefix, low):
        if len(prefix) == m:
            yield tuple(prefix)
            return
        yield from rec(prefix + [-1], low)
        for c in range(low, n):
            yield from rec(prefix + [c], c)

    yield from rec([], 0)


def _product_check(m: int, n: int) -> int:
    # independent count by filtering the full product, for small sizes
    count = 0
    for a in itertools.product(range(-1, n), repeat=m):
        matched = [x for x in a if x >= 0]
        if all(x <= y for x, y in zip(matched, matched[1:])):
            count += 1
    return count


@functools.lru_cache(maxsize=None)
def _alignment_table(m: int, n: int) -> np.ndarray:
    return np.array(list(monotone_drop_alignments(m, n)), dtype=np.int64)


def brute_drop_dtw(values: np.ndarray, drop_cost: float) -> float:
    """Max over every monotone drop-alignment of sum(S - drop_cost) on matched frames."""
    m, n = values.shape
    table = _alignment_table(m, n)
    padded = np.hstack([values - drop_cost, np.zeros((m, 1))])  # column n scores a drop
    picks = np.where(table < 0, n, table)
    return float(padded[np.arange(m), picks].sum(axis=1).max())


def brute_assignment(cost: np.ndarray) -> tuple[float, tuple[int, ...]]:
    """(min total, lexicographically smallest optimal row -> column injection)."""
    rows, cols = cost.shape
    best, arg = math.inf, None
    for perm in itertools.permutations(range(cols), rows):
        total = sum(cost[i, perm[i]] for i in range(rows))
        if total < best - 1e-12:
            best, arg = total, perm
    return best, arg


def interval_iou(a, b) -> float:
    inter = max(0.0, min(a[1], b[1]) - max(a[0], b[0]))
    union = (a[1] - a[0]) + (b[1] - b[0]) - inter
    return inter / union if union > 0 else 0.0


def double_loop_evaluate(preds, gts, thresholds=(0.3, 0.5, 0.7, 0.9)):
    """Per video, per threshold, count hits with explicit loops; macro average."""
    vp, vr, ious = [], [], []
    for pred, gt in zip(preds, gts):
        ps, rs = [], []
        for t in thresholds:
            if not pred and not gt:
                ps.append(1.0)
                rs.append(1.0)
                continue
            if not pred or not gt:
                ps.append(0.0)
                rs.append(0.0)
                continue
            hit_p = 0
            for p in pred:
                best = 0.0
                for g in gt:
                    best = max(best, interval_iou(p, g))
                if best >= t:
                    hit_p += 1
            hit_g = 0
            for g in gt:
                best = 0.0
                for p in pred:
                    best = max(best, interval_iou(p, g))
                if best >= t:
                    hit_g += 1
            ps.append(hit_p / len(pred))
            rs.append(hit_g / len(gt))
        vp.append(sum(ps) / len(ps))
        vr.append(sum(rs) / len(rs))
        for g in gt:
            best = 0.0
            for p in pred:
                best = max(best, interval_iou(p, g))
            ious.append(best)
    p = sum(vp) / len(vp)
    r = sum(vr) / len(vr)
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f1, (sum(ious) / len(ious) if ious else 0.0)


def brute_medoid(positions) -> int:
    best_total, best = math.inf, None
    for c in positions:
        total = 0
        for q in positions:
            total += abs(q - c)
        if total < best_total or (total == best_total and c < best):
            best_total, best = total, c
    return best


def direct_std(positions, center) -> float:
    acc = 0.0
    for p in positions:
        acc += (p - center) ** 2
    return math.sqrt(acc / len(positions))
