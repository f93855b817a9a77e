"""Localization metrics: precision / recall at IoU thresholds, F1, mean IoU."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .boundary_gen import GenConfig, generate, generate_global, generate_uniform
from .core import Boundary, BoundarySet, InvariantError, check_boundaries, iou
from .dropdtw import DropDtwConfig, dropdtw_boundaries
from .refine import DEFAULT_QUERIES, RefineConfig, hungarian, oracle_scorer, refine
from .simatrix import SimilarityMatrix

THRESHOLDS = (0.3, 0.5, 0.7, 0.9)


@dataclass
class EvalReport:
    per_threshold: dict[float, tuple[float, float]]
    avg_precision: float
    avg_recall: float
    f1: float
    mean_iou: float
    n_videos: int
    arm: str = ""
    failures: int = 0
    # video id -> error message for every video the arm failed on
    failed: dict[str, str] = field(default_factory=dict)
    # caption-text metrics computed elsewhere can be merged in here
    extra: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        d = asdict(self)
        d["per_threshold"] = {
            f"{t:g}": {"precision": p, "recall": r} for t, (p, r) in sorted(self.per_threshold.items())
        }
        return d


def iou_table(preds: Sequence[Boundary], gts: Sequence[Boundary]) -> np.ndarray:
    out = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            out[i, j] = iou(p, g)
    return out


def _one_to_one_hits(table: np.ndarray, tau: float) -> tuple[int, int]:
    if table.size == 0:
        return 0, 0
    transpose = table.shape[0] > table.shape[1]
    t = table.T if transpose else table
    assign = hungarian(-t)
    hits = sum(1 for u, j in enumerate(assign) if t[u, j] >= tau)
    return hits, hits


def pr_at_threshold(
    preds: Sequence[Boundary], gts: Sequence[Boundary], tau: float, one_to_one: bool = False
) -> tuple[float, float]:
    """(precision, recall) at IoU threshold ``tau``.

    Default rule: each side is matched to its best counterpart independently, so
    several predictions may hit the same ground-truth event.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    preds, gts = list(preds), list(gts)
    if not preds and not gts:
        return 1.0, 1.0
    if not preds or not gts:
        return 0.0, 0.0
    table = iou_table(preds, gts)
    if one_to_one:
        hit_p, hit_g = _one_to_one_hits(table, tau)
    else:
        hit_p = int(np.sum(table.max(axis=1) >= tau))
        hit_g = int(np.sum(table.max(axis=0) >= tau))
    return hit_p / len(preds), hit_g / len(gts)


def f1_score(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def evaluate(
    preds: Sequence[BoundarySet],
    gts: Sequence[BoundarySet],
    thresholds: Sequence[float] = THRESHOLDS,
    one_to_one: bool = False,
    arm: str = "",
) -> EvalReport:
    """Macro-average over videos of per-video, threshold-averaged P and R."""
    if len(preds) != len(gts):
        raise ValueError(f"{len(preds)} prediction sets for {len(gts)} ground-truth sets")
    per_t = {float(t): [0.0, 0.0] for t in thresholds}
    video_p, video_r, ious = [], [], []
    for pred, gt in zip(preds, gts):
        ps, rs = [], []
        for t in thresholds:
            p, r = pr_at_threshold(list(pred), list(gt), t, one_to_one)
            per_t[float(t)][0] += p
            per_t[float(t)][1] += r
            ps.append(p)
            rs.append(r)
        video_p.append(sum(ps) / len(ps))
        video_r.append(sum(rs) / len(rs))
        if len(gt) and len(pred):
            ious.extend(iou_table(list(pred), list(gt)).max(axis=0).tolist())
        else:
            ious.extend([0.0] * len(gt))
    nv = len(preds)
    if nv == 0:
        return EvalReport({float(t): (0.0, 0.0) for t in thresholds}, 0.0, 0.0, 0.0, 0.0, 0, arm)
    avg_p = sum(video_p) / nv
    avg_r = sum(video_r) / nv
    return EvalReport(
        per_threshold={t: (v[0] / nv, v[1] / nv) for t, v in per_t.items()},
        avg_precision=avg_p,
        avg_recall=avg_r,
        f1=f1_score(avg_p, avg_r),
        mean_iou=sum(ious) / len(ious) if ious else 0.0,
        n_videos=nv,
        arm=arm,
    )


def format_table(reports: Sequence[EvalReport]) -> str:
    head = f"{'arm':<14} {'videos':>6} {'fail':>4} {'Rec.':>7} {'Pre.':>7} {'F1':>7} {'mIoU':>7}"
    for t in THRESHOLDS:
        head += f" {'R@' + format(t, 'g'):>6} {'P@' + format(t, 'g'):>6}"
    lines = [head, "-" * len(head)]
    for rep in reports:
        row = (
            f"{rep.arm:<14} {rep.n_videos:>6d} {rep.failures:>4d} {100 * rep.avg_recall:>7.2f}"
            f" {100 * rep.avg_precision:>7.2f} {100 * rep.f1:>7.2f} {100 * rep.mean_iou:>7.2f}"
        )
        for t in THRESHOLDS:
            p, r = rep.per_threshold.get(t, (0.0, 0.0))
            row += f" {100 * r:>6.1f} {100 * p:>6.1f}"
        lines.append(row)
    return "\n".join(lines)


# -- benchmark ----------------------------------------------------------------

ARMS = ("uniform", "dropdtw", "dibs-global", "dibs", "dibs+refine")


@dataclass(frozen=True)
class BenchConfig:
    gen: GenConfig = field(default_factory=GenConfig)
    dtw: DropDtwConfig = field(default_factory=DropDtwConfig)
    refine: RefineConfig = field(default_factory=RefineConfig)
    n_queries: int = DEFAULT_QUERIES
    one_to_one: bool = False


def run_arm(arm: str, s: SimilarityMatrix, cfg: BenchConfig | None = None) -> BoundarySet:
    """Boundaries for one video under one method arm."""
    cfg = cfg or BenchConfig()
    if arm == "uniform":
        out = generate_uniform(s)
    elif arm == "dropdtw":
        out = dropdtw_boundaries(s, cfg.dtw)
    elif arm == "dibs-global":
        out = generate_global(s, cfg.gen)
    elif arm == "dibs":
        out = generate(s, cfg.gen)
    elif arm == "dibs+refine":
        scorer = oracle_scorer(s, cfg.n_queries, cfg.refine.seed)
        out = refine(generate(s, cfg.gen), scorer, cfg.refine, s.timeline)
    else:
        raise ValueError(f"unknown arm {arm!r}; choose from {', '.join(ARMS)}")
    check_boundaries(out, s.timeline)
    return out


def _run_video(args) -> list[BoundarySet | str]:
    arms, values, video_id, cfg = args
    s = SimilarityMatrix(values, video_id)
    out = []
    for arm in arms:
        try:
            out.append(run_arm(arm, s, cfg))
        except (ValueError, InvariantError) as exc:
            out.append(f"{type(exc).__name__}: {exc}")
    return out


def benchmark(
    corpus: Sequence[tuple[SimilarityMatrix, BoundarySet]],
    arms: Sequence[str] = ARMS,
    cfg: BenchConfig | None = None,
    jobs: int = 1,
) -> list[EvalReport]:
    """One report per arm over ``corpus``; failed videos are counted, not fatal."""
    if not corpus:
        raise ValueError("benchmark needs a non-empty corpus")
    for arm in arms:
        if arm not in ARMS:
            raise ValueError(f"unknown arm {arm!r}; choose from {', '.join(ARMS)}")
    cfg = cfg or BenchConfig()
    work = [(tuple(arms), s.values, s.video_id, cfg) for s, _ in corpus]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_video, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [_run_video(w) for w in work]
    reports = []
    for a, arm in enumerate(arms):
        preds, gts, failed = [], [], {}
        for (s, gt), res in zip(corpus, results):
            if isinstance(res[a], str):
                failed[s.video_id] = res[a]
            else:
                preds.append(res[a])
                gts.append(gt)
        rep = evaluate(preds, gts, one_to_one=cfg.one_to_one, arm=arm)
        rep.failures = len(failed)
        rep.failed = failed
        reports.append(rep)
    return reports
