"""Command-line interface.

    dibs sim     embeddings or matrices -> similarity matrix
    dibs synth   seeded synthetic corpus (matrices + ground truth)
    dibs gen     matrix -> pseudo boundaries (uniform | dropdtw | dibs | dibs-global)
    dibs refine  boundaries + matrix or scores file -> refined boundaries
    dibs eval    predictions vs ground truth -> report
    dibs bench   corpus -> comparison table over method arms
    dibs render  matrix + boundary files -> SVG
    dibs rerun   manifest -> the same outputs again

Exit codes: 0 ok, 2 usage or validation error, 3 data error, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import io as dio
from .boundary_gen import GenConfig
from .core import InvariantError, check_boundaries
from .dropdtw import DEFAULT_PERCENTILE, DropDtwConfig
from .eval import ARMS, BenchConfig, benchmark, evaluate, format_table, run_arm
from .refine import DEFAULT_QUERIES, RefineConfig, RefineTrace, oracle_scorer, refine
from .render import render_svg
from .simatrix import CAPTION, FRAME, SHAPES, SynthConfig, aggregate, build_matrix, synth_matrix

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("dibs")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 2, 3, 4
METHODS = ("uniform", "dropdtw", "dibs", "dibs-global")
# keys never recorded in the manifest's config snapshot
_NOT_CONFIG = {"func", "config", "verbose"}


class UsageError(ValueError):
    pass


# -- config ----------------------------------------------------------------------


def load_config(path) -> dict:
    """Flat ``key = value`` file (TOML syntax); keys are flag names, dashes or underscores."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise dio.DataError(f"{path}: no such file") from None
    except tomllib.TOMLDecodeError as exc:
        raise dio.DataError(f"{path}: {exc}") from None
    out = {}
    for key, val in raw.items():
        if isinstance(val, dict):
            raise dio.DataError(f"{path}: key {key!r}: tables are not supported, use flat key = value")
        out[key.replace("-", "_")] = val
    return out


def _apply_config(parser: argparse.ArgumentParser, sub: argparse.ArgumentParser, cfg: dict, path) -> None:
    known = {a.dest for a in sub._actions}
    for key in cfg:
        if key not in known or key in _NOT_CONFIG:
            raise UsageError(f"{path}: unknown key {key!r} for this command")
    sub.set_defaults(**cfg)


def gen_config(args) -> GenConfig:
    return GenConfig(
        top_k=args.top_k,
        iterations=args.iterations,
        alpha=args.alpha,
        window_margin=args.window_margin,
        resolve_overlaps=args.resolve_overlaps,
    )


def dtw_config(args) -> DropDtwConfig:
    if args.drop_cost is not None:
        return DropDtwConfig.fixed(args.drop_cost)
    return DropDtwConfig(percentile=args.drop_percentile)


def refine_config(args) -> RefineConfig:
    return RefineConfig(
        jitter_ratio_center=args.jitter_center,
        jitter_ratio_duration=args.jitter_duration,
        n_proposals=args.proposals,
        merge_k=args.merge_k,
        stages=args.stages,
        seed=args.seed,
    )


# -- manifests -------------------------------------------------------------------


def _snapshot(args) -> dict:
    snap = {}
    for k, v in sorted(vars(args).items()):
        if k in _NOT_CONFIG:
            continue
        snap[k] = list(v) if isinstance(v, tuple) else v
    return snap


def write_manifest(path: Path, args, argv, inputs, outputs, started: float, **extra) -> None:
    obj = {
        "command": args.command,
        "argv": list(argv),
        "config": _snapshot(args),
        "seed": getattr(args, "seed", None),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    obj.update(extra)
    dio.save_json(path, obj)


def _manifest_path(out: Path) -> Path:
    return out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")


# -- corpus helpers -----------------------------------------------------------------

_SKIP_SUFFIXES = ("manifest.json", ".matrix.json", ".scores.json", ".report.json")


def _matrix_files(d: Path) -> list[Path]:
    files = sorted(d.glob("*.matrix.json")) + sorted(d.glob("*.matrix.csv"))
    if not files:
        raise dio.DataError(f"{d}: no *.matrix.json or *.matrix.csv files")
    return files


def _boundary_files(d: Path) -> list[Path]:
    files = sorted(p for p in d.glob("*.json") if not p.name.endswith(_SKIP_SUFFIXES))
    if not files:
        raise dio.DataError(f"{d}: no boundary files")
    return files


def _load_boundary_dir(src: Path) -> dict:
    files = [src] if src.is_file() else _boundary_files(src)
    out = {}
    for f in files:
        vid, tl, bset = dio.load_boundaries(f)
        if vid in out:
            raise dio.DataError(f"{f}: duplicate video_id {vid!r} (also in {out[vid][0]})")
        out[vid] = (f, tl, bset)
    return out


def _load_matrix_dir(src: Path) -> dict:
    files = [src] if src.is_file() else _matrix_files(src)
    out = {}
    for f in files:
        s = dio.load_matrix(f)
        if s.video_id in out:
            raise dio.DataError(f"{f}: duplicate video_id {s.video_id!r}")
        out[s.video_id] = (f, s)
    return out


def _pair_ids(left: dict, right: dict, lname: str, rname: str) -> list[str]:
    only_l = sorted(set(left) - set(right))
    only_r = sorted(set(right) - set(left))
    if only_l or only_r:
        msg = []
        if only_l:
            msg.append(f"{lname} without {rname}: {', '.join(only_l)}")
        if only_r:
            msg.append(f"{rname} without {lname}: {', '.join(only_r)}")
        raise dio.DataError("unmatched video ids; " + "; ".join(msg))
    return sorted(left)


def _pool_map(fn, items, jobs: int) -> list:
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# -- commands --------------------------------------------------------------------


def cmd_sim(args, argv, started) -> int:
    out = Path(args.output)
    inputs = []
    if args.aggregate:
        if args.frames or args.captions:
            raise UsageError("--aggregate takes matrix files only; drop --frames/--captions")
        mats = [dio.load_matrix(p) for p in args.aggregate]
        inputs += args.aggregate
        try:
            s = aggregate(mats)
        except ValueError as exc:
            raise dio.DataError(str(exc)) from None
    else:
        if not args.frames or len(args.frames) != len(args.captions or []):
            raise UsageError("give one --captions file per --frames file (one pair per model)")
        mats = []
        for fpath, cpath in zip(args.frames, args.captions):
            f = dio.load_embeddings(fpath, FRAME, args.dim)
            c = dio.load_embeddings(cpath, CAPTION, args.dim)
            if f.dim != c.dim:
                raise dio.DataError(f"{fpath} has dimension {f.dim} but {cpath} has {c.dim}")
            mats.append(build_matrix(f, c))
            inputs += [fpath, cpath]
        try:
            s = aggregate(mats)
        except ValueError as exc:
            raise dio.DataError(str(exc)) from None
    video_id = args.video_id or out.name.split(".")[0]
    s = type(s)(s.values, video_id)
    dio.save_matrix(out, s)
    write_manifest(_manifest_path(out), args, argv, inputs, [out], started)
    print(f"wrote {out} ({s.frame_count} frames x {s.n_captions} captions)")
    return EXIT_OK


def _video_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, i]).generate_state(1, dtype=np.uint64)[0])


def synth_config(args, seed: int) -> SynthConfig:
    height = args.peak_height[0] if len(args.peak_height) == 1 else tuple(args.peak_height)
    return SynthConfig(
        frame_count=args.frames,
        n_events=args.events,
        peak_width=args.peak_width,
        distractor_peaks=args.distractors,
        noise_sigma=args.noise,
        seed=seed,
        shape=args.shape,
        event_coverage=tuple(args.coverage),
        center_jitter=args.center_jitter,
        peak_height=height,
        distractor_height=args.distractor_height,
    )


def cmd_synth(args, argv, started) -> int:
    if args.count < 1:
        raise UsageError(f"--count must be >= 1, got {args.count}")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(args.count):
        vid = f"{args.prefix}{i:05d}"
        s, gt = synth_matrix(synth_config(args, _video_seed(args.seed, i)))
        s = type(s)(s.values, vid)
        mpath, gpath = out / f"{vid}.matrix.json", out / f"{vid}.gt.json"
        dio.save_matrix(mpath, s)
        dio.save_boundaries(gpath, vid, s.frame_count, gt)
        written += [mpath, gpath]
    write_manifest(out / "manifest.json", args, argv, [], written, started)
    print(f"wrote {args.count} videos to {out}")
    return EXIT_OK


def _gen_one(item) -> tuple[str, dict]:
    path, method, gcfg, dcfg = item
    s = dio.load_matrix(path)
    cfg = BenchConfig(gen=gcfg, dtw=dcfg)
    bset = run_arm(method, s, cfg)
    return s.video_id, dio.boundaries_json(s.video_id, s.frame_count, bset)


def cmd_gen(args, argv, started) -> int:
    src, out = Path(args.input), Path(args.output)
    gcfg, dcfg = gen_config(args), dtw_config(args)
    if src.is_dir():
        files = _matrix_files(src)
        results = _pool_map(_gen_one, [(f, args.method, gcfg, dcfg) for f in files], args.jobs)
        out.mkdir(parents=True, exist_ok=True)
        outputs = []
        for vid, obj in results:
            dio.save_json(out / f"{vid}.json", obj)
            outputs.append(out / f"{vid}.json")
        write_manifest(out / "manifest.json", args, argv, files, outputs, started)
        print(f"wrote {len(outputs)} boundary files to {out}")
    else:
        vid, obj = _gen_one((src, args.method, gcfg, dcfg))
        dio.save_json(out, obj)
        write_manifest(_manifest_path(out), args, argv, [src], [out], started)
        print(f"wrote {out} ({len(obj['events'])} events)")
    return EXIT_OK


def _refine_one(item) -> tuple[str, dict]:
    bpath, mpath, spath, rcfg, n_queries, dump = item
    vid, tl, bset = dio.load_boundaries(bpath)
    start_stage = dio.boundary_stage(bpath)
    if spath is not None:
        # an external scores file always wins over the oracle scorer
        scorer = dio.load_scores(spath, tl)
    elif mpath is not None:
        s = dio.load_matrix(mpath)
        if s.frame_count != tl.frame_count or s.n_captions != len(bset):
            raise dio.DataError(
                f"{mpath}: matrix is {s.frame_count}x{s.n_captions} but {bpath} has "
                f"{tl.frame_count} frames and {len(bset)} events"
            )
        scorer = oracle_scorer(s, n_queries, rcfg.seed)
    else:
        raise UsageError("refine needs --matrix or --scores")
    trace = RefineTrace() if dump else None
    refined = refine(bset, scorer, rcfg, tl, start_stage=start_stage, trace=trace)
    check_boundaries(refined, tl)
    # a loss still describes a boundary that refinement left untouched
    old = bset.losses or [None] * len(bset)
    losses = [old[i] if refined[i] == bset[i] else None for i in range(len(bset))]
    obj = dio.boundaries_json(vid, tl.frame_count, refined, start_stage + rcfg.stages, losses)
    if dump:
        obj["proposals"] = trace.entries
    return vid, obj


def _by_id(d: Path | None, kind: str) -> dict:
    if d is None:
        return {}
    if kind == "matrix":
        return {vid: f for vid, (f, _) in _load_matrix_dir(d).items()}
    files = sorted(d.glob("*.scores.json"))
    return {f.name[: -len(".scores.json")]: f for f in files}


def cmd_refine(args, argv, started) -> int:
    src, out = Path(args.input), Path(args.output)
    rcfg = refine_config(args)
    mpath = Path(args.matrix) if args.matrix else None
    spath = Path(args.scores) if args.scores else None
    if mpath is None and spath is None:
        raise UsageError("refine needs --matrix or --scores")
    if src.is_dir():
        bounds = _load_boundary_dir(src)
        mats = _by_id(mpath, "matrix") if mpath and mpath.is_dir() else {}
        scores = _by_id(spath, "scores") if spath and spath.is_dir() else {}
        if mpath is not None and not mpath.is_dir() or spath is not None and not spath.is_dir():
            raise UsageError("with a boundary directory, --matrix/--scores must be directories too")
        items = []
        for vid in sorted(bounds):
            if vid not in scores and vid not in mats:
                raise dio.DataError(f"no matrix or scores file for video {vid!r}")
            items.append((bounds[vid][0], mats.get(vid), scores.get(vid), rcfg, args.queries, args.dump_proposals))
        results = _pool_map(_refine_one, items, args.jobs)
        out.mkdir(parents=True, exist_ok=True)
        outputs = []
        for vid, obj in results:
            dio.save_json(out / f"{vid}.json", obj)
            outputs.append(out / f"{vid}.json")
        inputs = [i[0] for i in items]
        write_manifest(out / "manifest.json", args, argv, inputs, outputs, started, stages=rcfg.stages)
        print(f"wrote {len(outputs)} refined boundary files to {out}")
    else:
        vid, obj = _refine_one((src, mpath, spath, rcfg, args.queries, args.dump_proposals))
        dio.save_json(out, obj)
        inputs = [p for p in (src, mpath, spath) if p is not None]
        write_manifest(_manifest_path(out), args, argv, inputs, [out], started, stages=rcfg.stages)
        print(f"wrote {out} (stage {obj['stage']})")
    return EXIT_OK


def _emit_reports(args, argv, started, reports, inputs) -> None:
    print(format_table(reports))
    if args.output:
        out = Path(args.output)
        obj = reports[0].to_json() if len(reports) == 1 and args.command == "eval" else {
            "reports": [r.to_json() for r in reports]
        }
        dio.save_json(out, obj)
        write_manifest(_manifest_path(out), args, argv, inputs, [out], started)


def cmd_eval(args, argv, started) -> int:
    preds = _load_boundary_dir(Path(args.pred))
    gts = _load_boundary_dir(Path(args.gt))
    ids = _pair_ids(preds, gts, "predictions", "ground truth")
    for vid in ids:
        if preds[vid][1] != gts[vid][1]:
            raise dio.DataError(
                f"video {vid!r}: prediction has {preds[vid][1].frame_count} frames, "
                f"ground truth {gts[vid][1].frame_count}"
            )
    rep = evaluate([preds[v][2] for v in ids], [gts[v][2] for v in ids], one_to_one=args.one_to_one, arm=args.arm)
    inputs = [preds[v][0] for v in ids] + [gts[v][0] for v in ids]
    _emit_reports(args, argv, started, [rep], inputs)
    return EXIT_OK


def parse_arms(text: str) -> list[str]:
    arms = [a.strip() for a in text.split(",") if a.strip()]
    bad = [a for a in arms if a not in ARMS]
    if bad or not arms:
        raise UsageError(f"unknown arm(s) {', '.join(bad) or '(none)'}; choose from {', '.join(ARMS)}")
    return arms


def cmd_bench(args, argv, started) -> int:
    src = Path(args.corpus)
    if not src.is_dir():
        raise UsageError(f"{src}: corpus must be a directory")
    mats = _load_matrix_dir(src)
    gts = {vid: v for vid, v in _load_boundary_dir(src).items()}
    ids = _pair_ids(mats, gts, "matrices", "ground truth")
    cfg = BenchConfig(gen_config(args), dtw_config(args), refine_config(args), args.queries, args.one_to_one)
    corpus = [(mats[v][1], gts[v][2]) for v in ids]
    reports = benchmark(corpus, parse_arms(args.arms), cfg, args.jobs)
    for rep in reports:
        for vid, msg in rep.failed.items():
            log.warning("%s failed on %s: %s", rep.arm, vid, msg)
    _emit_reports(args, argv, started, reports, [mats[v][0] for v in ids])
    return EXIT_OK


def cmd_render(args, argv, started) -> int:
    s = dio.load_matrix(args.matrix)
    layers = []
    for p in args.boundaries:
        vid, tl, bset = dio.load_boundaries(p)
        if tl.frame_count != s.frame_count or len(bset) not in (0, s.n_captions):
            raise dio.DataError(
                f"{p}: {tl.frame_count} frames / {len(bset)} events do not fit a "
                f"{s.frame_count}x{s.n_captions} matrix"
            )
        layers.append((Path(p).name, bset))
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_svg(s, layers, title=s.video_id))
    write_manifest(_manifest_path(out), args, argv, [args.matrix, *args.boundaries], [out], started)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_rerun(args, argv, started) -> int:
    m = dio.load_json(args.manifest)
    if not isinstance(m, dict) or "command" not in m or "config" not in m:
        raise dio.DataError(f"{args.manifest}: missing key 'command' or 'config'")
    cmd = m["command"]
    if cmd not in COMMANDS or cmd == "rerun":
        raise dio.DataError(f"{args.manifest}: key 'command' has unsupported value {cmd!r}")
    ns = argparse.Namespace(**m["config"])
    ns.command = cmd
    ns.verbose = args.verbose
    out_key = "output" if hasattr(ns, "output") else None
    if args.output is not None:
        if out_key is None:
            raise UsageError(f"command {cmd!r} has no output to redirect")
        ns.output = args.output
    return COMMANDS[cmd](ns, ["rerun", str(args.manifest)], started)


COMMANDS = {
    "sim": cmd_sim,
    "synth": cmd_synth,
    "gen": cmd_gen,
    "refine": cmd_refine,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "render": cmd_render,
    "rerun": cmd_rerun,
}


# -- parser -------------------------------------------------------------------------


def _gen_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("boundary generation")
    d = GenConfig()
    g.add_argument("--top-k", type=int, default=d.top_k, help="top similar frames per caption (default %(default)s)")
    g.add_argument("--iterations", type=int, default=d.iterations)
    g.add_argument("--alpha", type=float, default=d.alpha, help="coarse interval half-width in stds")
    g.add_argument("--window-margin", type=float, default=d.window_margin, help="search window padding, fraction of length")
    g.add_argument("--resolve-overlaps", action="store_true", help="clip overlapping neighbours at the overlap midpoint")
    g.add_argument("--drop-percentile", type=float, default=DEFAULT_PERCENTILE, help="Drop-DTW drop cost percentile")
    g.add_argument("--drop-cost", type=float, default=None, help="fixed Drop-DTW drop cost (overrides the percentile)")
    return p


def _refine_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("refinement")
    d = RefineConfig()
    g.add_argument("--jitter-center", type=float, default=d.jitter_ratio_center)
    g.add_argument("--jitter-duration", type=float, default=d.jitter_ratio_duration)
    g.add_argument("--proposals", type=int, default=d.n_proposals, help="proposal set size including the original")
    g.add_argument("--merge-k", type=int, default=d.merge_k, help="proposals merged per boundary")
    g.add_argument("--stages", type=int, default=d.stages)
    g.add_argument("--queries", type=int, default=DEFAULT_QUERIES, help="oracle scorer query count")
    return p


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for corpus commands")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="dibs", description="Pseudo event boundaries for dense video captioning.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common, genf, reff = _common(), _gen_flags(), _refine_flags()
    subs = {}

    p = sub.add_parser("sim", parents=[common], help="build a similarity matrix")
    p.add_argument("--frames", action="append", help="frame embeddings (JSON or CSV), one per model")
    p.add_argument("--captions", action="append", help="caption embeddings (JSON or CSV), one per model")
    p.add_argument("--aggregate", nargs="+", metavar="MATRIX", help="average existing matrix files")
    p.add_argument("--dim", type=int, default=None, help="expected embedding dimension")
    p.add_argument("--video-id", default=None)
    p.add_argument("-o", "--output", required=True)
    subs["sim"] = p

    p = sub.add_parser("synth", parents=[common], help="write a synthetic corpus")
    d = SynthConfig()
    p.add_argument("--frames", type=int, default=d.frame_count)
    p.add_argument("--events", type=int, default=d.n_events)
    p.add_argument("--peak-width", type=float, default=d.peak_width)
    p.add_argument("--distractors", type=int, default=d.distractor_peaks)
    p.add_argument("--noise", type=float, default=d.noise_sigma)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--shape", choices=SHAPES, default=d.shape)
    p.add_argument("--coverage", type=float, nargs=2, default=list(d.event_coverage), metavar=("LO", "HI"))
    p.add_argument("--center-jitter", type=float, default=d.center_jitter)
    p.add_argument("--peak-height", type=float, nargs="+", default=[1.0], metavar="H", help="height or LO HI range")
    p.add_argument("--distractor-height", type=float, default=d.distractor_height)
    p.add_argument("--prefix", default="vid")
    p.add_argument("-o", "--output", required=True, help="corpus directory")
    subs["synth"] = p

    p = sub.add_parser("gen", parents=[common, genf], help="generate pseudo boundaries")
    p.add_argument("input", help="matrix file or corpus directory")
    p.add_argument("--method", default="dibs", help=f"one of {', '.join(METHODS)}")
    p.add_argument("-o", "--output", required=True)
    subs["gen"] = p

    p = sub.add_parser("refine", parents=[common, reff], help="refine pseudo boundaries")
    p.add_argument("input", help="boundary file or directory")
    p.add_argument("--matrix", help="matrix file/directory for the oracle scorer")
    p.add_argument("--scores", help="external scores file/directory (wins over --matrix)")
    p.add_argument("--dump-proposals", action="store_true", help="include scored proposal sets in the output")
    p.add_argument("-o", "--output", required=True)
    subs["refine"] = p

    p = sub.add_parser("eval", parents=[common], help="score predictions against ground truth")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--one-to-one", action="store_true", help="strict one-to-one matching")
    p.add_argument("--arm", default="pred")
    p.add_argument("-o", "--output", default=None, help="report JSON path")
    subs["eval"] = p

    p = sub.add_parser("bench", parents=[common, genf, reff], help="compare method arms on a corpus")
    p.add_argument("corpus")
    p.add_argument("--arms", default=",".join(ARMS), help="comma-separated subset of " + ",".join(ARMS))
    p.add_argument("--one-to-one", action="store_true")
    p.add_argument("-o", "--output", default=None, help="report JSON path")
    subs["bench"] = p

    p = sub.add_parser("render", parents=[common], help="draw a matrix and boundaries as SVG")
    p.add_argument("matrix")
    p.add_argument("boundaries", nargs="*")
    p.add_argument("-o", "--output", required=True)
    subs["render"] = p

    p = sub.add_parser("rerun", parents=[common], help="reproduce outputs from a manifest")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", default=None, help="write to this path instead")
    subs["rerun"] = p
    return parser, subs


def parse_args(argv) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = load_config(args.config)
        _apply_config(parser, subs[args.command], cfg, args.config)
        # parse again so explicit flags still beat the file
        args = parser.parse_args(argv)
    if args.command == "gen" and args.method not in METHODS:
        parser.error(f"unknown method {args.method!r}; choose from {', '.join(METHODS)}")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.perf_counter()
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except dio.DataError as exc:
        print(f"dibs: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except UsageError as exc:
        print(f"dibs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args, argv, started)
    except dio.DataError as exc:
        print(f"dibs: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvariantError as exc:
        print(f"dibs: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"dibs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
