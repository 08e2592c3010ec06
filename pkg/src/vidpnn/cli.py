"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or format error, 3 unsatisfiable
constraint.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as config_mod
from .dynamics import (
    FlowFormatError,
    dyn_pair,
    flow_magnitude,
    kmeans_quantize,
)
from .io import VideoFormatError, read_video, write_video
from .metrics import bench, coherence, diversity
from .nnf import set_threads
from .pipeline import (
    AnalogyInputs,
    UnsatisfiableConstraintError,
    analogy,
    generate,
    inpaint,
    retarget,
)
from .video import build_pyramid, dims

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_UNSAT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dims_arg(s: str) -> tuple[int, int, int]:
    parts = s.replace("x", ",").split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected T,H,W, got {s!r}")
    return tuple(int(p) for p in parts)


def _res_arg(s: str) -> tuple[int, int]:
    parts = s.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected HxW, got {s!r}")
    return int(parts[0]), int(parts[1])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--config", type=Path, help="key = value config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; repeatable")
    common.add_argument("--threads", type=int, help="cap on worker threads")
    common.add_argument("--out", type=Path, help="output path")

    p = _Parser(prog="vidpnn", description="Patch nearest-neighbour video synthesis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="sample new videos")
    g.add_argument("input")
    g.add_argument("--count", type=int, default=1, help="number of samples (seeds seed..seed+n-1)")

    a = sub.add_parser("analogy", parents=[common], help="content dynamics, style appearance")
    a.add_argument("content")
    a.add_argument("style")
    a.add_argument("--content-flo", nargs="+", help=".flo files for the content video")
    a.add_argument("--style-flo", nargs="+", help=".flo files for the style video")

    r = sub.add_parser("retarget", parents=[common], help="resynthesize at new dims")
    r.add_argument("input")
    r.add_argument("--size", type=_dims_arg, required=True, help="T,H,W")

    i = sub.add_parser("inpaint", parents=[common], help="fill a masked hole")
    i.add_argument("input")
    i.add_argument("mask", help="mask video; values above 0.5 mark the hole")

    f = sub.add_parser("flow", parents=[common], help="flow magnitude to .npy")
    f.add_argument("input")
    f.add_argument("--flo", nargs="+", help="use these .flo files instead of the estimator")

    q = sub.add_parser("quantize", parents=[common], help="quantized dynamic structure to .npy")
    q.add_argument("input")
    q.add_argument("--flo", nargs="+")

    m = sub.add_parser("metrics", parents=[common], help="coherence and diversity report")
    m.add_argument("source")
    m.add_argument("samples", nargs="+")

    b = sub.add_parser("bench", parents=[common], help="generation runtime vs resolution")
    b.add_argument("--res", type=_res_arg, action="append", default=[], help="HxW; repeatable")
    b.add_argument("--frames", type=int, default=13)

    y = sub.add_parser("pyramid", parents=[common], help="dump pyramid levels")
    y.add_argument("input")
    return p


def _emit(report: dict, out: Path | None = None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if out is not None:
        out.write_text(text + "\n")
    else:
        print(text)


def _require_out(args):
    if args.out is None:
        raise UsageError(f"{args.command} needs --out")
    return args.out


def _numbered(path: Path, i: int, n: int) -> Path:
    if n == 1:
        return path
    return path.with_name(f"{path.stem}_{i:03d}{path.suffix}")


def run(args) -> int:
    cfg = config_mod.load(args.config, args.set)
    if args.seed is not None:
        cfg = replace(cfg, generation=replace(cfg.generation, seed=args.seed))
    gen = cfg.generation
    set_threads(args.threads)
    flow_kw = {"window": cfg.flow_window, "max_disp": cfg.flow_max_disp}
    cmd = args.command
    t0 = time.perf_counter()
    report: dict = {"schema": 1, "command": cmd, "seed": gen.seed}

    if cmd == "generate":
        out = _require_out(args)
        x = read_video(args.input)
        for i in range(args.count):
            y = generate(x, replace(gen, seed=gen.seed + i))
            write_video(y, _numbered(out, i, args.count))
        report.update(dims=list(dims(y)), count=args.count)
    elif cmd == "analogy":
        out = _require_out(args)
        c, s = read_video(args.content), read_video(args.style)
        dc, ds, joint = dyn_pair(
            c, s, cfg.dyn_bins,
            (args.content_flo or "builtin", args.style_flo or "builtin"),
            seed=gen.seed, **flow_kw,
        )
        y = analogy(AnalogyInputs(c, s, dc, ds, cfg.dyn_weight), gen)
        write_video(y, out)
        report.update(dims=list(dims(y)), centroids=joint.centroids.tolist())
    elif cmd == "retarget":
        out = _require_out(args)
        y = retarget(read_video(args.input), args.size, gen)
        write_video(y, out)
        report.update(dims=list(dims(y)))
    elif cmd == "inpaint":
        out = _require_out(args)
        x = read_video(args.input)
        hole = read_video(args.mask).mean(axis=3) > 0.5
        y = inpaint(x, hole, gen)
        write_video(y, out)
        report.update(dims=list(dims(y)), hole_voxels=int(hole.sum()))
    elif cmd in ("flow", "quantize"):
        out = _require_out(args)
        x = read_video(args.input)
        mag = flow_magnitude(x, args.flo or "builtin", **({} if args.flo else flow_kw))
        if cmd == "flow":
            np.save(out, mag)
            report.update(dims=list(dims(mag)), max_magnitude=float(mag.max()))
        else:
            qd = kmeans_quantize(mag, cfg.dyn_bins, gen.seed)
            np.save(out, qd.values())
            report.update(dims=list(dims(mag)), centroids=qd.centroids.tolist())
    elif cmd == "metrics":
        src = read_video(args.source)
        samples = [read_video(p) for p in args.samples]
        t1 = time.perf_counter()
        coh = [coherence(s, src, gen.patch_shape, seed=gen.seed) for s in samples]
        report["wall_time_seconds"] = {"coherence": time.perf_counter() - t1}
        report.update(
            coherence=float(np.mean(coh)),
            coherence_per_sample=coh,
            diversity=diversity(samples) if len({dims(s) for s in samples}) == 1 else None,
            dims=[list(dims(s)) for s in samples],
        )
        report["wall_time_seconds"]["total"] = time.perf_counter() - t0
        _emit(report, args.out)
        return EXIT_OK
    elif cmd == "bench":
        if not args.res:
            raise UsageError("bench needs at least one --res HxW")
        report.update(bench(args.res, gen, frames=args.frames))
        _emit(report, args.out)
        return EXIT_OK
    elif cmd == "pyramid":
        out = _require_out(args)
        pyr = build_pyramid(read_video(args.input), gen.scale_factor, gen.min_dims)
        out.mkdir(parents=True, exist_ok=True)
        for n, level in enumerate(pyr.levels):
            write_video(level, out / f"level_{n:02d}.y4m")
        report.update(levels=[list(d) for d in pyr.level_dims])

    report["wall_time_seconds"] = {"total": time.perf_counter() - t0}
    _emit(report)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except (UsageError, config_mod.ConfigError) as e:
        print(f"vidpnn: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except UnsatisfiableConstraintError as e:
        print(f"vidpnn: unsatisfiable: {e}", file=sys.stderr)
        return EXIT_UNSAT
    except (VideoFormatError, FlowFormatError, FileNotFoundError, ValueError) as e:
        print(f"vidpnn: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
