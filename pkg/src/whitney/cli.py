"""Command line: ``whitney <command> <scene.json> [options]``.

Every check prints one JSON report per line.  ``--figures DIR`` also
draws an SVG per report into DIR.  The exit status is 0 exactly when
every report is ok.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .errors import WhitneyError
from .groupring import format_ring
from .harness import (batch, bundle_terms, classical_report, epsilon_check, pushoff_report, scan_T,
                      verify)
from .invariants import based_bundle, free_bundle
from .report import VerificationReport
from .scene import Scene, golden_names, load_scene

log = logging.getLogger("whitney")


def parse_floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("durations must be positive")
    return vals


def parse_seeds(text: str) -> list[int]:
    """``1..100`` (inclusive), ``3,7,9`` or a mix such as ``1..5,9``."""
    out = []
    try:
        for part in text.split(","):
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            elif part.strip():
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


class Sink:
    """Writes report lines and keeps score."""

    def __init__(self, stream, figures: Path | None = None):
        self.stream = stream
        self.figures = figures
        self.count = 0
        self.bad = 0

    def emit(self, rep: VerificationReport, scene: Scene | None = None, bundle=None):
        if self.figures is not None and scene is not None:
            name = f"{rep.scene or 'scene'}-{rep.kind}" + (f"-T{rep.T:g}" if rep.T else "") + ".svg"
            try:
                path = draw(scene, self.figures / name, rep.T, bundle, rep)
                rep.extra = {**rep.extra, "figure": str(path)}
            except (WhitneyError, ValueError) as e:
                log.warning("no figure for %s: %s", rep.scene, e)
        self.stream.write(rep.to_json() + "\n")
        self.stream.flush()
        self.count += 1
        self.bad += not rep.ok


def draw(scene: Scene, out: Path, T=None, bundle=None, report=None) -> Path:
    from .plotting import render  # matplotlib is only imported when drawing

    return render(scene, out, T, bundle=bundle, report=report)


def _scene(args) -> Scene:
    scene = load_scene(args.scene)
    changes = {}
    if args.samples:
        changes["samples"] = args.samples
    if args.rk4_step:
        changes["rk4_step"] = args.rk4_step
    return scene.with_(**changes) if changes else scene


def _bundle_for(scene: Scene, T):
    """Invariants for figure captions; None when the shift is not generic."""
    if T is None:
        return None
    c = scene.sample()
    s = scene.resolved_surface(c)
    fn = based_bundle if scene.based else free_bundle
    try:
        return fn(c, scene.field, s, T, scene.step(T), scene.tol())
    except (WhitneyError, ValueError):
        return None


def cmd_verify(args, sink: Sink, based: bool):
    scene = _scene(args)
    for rep in verify(scene, based, args.t, nudge=not args.no_nudge):
        sink.emit(rep, scene.with_(based=based), _bundle_for(scene.with_(based=based), rep.T) if sink.figures else None)
    if args.epsilon:
        for eps in args.epsilon:
            sink.emit(epsilon_check(scene, eps))


def cmd_pushoff(args, sink: Sink):
    scene = _scene(args)
    rep = pushoff_report(scene)
    sink.emit(rep, scene.with_(based=False))
    return 1 if args.expect is not None and rep.extra.get("obstructed") != args.expect else 0


def cmd_classical(args, sink: Sink):
    scene = _scene(args)
    sink.emit(classical_report(scene), scene)


def cmd_scan(args, sink: Sink):
    scene = _scene(args)
    t0 = time.perf_counter()
    try:
        res = scan_T(scene, args.t, margin=args.margin)
    except (WhitneyError, ValueError) as e:
        sink.emit(VerificationReport.failure("scan-t", scene.name, None, e))
        return
    for row in res.rows:
        if row.error:
            sink.emit(VerificationReport("scan-t", scene.name, row.T, format_ring(res.turaev), "",
                                         error=row.error, extra={"role": "row"}))
            continue
        rhs = row.shift_T - res.whitney + row.index_T.scale(2)
        sink.emit(VerificationReport.from_ring(
            "scan-t", scene.name, row.T, res.turaev, rhs,
            terms={"shift_T": format_ring(row.shift_T), "index_T": format_ring(row.index_T)},
            extra={"role": "row"}))
    extra = {"role": "limit", "stabilized": res.stabilized, "T_star": res.T_star,
             "hits": [round(h, 6) for h in res.hits], "note": res.note}
    if res.stabilized:
        tail = res.tail[0]
        rhs = tail.shift_T - res.whitney + tail.index_T.scale(2)
        rep = VerificationReport.from_ring(
            "scan-t", scene.name, res.T_star, res.turaev, rhs,
            terms={"shift_inf": format_ring(tail.shift_T), "index": format_ring(tail.index_T),
                   "whitney": format_ring(res.whitney)},
            extra=extra)
    else:
        rep = VerificationReport("scan-t", scene.name, res.T_star, format_ring(res.turaev), "",
                                 error=f"not-stabilized: {res.note}", extra=extra)
    rep.seconds = round(time.perf_counter() - t0, 4)
    sink.emit(rep, scene if sink.figures else None)


def cmd_render(args, sink: Sink):
    scene = _scene(args)
    T = args.t[0] if args.t else None
    bundle = _bundle_for(scene, T if T is not None else scene.T[0])
    path = draw(scene, Path(args.output), T, bundle)
    caption = bundle_terms(bundle) if bundle else {}
    print(json.dumps({"kind": "render", "scene": scene.name, "figure": str(path), "terms": caption},
                     sort_keys=True, separators=(",", ":")), file=sink.stream)


def cmd_batch(args, sink: Sink):
    failures = []
    draws = 0
    t0 = time.perf_counter()
    for entry in batch(args.seeds, samples=args.samples or 256, rk4_steps=args.rk4_steps,
                       rk4_step=args.rk4_step, minimize_failures=not args.no_minimize, jobs=args.jobs):
        draws += entry.attempts
        for rep in entry.reports:
            rep.extra = {**rep.extra, "seed": entry.seed, "attempts": entry.attempts}
            sink.emit(rep, entry.scene if not rep.ok else None)
        if entry.minimized is not None:
            failures.append(entry.minimized)
    if failures:
        path = Path(args.failures)
        path.write_text("".join(json.dumps(s.to_dict(), sort_keys=True) + "\n" for s in failures))
        log.warning("%d failing scene(s); minimized copies in %s", len(failures), path)
    log.info("batch: %d seeds, %d draws, %d reports, %d not ok, %.1f s",
             len(args.seeds), draws, sink.count, sink.bad, time.perf_counter() - t0)


def cmd_scenes(args, sink: Sink):
    for name in golden_names():
        print(name, file=sink.stream)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--samples", type=int, help="curve samples (overrides the scene)")
    common.add_argument("--rk4-step", type=float, help="base RK4 step h (overrides the scene)")
    common.add_argument("--figures", type=Path, help="also draw one SVG per report into this directory")
    common.add_argument("--out", type=Path, help="write report lines here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="whitney", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def scene_cmd(name, help_):
        q = sub.add_parser(name, parents=[common], help=help_)
        q.add_argument("scene", help="scene JSON file, or the name of a bundled scene")
        return q

    for name, based in (("verify-based", True), ("verify-free", False)):
        q = scene_cmd(name, f"check the {'based' if based else 'free'} identity at each T of the scene")
        q.add_argument("--t", type=parse_floats, help="comma-separated durations (overrides the scene)")
        q.add_argument("--no-nudge", action="store_true", help="fail instead of stretching a bad T")
        q.add_argument("--epsilon", type=parse_floats, help="also check the small-shift identity at these durations")
        q.set_defaults(run=lambda a, s, b=based: cmd_verify(a, s, b))

    q = scene_cmd("pushoff", "does the free Turaev sum obstruct pushing the curve off itself?")
    q.add_argument("--expect", type=lambda v: v.lower() in ("1", "true", "yes"), default=None,
                   help="exit 1 unless the verdict matches (true/false)")
    q.set_defaults(run=cmd_pushoff)

    q = scene_cmd("scan-t", "index and shift sum over several T, with stabilisation")
    q.add_argument("--t", type=parse_floats, help="comma-separated durations, e.g. 0.1,1,5,20")
    q.add_argument("--margin", type=float, default=1.25, help="T* = margin x last base-trajectory hit")
    q.set_defaults(run=cmd_scan)

    q = scene_cmd("render", "draw the scene to an SVG file")
    q.add_argument("-o", "--output", default="out.svg")
    q.add_argument("--t", type=parse_floats, help="shift duration to draw (first value is used)")
    q.set_defaults(run=cmd_render)

    q = scene_cmd("classical", "Whitney's formula on the plane")
    q.set_defaults(run=cmd_classical)

    q = sub.add_parser("batch", parents=[common], help="random punctured-plane scenes, based and free checks")
    q.add_argument("--seeds", type=parse_seeds, default=parse_seeds("1..100"), help="e.g. 1..100 or 1,5,9")
    q.add_argument("--rk4-steps", type=int, default=128, help="RK4 steps per shift (h = T / steps) unless --rk4-step is given")
    q.add_argument("--jobs", type=int, default=1, help="worker processes")
    q.add_argument("--failures", default="batch_failures.jsonl", help="where minimized failing scenes go")
    q.add_argument("--no-minimize", action="store_true")
    q.set_defaults(run=cmd_batch)

    q = sub.add_parser("scenes", parents=[common], help="list the bundled scenes")
    q.set_defaults(run=cmd_scenes)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.figures is not None:
        args.figures.mkdir(parents=True, exist_ok=True)
    stream = open(args.out, "w") if args.out else sys.stdout
    sink = Sink(stream, args.figures)
    try:
        extra = args.run(args, sink) or 0
    except WhitneyError as e:
        print(f"whitney: {e}", file=sys.stderr)
        return 2
    finally:
        if args.out:
            stream.close()
    log.info("%d report(s), %d not ok", sink.count, sink.bad)
    return 1 if sink.bad or extra else 0


if __name__ == "__main__":
    sys.exit(main())
