"""Scene-level checks behind the command line: identities, push-off, T scans, batches."""
from __future__ import annotations

import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .curve import Curve, ExprCurve, find_double_points, genericity_check
from .errors import GenericityError, WhitneyError
from .flow import ConstantField
from .groupring import RingElement, conjugacy_class, format_ring, is_pushoff_trivial
from .invariants import (InvariantBundle, base_trajectory_hits, based_bundle, curve_class,
                         free_bundle, t_shift_sum_based, turaev_sum_based, turaev_sum_free,
                         whitney_ring_based)
from .report import VerificationReport
from .scene import Scene, random_scene
from .surface import Plane, PuncturedPlane

NUDGE = 1e-3
MAX_NUDGES = 8
_NUDGEABLE = {"tangential-crossing", "degenerate-sampling", "base-point-hit"}


def _nudged(fn, T: float, tries: int = MAX_NUDGES):
    """Call ``fn(T)``, stretching T by 1e-3 on shift-dependent genericity failures."""
    for k in range(tries + 1):
        try:
            return fn(T), T
        except GenericityError as e:
            if e.kind not in _NUDGEABLE or k == tries:
                raise
            T *= 1 + NUDGE
    raise AssertionError("unreachable")


def bundle_terms(b: InvariantBundle) -> dict:
    out = {
        "turaev": format_ring(b.turaev),
        "whitney": format_ring(b.whitney),
        "shift_T": format_ring(b.shift_T),
        "w": b.scalar_w,
        "gamma_class": str(b.gamma_class),
    }
    if b.index_T is not None:
        out["index_T"] = format_ring(b.index_T)
    return out


def _prepare(scene: Scene):
    c = scene.sample()
    s = scene.resolved_surface(c)
    # curve-level genericity is independent of T; fail early
    report = genericity_check(c, scene.field, tol=scene.tol())
    if not scene.based:
        report.violations = [v for v in report.violations if v[0] != "field-tangent-at-base"]
    report.raise_if_bad()
    return c, s


def verify(scene: Scene, based: bool | None = None, T_values=None,
           nudge: bool = True) -> list[VerificationReport]:
    """One report per shift duration, checking the based or free identity.

    With ``nudge`` a T that gives a non-generic shift is stretched by
    factors of 1 + 1e-3 (at most eight times) before giving up.
    """
    based = scene.based if based is None else based
    if based != scene.based:
        scene = scene.with_(based=based)
    kind = "verify-based" if based else "verify-free"
    Ts = tuple(T_values or scene.T)
    try:
        c, s = _prepare(scene)
    except (WhitneyError, ValueError) as e:
        return [VerificationReport.failure(kind, scene.name, T, e) for T in Ts]
    tol = scene.tol()
    fn = based_bundle if based else free_bundle
    out = []
    for T in Ts:
        t0 = time.perf_counter()
        try:
            b, used = _nudged(lambda t: fn(c, scene.field, s, t, scene.step(t), tol), T,
                              MAX_NUDGES if nudge else 0)
        except (WhitneyError, ValueError) as e:
            out.append(VerificationReport.failure(kind, scene.name, T, e))
            continue
        out.append(VerificationReport.from_ring(
            kind, scene.name, used, b.lhs(), b.rhs(), terms=bundle_terms(b),
            seconds=round(time.perf_counter() - t0, 4),
            extra={"requested_T": T} if used != T else {},
        ))
    return out


def based_reading(scene: Scene) -> Scene:
    """A based copy of ``scene``.

    Free scenes get their parametrisation restarted inside the longest arc
    between crossings, so the base is never a double point.  The restart sits
    at the golden section of that arc: a midpoint is often a dyadic
    parameter, which lines samples up symmetrically about tangencies.
    """
    if scene.based:
        return scene
    c = scene.sample()
    params = sorted({p % 1.0 for d in find_double_points(c, scene.tol()) for p in (d.u, d.v)})
    if not params:
        return scene.with_(based=True)
    gaps = [(b - a, a) for a, b in zip(params, params[1:] + [params[0] + 1.0])]
    width, start = max(gaps)
    cut = (start + width * _GOLDEN) % 1.0
    return scene.with_(curve=scene.curve.started_at(cut), based=True)


_GOLDEN = (math.sqrt(5) - 1) / 2


def epsilon_check(scene: Scene, eps: float | None = None) -> VerificationReport:
    """Shift sum at a tiny duration against turaev + whitney (based form)."""
    eps = eps or scene.epsilon
    kind = "epsilon"
    t0 = time.perf_counter()
    try:
        scene = based_reading(scene)
        c, s = _prepare(scene)
        tol = scene.tol()
        lhs, used = _nudged(lambda t: t_shift_sum_based(c, scene.field, s, t, scene.step(t), tol), eps)
        rhs = turaev_sum_based(c, s, tol) + whitney_ring_based(c, scene.field, s)
    except (WhitneyError, ValueError) as e:
        return VerificationReport.failure(kind, scene.name, eps, e)
    return VerificationReport.from_ring(kind, scene.name, used, lhs, rhs,
                                        seconds=round(time.perf_counter() - t0, 4))


@dataclass
class PushoffResult:
    obstructed: bool
    turaev: RingElement
    gamma_class: object
    witness: list = field(default_factory=list)  # terms outside Z[[gamma] - 1]


def pushoff(scene: Scene) -> PushoffResult:
    """Decide whether the free Turaev sum obstructs pushing the curve off itself."""
    c = scene.sample() if not scene.based else scene.with_(based=False).sample()
    s = scene.surface
    tur = turaev_sum_free(c, s, scene.tol())
    g = conjugacy_class(curve_class(c, s))
    trivial = pushoff_witness(tur, g)
    return PushoffResult(not is_pushoff_trivial(tur, g), tur, g, trivial)


def pushoff_witness(x: RingElement, g) -> list[str]:
    if is_pushoff_trivial(x, g):
        return []
    one = conjugacy_class(g.canonical.__class__())
    span = {g, one} if g != one else set()
    terms = [f"{coef}*{k}" for k, coef in x.items() if k not in span]
    if not terms:  # right support, wrong coefficients
        terms = [f"{coef}*{k}" for k, coef in x.items()]
    return terms


def pushoff_report(scene: Scene) -> VerificationReport:
    t0 = time.perf_counter()
    try:
        r = pushoff(scene)
    except (WhitneyError, ValueError) as e:
        return VerificationReport.failure("pushoff", scene.name, None, e)
    rep = VerificationReport("pushoff", scene.name, None, format_ring(r.turaev), "", True, "0",
                             terms={"gamma_class": str(r.gamma_class)},
                             seconds=round(time.perf_counter() - t0, 4),
                             extra={"obstructed": r.obstructed, "witness": r.witness})
    rep.rhs = rep.lhs  # no identity is checked; the verdict lives in extra
    return rep


# classical Whitney on the plane

@dataclass
class ClassicalResult:
    turaev: int
    w: int
    ind: Fraction
    T: float

    @property
    def holds(self) -> bool:
        return self.turaev == -self.w + 2 * self.ind


def _diameter(c: Curve) -> float:
    lo, hi = c.points.min(axis=0), c.points.max(axis=0)
    return float(np.hypot(*(hi - lo)))


def classical(scene: Scene) -> ClassicalResult:
    """Whitney's formula on the plane, with ind(gamma, p) from a horizontal field."""
    if not isinstance(scene.surface, Plane):
        raise WhitneyError("the classical check needs a plane scene")
    c = scene.sample()
    s = scene.resolved_surface(c)
    X = ConstantField(1.0, 0.0)
    # the horizontal line through p, long enough to leave the curve's box
    T = 2.0 * _diameter(c) + 1.0 + math.pi * 1e-3
    b, T = _nudged(lambda t: based_bundle(c, X, s, t, None, scene.tol()), T)
    if not b.shift_T.is_zero():
        raise WhitneyError("the horizontal shift did not clear the curve")
    scalar = lambda x: x.coefficient(s.identity())  # noqa: E731
    return ClassicalResult(int(scalar(b.turaev)), b.scalar_w, scalar(b.index_T), T)


def classical_report(scene: Scene) -> VerificationReport:
    t0 = time.perf_counter()
    try:
        r = classical(scene)
    except (WhitneyError, ValueError) as e:
        return VerificationReport.failure("classical", scene.name, None, e)
    rhs = -r.w + 2 * r.ind
    return VerificationReport(
        "classical", scene.name, r.T, str(r.turaev), str(rhs) if rhs.denominator > 1 else str(int(rhs)),
        r.holds, str(r.turaev - rhs),
        terms={"turaev": r.turaev, "w": r.w, "ind": str(r.ind)},
        seconds=round(time.perf_counter() - t0, 4),
    )


# stabilisation in T

@dataclass
class ScanRow:
    T: float
    shift_T: RingElement | None
    index_T: RingElement | None
    holds: bool
    error: str | None = None


@dataclass
class ScanResult:
    rows: list
    hits: list  # signed times at which the base trajectory meets the curve
    T_star: float | None
    stabilized: bool
    limit_holds: bool | None
    turaev: RingElement
    whitney: RingElement
    note: str = ""
    tail: list = field(default_factory=list)  # the rows at T*, 2T*, 4T*


def scan_T(scene: Scene, T_values=None, margin: float = 1.25) -> ScanResult:
    """Evaluate shift and index over several T and look for stabilisation.

    T* is taken past the last meeting of the base trajectory with the curve
    inside the scanned horizon; the values at T*, 2T*, 4T* must agree.
    """
    Ts = sorted(T_values or scene.T)
    c, s = _prepare(scene.with_(based=True))
    tol = scene.tol()
    rows = {}

    def row(T):
        try:
            b, used = _nudged(lambda t: based_bundle(c, scene.field, s, t, scene.step(t), tol), T)
            return ScanRow(used, b.shift_T, b.index_T, b.holds())
        except (WhitneyError, ValueError) as e:
            return ScanRow(T, None, None, False, f"{getattr(e, 'kind', type(e).__name__)}: {e}")

    for T in Ts:
        rows[T] = row(T)
    # the horizon is the longest T whose trajectories stayed admissible
    good = [T for T in Ts if rows[T].error is None]
    horizon = max(good) if good else max(Ts)
    hits = base_trajectory_hits(c, scene.field, horizon, scene.step(horizon), tol)
    last = max((abs(t) for t in hits), default=0.0)
    T_star = max(last * margin, min(Ts))
    note = ""
    if last > horizon / margin:
        note = "the base trajectory keeps meeting the curve up to the scanned horizon"
    tail = []
    for k in (1, 2, 4):
        T = k * T_star
        rows.setdefault(T, row(T))
        tail.append(rows[T])
    rows = [rows[T] for T in sorted(rows)]
    turaev = turaev_sum_based(c, s, tol)
    whitney = whitney_ring_based(c, scene.field, s)
    failed = [r for r in tail if r.error]
    if failed and not note:
        note = f"cannot evaluate at T = {failed[0].T:g}: {failed[0].error}"
    stable = not note and len({(r.shift_T, r.index_T) for r in tail}) == 1
    limit = None
    if stable:
        r = tail[0]
        limit = turaev == r.shift_T - whitney + r.index_T.scale(2)
    elif not note:
        note = "values differ across T*, 2T*, 4T*; no stabilisation"
    return ScanResult(rows, hits, T_star, stable, limit, turaev, whitney, note, tail)


# random batches

@dataclass
class BatchEntry:
    seed: int
    scene: Scene | None
    reports: list
    attempts: int
    minimized: Scene | None = None


def _with_steps(scene: Scene, rk4_steps: int, rk4_step: float | None = None) -> Scene:
    if rk4_step is not None:
        return scene.with_(rk4_step=rk4_step)
    return scene.with_(rk4_steps=rk4_steps)


def draw_generic(seed: int, max_attempts: int = 40, samples: int = 256,
                 rk4_steps: int = 128, rk4_step: float | None = None) -> tuple[Scene, list[VerificationReport], int]:
    """First generic draw for ``seed`` together with its based and free reports.

    A draw is rejected, never repaired, when either check hits a genericity
    or flow error; the attempt index makes every draw replayable.
    """
    for attempt in range(max_attempts):
        scene = _with_steps(random_scene(seed, attempt, samples), rk4_steps, rk4_step)
        reports = verify(scene, True, nudge=False)
        if reports[0].error is None:
            reports += verify(scene, False, nudge=False)
        if all(r.error is None for r in reports):
            return scene, reports, attempt + 1
    raise WhitneyError(f"seed {seed}: no generic scene in {max_attempts} draws")


def _fails(scene: Scene) -> bool:
    """True when an identity check completes and comes out unequal."""
    for based in (True, False):
        for r in verify(scene, based):
            if r.error is None and not r.equal:
                return True
    return False


_NUM = re.compile(r"-?\d+\.\d+")


def _split_sum(text: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    i = 0
    while i < len(text):
        ch = text[i]
        depth += ch == "("
        depth -= ch == ")"
        if depth == 0 and text.startswith(" + ", i):
            parts.append(cur)
            cur = ""
            i += 3
            continue
        cur += ch
        i += 1
    return parts + [cur]


def minimize(scene: Scene, still_fails=_fails, rounds: int = 3) -> Scene:
    """Greedy shrink of a failing scene: drop punctures and curve terms, round numbers, shorten T."""
    best = scene
    for _ in range(rounds):
        changed = False
        for cand in _shrink_candidates(best):
            try:
                if still_fails(cand):
                    best, changed = cand, True
                    break
            except (WhitneyError, ValueError):
                continue
        if not changed:
            break
    return best.with_(name=f"{scene.name}-min")


def _shrink_candidates(scene: Scene):
    s = scene.surface
    if isinstance(s, PuncturedPlane) and len(s.punctures) > 1:
        for k in range(len(s.punctures)):
            rest = s.punctures[:k] + s.punctures[k + 1:]
            yield scene.with_(surface=PuncturedPlane(rest, s.base))
    if isinstance(scene.curve, ExprCurve):
        xs, ys = _split_sum(scene.curve.x), _split_sum(scene.curve.y)
        for k in range(len(xs)):
            if len(xs) > 1 and len(ys) > 1:
                yield scene.with_(curve=ExprCurve(" + ".join(xs[:k] + xs[k + 1:]),
                                                  " + ".join(ys[:k] + ys[k + 1:])))
        rounded = ExprCurve(*(_NUM.sub(lambda m: f"{float(m.group()):.2f}", e) for e in (scene.curve.x, scene.curve.y)))
        if rounded != scene.curve:
            yield scene.with_(curve=rounded)
    T = scene.T[0] / 2
    yield scene.with_(T=(T,), rk4_step=None if scene.rk4_step is None else scene.rk4_step / 2)


def _batch_one(seed: int, samples: int, rk4_steps: int, rk4_step: float | None,
               minimize_failures: bool) -> BatchEntry:
    try:
        scene, reports, attempts = draw_generic(seed, samples=samples, rk4_steps=rk4_steps, rk4_step=rk4_step)
    except WhitneyError as e:
        return BatchEntry(seed, None, [VerificationReport.failure("batch", f"random-{seed}", None, e)], 0)
    entry = BatchEntry(seed, scene, reports, attempts)
    if minimize_failures and not all(r.equal for r in reports):
        entry.minimized = minimize(scene)
    return entry


def batch(seeds, samples: int = 256, rk4_steps: int = 128, rk4_step: float | None = None,
          minimize_failures: bool = True, jobs: int = 1):
    """Yield one :class:`BatchEntry` per seed, in seed order.

    With ``jobs > 1`` the scenes run in worker processes; the caller stays
    the only consumer, so output order does not depend on scheduling.
    """
    seeds = list(seeds)
    if jobs <= 1 or len(seeds) < 2:
        for seed in seeds:
            yield _batch_one(seed, samples, rk4_steps, rk4_step, minimize_failures)
        return
    n = len(seeds)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(_batch_one, seeds, [samples] * n, [rk4_steps] * n, [rk4_step] * n, [minimize_failures] * n,
                            chunksize=max(1, n // (4 * jobs)))


__all__ = [
    "verify", "epsilon_check", "pushoff", "pushoff_report", "classical", "classical_report",
    "scan_T", "batch", "draw_generic", "minimize", "bundle_terms", "ScanResult", "ClassicalResult",
]
