"""Sampled closed curves: double points, arcs, smoothing and genericity checks.

Curves are handled as closed polylines.  Internally a point on the curve is
addressed by the polyline parameter ``u = (i + s) / n`` in ``[0, 1)``: segment
``i`` runs from sample ``i`` to sample ``i + 1`` (mod ``n``).  For based curves
sample 0 is the base point.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import GenericityError, ImmersionError
from .geometry import Hits, intersect, segments_of
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class ExprCurve:
    """Closed curve ``t -> (x(t), y(t))`` on ``[0, 1]`` written in the expression language."""

    x: str
    y: str

    def __post_init__(self):
        nx = ex.parse(self.x, ("t",))
        ny = ex.parse(self.y, ("t",))
        object.__setattr__(self, "_f", (ex.compile_expr(nx, ("t",)), ex.compile_expr(ny, ("t",))))
        object.__setattr__(
            self, "_df",
            (ex.compile_expr(ex.derivative(nx, "t"), ("t",)), ex.compile_expr(ex.derivative(ny, "t"), ("t",))),
        )

    def __reduce__(self):
        # compiled callables do not pickle; rebuild them from the text
        return (type(self), (self.x, self.y))

    def point(self, t):
        t = np.asarray(t, float)
        return np.stack([self._f[0](t), self._f[1](t)], -1)

    def velocity(self, t):
        t = np.asarray(t, float)
        return np.stack([self._df[0](t), self._df[1](t)], -1)

    def to_dict(self):
        return {"kind": "expr", "x": self.x, "y": self.y}

    def started_at(self, s: float) -> "ExprCurve":
        """The same loop read from parameter ``s`` onwards."""
        sub = lambda e: re.sub(r"\bt\b", f"(t + {float(s)!r})", e)  # noqa: E731
        return ExprCurve(sub(self.x), sub(self.y))


@dataclass(frozen=True)
class PointsCurve:
    """Closed curve given by its vertices (the closing vertex is implicit)."""

    data: tuple

    def to_dict(self):
        return {"kind": "points", "data": [list(p) for p in self.data]}

    def started_at(self, s: float) -> "PointsCurve":
        k = int(round(s * len(self.data))) % len(self.data)
        return PointsCurve(tuple(self.data[k:]) + tuple(self.data[:k]))


@dataclass(frozen=True, eq=False)
class Curve:
    t: np.ndarray  # (n,) source parameters of the samples
    points: np.ndarray  # (n, 2)
    tangents: np.ndarray  # (n, 2) unit tangents
    based: bool = True
    periodic: bool = False  # coordinates live in the cover of the flat torus
    source: object = None

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def base(self) -> np.ndarray:
        return self.points[0]

    @property
    def segments(self) -> np.ndarray:
        return segments_of(self.points, True, self.periodic)

    def point_at(self, u: float) -> np.ndarray:
        i, s = self._locate(u)
        seg = self.segments[i]
        return seg[0] + s * (seg[1] - seg[0])

    def _locate(self, u: float) -> tuple[int, float]:
        x = (u % 1.0) * self.n
        i = min(int(math.floor(x)), self.n - 1)
        return i, x - i

    def segment_direction(self, u: float) -> np.ndarray:
        seg = self.segments[self._locate(u)[0]]
        return seg[1] - seg[0]

    def reversed(self) -> "Curve":
        """Same curve, opposite orientation, still starting at sample 0."""
        idx = (-np.arange(self.n)) % self.n
        return Curve(1.0 - self.t[idx] % 1.0, self.points[idx], -self.tangents[idx],
                     self.based, self.periodic, self.source)

    def transformed(self, matrix) -> "Curve":
        m = np.asarray(matrix, float)
        tan = self.tangents @ m.T
        tan /= np.linalg.norm(tan, axis=1, keepdims=True)
        return Curve(self.t, self.points @ m.T, tan, self.based, self.periodic, self.source)


def _finite_difference_tangents(points: np.ndarray, periodic: bool) -> np.ndarray:
    fwd = np.roll(points, -1, axis=0) - points
    bwd = points - np.roll(points, 1, axis=0)
    if periodic:
        fwd -= np.round(fwd)
        bwd -= np.round(bwd)
    return fwd + bwd


def sample_curve(spec, n: int = 512, based: bool = True, periodic: bool = False,
                 phase: float | None = None, tol: Tolerances = DEFAULT) -> Curve:
    """Sample ``spec`` at ``n`` points.

    Based curves start exactly at ``t = 0``.  Unbased curves are sampled at
    ``(i + phase) / n`` (default ``phase = 0.5``), which keeps symmetric
    crossings such as the centre of a figure-eight off the sample grid.
    """
    if isinstance(spec, PointsCurve):
        pts = np.asarray(spec.data, float)
        if len(pts) < 3:
            raise ImmersionError("need at least three vertices")
        tan = _finite_difference_tangents(pts, periodic)
        t = np.arange(len(pts)) / len(pts)
    else:
        if n < 64:
            raise ValueError("sample count must be at least 64")
        if phase is None:
            phase = 0.0 if based else 0.5
        t = (np.arange(n) + phase) / n
        pts = spec.point(t)
        tan = spec.velocity(t)
        if based:
            p0, p1 = spec.point(np.array([0.0, 1.0]))
            v0, v1 = spec.velocity(np.array([0.0, 1.0]))
            gap = p1 - p0
            if periodic:
                gap -= np.round(gap)
            if np.abs(gap).max() > tol.closure or np.abs(v1 - v0).max() > tol.closure * max(1.0, np.abs(v0).max()):
                raise ImmersionError("based curve must satisfy gamma(0)=gamma(1) and gamma'(0)=gamma'(1)")
    speed = np.hypot(tan[:, 0], tan[:, 1])
    if not np.all(np.isfinite(speed)) or np.any(speed <= 1e-12 * max(1.0, speed.max())):
        raise ImmersionError("curve has a zero-speed point")
    steps = segments_of(pts, True, periodic)
    if np.any(np.hypot(*(steps[:, 1] - steps[:, 0]).T) == 0):
        raise ImmersionError("consecutive samples coincide")
    return Curve(t, pts, tan / speed[:, None], based, periodic, spec)


@dataclass(frozen=True)
class DoublePoint:
    u: float
    v: float
    location: tuple[float, float]
    sign: int
    seg_u: int = field(default=-1, compare=False)
    seg_v: int = field(default=-1, compare=False)


@dataclass
class GenericityReport:
    violations: list = field(default_factory=list)  # (kind, detail)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, detail: str):
        self.violations.append((kind, detail))

    def raise_if_bad(self):
        if self.violations:
            kind, detail = self.violations[0]
            raise GenericityError(kind, detail)

    def to_dict(self):
        return {"ok": self.ok, "violations": [{"kind": k, "detail": d} for k, d in self.violations]}


def _self_hits(c: Curve) -> Hits:
    segs = c.segments
    return intersect(segs, segs, c.periodic, self_closed=True)


def _double_point_violations(c: Curve, hits: Hits, tol: Tolerances, report: GenericityReport):
    n = c.n
    u = (hits.i + hits.s) / n
    v = (hits.j + hits.r) / n
    for k in np.nonzero(hits.sin_angle < math.sin(tol.angle))[0]:
        report.add("tangential-crossing", f"crossing at u={u[k]:.6g}, v={v[k]:.6g} is nearly tangential")
    if c.based:
        for k in np.nonzero((u < tol.separation) | (v > 1 - tol.separation))[0]:
            report.add("base-point-hit", f"double point at {hits.point[k]} is the base point")
    params = np.sort(np.concatenate([u, v]))
    if len(params) > 1:
        gaps = np.diff(params)
        wrap = params[0] + 1 - params[-1]
        if gaps.min() < tol.separation or (len(params) > 2 and wrap < tol.separation):
            report.add("triple-point", "two crossing events coincide along the curve")


def find_double_points(c: Curve, tol: Tolerances = DEFAULT) -> list[DoublePoint]:
    hits = _self_hits(c)
    report = GenericityReport()
    _double_point_violations(c, hits, tol, report)
    report.raise_if_bad()
    n = c.n
    out = [
        DoublePoint(float((i + s) / n), float((j + r) / n), tuple(map(float, p)), int(sg), int(i), int(j))
        for i, s, j, r, p, sg in zip(hits.i, hits.s, hits.j, hits.r, hits.point, hits.det_sign)
    ]
    return sorted(out, key=lambda d: d.u)


def arc(c: Curve, u0: float, u1: float) -> np.ndarray:
    """Polyline along ``c`` from parameter ``u0`` to ``u1``.

    If ``u1 < u0`` the arc wraps through parameter 0.  ``u1 == u0`` gives a
    single point; use ``u1 = u0 + 1`` for the full loop.
    """
    n = c.n
    x0, x1 = u0 * n, u1 * n
    if x1 < x0:
        x1 += n
    i0 = int(math.floor(x0))
    i1 = int(math.floor(x1))
    if x1 == i1 and i1 > i0:
        i1 -= 1  # land at the end of the previous segment, not the start of the next
    segs = c.segments[np.arange(i0, i1 + 1) % n]
    if c.periodic and len(segs) > 1:
        # keep the cover continuous when wrapping on the torus
        jumps = np.round(segs[:-1, 1] - segs[1:, 0])
        segs = segs + np.concatenate([np.zeros((1, 2)), np.cumsum(jumps, axis=0)])[:, None, :]
    d = segs[:, 1] - segs[:, 0]
    hi = np.ones(len(segs))
    hi[-1] = x1 - i1
    out = np.vstack([segs[0, 0] + (x0 - i0) * d[0], segs[:, 0] + hi[:, None] * d])
    keep = np.ones(len(out), bool)
    keep[1:] = np.any(np.diff(out, axis=0) != 0, axis=1)
    return out[keep]


def join(*parts, close: bool = True, periodic: bool = False) -> np.ndarray:
    """Concatenate polylines, dropping duplicated junction points.

    With ``close`` the result ends exactly at its first point (mod the
    lattice for periodic curves).
    """
    pts = [np.asarray(parts[0], float)]
    for p in parts[1:]:
        p = np.asarray(p, float)
        if periodic:
            p = p + np.round(pts[-1][-1] - p[0])
        gap = pts[-1][-1] - p[0]
        scale = max(1.0, float(np.abs(p[0]).max()))
        if np.abs(gap).max() > 1e-6 * scale:
            raise ValueError(f"polyline pieces do not meet (gap {gap})")
        pts.append(p[1:])
    out = np.concatenate(pts)
    if close:
        first = out[0] + (np.round(out[-1] - out[0]) if periodic else 0)
        out[-1] = first if np.abs(out[-1] - first).max() <= 1e-6 * max(1.0, np.abs(first).max()) else out[-1]
        if np.any(out[-1] != first):
            out = np.vstack([out, first])
    keep = np.ones(len(out), bool)
    d = np.diff(out, axis=0)
    if periodic:
        d -= np.round(d)
    keep[1:] = np.any(d != 0, axis=1)
    return out[keep]


def smooth_at(c: Curve, d: DoublePoint) -> tuple[np.ndarray, np.ndarray]:
    """Resolve crossing ``d`` along the orientation into (left, right) loops.

    The left loop is the one whose tangent turns clockwise through ``d``.
    """
    inner = join(arc(c, d.u, d.v), periodic=c.periodic)  # gamma[u, v]
    outer = join(arc(c, d.v, d.u), periodic=c.periodic)  # gamma[v, 1] + gamma[0, u]
    t_u = c.segment_direction(d.u)
    t_v = c.segment_direction(d.v)
    # inner leaves d along t_u and returns along t_v: it turns from t_v to t_u at d
    inner_turn = t_v[0] * t_u[1] - t_v[1] * t_u[0]
    return (inner, outer) if inner_turn < 0 else (outer, inner)


def base_transversality(c: Curve, x0, tol: Tolerances = DEFAULT) -> str | None:
    """Why the field value ``x0`` at the base point is not transversal, or None.

    The polyline has a corner at the base vertex, so the field has to cross
    the incoming and the outgoing segment on the same side, each by at
    least ``tol.transversal``.  The analytic tangent is checked as well.
    """
    x0 = np.asarray(x0, float)
    segs = c.segments
    dirs = [segs[-1][1] - segs[-1][0], segs[0][1] - segs[0][0], c.tangents[0]]
    sines = [(d[0] * x0[1] - d[1] * x0[0]) / (np.hypot(*d) * np.hypot(*x0)) for d in dirs]
    if min(abs(v) for v in sines) < math.sin(tol.transversal):
        return "the field is tangent to the curve at the base point"
    if len({v > 0 for v in sines}) > 1:
        return "the field direction lies inside the corner of the sampled curve at the base point"
    return None


def genericity_check(c: Curve, field=None, shifted: Curve | None = None,
                     tol: Tolerances = DEFAULT) -> GenericityReport:
    report = GenericityReport()
    _double_point_violations(c, _self_hits(c), tol, report)
    if field is not None:
        X = field(c.points)
        mag = np.hypot(X[:, 0], X[:, 1])
        bad = ~np.isfinite(mag) | (mag <= 1e-12 * max(1.0, float(np.nanmax(mag)) if np.isfinite(mag).any() else 1.0))
        for k in np.nonzero(bad)[0][:5]:
            report.add("field-zero-on-curve", f"field vanishes or is singular at {c.points[k]}")
        if c.based and not bad[0]:
            detail = base_transversality(c, X[0], tol)
            if detail:
                report.add("field-tangent-at-base", detail)
    if shifted is not None:
        hits = intersect(shifted.segments, c.segments, c.periodic)
        n = c.n
        u = (hits.i + hits.s) / n
        v = (hits.j + hits.r) / n
        for k in np.nonzero(hits.sin_angle < math.sin(tol.angle))[0]:
            report.add("tangential-crossing", f"shifted curve meets the curve tangentially near {hits.point[k]}")
        if c.based:
            for k in np.nonzero(np.abs(u - v) < tol.separation)[0]:
                report.add("tangential-crossing", f"crossing with |u - v| < tolerance at {hits.point[k]}")
            for k in np.nonzero((v < tol.separation) | (v > 1 - tol.separation)
                                | (u < tol.separation) | (u > 1 - tol.separation))[0]:
                report.add("base-point-hit", f"shifted curve crosses the curve at the base point near {hits.point[k]}")
    return report
