"""Vector fields, their flows, and rotation of a curve relative to a field."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .curve import Curve
from .errors import FlowError, GenericityError
from .tolerances import DEFAULT, Tolerances

DEFAULT_STEPS = 512
MAX_HALVINGS = 10


@dataclass(frozen=True)
class ConstantField:
    dx: float
    dy: float

    def __call__(self, pts):
        pts = np.asarray(pts, float)
        out = np.empty_like(pts)
        out[..., 0] = self.dx
        out[..., 1] = self.dy
        return out

    def to_dict(self):
        return {"kind": "constant", "v": [self.dx, self.dy]}


@dataclass(frozen=True)
class ExprField:
    fx: str
    fy: str

    def __post_init__(self):
        nodes = [ex.parse(s, ("x", "y")) for s in (self.fx, self.fy)]
        object.__setattr__(self, "_fn", ex.compile_many(nodes, ("x", "y")))

    def __reduce__(self):
        return (type(self), (self.fx, self.fy))

    def __call__(self, pts):
        pts = np.asarray(pts, float)
        out = np.empty(pts.shape)
        with np.errstate(all="ignore"):
            out[..., 0], out[..., 1] = self._fn(pts[..., 0], pts[..., 1])
        return out

    def to_dict(self):
        return {"kind": "expr", "fx": self.fx, "fy": self.fy}


@dataclass(frozen=True)
class RadialField:
    """``f(x, y) * ((x, y) - center)``, with ``f`` evaluated relative to ``center``."""

    center: tuple[float, float] = (0.0, 0.0)
    f: str = "1/sqrt(x*x+y*y)"

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(map(float, self.center)))
        object.__setattr__(self, "_f", ex.compile_expr(ex.parse(self.f, ("x", "y"))))

    def __reduce__(self):
        return (type(self), (self.center, self.f))

    def __call__(self, pts):
        rel = np.asarray(pts, float) - np.asarray(self.center)
        with np.errstate(all="ignore"):
            scale = self._f(rel[..., 0], rel[..., 1])
        return rel * np.asarray(scale)[..., None]

    def to_dict(self):
        return {"kind": "radial", "center": list(self.center), "f": self.f}


VectorFieldSpec = ConstantField | ExprField | RadialField


def parse_field(text_x: str, text_y: str) -> VectorFieldSpec:
    nx = ex.parse(text_x, ("x", "y"))
    ny = ex.parse(text_y, ("x", "y"))
    if not ex.free_variables(nx) and not ex.free_variables(ny):
        vx = float(ex.compile_expr(nx)(np.zeros(1), np.zeros(1))[0])
        vy = float(ex.compile_expr(ny)(np.zeros(1), np.zeros(1))[0])
        return ConstantField(vx, vy)
    return ExprField(text_x, text_y)


def field_from_dict(d: dict) -> VectorFieldSpec:
    kind = d.get("kind")
    if kind == "constant":
        dx, dy = d["v"]
        return ConstantField(float(dx), float(dy))
    if kind == "expr":
        return parse_field(d["fx"], d["fy"])
    if kind == "radial":
        return RadialField(tuple(d.get("center", (0.0, 0.0))), d.get("f", "1/sqrt(x*x+y*y)"))
    raise ValueError(f"unknown field kind {kind!r}")


@dataclass
class Trajectory:
    """States of a batch of points on a common time grid."""

    times: np.ndarray  # (K,)
    states: np.ndarray  # (K, m, 2)

    def path(self, k: int) -> np.ndarray:
        return self.states[:, k, :]

    def end(self) -> np.ndarray:
        return self.states[-1]


def _check(y: np.ndarray, tol: Tolerances):
    big = np.abs(y).max(initial=0.0)
    if not np.isfinite(big):
        raise FlowError("trajectory met a singular field value")
    if big > tol.box:
        raise FlowError("trajectory left the admissible box; the field is not extendable here")


def integrate(field, points, T: float, h: float | None = None, tol: Tolerances = DEFAULT,
              direction=None) -> Trajectory:
    """Classical RK4 from time 0 to ``T`` (negative ``T`` flows backward).

    The base step is ``h`` (default ``|T| / 512``).  Each step carries the
    error estimate ``|h|/6 * |k4 - f(y_new)|`` of the embedded third-order
    companion; steps whose estimate exceeds ``tol.rk4 * (1 + |y|)`` are halved.
    All points share one time grid.  ``direction`` (one ``+1``/``-1`` per
    point) lets forward and backward trajectories share a single call.
    """
    y = np.array(points, float, ndmin=2)
    if T == 0:
        return Trajectory(np.zeros(1), y[None].copy())
    if direction is None:
        f = field
    else:
        sgn = np.asarray(direction, float)[:, None]

        def f(z):
            return field(z) * sgn
    h = abs(T) / DEFAULT_STEPS if h is None else abs(h)
    nsteps = max(1, int(math.ceil(abs(T) / h - 1e-9)))
    hb = T / nsteps
    times = [0.0]
    states = [y.copy()]
    _check(y, tol)
    k1 = f(y)
    _check(k1, tol)
    t = 0.0

    def attempt(y, k1, step):
        k2 = f(y + 0.5 * step * k1)
        k3 = f(y + 0.5 * step * k2)
        k4 = f(y + step * k3)
        y_new = y + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        k5 = f(y_new)
        _check(k5, tol)
        _check(y_new, tol)
        err = abs(step) / 6.0 * np.abs(k4 - k5).max() / (1.0 + np.abs(y_new).max())
        return y_new, k5, err

    for _ in range(nsteps):
        stack = [(hb, 0)]
        while stack:
            step, depth = stack.pop()
            y_new, k5, err = attempt(y, k1, step)
            if err > tol.rk4 and depth < MAX_HALVINGS:
                stack.extend([(step / 2, depth + 1), (step / 2, depth + 1)])
                continue
            y, k1 = y_new, k5
            t += step
            times.append(t)
            states.append(y)
    times[-1] = T
    return Trajectory(np.array(times), np.array(states))


def flow_point(field, a, t: float, h: float | None = None, periodic: bool = False,
               tol: Tolerances = DEFAULT) -> np.ndarray:
    end = integrate(field, np.asarray(a, float)[None], t, h, tol).end()[0]
    return end - np.floor(end) if periodic else end


def _shifted_curve(c: Curve, pts: np.ndarray) -> Curve:
    fwd = np.roll(pts, -1, axis=0) - pts
    bwd = pts - np.roll(pts, 1, axis=0)
    if c.periodic:
        fwd -= np.round(fwd)
        bwd -= np.round(bwd)
    tan = fwd + bwd
    norm = np.hypot(tan[:, 0], tan[:, 1])
    if np.any(norm == 0):
        raise GenericityError("degenerate-sampling", "shifted curve has coincident samples")
    return Curve(c.t, pts, tan / norm[:, None], c.based, c.periodic, c.source)


def flow_curve(field, c: Curve, T: float, h: float | None = None,
               tol: Tolerances = DEFAULT) -> tuple[Curve, Trajectory]:
    """T-shift of ``c`` plus the trajectories of all samples."""
    traj = integrate(field, c.points, T, h, tol)
    return _shifted_curve(c, traj.end()), traj


def shift_curve(field, c: Curve, T: float, h: float | None = None, tol: Tolerances = DEFAULT) -> Curve:
    return flow_curve(field, c, T, h, tol)[0]


@dataclass
class FlowSegment:
    start: np.ndarray
    duration: float
    points: np.ndarray  # polyline in traversal order
    h: float
    times: np.ndarray | None = None  # flow time of each point; Phi_minus runs over [-T, 0]


def semi_trajectories(field, p, T: float, h: float | None = None,
                      tol: Tolerances = DEFAULT) -> tuple[FlowSegment, FlowSegment]:
    """(Phi_minus, Phi_plus): Phi_minus runs from Phi_{-T}(p) to p, Phi_plus from p to Phi_T(p)."""
    p = np.asarray(p, float)
    traj = integrate(field, np.stack([p, p]), T, h, tol, direction=[-1, 1])
    return semis_from(traj, 0, 1, T)


def semis_from(traj: Trajectory, k_back: int, k_fwd: int, T: float) -> tuple[FlowSegment, FlowSegment]:
    back = traj.path(k_back)[::-1].copy()
    fwd = traj.path(k_fwd).copy()
    hh = float(np.diff(traj.times).max()) if len(traj.times) > 1 else 0.0
    return (FlowSegment(back[0], T, back, hh, -traj.times[::-1].copy()),
            FlowSegment(fwd[0], T, fwd, hh, traj.times.copy()))


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def relative_winding(field, c: Curve, method: str = "unwrap") -> int:
    """Number of turns of the tangent of ``c`` relative to ``field``.

    ``unwrap`` follows the polyline: vertex turning angles minus the turning
    of the field between consecutive samples.  ``tangency`` instead counts,
    with sign, the samples where the analytic tangent swings through the
    direction of the field.
    """
    X = field(c.points)
    if not np.all(np.isfinite(X)) or np.any(np.hypot(X[:, 0], X[:, 1]) == 0):
        raise GenericityError("field-zero-on-curve", "field vanishes or is singular on the curve")
    if method == "tangency":
        return _winding_by_tangency(X, c.tangents)
    segs = c.segments
    d = segs[:, 1] - segs[:, 0]
    ang = np.arctan2(d[:, 1], d[:, 0])
    turn = _wrap(ang - np.roll(ang, 1))
    xa = np.arctan2(X[:, 1], X[:, 0])
    dx = _wrap(np.roll(xa, -1) - xa)
    if max(np.abs(turn).max(), np.abs(dx).max()) > np.pi / 2:
        raise GenericityError("undersampled", "angle jump above pi/2 between adjacent samples")
    total = (turn.sum() - dx.sum()) / (2 * np.pi)
    w = round(total)
    if abs(total - w) > 1e-6:
        raise GenericityError("undersampled", f"non-integral rotation {total}")
    return int(w)


def _winding_by_tangency(X, tangents) -> int:
    rel = np.arctan2(
        X[:, 0] * tangents[:, 1] - X[:, 1] * tangents[:, 0],
        X[:, 0] * tangents[:, 0] + X[:, 1] * tangents[:, 1],
    )
    nxt = np.roll(rel, -1)
    # relative angle passes through 0 while the tangent looks along X
    up = (rel < 0) & (nxt >= 0) & (np.abs(nxt - rel) < np.pi)
    down = (rel >= 0) & (nxt < 0) & (np.abs(nxt - rel) < np.pi)
    return int(up.sum() - down.sum())


def tangency_points(field, c: Curve) -> list[tuple[int, int]]:
    """(sample index, sign) where the tangent looks in the direction of the field."""
    X = field(c.points)
    rel = np.arctan2(
        X[:, 0] * c.tangents[:, 1] - X[:, 1] * c.tangents[:, 0],
        X[:, 0] * c.tangents[:, 0] + X[:, 1] * c.tangents[:, 1],
    )
    nxt = np.roll(rel, -1)
    close = np.abs(nxt - rel) < np.pi
    out = []
    for k in np.nonzero(close & (np.sign(rel) != np.sign(nxt)))[0]:
        out.append((int(k), 1 if nxt[k] > rel[k] else -1))
    return out
