"""Self-intersection invariants of based and free curves relative to a flow.

All values are :class:`~whitney.groupring.RingElement` instances.  Loops
built from pieces (curve arcs, flow segments) are closed exactly and
classified by the surface model, so every output is an exact element of
the group ring.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .curve import Curve, arc, base_transversality, find_double_points, join, smooth_at
from .errors import GenericityError
from .flow import (Trajectory, _shifted_curve, integrate, relative_winding, semi_trajectories,
                   semis_from)
from .geometry import intersect, segments_of
from .groupring import (BASED, FREE, FreeLoopClass, GroupElement, RingElement,
                        conjugacy_class)
from .tolerances import DEFAULT, Tolerances


def _closed_path(c: Curve) -> np.ndarray:
    return arc(c, 0.0, 1.0)


def curve_class(c: Curve, s) -> GroupElement:
    """[gamma]: the class of the closed curve read from sample 0."""
    return s.loop_class(join(_closed_path(c), periodic=c.periodic))


def turaev_sum_based(c: Curve, s, tol: Tolerances = DEFAULT) -> RingElement:
    """Sum over double points of sgn(d) times the class of gamma[0,u] + gamma[v,1]."""
    out = RingElement.zero(BASED)
    for d in find_double_points(c, tol):
        loop = join(arc(c, 0.0, d.u), arc(c, d.v, 1.0), periodic=c.periodic)
        out = out + RingElement.monomial(s.loop_class(loop), d.sign)
    return out


def turaev_sum_free(c: Curve, s, tol: Tolerances = DEFAULT) -> RingElement:
    """Sum over double points of [right smoothing] - [left smoothing].

    Equivalently sgn(d) * ([gamma[v, 1] + gamma[0, u]] - [gamma[u, v]]), so the
    first term is the free class of the loop used in the based sum.
    """
    out = RingElement.zero(FREE)
    for d in find_double_points(c, tol):
        left, right = smooth_at(c, d)
        out = out + RingElement.monomial(conjugacy_class(s.loop_class(right)))
        out = out - RingElement.monomial(conjugacy_class(s.loop_class(left)))
    return out


def _subpath(path: np.ndarray, i: int, frac: float, head: bool) -> np.ndarray:
    """Piece of an open polyline before (``head``) or after the point ``(i, frac)``."""
    x = path[i] + frac * (path[i + 1] - path[i])
    if head:
        return np.vstack([path[: i + 1], x])
    return np.vstack([x, path[i + 1 :]])


def pair_sum(path1, path2, s, tol: Tolerances = DEFAULT, periodic: bool = False) -> RingElement:
    """Signed classes of two-arc loops at crossings of ``path1`` and ``path2``.

    ``path1`` must start at the base point and ``path2`` end there.  Each
    crossing ``d = path1(u) = path2(v)`` contributes sgn(path1'(u), path2'(v))
    times the class of path1[start, u] + path2[v, end].  Crossings within
    ``tol.exclusion`` (in normalised parameter) of a path endpoint are ignored.
    """
    p1 = np.asarray(path1, float)
    p2 = np.asarray(path2, float)
    if periodic:
        # lift to continuous cover coordinates
        p1 = p1[0] + np.concatenate([[[0, 0]], np.cumsum(_wrapped(np.diff(p1, axis=0)), axis=0)])
        p2 = p2[0] + np.concatenate([[[0, 0]], np.cumsum(_wrapped(np.diff(p2, axis=0)), axis=0)])
    hits = intersect(segments_of(p1, False), segments_of(p2, False), periodic)
    m1, m2 = len(p1) - 1, len(p2) - 1
    out = RingElement.zero(BASED)
    for i, a, j, b, sa, sg in zip(hits.i, hits.s, hits.j, hits.r, hits.sin_angle, hits.det_sign):
        u, v = (i + a) / m1, (j + b) / m2
        if min(u, 1 - u, v, 1 - v) < tol.exclusion:
            continue
        if sa < math.sin(tol.angle):
            raise GenericityError("tangential-crossing", "paths meet tangentially")
        loop = join(_subpath(p1, i, a, True), _subpath(p2, j, b, False), periodic=periodic)
        out = out + RingElement.monomial(s.loop_class(loop), int(sg))
    return out


def _wrapped(d):
    return d - np.round(d)


def whitney_ring_based(c: Curve, field, s) -> RingElement:
    w = relative_winding(field, c)
    return RingElement.monomial(curve_class(c, s), w) if w else RingElement.zero(BASED)


def whitney_ring_free(c: Curve, field, s) -> RingElement:
    w = relative_winding(field, c)
    if not w:
        return RingElement.zero(FREE)
    g = conjugacy_class(curve_class(c, s))
    one = conjugacy_class(s.identity())
    return RingElement.monomial(g, w) - RingElement.monomial(one, w)


@dataclass
class Shift:
    """gamma_T together with the sample trajectories and its crossings with gamma."""

    curve: Curve
    shifted: Curve
    traj: Trajectory
    T: float
    u: np.ndarray  # parameter on gamma_T
    v: np.ndarray  # parameter on gamma
    seg_u: np.ndarray
    frac_u: np.ndarray
    sign: np.ndarray

    def flow_path(self, k: int) -> np.ndarray:
        """Path from gamma(u_k) to gamma_T(u_k) interpolating the sample trajectories."""
        c = self.curve
        i, a = int(self.seg_u[k]), float(self.frac_u[k])
        i1 = (i + 1) % c.n
        first = self.traj.path(i)
        second = self.traj.path(i1)
        if c.periodic:
            second = second + np.round(c.segments[i][1] - c.points[i1])
        return (1 - a) * first + a * second


def compute_shift(c: Curve, field, T: float, h: float | None = None, tol: Tolerances = DEFAULT,
                  traj: Trajectory | None = None) -> Shift:
    if traj is None:
        traj = integrate(field, c.points, T, h, tol)
    shifted = _shifted_curve(c, traj.end())
    hits = intersect(shifted.segments, c.segments, c.periodic)
    n = c.n
    u = (hits.i + hits.s) / n
    v = (hits.j + hits.r) / n
    if np.any(hits.sin_angle < math.sin(tol.angle)):
        raise GenericityError("tangential-crossing", f"gamma_T meets gamma tangentially (T={T})")
    if c.based:
        if np.any(np.abs(u - v) < tol.separation):
            raise GenericityError("tangential-crossing", f"crossing with u ~ v (T={T})")
        edge = np.minimum.reduce([u, 1 - u, v, 1 - v]) if len(u) else np.zeros(0)
        if np.any(edge < tol.separation):
            raise GenericityError("base-point-hit", f"gamma_T meets gamma at the base point (T={T})")
    return Shift(c, shifted, traj, T, u, v, hits.i, hits.s, hits.det_sign)


@dataclass
class FlowData:
    """Everything the identities need from one batched integration."""

    shift: Shift
    semis: tuple | None
    sweep: list[str]


def flow_data(c: Curve, field, s, T: float, h: float | None = None, tol: Tolerances = DEFAULT,
              with_semis: bool = True) -> FlowData:
    """Integrate curve samples, base point (both ways) and punctures in a single pass."""
    n = c.n
    punctures = np.array(getattr(s, "punctures", ()) or np.zeros((0, 2)), float).reshape(-1, 2)
    extra = [c.base, c.base] if with_semis else []
    pts = np.vstack([c.points, *[np.asarray(e)[None] for e in extra], punctures])
    dirs = np.concatenate([np.ones(n), [1.0, -1.0][: len(extra)], -np.ones(len(punctures))])
    full = integrate(field, pts, T, h, tol, direction=dirs)
    traj = Trajectory(full.times, full.states[:, :n])
    semis = semis_from(full, n + 1, n, T) if with_semis else None
    m = n + len(extra)
    sweep = _sweep_messages(c, punctures, [full.path(m + k) for k in range(len(punctures))])
    return FlowData(compute_shift(c, field, T, h, tol, traj), semis, sweep)


def t_shift_sum_based(c: Curve, field, s, T: float, h: float | None = None,
                      tol: Tolerances = DEFAULT, shift: Shift | None = None) -> RingElement:
    """Signed classes of three-arc loops gamma[0,u] + flow + gamma[v,1] over crossings with u < v."""
    sh = shift or compute_shift(c, field, T, h, tol)
    out = RingElement.zero(BASED)
    for k in np.nonzero(sh.u < sh.v)[0]:
        loop = join(arc(c, 0.0, sh.u[k]), sh.flow_path(k), arc(c, sh.v[k], 1.0), periodic=c.periodic)
        out = out + RingElement.monomial(s.loop_class(loop), int(sh.sign[k]))
    return out


def t_shift_sum_free(c: Curve, field, s, T: float, h: float | None = None,
                     tol: Tolerances = DEFAULT, shift: Shift | None = None) -> RingElement:
    """Signed free classes of two-arc loops: gamma from v to u, then the flow to gamma_T(u)."""
    sh = shift or compute_shift(c, field, T, h, tol)
    out = RingElement.zero(FREE)
    for k in range(len(sh.u)):
        loop = join(arc(c, sh.v[k], sh.u[k]), sh.flow_path(k), periodic=c.periodic)
        out = out + RingElement.monomial(conjugacy_class(s.loop_class(loop)), int(sh.sign[k]))
    return out


def index_T(c: Curve, field, s, T: float, h: float | None = None,
            tol: Tolerances = DEFAULT, semis=None) -> RingElement:
    """Half the sum of <gamma, Phi_minus> and <Phi_plus, gamma>."""
    minus, plus = semis or semi_trajectories(field, c.base, T, h, tol)
    path = _closed_path(c)
    total = pair_sum(path, minus.points, s, tol, c.periodic) + pair_sum(plus.points, path, s, tol, c.periodic)
    return total.scale(Fraction(1, 2))


def base_trajectory_hits(c: Curve, field, T: float, h: float | None = None,
                         tol: Tolerances = DEFAULT) -> list[float]:
    """Times t in [-T, T] (t != 0) at which the trajectory of the base point meets gamma."""
    minus, plus = semi_trajectories(field, c.base, T, h, tol)
    path = _closed_path(c)
    times = []
    for seg in (minus, plus):
        hits = intersect(segments_of(seg.points, False, c.periodic), segments_of(path, False, c.periodic), c.periodic)
        for i, a in zip(hits.i, hits.s):
            t = seg.times[i] + a * (seg.times[i + 1] - seg.times[i])
            if abs(t) > tol.exclusion * abs(T):
                times.append(float(t))
    return sorted(times)


def _sweep_messages(c: Curve, punctures, paths) -> list[str]:
    path = _closed_path(c)
    bad = []
    for k, (q, traj) in enumerate(zip(punctures, paths)):
        if len(intersect(segments_of(traj, False), segments_of(path, False))):
            bad.append(f"the flow carries the curve across puncture {k + 1} at {tuple(q)}")
    return bad


def puncture_sweep_violations(c: Curve, field, s, T: float, h: float | None = None,
                              tol: Tolerances = DEFAULT) -> list[str]:
    """Punctures swept over by the flow of gamma during [0, T]."""
    punctures = getattr(s, "punctures", None)
    if not punctures:
        return []
    traj = integrate(field, np.array(punctures), -T, h, tol)
    return _sweep_messages(c, punctures, [traj.path(k) for k in range(len(punctures))])


@dataclass
class InvariantBundle:
    turaev: RingElement
    whitney: RingElement
    shift_T: RingElement
    index_T: RingElement | None
    scalar_w: int
    gamma_class: GroupElement | FreeLoopClass
    T: float

    @property
    def based(self) -> bool:
        return self.index_T is not None

    def lhs(self) -> RingElement:
        return self.turaev

    def rhs(self) -> RingElement:
        rhs = self.shift_T - self.whitney
        if self.index_T is not None:
            rhs = rhs + self.index_T.scale(2)
        return rhs

    def holds(self) -> bool:
        return self.lhs() == self.rhs()


def based_bundle(c: Curve, field, s, T: float, h: float | None = None,
                 tol: Tolerances = DEFAULT) -> InvariantBundle:
    detail = base_transversality(c, field(c.base[None])[0], tol)
    if detail:
        raise GenericityError("field-tangent-at-base", detail)
    data = flow_data(c, field, s, T, h, tol)
    if data.sweep:
        raise GenericityError("flow-crosses-puncture", data.sweep[0])
    w = relative_winding(field, c)
    g = curve_class(c, s)
    return InvariantBundle(
        turaev=turaev_sum_based(c, s, tol),
        whitney=RingElement.monomial(g, w) if w else RingElement.zero(BASED),
        shift_T=t_shift_sum_based(c, field, s, T, h, tol, data.shift),
        index_T=index_T(c, field, s, T, h, tol, data.semis),
        scalar_w=w,
        gamma_class=g,
        T=T,
    )


def free_bundle(c: Curve, field, s, T: float, h: float | None = None,
                tol: Tolerances = DEFAULT) -> InvariantBundle:
    data = flow_data(c, field, s, T, h, tol, with_semis=False)
    if data.sweep:
        raise GenericityError("flow-crosses-puncture", data.sweep[0])
    w = relative_winding(field, c)
    return InvariantBundle(
        turaev=turaev_sum_free(c, s, tol),
        whitney=whitney_ring_free(c, field, s),
        shift_T=t_shift_sum_free(c, field, s, T, h, tol, data.shift),
        index_T=None,
        scalar_w=w,
        gamma_class=conjugacy_class(curve_class(c, s)),
        T=T,
    )
