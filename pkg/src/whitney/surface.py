"""Surface models and the homotopy-class engine.

A closed polyline is mapped to an element of pi_1(surface, p):

* ``Plane``: always the identity.
* ``PuncturedPlane``: the word of signed crossings with a system of
  parallel cut rays, one per puncture (downward by default).  Crossing ray
  ``j`` from left to right emits ``g_j``, right to left emits ``g_j^-1``, so
  a small counter-clockwise loop around puncture ``j`` is ``g_j``.
* ``FlatTorus``: the integer displacement of the lift to the plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GenericityError, WhitneyError
from .groupring import FreeWord, GroupElement, Lattice
from .tolerances import DEFAULT


class LoopError(WhitneyError):
    pass


def orientation_sign(t1, t2, angle_tol: float = DEFAULT.angle) -> int:
    """Sign of det[t1 t2]; raises if the vectors are (nearly) parallel."""
    t1 = np.asarray(t1, float)
    t2 = np.asarray(t2, float)
    det = t1[0] * t2[1] - t1[1] * t2[0]
    n = math.hypot(*t1) * math.hypot(*t2)
    if n == 0 or abs(det) <= n * math.sin(angle_tol):
        raise GenericityError("tangential-crossing", f"tangents {t1} and {t2} are parallel")
    return 1 if det > 0 else -1


def _check_closed(pts: np.ndarray, periodic: bool) -> None:
    if len(pts) < 2:
        raise LoopError("a loop needs at least two points")
    gap = pts[-1] - pts[0]
    if periodic:
        gap = gap - np.round(gap)
    scale = max(1.0, float(np.abs(pts).max()))
    if np.abs(gap).max() > 1e-9 * scale:
        raise LoopError(f"polyline is not closed (gap {gap})")
    seg = np.diff(pts, axis=0)
    if periodic:
        seg = seg - np.round(seg)
    if np.any(np.hypot(seg[:, 0], seg[:, 1]) == 0):
        raise LoopError("degenerate zero-length segment in loop")


@dataclass(frozen=True)
class Plane:
    base: tuple[float, float] = (0.0, 0.0)
    periodic = False
    ngens = 0

    def identity(self) -> GroupElement:
        return FreeWord()

    def loop_class(self, loop) -> GroupElement:
        _check_closed(np.asarray(loop, float), False)
        return FreeWord()

    def to_dict(self):
        return {"type": "plane", "base": list(self.base)}


@dataclass(frozen=True)
class PuncturedPlane:
    punctures: tuple[tuple[float, float], ...]
    base: tuple[float, float] = (0.0, 0.0)
    ray_angle: float = field(default=None)  # radians from straight down; None = choose
    periodic = False

    def __post_init__(self):
        pts = tuple(tuple(map(float, q)) for q in self.punctures)
        if not pts:
            raise ValueError("a punctured plane needs at least one puncture")
        object.__setattr__(self, "punctures", pts)
        object.__setattr__(self, "base", tuple(map(float, self.base)))
        if len(set(pts)) != len(pts):
            raise ValueError("punctures must be pairwise distinct")
        if self.base in pts:
            raise ValueError("the base point cannot be a puncture")
        if self.ray_angle is None:
            object.__setattr__(self, "ray_angle", self._choose_ray_angle())
        elif not self._rays_ok(self.ray_angle):
            raise ValueError("cut rays meet a puncture or the base point")

    @property
    def ngens(self) -> int:
        return len(self.punctures)

    def identity(self) -> GroupElement:
        return FreeWord()

    def _rotate(self, pts: np.ndarray, angle: float) -> np.ndarray:
        # rotate by -angle so the cut direction becomes (0, -1)
        c, s = math.cos(angle), math.sin(angle)
        return np.stack([c * pts[..., 0] + s * pts[..., 1], -s * pts[..., 0] + c * pts[..., 1]], -1)

    def _rays_ok(self, angle: float) -> bool:
        pts = self._rotate(np.array(self.punctures + (self.base,)), angle)
        scale = max(1.0, float(np.abs(pts).max()))
        for j, (cx, cy) in enumerate(pts[:-1]):
            for m, (qx, qy) in enumerate(pts):
                if m != j and abs(qx - cx) < 1e-7 * scale and qy < cy:
                    return False
        return True

    def _choose_ray_angle(self) -> float:
        if self._rays_ok(0.0):
            return 0.0
        rng = np.random.default_rng(0)
        for _ in range(32):
            a = float(rng.uniform(-0.2, 0.2))
            if self._rays_ok(a):
                return a
        raise ValueError("could not find a valid cut-ray system")

    def crossing_events(self, loop) -> list[tuple[float, int]]:
        """(position along polyline, signed generator) for every ray crossing."""
        pts = self._rotate(np.asarray(loop, float), self.ray_angle)
        cuts = self._rotate(np.array(self.punctures), self.ray_angle)
        a, b = pts[:-1, None, :], pts[1:, None, :]
        cx, cy = cuts[None, :, 0], cuts[None, :, 1]
        left_a = a[..., 0] < cx
        left_b = b[..., 0] < cx
        hit = left_a != left_b
        if not hit.any():
            return []
        seg, j = np.nonzero(hit)
        ax, ay = a[seg, 0, 0], a[seg, 0, 1]
        bx, by = b[seg, 0, 0], b[seg, 0, 1]
        s = (cx[0, j] - ax) / (bx - ax)
        y = ay + s * (by - ay)
        scale = max(1.0, float(np.abs(pts).max()))
        if np.any(np.abs(y - cy[0, j]) < 1e-12 * scale):
            raise GenericityError("loop-through-puncture", "loop passes through a puncture")
        below = y < cy[0, j]
        sign = np.where(left_a[seg, j], 1, -1)
        events = sorted(zip((seg + s)[below].tolist(), (sign * (j + 1))[below].tolist()))
        return events

    def loop_class(self, loop) -> GroupElement:
        pts = np.asarray(loop, float)
        _check_closed(pts, False)
        return FreeWord(tuple(g for _, g in self.crossing_events(pts)))

    def to_dict(self):
        return {"type": "punctured_plane", "punctures": [list(q) for q in self.punctures],
                "base": list(self.base)}


@dataclass(frozen=True)
class FlatTorus:
    """R^2 / Z^2 with curves given by coordinates in the covering plane."""

    base: tuple[float, float] = (0.0, 0.0)
    periodic = True
    ngens = 2

    def identity(self) -> GroupElement:
        return Lattice()

    def loop_class(self, loop) -> GroupElement:
        pts = np.asarray(loop, float)
        _check_closed(pts, True)
        d = np.diff(pts, axis=0)
        d -= np.round(d)
        if np.abs(d).max() >= 0.45:
            raise LoopError("torus loop segment too long to lift unambiguously")
        a, b = np.round(d.sum(axis=0)).astype(int)
        return Lattice(int(a), int(b))

    def to_dict(self):
        return {"type": "torus", "base": list(self.base)}


SurfaceModel = Plane | PuncturedPlane | FlatTorus


def surface_from_dict(d: dict) -> SurfaceModel:
    kind = d.get("type")
    base = tuple(d.get("base", (0.0, 0.0)))
    if kind == "plane":
        return Plane(base)
    if kind == "punctured_plane":
        return PuncturedPlane(tuple(map(tuple, d["punctures"])), base)
    if kind == "torus":
        return FlatTorus(base)
    raise ValueError(f"unknown surface type {kind!r}")
