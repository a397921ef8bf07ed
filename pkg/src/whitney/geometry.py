"""Polyline segment intersection, planar or modulo the unit lattice."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import GenericityError

_CHUNK = 500_000
_BRUTE_LIMIT = 40_000  # pair count below which the spatial index is not worth building


def segments_of(points, closed: bool, periodic: bool = False) -> np.ndarray:
    """(n_seg, 2, 2) array of segment endpoints.

    For ``periodic`` polylines each segment is the short lift of the step
    between consecutive points, so lattice jumps between points are allowed.
    """
    pts = np.asarray(points, float)
    nxt = np.roll(pts, -1, axis=0) if closed else pts[1:]
    start = pts if closed else pts[:-1]
    d = nxt - start
    if periodic:
        d = d - np.round(d)
    return np.stack([start, start + d], axis=1)


@dataclass
class Hits:
    """Transversal intersections between segments of two polylines."""

    i: np.ndarray  # segment index in first polyline
    s: np.ndarray  # local parameter on that segment, in [0, 1)
    j: np.ndarray
    r: np.ndarray
    point: np.ndarray  # location, in the first polyline's coordinates
    det_sign: np.ndarray  # sign of det(dir_i, dir_j)
    sin_angle: np.ndarray  # |sin| of the crossing angle
    at_vertex: np.ndarray  # crossing within 1e-9 of a segment endpoint (informational)

    def __len__(self):
        return len(self.i)

    def order(self, key) -> "Hits":
        idx = np.argsort(key, kind="stable")
        return Hits(*(getattr(self, f)[idx] for f in self.__dataclass_fields__))


def _empty() -> Hits:
    z = np.zeros(0)
    zi = np.zeros(0, int)
    return Hits(zi, z, zi.copy(), z.copy(), np.zeros((0, 2)), zi.copy(), z.copy(), np.zeros(0, bool))


def intersect(A: np.ndarray, B: np.ndarray, periodic: bool = False, self_closed: bool | None = None) -> Hits:
    """All crossings between segment arrays ``A`` and ``B``.

    A vertex lying exactly on another segment's line is treated as lying
    on its left, a fixed infinitesimal perturbation, so a polyline passing
    through a vertex is counted once and a touching vertex zero or two times.  When ``self_closed`` is
    not None, ``B`` is ``A`` itself and only pairs ``j >= i + 2`` are
    considered (excluding the wrap-around neighbour pair when closed).
    """
    if len(A) == 0 or len(B) == 0:
        return _empty()
    if periodic:
        ext = max(np.abs(A[:, 1] - A[:, 0]).max(), np.abs(B[:, 1] - B[:, 0]).max())
        if ext >= 0.45:
            raise ValueError("segments too long for periodic intersection")
    if len(A) * len(B) > _BRUTE_LIMIT:
        ci, cj = _candidate_pairs(A, B, periodic)
        return _solve(A, B, ci, cj, periodic, self_closed)
    out = []
    rows = max(1, _CHUNK // len(B))
    for lo in range(0, len(A), rows):
        out.append(_intersect_chunk(A, B, lo, min(len(A), lo + rows), periodic, self_closed))
    return _concat(out)


def _concat(parts) -> Hits:
    return Hits(*(np.concatenate([getattr(h, f) for h in parts]) for f in Hits.__dataclass_fields__))


def _candidate_pairs(A, B, periodic):
    """Segment pairs whose midpoints are close enough for the segments to meet."""
    ma, mb = 0.5 * (A[:, 0] + A[:, 1]), 0.5 * (B[:, 0] + B[:, 1])
    ra = 0.5 * np.hypot(*(A[:, 1] - A[:, 0]).T)
    rb = 0.5 * np.hypot(*(B[:, 1] - B[:, 0]).T)
    radius = float(ra.max() + rb.max()) * (1 + 1e-9) + 1e-12
    box = None
    if periodic:
        ma, mb, box = ma - np.floor(ma), mb - np.floor(mb), 1.0
        ma[ma >= 1.0] = 0.0
        mb[mb >= 1.0] = 0.0
    ta, tb = cKDTree(ma, boxsize=box), cKDTree(mb, boxsize=box)
    pairs = ta.sparse_distance_matrix(tb, radius, output_type="ndarray")
    ci, cj = pairs["i"].astype(int), pairs["j"].astype(int)
    return ci, cj


def _intersect_chunk(A, B, lo, hi, periodic, self_closed) -> Hits:
    a0, a1 = A[lo:hi, None, 0], A[lo:hi, None, 1]
    b0, b1 = B[None, :, 0], B[None, :, 1]
    if periodic:
        shift = np.round(0.5 * (a0 + a1) - 0.5 * (b0 + b1))
        b0 = b0 + shift
        b1 = b1 + shift
    amin, amax = np.minimum(a0, a1), np.maximum(a0, a1)
    bmin, bmax = np.minimum(b0, b1), np.maximum(b0, b1)
    cand = np.all((amin <= bmax) & (bmin <= amax), axis=-1)
    ci, cj = np.nonzero(cand)
    return _solve(A, B, ci + lo, cj, periodic, self_closed)


def _solve(A, B, ci, cj, periodic, self_closed) -> Hits:
    if self_closed is not None:
        ok = cj >= ci + 2
        if self_closed:
            ok &= ~((ci == 0) & (cj == len(B) - 1))
        ci, cj = ci[ok], cj[ok]
    if len(ci) == 0:
        return _empty()
    p = A[ci, 0]
    e = A[ci, 1] - p
    q = B[cj, 0]
    f = B[cj, 1] - q
    if periodic:
        q = q + np.round(p + 0.5 * e - q - 0.5 * f)
    den = e[:, 0] * f[:, 1] - e[:, 1] * f[:, 0]
    w = q - p
    # orientation predicates with 0 read as "left": a vertex lying exactly on the
    # other segment's line is pushed to the same side from both of its segments,
    # so crossings through vertices are counted exactly once
    o1 = _left(e, w)
    o2 = _left(e, w + f)
    o3 = _left(f, -w)
    o4 = _left(f, e - w)
    _reject_overlaps(e, f, w, den)
    hit = (o1 != o2) & (o3 != o4) & (den != 0)
    ci, cj, e, f, den, p, w = ci[hit], cj[hit], e[hit], f[hit], den[hit], p[hit], w[hit]
    s = np.clip((w[:, 0] * f[:, 1] - w[:, 1] * f[:, 0]) / den, 0.0, _BELOW_ONE)
    r = np.clip((w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / den, 0.0, _BELOW_ONE)
    order = np.lexsort((cj, ci))
    ci, cj, s, r, e, f, den, p = (x[order] for x in (ci, cj, s, r, e, f, den, p))
    norm = np.hypot(e[:, 0], e[:, 1]) * np.hypot(f[:, 0], f[:, 1])
    vtx = 1e-9
    at_vertex = (s < vtx) | (s > 1 - vtx) | (r < vtx) | (r > 1 - vtx)
    return Hits(ci, s, cj, r, p + s[:, None] * e, np.sign(den).astype(int), np.abs(den) / norm, at_vertex)


_BELOW_ONE = float(np.nextafter(1.0, 0.0))


def _reject_overlaps(e, f, w, den):
    """Collinear segments sharing a stretch have no well-defined crossing count."""
    ee = np.einsum("ij,ij->i", e, e)
    line = (den == 0) & (e[:, 0] * w[:, 1] - e[:, 1] * w[:, 0] == 0) & (ee > 0)
    if not line.any():
        return
    e, f, w, ee = e[line], f[line], w[line], ee[line]
    a = np.einsum("ij,ij->i", w, e) / ee
    b = np.einsum("ij,ij->i", w + f, e) / ee
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    if np.any(np.minimum(hi, 1.0) - np.maximum(lo, 0.0) > 0):
        raise GenericityError("degenerate-sampling", "two sampled segments overlap along a line")


def _left(d, v) -> np.ndarray:
    """True where ``v`` is on the left of direction ``d`` or exactly on its line."""
    return d[:, 0] * v[:, 1] - d[:, 1] * v[:, 0] >= 0
