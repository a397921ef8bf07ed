"""SVG pictures of a scene: the curve, its crossings, the shifted copy and the base trajectories."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.figure import Figure

from .curve import Curve, arc, find_double_points, join
from .flow import integrate, tangency_points
from .geometry import intersect, segments_of
from .groupring import format_ring

STYLE = {
    "svg.hashsalt": "whitney",  # stable element ids
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.linewidth": 0.6,
    "path.simplify": False,
}
CURVE = "#1b1b1b"
SHIFT = "#3572b0"
MINUS = "#c0392b"
PLUS = "#27864a"


def _pieces(pts: np.ndarray, periodic: bool) -> list[np.ndarray]:
    """Split a cover polyline into pieces drawn inside the unit square."""
    if not periodic:
        return [pts]
    cell = np.floor(pts)
    out, start = [], 0
    for k in range(1, len(pts)):
        if np.any(cell[k] != cell[k - 1]):
            out.append(pts[start:k + 1] - cell[k - 1])
            start = k
    out.append(pts[start:] - cell[start])
    return out


def _plot(ax, pts, periodic, gid=None, **kw):
    label = kw.pop("label", None)
    pts = np.asarray(pts, float)
    if len(pts) > 1200:
        keep = np.unique(np.r_[np.linspace(0, len(pts) - 1, 1200).astype(int), len(pts) - 1])
        pts = pts[keep]
    for k, piece in enumerate(_pieces(np.asarray(pts, float), periodic)):
        (line,) = ax.plot(piece[:, 0], piece[:, 1], label=label if k == 0 else None, **kw)
        if gid:
            line.set_gid(f"{gid}-{k}")


def _wrap(p, periodic):
    return p - np.floor(p) if periodic else p


def render(scene, out: str | Path, T: float | None = None, bundle=None, report=None,
           tau_loop: bool = True) -> Path:
    """Draw ``scene`` at duration ``T`` (default: its first T) to a file.

    The format follows the suffix of ``out``; SVG output is byte-stable.

    ``bundle`` (an :class:`~whitney.invariants.InvariantBundle`) adds ring
    captions; ``report`` adds the verdict line.
    """
    from matplotlib import rc_context

    c: Curve = scene.sample()
    s = scene.resolved_surface(c)
    periodic = c.periodic
    T = T if T is not None else scene.T[0]
    fld = scene.field
    h = scene.step(T)

    with rc_context(STYLE):
        fig = Figure(figsize=(5.2, 5.2))
        ax = fig.add_subplot(111)
        ax.set_aspect("equal")
        closed = np.vstack([c.points, c.segments[-1][1]])
        _plot(ax, closed, periodic, "curve", color=CURVE, lw=1.2, label=r"$\gamma$")

        traj = integrate(fld, c.points, T, h)
        shifted = traj.end()
        _plot(ax, np.vstack([shifted, shifted[:1] + (np.round(closed[-1] - closed[0]) if periodic else 0)]),
              periodic, "shifted", color=SHIFT, lw=0.9, ls="--", label=r"$\gamma_T$")

        if c.based:
            both = integrate(fld, np.stack([c.base, c.base]), T, h, direction=[-1, 1])
            _plot(ax, both.path(0), periodic, "phi-minus", color=MINUS, lw=1.0, label=r"$\Phi_-$")
            _plot(ax, both.path(1), periodic, "phi-plus", color=PLUS, lw=1.0, label=r"$\Phi_+$")
            for k, (path, rev) in enumerate(((both.path(0), True), (both.path(1), False))):
                hits = intersect(segments_of(path, False, periodic), c.segments, periodic)
                away = np.hypot(*(hits.point - c.base).T) > 1e-9
                for n, pt in enumerate(hits.point[away]):
                    q = _wrap(pt, periodic)
                    ax.plot(*q, "s", ms=3.5, mfc="white", mec=MINUS if rev else PLUS)
                    ax.annotate(f"b{k + 1}.{n + 1}", q, xytext=(4, -9), textcoords="offset points", fontsize=7)
            p = _wrap(c.base, periodic)
            ax.plot(*p, "o", ms=4.5, color=CURVE)
            ax.annotate("p", p, xytext=(5, 4), textcoords="offset points")

        # orientation arrow
        k = len(c.points) // 8
        a, b = c.points[k], c.points[k] + 0.08 * c.tangents[k]
        a = _wrap(a, periodic)
        ax.annotate("", xy=a + (b - c.points[k]), xytext=a,
                    arrowprops={"arrowstyle": "-|>", "color": CURVE, "lw": 1.0})

        dps = find_double_points(c, scene.tol())
        for n, d in enumerate(dps):
            q = _wrap(np.array(d.location), periodic)
            ax.plot(*q, "o", ms=4, mfc="white", mec=CURVE)
            ax.annotate(f"d{n + 1} {'+' if d.sign > 0 else '-'}", q, xytext=(5, 5), textcoords="offset points")
        if tau_loop and dps and c.based:
            d = dps[0]
            loop = join(arc(c, 0.0, d.u), arc(c, d.v, 1.0), periodic=periodic)
            _plot(ax, loop, periodic, "tau", color=CURVE, lw=3.2, alpha=0.35, solid_capstyle="round",
                  label=r"$\tau_{d_1}$")

        for n, (idx, sign) in enumerate(tangency_points(fld, c)):
            q = _wrap(c.points[idx], periodic)
            ax.plot(*q, "^", ms=4, color="#7d3c98")
            ax.annotate(f"a{n + 1} {'+' if sign > 0 else '-'}", q, xytext=(5, -10), textcoords="offset points",
                        fontsize=7, color="#7d3c98")

        for j, q in enumerate(getattr(s, "punctures", ()) or ()):
            ax.plot(*q, "o", ms=6, mfc="white", mec="#555555", mew=1.2)
            ax.annotate(f"g{j + 1}", q, xytext=(-12, 5), textcoords="offset points", color="#555555")
        if periodic:
            ax.set_xlim(0, 1)
            ax.set_ylim(0, 1)
            ax.plot([0, 1, 1, 0, 0], [0, 0, 1, 1, 0], color="#999999", lw=0.6)
        else:
            ax.set_xlim(*_frame(c.points[:, 0], s))
            ax.set_ylim(*_frame(c.points[:, 1], s, axis=1))
        ax.legend(loc="upper right", fontsize=7, frameon=False)
        ax.set_title(scene.name or "scene", fontsize=10)
        lines = _caption(bundle, report, T)
        if lines:
            fig.text(0.02, 0.01, "\n".join(lines), fontsize=7, family="monospace", va="bottom")
            fig.subplots_adjust(bottom=0.08 + 0.025 * len(lines))
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        fmt = out.suffix[1:].lower() or "svg"
        fig.savefig(out, format=fmt, metadata={"Date": None} if fmt == "svg" else None)
    return out


def _frame(v, s, axis=0):
    """Axis limits around the curve and punctures; trajectories may leave them."""
    pts = [v] + [np.array([q[axis]]) for q in getattr(s, "punctures", ()) or ()]
    lo, hi = float(min(p.min() for p in pts)), float(max(p.max() for p in pts))
    pad = max(0.6 * (hi - lo), 0.3)
    return lo - pad, hi + pad


def _caption(bundle, report, T) -> list[str]:
    lines = []
    if bundle is not None:
        lines.append(f"<gamma> = {format_ring(bundle.turaev)}")
        lines.append(f"w(gamma,X) = {format_ring(bundle.whitney)}    [gamma] = {bundle.gamma_class}")
        lines.append(f"<gamma>_T = {format_ring(bundle.shift_T)}    T = {T:g}")
        if bundle.index_T is not None:
            lines.append(f"ind_T = {format_ring(bundle.index_T)}")
    if report is not None:
        lines.append(f"{report.kind}: lhs = {report.lhs}, rhs = {report.rhs}, equal = {report.equal}")
    return lines
