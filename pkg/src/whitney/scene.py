"""Scene files: one surface, one curve, one field and the shift durations.

A scene is plain JSON::

    {"name": "...",
     "surface": {"type": "punctured_plane", "punctures": [[0, 0]], "base": [1.4, 0]},
     "curve": {"kind": "expr", "x": "...", "y": "...", "samples": 512},
     "field": {"kind": "radial", "center": [0, 0], "f": "1"},
     "based": true, "T": [0.3, 1.0], "epsilon": 0.001}

For based scenes the surface base point is taken from the curve, so the
``base`` entry may be omitted.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .curve import Curve, ExprCurve, PointsCurve, sample_curve
from .errors import SceneError
from .flow import VectorFieldSpec, field_from_dict
from .surface import FlatTorus, PuncturedPlane, SurfaceModel, surface_from_dict
from .tolerances import Tolerances


def curve_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "expr":
        return ExprCurve(d["x"], d["y"])
    if kind == "points":
        return PointsCurve(tuple(tuple(map(float, p)) for p in d["data"]))
    raise SceneError(f"unknown curve kind {kind!r}")


def _start_point(curve) -> list[float]:
    if isinstance(curve, PointsCurve):
        return list(curve.data[0])
    return [float(v) for v in curve.point(np.zeros(1))[0]]


@dataclass(frozen=True)
class Scene:
    surface: SurfaceModel
    curve: ExprCurve | PointsCurve
    field: VectorFieldSpec
    based: bool = True
    T: tuple[float, ...] = (1.0,)
    epsilon: float = 1e-3
    samples: int = 512
    rk4_step: float | None = None  # fixed step; overrides rk4_steps
    rk4_steps: int = 512  # steps per shift when no fixed step is set
    seed: int | None = None
    tolerances: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        T = (self.T,) if isinstance(self.T, (int, float)) else tuple(self.T)
        if not T or any(not (t > 0 and math.isfinite(t)) for t in T):
            raise SceneError("T must be a positive duration or a non-empty list of them")
        object.__setattr__(self, "T", tuple(float(t) for t in T))
        if self.rk4_step is not None and not self.rk4_step > 0:
            raise SceneError("rk4_step must be positive")
        if self.rk4_steps < 1:
            raise SceneError("rk4_steps must be at least 1")
        if not self.epsilon > 0:
            raise SceneError("epsilon must be positive")

    @property
    def periodic(self) -> bool:
        return isinstance(self.surface, FlatTorus)

    def step(self, T: float) -> float:
        """RK4 base step for a shift of duration ``T``."""
        return self.rk4_step if self.rk4_step is not None else abs(T) / self.rk4_steps

    def tol(self) -> Tolerances:
        return Tolerances.from_env(**self.tolerances)

    def sample(self, samples: int | None = None) -> Curve:
        return sample_curve(self.curve, samples or self.samples, self.based, self.periodic, tol=self.tol())

    def resolved_surface(self, c: Curve) -> SurfaceModel:
        """The surface with its base point moved to the curve's base point."""
        if not self.based:
            return self.surface
        base = tuple(map(float, c.base))
        if isinstance(self.surface, PuncturedPlane):
            return PuncturedPlane(self.surface.punctures, base)
        return replace(self.surface, base=base)

    def with_(self, **changes) -> "Scene":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        curve = self.curve.to_dict()
        if isinstance(self.curve, ExprCurve):
            curve["samples"] = self.samples
        out = {
            "name": self.name,
            "surface": self.surface.to_dict(),
            "curve": curve,
            "field": self.field.to_dict(),
            "based": self.based,
            "T": list(self.T),
            "epsilon": self.epsilon,
        }
        if self.rk4_step is not None:
            out["rk4_step"] = self.rk4_step
        if self.rk4_steps != 512:
            out["rk4_steps"] = self.rk4_steps
        if self.seed is not None:
            out["seed"] = self.seed
        if self.tolerances:
            out["tolerances"] = dict(self.tolerances)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        try:
            curve_d = d["curve"]
            curve = curve_from_dict(curve_d)
            surf_d = dict(d.get("surface", {"type": "plane"}))
            surf_d.setdefault("base", _start_point(curve))
            return cls(
                surface=surface_from_dict(surf_d),
                curve=curve,
                field=field_from_dict(d["field"]),
                based=bool(d.get("based", True)),
                T=d.get("T", 1.0),
                epsilon=float(d.get("epsilon", 1e-3)),
                samples=int(curve_d.get("samples", 512)),
                rk4_step=d.get("rk4_step"),
                rk4_steps=int(d.get("rk4_steps", 512)),
                seed=d.get("seed"),
                tolerances=dict(d.get("tolerances", {})),
                name=d.get("name", ""),
            )
        except KeyError as e:
            raise SceneError(f"scene is missing {e.args[0]!r}") from None
        except (TypeError, ValueError) as e:
            raise SceneError(str(e)) from e

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "Scene":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise SceneError(f"invalid JSON: {e}") from e


def load_scene(path: str | Path) -> Scene:
    """Read a scene file; bare names resolve to the bundled golden scenes."""
    p = Path(path)
    if not p.exists() and not p.suffix:
        return golden_scene(str(path))
    scene = Scene.loads(p.read_text())
    return scene if scene.name else scene.with_(name=p.stem)


def golden_names() -> list[str]:
    root = resources.files("whitney") / "scenes"
    return sorted(f.name[:-5] for f in root.iterdir() if f.name.endswith(".json"))


def golden_scene(name: str) -> Scene:
    f = resources.files("whitney") / "scenes" / f"{name}.json"
    if not f.is_file():
        raise SceneError(f"no bundled scene named {name!r}; have {', '.join(golden_names())}")
    scene = Scene.loads(f.read_text())
    return scene if scene.name else scene.with_(name=name)


# random scenes

def _fourier_curve(rng, terms: int) -> ExprCurve:
    parts = {"x": [], "y": []}
    for k in range(1, terms + 1):
        for axis in ("x", "y"):
            a, b = rng.normal(0.0, 1.0 / k, 2)
            parts[axis].append(f"{a:.4f}*cos({2 * k}*pi*t) + {b:.4f}*sin({2 * k}*pi*t)")
    return ExprCurve(" + ".join(parts["x"]), " + ".join(parts["y"]))


def _pinned_field(rng, punctures) -> VectorFieldSpec:
    """A wavy field whose only zeros are the punctures.

    The factor d^2 / (1 + d^2) per puncture makes each puncture a fixed
    point, so no trajectory can be carried across it.
    """
    ang = rng.uniform(0, 2 * math.pi)
    cx, cy = math.cos(ang), math.sin(ang)
    amp = rng.uniform(0.0, 0.6)
    kx, ky, ph = rng.normal(0, 1.5), rng.normal(0, 1.5), rng.uniform(0, 2 * math.pi)
    wave = f"{amp:.4f}*sin({kx:.4f}*x + {ky:.4f}*y + {ph:.4f})"
    pin = " * ".join(
        f"((x - {px:.4f})^2 + (y - {py:.4f})^2) / (1 + (x - {px:.4f})^2 + (y - {py:.4f})^2)"
        for px, py in punctures
    )
    return field_from_dict({
        "kind": "expr",
        "fx": f"({cx:.4f} + {wave}) * {pin}",
        "fy": f"({cy:.4f} - {wave}) * {pin}",
    })


def random_scene(seed: int, attempt: int = 0, samples: int = 256, based: bool = True) -> Scene:
    """Draw a random punctured-plane scene (1 to 3 punctures, trigonometric curve).

    ``attempt`` indexes rejection redraws for the same seed.
    """
    rng = np.random.default_rng([seed, attempt])
    k = int(rng.integers(1, 4))
    punctures = tuple(tuple(float(round(v, 4)) for v in rng.uniform(-1.2, 1.2, 2)) for _ in range(k))
    curve = _fourier_curve(rng, int(rng.integers(1, 4)))
    fld = _pinned_field(rng, punctures)
    T = float(round(rng.uniform(0.05, 0.8), 4))
    return Scene(PuncturedPlane(punctures, tuple(_start_point(curve))), curve, fld, based, (T,), 1e-3, samples,
                 rk4_steps=128, seed=seed, name=f"random-{seed}-{attempt}")


__all__ = ["Scene", "load_scene", "golden_scene", "golden_names", "random_scene", "curve_from_dict"]
