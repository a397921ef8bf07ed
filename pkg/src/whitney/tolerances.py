"""Numerical tolerances shared by the geometric pipeline.

Every field can be overridden from the environment with
``WHITNEY_TOL_<FIELD>`` (for example ``WHITNEY_TOL_ANGLE=1e-4``).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    angle: float = 1e-3  # minimum crossing angle, radians
    separation: float = 1e-6  # minimum parameter gap between events
    closure: float = 1e-6  # based curves: |gamma'(0) - gamma'(1)| and |gamma(0) - gamma(1)|
    rk4: float = 1e-9  # local error bound before step halving
    exclusion: float = 1e-4  # pair sums ignore crossings this close to path endpoints
    box: float = 1e6  # trajectories leaving |x|,|y| <= box abort
    transversal: float = 1e-3  # min angle between X(p) and gamma'(p), radians

    @classmethod
    def from_env(cls, **overrides) -> "Tolerances":
        tol = cls()
        env = {}
        for f in fields(cls):
            raw = os.environ.get(f"WHITNEY_TOL_{f.name.upper()}")
            if raw is not None:
                env[f.name] = float(raw)
        env.update({k: v for k, v in overrides.items() if v is not None})
        return replace(tol, **env)


DEFAULT = Tolerances()
