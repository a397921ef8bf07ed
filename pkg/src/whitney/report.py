"""Verification reports, one JSON object per line.

Ring elements are stored in their textual form.  On load the ``equal``
flag is recomputed from ``lhs`` and ``rhs``; the stored value is ignored.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .groupring import RingElement, format_ring, parse_ring


@dataclass
class VerificationReport:
    kind: str  # verify-based | verify-free | classical | pushoff | scan-t
    scene: str
    T: float | None = None
    lhs: str = ""
    rhs: str = ""
    equal: bool = False
    residual: str = "0"
    terms: dict = field(default_factory=dict)
    genericity: dict = field(default_factory=lambda: {"ok": True, "violations": []})
    error: str | None = None
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None and self.equal

    @classmethod
    def from_ring(cls, kind: str, scene: str, T, lhs: RingElement, rhs: RingElement, **kw) -> "VerificationReport":
        diff = lhs - rhs
        return cls(kind, scene, T, format_ring(lhs), format_ring(rhs), diff.is_zero(), format_ring(diff), **kw)

    @classmethod
    def failure(cls, kind: str, scene: str, T, err: Exception, **kw) -> "VerificationReport":
        kind_name = getattr(err, "kind", type(err).__name__)
        detail = getattr(err, "detail", str(err))
        hint = ""
        if kind_name in ("tangential-crossing", "degenerate-sampling", "base-point-hit"):
            hint = "; try a slightly different T or another sample count"
        gen = {"ok": False, "violations": [{"kind": kind_name, "detail": detail}]}
        return cls(kind, scene, T, equal=False, genericity=gen, error=f"{kind_name}: {detail}{hint}", **kw)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "VerificationReport":
        d = json.loads(line)
        rep = cls(**d)
        if rep.error is None:
            rep.equal = recheck(rep.lhs, rep.rhs)
            rep.residual = format_ring(_parse(rep.lhs) - _parse(rep.rhs))
        else:
            rep.equal = False
        return rep


def _parse(text: str) -> RingElement:
    return parse_ring(text) if text else RingElement.zero()


def recheck(lhs: str, rhs: str) -> bool:
    """Equality of two serialised ring elements."""
    return (_parse(lhs) - _parse(rhs)).is_zero()


def read_reports(lines) -> list[VerificationReport]:
    return [VerificationReport.from_json(line) for line in lines if line.strip()]
