"""Exact arithmetic in fundamental groups and their integral group rings.

Two kinds of group elements are supported:

* :class:`FreeWord`: a reduced word in a free group on ``k`` generators,
  stored as a tuple of signed generator indices (``2`` is ``g2``, ``-2`` is
  ``g2^-1``).
* :class:`Lattice`: an element ``(a, b)`` of the free abelian group of rank
  two (the fundamental group of the flat torus).

:class:`RingElement` is a sparse formal sum over group elements (based
loops) or over :class:`FreeLoopClass` keys (free loops).  Coefficients are
stored doubled so that half-integers are exact.

Generators are numbered in the order the surface lists its punctures.  A
free loop class is represented by the least rotation of its cyclic
reduction under g1 < g1^-1 < g2 < g2^-1 < ..., and sums print in
shortlex key order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union


class GroupError(ValueError):
    """Raised for variant or basis mismatches in group/ring operations."""


def _reduce(letters: Iterable[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for a in letters:
        if a == 0:
            raise GroupError("generator index 0 is not allowed")
        if stack and stack[-1] == -a:
            stack.pop()
        else:
            stack.append(a)
    return tuple(stack)


def _letter_key(a: int) -> tuple[int, int]:
    # g1 < g1^-1 < g2 < g2^-1 < ...
    return (abs(a), 0 if a > 0 else 1)


@dataclass(frozen=True)
class FreeWord:
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _reduce(self.letters))

    @classmethod
    def gen(cls, i: int, power: int = 1) -> "FreeWord":
        return cls((i if power > 0 else -i,) * abs(power))

    def __mul__(self, other):
        return multiply(self, other)

    def inverse(self) -> "FreeWord":
        return FreeWord(tuple(-a for a in reversed(self.letters)))

    def is_identity(self) -> bool:
        return not self.letters

    def __len__(self):
        return len(self.letters)

    def sort_key(self):
        return (0, len(self.letters), tuple(_letter_key(a) for a in self.letters))

    def __str__(self):
        if not self.letters:
            return "1"
        parts = []
        run, count = self.letters[0], 1
        for a in self.letters[1:] + (0,):
            if a == run:
                count += 1
                continue
            p = count if run > 0 else -count
            parts.append(f"g{abs(run)}" + ("" if p == 1 else f"^{p}"))
            run, count = a, 1
        return ".".join(parts)


@dataclass(frozen=True)
class Lattice:
    a: int = 0
    b: int = 0

    def __mul__(self, other):
        return multiply(self, other)

    def inverse(self) -> "Lattice":
        return Lattice(-self.a, -self.b)

    def is_identity(self) -> bool:
        return self.a == 0 and self.b == 0

    def sort_key(self):
        return (1, abs(self.a) + abs(self.b), (self.a, self.b))

    def __str__(self):
        return f"({self.a},{self.b})"


GroupElement = Union[FreeWord, Lattice]


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    if isinstance(a, FreeWord) and isinstance(b, FreeWord):
        return FreeWord(a.letters + b.letters)
    if isinstance(a, Lattice) and isinstance(b, Lattice):
        return Lattice(a.a + b.a, a.b + b.b)
    raise GroupError(f"variant mismatch: {type(a).__name__} * {type(b).__name__}")


def cyclically_reduce(w: FreeWord) -> FreeWord:
    letters = list(w.letters)
    i, j = 0, len(letters) - 1
    while i < j and letters[i] == -letters[j]:
        i += 1
        j -= 1
    return FreeWord(tuple(letters[i : j + 1]))


@dataclass(frozen=True)
class FreeLoopClass:
    """Conjugacy class of a group element, keyed by a canonical representative."""

    canonical: GroupElement

    def is_identity(self) -> bool:
        return self.canonical.is_identity()

    def sort_key(self):
        return self.canonical.sort_key()

    def __str__(self):
        return f"[{self.canonical}]"


def conjugacy_class(a: GroupElement) -> FreeLoopClass:
    """Canonical free-loop class: least cyclic rotation of the cyclic reduction."""
    if isinstance(a, Lattice):
        return FreeLoopClass(a)
    w = cyclically_reduce(a).letters
    if not w:
        return FreeLoopClass(FreeWord())
    keys = [_letter_key(x) for x in w]
    best = min(range(len(w)), key=lambda r: keys[r:] + keys[:r])
    return FreeLoopClass(FreeWord(w[best:] + w[:best]))


Key = Union[FreeWord, Lattice, FreeLoopClass]
BASED = "based"
FREE = "free"


def _coerce_half(c) -> int:
    """Return ``2*c`` as an int, for ``c`` an int, Fraction or half-integer float."""
    doubled = Fraction(c) * 2
    if doubled.denominator != 1:
        raise GroupError(f"coefficient {c} is not a half-integer")
    return int(doubled)


class RingElement:
    """Immutable sparse element of Z[pi] (or (1/2)Z[pi]) or Z[Omega].

    ``terms`` maps keys to *doubled* integer coefficients.
    """

    __slots__ = ("_terms", "basis")

    def __init__(self, terms: Mapping[Key, int] | None = None, basis: str = BASED):
        if basis not in (BASED, FREE):
            raise GroupError(f"unknown basis tag {basis!r}")
        clean = {}
        for k, c in (terms or {}).items():
            want = FreeLoopClass if basis == FREE else (FreeWord, Lattice)
            if not isinstance(k, want):
                raise GroupError(f"key {k!r} does not belong to the {basis} basis")
            if c:
                clean[k] = int(c)
        self._terms = clean
        self.basis = basis

    @classmethod
    def zero(cls, basis: str = BASED) -> "RingElement":
        return cls({}, basis)

    @classmethod
    def monomial(cls, key: Key, coeff=1) -> "RingElement":
        basis = FREE if isinstance(key, FreeLoopClass) else BASED
        return cls({key: _coerce_half(coeff)}, basis)

    @property
    def terms(self) -> dict[Key, int]:
        return dict(self._terms)

    def coefficient(self, key: Key) -> Fraction:
        return Fraction(self._terms.get(key, 0), 2)

    def items(self):
        """(key, coefficient as Fraction) pairs in canonical order."""
        for k in sorted(self._terms, key=lambda k: k.sort_key()):
            yield k, Fraction(self._terms[k], 2)

    def support(self) -> set:
        return set(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_integral(self) -> bool:
        return all(c % 2 == 0 for c in self._terms.values())

    def _check(self, other: "RingElement"):
        if not isinstance(other, RingElement):
            return NotImplemented
        if self.basis != other.basis and self._terms and other._terms:
            raise GroupError(f"basis mismatch: {self.basis} vs {other.basis}")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0) + c
        basis = self.basis if self._terms else other.basis
        return RingElement(out, basis)

    def __neg__(self):
        return RingElement({k: -c for k, c in self._terms.items()}, self.basis)

    def __sub__(self, other):
        if not isinstance(other, RingElement):
            return NotImplemented
        return self + (-other)

    def scale(self, c) -> "RingElement":
        """Multiply by a half-integer scalar; the result must stay in (1/2)Z."""
        out = {}
        for k, v in self._terms.items():
            num = Fraction(v) * Fraction(c)
            if num.denominator != 1:
                raise GroupError(f"scaling by {c} leaves (1/2)Z")
            out[k] = int(num)
        return RingElement(out, self.basis)

    def __mul__(self, c):
        if isinstance(c, (int, Fraction)):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def to_free(self) -> "RingElement":
        """Project a based element to free loop classes."""
        if self.basis == FREE:
            return self
        out: dict = {}
        for k, c in self._terms.items():
            cls = conjugacy_class(k)
            out[cls] = out.get(cls, 0) + c
        return RingElement(out, FREE)

    def __eq__(self, other):
        if not isinstance(other, RingElement):
            return NotImplemented
        if not self._terms and not other._terms:
            return True
        return self.basis == other.basis and self._terms == other._terms

    def __hash__(self):
        return hash((self.basis, frozenset(self._terms.items())))

    def __str__(self):
        return format_ring(self)

    def __repr__(self):
        return f"RingElement({format_ring(self)!r}, basis={self.basis!r})"


def _format_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_ring(x: RingElement) -> str:
    """Render as ``c1*w1 + c2*w2`` in canonical (shortlex) key order."""
    parts = [f"{_format_coeff(c)}*{k}" for k, c in x.items()]
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


_TERM_RE = re.compile(r"^\s*(-?\d+(?:/2)?)\s*\*\s*(\S+)\s*$")
_LETTER_RE = re.compile(r"^g(\d+)(?:\^(-?\d+))?$")


def parse_group_element(text: str) -> GroupElement:
    text = text.strip()
    if text.startswith("("):
        a, b = text.strip("()").split(",")
        return Lattice(int(a), int(b))
    if text == "1":
        return FreeWord()
    letters: list[int] = []
    for part in text.split("."):
        m = _LETTER_RE.match(part)
        if not m:
            raise GroupError(f"bad word component {part!r}")
        i, p = int(m.group(1)), int(m.group(2) or 1)
        if i < 1 or p == 0:
            raise GroupError(f"bad word component {part!r}")
        letters.extend([i if p > 0 else -i] * abs(p))
    return FreeWord(tuple(letters))


def parse_ring(text: str, basis: str | None = None) -> RingElement:
    """Inverse of :func:`format_ring`.

    Free-loop keys are written in brackets, ``[g1.g2]``.  For the zero
    element the basis cannot be read off the text; pass ``basis``.
    """
    text = text.strip()
    if text == "0":
        return RingElement.zero(basis or BASED)
    # split on top-level " + " / " - " (coefficients carry their own sign)
    chunks = re.split(r"\s+([+-])\s+", text)
    terms = [chunks[0]]
    for sign, body in zip(chunks[1::2], chunks[2::2]):
        terms.append(body if sign == "+" else "-" + body)
    out = RingElement.zero(basis or BASED)
    for t in terms:
        m = _TERM_RE.match(t)
        if not m:
            raise GroupError(f"bad ring term {t!r}")
        coeff = Fraction(m.group(1))
        word = m.group(2)
        if word.startswith("["):
            key: Key = FreeLoopClass(parse_group_element(word[1:-1]))
        else:
            key = parse_group_element(word)
        out = out + RingElement.monomial(key, coeff)
    return out


def is_pushoff_trivial(x: RingElement, gamma_class: FreeLoopClass) -> bool:
    """True iff ``x == c*([gamma] - 1)`` for some integer ``c``."""
    if x.is_zero():
        return True
    if x.basis != FREE:
        raise GroupError("push-off test needs a free-basis element")
    trivial = conjugacy_class(
        Lattice() if isinstance(gamma_class.canonical, Lattice) else FreeWord()
    )
    if x.support() - {gamma_class, trivial}:
        return False
    if gamma_class == trivial:
        # Z[[gamma]-1] = 0 when gamma is null-homotopic.
        return False
    c = x.coefficient(gamma_class)
    return c.denominator == 1 and x.coefficient(trivial) == -c
