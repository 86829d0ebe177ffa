"""Continuous signatures: sorts with diameter bounds, symbols with moduli.

A modulus of uniform continuity is kept as an exact piecewise-linear map
on ``[0, 1]``.  The class is closed under everything the rest of the
package needs (composition, pointwise minimum, rescaling), so derived
moduli of terms and formulas stay exact.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .errors import DomainError, InputError
from .rational import Fraction, RationalLike, as_fraction, format_fraction

__all__ = [
    "Modulus",
    "Sort",
    "FunctionSymbol",
    "RelationSymbol",
    "Signature",
    "modulus_eval",
    "modulus_compose_term",
    "modulus_invert",
    "modulus_threshold",
    "signature_validate",
    "RESERVED_WORDS",
    "DEFAULT_GRID_STEP",
]

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)
DEFAULT_GRID_STEP = Fraction(1, 64)

RESERVED_WORDS = frozenset({"sup", "inf", "abs", "neg", "max", "min", "d"})
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

Points = tuple[tuple[Fraction, Fraction], ...]


# --------------------------------------------------------------------------
# piecewise-linear kernels; every list handled here starts at x=0 and ends at x=1


def _eval(points: Points, x: Fraction) -> Fraction:
    if x <= 0:
        return points[0][1]
    if x >= 1:
        return points[-1][1]
    xs = [p[0] for p in points]
    i = bisect_right(xs, x)
    x0, y0 = points[i - 1]
    if x0 == x:
        return y0
    x1, y1 = points[i]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def _simplify(points: Iterable[tuple[Fraction, Fraction]]) -> Points:
    """Sort, deduplicate and drop collinear interior points."""
    pts = sorted(set(points))
    out: list[tuple[Fraction, Fraction]] = []
    for p in pts:
        while len(out) >= 2:
            (x0, y0), (x1, y1) = out[-2], out[-1]
            if (y1 - y0) * (p[0] - x0) == (p[1] - y0) * (x1 - x0):
                out.pop()
            else:
                break
        out.append(p)
    return tuple(out)


def _preimages(points: Points, level: Fraction) -> list[Fraction]:
    """Inputs at which the (monotone) map crosses ``level`` strictly inside a segment."""
    out = []
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        if y0 < level < y1:
            out.append(x0 + (level - y0) * (x1 - x0) / (y1 - y0))
    return out


def _compose(outer: Points, inner: Points) -> Points:
    """``eps -> outer(inner(eps))``."""
    xs = {x for x, _ in inner}
    for bx, _ in outer:
        xs.update(_preimages(inner, bx))
    return _simplify((x, _eval(outer, _eval(inner, x))) for x in xs)


def _pointwise_min(funcs: Sequence[Points]) -> Points:
    xs = sorted({x for f in funcs for x, _ in f})
    extra = []
    for a, b in zip(xs, xs[1:]):
        ends = [(_eval(f, a), _eval(f, b)) for f in funcs]
        for i in range(len(ends)):
            for j in range(i + 1, len(ends)):
                (ya, yb), (za, zb) = ends[i], ends[j]
                da, db = ya - za, yb - zb
                if (da < 0 < db) or (db < 0 < da):
                    extra.append(a + (b - a) * da / (da - db))
    grid = sorted(set(xs).union(extra))
    return _simplify((x, min(_eval(f, x) for f in funcs)) for x in grid)


def _scale_input(points: Points, factor: Fraction) -> Points:
    """``eps -> delta(min(factor * eps, 1))`` for ``factor > 0``."""
    xs = {x / factor for x, _ in points if x / factor <= 1}
    xs.add(ONE)
    return _simplify((x, _eval(points, min(factor * x, ONE))) for x in xs)


def _scale_output(points: Points, factor: Fraction) -> Points:
    return _simplify((x, y * factor) for x, y in points)


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Modulus:
    """Nondecreasing piecewise-linear map ``[0,1] -> [0,1]`` with ``delta(0) = 0``.

    The map is linear between breakpoints and constant after the last one.
    Breakpoints are stored in canonical form (extended to ``x = 1``, collinear
    points removed), so equal functions compare equal.
    """

    breakpoints: Points

    def __init__(self, breakpoints: Iterable[tuple[RationalLike, RationalLike]]):
        pts = [(as_fraction(x), as_fraction(y)) for x, y in breakpoints]
        if not pts:
            raise DomainError("a modulus needs at least one breakpoint")
        if pts[0] != (ZERO, ZERO):
            raise DomainError(f"a modulus must start at (0, 0), got {pts[0]}")
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x1 <= x0:
                raise DomainError("breakpoint inputs must be strictly increasing")
            if y1 < y0:
                raise DomainError("a modulus must be nondecreasing")
        for x, y in pts:
            if not (0 <= x <= 1 and 0 <= y <= 1):
                raise DomainError(f"breakpoint ({x}, {y}) outside [0,1]^2")
        if pts[-1][0] < 1:
            pts.append((ONE, pts[-1][1]))
        object.__setattr__(self, "breakpoints", _simplify(pts))

    @classmethod
    def _raw(cls, points: Points) -> "Modulus":
        return cls(points)

    @classmethod
    def identity(cls) -> "Modulus":
        return cls([(0, 0), (1, 1)])

    @classmethod
    def linear(cls, slope: RationalLike) -> "Modulus":
        """``eps -> slope * eps`` capped at 1."""
        s = as_fraction(slope)
        if s < 0:
            raise DomainError("slope must be nonnegative")
        if s <= 1:
            return cls([(0, 0), (1, s)])
        return cls([(0, 0), (1 / s, 1)])

    @classmethod
    def zero(cls) -> "Modulus":
        return cls([(0, 0), (1, 0)])

    def __call__(self, e: RationalLike) -> Fraction:
        return modulus_eval(self, e)

    def at(self, x: Fraction) -> Fraction:
        """Evaluate with the input clamped into ``[0, 1]``."""
        return _eval(self.breakpoints, x)

    def compose_after(self, inner: "Modulus") -> "Modulus":
        return Modulus._raw(_compose(self.breakpoints, inner.breakpoints))

    def scale_input(self, factor: RationalLike) -> "Modulus":
        f = as_fraction(factor)
        if f <= 0:
            raise DomainError("input factor must be positive")
        return Modulus._raw(_scale_input(self.breakpoints, f))

    def scale_output(self, factor: RationalLike) -> "Modulus":
        f = as_fraction(factor)
        if not 0 <= f <= 1:
            raise DomainError("output factor must lie in [0, 1]")
        return Modulus._raw(_scale_output(self.breakpoints, f))

    @staticmethod
    def minimum(mods: Sequence["Modulus"]) -> "Modulus":
        if not mods:
            raise DomainError("minimum of no moduli")
        if len(mods) == 1:
            return mods[0]
        return Modulus._raw(_pointwise_min([m.breakpoints for m in mods]))

    def to_json(self) -> list[list[str]]:
        return [[format_fraction(x), format_fraction(y)] for x, y in self.breakpoints]

    @classmethod
    def from_json(cls, data) -> "Modulus":
        return cls([(as_fraction(x), as_fraction(y)) for x, y in data])

    def __repr__(self) -> str:
        inner = ", ".join(f"({x}, {y})" for x, y in self.breakpoints)
        return f"Modulus([{inner}])"


def modulus_eval(m: Modulus, e: RationalLike) -> Fraction:
    x = as_fraction(e)
    if not 0 <= x <= 1:
        raise DomainError(f"modulus input {x} outside [0, 1]")
    return _eval(m.breakpoints, x)


def modulus_compose_term(f_mod: Modulus, arg_mods: Sequence[Modulus]) -> Modulus:
    """Modulus of ``f(t_1, ..., t_n)``: ``eps -> min_k delta_k(delta_f(eps) / 2)``."""
    if not arg_mods:
        raise DomainError("term composition needs at least one argument modulus")
    halved = f_mod.scale_output(HALF)
    return Modulus.minimum([arg.compose_after(halved) for arg in arg_mods])


def modulus_invert(m: Modulus, h: RationalLike, step: RationalLike = DEFAULT_GRID_STEP) -> Fraction | None:
    """Least grid value ``eps`` with ``delta(eps) > h``, or None.

    The grid is the multiples of ``step`` in ``[0, 1]`` refined by the
    breakpoints of ``m``.  Two points at distance ``<= h`` then have symbol
    values within the returned ``eps``.
    """
    hh = as_fraction(h)
    st = as_fraction(step)
    if hh < 0:
        raise DomainError("h must be nonnegative")
    if st <= 0:
        raise DomainError("grid step must be positive")
    n = int(1 / st)
    grid = {k * st for k in range(n + 1)}
    grid.add(ONE)
    grid.update(x for x, _ in m.breakpoints)
    for g in sorted(grid):
        if _eval(m.breakpoints, g) > hh:
            return g
    return None


def modulus_threshold(m: Modulus, t: RationalLike) -> Fraction | None:
    """Largest ``eps`` in ``[0,1]`` with ``delta(eps) <= t``, or None when ``delta(1) <= t``.

    A pair of inputs at distance ``t`` is constrained by the modulus exactly
    when this is not None, and then its outputs must differ by at most it.
    """
    tt = as_fraction(t)
    pts = m.breakpoints
    if pts[-1][1] <= tt:
        return None
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if y1 > tt:
            if y0 == y1:  # pragma: no cover - y1 > t >= y0 forces y1 > y0
                return x0
            return x0 + (tt - y0) * (x1 - x0) / (y1 - y0)
    return None  # pragma: no cover


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Sort:
    name: str
    bound: Fraction

    def __init__(self, name: str, bound: RationalLike = 1):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "bound", as_fraction(bound))


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    domain: tuple[str, ...]
    codomain: str
    modulus: Modulus = field(default_factory=Modulus.identity)

    def __init__(self, name: str, domain: Sequence[str], codomain: str, modulus: Modulus | None = None):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "domain", tuple(domain))
        object.__setattr__(self, "codomain", codomain)
        object.__setattr__(self, "modulus", modulus if modulus is not None else Modulus.identity())

    @property
    def arity(self) -> int:
        return len(self.domain)


@dataclass(frozen=True)
class RelationSymbol:
    name: str
    domain: tuple[str, ...]
    bound: Fraction
    modulus: Modulus

    def __init__(self, name: str, domain: Sequence[str], bound: RationalLike = 1, modulus: Modulus | None = None):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "domain", tuple(domain))
        object.__setattr__(self, "bound", as_fraction(bound))
        object.__setattr__(self, "modulus", modulus if modulus is not None else Modulus.identity())

    @property
    def arity(self) -> int:
        return len(self.domain)


@dataclass(frozen=True)
class Signature:
    """A metric language.  Every sort implicitly owns a metric symbol ``d[S]``."""

    sorts: tuple[Sort, ...] = ()
    functions: tuple[FunctionSymbol, ...] = ()
    relations: tuple[RelationSymbol, ...] = ()

    def __init__(self, sorts=(), functions=(), relations=()):
        object.__setattr__(self, "sorts", tuple(sorts))
        object.__setattr__(self, "functions", tuple(functions))
        object.__setattr__(self, "relations", tuple(relations))

    def __hash__(self) -> int:
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.sorts, self.functions, self.relations))
            self.__dict__["_hash"] = h
        return h

    @cached_property
    def sort_map(self) -> dict[str, Sort]:
        return {s.name: s for s in self.sorts}

    @cached_property
    def function_map(self) -> dict[str, FunctionSymbol]:
        return {f.name: f for f in self.functions}

    @cached_property
    def relation_map(self) -> dict[str, RelationSymbol]:
        return {r.name: r for r in self.relations}

    def sort(self, name: str) -> Sort:
        try:
            return self.sort_map[name]
        except KeyError:
            raise InputError(f"unknown sort {name!r}") from None

    def function(self, name: str) -> FunctionSymbol:
        try:
            return self.function_map[name]
        except KeyError:
            raise InputError(f"unknown function symbol {name!r}") from None

    def relation(self, name: str) -> RelationSymbol:
        try:
            return self.relation_map[name]
        except KeyError:
            raise InputError(f"unknown relation symbol {name!r}") from None

    def constants(self, sort: str | None = None) -> list[FunctionSymbol]:
        return [f for f in self.functions if not f.domain and (sort is None or f.codomain == sort)]

    def with_constants(self, constants: Iterable[tuple[str, str]]) -> "Signature":
        """Expansion by new constant symbols ``(name, sort)``."""
        extra = tuple(FunctionSymbol(name, (), sort) for name, sort in constants)
        return Signature(self.sorts, self.functions + extra, self.relations)

    def validate(self) -> list[str]:
        return signature_validate(self)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "sorts": [{"name": s.name, "bound": format_fraction(s.bound)} for s in self.sorts],
            "functions": [
                {"name": f.name, "domain": list(f.domain), "codomain": f.codomain, "modulus": f.modulus.to_json()}
                for f in self.functions
            ],
            "relations": [
                {
                    "name": r.name,
                    "domain": list(r.domain),
                    "bound": format_fraction(r.bound),
                    "modulus": r.modulus.to_json(),
                }
                for r in self.relations
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Signature":
        sorts = [Sort(s["name"], s["bound"]) for s in data.get("sorts", [])]
        functions = [
            FunctionSymbol(
                f["name"],
                f.get("domain", []),
                f["codomain"],
                Modulus.from_json(f["modulus"]) if "modulus" in f else None,
            )
            for f in data.get("functions", [])
        ]
        relations = [
            RelationSymbol(
                r["name"],
                r.get("domain", []),
                r.get("bound", "1/1"),
                Modulus.from_json(r["modulus"]) if "modulus" in r else None,
            )
            for r in data.get("relations", [])
        ]
        return cls(sorts, functions, relations)


def signature_validate(s: Signature) -> list[str]:
    """List every violated invariant; an empty list means the signature is valid."""
    report: list[str] = []

    def check_name(kind: str, name: str) -> None:
        if not isinstance(name, str) or not _IDENT.match(name):
            report.append(f"{kind} name {name!r} is not an identifier")
        elif name in RESERVED_WORDS:
            report.append(f"{kind} name {name!r} is reserved")

    for kind, items in (("sort", s.sorts), ("function", s.functions), ("relation", s.relations)):
        seen: set[str] = set()
        for item in items:
            check_name(kind, item.name)
            if item.name in seen:
                report.append(f"duplicate {kind} name {item.name!r}")
            seen.add(item.name)

    sort_names = {x.name for x in s.sorts}
    for srt in s.sorts:
        if srt.bound <= 0:
            report.append(f"sort {srt.name!r} has nonpositive bound {srt.bound}")
    for f in s.functions:
        for d in f.domain:
            if d not in sort_names:
                report.append(f"function {f.name!r} has unknown domain sort {d!r}")
        if f.codomain not in sort_names:
            report.append(f"function {f.name!r} has unknown codomain sort {f.codomain!r}")
    for r in s.relations:
        if r.bound <= 0:
            report.append(f"relation {r.name!r} has nonpositive bound {r.bound}")
        for d in r.domain:
            if d not in sort_names:
                report.append(f"relation {r.name!r} has unknown domain sort {d!r}")
    return report
