"""Finite metric structures and the morphism machinery around them."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import InputError
from .rational import Fraction, RationalLike, as_fraction, format_fraction
from .signature import FunctionSymbol, Modulus, Signature, Sort, modulus_threshold

__all__ = [
    "Violation",
    "FiniteMetric",
    "Structure",
    "MorphismReport",
    "SubstructureReport",
    "validate_structure",
    "check_homomorphism",
    "check_embedding",
    "find_isomorphism",
    "substructure_check",
    "expand_by_constants",
    "constant_name",
    "triangle_violations",
    "tuple_distance",
]

PointMap = Mapping[str, Mapping[str, str]]


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.subject}: {self.detail}"


def triangle_violations(points: Sequence[str], dist) -> list[tuple[str, str, str]]:
    """All triples ``(a, b, c)`` with ``d(a, c) > d(a, b) + d(b, c)``."""
    bad = []
    for a, b, c in itertools.permutations(points, 3):
        if dist(a, c) > dist(a, b) + dist(b, c):
            bad.append((a, b, c))
    return bad


@dataclass(frozen=True, eq=False)
class FiniteMetric:
    """A finite rational metric space given by named points and a distance matrix."""

    points: tuple[str, ...]
    matrix: tuple[tuple[Fraction, ...], ...]

    def __init__(self, points: Sequence[str], matrix: Sequence[Sequence[RationalLike]]):
        object.__setattr__(self, "points", tuple(points))
        object.__setattr__(self, "matrix", tuple(tuple(as_fraction(v) for v in row) for row in matrix))
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(self.points)})
        if len(self._index) != len(self.points):
            raise InputError("duplicate point names")
        if len(self.matrix) != len(self.points) or any(len(r) != len(self.points) for r in self.matrix):
            raise InputError("distance matrix shape does not match the point list")

    @classmethod
    def from_distances(cls, points: Sequence[str], dist: Mapping[tuple[str, str], RationalLike]) -> "FiniteMetric":
        """Build from a symmetric pair map; missing diagonal entries are 0."""

        def lookup(a, b):
            if a == b:
                return Fraction(0)
            if (a, b) in dist:
                return as_fraction(dist[(a, b)])
            return as_fraction(dist[(b, a)])

        return cls(points, [[lookup(a, b) for b in points] for a in points])

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, p: str) -> bool:
        return p in self._index

    def d(self, a: str, b: str) -> Fraction:
        return self.matrix[self._index[a]][self._index[b]]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteMetric):
            return NotImplemented
        return set(self.points) == set(other.points) and all(
            self.d(a, b) == other.d(a, b) for a in self.points for b in self.points
        )

    def __hash__(self):  # pragma: no cover - metric spaces are not dict keys
        raise TypeError("FiniteMetric is unhashable")

    def restrict(self, points: Iterable[str]) -> "FiniteMetric":
        pts = list(points)
        return FiniteMetric(pts, [[self.d(a, b) for b in pts] for a in pts])

    def diameter(self) -> Fraction:
        return max((v for row in self.matrix for v in row), default=Fraction(0))

    def violations(self, bound: RationalLike | None = None) -> list[str]:
        out = []
        for a in self.points:
            if self.d(a, a) != 0:
                out.append(f"d({a},{a}) = {self.d(a, a)} is not 0")
        for a, b in itertools.combinations(self.points, 2):
            if self.d(a, b) != self.d(b, a):
                out.append(f"d({a},{b}) != d({b},{a})")
            if self.d(a, b) <= 0:
                out.append(f"distinct points {a},{b} at distance {self.d(a, b)}")
            if bound is not None and self.d(a, b) > as_fraction(bound):
                out.append(f"d({a},{b}) = {self.d(a, b)} exceeds bound {bound}")
        for a, b, c in triangle_violations(self.points, self.d):
            out.append(f"triangle d({a},{c}) > d({a},{b}) + d({b},{c})")
        return out

    def is_valid(self, bound: RationalLike | None = None) -> bool:
        return not self.violations(bound)

    def to_structure(self, sort: str = "S", bound: RationalLike = 1, signature: Signature | None = None) -> "Structure":
        sig = signature or Signature([Sort(sort, bound)])
        return Structure(sig, {sort: self.points}, {sort: self.matrix})

    def __repr__(self) -> str:
        return f"FiniteMetric({list(self.points)}, diameter={self.diameter()})"


@dataclass(frozen=True, eq=False)
class Structure:
    """A finite L-structure with exact rational data.

    ``functions[f]`` maps argument tuples of point names to a point name and
    ``relations[R]`` maps argument tuples to a Fraction.  Metrics are square
    matrices indexed by carrier order.
    """

    signature: Signature
    carriers: dict[str, tuple[str, ...]]
    metrics: dict[str, tuple[tuple[Fraction, ...], ...]]
    functions: dict[str, dict[tuple[str, ...], str]] = field(default_factory=dict)
    relations: dict[str, dict[tuple[str, ...], Fraction]] = field(default_factory=dict)
    net_mesh: Fraction | None = None

    def __init__(self, signature, carriers, metrics, functions=None, relations=None, net_mesh=None):
        carriers = {s: tuple(pts) for s, pts in carriers.items()}
        metrics = {s: tuple(tuple(as_fraction(v) for v in row) for row in mat) for s, mat in metrics.items()}
        functions = {f: {tuple(k): v for k, v in tbl.items()} for f, tbl in (functions or {}).items()}
        relations = {r: {tuple(k): as_fraction(v) for k, v in tbl.items()} for r, tbl in (relations or {}).items()}
        object.__setattr__(self, "signature", signature)
        object.__setattr__(self, "carriers", carriers)
        object.__setattr__(self, "metrics", metrics)
        object.__setattr__(self, "functions", functions)
        object.__setattr__(self, "relations", relations)
        object.__setattr__(self, "net_mesh", None if net_mesh is None else as_fraction(net_mesh))
        object.__setattr__(self, "_index", {s: {p: i for i, p in enumerate(pts)} for s, pts in carriers.items()})

    # -- lookups -----------------------------------------------------------

    def points(self, sort: str) -> tuple[str, ...]:
        try:
            return self.carriers[sort]
        except KeyError:
            raise InputError(f"structure has no carrier for sort {sort!r}") from None

    def has_point(self, sort: str, p: str) -> bool:
        return p in self._index.get(sort, ())

    def dist(self, sort: str, a: str, b: str) -> Fraction:
        idx = self._index[sort]
        try:
            return self.metrics[sort][idx[a]][idx[b]]
        except KeyError:
            raise InputError(f"{a!r} or {b!r} is not a point of sort {sort!r}") from None

    def apply(self, fname: str, args: Sequence[str]) -> str:
        try:
            return self.functions[fname][tuple(args)]
        except KeyError:
            raise InputError(f"{fname}{tuple(args)} is not in the function table") from None

    def rel(self, rname: str, args: Sequence[str]) -> Fraction:
        try:
            return self.relations[rname][tuple(args)]
        except KeyError:
            raise InputError(f"{rname}{tuple(args)} is not in the relation table") from None

    def domain_tuples(self, sorts: Sequence[str]):
        return itertools.product(*(self.points(s) for s in sorts))

    def metric_space(self, sort: str) -> FiniteMetric:
        return FiniteMetric(self.points(sort), self.metrics[sort])

    def size(self) -> int:
        return sum(len(p) for p in self.carriers.values())

    def with_mesh(self, h: RationalLike | None) -> "Structure":
        return Structure(self.signature, self.carriers, self.metrics, self.functions, self.relations, h)

    def validate(self) -> list[Violation]:
        return validate_structure(self)

    # -- serialization -----------------------------------------------------

    def to_json(self, inline_signature: bool = True) -> dict:
        out: dict = {}
        if inline_signature:
            out["signature"] = self.signature.to_json()
        out["carriers"] = {s: list(p) for s, p in self.carriers.items()}
        out["metrics"] = {s: [[format_fraction(v) for v in row] for row in m] for s, m in self.metrics.items()}
        out["functions"] = {f: [[list(k), v] for k, v in tbl.items()] for f, tbl in self.functions.items()}
        out["relations"] = {
            r: [[list(k), format_fraction(v)] for k, v in tbl.items()] for r, tbl in self.relations.items()
        }
        if self.net_mesh is not None:
            out["net_mesh"] = format_fraction(self.net_mesh)
        return out

    @classmethod
    def from_json(cls, data: dict, signature: Signature | None = None) -> "Structure":
        if signature is None:
            signature = Signature.from_json(data["signature"])
        functions = {f: {tuple(k): v for k, v in entries} for f, entries in data.get("functions", {}).items()}
        relations = {r: {tuple(k): v for k, v in entries} for r, entries in data.get("relations", {}).items()}
        return cls(
            signature,
            data["carriers"],
            data["metrics"],
            functions,
            relations,
            data.get("net_mesh"),
        )

    def __repr__(self) -> str:
        sizes = ", ".join(f"{s}:{len(p)}" for s, p in self.carriers.items())
        return f"Structure({sizes})"


def tuple_distance(m: Structure, sorts: Sequence[str], a: Sequence[str], b: Sequence[str]) -> Fraction:
    """Coordinatewise maximum distance; 0 for empty tuples."""
    return max((m.dist(s, x, y) for s, x, y in zip(sorts, a, b)), default=Fraction(0))


# --------------------------------------------------------------------------
# validation


def _modulus_check(m: Structure, kind: str, name: str, sorts, modulus: Modulus, value_gap) -> list[Violation]:
    out = []
    tuples = list(m.domain_tuples(sorts))
    for i, a in enumerate(tuples):
        for b in tuples[i + 1 :]:
            t = tuple_distance(m, sorts, a, b)
            allowed = modulus_threshold(modulus, t)
            if allowed is None:
                continue
            gap = value_gap(a, b)
            if gap > allowed:
                out.append(
                    Violation(
                        "modulus",
                        f"{kind} {name}",
                        f"inputs {a} and {b} at distance {t} give values {gap} apart (> {allowed})",
                    )
                )
    return out


def validate_structure(m: Structure) -> list[Violation]:
    """Every violated structure invariant; the empty list means ``m`` is valid."""
    sig = m.signature
    report: list[Violation] = [Violation("signature", "signature", v) for v in sig.validate()]
    if report:
        return report

    for srt in sig.sorts:
        if srt.name not in m.carriers:
            report.append(Violation("carrier", f"sort {srt.name}", "missing carrier"))
            continue
        pts = m.carriers[srt.name]
        if not pts:
            report.append(Violation("carrier", f"sort {srt.name}", "empty carrier"))
        if len(set(pts)) != len(pts):
            report.append(Violation("carrier", f"sort {srt.name}", "duplicate point names"))
        mat = m.metrics.get(srt.name)
        if mat is None or len(mat) != len(pts) or any(len(r) != len(pts) for r in mat):
            report.append(Violation("metric", f"sort {srt.name}", "metric matrix has the wrong shape"))
            continue
        idx = {p: i for i, p in enumerate(pts)}

        def d(a, b, mat=mat, idx=idx):
            return mat[idx[a]][idx[b]]

        for a in pts:
            if d(a, a) != 0:
                report.append(Violation("metric", f"sort {srt.name}", f"d({a},{a}) = {d(a, a)} is not 0"))
        for a, b in itertools.combinations(pts, 2):
            v = d(a, b)
            if v != d(b, a):
                report.append(Violation("metric", f"sort {srt.name}", f"d({a},{b}) != d({b},{a})"))
            if v <= 0:
                report.append(Violation("metric", f"sort {srt.name}", f"distinct points {a},{b} at distance {v}"))
            if v > srt.bound:
                report.append(Violation("bound", f"sort {srt.name}", f"d({a},{b}) = {v} exceeds {srt.bound}"))
        for a, b, c in triangle_violations(pts, d):
            report.append(
                Violation("triangle", f"sort {srt.name}", f"d({a},{c}) > d({a},{b}) + d({b},{c}) at ({a}, {b}, {c})")
            )
    if report:
        return report

    for f in sig.functions:
        table = m.functions.get(f.name)
        if table is None:
            report.append(Violation("function", f"function {f.name}", "missing table"))
            continue
        total = True
        for args in m.domain_tuples(f.domain):
            if args not in table:
                report.append(Violation("function", f"function {f.name}", f"undefined at {args}"))
                total = False
            elif not m.has_point(f.codomain, table[args]):
                report.append(
                    Violation("function", f"function {f.name}", f"value {table[args]!r} at {args} not in {f.codomain}")
                )
                total = False
        if total and f.domain:
            report += _modulus_check(
                m, "function", f.name, f.domain, f.modulus,
                lambda a, b, f=f: m.dist(f.codomain, m.apply(f.name, a), m.apply(f.name, b)),
            )

    for r in sig.relations:
        table = m.relations.get(r.name)
        if table is None:
            report.append(Violation("relation", f"relation {r.name}", "missing table"))
            continue
        total = True
        for args in m.domain_tuples(r.domain):
            if args not in table:
                report.append(Violation("relation", f"relation {r.name}", f"undefined at {args}"))
                total = False
            elif abs(table[args]) > r.bound:
                report.append(
                    Violation("bound", f"relation {r.name}", f"value {table[args]} at {args} exceeds bound {r.bound}")
                )
        if total and r.domain:
            report += _modulus_check(
                m, "relation", r.name, r.domain, r.modulus,
                lambda a, b, r=r: abs(m.rel(r.name, a) - m.rel(r.name, b)),
            )
    if m.net_mesh is not None and m.net_mesh < 0:
        report.append(Violation("net", "net_mesh", "mesh must be nonnegative"))
    return report


# --------------------------------------------------------------------------
# morphisms


@dataclass
class MorphismReport:
    kind: str  # homomorphism | embedding | isomorphism | none
    witness: dict[str, dict[str, str]] | None
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.kind != "none"


def _check_map(m: Structure, n: Structure, point_map: PointMap) -> dict[str, dict[str, str]]:
    if m.signature != n.signature:
        raise InputError("structures have different signatures")
    out = {}
    for srt in m.signature.sorts:
        s = srt.name
        sub = point_map.get(s)
        if sub is None:
            raise InputError(f"map has no component for sort {s!r}")
        for p in m.points(s):
            if p not in sub:
                raise InputError(f"map is not total: {p!r} of sort {s!r} unmapped")
            if not n.has_point(s, sub[p]):
                raise InputError(f"map is ill-sorted: {p!r} -> {sub[p]!r} not a point of {s!r} in target")
        out[s] = {p: sub[p] for p in m.points(s)}
    return out


def _relation_comparisons(m: Structure, n: Structure, rho: dict[str, dict[str, str]]):
    """Yield ``(label, source value, target value)`` for every relation incl. metrics."""
    for srt in m.signature.sorts:
        s = srt.name
        for a, b in itertools.product(m.points(s), repeat=2):
            yield f"d[{s}]({a},{b})", m.dist(s, a, b), n.dist(s, rho[s][a], rho[s][b])
    for r in m.signature.relations:
        for args in m.domain_tuples(r.domain):
            image = tuple(rho[s][x] for s, x in zip(r.domain, args))
            yield f"{r.name}{args}", m.rel(r.name, args), n.rel(r.name, image)


def _function_violations(m: Structure, n: Structure, rho) -> list[str]:
    out = []
    for f in m.signature.functions:
        for args in m.domain_tuples(f.domain):
            image = tuple(rho[s][x] for s, x in zip(f.domain, args))
            lhs = rho[f.codomain][m.apply(f.name, args)]
            rhs = n.apply(f.name, image)
            if lhs != rhs:
                out.append(f"{f.name}{args}: rho(f(a)) = {lhs} but f(rho(a)) = {rhs}")
    return out


def check_homomorphism(m: Structure, n: Structure, point_map: PointMap) -> MorphismReport:
    rho = _check_map(m, n, point_map)
    violations = _function_violations(m, n, rho)
    for label, src, tgt in _relation_comparisons(m, n, rho):
        if not src >= tgt:
            violations.append(f"{label}: source value {src} < target value {tgt}")
    return MorphismReport("none" if violations else "homomorphism", rho, violations)


def check_embedding(m: Structure, n: Structure, point_map: PointMap) -> MorphismReport:
    rho = _check_map(m, n, point_map)
    violations = _function_violations(m, n, rho)
    for label, src, tgt in _relation_comparisons(m, n, rho):
        if src != tgt:
            violations.append(f"{label}: source value {src} != target value {tgt}")
    return MorphismReport("none" if violations else "embedding", rho, violations)


def find_isomorphism(m: Structure, n: Structure) -> MorphismReport:
    """Exhaustive backtracking search for a sortwise bijective embedding."""
    if m.signature != n.signature:
        raise InputError("structures have different signatures")
    sig = m.signature
    for srt in sig.sorts:
        if len(m.points(srt.name)) != len(n.points(srt.name)):
            return MorphismReport("none", None, [f"carrier sizes differ on sort {srt.name}"])

    slots = [(srt.name, p) for srt in sig.sorts for p in m.points(srt.name)]
    rho: dict[str, dict[str, str]] = {srt.name: {} for srt in sig.sorts}
    used: dict[str, set[str]] = {srt.name: set() for srt in sig.sorts}
    rels_by_sort = {
        srt.name: [r for r in sig.relations if srt.name in r.domain] for srt in sig.sorts
    }

    def consistent(s: str, a: str, b: str) -> bool:
        for a2, b2 in rho[s].items():
            if m.dist(s, a, a2) != n.dist(s, b, b2):
                return False
        # relation tuples that become fully assigned with the new point
        for r in rels_by_sort[s]:
            for args in m.domain_tuples(r.domain):
                if a not in args:
                    continue
                if not all(x in rho[srt] or (srt == s and x == a) for srt, x in zip(r.domain, args)):
                    continue
                image = tuple(b if (srt == s and x == a) else rho[srt][x] for srt, x in zip(r.domain, args))
                if m.rel(r.name, args) != n.rel(r.name, image):
                    return False
        return True

    def search(i: int) -> bool:
        if i == len(slots):
            return not _function_violations(m, n, rho)
        s, a = slots[i]
        for b in n.points(s):
            if b in used[s] or not consistent(s, a, b):
                continue
            rho[s][a] = b
            used[s].add(b)
            if search(i + 1):
                return True
            del rho[s][a]
            used[s].discard(b)
        return False

    if search(0):
        report = check_embedding(m, n, rho)
        assert report.kind == "embedding", report.violations
        return MorphismReport("isomorphism", report.witness, [])
    return MorphismReport("none", None, ["no sortwise bijective embedding exists"])


# --------------------------------------------------------------------------


@dataclass
class SubstructureReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def substructure_check(n: Structure, m: Structure) -> SubstructureReport:
    """Is ``n`` a substructure of ``m`` (all interpretations exact restrictions)?"""
    if n.signature != m.signature:
        raise InputError("structures have different signatures")
    sig = m.signature
    for srt in sig.sorts:
        for p in n.points(srt.name):
            if not m.has_point(srt.name, p):
                raise InputError(f"point {p!r} of sort {srt.name!r} is not in the larger carrier")
    violations = []
    for srt in sig.sorts:
        s = srt.name
        for a, b in itertools.product(n.points(s), repeat=2):
            if n.dist(s, a, b) != m.dist(s, a, b):
                violations.append(f"d[{s}]({a},{b}) = {n.dist(s, a, b)} but {m.dist(s, a, b)} in the larger structure")
    for f in sig.functions:
        for args in n.domain_tuples(f.domain):
            big = m.apply(f.name, args)
            small = n.functions.get(f.name, {}).get(args)
            if not n.has_point(f.codomain, big):
                violations.append(f"{f.name}{args} = {big} leaves the sub-carrier")
            elif small != big:
                violations.append(f"{f.name}{args} is {small} but {big} in the larger structure")
    for r in sig.relations:
        for args in n.domain_tuples(r.domain):
            small = n.relations.get(r.name, {}).get(args)
            big = m.rel(r.name, args)
            if small != big:
                violations.append(f"{r.name}{args} is {small} but {big} in the larger structure")
    return SubstructureReport(not violations, violations)


# --------------------------------------------------------------------------
# expansion by constants

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def constant_name(m: Structure, sort: str, point: str) -> str:
    """Name of the new constant symbol naming ``point`` in the expansion ``M_M``."""
    clash = sum(1 for s, pts in m.carriers.items() if point in pts) > 1
    name = f"c_{sort}_{point}" if clash else f"c_{point}"
    if not _IDENT.match(name):
        raise InputError(f"point name {point!r} cannot be turned into a constant symbol")
    return name


def expand_by_constants(m: Structure, points: Mapping[str, Iterable[str]] | None = None) -> Structure:
    """``M_A``: add one zero-ary function symbol per named point."""
    if points is None:
        chosen = {s: list(pts) for s, pts in m.carriers.items()}
    else:
        chosen = {s: list(points.get(s, ())) for s in m.carriers}
    existing = set(m.signature.function_map)
    new_syms = []
    tables = dict(m.functions)
    for s, pts in chosen.items():
        for p in pts:
            name = constant_name(m, s, p)
            if name in existing:
                raise InputError(f"constant {name!r} already exists in the signature")
            new_syms.append(FunctionSymbol(name, (), s))
            tables[name] = {(): p}
    sig = Signature(m.signature.sorts, m.signature.functions + tuple(new_syms), m.signature.relations)
    return Structure(sig, m.carriers, m.metrics, tables, m.relations, m.net_mesh)
