"""Finite-scale probes: type vectors, distances between types, quantifier
elimination witnesses, zero sets and definability evidence.

Every probe here is one-sided.  A returned witness is exact evidence about
the structures examined; an empty result proves nothing about the theory.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import DomainError, InputError
from .formulas import FormulaFamily, enumerate_formulas
from .rational import Fraction, RationalLike, as_fraction
from .semantics import formula_value
from .signature import DEFAULT_GRID_STEP
from .structures import Structure, tuple_distance
from .syntax import Const, Formula, free_vars, print_formula

__all__ = [
    "TypeVector",
    "compute_type",
    "TypeDistance",
    "type_distance",
    "QEWitness",
    "QEReport",
    "qe_probe",
    "ZeroSet",
    "zero_set",
    "DefinabilityReport",
    "DefinabilityEntry",
    "definability_probe",
    "default_candidates",
    "verify_witness",
]


def _bind(family: FormulaFamily, m: Structure, tup: Sequence[str]) -> dict[str, str]:
    ctx = family.context
    if len(tup) != len(ctx):
        raise InputError(f"tuple has {len(tup)} entries but the family has {len(ctx)} variables")
    env = {}
    for (name, s), p in zip(ctx, tup):
        if not m.has_point(s, p):
            raise InputError(f"{p!r} is not a point of sort {s!r} (variable {name})")
        env[name] = p
    return env


@dataclass(frozen=True)
class TypeVector:
    family: FormulaFamily
    values: tuple[Fraction, ...]
    structure: Structure
    realization: tuple[str, ...]

    def as_dict(self) -> dict[str, Fraction]:
        return {print_formula(phi): v for phi, v in zip(self.family, self.values)}


def compute_type(m: Structure, tup: Sequence[str], family: FormulaFamily) -> TypeVector:
    """Values of every family formula at ``tup`` (assigned in the family's variable order)."""
    env = _bind(family, m, tup)
    return TypeVector(family, tuple(formula_value(m, phi, env) for phi in family), m, tuple(tup))


@dataclass(frozen=True)
class TypeDistance:
    """Smallest tuple distance between realizations of the two types inside one structure.

    This only searches the given structure, so it is an upper bound for the
    distance between the types over all models.
    """

    value: Fraction
    witness: tuple[tuple[str, ...], tuple[str, ...]]
    upper_bound: bool = True


def type_distance(m: Structure, a: Sequence[str], b: Sequence[str], family: FormulaFamily) -> TypeDistance:
    sorts = [s for _, s in family.context]
    _bind(family, m, a)
    _bind(family, m, b)
    cache: dict[tuple[str, ...], tuple[Fraction, ...]] = {}

    def tp(t: tuple[str, ...]) -> tuple[Fraction, ...]:
        if t not in cache:
            cache[t] = compute_type(m, t, family).values
        return cache[t]

    all_tuples = list(m.domain_tuples(sorts))
    ta, tb = tp(tuple(a)), tp(tuple(b))
    real_a = [t for t in all_tuples if tp(t) == ta]
    real_b = [t for t in all_tuples if tp(t) == tb]
    best = None
    for x in real_a:
        for y in real_b:
            d = tuple_distance(m, sorts, x, y)
            if best is None or d < best[0]:
                best = (d, (x, y))
    return TypeDistance(best[0], best[1])


# --------------------------------------------------------------------------
# quantifier elimination probe


@dataclass(frozen=True)
class QEWitness:
    left: tuple[str, ...]
    right: tuple[str, ...]
    atomic_gap: Fraction
    formula: Formula
    left_value: Fraction
    right_value: Fraction

    def __str__(self) -> str:
        return (
            f"{self.left} vs {self.right}: atomic data within {self.atomic_gap}, but "
            f"{print_formula(self.formula)} = {self.left_value} vs {self.right_value}"
        )


@dataclass
class QEReport:
    depth: int
    eta: Fraction
    eps: Fraction
    pairs_examined: int
    witnesses: list[QEWitness] = field(default_factory=list)

    @property
    def conclusive(self) -> bool:
        """A witness refutes elimination for the examined data; no witness proves nothing."""
        return bool(self.witnesses)


def qe_probe(
    m: Structure,
    depth: int = 1,
    eta: RationalLike = 0,
    eps: RationalLike = Fraction(1, 100),
    max_arity: int = 1,
    max_witnesses: int | None = None,
) -> QEReport:
    """Search tuple pairs with (nearly) equal atomic data but different deeper formula values.

    For each tuple length up to ``max_arity`` and each sorting, pairs whose
    atomic formula values differ by at most ``eta`` are compared on all
    formulas of quantifier depth up to ``depth`` (quantified atoms, no
    connectives); a difference above ``eps`` is reported.
    """
    eta, eps = as_fraction(eta), as_fraction(eps)
    if eta < 0 or eps < 0:
        raise DomainError("eta and eps must be nonnegative")
    sig = m.signature
    report = QEReport(depth, eta, eps, 0)
    for n in range(1, max_arity + 1):
        for sorts in itertools.product([s.name for s in sig.sorts], repeat=n):
            ctx = {f"x{i + 1}": s for i, s in enumerate(sorts)}
            atomic = enumerate_formulas(sig, ctx, max_quantifier_depth=0, max_connective_depth=0, denominator=1)
            atomic = FormulaFamily(atomic.context, tuple(p for p in atomic if free_vars(p)))
            deep = enumerate_formulas(sig, ctx, max_quantifier_depth=depth, max_connective_depth=0, denominator=1)
            deep = FormulaFamily(deep.context, tuple(p for p in deep if p not in atomic.formulas and not isinstance(p, Const)))
            tuples = list(m.domain_tuples(sorts))
            at = {t: compute_type(m, t, atomic).values for t in tuples}
            dp = {t: compute_type(m, t, deep).values for t in tuples}
            for x, y in itertools.combinations(tuples, 2):
                gap = max((abs(u - v) for u, v in zip(at[x], at[y])), default=Fraction(0))
                if gap > eta:
                    continue
                report.pairs_examined += 1
                for phi, u, v in zip(deep, dp[x], dp[y]):
                    if abs(u - v) > eps:
                        report.witnesses.append(QEWitness(x, y, gap, phi, u, v))
                        break
                if max_witnesses is not None and len(report.witnesses) >= max_witnesses:
                    return report
    return report


# --------------------------------------------------------------------------
# zero sets


@dataclass(frozen=True)
class ZeroSet:
    structure: Structure
    formula: Formula
    tolerance: Fraction
    variables: tuple[tuple[str, str], ...]
    points: tuple[tuple[str, ...], ...]

    def __contains__(self, tup) -> bool:
        return tuple(tup) in self.points

    def __len__(self) -> int:
        return len(self.points)


def zero_set(m: Structure, phi: Formula, tol: RationalLike = 0, variables: Sequence[str] | None = None) -> ZeroSet:
    """All tuples with ``|phi| <= tol``, in carrier order of the free variables."""
    tol = as_fraction(tol)
    if tol < 0:
        raise DomainError("tolerance must be nonnegative")
    ctx = free_vars(phi)
    names = list(variables) if variables is not None else list(ctx)
    missing = [v for v in ctx if v not in names]
    if missing:
        raise InputError(f"free variables {missing} are not among {names}")
    sorts = []
    for v in names:
        if v not in ctx:
            raise InputError(f"variable {v!r} does not occur free and has no sort")
        sorts.append(ctx[v])
    pts = tuple(
        t for t in m.domain_tuples(sorts) if abs(formula_value(m, phi, dict(zip(names, t)))) <= tol
    )
    return ZeroSet(m, phi, tol, tuple(zip(names, sorts)), pts)


# --------------------------------------------------------------------------
# definability probe


@dataclass(frozen=True)
class DefinabilityEntry:
    eps: Fraction
    witness: Formula | None
    delta: Fraction | None
    candidates_tried: int

    @property
    def found(self) -> bool:
        return self.witness is not None

    def describe(self) -> str:
        if self.witness is None:
            return f"eps {self.eps}: no witness in searched family ({self.candidates_tried} candidates)"
        return f"eps {self.eps}: witness {print_formula(self.witness)} with delta {self.delta}"


@dataclass
class DefinabilityReport:
    formula: Formula
    entries: list[DefinabilityEntry]
    empty_members: list[int] = field(default_factory=list)

    @property
    def prop_violation(self) -> bool:
        """Zero set empty in some members but not all."""
        return bool(self.empty_members)


def default_candidates(sig, phi: Formula, denominator: int = 2) -> FormulaFamily:
    """The constant 0, ``phi`` itself, then one connective round over atoms and singly quantified atoms."""
    ctx = free_vars(phi)
    fam = enumerate_formulas(sig, ctx, max_quantifier_depth=1, max_connective_depth=1, denominator=denominator)
    ordered = [Const(0), phi] + [p for p in fam if p not in (Const(0), phi)]
    ordered = [p for p in ordered if set(free_vars(p)) <= set(ctx)]
    return FormulaFamily(tuple(ctx.items()), tuple(ordered), dict(fam.params, prefix="0, phi"))


def _grid_floor(t: Fraction, step: Fraction) -> Fraction | None:
    """Largest positive multiple of ``step`` that is at most ``min(t, 1)``."""
    k = (min(t, Fraction(1)) / step).__floor__()
    return k * step if k >= 1 else None


def _distances_to_set(m: Structure, sorts, tuples, xs) -> list[Fraction | None]:
    if not xs:
        return [None for _ in tuples]
    return [min(tuple_distance(m, sorts, t, x) for x in xs) for t in tuples]


def definability_probe(
    family: Sequence[Structure],
    phi: Formula,
    eps_list: Sequence[RationalLike],
    candidates: FormulaFamily | Sequence[Formula] | None = None,
    step: RationalLike = DEFAULT_GRID_STEP,
) -> DefinabilityReport:
    """Look for a formula ``psi`` and ``delta > 0`` with, in every member M,

    * ``psi = 0`` on the zero set X of ``phi``, and
    * ``psi(a) < delta`` implies ``d(a, X) <= eps``.

    ``delta`` ranges over positive multiples of ``step`` up to 1; for each
    candidate the largest admissible ``delta`` is taken.  A tuple at distance
    more than ``eps`` from X forces ``delta <= psi(a)``; members without such
    tuples impose nothing.
    """
    if not family:
        raise DomainError("definability probe needs a nonempty family")
    step = as_fraction(step)
    if step <= 0:
        raise DomainError("grid step must be positive")
    eps_values = [as_fraction(e) for e in eps_list]
    if any(e <= 0 for e in eps_values):
        raise DomainError("eps values must be positive")
    sig = family[0].signature
    ctx = free_vars(phi)
    names, sorts = list(ctx), list(ctx.values())
    if candidates is None:
        cands = list(default_candidates(sig, phi))
    else:
        cands = list(candidates)
    for psi in cands:
        extra = set(free_vars(psi)) - set(names)
        if extra:
            raise InputError(f"candidate {print_formula(psi)} has variables {sorted(extra)} not free in the formula")

    members = []
    empty = []
    for i, m in enumerate(family):
        tuples = list(m.domain_tuples(sorts))
        xs = list(zero_set(m, phi, 0, names).points)
        if not xs:
            empty.append(i)
        members.append((m, tuples, xs, _distances_to_set(m, sorts, tuples, xs)))
    report = DefinabilityReport(phi, [], empty)
    if empty and len(empty) < len(family):
        report.entries = [DefinabilityEntry(e, None, None, 0) for e in eps_values]
        return report

    values: dict[int, list[list[Fraction]]] = {}

    def vals(k: int) -> list[list[Fraction]]:
        if k not in values:
            psi = cands[k]
            values[k] = [[formula_value(m, psi, dict(zip(names, t))) for t in tuples] for m, tuples, _, _ in members]
        return values[k]

    for e in eps_values:
        found = None
        tried = 0
        for k, psi in enumerate(cands):
            tried += 1
            v = vals(k)
            ok = True
            t_min = None
            for (m, tuples, xs, dists), row in zip(members, v):
                for t, d, val in zip(tuples, dists, row):
                    in_x = d == 0 and t in xs
                    if in_x and val != 0:
                        ok = False
                        break
                    far = d is None or d > e
                    if far and (t_min is None or val < t_min):
                        t_min = val
                if not ok:
                    break
            if not ok:
                continue
            delta = Fraction(1) if t_min is None else _grid_floor(t_min, step)
            if delta is None:
                continue
            found = DefinabilityEntry(e, psi, delta, tried)
            break
        report.entries.append(found or DefinabilityEntry(e, None, None, tried))
    return report


def verify_witness(
    family: Sequence[Structure], phi: Formula, psi: Formula, delta: RationalLike, eps: RationalLike
) -> bool:
    """Brute-force recheck of both conditions for one witness."""
    delta, eps = as_fraction(delta), as_fraction(eps)
    ctx = free_vars(phi)
    names, sorts = list(ctx), list(ctx.values())
    for m in family:
        tuples = list(m.domain_tuples(sorts))
        xs = [t for t in tuples if formula_value(m, phi, dict(zip(names, t))) == 0]
        for t in tuples:
            env = dict(zip(names, t))
            val = formula_value(m, psi, env)
            if t in xs and val != 0:
                return False
            if val < delta:
                if not xs:
                    return False
                if min(tuple_distance(m, sorts, t, x) for x in xs) > eps:
                    return False
    return True
