"""Ultralimits and metric ultraproducts over principal ultrafilters.

Every ultrafilter on a finite index set is principal, generated by one
index ``j``: a set belongs to it iff it contains ``j``.  The construction
below is nevertheless carried out generically (pseudometric on the full
product, quotient, coordinatewise interpretations, ultralimits of values),
so Łoś's theorem is checked rather than assumed.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

from .errors import DomainError, InputError
from .rational import Fraction
from .semantics import formula_value
from .structures import Structure, validate_structure
from .syntax import Formula, free_vars, print_formula

__all__ = [
    "Ultrafilter",
    "Family",
    "Ultraproduct",
    "ultralimit",
    "ultraproduct",
    "diagonal_map",
    "LosReport",
    "los_check",
]


@dataclass(frozen=True)
class Ultrafilter:
    """The principal ultrafilter on a finite ordered index set generated by one index."""

    index: tuple[Hashable, ...]
    generator: Hashable

    def __init__(self, index: Sequence[Hashable], generator: Hashable):
        index = tuple(index)
        if not index:
            raise DomainError("index set must be nonempty")
        if len(set(index)) != len(index):
            raise DomainError("index set has repeated elements")
        if generator not in index:
            raise DomainError(f"generator {generator!r} is not in the index set")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "generator", generator)

    def __contains__(self, subset) -> bool:
        """A subset of the index set belongs to the ultrafilter iff it holds the generator."""
        return self.generator in subset

    @property
    def position(self) -> int:
        return self.index.index(self.generator)


def ultralimit(values: Mapping[Hashable, Fraction] | Sequence[Fraction], u: Ultrafilter) -> Fraction:
    """The unique ``r`` with ``{i : |r_i - r| < eps}`` in ``u`` for every ``eps > 0``."""
    if isinstance(values, Mapping):
        if set(values) != set(u.index):
            raise InputError("value indices do not match the ultrafilter's index set")
        return values[u.generator]
    if len(values) != len(u.index):
        raise InputError(f"{len(values)} values for an index set of size {len(u.index)}")
    # the singleton {generator} is in u; any other candidate r fails at eps = |r - r_j|
    return values[u.position]


@dataclass(frozen=True)
class Family:
    """Structures over one signature, indexed by a finite ordered set."""

    structures: tuple[Structure, ...]
    index: tuple[Hashable, ...]

    def __init__(self, structures: Sequence[Structure], index: Sequence[Hashable] | None = None, validate: bool = True):
        structures = tuple(structures)
        if not structures:
            raise DomainError("family must be nonempty")
        index = tuple(index) if index is not None else tuple(range(len(structures)))
        if len(index) != len(structures):
            raise InputError("index set and structure list differ in length")
        sig = structures[0].signature
        for m in structures[1:]:
            if m.signature != sig:
                raise InputError("family members have different signatures")
        if validate:
            for i, m in zip(index, structures):
                bad = validate_structure(m)
                if bad:
                    raise InputError(f"member {i!r} is not a valid structure: {bad[0]}")
        object.__setattr__(self, "structures", structures)
        object.__setattr__(self, "index", index)

    @property
    def signature(self):
        return self.structures[0].signature

    def __len__(self) -> int:
        return len(self.structures)

    def __getitem__(self, i: Hashable) -> Structure:
        return self.structures[self.index.index(i)]

    def uniform_bounds(self) -> dict[str, Fraction]:
        """Largest diameter per sort across the family; each is at most the sort bound."""
        return {
            s.name: max(m.metric_space(s.name).diameter() for m in self.structures) for s in self.signature.sorts
        }


@dataclass
class Ultraproduct:
    structure: Structure
    classes: dict[str, dict[tuple[str, ...], str]]  # sort -> I-tuple -> class name
    representatives: dict[str, dict[str, tuple[str, ...]]] = field(default_factory=dict)

    def quotient(self, sort: str, tup: Sequence[str]) -> str:
        try:
            return self.classes[sort][tuple(tup)]
        except KeyError:
            raise InputError(f"{tuple(tup)} is not an element of the product of sort {sort!r}") from None


def _class_name(rep: tuple[str, ...]) -> str:
    return "[" + ",".join(rep) + "]"


def ultraproduct(f: Family, u: Ultrafilter) -> Ultraproduct:
    """The metric ultraproduct of ``f`` along ``u``, with its quotient map.

    The pseudometric ``d(a, b) = lim_u d_i(a_i, b_i)`` is computed on the
    full product; tuples at pseudo-distance 0 share a class, named after its
    first tuple in product order.
    """
    if tuple(f.index) != u.index:
        raise InputError("ultrafilter index set does not match the family")
    sig = f.signature
    ms = f.structures
    classes: dict[str, dict[tuple[str, ...], str]] = {}
    reps: dict[str, dict[str, tuple[str, ...]]] = {}

    def pseudo(sort: str, a: tuple[str, ...], b: tuple[str, ...]) -> Fraction:
        return ultralimit([m.dist(sort, x, y) for m, x, y in zip(ms, a, b)], u)

    for srt in sig.sorts:
        s = srt.name
        cls: dict[tuple[str, ...], str] = {}
        rep_of: dict[str, tuple[str, ...]] = {}
        for tup in itertools.product(*(m.points(s) for m in ms)):
            for name, rep in rep_of.items():
                if pseudo(s, tup, rep) == 0:
                    cls[tup] = name
                    break
            else:
                name = _class_name(tup)
                rep_of[name] = tup
                cls[tup] = name
        classes[s] = cls
        reps[s] = rep_of

    carriers = {s: list(reps[s]) for s in reps}
    metrics = {
        s: [[pseudo(s, reps[s][a], reps[s][b]) for b in carriers[s]] for a in carriers[s]] for s in carriers
    }
    functions = {}
    for fn in sig.functions:
        table = {}
        for args in itertools.product(*(carriers[s] for s in fn.domain)):
            rep_args = [reps[s][a] for s, a in zip(fn.domain, args)]
            image = tuple(m.apply(fn.name, [r[i] for r in rep_args]) for i, m in enumerate(ms))
            table[args] = classes[fn.codomain][image]
        functions[fn.name] = table
    relations = {}
    for r in sig.relations:
        table = {}
        for args in itertools.product(*(carriers[s] for s in r.domain)):
            rep_args = [reps[s][a] for s, a in zip(r.domain, args)]
            table[args] = ultralimit([m.rel(r.name, [t[i] for t in rep_args]) for i, m in enumerate(ms)], u)
        relations[r.name] = table
    n = Structure(sig, carriers, metrics, functions, relations)
    return Ultraproduct(n, classes, reps)


def diagonal_map(m: Structure, up: Ultraproduct, copies: int) -> dict[str, dict[str, str]]:
    """``a -> [(a, ..., a)]`` into an ultrapower of ``m``."""
    return {s: {p: up.quotient(s, (p,) * copies) for p in m.points(s)} for s in m.carriers}


@dataclass
class LosDiscrepancy:
    formula: Formula
    assignment: dict[str, tuple[str, ...]]
    ultraproduct_value: Fraction
    ultralimit_value: Fraction

    def __str__(self) -> str:
        return (
            f"{print_formula(self.formula)} at {self.assignment}: "
            f"{self.ultraproduct_value} in the ultraproduct vs ultralimit {self.ultralimit_value}"
        )


@dataclass
class LosReport:
    checked: int
    discrepancies: list[LosDiscrepancy]

    @property
    def ok(self) -> bool:
        return not self.discrepancies


def los_check(
    f: Family,
    u: Ultrafilter,
    formulas: Sequence[Formula],
    samples: int | None = 20,
    seed: int = 0,
    up: Ultraproduct | None = None,
) -> LosReport:
    """Compare ``phi`` in the ultraproduct with the ultralimit of ``phi`` in the factors.

    Each sample assigns to every free variable an I-indexed tuple of points.
    With ``samples=None`` every such assignment is checked.
    """
    up = up or ultraproduct(f, u)
    rng = random.Random(seed)
    ms = f.structures
    checked = 0
    bad: list[LosDiscrepancy] = []
    for phi in formulas:
        ctx = free_vars(phi)
        names = list(ctx)
        pools = {v: list(itertools.product(*(m.points(ctx[v]) for m in ms))) for v in names}
        if samples is None:
            envs = (dict(zip(names, combo)) for combo in itertools.product(*(pools[v] for v in names)))
        else:
            envs = ({v: rng.choice(pools[v]) for v in names} for _ in range(samples if names else 1))
        for env in envs:
            checked += 1
            up_env = {v: up.quotient(ctx[v], env[v]) for v in names}
            lhs = formula_value(up.structure, phi, up_env)
            factor_values = [formula_value(m, phi, {v: env[v][i] for v in names}) for i, m in enumerate(ms)]
            rhs = ultralimit(factor_values, u)
            if lhs != rhs:
                bad.append(LosDiscrepancy(phi, dict(env), lhs, rhs))
    return LosReport(checked, bad)
