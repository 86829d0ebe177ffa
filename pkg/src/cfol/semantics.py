"""Exact evaluation of terms and formulas on finite structures.

``sup`` and ``inf`` are exact ``max`` and ``min`` over the finite carrier;
no numerical optimization happens anywhere.  On structures that declare an
``h``-net mesh, :func:`certified_eval` adds an error radius derived from the
formula's modulus.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, InputError
from .formulas import enumerate_formulas
from .rational import Fraction, RationalLike, as_fraction
from .signature import DEFAULT_GRID_STEP, modulus_invert
from .structures import Structure, expand_by_constants, substructure_check
from .syntax import (
    App,
    Atomic,
    Binary,
    Const,
    Dist,
    Formula,
    Quant,
    Scale,
    Term,
    Unary,
    Var,
    apply_binary,
    apply_unary,
    formula_modulus,
    free_vars,
    print_formula,
    quantifier_count,
)

__all__ = [
    "EvalResult",
    "TheoryReport",
    "TVReport",
    "eval_term",
    "eval_formula",
    "formula_value",
    "certified_eval",
    "seminorm",
    "tarski_vaught_check",
    "theory_report",
    "assignments",
    "generate_diagram",
]

Assignment = Mapping[str, str]


@dataclass(frozen=True)
class EvalResult:
    """Exact value plus an error radius (0 off nets, None when unbounded)."""

    value: Fraction
    radius: Fraction | None = Fraction(0)

    @property
    def interval(self) -> tuple[Fraction, Fraction] | None:
        if self.radius is None:
            return None
        return self.value - self.radius, self.value + self.radius

    def contains(self, x: RationalLike) -> bool:
        if self.radius is None:
            return True
        lo, hi = self.interval
        return lo <= as_fraction(x) <= hi


def eval_term(m: Structure, t: Term, assignment: Assignment) -> str:
    if isinstance(t, Var):
        try:
            return assignment[t.name]
        except KeyError:
            raise InputError(f"unassigned variable {t.name!r}") from None
    return m.apply(t.func, [eval_term(m, a, assignment) for a in t.args])


def _value(m: Structure, phi: Formula, env: dict[str, str]) -> Fraction:
    if isinstance(phi, Const):
        return phi.value
    if isinstance(phi, Dist):
        return m.dist(phi.sort, eval_term(m, phi.left, env), eval_term(m, phi.right, env))
    if isinstance(phi, Atomic):
        return m.rel(phi.rel, [eval_term(m, a, env) for a in phi.args])
    if isinstance(phi, Unary):
        return apply_unary(phi.op, _value(m, phi.arg, env))
    if isinstance(phi, Scale):
        return phi.factor * _value(m, phi.arg, env)
    if isinstance(phi, Binary):
        return apply_binary(phi.op, _value(m, phi.left, env), _value(m, phi.right, env))
    pick = max if phi.kind == "sup" else min
    saved = env.get(phi.var)
    values = []
    for p in m.points(phi.sort):
        env[phi.var] = p
        values.append(_value(m, phi.body, env))
    if saved is None:
        env.pop(phi.var, None)
    else:
        env[phi.var] = saved
    return pick(values)


def _check_assignment(m: Structure, phi: Formula, assignment: Assignment) -> dict[str, str]:
    env = dict(assignment)
    for name, srt in free_vars(phi).items():
        if name not in env:
            raise InputError(f"unassigned variable {name!r}")
        if not m.has_point(srt, env[name]):
            raise InputError(f"variable {name!r} of sort {srt!r} assigned to {env[name]!r}, not a point of {srt!r}")
    return env


def formula_value(m: Structure, phi: Formula, assignment: Assignment | None = None) -> Fraction:
    """The exact value ``phi^M(a)`` as a Fraction."""
    return _value(m, phi, _check_assignment(m, phi, assignment or {}))


def eval_formula(m: Structure, phi: Formula, assignment: Assignment | None = None) -> EvalResult:
    return EvalResult(formula_value(m, phi, assignment))


def certified_eval(
    m: Structure,
    phi: Formula,
    assignment: Assignment | None = None,
    step: RationalLike = DEFAULT_GRID_STEP,
) -> EvalResult:
    """Evaluate on an ``h``-net and bound the error against the intended structure.

    The radius is ``q * eps`` with ``q`` the number of quantifier nodes and
    ``eps = modulus_invert(modulus(phi), h)``.  Each quantifier ranges over a
    net whose points are within ``h`` of every intended point, so it can miss
    the true sup/inf by at most ``eps``; the errors add up.
    """
    if m.net_mesh is None:
        raise DomainError("structure does not declare a net mesh")
    value = formula_value(m, phi, assignment)
    q = quantifier_count(phi)
    if q == 0:
        return EvalResult(value, Fraction(0))
    eps = modulus_invert(formula_modulus(phi, m.signature), m.net_mesh, step)
    if eps is None:
        return EvalResult(value, None)
    return EvalResult(value, q * eps)


def assignments(m: Structure, context: Mapping[str, str]) -> Iterable[dict[str, str]]:
    """Every assignment of the variables in ``context`` (name -> sort)."""
    names = list(context)
    for combo in itertools.product(*(m.points(context[n]) for n in names)):
        yield dict(zip(names, combo))


def seminorm(phi: Formula, family: Sequence[Structure]) -> Fraction:
    """``max |phi^M(a)|`` over a registered family and all assignments.

    This is a lower bound for the seminorm over all models of a theory.
    """
    if not family:
        raise DomainError("seminorm needs a nonempty family of structures")
    ctx = free_vars(phi)
    return max(abs(_value(m, phi, env)) for m in family for env in assignments(m, ctx))


# --------------------------------------------------------------------------


@dataclass
class TVFailure:
    formula: Formula
    witness_var: str
    parameters: dict[str, str]
    inf_small: Fraction
    inf_large: Fraction
    witness: str

    def __str__(self) -> str:
        return (
            f"{print_formula(self.formula)} at {self.parameters}: inf over N = {self.inf_small}, "
            f"inf over M = {self.inf_large} (attained at {self.witness_var} = {self.witness})"
        )


@dataclass
class TVReport:
    ok: bool
    checked: int
    failures: list[TVFailure] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def tarski_vaught_check(n: Structure, m: Structure, formulas: Iterable[Formula], witness_var: str = "y") -> TVReport:
    """Compare ``inf_{b in N} phi^M(b, a)`` with ``inf_{b in M} phi^M(b, a)`` for all ``a`` in N.

    ``witness_var`` names the variable ``y`` in ``phi(y, x)``; formulas in
    which it does not occur free are trivially fine and still counted.
    """
    if not substructure_check(n, m):
        raise InputError("first structure is not a substructure of the second")
    checked = 0
    failures = []
    for phi in formulas:
        ctx = free_vars(phi)
        ysort = ctx.pop(witness_var, None)
        for env in assignments(n, ctx):
            checked += 1
            if ysort is None:
                continue
            small = []
            for b in n.points(ysort):
                env[witness_var] = b
                small.append(_value(m, phi, env))
            large = []
            for b in m.points(ysort):
                env[witness_var] = b
                large.append((_value(m, phi, env), b))
            del env[witness_var]
            inf_small = min(small)
            inf_large, witness = min(large, key=lambda vb: vb[0])
            if inf_small != inf_large:
                params = dict(env)
                failures.append(TVFailure(phi, witness_var, params, inf_small, inf_large, witness))
    return TVReport(not failures, checked, failures)


@dataclass
class TheoryEntry:
    sentence: Formula
    value: Fraction
    satisfied: bool


@dataclass
class TheoryReport:
    tolerance: Fraction
    entries: list[TheoryEntry]

    @property
    def all_satisfied(self) -> bool:
        return all(e.satisfied for e in self.entries)


def theory_report(m: Structure, sentences: Iterable[Formula], eps: RationalLike = 0) -> TheoryReport:
    """Exact value of each sentence and whether ``|value| <= eps``."""
    tol = as_fraction(eps)
    if tol < 0:
        raise DomainError("tolerance must be nonnegative")
    entries = []
    for phi in sentences:
        fv = free_vars(phi)
        if fv:
            raise InputError(f"{print_formula(phi)} has free variables {sorted(fv)}")
        v = _value(m, phi, {})
        entries.append(TheoryEntry(phi, v, abs(v) <= tol))
    return TheoryReport(tol, entries)


def generate_diagram(
    m: Structure,
    kind: str = "atomic",
    family: Iterable[Formula] | None = None,
    *,
    max_connective_depth: int = 1,
    denominator: int = 2,
) -> tuple[Structure, list[Formula]]:
    """Sentences of the expanded language ``L_M`` that take the value 0 in ``M_M``.

    ``kind="atomic"`` keeps only quantifier-free sentences.  Without an
    explicit ``family`` the deterministic generator is run over ``L_M``
    (no quantifiers for the atomic diagram, one level for the elementary
    one).  Returns the expansion together with the sentences.
    """
    if kind not in ("atomic", "elementary"):
        raise InputError(f"diagram kind must be atomic or elementary, not {kind!r}")
    mm = expand_by_constants(m)
    if family is None:
        family = enumerate_formulas(
            mm.signature,
            {},
            max_quantifier_depth=0 if kind == "atomic" else 1,
            max_connective_depth=max_connective_depth,
            denominator=denominator,
        )
    out = []
    for phi in family:
        if free_vars(phi):
            raise InputError(f"{print_formula(phi)} is not a sentence")
        if kind == "atomic" and quantifier_count(phi):
            continue
        if _value(mm, phi, {}) == 0:
            out.append(phi)
    return mm, out
