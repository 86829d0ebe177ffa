"""Formula generators: configuration formulas, extension axioms, weighted sums,
deterministic formula families and random formulas for property tests."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, InputError
from .rational import Fraction, RationalLike, as_fraction
from .signature import Signature
from .structures import FiniteMetric
from .syntax import (
    BINARY_OPS,
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
    check_formula,
    formula_bound,
    free_vars,
)

__all__ = [
    "gen_config_formula",
    "gen_extension_axiom",
    "weighted_sum",
    "FormulaFamily",
    "enumerate_formulas",
    "enumerate_terms",
    "random_formula",
    "join",
]


def join(op: str, parts: Sequence[Formula]) -> Formula:
    """Left-nested ``((p0 op p1) op p2) ...``."""
    if not parts:
        raise DomainError("cannot join an empty list of formulas")
    out = parts[0]
    for p in parts[1:]:
        out = Binary(op, out, p)
    return out


def _default_vars(n: int, prefix: str = "x") -> list[str]:
    return [f"{prefix}{i + 1}" for i in range(n)]


def gen_config_formula(a: FiniteMetric, sort: str = "S", variables: Sequence[str] | None = None) -> Formula:
    """``max_{i<j} |d(x_i, x_j) - r_ij|`` for the configuration ``a``.

    Zero exactly when ``x_i -> a_i`` reverses an isometric embedding.  A
    single point imposes no constraint and gives the constant 0.
    """
    names = list(variables) if variables is not None else _default_vars(len(a))
    if len(names) != len(a):
        raise InputError(f"need {len(a)} variable names, got {len(names)}")
    if len(a) == 0:
        raise InputError("configuration formula of an empty space")
    xs = [Var(n, sort) for n in names]
    parts: list[Formula] = []
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            r = a.matrix[i][j]
            parts.append(Unary("abs", Binary("-", Dist(sort, xs[i], xs[j]), Const(r))))
    if not parts:
        return Const(0)
    return join("max", parts)


def gen_extension_axiom(a: FiniteMetric, b: FiniteMetric, sort: str = "S", witness: str = "y") -> Formula:
    """``sup_x ( inf_y D_B(x, y) -. D_A(x) )`` for a one-point extension ``b`` of ``a``.

    ``b`` must list the points of ``a`` first, in the same order, followed by
    the new point.  When ``D_A`` is the constant 0 the truncation is dropped,
    since ``D_B`` is never negative.
    """
    if len(b) != len(a) + 1 or b.points[: len(a)] != a.points:
        raise InputError("second space is not a one-point extension of the first (points out of order or count)")
    if b.restrict(a.points) != a:
        raise InputError("second space does not restrict to the first")
    xs = _default_vars(len(a))
    if witness in xs:
        raise InputError(f"witness variable {witness!r} clashes with a base variable")
    d_b = gen_config_formula(b, sort, xs + [witness])
    d_a = gen_config_formula(a, sort, xs)
    body: Formula = Quant("inf", witness, sort, d_b)
    if d_a != Const(0):
        body = Binary("-.", body, d_a)
    for x in reversed(xs):
        body = Quant("sup", x, sort, body)
    return body


def weighted_sum(formulas: Sequence[Formula], bounds: Sequence[RationalLike]) -> Formula:
    """``sum_n phi_n / (B_n 2^(n+1))``; the value stays below ``1 - 2^-k``."""
    if len(formulas) != len(bounds):
        raise InputError(f"{len(formulas)} formulas but {len(bounds)} bounds")
    if not formulas:
        return Const(0)
    terms = []
    for n, (phi, b) in enumerate(zip(formulas, bounds)):
        b = as_fraction(b)
        if b <= 0:
            raise DomainError("bounds must be positive")
        terms.append(Scale(1 / (b * 2 ** (n + 1)), phi))
    return join("+", terms)


# --------------------------------------------------------------------------
# deterministic families


def enumerate_terms(sig: Signature, context: Mapping[str, str], sort: str, depth: int = 1) -> list[Term]:
    """Variables and constants of ``sort``, then function applications up to ``depth``."""
    levels: dict[str, list[Term]] = {s.name: [] for s in sig.sorts}
    for name, s in context.items():
        levels[s].append(Var(name, s))
    for f in sig.functions:
        if not f.domain:
            levels[f.codomain].append(App(f.name))
    for _ in range(depth):
        new: dict[str, list[Term]] = {s: list(ts) for s, ts in levels.items()}
        for f in sig.functions:
            if not f.domain:
                continue
            pools = [levels[s] for s in f.domain]
            for args in _product(pools):
                t = App(f.name, args)
                if t not in new[f.codomain]:
                    new[f.codomain].append(t)
        levels = new
    return levels[sort]


def _product(pools: Sequence[Sequence]):
    if not pools:
        yield ()
        return
    for head in pools[0]:
        for rest in _product(pools[1:]):
            yield (head, *rest)


def _constants(denominator: int) -> list[Const]:
    seen: dict[Fraction, None] = {}
    for q in range(1, denominator + 1):
        for p in range(0, q + 1):
            seen.setdefault(Fraction(p, q))
    return [Const(v) for v in sorted(seen)]


def _atoms(sig: Signature, context: Mapping[str, str], term_depth: int) -> list[Formula]:
    out: list[Formula] = []
    terms = {s.name: enumerate_terms(sig, context, s.name, term_depth) for s in sig.sorts}
    for s in sig.sorts:
        ts = terms[s.name]
        for i, t1 in enumerate(ts):
            for t2 in ts[i:]:
                out.append(Dist(s.name, t1, t2))
    for r in sig.relations:
        for args in _product([terms[s] for s in r.domain]):
            out.append(Atomic(r.name, args))
    return out


def _fresh(context: Mapping[str, str], taken: Iterable[str] = ()) -> str:
    used = set(context) | set(taken)
    for base in ("u", "v", "w"):
        if base not in used:
            return base
    i = 1
    while f"u{i}" in used:
        i += 1
    return f"u{i}"


def _reserved_names(sig: Signature) -> set[str]:
    return set(sig.function_map) | set(sig.relation_map) | set(sig.sort_map)


@dataclass(frozen=True)
class FormulaFamily:
    """A finite, deterministically ordered list of formulas over a variable context.

    Families are produced either by :func:`enumerate_formulas` (recording the
    generation parameters) or from an explicit list.
    """

    context: tuple[tuple[str, str], ...]
    formulas: tuple[Formula, ...]
    params: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.formulas)

    def __iter__(self):
        return iter(self.formulas)

    def __getitem__(self, i):
        return self.formulas[i]

    @property
    def variables(self) -> dict[str, str]:
        return dict(self.context)

    @classmethod
    def of(cls, formulas: Iterable[Formula], context: Mapping[str, str] | None = None) -> "FormulaFamily":
        formulas = tuple(formulas)
        ctx: dict[str, str] = dict(context or {})
        for phi in formulas:
            for name, s in free_vars(phi).items():
                if ctx.setdefault(name, s) != s:
                    raise InputError(f"variable {name} has sorts {ctx[name]} and {s} across the family")
        return cls(tuple(ctx.items()), formulas, {"explicit": True})

    def restricted(self, limit: int) -> "FormulaFamily":
        return FormulaFamily(self.context, self.formulas[:limit], dict(self.params, limit=limit))


def enumerate_formulas(
    sig: Signature,
    context: Mapping[str, str] | None = None,
    *,
    max_quantifier_depth: int = 0,
    max_connective_depth: int = 1,
    denominator: int = 2,
    term_depth: int = 1,
    quantifier_sorts: Sequence[str] | None = None,
    limit: int | None = None,
) -> FormulaFamily:
    """Deterministic finite stand-in for the space of basic formulas.

    The family holds every formula of quantifier depth at most
    ``max_quantifier_depth`` and connective depth at most
    ``max_connective_depth`` (nesting of connectives, counted through
    quantifiers) built from rational constants ``p/q`` in ``[0, 1]`` with
    ``q <= denominator``, atomic formulas over terms of depth at most
    ``term_depth``, and ``sup``/``inf`` over one fresh variable per
    quantifier level (only around bodies in which that variable occurs).
    Order is generation order and duplicates are dropped, so equal
    parameters give an equal family.
    """
    ctx = dict(context or {})
    clash = set(ctx) & _reserved_names(sig)
    if clash:
        raise InputError(f"context variables {sorted(clash)} clash with symbol names")
    qsorts = list(quantifier_sorts) if quantifier_sorts is not None else [s.name for s in sig.sorts]
    consts = _constants(denominator)

    memo: dict[tuple, list[Formula]] = {}

    def quantified(ctx: dict[str, str], qdepth: int, cdepth: int) -> list[Formula]:
        if qdepth <= 0:
            return []
        y = _fresh(ctx, _reserved_names(sig))
        out = []
        for s in qsorts:
            for body in build({**ctx, y: s}, qdepth - 1, cdepth):
                if y in free_vars(body):
                    out.extend(Quant(kind, y, s, body) for kind in ("sup", "inf"))
        return out

    def build(ctx: dict[str, str], qdepth: int, cdepth: int) -> list[Formula]:
        key = (tuple(ctx.items()), qdepth, cdepth)
        if key in memo:
            return memo[key]
        if cdepth == 0:
            level = dict.fromkeys(consts)
            level.update(dict.fromkeys(_atoms(sig, ctx, term_depth)))
        else:
            below = build(ctx, qdepth, cdepth - 1)
            level = dict.fromkeys(below)
            for phi in below:
                if not isinstance(phi, Const):
                    for op in ("neg", "abs"):
                        level.setdefault(Unary(op, phi))
            for left in below:
                for right in below:
                    if isinstance(left, Const) and isinstance(right, Const):
                        continue
                    for op in BINARY_OPS:
                        level.setdefault(Binary(op, left, right))
        for phi in quantified(ctx, qdepth, cdepth):
            level.setdefault(phi)
        memo[key] = list(level)
        return memo[key]

    formulas = build(ctx, max_quantifier_depth, max_connective_depth)
    for phi in formulas:
        check_formula(phi, sig)
    if limit is not None:
        formulas = formulas[:limit]
    params = dict(
        max_quantifier_depth=max_quantifier_depth,
        max_connective_depth=max_connective_depth,
        denominator=denominator,
        term_depth=term_depth,
        limit=limit,
    )
    return FormulaFamily(tuple(ctx.items()), tuple(formulas), params)


# --------------------------------------------------------------------------
# random formulas


def _random_rational(rng: random.Random, denominator: int, signed: bool = True) -> Fraction:
    q = rng.randint(1, denominator)
    p = rng.randint(-q if signed else 0, q)
    return Fraction(p, q)


def _random_term(rng: random.Random, sig: Signature, ctx: Mapping[str, str], sort: str, depth: int) -> Term:
    vars_ = [n for n, s in ctx.items() if s == sort]
    consts = [f for f in sig.functions if not f.domain and f.codomain == sort]
    funcs = [f for f in sig.functions if f.domain and f.codomain == sort]
    leaves: list[Term] = [Var(n, sort) for n in vars_] + [App(c.name) for c in consts]
    if funcs and depth > 0 and (not leaves or rng.random() < 0.4):
        f = rng.choice(funcs)
        return App(f.name, [_random_term(rng, sig, ctx, s, depth - 1) for s in f.domain])
    if not leaves:
        raise DomainError(f"no closed term of sort {sort!r} is available")
    return rng.choice(leaves)


def _has_term(sig: Signature, ctx: Mapping[str, str], sort: str, depth: int = 2) -> bool:
    if any(s == sort for s in ctx.values()):
        return True
    for f in sig.functions:
        if f.codomain != sort:
            continue
        if not f.domain:
            return True
        if depth > 0 and all(_has_term(sig, ctx, s, depth - 1) for s in f.domain):
            return True
    return False


def random_formula(
    rng: random.Random,
    sig: Signature,
    context: Mapping[str, str] | None = None,
    *,
    max_quantifier_depth: int = 2,
    max_depth: int = 4,
    denominator: int = 6,
    variable_pool: Sequence[str] = ("x", "y", "z", "w"),
) -> Formula:
    """A random well-sorted formula using every node type.

    Quantifiers bind names from ``variable_pool`` and may shadow outer
    variables of the same or another sort.
    """
    ctx = dict(context or {})

    def atom(ctx: dict[str, str]) -> Formula:
        options = []
        for s in sig.sorts:
            if _has_term(sig, ctx, s.name):
                options.append(("dist", s.name))
        for r in sig.relations:
            if all(_has_term(sig, ctx, s) for s in r.domain):
                options.append(("rel", r.name))
        if not options or rng.random() < 0.15:
            return Const(_random_rational(rng, denominator))
        kind, name = rng.choice(options)
        if kind == "dist":
            return Dist(name, _random_term(rng, sig, ctx, name, 1), _random_term(rng, sig, ctx, name, 1))
        r = sig.relation(name)
        return Atomic(name, [_random_term(rng, sig, ctx, s, 1) for s in r.domain])

    def go(ctx: dict[str, str], depth: int, qdepth: int) -> Formula:
        if depth <= 0:
            return atom(ctx)
        roll = rng.random()
        if qdepth > 0 and roll < 0.3:
            var = rng.choice(list(variable_pool))
            s = rng.choice(sig.sorts).name
            return Quant(rng.choice(("sup", "inf")), var, s, go({**ctx, var: s}, depth - 1, qdepth - 1))
        if roll < 0.45:
            return Unary(rng.choice(("neg", "abs")), go(ctx, depth - 1, qdepth))
        if roll < 0.55:
            return Scale(_random_rational(rng, denominator), go(ctx, depth - 1, qdepth))
        if roll < 0.85:
            op = rng.choice(BINARY_OPS)
            return Binary(op, go(ctx, depth - 1, qdepth), go(ctx, depth - 1, qdepth))
        return atom(ctx)

    phi = go(ctx, max_depth, max_quantifier_depth)
    check_formula(phi, sig)
    return phi
