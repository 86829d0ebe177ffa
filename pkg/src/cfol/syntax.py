"""Terms and basic formulas of continuous logic.

Nodes are frozen dataclasses, so structural equality and hashing come for
free.  Derived data (sort, range, bound, modulus) is computed against a
signature by the functions below and cached per node.

The connective set is fixed: rational constants, ``neg``, ``abs``,
rational scaling, ``+``, ``-``, ``*``, ``max``, ``min`` and truncated
subtraction ``-.``.  Every one of them has an exact rational image of a
box, which is what makes bounds and moduli computable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

from .errors import InputError
from .rational import Fraction, RationalLike, as_fraction
from .signature import Modulus, Signature, modulus_compose_term

__all__ = [
    "Term",
    "Var",
    "App",
    "Formula",
    "Const",
    "Atomic",
    "Dist",
    "Unary",
    "Scale",
    "Binary",
    "Quant",
    "UNARY_OPS",
    "BINARY_OPS",
    "dotminus",
    "apply_unary",
    "apply_binary",
    "term_sort",
    "term_modulus",
    "formula_range",
    "formula_bound",
    "formula_modulus",
    "free_vars",
    "check_formula",
    "quantifier_count",
    "quantifier_depth",
    "connective_depth",
    "is_quantifier_free",
    "is_atomic",
    "print_term",
    "print_formula",
    "substitute",
]

UNARY_OPS = ("neg", "abs")
BINARY_OPS = ("+", "-", "*", "max", "min", "-.")


# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Var:
    name: str
    sort: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    func: str
    args: tuple["Term", ...] = ()

    def __init__(self, func: str, args: Sequence["Term"] = ()):
        object.__setattr__(self, "func", func)
        object.__setattr__(self, "args", tuple(args))

    def __str__(self) -> str:
        return print_term(self)


Term = Union[Var, App]


# --------------------------------------------------------------------------
# formulas


class _Node:
    def __str__(self) -> str:
        return print_formula(self)  # type: ignore[arg-type]


@dataclass(frozen=True, repr=False)
class Const(_Node):
    value: Fraction

    def __init__(self, value: RationalLike):
        object.__setattr__(self, "value", as_fraction(value))

    def __repr__(self) -> str:
        return f"Const({self.value})"


@dataclass(frozen=True, repr=False)
class Atomic(_Node):
    rel: str
    args: tuple[Term, ...] = ()

    def __init__(self, rel: str, args: Sequence[Term] = ()):
        object.__setattr__(self, "rel", rel)
        object.__setattr__(self, "args", tuple(args))

    def __repr__(self) -> str:
        return f"Atomic({print_formula(self)})"


@dataclass(frozen=True, repr=False)
class Dist(_Node):
    sort: str
    left: Term
    right: Term

    def __repr__(self) -> str:
        return f"Dist({print_formula(self)})"


@dataclass(frozen=True, repr=False)
class Unary(_Node):
    op: str
    arg: "Formula"

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise InputError(f"unknown unary connective {self.op!r}")

    def __repr__(self) -> str:
        return f"Unary({print_formula(self)})"


@dataclass(frozen=True, repr=False)
class Scale(_Node):
    factor: Fraction
    arg: "Formula"

    def __init__(self, factor: RationalLike, arg: "Formula"):
        object.__setattr__(self, "factor", as_fraction(factor))
        object.__setattr__(self, "arg", arg)

    def __repr__(self) -> str:
        return f"Scale({print_formula(self)})"


@dataclass(frozen=True, repr=False)
class Binary(_Node):
    op: str
    left: "Formula"
    right: "Formula"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise InputError(f"unknown binary connective {self.op!r}")

    def __repr__(self) -> str:
        return f"Binary({print_formula(self)})"


@dataclass(frozen=True, repr=False)
class Quant(_Node):
    kind: str  # "sup" | "inf"
    var: str
    sort: str
    body: "Formula"

    def __post_init__(self):
        if self.kind not in ("sup", "inf"):
            raise InputError(f"unknown quantifier {self.kind!r}")

    def __repr__(self) -> str:
        return f"Quant({print_formula(self)})"


Formula = Union[Const, Atomic, Dist, Unary, Scale, Binary, Quant]


# --------------------------------------------------------------------------
# connective arithmetic


def dotminus(x: Fraction, y: Fraction) -> Fraction:
    """Truncated subtraction ``max(0, x - y)``."""
    return max(Fraction(0), x - y)


def apply_unary(op: str, x: Fraction) -> Fraction:
    if op == "neg":
        return -x
    return abs(x)


def apply_binary(op: str, x: Fraction, y: Fraction) -> Fraction:
    if op == "+":
        return x + y
    if op == "-":
        return x - y
    if op == "*":
        return x * y
    if op == "max":
        return max(x, y)
    if op == "min":
        return min(x, y)
    return dotminus(x, y)


def _image_unary(op: str, lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
    if op == "neg":
        return -hi, -lo
    if lo >= 0:
        return lo, hi
    if hi <= 0:
        return -hi, -lo
    return Fraction(0), max(-lo, hi)


def _image_binary(op, a: tuple[Fraction, Fraction], b: tuple[Fraction, Fraction]):
    (l1, h1), (l2, h2) = a, b
    if op == "+":
        return l1 + l2, h1 + h2
    if op == "-":
        return l1 - h2, h1 - l2
    if op == "*":
        corners = [l1 * l2, l1 * h2, h1 * l2, h1 * h2]
        return min(corners), max(corners)
    if op == "max":
        return max(l1, l2), max(h1, h2)
    if op == "min":
        return min(l1, l2), min(h1, h2)
    return dotminus(l1, h2), dotminus(h1, l2)


# --------------------------------------------------------------------------
# sorting, ranges, moduli


def term_sort(t: Term, sig: Signature) -> str:
    if isinstance(t, Var):
        sig.sort(t.sort)
        return t.sort
    f = sig.function(t.func)
    if len(t.args) != f.arity:
        raise InputError(f"{t.func} expects {f.arity} arguments, got {len(t.args)}")
    for arg, want in zip(t.args, f.domain):
        got = term_sort(arg, sig)
        if got != want:
            raise InputError(f"argument {print_term(arg)} of {t.func} has sort {got}, expected {want}")
    return f.codomain


@lru_cache(maxsize=None)
def term_modulus(t: Term, sig: Signature) -> Modulus:
    if isinstance(t, Var) or not t.args:
        return Modulus.identity()
    f = sig.function(t.func)
    return modulus_compose_term(f.modulus, [term_modulus(a, sig) for a in t.args])


def check_formula(phi: Formula, sig: Signature) -> None:
    """Raise InputError unless every symbol application is well-sorted."""
    if isinstance(phi, Const):
        return
    if isinstance(phi, Atomic):
        r = sig.relation(phi.rel)
        if len(phi.args) != r.arity:
            raise InputError(f"{phi.rel} expects {r.arity} arguments, got {len(phi.args)}")
        for arg, want in zip(phi.args, r.domain):
            got = term_sort(arg, sig)
            if got != want:
                raise InputError(f"argument {print_term(arg)} of {phi.rel} has sort {got}, expected {want}")
        return
    if isinstance(phi, Dist):
        sig.sort(phi.sort)
        for arg in (phi.left, phi.right):
            got = term_sort(arg, sig)
            if got != phi.sort:
                raise InputError(f"argument {print_term(arg)} of d[{phi.sort}] has sort {got}")
        return
    if isinstance(phi, (Unary, Scale)):
        check_formula(phi.arg, sig)
        return
    if isinstance(phi, Binary):
        check_formula(phi.left, sig)
        check_formula(phi.right, sig)
        return
    sig.sort(phi.sort)
    check_formula(phi.body, sig)
    free_vars(phi)


@lru_cache(maxsize=None)
def formula_range(phi: Formula, sig: Signature) -> tuple[Fraction, Fraction]:
    """Exact interval guaranteed to contain every value of ``phi``.

    Atomic relations range over ``[-B_R, B_R]``, metrics over ``[0, B_S]``,
    constants over the single point ``{q}``; connectives take the exact image
    of their arguments' intervals.
    """
    if isinstance(phi, Const):
        return phi.value, phi.value
    if isinstance(phi, Atomic):
        b = sig.relation(phi.rel).bound
        return -b, b
    if isinstance(phi, Dist):
        return Fraction(0), sig.sort(phi.sort).bound
    if isinstance(phi, Unary):
        return _image_unary(phi.op, *formula_range(phi.arg, sig))
    if isinstance(phi, Scale):
        lo, hi = formula_range(phi.arg, sig)
        q = phi.factor
        return (q * lo, q * hi) if q >= 0 else (q * hi, q * lo)
    if isinstance(phi, Binary):
        return _image_binary(phi.op, formula_range(phi.left, sig), formula_range(phi.right, sig))
    return formula_range(phi.body, sig)


def formula_bound(phi: Formula, sig: Signature) -> Fraction:
    """Least ``B`` with the range of ``phi`` inside ``[-B, B]``."""
    lo, hi = formula_range(phi, sig)
    return max(abs(lo), abs(hi))


@lru_cache(maxsize=None)
def formula_modulus(phi: Formula, sig: Signature) -> Modulus:
    """Uniform continuity modulus of ``phi`` in its free variables (tuple metric = max)."""
    if isinstance(phi, Const):
        return Modulus.identity()
    if isinstance(phi, Atomic):
        if not phi.args:
            return Modulus.identity()
        r = sig.relation(phi.rel)
        return modulus_compose_term(r.modulus, [term_modulus(a, sig) for a in phi.args])
    if isinstance(phi, Dist):
        # the metric is 1-Lipschitz in each argument; the halving in the term
        # composition makes the identity a valid outer modulus
        return modulus_compose_term(Modulus.identity(), [term_modulus(phi.left, sig), term_modulus(phi.right, sig)])
    if isinstance(phi, Unary):
        return formula_modulus(phi.arg, sig)
    if isinstance(phi, Scale):
        if phi.factor == 0 or _rigid(phi.arg):
            return Modulus.identity()
        return formula_modulus(phi.arg, sig).scale_input(1 / abs(phi.factor))
    if isinstance(phi, Binary):
        parts = [(c, w) for c, w in _lipschitz_weights(phi, sig) if not _rigid(c)]
        if phi.op in ("max", "min"):
            if not parts:
                return Modulus.identity()
            return Modulus.minimum([formula_modulus(c, sig) for c, _ in parts])
        total = sum((w for _, w in parts), Fraction(0))
        if total == 0:
            return Modulus.identity()
        return Modulus.minimum([formula_modulus(c, sig).scale_input(1 / total) for c, _ in parts])
    return formula_modulus(phi.body, sig)


@lru_cache(maxsize=None)
def _rigid(phi: Formula) -> bool:
    """True when no variable occurs at all, free or bound.

    Closed formulas with quantifiers are not rigid: their value moves when the
    carrier is refined, which matters for net certification.
    """
    if isinstance(phi, Const):
        return True
    if isinstance(phi, Atomic):
        return not any(_term_vars_any(a) for a in phi.args)
    if isinstance(phi, Dist):
        return not (_term_vars_any(phi.left) or _term_vars_any(phi.right))
    if isinstance(phi, (Unary, Scale)):
        return _rigid(phi.arg)
    if isinstance(phi, Binary):
        return _rigid(phi.left) and _rigid(phi.right)
    return False


def _term_vars_any(t: Term) -> bool:
    return isinstance(t, Var) or any(_term_vars_any(a) for a in t.args)


def _lipschitz_weights(phi: Binary, sig: Signature):
    """Per-argument Lipschitz coefficients of the connective on the argument ranges."""
    if phi.op == "*":
        return [(phi.left, formula_bound(phi.right, sig)), (phi.right, formula_bound(phi.left, sig))]
    return [(phi.left, Fraction(1)), (phi.right, Fraction(1))]


# --------------------------------------------------------------------------
# structural helpers


def _term_vars(t: Term, out: dict[str, str]) -> None:
    if isinstance(t, Var):
        prev = out.setdefault(t.name, t.sort)
        if prev != t.sort:
            raise InputError(f"variable {t.name} used with sorts {prev} and {t.sort}")
    else:
        for a in t.args:
            _term_vars(a, out)


@lru_cache(maxsize=None)
def _free_vars(phi: Formula) -> tuple[tuple[str, str], ...]:
    out: dict[str, str] = {}
    if isinstance(phi, Atomic):
        for a in phi.args:
            _term_vars(a, out)
    elif isinstance(phi, Dist):
        _term_vars(phi.left, out)
        _term_vars(phi.right, out)
    elif isinstance(phi, (Unary, Scale)):
        out.update(_free_vars(phi.arg))
    elif isinstance(phi, Binary):
        for part in (phi.left, phi.right):
            for name, srt in _free_vars(part):
                prev = out.setdefault(name, srt)
                if prev != srt:
                    raise InputError(f"variable {name} used with sorts {prev} and {srt}")
    elif isinstance(phi, Quant):
        for name, srt in _free_vars(phi.body):
            if name == phi.var:
                if srt != phi.sort:
                    raise InputError(f"variable {name} bound at sort {phi.sort} but used at sort {srt}")
                continue
            out[name] = srt
    return tuple(out.items())


def free_vars(phi: Formula) -> dict[str, str]:
    """Free variables in order of first occurrence, mapped to their sorts."""
    return dict(_free_vars(phi))


def quantifier_count(phi: Formula) -> int:
    if isinstance(phi, (Unary, Scale)):
        return quantifier_count(phi.arg)
    if isinstance(phi, Binary):
        return quantifier_count(phi.left) + quantifier_count(phi.right)
    if isinstance(phi, Quant):
        return 1 + quantifier_count(phi.body)
    return 0


def quantifier_depth(phi: Formula) -> int:
    if isinstance(phi, (Unary, Scale)):
        return quantifier_depth(phi.arg)
    if isinstance(phi, Binary):
        return max(quantifier_depth(phi.left), quantifier_depth(phi.right))
    if isinstance(phi, Quant):
        return 1 + quantifier_depth(phi.body)
    return 0


def connective_depth(phi: Formula) -> int:
    if isinstance(phi, (Unary, Scale)):
        return 1 + connective_depth(phi.arg)
    if isinstance(phi, Binary):
        return 1 + max(connective_depth(phi.left), connective_depth(phi.right))
    if isinstance(phi, Quant):
        return connective_depth(phi.body)
    return 0


def is_quantifier_free(phi: Formula) -> bool:
    return quantifier_count(phi) == 0


def is_atomic(phi: Formula) -> bool:
    return isinstance(phi, (Atomic, Dist))


def _subst_term(t: Term, mapping: dict[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    return App(t.func, [_subst_term(a, mapping) for a in t.args])


def substitute(phi: Formula, mapping: dict[str, Term]) -> Formula:
    """Replace free variables by terms, renaming bound variables that would capture."""
    if isinstance(phi, Const):
        return phi
    if isinstance(phi, Atomic):
        return Atomic(phi.rel, [_subst_term(a, mapping) for a in phi.args])
    if isinstance(phi, Dist):
        return Dist(phi.sort, _subst_term(phi.left, mapping), _subst_term(phi.right, mapping))
    if isinstance(phi, Unary):
        return Unary(phi.op, substitute(phi.arg, mapping))
    if isinstance(phi, Scale):
        return Scale(phi.factor, substitute(phi.arg, mapping))
    if isinstance(phi, Binary):
        return Binary(phi.op, substitute(phi.left, mapping), substitute(phi.right, mapping))
    inner = {k: v for k, v in mapping.items() if k != phi.var}
    body_free = free_vars(phi.body)
    incoming: dict[str, str] = {}
    for k, t in inner.items():
        if k in body_free:
            _term_vars(t, incoming)
    var = phi.var
    if var in incoming:
        taken = set(incoming) | set(body_free) | set(inner)
        i = 1
        while f"{phi.var}{i}" in taken:
            i += 1
        var = f"{phi.var}{i}"
        inner[phi.var] = Var(var, phi.sort)
    return Quant(phi.kind, var, phi.sort, substitute(phi.body, inner))


# --------------------------------------------------------------------------
# printing (canonical concrete syntax, re-read by cfol.parser)


def _rat(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return t.func
    return f"{t.func}({', '.join(print_term(a) for a in t.args)})"


def _operand(phi: Formula) -> str:
    """Print a formula so it can sit inside a larger expression."""
    text = print_formula(phi)
    return f"({text})" if isinstance(phi, Quant) else text


def print_formula(phi: Formula) -> str:
    if isinstance(phi, Const):
        return _rat(phi.value)
    if isinstance(phi, Atomic):
        return f"{phi.rel}({', '.join(print_term(a) for a in phi.args)})"
    if isinstance(phi, Dist):
        return f"d[{phi.sort}]({print_term(phi.left)}, {print_term(phi.right)})"
    if isinstance(phi, Unary):
        inner = print_formula(phi.arg)
        if isinstance(phi.arg, Binary):
            inner = inner[1:-1]
        return f"{phi.op}({inner})"
    if isinstance(phi, Scale):
        return f"{_rat(phi.factor)} * {_operand(phi.arg)}"
    if isinstance(phi, Binary):
        left = _operand(phi.left)
        if phi.op == "*" and isinstance(phi.left, (Const, Scale)):
            left = f"({left})"
        return f"({left} {phi.op} {_operand(phi.right)})"
    return f"{phi.kind} {phi.var}:{phi.sort} . {print_formula(phi.body)}"
