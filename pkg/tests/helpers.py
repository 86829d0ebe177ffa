"""Builders for test structures and independent brute-force oracles.

The oracles here deliberately avoid the package's evaluation code paths so
they can cross-check it.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction as F

from cfol import (
    Atomic,
    Binary,
    Const,
    Dist,
    FunctionSymbol,
    Modulus,
    Quant,
    RelationSymbol,
    Scale,
    Signature,
    Sort,
    Structure,
    Unary,
    validate_structure,
)
from cfol.syntax import App, Var

METRIC_SIG = Signature([Sort("S", 1)])
UNARY_R_SIG = Signature([Sort("S", 1)], [], [RelationSymbol("R", ["S"])])
EIGHTH = Modulus([(0, 0), (1, F(1, 8))])
RANDOM_SIG = Signature(
    [Sort("S", 1)],
    [FunctionSymbol("f", ["S"], "S", EIGHTH), FunctionSymbol("c", [], "S")],
    [RelationSymbol("R", ["S"], 1, EIGHTH)],
)
FUNC_SIG = Signature([Sort("S", 1)], [FunctionSymbol("f", ["S"], "S")])


def metric_structure(points, matrix, sig=METRIC_SIG, **kw) -> Structure:
    return Structure(sig, {"S": list(points)}, {"S": matrix}, **kw)


def line_net(n: int, mesh=None) -> Structure:
    """``n`` equally spaced points of ``[0, 1]`` with the usual metric and ``R(x) = x``."""
    vals = [F(k, n - 1) for k in range(n)]
    pts = [f"p{k}" for k in range(n)]
    return Structure(
        UNARY_R_SIG,
        {"S": pts},
        {"S": [[abs(a - b) for b in vals] for a in vals]},
        relations={"R": {(p,): v for p, v in zip(pts, vals)}},
        net_mesh=mesh,
    )


def discrete_with_values(vals) -> Structure:
    """Discrete metric (all distances 1) with ``R`` taking the given values."""
    pts = [f"p{i}" for i in range(len(vals))]
    n = len(vals)
    return Structure(
        UNARY_R_SIG,
        {"S": pts},
        {"S": [[0 if i == j else 1 for j in range(n)] for i in range(n)]},
        relations={"R": {(p,): F(v) for p, v in zip(pts, vals)}},
    )


def shortest_paths(n: int, weights: dict) -> list[list[F]]:
    """Floyd-Warshall closure of a complete weighted graph."""
    d = [[F(0) if i == j else weights[min(i, j), max(i, j)] for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return d


def random_matrix(rng: random.Random, n: int, denominator: int = 12) -> list[list[F]]:
    weights = {(i, j): F(rng.randint(1, denominator), denominator) for i in range(n) for j in range(i + 1, n)}
    return shortest_paths(n, weights)


def random_structure(rng: random.Random, n: int, denominator: int = 12, prefix: str = "a") -> Structure:
    """A valid structure over ``RANDOM_SIG`` with ``n`` points."""
    pts = [f"{prefix}{i}" for i in range(n)]
    mat = random_matrix(rng, n, denominator)
    for _ in range(200):
        f = {(p,): rng.choice(pts) for p in pts}
        r = {(p,): F(rng.randint(0, denominator), denominator) for p in pts}
        m = Structure(RANDOM_SIG, {"S": pts}, {"S": mat}, {"f": f, "c": {(): rng.choice(pts)}}, {"R": r})
        if not validate_structure(m):
            return m
    # identity map and a constant relation always comply
    return Structure(
        RANDOM_SIG, {"S": pts}, {"S": mat}, {"f": {(p,): p for p in pts}, "c": {(): pts[0]}}, {"R": {(p,): 0 for p in pts}}
    )


def restrict(m: Structure, keep) -> Structure:
    """Induced substructure on ``keep`` (caller ensures closure under functions)."""
    keep = [p for p in m.points("S") if p in set(keep)]
    idx = [m.points("S").index(p) for p in keep]
    mat = [[m.metrics["S"][i][j] for j in idx] for i in idx]
    functions = {f: {k: v for k, v in tbl.items() if all(a in keep for a in k)} for f, tbl in m.functions.items()}
    relations = {r: {k: v for k, v in tbl.items() if all(a in keep for a in k)} for r, tbl in m.relations.items()}
    return Structure(m.signature, {"S": keep}, {"S": mat}, functions, relations, m.net_mesh)


def closure(m: Structure, seed) -> set[str]:
    """Smallest subset containing ``seed`` and the constants, closed under the functions."""
    out = set(seed)
    for f in m.signature.functions:
        if not f.domain:
            out.add(m.functions[f.name][()])
    while True:
        new = {m.functions[f.name][(p,)] for f in m.signature.functions if f.domain for p in out} - out
        if not new:
            return out
        out |= new


# --------------------------------------------------------------------------
# independent evaluator


def naive_term(m: Structure, t, env):
    if isinstance(t, Var):
        return env[t.name]
    return m.functions[t.func][tuple(naive_term(m, a, env) for a in t.args)]


def naive_value(m: Structure, phi, env) -> F:
    """Plain recursive evaluation straight from the tables."""
    if isinstance(phi, Const):
        return phi.value
    if isinstance(phi, Atomic):
        return m.relations[phi.rel][tuple(naive_term(m, a, env) for a in phi.args)]
    if isinstance(phi, Dist):
        pts = m.carriers[phi.sort]
        a, b = naive_term(m, phi.left, env), naive_term(m, phi.right, env)
        return m.metrics[phi.sort][pts.index(a)][pts.index(b)]
    if isinstance(phi, Unary):
        v = naive_value(m, phi.arg, env)
        return -v if phi.op == "neg" else abs(v)
    if isinstance(phi, Scale):
        return phi.factor * naive_value(m, phi.arg, env)
    if isinstance(phi, Binary):
        x, y = naive_value(m, phi.left, env), naive_value(m, phi.right, env)
        return {
            "+": lambda: x + y,
            "-": lambda: x - y,
            "*": lambda: x * y,
            "max": lambda: max(x, y),
            "min": lambda: min(x, y),
            "-.": lambda: max(F(0), x - y),
        }[phi.op]()
    assert isinstance(phi, Quant)
    vals = [naive_value(m, phi.body, {**env, phi.var: p}) for p in m.carriers[phi.sort]]
    return max(vals) if phi.kind == "sup" else min(vals)


def app(name, *args):
    return App(name, tuple(args))


# --------------------------------------------------------------------------
# EF game brute force (no memo, no shared code with the solver)


def brute_gap(g, pos) -> F:
    names = [v for v, _ in g.variables]
    env_m, env_n = dict(zip(names, pos[0])), dict(zip(names, pos[1]))
    return max((abs(naive_value(g.m, phi, env_m) - naive_value(g.n, phi, env_n)) for phi in g.delta), default=F(0))


def _moves(g, pos):
    s = g.variables[len(pos[0])][1]
    return [("M", p) for p in g.m.points(s)] + [("N", p) for p in g.n.points(s)]


def _step(pos, side, p, r):
    return (pos[0] + (p,), pos[1] + (r,)) if side == "M" else (pos[0] + (r,), pos[1] + (p,))


def brute_ii_wins(g, pos=((), ())) -> bool:
    if len(pos[0]) == len(g.variables):
        return brute_gap(g, pos) < g.eps
    s = g.variables[len(pos[0])][1]
    for side, p in _moves(g, pos):
        other = g.n if side == "M" else g.m
        if not any(brute_ii_wins(g, _step(pos, side, p, r)) for r in other.points(s)):
            return False
    return True


def brute_first_challenge(g, pos):
    """Player I's first winning challenge in move order, or None."""
    s = g.variables[len(pos[0])][1]
    for side, p in _moves(g, pos):
        other = g.n if side == "M" else g.m
        if not any(brute_ii_wins(g, _step(pos, side, p, r)) for r in other.points(s)):
            return side, p
    return None


def brute_first_answer(g, pos, side, p):
    s = g.variables[len(pos[0])][1]
    other = g.n if side == "M" else g.m
    for r in other.points(s):
        if brute_ii_wins(g, _step(pos, side, p, r)):
            return r
    return None


def tree_disagreements(tree) -> list[str]:
    """Every explored position, chosen challenge and chosen answer rechecked by brute force."""
    g = tree.spec
    bad = []
    for pos, ii in tree.values.items():
        if brute_ii_wins(g, pos) != ii:
            bad.append(f"value at {pos}")
    for pos, move in tree.challenges.items():
        if brute_first_challenge(g, pos) != move:
            bad.append(f"challenge at {pos}")
    for (pos, side, p), r in tree.responses.items():
        if brute_first_answer(g, pos, side, p) != r:
            bad.append(f"answer at {pos} to {side} {p}")
    return bad


# --------------------------------------------------------------------------
# Tarski-Vaught oracle


def brute_tv(n: Structure, m: Structure, formulas, y="y") -> bool:
    from cfol import free_vars

    for phi in formulas:
        ctx = dict(free_vars(phi))
        ys = ctx.pop(y, None)
        if ys is None:
            continue
        names = list(ctx)
        for combo in itertools.product(*(n.carriers[ctx[v]] for v in names)):
            env = dict(zip(names, combo))
            small = min(naive_value(m, phi, {**env, y: b}) for b in n.carriers[ys])
            large = min(naive_value(m, phi, {**env, y: b}) for b in m.carriers[ys])
            if small != large:
                return False
    return True


def shuffled_copy(m: Structure, rng: random.Random, prefix: str = "b") -> Structure:
    """Isomorphic copy of a one-sort structure with renamed, reordered points."""
    old = list(m.points("S"))
    order = old[:]
    rng.shuffle(order)
    rename = {p: f"{prefix}{i}" for i, p in enumerate(order)}
    pts = [rename[p] for p in order]
    mat = [[m.metrics["S"][old.index(p)][old.index(q)] for q in order] for p in order]
    functions = {f: {tuple(rename[a] for a in k): rename[v] for k, v in tbl.items()} for f, tbl in m.functions.items()}
    relations = {r: {tuple(rename[a] for a in k): v for k, v in tbl.items()} for r, tbl in m.relations.items()}
    return Structure(m.signature, {"S": pts}, {"S": mat}, functions, relations, m.net_mesh)


def augmented_discrete_fixture() -> Structure:
    """Discrete carrier with R-values 0, 1/4, ..., 1 plus values 1/2 + 2^-k closing in on 1/2."""
    vals = sorted({F(k, 4) for k in range(5)} | {F(1, 2) + F(1, 2**k) for k in range(1, 13)})
    return discrete_with_values(vals)


def brute_witness_ok(family, phi, psi, delta, eps) -> bool:
    """Both definability conditions, rechecked with the independent evaluator."""
    from cfol import free_vars

    names = list(free_vars(phi))
    for m in family:
        tuples = list(itertools.product(*(m.carriers[free_vars(phi)[v]] for v in names)))
        zero = [t for t in tuples if naive_value(m, phi, dict(zip(names, t))) == 0]

        def dist(s, t):
            return max((m.dist(free_vars(phi)[v], a, b) for v, a, b in zip(names, s, t)), default=F(0))

        for t in tuples:
            val = naive_value(m, psi, dict(zip(names, t)))
            if t in zero and val != 0:
                return False
            if val < delta and (not zero or min(dist(t, z) for z in zero) > eps):
                return False
    return True
