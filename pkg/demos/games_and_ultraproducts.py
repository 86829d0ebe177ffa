"""
Games, isomorphisms and principal ultraproducts
===============================================
"""

import random
from fractions import Fraction as F

from cfol import (
    Family,
    GameSpec,
    Signature,
    Sort,
    Structure,
    Ultrafilter,
    back_and_forth_iso,
    ef_solve,
    find_isomorphism,
    los_check,
    parse_formula,
    random_formula,
    ultraproduct,
)
from cfol.games import describe_tree

sig = Signature([Sort("S", 1)])


def pair(d):
    return Structure(sig, {"S": ["a", "b"]}, {"S": [[0, d], [d, 0]]})


# two points at distance 1 against two points at distance 1/2
delta = [parse_formula("d[S](x1, x2)", sig, {"x1": "S", "x2": "S"})]
tree = ef_solve(GameSpec(pair(1), pair(F(1, 2)), delta, F(1, 4)))
print(describe_tree(tree))

# with a looser eps the gap of 1/2 no longer separates them
print("eps 3/4:", ef_solve(GameSpec(pair(1), pair(F(1, 2)), delta, F(3, 4))).winner)

# back and forth stalls after one pair
print(back_and_forth_iso(pair(1), pair(F(1, 2))).violations)

# a family of three random metric spaces
rng = random.Random(7)


def random_space(n, prefix):
    w = {(i, j): F(rng.randint(1, 6), 6) for i in range(n) for j in range(i + 1, n)}
    d = [[F(0) if i == j else w[min(i, j), max(i, j)] for j in range(n)] for i in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                d[i][j] = min(d[i][j], d[i][k] + d[k][j])
    return Structure(sig, {"S": [f"{prefix}{i}" for i in range(n)]}, {"S": d})


fam = Family([random_space(n, f"m{k}_") for k, n in enumerate((3, 4, 2))])
u = Ultrafilter(fam.index, 1)
up = ultraproduct(fam, u)
print("ultraproduct size", up.structure.size(), "isomorphic to member 1:", find_isomorphism(up.structure, fam[1]).kind)

# Los: formula values in the product match the limit of factor values
formulas = [random_formula(rng, sig, {"x": "S", "y": "S"}, max_quantifier_depth=2) for _ in range(10)]
report = los_check(fam, u, formulas, samples=None, up=up)
print("los samples", report.checked, "discrepancies", len(report.discrepancies))
