"""
Zero sets and definability evidence
===================================

A zero set X is definable when some formula psi vanishes on X and is
bounded below by some delta away from an eps-neighbourhood of X.
"""

from fractions import Fraction as F

from cfol import RelationSymbol, Signature, Sort, Structure, definability_probe, parse_formula, zero_set

sig = Signature([Sort("S", 1)], [], [RelationSymbol("R", ["S"])])


def discrete(values):
    # all distances 1, R(p_i) = values[i]
    pts = [f"p{i}" for i in range(len(values))]
    n = len(pts)
    return Structure(
        sig,
        {"S": pts},
        {"S": [[0 if i == j else 1 for j in range(n)] for i in range(n)]},
        relations={"R": {(p,): v for p, v in zip(pts, values)}},
    )


phi = parse_formula("R(x) -. 1/2", sig, {"x": "S"})

five = discrete([F(k, 4) for k in range(5)])
print("zero set:", [t[0] for t in zero_set(five, phi).points])

# 3/4 sits a full 1/4 above the threshold, so phi itself separates
for entry in definability_probe([five], phi, [F(1, 2)]).entries:
    print("five points:", entry.describe())

# add values 1/2 + 2^-k: points just above 1/2 are still at distance 1 from X
crowded = discrete(sorted({F(k, 4) for k in range(5)} | {F(1, 2) + F(1, 2**k) for k in range(1, 13)}))
for entry in definability_probe([crowded], phi, [F(1, 2)]).entries:
    print("crowded:", entry.describe())
