"""
Certified values on refining nets of [0, 1]
===========================================

A net of mesh h stands in for the unit interval.  The radius bounds how far
the value on the net can be from the value on the full interval.
"""

from fractions import Fraction as F

from cfol import RelationSymbol, Signature, Sort, Structure, certified_eval, parse_formula

sig = Signature([Sort("S", 1)], [], [RelationSymbol("R", ["S"])])


def net(k):
    # 2^k + 1 equally spaced points, R(x) = x
    vals = [F(i, 2**k) for i in range(2**k + 1)]
    pts = [f"p{i}" for i in range(len(vals))]
    return Structure(
        sig,
        {"S": pts},
        {"S": [[abs(a - b) for b in vals] for a in vals]},
        relations={"R": {(p,): v for p, v in zip(pts, vals)}},
        net_mesh=F(1, 2 ** (k + 1)),
    )


phi = parse_formula("inf x:S . abs(R(x) - 1/3)", sig)

# on [0, 1] itself the value is 0; every interval below must contain it
for k in range(2, 7):
    res = certified_eval(net(k), phi)
    lo, hi = res.interval
    print(f"{2**k + 1:3d} points  value {str(res.value):6s} radius {str(res.radius):6s} interval [{lo}, {hi}]")
