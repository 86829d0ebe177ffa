"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest -v -s tests/test_acceptance.py`` or directly with
``python3 tests/test_acceptance.py``.  Every check pairs the package's
answer with an independent oracle from ``helpers``.
"""

from __future__ import annotations

import contextlib
import csv
import io
import itertools
import random
import sys
import tempfile
import time
from fractions import Fraction as F
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cfol import (  # noqa: E402
    DomainError,
    Family,
    FiniteMetric,
    GameSpec,
    PointedExtension,
    Structure,
    Ultrafilter,
    certified_eval,
    definability_probe,
    diff_amalgam,
    ef_solve,
    enumerate_formulas,
    find_isomorphism,
    formula_value,
    free_vars,
    gen_extension_axiom,
    los_check,
    parse_formula,
    path_amalgam,
    print_formula,
    random_formula,
    tarski_vaught_check,
    ultraproduct,
    validate_structure,
)
from cfol.amalgam import farey_extensions  # noqa: E402
from cfol.cli import main as cli_main  # noqa: E402
from cfol.io import load_metric, save_structure  # noqa: E402
from cfol.ultra import diagonal_map  # noqa: E402

from helpers import (  # noqa: E402
    FUNC_SIG,
    METRIC_SIG,
    RANDOM_SIG,
    UNARY_R_SIG,
    augmented_discrete_fixture,
    brute_ii_wins,
    brute_tv,
    brute_witness_ok,
    closure,
    discrete_with_values,
    line_net,
    metric_structure,
    naive_value,
    random_matrix,
    random_structure,
    restrict,
    shuffled_copy,
    tree_disagreements,
)

HALF = F(1, 2)


def brute_metric_ok(points, d) -> bool:
    """Zero diagonal, positivity, symmetry and every triangle, checked exhaustively."""
    for x in points:
        if d(x, x) != 0:
            return False
    for x, y in itertools.permutations(points, 2):
        if d(x, y) <= 0 or d(x, y) != d(y, x):
            return False
    return all(d(x, z) <= d(x, y) + d(y, z) for x, y, z in itertools.product(points, repeat=3))


def random_profile(rng: random.Random, a: FiniteMetric, den: int) -> list[F]:
    """A one-point extension profile with denominator ``den``; rejection first, attachment as fallback."""
    n = len(a.points)
    for _ in range(50):
        prof = [F(rng.randint(1, den), den) for _ in range(n)]
        try:
            PointedExtension(a, "probe", prof)
            return prof
        except DomainError:
            continue
    i, r = rng.randrange(n), F(rng.randint(1, den), den)
    return [min(F(1), r + a.matrix[i][j]) for j in range(n)]


# --------------------------------------------------------------------------
# criteria


def criterion_1():
    rng = random.Random(101)
    start = time.perf_counter()
    bad = quotients = 0
    for _ in range(1000):
        n, den = rng.randint(1, 4), rng.randint(1, 12)
        a = FiniteMetric([f"a{i}" for i in range(n)], random_matrix(rng, n, den))
        pb, pc = random_profile(rng, a, den), random_profile(rng, a, den)
        if rng.random() < 0.1:
            pc = list(pb)
        b, c = PointedExtension(a, "b", pb).space, PointedExtension(a, "c", pc).space
        p = path_amalgam(a, b, c)
        if not brute_metric_ok(p.points, p.d):
            bad += 1
        q = diff_amalgam(a, b, c)
        quotients += q.identified is not None
        if not brute_metric_ok(q.space.points, q.space.d):
            bad += 1
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 10
    return ok, f"1000 instances, {bad} triangle failures, {quotients} diff quotients, {elapsed:.2f}s (< 10s)"


def _families(seed: int, count: int):
    rng = random.Random(seed)
    out = []
    for k in range(count):
        size = rng.randint(1, 4)
        out.append([random_structure(rng, rng.randint(1, 5), prefix=f"f{k}m{i}_") for i in range(size)])
    return out


def criterion_2():
    rng = random.Random(202)
    start = time.perf_counter()
    checked = discrepancies = oracle_misses = 0
    ctx = {"x": "S", "y": "S"}
    for ms in _families(202, 50):
        fam = Family(ms)
        u = Ultrafilter(fam.index, rng.choice(fam.index))
        up = ultraproduct(fam, u)
        formulas = [random_formula(rng, RANDOM_SIG, ctx, max_quantifier_depth=2, max_depth=4) for _ in range(20)]
        report = los_check(fam, u, formulas, samples=3, seed=rng.randrange(10**6), up=up)
        checked += report.checked
        discrepancies += len(report.discrepancies)
        # second route: the independent evaluator on the generator factor
        j = u.position
        for phi in formulas:
            env = {v: tuple(rng.choice(m.points("S")) for m in ms) for v in free_vars(phi)}
            lhs = formula_value(up.structure, phi, {v: up.quotient("S", t) for v, t in env.items()})
            if lhs != naive_value(ms[j], phi, {v: t[j] for v, t in env.items()}):
                oracle_misses += 1
    elapsed = time.perf_counter() - start
    ok = discrepancies == 0 and oracle_misses == 0 and elapsed < 30
    return ok, (
        f"50 families x 20 formulas, {checked} samples, {discrepancies} discrepancies, "
        f"{oracle_misses} independent-evaluator mismatches, {elapsed:.2f}s (< 30s)"
    )


def criterion_3():
    failures = checks = 0
    for ms in _families(202, 50):
        fam = Family(ms)
        for j in fam.index:
            checks += 1
            up = ultraproduct(fam, Ultrafilter(fam.index, j))
            if find_isomorphism(up.structure, ms[j]).kind != "isomorphism":
                failures += 1
    rng = random.Random(303)
    diagonal_failures = 0
    for k in range(20):
        m = random_structure(rng, rng.randint(1, 4))
        copies = rng.randint(1, 3)
        up = ultraproduct(Family([m] * copies), Ultrafilter(range(copies), rng.randrange(copies)))
        rho = diagonal_map(m, up, copies)
        onto = sorted(rho["S"].values()) == sorted(up.structure.points("S"))
        iso = find_isomorphism(m, up.structure).kind == "isomorphism"
        preserved = all(
            m.dist("S", a, b) == up.structure.dist("S", rho["S"][a], rho["S"][b]) for a in m.points("S") for b in m.points("S")
        )
        if not (onto and iso and preserved):
            diagonal_failures += 1
    ok = failures == 0 and diagonal_failures == 0
    return ok, f"{checks} (family, generator) pairs with {failures} failures; 20 diagonal maps with {diagonal_failures} failures"


def criterion_4():
    rng = random.Random(404)
    games = wrong = brute_mismatch = 0
    for _ in range(20):
        m = random_structure(rng, rng.randint(1, 4))
        n = shuffled_copy(m, rng)
        for _ in range(3):
            rounds = rng.randint(1, 2)
            ctx = {f"x{i + 1}": "S" for i in range(rounds)}
            delta = [random_formula(rng, RANDOM_SIG, ctx, max_quantifier_depth=1, max_depth=3) for _ in range(2)]
            g = GameSpec(m, n, delta, F(rng.randint(1, 16), 64), variables=ctx)
            games += 1
            tree = ef_solve(g)
            wrong += tree.winner != "II"
            brute_mismatch += brute_ii_wins(g) != (tree.winner == "II")
    two = GameSpec(
        metric_structure("ab", [[0, 1], [1, 0]]),
        metric_structure("ab", [[0, HALF], [HALF, 0]]),
        [parse_formula("d[S](x1, x2)", METRIC_SIG, {"x1": "S", "x2": "S"})],
        F(1, 4),
    )
    tree = ef_solve(two)
    moves = tree_disagreements(tree)
    ok = wrong == 0 and brute_mismatch == 0 and tree.winner == "I" and brute_ii_wins(two) is False and not moves
    return ok, (
        f"{games} games on isomorphic pairs: {wrong} not won by II, {brute_mismatch} brute-force mismatches; "
        f"1 vs 1/2 instance won by {tree.winner}, {len(moves)} move disagreements over {tree.positions} positions"
    )


def criterion_5():
    start = time.perf_counter()
    tracked = farey_extensions()
    with tempfile.TemporaryDirectory() as tmp:
        out, log = Path(tmp) / "u.json", Path(tmp) / "u.csv"
        with contextlib.redirect_stdout(io.StringIO()):
            code = cli_main(["build-urysohn", "--denominator", "4", "--stages", "500", "--out", str(out), "--log", str(log)])
        rows = list(csv.DictReader(io.StringIO(log.read_text())))
        u = load_metric(out)
    elapsed = time.perf_counter() - start
    defects = [F(r["defect"]) for r in rows]
    monotone = all(b <= a for a, b in zip(defects, defects[1:]))
    final = defects[-1]
    # second route: the extension axioms evaluated as sentences
    m = u.to_structure()
    axiom_defect = max(formula_value(m, gen_extension_axiom(e.base, e.space)) for e in tracked)
    ok = code == 0 and len(tracked) == 10 and len(rows) == 500 and monotone and final <= F(1, 8) and axiom_defect == final and elapsed < 60
    return ok, (
        f"{len(rows)} stages, {len(tracked)} tracked extensions, non-increasing={monotone}, final defect {final} "
        f"(<= 1/8), axiom re-evaluation {axiom_defect}, {len(u.points)} points, {elapsed:.2f}s (< 60s)"
    )


def criterion_6():
    phi = parse_formula("inf x:S. abs(R(x) - 1/3)", UNARY_R_SIG)
    nets = [certified_eval(line_net(2**j + 1, F(1, 2 ** (j + 1))), phi) for j in range(2, 6)]
    coarse, fine = nets[0], nets[1]
    first = coarse.value == F(1, 12) and coarse.radius >= F(1, 12)
    shrinks = fine.value < coarse.value and fine.radius < coarse.radius
    nested = all(c.contains(f.value) and c.contains(0) for c, f in zip(nets, nets[1:]))
    # the same number through the command line
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "net.json"
        save_structure(line_net(5, F(1, 8)), path)
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            code = cli_main(["certified-eval", "--m", str(path), "--formula", "inf x:S. abs(R(x) - 1/3)"])
        cli_ok = code == 0 and '"value": "1/12"' in buf.getvalue()
    ok = first and shrinks and nested and cli_ok
    radii = ", ".join(str(r.radius) for r in nets)
    return ok, f"value {coarse.value} radius {coarse.radius}; refined value {fine.value} radius {fine.radius}; radii {radii}; nested={nested}"


def criterion_7():
    rng = random.Random(707)
    formulas = [random_formula(rng, RANDOM_SIG, {"x": "S", "y": "S"}, max_quantifier_depth=2, max_depth=5) for _ in range(1000)]
    start = time.perf_counter()
    failures = sum(parse_formula(print_formula(phi), RANDOM_SIG, free_vars(phi)) != phi for phi in formulas)
    elapsed = time.perf_counter() - start
    return failures == 0 and elapsed < 5, f"1000 formulas, {failures} round-trip failures, {elapsed:.2f}s (< 5s)"


def _func_structure(points, matrix, table) -> Structure:
    return Structure(FUNC_SIG, {"S": points}, {"S": matrix}, {"f": {(p,): v for p, v in table.items()}})


def _expands(m: Structure) -> bool:
    """Identity modulus means f may not increase any distance."""
    pts = m.points("S")
    return any(m.dist("S", m.apply("f", [a]), m.apply("f", [b])) > m.dist("S", a, b) for a in pts for b in pts)


def criterion_8():
    rng = random.Random(808)
    mutated_flagged = controls_flagged = made = 0
    while made < 100:
        n = rng.randint(3, 5)
        pts = [f"a{i}" for i in range(n)]
        mat = random_matrix(rng, n)
        control = _func_structure(pts, mat, {p: p for p in pts})
        if rng.random() < 0.5:
            # a constant map also complies
            c = rng.choice(pts)
            control = _func_structure(pts, mat, {p: c for p in pts})
        options = []
        for p, q in itertools.product(pts, repeat=2):
            table = {x: control.apply("f", [x]) for x in pts}
            table[p] = q
            cand = _func_structure(pts, mat, table)
            if _expands(cand):
                options.append(cand)
        if _expands(control) or not options:
            continue
        made += 1
        controls_flagged += bool(validate_structure(control))
        mutated_flagged += bool(validate_structure(rng.choice(options)))
    ok = mutated_flagged == 100 and controls_flagged == 0
    return ok, f"mutated flagged {mutated_flagged}/100, unmutated controls flagged {controls_flagged}/100"


def criterion_9():
    rng = random.Random(909)
    disagreements = holds = 0
    for _ in range(50):
        m = random_structure(rng, rng.randint(2, 6))
        sub = restrict(m, closure(m, rng.sample(m.points("S"), rng.randint(1, 2))))
        family = [random_formula(rng, RANDOM_SIG, {"x": "S", "y": "S"}, max_quantifier_depth=1, max_depth=3) for _ in range(4)]
        verdict = tarski_vaught_check(sub, m, family).ok
        holds += verdict
        disagreements += verdict != brute_tv(sub, m, family)
    return disagreements == 0, f"50 pairs ({holds} pass, {50 - holds} fail the test), {disagreements} disagreements with brute force"


def criterion_10():
    rng = random.Random(1010)
    x = {"x": "S"}
    returned = unsound = 0
    corpus = []
    for _ in range(12):
        family = [random_structure(rng, rng.randint(1, 4)) for _ in range(rng.randint(1, 2))]
        while True:
            phi = random_formula(rng, RANDOM_SIG, x, max_quantifier_depth=1, max_depth=3)
            if free_vars(phi):
                break
        corpus.append((family, phi, None))
    corpus.append(([random_structure(rng, 5)], parse_formula("d[S](x, c)", RANDOM_SIG, x), None))
    five = discrete_with_values([F(k, 4) for k in range(5)])
    threshold = parse_formula("R(x) -. 1/2", UNARY_R_SIG, x)
    corpus.append(([five], threshold, "default"))
    corpus.append(([augmented_discrete_fixture()], threshold, "default"))
    small = enumerate_formulas(RANDOM_SIG, x, max_quantifier_depth=1, max_connective_depth=1, denominator=2)
    for family, phi, which in corpus:
        cands = None if which == "default" else [phi] + list(small)
        for entry in definability_probe(family, phi, [F(1, 8), F(1, 4), HALF], cands).entries:
            if entry.found:
                returned += 1
                unsound += not brute_witness_ok(family, phi, entry.witness, entry.delta, entry.eps)
    fixture = definability_probe([augmented_discrete_fixture()], threshold, [HALF]).entries[0]
    literal = definability_probe([five], threshold, [HALF]).entries[0]
    ok = unsound == 0 and returned > 0 and not fixture.found
    return ok, (
        f"{returned} witnesses re-verified, {unsound} unsound; discrete R(x)=x fixture with values approaching 1/2 "
        f"at eps 1/2: {fixture.describe()}; bare five-point carrier: {literal.describe()}"
    )


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def _line(k: int, ok: bool, detail: str) -> str:
    return f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"


@pytest.mark.parametrize("k", range(1, len(CRITERIA) + 1))
def test_criterion(k, capsys):
    ok, detail = CRITERIA[k - 1]()
    with capsys.disabled():
        print("\n" + _line(k, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for k, crit in enumerate(CRITERIA, 1):
        ok, detail = crit()
        results.append(ok)
        print(_line(k, ok, detail), flush=True)
    sys.exit(0 if all(results) else 1)
