import io
import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfol import (
    DomainError,
    GameSpec,
    InputError,
    back_and_forth_iso,
    ef_play,
    ef_solve,
    find_isomorphism,
    formula_bound,
    parse_formula,
    random_formula,
)
from cfol.games import describe_tree, natural_order

from helpers import (
    METRIC_SIG,
    RANDOM_SIG,
    metric_structure,
    random_structure,
    shuffled_copy,
    tree_disagreements,
)

HALF = F(1, 2)
PAIR = {"x1": "S", "x2": "S"}
seeds = st.integers(0, 1_000_000)


def two(d):
    return metric_structure(["a", "b"], [[0, d], [d, 0]])


def dist_game(eps=F(1, 4)):
    return GameSpec(two(1), two(HALF), [parse_formula("d[S](x1, x2)", METRIC_SIG, PAIR)], eps)


def test_one_vs_half_player_one_wins():
    tree = ef_solve(dist_game())
    assert tree.winner == "I"
    assert tree_disagreements(tree) == []
    assert "opening challenge" in describe_tree(tree)


def test_same_structure_player_two_wins():
    m = two(HALF)
    g = GameSpec(m, m, [parse_formula("d[S](x1, x2)", METRIC_SIG, PAIR)], F(1, 1000))
    assert ef_solve(g).winner == "II"


def test_large_eps_is_vacuous():
    phi = parse_formula("d[S](x1, x2)", METRIC_SIG, PAIR)
    eps = 2 * formula_bound(phi, METRIC_SIG) + F(1, 100)
    assert ef_solve(GameSpec(two(1), two(HALF), [phi], eps)).winner == "II"


def test_gap_must_be_strictly_below_eps():
    # the gap is exactly 1/2, so eps = 1/2 is not enough
    assert ef_solve(dist_game(HALF)).winner == "I"
    assert ef_solve(dist_game(HALF + F(1, 100))).winner == "II"


def test_spec_errors():
    phi = parse_formula("d[S](x1, x2)", METRIC_SIG, PAIR)
    with pytest.raises(DomainError):
        GameSpec(two(1), two(1), [phi], 0)
    with pytest.raises(InputError):
        GameSpec(two(1), random_structure(random.Random(0), 2), [phi], 1)
    clash = [phi, parse_formula("d[S](x1, x1)", METRIC_SIG, {"x1": "S"})]
    with pytest.raises(InputError):
        GameSpec(two(1), two(1), clash, 1, variables={"x1": "S"})


def test_natural_order():
    assert natural_order(["x10", "x2", "x1"]) == ["x1", "x2", "x10"]


def test_play_as_one_on_copies():
    m = two(HALF)
    g = GameSpec(m, shuffled_copy(m, random.Random(3)), [parse_formula("d[S](x1, x2)", METRIC_SIG, PAIR)], F(1, 8))
    moves = iter(["bogus", "M a", "N b1"])
    out = io.StringIO()
    transcript = ef_play(g, "I", prompt=lambda _: next(moves), stdout=out)
    assert transcript[-1] == "winner II"
    assert "illegal move" in out.getvalue()
    assert len(transcript) == 5


def test_play_as_two_loses_the_one_vs_half_game():
    g = dist_game()
    tree = ef_solve(g)
    answers = iter(["zzz", "a", "b"])
    out = io.StringIO()
    transcript = ef_play(g, "II", tree=tree, prompt=lambda _: next(answers), stdout=out)
    assert transcript[-1] == "winner I"
    side, p = tree.challenges[((), ())]
    assert transcript[0] == f"1 {side} {p}"
    assert "illegal point" in out.getvalue()


def test_play_reads_stdin():
    g = dist_game()
    out = io.StringIO()
    transcript = ef_play(g, "I", stdin=io.StringIO("M a\nM b\n"), stdout=out)
    assert transcript[-1] == "winner I"
    with pytest.raises(InputError):
        ef_play(g, "I", stdin=io.StringIO("M a\n"), stdout=io.StringIO())


def test_zero_rounds():
    g = GameSpec(two(1), two(HALF), [], F(1, 4))
    assert g.rounds == 0
    assert ef_solve(g).winner == "II"
    assert ef_play(g, "I", prompt=lambda _: "", stdout=io.StringIO()) == ["winner II"]


def test_back_and_forth_examples():
    m = two(HALF)
    assert back_and_forth_iso(m, m).kind == "isomorphism"
    report = back_and_forth_iso(two(1), two(HALF))
    assert report.kind == "none"
    assert sum(len(v) for v in report.witness.values()) == 1


def brute_isometric(m, n) -> bool:
    dm, dn = m.metrics["S"], n.metrics["S"]
    k = len(dm)
    return k == len(dn) and any(
        all(dm[i][j] == dn[pi[i]][pi[j]] for i in range(k) for j in range(k))
        for pi in itertools.permutations(range(k))
    )


def test_three_point_spaces():
    third, quarter = F(1, 3), F(1, 4)
    m = metric_structure("abc", [[0, HALF, third], [HALF, 0, quarter], [third, quarter, 0]])
    same = metric_structure("xyz", [[0, quarter, HALF], [quarter, 0, third], [HALF, third, 0]])
    assert brute_isometric(m, same)
    assert back_and_forth_iso(m, same).kind == "isomorphism"
    other = metric_structure("xyz", [[0, quarter, HALF], [quarter, 0, quarter], [HALF, quarter, 0]])
    assert not brute_isometric(m, other)
    assert back_and_forth_iso(m, other).kind == "none"


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3))
def test_solver_agrees_with_brute_force(seed, rounds):
    rng = random.Random(seed)
    m, n = random_structure(rng, rng.randint(1, 3)), random_structure(rng, rng.randint(1, 3), prefix="b")
    ctx = {f"x{i + 1}": "S" for i in range(rounds)}
    delta = [random_formula(rng, RANDOM_SIG, ctx, max_quantifier_depth=1, max_depth=3) for _ in range(2)]
    g = GameSpec(m, n, delta, F(rng.randint(1, 8), 8), variables=ctx)
    tree = ef_solve(g)
    assert tree_disagreements(tree) == []
    assert tree.positions <= tree.position_bound()
    assert ef_solve(g).values == tree.values


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 4))
def test_isomorphic_structures_give_player_two(seed, size):
    rng = random.Random(seed)
    m = random_structure(rng, size)
    n = shuffled_copy(m, rng)
    assert find_isomorphism(m, n).kind == "isomorphism"
    assert back_and_forth_iso(m, n).kind == "isomorphism"
    ctx = {"x1": "S", "x2": "S"}
    delta = [random_formula(rng, RANDOM_SIG, ctx, max_quantifier_depth=1, max_depth=3) for _ in range(2)]
    assert ef_solve(GameSpec(m, n, delta, F(1, 1000), variables=ctx)).winner == "II"
