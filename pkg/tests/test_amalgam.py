import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfol import (
    DomainError,
    FiniteMetric,
    FraisseState,
    InputError,
    PointedExtension,
    diff_amalgam,
    enumerate_extensions,
    extension_defect,
    formula_value,
    fraisse_step,
    gen_extension_axiom,
    path_amalgam,
    run_fraisse,
)
from cfol.amalgam import extension_value, farey_extensions, log_to_csv
from cfol.structures import triangle_violations

from helpers import random_matrix

HALF = F(1, 2)
seeds = st.integers(0, 1_000_000)


def single():
    return FiniteMetric(["a"], [[0]])


def ext(base, point, *dists):
    return PointedExtension(base, point, list(dists)).space


def two():
    return FiniteMetric(["a1", "a2"], [[0, HALF], [HALF, 0]])


def is_metric(x: FiniteMetric) -> bool:
    return x.is_valid() and not triangle_violations(x.points, x.d)


def test_path_single_point():
    out = path_amalgam(single(), ext(single(), "b", HALF), ext(single(), "c", F(1, 3)))
    assert out.d("b", "c") == F(5, 6)
    assert is_metric(out)


def test_path_identity():
    out = path_amalgam(two(), two(), two())
    assert out.points == two().points and out == two()


def test_path_two_point_base():
    out = path_amalgam(two(), ext(two(), "b", F(1, 4), HALF), ext(two(), "c", HALF, F(1, 4)))
    assert out.d("b", "c") == F(3, 4)
    assert is_metric(out)


def test_path_cap():
    out = path_amalgam(single(), ext(single(), "b", 1), ext(single(), "c", 1), cap=1)
    assert out.d("b", "c") == 1 and is_metric(out)


def test_path_errors():
    empty = FiniteMetric([], [])
    with pytest.raises(InputError):
        path_amalgam(empty, empty, empty)
    with pytest.raises(InputError):
        path_amalgam(single(), ext(single(), "b", HALF), ext(single(), "b", HALF))
    with pytest.raises(InputError):
        path_amalgam(two(), ext(single(), "b", HALF), two())


def test_diff_single_point():
    out = diff_amalgam(single(), ext(single(), "b", HALF), ext(single(), "c", F(1, 3)))
    assert out.space.d("b", "c") == F(1, 6) and out.identified is None


def test_diff_identical_profiles():
    out = diff_amalgam(single(), ext(single(), "b", HALF), ext(single(), "c", HALF))
    assert out.identified == ("b", "c")
    assert out.space.points == ("a", "b")
    assert "identified" in out.notice


def test_diff_two_point_base():
    out = diff_amalgam(two(), ext(two(), "b", F(1, 4), HALF), ext(two(), "c", HALF, F(1, 4)))
    assert out.space.d("b", "c") == F(1, 4)
    assert is_metric(out.space)


def test_diff_needs_one_point_extensions():
    b = path_amalgam(single(), ext(single(), "b", HALF), ext(single(), "b2", HALF))
    with pytest.raises(InputError):
        diff_amalgam(single(), b, ext(single(), "c", HALF))


def test_pointed_extension_validation():
    with pytest.raises(DomainError):
        PointedExtension(single(), "b", [0])
    with pytest.raises(DomainError):
        PointedExtension(two(), "b", [F(1, 8), F(3, 4)])
    with pytest.raises(InputError):
        PointedExtension(two(), "a1", [HALF, HALF])
    e = PointedExtension(two(), "b", {"a1": HALF, "a2": F(1, 4)})
    assert PointedExtension.from_json(e.to_json()).space == e.space


def test_enumerate_extensions_examples():
    got = enumerate_extensions(single(), 2)
    assert [e.distances for e in got] == [(HALF,), (F(1),)]
    far = FiniteMetric(["a1", "a2"], [[0, 1], [1, 0]])
    assert [e.distances for e in enumerate_extensions(far, 1)] == [(F(1), F(1))]
    assert [e.distances for e in enumerate_extensions(single(), 1)] == [(F(1),)]


@given(st.integers(1, 3), st.integers(1, 4), seeds)
def test_enumerate_extensions_matches_filter(n, q, seed):
    a = FiniteMetric([f"a{i}" for i in range(n)], random_matrix(random.Random(seed), n, 4))
    got = {e.distances for e in enumerate_extensions(a, q)}
    brute = set()
    for prof in itertools.product([F(k, q) for k in range(1, q + 1)], repeat=n):
        rows = [list(r) + [prof[i]] for i, r in enumerate(a.matrix)] + [list(prof) + [0]]
        if not triangle_violations(range(n + 1), lambda i, j: rows[i][j]):
            brute.add(prof)
    assert got == brute


def test_farey_tracked_list():
    fs = farey_extensions(5)
    assert len(fs) == 10
    assert [e.distances[0] for e in fs][:3] == [F(1, 5), F(1, 4), F(1, 3)]


def test_first_step_adds_point():
    state = FraisseState(tracked=farey_extensions())
    fraisse_step(state)
    assert len(state.points) == 2
    assert state.log[0].action == "realized" and state.log[0].task_after == 0


def test_exact_witness_needs_no_point():
    state = FraisseState(q=2, tracked=farey_extensions(2))
    while state.log == [] or state.log[-1].action != "witness":
        fraisse_step(state)
    last = state.log[-1]
    assert last.new_point is None and last.task_before == 0
    sizes = [e.size for e in state.log]
    assert sizes[-1] == sizes[-2]


def test_two_hundred_steps_non_increasing():
    state = run_fraisse(200, q=4)
    defects = [e.defect for e in state.log]
    assert all(b <= a for a, b in zip(defects, defects[1:]))
    assert state.current.is_valid()


def test_path_mode_runs():
    state = run_fraisse(60, q=4, mode="path")
    assert state.current.is_valid()
    assert all(v <= 1 for row in state.current.matrix for v in row)


def test_log_csv():
    state = run_fraisse(3, q=2)
    lines = log_to_csv(state.log).splitlines()
    assert lines[0].startswith("stage,action")
    assert len(lines) == 4


def test_defect_examples():
    u = FiniteMetric(["u", "v"], [[0, HALF], [HALF, 0]])
    tracked = [PointedExtension(single(), "b", [HALF])]
    assert extension_defect(u, tracked) == 0
    assert extension_defect(FiniteMetric(["u"], [[0]]), tracked) == HALF
    with pytest.raises(DomainError):
        extension_defect(u, [])


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 3))
def test_amalgams_are_metrics(seed, n, fan):
    rng = random.Random(seed)
    a = FiniteMetric([f"a{i}" for i in range(n)], random_matrix(rng, n, 6))
    exts = enumerate_extensions(a, 6)
    picks = [rng.choice(exts) for _ in range(2 * fan)]
    b = a
    for i, e in enumerate(picks[:fan]):
        b = path_amalgam(a, b, PointedExtension(a, f"b{i}", e.distances).space)
    c = a
    for i, e in enumerate(picks[fan:]):
        c = path_amalgam(a, c, PointedExtension(a, f"c{i}", e.distances).space)
    out = path_amalgam(a, b, c)
    assert is_metric(out)
    for x in b.points[n:]:
        for y in c.points[n:]:
            assert out.d(x, y) == min(b.d(x, p) + c.d(p, y) for p in a.points)
            assert all(out.d(x, y) >= abs(b.d(x, p) - c.d(p, y)) for p in a.points)
    d = diff_amalgam(a, PointedExtension(a, "b", picks[0].distances).space, PointedExtension(a, "c", picks[1].distances).space)
    assert is_metric(d.space)
    assert (d.identified is not None) == (picks[0].distances == picks[1].distances)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 6), st.integers(1, 2))
def test_defect_matches_axiom_value(seed, n, k):
    rng = random.Random(seed)
    u = FiniteMetric([f"u{i}" for i in range(n)], random_matrix(rng, n, 6))
    base = FiniteMetric([f"a{i}" for i in range(k)], random_matrix(rng, k, 6))
    e = rng.choice(enumerate_extensions(base, 6))
    axiom = gen_extension_axiom(e.base, e.space)
    assert extension_defect(u, [e]) == formula_value(u.to_structure(), axiom)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.sampled_from(["diff", "path"]), st.integers(1, 2), st.integers(5, 60))
def test_chain_invariants(q, mode, max_base, stages):
    state = FraisseState(q=q, mode=mode, max_base=max_base, tracked=farey_extensions(3))
    previous_zero: list = []
    for _ in range(stages):
        before = state.current
        fraisse_step(state)
        entry = state.log[-1]
        now = state.current
        assert is_metric(now)
        assert all(v <= 1 and q % v.denominator == 0 for row in now.matrix for v in row)
        if entry.action in ("witness", "realized"):
            assert entry.task_after == 0
        # values that were 0 stay 0: witnesses persist in a superset
        for tup, e in previous_zero:
            assert extension_value(now, tup, e) == 0
        previous_zero = [
            (tup, e)
            for e in state.tracked
            for tup in itertools.product(before.points, repeat=len(e.base))
            if extension_value(before, tup, e) == 0
        ]


def test_difference_row_falls_back_when_not_a_metric():
    # two-point bases can give a difference row that breaks the triangle inequality
    state = run_fraisse(19, q=3, max_base=2, tracked=farey_extensions(3))
    assert is_metric(state.current)
    rules = {e.rule for e in state.log if e.action == "realized"}
    assert "path" in rules and "diff" in rules
