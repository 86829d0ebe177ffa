"""Metric amalgamation and finite Urysohn approximants.

Two ways to glue extensions of a common base ``A``:

* :func:`path_amalgam` puts ``d(b, c) = min_a d(b, a) + d(a, c)``, the
  largest distance compatible with the triangle inequality;
* :func:`diff_amalgam` puts ``d(b, c) = max_a |d(b, a) - d(c, a)|``, the
  smallest one.

:class:`FraisseState` grows a finite rational metric space by repeatedly
realizing one-point extensions over subsets of the current space, and
measures progress with :func:`extension_defect`.
"""

from __future__ import annotations

import csv
import io
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, InputError
from .rational import Fraction, RationalLike, as_fraction, format_fraction
from .structures import FiniteMetric, Structure, triangle_violations

__all__ = [
    "path_amalgam",
    "diff_amalgam",
    "DiffAmalgam",
    "PointedExtension",
    "enumerate_extensions",
    "FraisseState",
    "FraisseLogEntry",
    "fraisse_step",
    "run_fraisse",
    "extension_defect",
    "extension_value",
    "farey_extensions",
    "log_to_csv",
]


def _check_extension(a: FiniteMetric, b: FiniteMetric, label: str) -> list[str]:
    missing = [p for p in a.points if p not in b]
    if missing:
        raise InputError(f"{label} does not contain base points {missing}")
    if b.restrict(a.points) != a:
        raise InputError(f"{label} does not restrict to the base metric")
    bad = b.violations()
    if bad:
        raise InputError(f"{label} is not a metric space: {bad[0]}")
    return [p for p in b.points if p not in a]


def path_amalgam(a: FiniteMetric, b: FiniteMetric, c: FiniteMetric, cap: RationalLike | None = None) -> FiniteMetric:
    """Glue ``b`` and ``c`` over ``a`` with ``d(x, y) = min_{p in A} d(x, p) + d(p, y)``.

    With ``cap`` the cross distances are additionally truncated at ``cap``,
    which keeps the result inside a bounded class and is still a metric.
    """
    if len(a) == 0:
        raise InputError("path amalgam over an empty base is undefined")
    new_b = _check_extension(a, b, "first extension")
    new_c = _check_extension(a, c, "second extension")
    if set(new_b) & set(new_c):
        raise InputError(f"extensions share new point names {sorted(set(new_b) & set(new_c))}")
    cap_f = None if cap is None else as_fraction(cap)
    points = list(a.points) + new_b + new_c
    dist: dict[tuple[str, str], Fraction] = {}
    for x, y in itertools.combinations(points, 2):
        if x in b and y in b:
            dist[x, y] = b.d(x, y)
        elif x in c and y in c:
            dist[x, y] = c.d(x, y)
        else:
            bx, cy = (x, y) if x in b else (y, x)
            v = min(b.d(bx, p) + c.d(p, cy) for p in a.points)
            dist[x, y] = v if cap_f is None else min(v, cap_f)
    return FiniteMetric.from_distances(points, dist)


@dataclass(frozen=True)
class DiffAmalgam:
    space: FiniteMetric
    identified: tuple[str, str] | None = None

    @property
    def notice(self) -> str | None:
        if self.identified is None:
            return None
        b, c = self.identified
        return f"distance profiles coincide: {c} identified with {b}"


def diff_amalgam(a: FiniteMetric, b: FiniteMetric, c: FiniteMetric) -> DiffAmalgam:
    """Glue one-point extensions with ``d(b, c) = max_{p in A} |d(b, p) - d(c, p)|``.

    A zero cross distance means the two new points have the same profile;
    the quotient (``c`` merged into ``b``) is returned with a notice.
    """
    if len(a) == 0:
        raise InputError("difference amalgam over an empty base is undefined")
    new_b = _check_extension(a, b, "first extension")
    new_c = _check_extension(a, c, "second extension")
    if len(new_b) != 1 or len(new_c) != 1:
        raise InputError("difference amalgam needs one-point extensions")
    nb, nc = new_b[0], new_c[0]
    if nb == nc:
        raise InputError(f"extensions share the new point name {nb!r}")
    cross = max(abs(b.d(nb, p) - c.d(nc, p)) for p in a.points)
    if cross == 0:
        return DiffAmalgam(b, (nb, nc))
    points = list(a.points) + [nb, nc]
    dist = {(x, y): a.d(x, y) for x, y in itertools.combinations(a.points, 2)}
    for p in a.points:
        dist[p, nb] = b.d(p, nb)
        dist[p, nc] = c.d(p, nc)
    dist[nb, nc] = cross
    return DiffAmalgam(FiniteMetric.from_distances(points, dist))


# --------------------------------------------------------------------------
# one-point extensions


@dataclass(frozen=True)
class PointedExtension:
    """A base space ``A`` plus a new point given by its distances to ``A``."""

    base: FiniteMetric
    point: str
    distances: tuple[Fraction, ...]  # in base point order

    def __init__(self, base: FiniteMetric, point: str, distances: Mapping[str, RationalLike] | Sequence[RationalLike]):
        if point in base:
            raise InputError(f"new point {point!r} already belongs to the base")
        if isinstance(distances, Mapping):
            missing = [p for p in base.points if p not in distances]
            if missing:
                raise InputError(f"no distance given to base points {missing}")
            values = tuple(as_fraction(distances[p]) for p in base.points)
        else:
            values = tuple(as_fraction(v) for v in distances)
            if len(values) != len(base):
                raise InputError(f"expected {len(base)} distances, got {len(values)}")
        if any(not (0 < v <= 1) for v in values):
            raise DomainError("extension distances must lie in (0, 1]")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "distances", values)
        bad = triangle_violations(self.space.points, self.space.d)
        if bad:
            raise DomainError(f"extension violates the triangle inequality at {bad[0]}")

    @property
    def space(self) -> FiniteMetric:
        n = len(self.base)
        rows = [list(r) + [self.distances[i]] for i, r in enumerate(self.base.matrix)]
        rows.append(list(self.distances) + [Fraction(0)])
        return FiniteMetric(list(self.base.points) + [self.point], rows)

    def profile(self) -> dict[str, Fraction]:
        return dict(zip(self.base.points, self.distances))

    def to_json(self) -> dict:
        return {
            "base": {"points": list(self.base.points), "metric": _matrix_json(self.base.matrix)},
            "point": self.point,
            "distances": [format_fraction(v) for v in self.distances],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PointedExtension":
        base = data["base"]
        return cls(FiniteMetric(base["points"], base["metric"]), data["point"], data["distances"])

    def __repr__(self) -> str:
        prof = ", ".join(f"{p}:{v}" for p, v in self.profile().items())
        return f"PointedExtension({self.point} | {prof})"


def _matrix_json(matrix) -> list[list[str]]:
    return [[format_fraction(v) for v in row] for row in matrix]


def _profiles(dist_num: Sequence[Sequence[int]], q: int) -> Iterable[tuple[int, ...]]:
    """Numerator profiles in ``{1..q}^n`` compatible with an integer distance matrix."""
    n = len(dist_num)
    for prof in itertools.product(range(1, q + 1), repeat=n):
        if all(
            abs(prof[i] - prof[j]) <= dist_num[i][j] <= prof[i] + prof[j]
            for i, j in itertools.combinations(range(n), 2)
        ):
            yield prof


def enumerate_extensions(a: FiniteMetric, q: int, point: str | None = None) -> list[PointedExtension]:
    """Every one-point extension of ``a`` with distances in ``{1/q, ..., q/q}``."""
    if q < 1:
        raise DomainError("denominator bound must be at least 1")
    name = point or _fresh_point(a.points)
    out = []
    for prof in itertools.product(range(1, q + 1), repeat=len(a)):
        rs = [Fraction(k, q) for k in prof]
        ok = all(
            abs(rs[i] - rs[j]) <= a.matrix[i][j] <= rs[i] + rs[j] for i, j in itertools.combinations(range(len(a)), 2)
        )
        if ok:
            out.append(PointedExtension(a, name, rs))
    return out


def _fresh_point(taken: Iterable[str]) -> str:
    taken = set(taken)
    if "b" not in taken:
        return "b"
    i = 1
    while f"b{i}" in taken:
        i += 1
    return f"b{i}"


def farey_extensions(order: int = 5, base_point: str = "a") -> list[PointedExtension]:
    """Singleton-base extensions at every Farey fraction of ``order`` in ``(0, 1]``."""
    values = sorted({Fraction(p, q) for q in range(1, order + 1) for p in range(1, q + 1)})
    base = FiniteMetric([base_point], [[0]])
    return [PointedExtension(base, "b", [v]) for v in values]


# --------------------------------------------------------------------------
# extension defect


def _as_metric(u: FiniteMetric | Structure, sort: str = "S") -> FiniteMetric:
    return u.metric_space(sort) if isinstance(u, Structure) else u


def extension_value(u: FiniteMetric, xs: Sequence[str], ext: PointedExtension) -> Fraction:
    """``inf_y D_B(x, y) -. D_A(x)`` at the tuple ``xs`` of points of ``u``."""
    base = ext.base
    n = len(base)
    d_a = max(
        (abs(u.d(xs[i], xs[j]) - base.matrix[i][j]) for i, j in itertools.combinations(range(n), 2)),
        default=Fraction(0),
    )
    best = None
    for y in u.points:
        e = max(abs(u.d(x, y) - r) for x, r in zip(xs, ext.distances))
        v = max(d_a, e)
        if best is None or v < best:
            best = v
            if best == d_a:
                break
    return max(Fraction(0), best - d_a)


def extension_defect(u: FiniteMetric | Structure, tracked: Sequence[PointedExtension], sort: str = "S") -> Fraction:
    """Max over tracked extensions of the value of their extension axiom in ``u``.

    0 means every tracked extension axiom holds exactly.
    """
    if not tracked:
        raise DomainError("extension defect needs a nonempty tracked list")
    space = _as_metric(u, sort)
    worst = Fraction(0)
    for ext in tracked:
        for xs in itertools.product(space.points, repeat=len(ext.base)):
            v = extension_value(space, xs, ext)
            if v > worst:
                worst = v
    return worst


# --------------------------------------------------------------------------
# Fraisse chain


@dataclass(frozen=True)
class FraisseLogEntry:
    stage: int
    base: tuple[str, ...]
    profile: tuple[Fraction, ...]
    action: str  # witness | realized | idle
    new_point: str | None
    task_before: Fraction | None
    task_after: Fraction | None
    defect: Fraction | None
    size: int
    rule: str = ""  # diff | path for realized steps


@dataclass
class FraisseState:
    """A growing rational metric space ``U_k`` on the grid ``{0, 1/q, ..., 1}``.

    Tasks are pairs (base subset of ``U_k``, distance profile of one new
    point).  They sit in a FIFO queue, so every enqueued task is processed
    after finitely many steps.  A task is enqueued for every base of size up
    to ``base_size`` as soon as all its points exist; when the queue runs
    dry the base size grows, up to ``max_base``.
    """

    q: int = 4
    max_base: int = 1
    mode: str = "diff"  # diff | path
    tracked: list[PointedExtension] = field(default_factory=list)
    points: list[str] = field(default_factory=lambda: ["u0"])
    dist: list[list[int]] = field(default_factory=lambda: [[0]])  # numerators over q
    stage: int = 0
    base_size: int = 1
    queue: deque = field(default_factory=deque)
    log: list[FraisseLogEntry] = field(default_factory=list)

    def __post_init__(self):
        if self.q < 1:
            raise DomainError("denominator bound must be at least 1")
        if self.max_base < 1:
            raise DomainError("max_base must be at least 1")
        if self.mode not in ("diff", "path"):
            raise InputError(f"unknown realization mode {self.mode!r}")
        if not self.queue and self.stage == 0:
            for i in range(len(self.points)):
                self._enqueue_for(i)

    @property
    def current(self) -> FiniteMetric:
        return FiniteMetric(self.points, [[Fraction(v, self.q) for v in row] for row in self.dist])

    def structure(self, sort: str = "S") -> Structure:
        return self.current.to_structure(sort)

    def defect(self) -> Fraction | None:
        return extension_defect(self.current, self.tracked) if self.tracked else None

    def _enqueue_bases(self, bases: Iterable[tuple[int, ...]]) -> None:
        for base in bases:
            sub = [[self.dist[i][j] for j in base] for i in base]
            for prof in _profiles(sub, self.q):
                self.queue.append((base, prof))

    def _enqueue_for(self, new: int) -> None:
        others = range(new)
        bases = []
        for size in range(1, self.base_size + 1):
            for rest in itertools.combinations(others, size - 1):
                bases.append(tuple(sorted(rest + (new,))))
        self._enqueue_bases(bases)

    def _task_value(self, base: tuple[int, ...], prof: tuple[int, ...]) -> Fraction:
        best = min(max(abs(self.dist[a][y] - r) for a, r in zip(base, prof)) for y in range(len(self.points)))
        return Fraction(best, self.q)

    def _realize(self, base: tuple[int, ...], prof: tuple[int, ...]) -> tuple[list[int], str]:
        """Distance row of the new point and the rule that produced it.

        The difference row is 1-Lipschitz but can break ``d(v, w) <= d(x, v)
        + d(x, w)``; in that case the min-sum row, which always extends the
        metric, is used instead.
        """
        n = len(self.points)
        if self.mode == "diff":
            row = [max(abs(r - self.dist[a][v]) for a, r in zip(base, prof)) for v in range(n)]
            if all(self.dist[v][w] <= row[v] + row[w] for v, w in itertools.combinations(range(n), 2)):
                return row, "diff"
        return [min(self.q, min(r + self.dist[a][v] for a, r in zip(base, prof))) for v in range(n)], "path"


def fraisse_step(state: FraisseState) -> FraisseState:
    """Process the next task: find an exact witness or add a new point."""
    state.stage += 1
    if not state.queue and state.base_size < min(state.max_base, len(state.points)):
        state.base_size += 1
        state._enqueue_bases(itertools.combinations(range(len(state.points)), state.base_size))
    if not state.queue:
        state.log.append(
            FraisseLogEntry(state.stage, (), (), "idle", None, None, None, state.defect(), len(state.points))
        )
        return state
    base, prof = state.queue.popleft()
    before = state._task_value(base, prof)
    new_point = None
    rule = ""
    if before == 0:
        action = "witness"
    else:
        action = "realized"
        row, rule = state._realize(base, prof)
        if 0 in row or any(v > state.q for v in row):
            raise AssertionError("realization left the grid metric")  # pragma: no cover
        new_point = f"u{len(state.points)}"
        for i, v in enumerate(row):
            state.dist[i].append(v)
        state.dist.append(row + [0])
        state.points.append(new_point)
        state._enqueue_for(len(state.points) - 1)
    after = state._task_value(base, prof)
    state.log.append(
        FraisseLogEntry(
            state.stage,
            tuple(state.points[i] for i in base),
            tuple(Fraction(r, state.q) for r in prof),
            action,
            new_point,
            before,
            after,
            state.defect(),
            len(state.points),
            rule,
        )
    )
    return state


def run_fraisse(
    stages: int,
    q: int = 4,
    tracked: Sequence[PointedExtension] | None = None,
    mode: str = "diff",
    max_base: int = 1,
) -> FraisseState:
    """Run ``stages`` steps from the one-point space."""
    state = FraisseState(q=q, max_base=max_base, mode=mode, tracked=list(tracked if tracked is not None else farey_extensions()))
    for _ in range(stages):
        fraisse_step(state)
    return state


def log_to_csv(log: Sequence[FraisseLogEntry]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stage", "action", "base", "profile", "new_point", "task_before", "task_after", "defect", "size", "rule"])

    def fmt(v):
        return "" if v is None else format_fraction(v)

    for e in log:
        w.writerow(
            [
                e.stage,
                e.action,
                " ".join(e.base),
                " ".join(format_fraction(v) for v in e.profile),
                e.new_point or "",
                fmt(e.task_before),
                fmt(e.task_after),
                fmt(e.defect),
                e.size,
                e.rule,
            ]
        )
    return buf.getvalue()
