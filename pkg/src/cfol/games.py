"""Ehrenfeucht–Fraïssé games and back-and-forth isomorphism search.

In the game EF(M, N, Delta, eps) Player I picks, in round ``i``, either a
point of M or a point of N of the sort of ``x_i``; Player II answers on the
other side.  After all rounds II wins iff ``|phi^M(a) - phi^N(b)| < eps``
for every ``phi`` in Delta.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, TextIO

from .errors import DomainError, InputError
from .formulas import enumerate_formulas
from .rational import Fraction, RationalLike, as_fraction
from .semantics import formula_value
from .structures import MorphismReport, Structure, check_embedding
from .syntax import Formula, check_formula, free_vars, print_formula

__all__ = [
    "GameSpec",
    "StrategyTree",
    "ef_solve",
    "ef_play",
    "back_and_forth_iso",
    "natural_order",
]

Position = tuple[tuple[str, ...], tuple[str, ...]]
Move = tuple[str, str]  # (side "M" | "N", point)


def natural_order(names: Sequence[str]) -> list[str]:
    """Sort ``x2`` before ``x10``."""

    def key(s: str):
        return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", s)]

    return sorted(names, key=key)


@dataclass(frozen=True)
class GameSpec:
    m: Structure
    n: Structure
    delta: tuple[Formula, ...]
    eps: Fraction
    variables: tuple[tuple[str, str], ...]

    def __init__(
        self,
        m: Structure,
        n: Structure,
        delta: Sequence[Formula],
        eps: RationalLike,
        variables: Sequence[tuple[str, str]] | Mapping[str, str] | None = None,
    ):
        eps = as_fraction(eps)
        if eps <= 0:
            raise DomainError("eps must be positive")
        if m.signature != n.signature:
            raise InputError("structures have different signatures")
        delta = tuple(delta)
        used: dict[str, str] = {}
        for phi in delta:
            check_formula(phi, m.signature)
            for name, s in free_vars(phi).items():
                if used.setdefault(name, s) != s:
                    raise InputError(f"variable {name} has sorts {used[name]} and {s} in Delta")
        if variables is None:
            variables = [(v, used[v]) for v in natural_order(list(used))]
        elif isinstance(variables, Mapping):
            variables = list(variables.items())
        variables = tuple((str(v), str(s)) for v, s in variables)
        declared = dict(variables)
        for name, s in used.items():
            if declared.get(name) != s:
                raise InputError(f"variable {name}:{s} of Delta is not among the game variables")
        for _, s in variables:
            m.signature.sort(s)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "variables", variables)

    @property
    def rounds(self) -> int:
        return len(self.variables)

    def side(self, name: str) -> Structure:
        return self.m if name == "M" else self.n

    def challenges(self, position: Position) -> list[Move]:
        s = self.variables[len(position[0])][1]
        return [("M", p) for p in self.m.points(s)] + [("N", p) for p in self.n.points(s)]

    def answers(self, position: Position, side: str) -> list[str]:
        s = self.variables[len(position[0])][1]
        return list((self.n if side == "M" else self.m).points(s))


def _extend(pos: Position, side: str, challenge: str, answer: str) -> Position:
    a, b = pos
    if side == "M":
        return a + (challenge,), b + (answer,)
    return a + (answer,), b + (challenge,)


@dataclass
class StrategyTree:
    """Solved game: winner plus optimal moves at every explored position.

    ``challenges[pos]`` is Player I's first winning challenge at a position
    I wins; ``responses[(pos, side, point)]`` is II's first winning answer
    to that challenge at a position II wins.
    """

    spec: GameSpec
    winner: str  # "I" | "II"
    values: dict[Position, bool] = field(default_factory=dict)  # True = II wins
    challenges: dict[Position, Move] = field(default_factory=dict)
    responses: dict[tuple[Position, str, str], str] = field(default_factory=dict)
    terminal: dict[Position, Fraction] = field(default_factory=dict)
    _cache_m: dict = field(default_factory=dict, repr=False)
    _cache_n: dict = field(default_factory=dict, repr=False)

    @property
    def positions(self) -> int:
        return len(self.values)

    def position_bound(self) -> int:
        g = self.spec
        size = g.m.size() + g.n.size() + 1
        return size ** (2 * g.rounds)

    def ii_wins(self, pos: Position) -> bool:
        return self.values[pos]

    def response(self, pos: Position, side: str, point: str) -> str | None:
        return self.responses.get((pos, side, point))

    def solve(self, pos: Position) -> bool:
        """Does II win from ``pos``?  Fills in moves for every explored position."""
        if pos in self.values:
            return self.values[pos]
        g = self.spec
        if len(pos[0]) == g.rounds:
            gap = terminal_gap(g, pos, self._cache_m, self._cache_n)
            self.terminal[pos] = gap
            self.values[pos] = gap < g.eps
            return self.values[pos]
        ii_wins = True
        for side, p in g.challenges(pos):
            answer = None
            for r in g.answers(pos, side):
                if self.solve(_extend(pos, side, p, r)):
                    answer = r
                    break
            if answer is None:
                self.challenges[pos] = (side, p)
                ii_wins = False
                break
            self.responses[(pos, side, p)] = answer
        self.values[pos] = ii_wins
        return ii_wins


def terminal_gap(g: GameSpec, pos: Position, cache_m: dict | None = None, cache_n: dict | None = None) -> Fraction:
    """``max_phi |phi^M(a) - phi^N(b)|`` at a complete position (0 for empty Delta)."""
    a, b = pos
    names = [v for v, _ in g.variables]

    def vec(struct: Structure, tup, cache):
        if cache is not None and tup in cache:
            return cache[tup]
        env = dict(zip(names, tup))
        out = [formula_value(struct, phi, env) for phi in g.delta]
        if cache is not None:
            cache[tup] = out
        return out

    va, vb = vec(g.m, a, cache_m), vec(g.n, b, cache_n)
    return max((abs(x - y) for x, y in zip(va, vb)), default=Fraction(0))


def ef_solve(g: GameSpec) -> StrategyTree:
    """Exact memoized minimax solution of the game."""
    tree = StrategyTree(g, "II")
    tree.winner = "II" if tree.solve(((), ())) else "I"
    return tree


# --------------------------------------------------------------------------
# interactive play


def ef_play(
    g: GameSpec,
    human: str = "I",
    tree: StrategyTree | None = None,
    stdin: TextIO | None = None,
    stdout: TextIO | None = None,
    prompt: Callable[[str], str] | None = None,
) -> list[str]:
    """Play against the solved strategy; returns the transcript lines ``round side point``.

    The human enters ``SIDE POINT`` (e.g. ``M a``) when playing I and a
    point name when playing II.  Illegal input is re-prompted.
    """
    if human not in ("I", "II"):
        raise InputError("human side must be I or II")
    tree = tree or ef_solve(g)
    out = stdout or sys.stdout
    inp = stdin or sys.stdin

    def ask(text: str) -> str:
        if prompt is not None:
            return prompt(text)
        out.write(text)
        out.flush()
        line = inp.readline()
        if not line:
            raise InputError("input ended before the game finished")
        return line.strip()

    transcript: list[str] = []
    pos: Position = ((), ())
    out.write(f"EF game: {g.rounds} round(s), eps = {g.eps}; solved winner: {tree.winner}\n")
    for i in range(g.rounds):
        var, srt = g.variables[i]
        if human == "I":
            while True:
                text = ask(f"round {i + 1} ({var}:{srt}) - your move as I, 'M point' or 'N point': ")
                parts = text.split()
                if len(parts) == 2 and parts[0] in ("M", "N") and g.side(parts[0]).has_point(srt, parts[1]):
                    side, p = parts
                    break
                out.write(f"illegal move {text!r}\n")
            r = _engine_answer(g, tree, pos, side, p)
        else:
            tree.solve(pos)
            side, p = tree.challenges.get(pos) or g.challenges(pos)[0]
            other = "N" if side == "M" else "M"
            out.write(f"round {i + 1}: I plays {p} in {side}\n")
            while True:
                r = ask(f"your answer in {other} ({srt}): ")
                if g.side(other).has_point(srt, r):
                    break
                out.write(f"illegal point {r!r}\n")
        other = "N" if side == "M" else "M"
        transcript.append(f"{i + 1} {side} {p}")
        transcript.append(f"{i + 1} {other} {r}")
        out.write(f"round {i + 1}: {side} {p} / {other} {r}\n")
        pos = _extend(pos, side, p, r)
    gap = terminal_gap(g, pos)
    winner = "II" if gap < g.eps else "I"
    out.write(f"max formula gap {gap} {'<' if winner == 'II' else '>='} eps {g.eps}: Player {winner} wins\n")
    transcript.append(f"winner {winner}")
    return transcript


def _engine_answer(g: GameSpec, tree: StrategyTree, pos: Position, side: str, p: str) -> str:
    """II's first winning answer if one exists, else the first legal point."""
    answers = g.answers(pos, side)
    for r in answers:
        if tree.solve(_extend(pos, side, p, r)):
            return r
    return answers[0]


# --------------------------------------------------------------------------
# back and forth


def back_and_forth_iso(m: Structure, n: Structure, depth: int = 1) -> MorphismReport:
    """Build a bijection by alternating forth and back steps.

    A partial map ``a -> b`` may be extended only if every formula of
    quantifier depth ``< depth`` (atomic formulas for ``depth = 1``) over the
    mapped tuple takes equal values on both sides.  Search backtracks; if no
    bijection is found the report carries the first partial map that could
    not be extended.
    """
    if m.signature != n.signature:
        raise InputError("structures have different signatures")
    if depth < 1:
        raise DomainError("depth must be at least 1")
    sig = m.signature
    for srt in sig.sorts:
        if len(m.points(srt.name)) != len(n.points(srt.name)):
            return MorphismReport("none", None, [f"carrier sizes differ on sort {srt.name}"])

    families: dict[tuple[str, ...], list[Formula]] = {}

    def family(sorts: tuple[str, ...]) -> tuple[list[str], list[Formula]]:
        names = [f"x{i + 1}" for i in range(len(sorts))]
        if sorts not in families:
            fam = enumerate_formulas(
                sig,
                dict(zip(names, sorts)),
                max_quantifier_depth=depth - 1,
                max_connective_depth=0,
                denominator=1,
            )
            families[sorts] = [phi for phi in fam if free_vars(phi)]
        return names, families[sorts]

    def agrees(pairs: list[tuple[str, str, str]]) -> bool:
        sorts = tuple(s for s, _, _ in pairs)
        names, fam = family(sorts)
        env_m = dict(zip(names, (a for _, a, _ in pairs)))
        env_n = dict(zip(names, (b for _, _, b in pairs)))
        # only formulas mentioning the newest variable can change
        last = names[-1]
        return all(
            formula_value(m, phi, env_m) == formula_value(n, phi, env_n)
            for phi in fam
            if last in free_vars(phi)
        )

    pairs: list[tuple[str, str, str]] = []
    first_dead: list[dict[str, dict[str, str]]] = []

    def as_map() -> dict[str, dict[str, str]]:
        out: dict[str, dict[str, str]] = {s.name: {} for s in sig.sorts}
        for s, a, b in pairs:
            out[s][a] = b
        return out

    def next_slot(forth: bool):
        for srt in sig.sorts:
            s = srt.name
            done = {a for t, a, _ in pairs if t == s} if forth else {b for t, _, b in pairs if t == s}
            for p in (m if forth else n).points(s):
                if p not in done:
                    return s, p
        return None

    def search(forth: bool) -> bool:
        slot = next_slot(forth)
        if slot is None:
            forth = not forth
            slot = next_slot(forth)
            if slot is None:
                return True
        s, p = slot
        used = {b for t, _, b in pairs if t == s} if forth else {a for t, a, _ in pairs if t == s}
        candidates = [q for q in (n if forth else m).points(s) if q not in used]
        extended = False
        for q in candidates:
            pairs.append((s, p, q) if forth else (s, q, p))
            if agrees(pairs):
                extended = True
                if search(not forth):
                    return True
            pairs.pop()
        if not extended and not first_dead:
            first_dead.append(as_map())
        return False

    if search(True):
        rho = as_map()
        report = check_embedding(m, n, rho)
        if report.kind == "embedding":
            return MorphismReport("isomorphism", rho, [])
        return MorphismReport("none", rho, ["complete map is not an embedding"] + report.violations)
    dead = first_dead[0] if first_dead else {}
    size = sum(len(v) for v in dead.values())
    return MorphismReport("none", dead, [f"partial map of size {size} cannot be extended: {dead}"])


def describe_tree(tree: StrategyTree) -> str:
    g = tree.spec
    lines = [
        f"winner: {tree.winner}",
        f"rounds: {g.rounds}",
        f"eps: {g.eps}",
        f"positions explored: {tree.positions} (bound {tree.position_bound()})",
        "delta: " + "; ".join(print_formula(phi) for phi in g.delta),
    ]
    root: Position = ((), ())
    if tree.winner == "I" and root in tree.challenges:
        side, p = tree.challenges[root]
        lines.append(f"opening challenge for I: {side} {p}")
    return "\n".join(lines)
