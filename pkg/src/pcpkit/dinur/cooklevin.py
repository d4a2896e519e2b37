"""Tableau encoding of a nondeterministic Turing machine run as a CNF.

Cells beyond the input start unconstrained, so the formula is satisfiable
exactly when some completion of the tape (the guessed certificate) and some
nondeterministic run reach an accepting state within S = max(|x|, 1)**k
steps.  The head starts on cell 0 and never leaves cells 0..S.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import ceil, log2

from ..cnf import Cnf
from ..errors import ParameterError, ResourceError

TABLEAU_BUDGET = 1 << 16


@dataclass(frozen=True)
class TmSpec:
    """States 0..states-1, symbols 0..symbols-1 (0 and 1 are the input bits).

    ``transitions`` maps (state, symbol) to a tuple of (state', symbol', move).
    """

    states: int
    symbols: int
    initial: int
    accepting: frozenset
    transitions: dict
    k: int = 1

    def __post_init__(self):
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        if self.symbols < 2 or self.states < 1 or self.k < 1:
            raise ParameterError("need at least one state, two symbols and k >= 1")
        if not 0 <= self.initial < self.states:
            raise ParameterError("initial state out of range")
        for (q, s), moves in self.transitions.items():
            if q in self.accepting:
                raise ParameterError(f"accepting state {q} has outgoing transitions")
            if not (0 <= q < self.states and 0 <= s < self.symbols):
                raise ParameterError(f"transition key {(q, s)} out of range")
            for q2, s2, mv in moves:
                if not (0 <= q2 < self.states and 0 <= s2 < self.symbols and mv in (-1, 1)):
                    raise ParameterError(f"bad transition {(q, s)} -> {(q2, s2, mv)}")

    def encoding(self) -> str:
        """A plain binary encoding; its length is |M| in the size bound."""
        wq = max(1, ceil(log2(self.states)))
        ws = max(1, ceil(log2(self.symbols)))

        def num(v, w):
            return format(v, f"0{w}b")

        head = num(self.states, 16) + num(self.symbols, 16) + num(self.initial, wq)
        acc = "".join("1" if q in self.accepting else "0" for q in range(self.states))
        rho = "".join(num(q, wq) + num(s, ws) + num(q2, wq) + num(s2, ws) + ("1" if mv > 0 else "0")
                      for (q, s), moves in sorted(self.transitions.items()) for q2, s2, mv in moves)
        return head + acc + rho

    @property
    def size(self) -> int:
        return len(self.encoding())


class _Atoms:
    def __init__(self):
        self.index = {}

    def __call__(self, *key) -> int:
        if key not in self.index:
            self.index[key] = len(self.index) + 1
        return self.index[key]


@dataclass(frozen=True)
class Tableau:
    cnf: Cnf
    atoms: dict      # ("T", cell, symbol, step) / ("H", cell, step) / ("Q", state, step) / ("X", ...) -> var
    steps: int
    tm: TmSpec


def cooklevin(tm: TmSpec, x, budget: int = TABLEAU_BUDGET) -> Tableau:
    x = [int(b) for b in x]
    if any(b not in (0, 1) for b in x):
        raise ParameterError("input must be a bit string")
    S = max(len(x), 1) ** tm.k
    cells = S + 1
    if cells * cells * tm.symbols > budget:
        raise ResourceError(f"tableau of {cells}x{cells} cells exceeds the budget")
    A = _Atoms()
    cl = []
    Sig, Qn = range(tm.symbols), range(tm.states)
    for i, b in enumerate(x):
        cl.append((A("T", i, b, 0),))
    cl.append((A("Q", tm.initial, 0),))
    cl.append((A("H", 0, 0),))
    for s in range(S + 1):
        for i in range(cells):
            cl.append(tuple(A("T", i, j, s) for j in Sig))
            for j1 in Sig:
                for j2 in Sig:
                    if j1 < j2:
                        cl.append((-A("T", i, j1, s), -A("T", i, j2, s)))
        cl.append(tuple(A("Q", q, s) for q in Qn))
        cl.append(tuple(A("H", i, s) for i in range(cells)))
        for q1 in Qn:
            for q2 in Qn:
                if q1 < q2:
                    cl.append((-A("Q", q1, s), -A("Q", q2, s)))
        for i1 in range(cells):
            for i2 in range(i1 + 1, cells):
                cl.append((-A("H", i1, s), -A("H", i2, s)))
    for s in range(S):
        # a cell off the head keeps its symbol
        for i in range(cells):
            for j1 in Sig:
                for j2 in Sig:
                    if j1 != j2:
                        cl.append((-A("T", i, j1, s), -A("T", i, j2, s + 1), A("H", i, s)))
        for i in range(cells):
            for q in Qn:
                for sym in Sig:
                    pre = (-A("H", i, s), -A("Q", q, s), -A("T", i, sym, s))
                    if q in tm.accepting:
                        # accepting configurations stay put
                        cl.append(pre + (A("H", i, s + 1),))
                        cl.append(pre + (A("Q", q, s + 1),))
                        cl.append(pre + (A("T", i, sym, s + 1),))
                        continue
                    options = []
                    for idx, (q2, s2, mv) in enumerate(tm.transitions.get((q, sym), ())):
                        if not 0 <= i + mv < cells:
                            continue
                        xv = A("X", i, q, sym, s, idx)
                        options.append(xv)
                        cl.append((-xv, A("H", i + mv, s + 1)))
                        cl.append((-xv, A("Q", q2, s + 1)))
                        cl.append((-xv, A("T", i, s2, s + 1)))
                    cl.append(pre + tuple(options))
    cl.append(tuple(A("Q", r, s) for r in sorted(tm.accepting) for s in range(S + 1)))
    return Tableau(Cnf(len(A.index), tuple(cl)), dict(A.index), S, tm)


def tableau_assignment(tab: Tableau, run) -> list[int]:
    """Formula assignment from a run: a list of (tape, head, state) per step."""
    val = [0] * tab.cnf.nvars
    for s, (tape, head, state) in enumerate(run):
        for i, sym in enumerate(tape):
            val[tab.atoms[("T", i, sym, s)] - 1] = 1
        val[tab.atoms[("H", head, s)] - 1] = 1
        val[tab.atoms[("Q", state, s)] - 1] = 1
    for s in range(len(run) - 1):
        (tape, head, state), (tape2, head2, state2) = run[s], run[s + 1]
        if state in tab.tm.accepting:
            continue
        moves = tab.tm.transitions.get((state, tape[head]), ())
        idx = moves.index((state2, tape2[head], head2 - head))
        val[tab.atoms[("X", head, state, tape[head], s, idx)] - 1] = 1
    return val


def accepting_runs(tm: TmSpec, x):
    """Yield accepting runs (lists of (tape, head, state)) of length S+1, by brute force."""
    x = [int(b) for b in x]
    S = max(len(x), 1) ** tm.k
    cells = S + 1
    free = cells - len(x)
    for fill in product(range(tm.symbols), repeat=free):
        tape = tuple(x) + fill
        yield from _explore(tm, [(tape, 0, tm.initial)], S)


def _explore(tm, run, S):
    tape, head, state = run[-1]
    if len(run) == S + 1:
        if any(st in tm.accepting for _, _, st in run):
            yield list(run)
        return
    if state in tm.accepting:
        yield from _explore(tm, run + [(tape, head, state)], S)
        return
    for q2, s2, mv in tm.transitions.get((state, tape[head]), ()):
        h2 = head + mv
        if 0 <= h2 < len(tape):
            t2 = tape[:head] + (s2,) + tape[head + 1:]
            yield from _explore(tm, run + [(t2, h2, q2)], S)


def simulate_accepts(tm: TmSpec, x) -> bool:
    return next(accepting_runs(tm, x), None) is not None
