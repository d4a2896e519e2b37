"""Constraint instances over a finite alphabet, their values, and constraint graphs.

A constraint reads the variables in its ``scope`` (in order) and looks the
tuple up in ``table``; tuple ``(a_0, ..., a_{s-1})`` sits at index
``sum(a_k * W**(s-1-k))``.  Huge-alphabet constraints may carry a predicate
callable instead of a table.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import specgraph
from .errors import FormatError, PreconditionError, ResourceError, ShapeError

VAL_BUDGET = 1 << 24


@dataclass(frozen=True, eq=False)
class Constraint:
    scope: tuple
    table: np.ndarray | None = None
    pred: Callable | None = None
    tag: str = ""

    def __post_init__(self):
        scope = tuple(int(v) for v in self.scope)
        if len(set(scope)) != len(scope):
            raise ShapeError(f"scope has repeated variables: {scope}")
        object.__setattr__(self, "scope", scope)
        if self.table is not None:
            t = np.asarray(self.table, dtype=np.uint8).copy()
            t.flags.writeable = False
            object.__setattr__(self, "table", t)
        elif self.pred is None:
            raise ShapeError("a constraint needs a table or a predicate")

    def holds(self, values: Sequence[int], W: int) -> bool:
        if self.table is None:
            return bool(self.pred(tuple(values)))
        idx = 0
        for a in values:
            idx = idx * W + int(a)
        return bool(self.table[idx])

    def __eq__(self, other):
        if not isinstance(other, Constraint) or self.scope != other.scope:
            return False
        if self.table is None or other.table is None:
            return self is other
        return bool(np.array_equal(self.table, other.table))

    def __hash__(self):
        return hash(self.scope)


def null_constraint(scope, W: int, tag: str = "null") -> Constraint:
    return Constraint(scope, np.ones(W ** len(tuple(scope)), dtype=np.uint8), tag=tag)


def equality_constraint(a: int, b: int, W: int, tag: str = "eq") -> Constraint:
    t = np.zeros(W * W, dtype=np.uint8)
    t[np.arange(W) * W + np.arange(W)] = 1
    return Constraint((a, b), t, tag=tag)


def table_from(fn, arity: int, W: int) -> np.ndarray:
    """Truth table of ``fn`` over all W**arity tuples in index order."""
    grid = np.array(np.unravel_index(np.arange(W ** arity), (W,) * arity)).T if arity else np.zeros((1, 0), int)
    return np.array([1 if fn(tuple(int(x) for x in row)) else 0 for row in grid], dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class CspInstance:
    q: int
    W: int
    n: int
    constraints: tuple

    def __post_init__(self):
        cons = tuple(self.constraints)
        object.__setattr__(self, "constraints", cons)
        if self.W < 2:
            raise ShapeError("alphabet size must be at least 2")
        for c in cons:
            if len(c.scope) > self.q:
                raise ShapeError(f"scope {c.scope} exceeds arity bound {self.q}")
            if any(not 0 <= v < self.n for v in c.scope):
                raise ShapeError(f"scope {c.scope} outside [0, {self.n})")
            if c.table is not None and len(c.table) != self.W ** len(c.scope):
                raise ShapeError(f"table length {len(c.table)} != W^{len(c.scope)}")

    @property
    def m(self) -> int:
        return len(self.constraints)

    def __eq__(self, other):
        return (isinstance(other, CspInstance) and (self.q, self.W, self.n) == (other.q, other.W, other.n)
                and len(self.constraints) == len(other.constraints)
                and all(a == b for a, b in zip(self.constraints, other.constraints)))

    __hash__ = object.__hash__


def _check_assignment(phi: CspInstance, u) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64)
    if u.shape[-1] != phi.n:
        raise ShapeError(f"assignment length {u.shape[-1]} != n = {phi.n}")
    if u.size and (u.min() < 0 or u.max() >= phi.W):
        raise ShapeError("assignment value outside the alphabet")
    return u


def satisfied_matrix(phi: CspInstance, U) -> np.ndarray:
    """Boolean matrix (assignments x constraints) of satisfied constraints."""
    U = _check_assignment(phi, np.atleast_2d(U))
    out = np.ones((U.shape[0], phi.m), dtype=bool)
    groups: dict[int, list[int]] = {}
    for k, c in enumerate(phi.constraints):
        if c.table is None:
            out[:, k] = [c.pred(tuple(int(x) for x in row[list(c.scope)])) for row in U]
        else:
            groups.setdefault(len(c.scope), []).append(k)
    for s, ks in groups.items():
        tables = np.stack([phi.constraints[k].table for k in ks])
        if s == 0:
            out[:, ks] = tables[:, 0][None, :].astype(bool)
            continue
        scopes = np.array([phi.constraints[k].scope for k in ks])
        weights = phi.W ** np.arange(s - 1, -1, -1)
        idx = (U[:, scopes] * weights).sum(axis=-1)
        out[:, ks] = tables[np.arange(len(ks))[None, :], idx].astype(bool)
    return out


def frac_satisfied(phi: CspInstance, u) -> Fraction:
    if phi.m == 0:
        _check_assignment(phi, u)
        return Fraction(1)
    return Fraction(int(satisfied_matrix(phi, u).sum()), phi.m)


def unsat_fraction(phi: CspInstance, u) -> Fraction:
    return 1 - frac_satisfied(phi, u)


def all_assignments(n: int, W: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    stop = W ** n if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    return np.array(np.unravel_index(idx, (W,) * n)).T if n else np.zeros((len(idx), 0), dtype=np.int64)


def val_exact(phi: CspInstance, budget: int = VAL_BUDGET, chunk: int = 1 << 15) -> Fraction:
    total = phi.W ** phi.n
    if total > budget:
        raise ResourceError(f"{total} assignments exceed the budget {budget}")
    if phi.m == 0:
        return Fraction(1)
    best = 0
    for start in range(0, total, chunk):
        U = all_assignments(phi.n, phi.W, start, min(total, start + chunk))
        best = max(best, int(satisfied_matrix(phi, U).sum(axis=1).max()))
        if best == phi.m:
            break
    return Fraction(best, phi.m)


def argmax_assignment(phi: CspInstance, budget: int = VAL_BUDGET) -> np.ndarray:
    """A lexicographically first assignment attaining val_exact."""
    total = phi.W ** phi.n
    if total > budget:
        raise ResourceError(f"{total} assignments exceed the budget {budget}")
    best, arg = -1, None
    for start in range(0, total, 1 << 15):
        U = all_assignments(phi.n, phi.W, start, min(total, start + (1 << 15)))
        scores = satisfied_matrix(phi, U).sum(axis=1)
        k = int(scores.argmax())
        if scores[k] > best:
            best, arg = int(scores[k]), U[k]
    return arg


def val_lower(phi: CspInstance, seeds: Sequence[int] = (0,), restarts: int = 8,
              starts: Sequence = (), max_rounds: int = 200) -> Fraction:
    """Best value seen by seeded multi-restart hill climbing over single-variable moves."""
    if phi.m == 0:
        return Fraction(1)
    best = 0
    inits = [np.asarray(s, dtype=np.int64) for s in starts]
    for seed in seeds:
        rng = np.random.default_rng(seed)
        inits.extend(rng.integers(0, phi.W, size=phi.n) for _ in range(restarts))
    for u in inits:
        u = _check_assignment(phi, u).copy()
        score = int(satisfied_matrix(phi, u).sum())
        for _ in range(max_rounds):
            moves = np.repeat(u[None, :], phi.n * phi.W, axis=0)
            moves[np.arange(phi.n * phi.W), np.repeat(np.arange(phi.n), phi.W)] = np.tile(np.arange(phi.W), phi.n)
            scores = satisfied_matrix(phi, moves).sum(axis=1)
            k = int(scores.argmax())
            if scores[k] <= score:
                break
            u, score = moves[k], int(scores[k])
        best = max(best, score)
        if best == phi.m:
            break
    return Fraction(best, phi.m)


# ---------------------------------------------------------------- constraint graph

@dataclass(frozen=True)
class ConstraintGraph:
    graph: specgraph.RotationGraph | None
    degrees: tuple
    port_constraint: np.ndarray | None  # (n, d): constraint index behind each port

    @property
    def regular(self) -> bool:
        return self.graph is not None


def constraint_graph(phi: CspInstance) -> ConstraintGraph:
    """One edge per constraint; a one-variable scope is a one-port self-loop."""
    if phi.q != 2:
        raise PreconditionError(f"constraint graph needs q = 2, got q = {phi.q}")
    deg = [0] * phi.n
    for c in phi.constraints:
        if len(c.scope) == 0:
            raise PreconditionError("constant constraints have no edge")
        for v in c.scope:
            deg[v] += 1
    degrees = tuple(deg)
    if phi.n == 0 or len(set(degrees)) != 1 or degrees[0] == 0:
        return ConstraintGraph(None, degrees, None)
    d = degrees[0]
    nbr = np.empty((phi.n, d), dtype=np.int64)
    port = np.empty((phi.n, d), dtype=np.int64)
    pc = np.empty((phi.n, d), dtype=np.int64)
    nxt = [0] * phi.n
    for k, c in enumerate(phi.constraints):
        if len(c.scope) == 1:
            (v,) = c.scope
            i = nxt[v]
            nbr[v, i], port[v, i], pc[v, i] = v, i, k
            nxt[v] += 1
        else:
            v, u = c.scope
            i, j = nxt[v], nxt[u]
            nbr[v, i], port[v, i], pc[v, i] = u, j, k
            nbr[u, j], port[u, j], pc[u, j] = v, i, k
            nxt[v] += 1
            nxt[u] += 1
    return ConstraintGraph(specgraph.RotationGraph(nbr, port), degrees, pc)


@dataclass(frozen=True)
class NiceReport:
    nice: bool
    failures: tuple
    degree: int | None
    lambda_estimate: specgraph.SpectralEstimate | None


def is_nice(phi: CspInstance, cap: int = specgraph.EXACT_CAP, threshold=Fraction(9, 10)) -> NiceReport:
    failures = []
    if phi.q != 2:
        return NiceReport(False, (f"arity bound is {phi.q}, not 2",), None, None)
    cg = constraint_graph(phi)
    if not cg.regular:
        return NiceReport(False, ("constraint graph is not regular",), None, None)
    G = cg.graph
    loops = G.self_loop_ports()
    bad = np.flatnonzero(2 * loops < G.d)
    if bad.size:
        failures.append(f"vertices with fewer than half self-loops: {bad.tolist()}")
    est = specgraph.lambda_upper(G, cap=cap)
    if est.lambda_upper > threshold:
        failures.append(f"lambda bound {float(est.lambda_upper):.6f} exceeds {float(threshold)}")
    # above the certification cap the bound is a flagged estimate (est.certified is False)
    return NiceReport(not failures, tuple(failures), G.d, est)


# ---------------------------------------------------------------- file format

def dumps_csp(phi: CspInstance) -> str:
    lines = [f"cspw v1 {phi.q} {phi.W} {phi.n} {phi.m}"]
    for c in phi.constraints:
        if c.table is None:
            raise FormatError("predicate constraints have no table to write")
        scope = " ".join(str(v) for v in c.scope)
        bits = "".join(str(int(b)) for b in c.table)
        lines.append(f"scope: {scope} ; table: {bits}")
    return "\n".join(lines) + "\n"


def loads_csp(text: str) -> CspInstance:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip()]
    head = rows[0].split() if rows else []
    if head[:2] != ["cspw", "v1"] or len(head) != 6:
        raise FormatError("missing 'cspw v1 q W n m' header")
    q, W, n, m = map(int, head[2:])
    if len(rows) - 1 != m:
        raise FormatError(f"expected {m} constraint lines, found {len(rows) - 1}")
    cons = []
    for row in rows[1:]:
        try:
            left, right = row.split(";")
            sk, sv = left.split(":")
            tk, tv = right.split(":")
        except ValueError as exc:
            raise FormatError(f"bad constraint line: {row}") from exc
        if sk.strip() != "scope" or tk.strip() != "table":
            raise FormatError(f"bad constraint line: {row}")
        bits = tv.strip()
        if set(bits) - {"0", "1"}:
            raise FormatError(f"table is not a bit string: {bits}")
        cons.append(Constraint(tuple(int(v) for v in sv.split()), np.array([int(b) for b in bits], dtype=np.uint8)))
    try:
        return CspInstance(q, W, n, tuple(cons))
    except ShapeError as exc:
        raise FormatError(str(exc)) from exc


def random_instance(rng: np.random.Generator, n: int, m: int, q: int, W: int,
                    density: float = 0.7, exact_arity: bool = True) -> CspInstance:
    cons = []
    for _ in range(m):
        s = min(q, n) if exact_arity else int(rng.integers(1, min(q, n) + 1))
        scope = tuple(int(v) for v in rng.choice(n, size=s, replace=False))
        cons.append(Constraint(scope, (rng.random(W ** s) < density).astype(np.uint8)))
    return CspInstance(q, W, n, tuple(cons))
