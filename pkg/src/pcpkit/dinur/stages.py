"""Instance-to-instance reductions from CNF to nice binary constraint instances.

Every reduction returns a ``Stage``: the output instance together with the
map lifting a satisfying input assignment to a satisfying output assignment
and the map decoding an output assignment back to the input's variables.
The per-assignment soundness laws relate ``unsat(out, y)`` to
``unsat(src, decode(y))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from .. import specgraph
from ..cnf import Cnf, split_to_width3
from ..csp import (Constraint, CspInstance, constraint_graph, equality_constraint, null_constraint,
                   table_from, unsat_fraction)
from ..errors import ConstructionError, NotFoundError, PreconditionError
from .config import PipelineConfig


@dataclass(frozen=True)
class Stage:
    name: str
    src: Any
    out: Any
    lift: Callable = field(repr=False)
    decode: Callable = field(repr=False)
    info: dict = field(default_factory=dict)

    @property
    def blowup(self) -> Fraction | None:
        if self.src.m == 0:
            return None
        return Fraction(self.out.m, self.src.m)


def _plurality(values: np.ndarray, W: int) -> int:
    counts = np.bincount(values, minlength=W)
    return int(np.argmax(counts))  # argmax returns the first, i.e. smallest, maximiser


# ---------------------------------------------------------------- CNF -> q0CSP

def to_qcsp(cnf: Cnf, q0: int = 3) -> Stage:
    """One Boolean constraint per clause, after chaining clauses down to width 3."""
    if q0 < 3:
        raise PreconditionError("q0 must be at least 3")
    split, n_orig = split_to_width3(cnf)
    cons = []
    for c in split.clauses:
        scope = tuple(sorted({abs(l) - 1 for l in c}))
        pos = {v: k for k, v in enumerate(scope)}

        def clause_ok(vals, c=c, pos=pos):
            return any((vals[pos[abs(l) - 1]] == 1) == (l > 0) for l in c)

        cons.append(Constraint(scope, table_from(clause_ok, len(scope), 2), tag="clause"))
    out = CspInstance(q0, 2, split.nvars, tuple(cons))

    def lift(x):
        x = [int(a) for a in x]
        if split.nvars == n_orig:
            return np.array(x, dtype=np.int64)
        sol = _fill_chain(split, x + [0] * (split.nvars - n_orig), n_orig)
        if sol is None:
            raise PreconditionError("assignment does not satisfy the formula")
        return np.array(sol, dtype=np.int64)

    def decode(u):
        return np.asarray(u, dtype=np.int64)[:n_orig]

    return Stage("to_qcsp", _CnfView(cnf), out, lift, decode, {"chained_vars": split.nvars - n_orig})


def _fill_chain(split: Cnf, full: list, n_orig: int):
    # each chain variable appears positively in its first clause and negatively in the next;
    # set it true exactly when the clause it closes is not yet satisfied by original literals
    for c in split.clauses:
        chain_pos = [l for l in c if abs(l) > n_orig and l > 0]
        if not chain_pos:
            continue
        z = chain_pos[0]
        others_true = any(full[abs(l) - 1] == (1 if l > 0 else 0) for l in c if l != z)
        full[z - 1] = 0 if others_true else 1
    return full if split.evaluate(full) else None


@dataclass(frozen=True)
class _CnfView:
    cnf: Cnf

    @property
    def m(self) -> int:
        return len(self.cnf.clauses)

    @property
    def n(self) -> int:
        return self.cnf.nvars


# ---------------------------------------------------------------- q-ary -> binary

def qcsp_to_2cspW(phi: CspInstance) -> Stage:
    """Variables u_1..u_n then y_1..y_m over alphabet W^q.

    y_i holds a full assignment to constraint i's scope (padded to q entries
    by repeating the last scope variable); the j-th binary constraint checks
    that y_i satisfies constraint i and that its j-th entry equals u at that
    scope position.  Exactly q*m constraints.
    """
    q, W, n = phi.q, phi.W, phi.n
    Wp = W ** q
    digits = np.array([[(y // W ** (q - 1 - k)) % W for k in range(q)] for y in range(Wp)], dtype=np.int64)
    cons = []
    for i, c in enumerate(phi.constraints):
        s = len(c.scope)
        yv = n + i
        if s == 0:
            sat = bool(c.table[0])
            for j in range(q):
                cons.append(Constraint((yv,), np.full(Wp, 1 if sat else 0, dtype=np.uint8), tag="empty"))
            continue
        weights = W ** np.arange(s - 1, -1, -1)
        ok = c.table[(digits[:, :s] * weights).sum(axis=1)].astype(bool)
        # padded entries must repeat the last scope value
        for k in range(s, q):
            ok &= digits[:, k] == digits[:, s - 1]
        for j in range(q):
            v = c.scope[min(j, s - 1)]
            tab = np.zeros((Wp, Wp), dtype=np.uint8)
            for uval in range(W):
                tab[:, uval] = ok & (digits[:, j] == uval)
            cons.append(Constraint((yv, v), tab.ravel(), tag=f"agree{j}"))
    out = CspInstance(2, Wp, n + phi.m, tuple(cons))

    def lift(u):
        u = np.asarray(u, dtype=np.int64)
        ys = []
        for c in phi.constraints:
            vals = [u[v] for v in c.scope] if c.scope else [0]
            vals = vals + [vals[-1]] * (q - len(vals))
            ys.append(sum(int(a) * W ** (q - 1 - k) for k, a in enumerate(vals)))
        return np.concatenate([u, np.array(ys, dtype=np.int64)])

    def decode(y):
        u = np.asarray(y, dtype=np.int64)[..., :n].copy()
        u[u >= W] = 0
        return u

    return Stage("qcsp_to_2cspW", phi, out, lift, decode, {"q": q})


# ---------------------------------------------------------------- regularize

def _cloud_graph(c: int, d: int, seed: int, budget: int) -> specgraph.RotationGraph:
    """Connected d-regular graph on c vertices, loopless when a pairing allows it."""
    if c == 1:
        return specgraph.single_vertex(d)
    rng = np.random.default_rng(seed)
    loopless = (c * d) % 2 == 0
    for _ in range(budget):
        try:
            G = specgraph._sample(c, d, rng, loopless=loopless)
        except NotFoundError:
            loopless = False
            continue
        if G.is_connected():
            return G
    raise ConstructionError(f"no connected {d}-regular cloud graph on {c} vertices")


def _edges_as_constraints(G: specgraph.RotationGraph, offset: int, W: int, make) -> list:
    """One constraint per edge; every loop port becomes its own unary null constraint."""
    out = []
    for v in range(G.n):
        for i in range(G.d):
            w, j = G.rot(v, i)
            if w == v:
                out.append(null_constraint((offset + v,), W, tag="loop"))
            elif (v, i) < (w, j):
                out.append(make(offset + v, offset + w))
    return out


def regularize(phi: CspInstance, cfg: PipelineConfig = PipelineConfig()) -> Stage:
    """Replace each variable by a cloud of copies, one per occurrence.

    Copies of a variable are tied by equality constraints along a connected
    d-regular graph, so every copy sits in exactly d + 1 constraints.
    Variables that occur nowhere are dropped.
    """
    if phi.q != 2:
        raise PreconditionError("regularize expects a binary instance")
    W, d = phi.W, cfg.d
    occ = [[] for _ in range(phi.n)]
    for k, c in enumerate(phi.constraints):
        for v in c.scope:
            occ[v].append(k)
    used = [v for v in range(phi.n) if occ[v]]
    copy_of = {}     # (var, constraint index) -> copy id
    cloud = {}
    nxt = 0
    for v in used:
        ids = []
        for k in occ[v]:
            copy_of[(v, k)] = nxt
            ids.append(nxt)
            nxt += 1
        cloud[v] = ids
    cons = []
    for k, c in enumerate(phi.constraints):
        scope = tuple(copy_of[(v, k)] for v in c.scope)
        cons.append(Constraint(scope, c.table, c.pred, tag=c.tag or "orig"))
    graphs = {}
    for v in used:
        G = _cloud_graph(len(cloud[v]), d, cfg.seed + 7919 * v, cfg.expander_budget)
        graphs[v] = G
        ids = cloud[v]
        for con in _edges_as_constraints(G, 0, W, lambda a, b: equality_constraint(a, b, W)):
            cons.append(Constraint(tuple(ids[x] for x in con.scope), con.table, tag=con.tag))
    out = CspInstance(2, W, nxt, tuple(cons))
    clouds = [np.array(cloud[v], dtype=np.int64) for v in used]

    def lift(u):
        u = np.asarray(u, dtype=np.int64)
        y = np.zeros(nxt, dtype=np.int64)
        for v in used:
            y[cloud[v]] = u[v]
        return y

    def decode(y):
        y = np.asarray(y, dtype=np.int64)
        u = np.zeros(phi.n, dtype=np.int64)
        for v, ids in zip(used, clouds):
            u[v] = _plurality(y[ids], W)
        return u

    return Stage("regularize", phi, out, lift, decode,
                 {"d": d, "dropped": phi.n - len(used), "cloud_sizes": [len(cloud[v]) for v in used]})


# ---------------------------------------------------------------- nice instances

def make_nice(phi: CspInstance, cfg: PipelineConfig = PipelineConfig(), d: int | None = None) -> Stage:
    """Pad to d-regular, superimpose a d-regular expander of null constraints, add 2d null loops.

    The result is 4d-regular with at least half of every vertex's ports on
    self-loops.  The expander is resampled until the combined graph has a
    certified lambda at most ``cfg.nice_lambda`` (estimated, and flagged,
    above the exact-certification cap).
    """
    if phi.q != 2:
        raise PreconditionError("make_nice expects a binary instance")
    d = cfg.nice_degree if d is None else d
    n, W = phi.n, phi.W
    if n == 0:
        out = CspInstance(2, W, 0, ())
        return Stage("make_nice", phi, out, _identity, _identity, {"empty": True})
    cg = constraint_graph(phi)
    if not cg.regular:
        raise PreconditionError("input constraint graph is not regular")
    dp = cg.graph.d
    if dp > d:
        raise PreconditionError(f"input degree {dp} exceeds target {d}")
    base = list(phi.constraints)
    for v in range(n):
        base += [null_constraint((v,), W, tag="pad")] * (d - dp)
    loops = [null_constraint((v,), W, tag="selfloop") for v in range(n) for _ in range(2 * d)]
    rng = np.random.default_rng(cfg.seed + 104729)
    best = None
    for attempt in range(cfg.expander_budget):
        H = specgraph._sample(n, d, rng, loopless=(n * d) % 2 == 0 and n > 1) if n > 1 else specgraph.single_vertex(d)
        extra = _edges_as_constraints(H, 0, W, lambda a, b: Constraint((a, b), np.ones(W * W, np.uint8), tag="expander"))
        out = CspInstance(2, W, n, tuple(base + extra + loops))
        G = constraint_graph(out).graph
        est = specgraph.lambda_upper(G, cap=cfg.lambda_cap, seed=cfg.seed)
        if best is None or est.lambda_upper < best[0].lambda_upper:
            best = (est, out, H)
        if est.lambda_upper <= cfg.nice_lambda:
            break
    est, out, H = best
    if est.lambda_upper > cfg.nice_lambda:
        raise ConstructionError(f"no expander brought lambda to {cfg.nice_lambda}; best {float(est.lambda_upper)}")
    info = {"degree": 4 * d, "input_degree": dp, "lambda": est, "count_bound": 4 * d * n}
    return Stage("make_nice", phi, out, _identity, _identity, info)


def _identity(u):
    return np.asarray(u, dtype=np.int64)


def stage_unsat(stage: Stage, y) -> Fraction:
    if hasattr(stage.out, "unsat_fraction"):
        return stage.out.unsat_fraction(y)
    return unsat_fraction(stage.out, y)
