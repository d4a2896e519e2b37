"""Graph powering of a nice binary instance.

Each new variable y_i assigns a value to every old variable within distance
R = t + sqrt(t) of i.  Its symbol is stored as a vector in canonical BFS
order: breadth-first from i, neighbours visited in port order, each vertex
recorded on first discovery.  There is one constraint per walk
(i_1, ..., i_{2t+2}): a start vertex and 2t+1 ports.  It rejects iff for some
step j the endpoint views y_{i_1}(u_{i_j}) and y_{i_{2t+2}}(u_{i_{j+1}}) are
both defined and violate the old constraint behind that step's port.  A
one-variable constraint on a loop step is judged on the first view.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import numpy as np

from ..csp import Constraint, CspInstance, constraint_graph
from ..errors import PreconditionError, ResourceError, ShapeError
from .stages import Stage


def bfs_order(nbr: np.ndarray, src: int, radius: int) -> list[int]:
    order, dist = [src], {src: 0}
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        if dist[v] == radius:
            continue
        for w in nbr[v]:
            w = int(w)
            if w not in dist:
                dist[w] = dist[v] + 1
                order.append(w)
    return order


@dataclass(frozen=True, eq=False)
class PoweredInstance:
    psi: CspInstance
    t: int
    radius: int
    balls: tuple          # BFS order per vertex
    pos: np.ndarray       # pos[i, v] = index of v in ball i, or -1
    walks: np.ndarray     # (m, 2t+2) vertices
    step_cons: np.ndarray  # (m, 2t+1) old constraint behind each step
    step_fwd: np.ndarray   # (m, 2t+1) True if the step walks the constraint's scope in order
    tables: np.ndarray     # (old m, W*W) binary view of every old constraint

    @property
    def n(self) -> int:
        return self.psi.n

    @property
    def m(self) -> int:
        return self.walks.shape[0]

    @property
    def W_inner(self) -> int:
        return self.psi.W

    @property
    def max_ball(self) -> int:
        return max(len(b) for b in self.balls)

    @property
    def W(self) -> int:
        return self.psi.W ** self.max_ball

    def dense(self, Y: np.ndarray) -> np.ndarray:
        """(n, maxball) packed symbols -> (n, n) views, -1 outside the ball."""
        Y = np.asarray(Y, dtype=np.int64)
        if Y.shape != (self.n, self.max_ball):
            raise ShapeError(f"expected shape {(self.n, self.max_ball)}, got {Y.shape}")
        if Y.size and (Y.min() < 0 or Y.max() >= self.W_inner):
            raise ShapeError("symbol entries must lie in the inner alphabet")
        D = np.full((self.n, self.n), -1, dtype=np.int64)
        for i, ball in enumerate(self.balls):
            D[i, ball] = Y[i, :len(ball)]
        return D

    def induced(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.int64)
        Y = np.zeros((self.n, self.max_ball), dtype=np.int64)
        for i, ball in enumerate(self.balls):
            Y[i, :len(ball)] = u[ball]
        return Y

    def rejected(self, Y, chunk: int = 1 << 18) -> np.ndarray:
        D = self.dense(Y)
        W = self.W_inner
        out = np.zeros(self.m, dtype=bool)
        for lo in range(0, self.m, chunk):
            V = self.walks[lo:lo + chunk]
            first, last = V[:, 0], V[:, -1]
            rej = np.zeros(V.shape[0], dtype=bool)
            for j in range(2 * self.t + 1):
                a = D[first, V[:, j]]
                b = D[last, V[:, j + 1]]
                defined = (a >= 0) & (b >= 0)
                fwd = self.step_fwd[lo:lo + chunk, j]
                idx = np.where(fwd, a * W + b, b * W + a)
                ok = self.tables[self.step_cons[lo:lo + chunk, j], np.where(defined, idx, 0)]
                rej |= defined & (ok == 0)
            out[lo:lo + chunk] = rej
        return out

    def unsat_fraction(self, Y) -> Fraction:
        if self.m == 0:
            return Fraction(0)
        return Fraction(int(self.rejected(Y).sum()), self.m)

    def symbol(self, row) -> int:
        """Integer code of a packed symbol (first BFS entry most significant)."""
        out = 0
        for a in row:
            out = out * self.W_inner + int(a)
        return out

    def as_csp(self, budget: int = 1 << 16) -> CspInstance:
        """The powered instance as predicate constraints on integer symbols."""
        if self.m > budget:
            raise ResourceError(f"{self.m} walk constraints exceed the budget {budget}")
        W, mb = self.W_inner, self.max_ball

        def unpack(code):
            return [(code // W ** (mb - 1 - k)) % W for k in range(mb)]

        cons = []
        for p in range(self.m):
            i1, i2 = int(self.walks[p, 0]), int(self.walks[p, -1])

            def pred(vals, p=p, i1=i1, i2=i2):
                Y = np.zeros((self.n, mb), dtype=np.int64)
                if i1 == i2:
                    Y[i1] = unpack(vals[0])
                else:
                    Y[i1], Y[i2] = unpack(vals[0]), unpack(vals[1])
                return not self._rejects_walk(p, Y)

            scope = (i1,) if i1 == i2 else (i1, i2)
            cons.append(Constraint(scope, pred=pred, tag="walk"))
        return CspInstance(2, self.W, self.n, tuple(cons))

    def _rejects_walk(self, p: int, Y) -> bool:
        W = self.W_inner
        V = self.walks[p]
        pos = self.pos
        for j in range(2 * self.t + 1):
            ka, kb = pos[V[0], V[j]], pos[V[-1], V[j + 1]]
            if ka < 0 or kb < 0:
                continue
            a, b = Y[V[0], ka], Y[V[-1], kb]
            idx = a * W + b if self.step_fwd[p, j] else b * W + a
            if not self.tables[self.step_cons[p, j], idx]:
                return True
        return False


def _binary_tables(psi: CspInstance) -> np.ndarray:
    W = psi.W
    out = np.zeros((psi.m, W * W), dtype=np.uint8)
    for k, c in enumerate(psi.constraints):
        if c.table is None:
            raise PreconditionError("powering needs tabulated constraints")
        if len(c.scope) == 1:
            out[k] = np.repeat(c.table, W)  # judged on the first value
        else:
            out[k] = c.table
    return out


def power_t(psi: CspInstance, t: int, budget: int = 1 << 21) -> Stage:
    r = isqrt(t)
    if t < 1 or r * r != t:
        raise PreconditionError(f"t must be a perfect square >= 1, got {t}")
    cg = constraint_graph(psi)
    if not cg.regular:
        raise PreconditionError("powering needs a regular constraint graph")
    G, pc = cg.graph, cg.port_constraint
    n, D = G.n, G.d
    steps = 2 * t + 1
    m = n * D ** steps
    if m > budget:
        raise ResourceError(f"{m} walk constraints exceed the budget {budget}")
    radius = t + r
    balls = tuple(bfs_order(G.nbr, i, radius) for i in range(n))
    pos = np.full((n, n), -1, dtype=np.int64)
    for i, ball in enumerate(balls):
        pos[i, ball] = np.arange(len(ball))
    idx = np.arange(m, dtype=np.int64)
    ports = np.empty((m, steps), dtype=np.int64)
    rest = idx.copy()
    for j in range(steps - 1, -1, -1):
        ports[:, j] = rest % D
        rest //= D
    walks = np.empty((m, steps + 1), dtype=np.int64)
    walks[:, 0] = rest
    cons = np.empty((m, steps), dtype=np.int64)
    fwd = np.empty((m, steps), dtype=bool)
    first = np.array([c.scope[0] for c in psi.constraints], dtype=np.int64)
    for j in range(steps):
        v = walks[:, j]
        cons[:, j] = pc[v, ports[:, j]]
        walks[:, j + 1] = G.nbr[v, ports[:, j]]
        fwd[:, j] = first[cons[:, j]] == v
    pw = PoweredInstance(psi, t, radius, balls, pos, walks, cons, fwd, _binary_tables(psi))

    def decode(Y):
        return plurality_assignment(Y, pw)

    info = {"walk_constraints": m, "max_ball": pw.max_ball, "degree": D,
            "count_bound": n * D ** (5 * t), "alphabet_exponent_bound": D ** (5 * t)}
    return Stage("power_t", psi, pw, pw.induced, decode, info)


def plurality_assignment(Y, pw: PoweredInstance) -> np.ndarray:
    """u_v = most frequent view of v among endpoints of t-step walks from v.

    Walks are counted with multiplicity (exact distribution); ties go to the
    smallest value.
    """
    D = pw.dense(Y)
    G = constraint_graph(pw.psi).graph
    W = pw.W_inner
    ends = np.arange(pw.n)[:, None]
    for _ in range(pw.t):
        ends = G.nbr[ends].reshape(pw.n, -1)
    views = D[ends, np.arange(pw.n)[:, None]]
    u = np.empty(pw.n, dtype=np.int64)
    for v in range(pw.n):
        counts = np.bincount(views[v][views[v] >= 0], minlength=W)
        u[v] = int(np.argmax(counts))
    return u
