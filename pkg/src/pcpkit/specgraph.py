"""Regular multigraphs given by rotation maps, and their spectra.

A ``RotationGraph`` on ``n`` vertices with degree ``d`` stores, for every
endpoint ``(v, i)``, the endpoint ``(u, j)`` it is glued to.  The map is an
involution.  A fixed point ``(v, i) -> (v, i)`` is a self-loop that uses one
port and adds ``1/d`` to the diagonal of the random-walk matrix.

Conventions for the products:

* power ``G^k``: labels are length-k port sequences, lexicographic, so label
  ``(i1, ..., ik)`` has index ``i1*d^(k-1) + ... + ik``;
* tensor ``G x G'``: vertex ``(v, v')`` has index ``v*n' + v'``, label
  ``(i, i')`` has index ``i*d' + i'``;
* replacement ``G (r) H``: vertex ``(v, a)`` has index ``v*D + a``; labels
  ``0..d-1`` follow H inside the cloud of ``v``, labels ``d..2d-1`` are
  ``d`` parallel copies of the G-edge leaving ``v`` through port ``a``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy import sparse

from .errors import (
    ConstructionError,
    FormatError,
    NotFoundError,
    ParameterError,
    PreconditionError,
    ResourceError,
    ShapeError,
)

EXACT_CAP = 64
DEFAULT_BUDGET = 1 << 24


class RotationGraph:
    """d-regular multigraph as an involution on [n] x [d]."""

    __slots__ = ("n", "d", "nbr", "port")

    def __init__(self, nbr, port, check: bool = True):
        nbr = np.array(nbr, dtype=np.int64, copy=True)
        port = np.array(port, dtype=np.int64, copy=True)
        if nbr.ndim != 2 or nbr.shape != port.shape:
            raise ShapeError("rotation arrays must be n x d and of equal shape")
        n, d = nbr.shape
        if n < 1 or d < 1:
            raise ShapeError("a rotation graph needs n >= 1 and d >= 1")
        nbr.flags.writeable = False
        port.flags.writeable = False
        self.n, self.d, self.nbr, self.port = int(n), int(d), nbr, port
        if check:
            self.check()

    def check(self):
        n, d = self.n, self.d
        if self.nbr.min() < 0 or self.nbr.max() >= n or self.port.min() < 0 or self.port.max() >= d:
            raise ConstructionError("rotation map leaves [n] x [d]")
        back_v = self.nbr[self.nbr, self.port]
        back_i = self.port[self.nbr, self.port]
        rows = np.arange(n)[:, None]
        cols = np.arange(d)[None, :]
        if not (np.array_equal(back_v, np.broadcast_to(rows, (n, d)))
                and np.array_equal(back_i, np.broadcast_to(cols, (n, d)))):
            raise ConstructionError("rotation map is not an involution")

    def rot(self, v: int, i: int) -> tuple[int, int]:
        return int(self.nbr[v, i]), int(self.port[v, i])

    def __eq__(self, other):
        return (isinstance(other, RotationGraph) and self.n == other.n and self.d == other.d
                and np.array_equal(self.nbr, other.nbr) and np.array_equal(self.port, other.port))

    def __hash__(self):
        return hash((self.n, self.d, self.nbr.tobytes(), self.port.tobytes()))

    def __repr__(self):
        return f"RotationGraph(n={self.n}, d={self.d})"

    def counts(self) -> np.ndarray:
        """Integer multiplicity matrix: entry (v, u) counts ports at v leading to u."""
        c = np.zeros((self.n, self.n), dtype=np.int64)
        np.add.at(c, (np.repeat(np.arange(self.n), self.d), self.nbr.ravel()), 1)
        return c

    def sparse_walk(self) -> sparse.csr_matrix:
        rows = np.repeat(np.arange(self.n), self.d)
        data = np.full(rows.size, 1.0 / self.d)
        return sparse.csr_matrix((data, (rows, self.nbr.ravel())), shape=(self.n, self.n))

    def is_connected(self) -> bool:
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        frontier = np.array([0])
        while frontier.size:
            nxt = np.unique(self.nbr[frontier].ravel())
            nxt = nxt[~seen[nxt]]
            seen[nxt] = True
            frontier = nxt
        return bool(seen.all())

    def self_loop_ports(self) -> np.ndarray:
        """Per-vertex count of ports whose partner endpoint sits on the same vertex."""
        return (self.nbr == np.arange(self.n)[:, None]).sum(axis=1)


# ---------------------------------------------------------------- builders

def from_edges(n: int, d: int, edges: Iterable[tuple[int, int]]) -> RotationGraph:
    """Assign ports greedily; an edge (v, v) becomes a one-port fixed point."""
    nbr = -np.ones((n, d), dtype=np.int64)
    port = -np.ones((n, d), dtype=np.int64)
    nxt = [0] * n
    for v, u in edges:
        if not (0 <= v < n and 0 <= u < n):
            raise ConstructionError(f"edge ({v}, {u}) out of range")
        i = nxt[v]
        if v == u:
            if i >= d:
                raise ConstructionError(f"vertex {v} exceeds degree {d}")
            nbr[v, i], port[v, i] = v, i
            nxt[v] += 1
            continue
        j = nxt[u]
        if i >= d or j >= d:
            raise ConstructionError(f"edge ({v}, {u}) exceeds degree {d}")
        nbr[v, i], port[v, i] = u, j
        nbr[u, j], port[u, j] = v, i
        nxt[v] += 1
        nxt[u] += 1
    if any(k != d for k in nxt):
        raise ConstructionError("edge list does not give a regular graph")
    return RotationGraph(nbr, port)


def single_vertex(d: int) -> RotationGraph:
    return from_edges(1, d, [(0, 0)] * d)


def cycle(n: int) -> RotationGraph:
    if n == 1:
        return single_vertex(2)
    if n == 2:
        return from_edges(2, 2, [(0, 1), (0, 1)])
    return from_edges(n, 2, [(v, (v + 1) % n) for v in range(n)])


def complete(n: int) -> RotationGraph:
    """K_n as an (n-1)-regular graph: port i at v leads to the i-th other vertex."""
    if n < 2:
        raise ParameterError("complete graph needs n >= 2")
    return from_edges(n, n - 1, [(v, u) for v in range(n) for u in range(v + 1, n)])


def parallel_pair(D: int) -> RotationGraph:
    """Two vertices joined by D parallel edges."""
    return from_edges(2, D, [(0, 1)] * D)


# ---------------------------------------------------------------- matrices

@dataclass(frozen=True)
class RWMatrix:
    """Exact random-walk matrix, stored as integer multiplicities over d."""

    counts: np.ndarray
    d: int

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    def entry(self, i: int, j: int) -> Fraction:
        return Fraction(int(self.counts[i, j]), self.d)

    def to_fractions(self) -> list[list[Fraction]]:
        return [[Fraction(int(c), self.d) for c in row] for row in self.counts]

    def to_float(self) -> np.ndarray:
        return self.counts / self.d

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.counts, self.counts.T))

    def row_sums(self) -> list[Fraction]:
        return [Fraction(int(s), self.d) for s in self.counts.sum(axis=1)]

    def __eq__(self, other):
        if not isinstance(other, RWMatrix) or self.n != other.n:
            return False
        # compare c/d == c'/d' without division
        return bool(np.array_equal(self.counts.astype(object) * other.d,
                                   other.counts.astype(object) * self.d))


def rw_matrix(G: RotationGraph) -> RWMatrix:
    return RWMatrix(G.counts(), G.d)


# ---------------------------------------------------------------- products

def graph_power(G: RotationGraph, k: int, budget: int = DEFAULT_BUDGET) -> RotationGraph:
    if k < 1:
        raise ParameterError("power must be at least 1")
    size = G.n * G.d ** k
    if size > budget:
        raise ResourceError(f"G^{k} needs {size} endpoints, budget is {budget}")
    n, d = G.n, G.d
    D = d ** k
    labels = np.arange(D)
    digits = [(labels // d ** (k - 1 - s)) % d for s in range(k)]
    cur = np.broadcast_to(np.arange(n)[:, None], (n, D)).copy()
    back = []
    for s in range(k):
        step = np.broadcast_to(digits[s][None, :], (n, D))
        back.append(G.port[cur, step])
        cur = G.nbr[cur, step]
    # the returning walk reads the arrival ports in reverse order
    out_label = np.zeros((n, D), dtype=np.int64)
    for s in range(k):
        out_label = out_label * d + back[k - 1 - s]
    return RotationGraph(cur, out_label, check=False)


def tensor(G: RotationGraph, G2: RotationGraph) -> RotationGraph:
    n1, d1, n2, d2 = G.n, G.d, G2.n, G2.d
    v = np.arange(n1)[:, None, None, None]
    w = np.arange(n2)[None, :, None, None]
    i = np.arange(d1)[None, None, :, None]
    j = np.arange(d2)[None, None, None, :]
    shape = (n1, n2, d1, d2)
    u = np.broadcast_to(G.nbr[v, i], shape)
    p = np.broadcast_to(G.port[v, i], shape)
    u2 = np.broadcast_to(G2.nbr[w, j], shape)
    p2 = np.broadcast_to(G2.port[w, j], shape)
    nbr = (u * n2 + u2).reshape(n1 * n2, d1 * d2)
    port = (p * d2 + p2).reshape(n1 * n2, d1 * d2)
    return RotationGraph(nbr, port, check=False)


def replacement(G: RotationGraph, H: RotationGraph) -> RotationGraph:
    if H.n != G.d:
        raise ShapeError(f"replacement needs |V(H)| = deg(G), got {H.n} and {G.d}")
    n, D, d = G.n, G.d, H.d
    nbr = np.empty((n * D, 2 * d), dtype=np.int64)
    port = np.empty((n * D, 2 * d), dtype=np.int64)
    v = np.repeat(np.arange(n), D)
    a = np.tile(np.arange(D), n)
    nbr[:, :d] = v[:, None] * D + H.nbr[a]
    port[:, :d] = H.port[a]
    gu = G.nbr[v, a]
    gb = G.port[v, a]
    nbr[:, d:] = (gu * D + gb)[:, None]
    port[:, d:] = np.arange(d, 2 * d)[None, :]
    return RotationGraph(nbr, port, check=False)


# ---------------------------------------------------------------- spectra

@dataclass(frozen=True)
class SpectralEstimate:
    lambda_upper: Fraction
    method: str
    residual: Fraction
    certified: bool = field(default=False)

    def as_float(self) -> float:
        return float(self.lambda_upper)


def _is_psd(mat: np.ndarray) -> bool:
    """Exact PSD test of a symmetric integer matrix (fraction-free elimination).

    A zero pivot is allowed only when its whole remaining row vanishes; that
    row is then dropped, which leaves the other entries exact.
    """
    m = np.array(mat, dtype=object)
    prev = 1
    while m.shape[0]:
        p = m[0, 0]
        if p < 0:
            return False
        if p == 0:
            if any(x != 0 for x in m[0, 1:]):
                return False
            m = m[1:, 1:]
            continue
        col = m[1:, 0]
        m = (p * m[1:, 1:] - np.outer(col, m[0, 1:])) // prev
        prev = p
    return True


def _certify(counts: np.ndarray, d: int, theta: Fraction) -> bool:
    """Check -theta*I <= A - J <= theta*I exactly, where A = counts/d."""
    n = counts.shape[0]
    p, q = theta.numerator, theta.denominator
    c = counts.astype(object)
    ones = np.full((n, n), d * q, dtype=object)
    eye = np.eye(n, dtype=np.int64).astype(object) * (n * d * p)
    upper = eye - n * q * c + ones
    lower = eye + n * q * c - ones
    return _is_psd(upper) and _is_psd(lower)


def _exact_lambda(G: RotationGraph) -> SpectralEstimate:
    counts = G.counts()
    n, d = G.n, G.d
    m = counts / d - 1.0 / n
    mu = float(np.max(np.abs(np.linalg.eigvalsh(m))))
    mu_q = Fraction(mu)
    candidates = []
    simple = mu_q.limit_denominator(4096 * n * d)
    if abs(float(simple) - mu) < 1e-10:
        candidates.append(simple)
    margin = 1e-10
    for _ in range(8):
        up = Fraction(mu + margin).limit_denominator(1 << 48)
        if up > mu_q:
            candidates.append(up)
        margin *= 100
    candidates.append(Fraction(1))
    for theta in candidates:
        if theta > 1:
            theta = Fraction(1)
        if _certify(counts, d, theta):
            return SpectralEstimate(theta, "exact-small-n", abs(theta - mu_q), True)
    raise ConstructionError("spectral certification failed even at theta = 1")


def _power_lambda(G: RotationGraph, seed: int, iters: int, tol: float) -> SpectralEstimate:
    A = G.sparse_walk()
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(G.n)
    x -= x.mean()
    x /= np.linalg.norm(x)
    est, resid = 0.0, np.inf
    for _ in range(iters):
        y = A @ (A @ x)
        y -= y.mean()
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return SpectralEstimate(Fraction(0), "power-iteration", Fraction(0))
        x = y / nrm
        ax = A @ x
        ax -= ax.mean()
        est = float(np.linalg.norm(ax))
        aax = A @ ax
        aax -= aax.mean()
        resid = float(np.linalg.norm(aax - est * est * x))
        if resid < tol:
            break
    return SpectralEstimate(Fraction(est), "power-iteration", Fraction(resid))


def _rayleigh_lambda(G: RotationGraph, seed: int, samples: int) -> SpectralEstimate:
    A = G.sparse_walk()
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        x = rng.standard_normal(G.n)
        x -= x.mean()
        nx = np.linalg.norm(x)
        if nx == 0:
            continue
        ax = A @ x
        ax -= ax.mean()
        best = max(best, float(np.linalg.norm(ax) / nx))
    return SpectralEstimate(Fraction(best), "rayleigh-sample", Fraction(0))


def lambda_upper(G: RotationGraph, mode: str = "auto", L: int | None = None, *,
                 cap: int = EXACT_CAP, seed: int = 0, iters: int = 5000,
                 tol: float = 1e-10, samples: int = 64) -> SpectralEstimate:
    """Largest |eigenvalue| of the walk matrix on mean-zero vectors.

    ``exact`` certifies the returned rational bound by an exact PSD check and
    is limited to ``n <= cap``; ``power`` and ``rayleigh`` are float estimates
    marked as not certified.  ``L`` is accepted for interface symmetry; the
    exact mode never needs square roots.
    """
    if G.n == 1:
        return SpectralEstimate(Fraction(0), "exact-small-n", Fraction(0), True)
    if mode == "auto":
        mode = "exact" if G.n <= cap else "power"
    if mode == "exact":
        if G.n > cap:
            raise ResourceError(f"exact spectral bound limited to n <= {cap}, got {G.n}")
        return _exact_lambda(G)
    if mode == "power":
        return _power_lambda(G, seed, iters, tol)
    if mode == "rayleigh":
        return _rayleigh_lambda(G, seed, samples)
    raise ParameterError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------- cuts and walks

def _check_set(G: RotationGraph, S) -> np.ndarray:
    mask = np.zeros(G.n, dtype=bool)
    for v in S:
        if not 0 <= v < G.n:
            raise IndexError(f"vertex {v} out of range")
        mask[v] = True
    return mask


def edge_cut(G: RotationGraph, S) -> int:
    mask = _check_set(G, S)
    return int((mask[:, None] & ~mask[G.nbr]).sum())


def collision_prob(G: RotationGraph, l: int, S) -> Fraction:
    """Pr over a uniform edge of G^l that both endpoints lie in S, exactly."""
    mask = _check_set(G, S)
    k = int(mask.sum())
    if 2 * k > G.n:
        raise PreconditionError(f"|S| = {k} exceeds n/2 = {G.n / 2}")
    if l < 1:
        raise ParameterError("walk length must be positive")
    x = mask.astype(object)
    for _ in range(l):
        x = np.array([sum(x[u] for u in row) for row in G.nbr.tolist()], dtype=object)
    hits = sum(int(x[v]) for v in np.flatnonzero(mask))
    return Fraction(hits, G.n * G.d ** l)


# ---------------------------------------------------------------- search

def random_regular(n: int, d: int, rng: np.random.Generator, loopless: bool = False,
                   tries: int = 1000) -> RotationGraph:
    """Configuration-model sample; pairs landing on one vertex become a two-port loop."""
    if (n * d) % 2:
        raise ParameterError("n*d must be even for a pairing")
    for _ in range(tries):
        slots = rng.permutation(n * d)
        a, b = slots[0::2], slots[1::2]
        if loopless and np.any(a // d == b // d):
            continue
        nbr = np.empty(n * d, dtype=np.int64)
        port = np.empty(n * d, dtype=np.int64)
        nbr[a], port[a] = b // d, b % d
        nbr[b], port[b] = a // d, a % d
        return RotationGraph(nbr.reshape(n, d), port.reshape(n, d))
    raise NotFoundError(f"no loopless pairing for n={n}, d={d}")


def add_loops(G: RotationGraph, extra: int) -> RotationGraph:
    """Append ``extra`` fixed-point self-loops to every vertex."""
    n, d = G.n, G.d
    nbr = np.hstack([G.nbr, np.repeat(np.arange(n)[:, None], extra, axis=1)])
    port = np.hstack([G.port, np.broadcast_to(np.arange(d, d + extra), (n, extra))])
    return RotationGraph(nbr, port, check=False)


def _sample(n: int, d: int, rng: np.random.Generator, loopless: bool) -> RotationGraph:
    if n == 1:
        return single_vertex(d)
    if (n * d) % 2 == 0:
        return random_regular(n, d, rng, loopless=loopless)
    # odd endpoint count: sample (d-1)-regular and give every vertex one loop
    return add_loops(random_regular(n, d - 1, rng, loopless=loopless), 1)


def find_base_expander(n: int, d: int, target, seed: int = 0, budget: int = 200,
                       loopless: bool = False, cap: int = EXACT_CAP) -> RotationGraph:
    """Seeded rejection sampling for a d-regular graph with certified lambda <= target."""
    target = Fraction(target)
    if n > cap:
        raise ParameterError(f"certification limited to n <= {cap}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(budget):
        G = _sample(n, d, rng, loopless)
        if not G.is_connected():
            continue
        est = lambda_upper(G, "exact", cap=cap)
        if best is None or est.lambda_upper < best:
            best = est.lambda_upper
        if est.lambda_upper <= target:
            return G
        if est.lambda_upper >= 1 and not loopless and d >= 2 and (n * (d - 1)) % 2 == 0:
            # bipartite sample: trade one port per vertex for a self-loop
            G = add_loops(random_regular(n, d - 1, rng), 1)
            if not G.is_connected():
                continue
            est = lambda_upper(G, "exact", cap=cap)
            best = min(best, est.lambda_upper)
            if est.lambda_upper <= target:
                return G
    raise NotFoundError(f"no ({n},{d}) graph with lambda <= {target}; best {best}", best=best)


# ---------------------------------------------------------------- family

@dataclass
class FamilySpec:
    H: RotationGraph
    G1: RotationGraph
    G2: RotationGraph
    b: int = 1
    target_lambda: Fraction = Fraction(1, 2)
    cap: int = EXACT_CAP
    budget: int = DEFAULT_BUDGET
    cache: dict = field(default_factory=dict, repr=False)


def family_size(k: int, n1: int, n2: int, h: int) -> int:
    if k == 1:
        return n1
    if k == 2:
        return n2
    return family_size((k - 1) // 2, n1, n2, h) * family_size(k - 1 - (k - 1) // 2, n1, n2, h) * h


def build_family(k: int, spec: FamilySpec) -> RotationGraph:
    """G_k = ((G_floor((k-1)/2) x G_ceil((k-1)/2)) (r) H)^b, memoised in the FamilySpec cache."""
    if k < 1:
        raise ParameterError("family index starts at 1")
    if k in spec.cache:
        return spec.cache[k]
    if k == 1:
        G = spec.G1
    elif k == 2:
        G = spec.G2
    else:
        lo = build_family((k - 1) // 2, spec)
        hi = build_family(k - 1 - (k - 1) // 2, spec)
        if spec.H.n != lo.d * hi.d:
            raise ShapeError(f"|V(H)| = {spec.H.n} but the tensor has degree {lo.d * hi.d}")
        G = graph_power(replacement(tensor(lo, hi), spec.H), spec.b, spec.budget)
    spec.cache[k] = G
    return G


# ---------------------------------------------------------------- file format

def dumps_graph(G: RotationGraph) -> str:
    lines = [f"rotgraph v1 {G.n} {G.d}"]
    for v in range(G.n):
        for i in range(G.d):
            lines.append(f"{v} {i} {G.nbr[v, i]} {G.port[v, i]}")
    return "\n".join(lines) + "\n"


def loads_graph(text: str) -> RotationGraph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows or rows[0][:2] != ["rotgraph", "v1"] or len(rows[0]) != 4:
        raise FormatError("missing 'rotgraph v1 n d' header")
    n, d = int(rows[0][2]), int(rows[0][3])
    if len(rows) - 1 != n * d:
        raise FormatError(f"expected {n * d} rotation lines, found {len(rows) - 1}")
    nbr = -np.ones((n, d), dtype=np.int64)
    port = -np.ones((n, d), dtype=np.int64)
    for row in rows[1:]:
        if len(row) != 4:
            raise FormatError(f"bad rotation line: {' '.join(row)}")
        v, i, u, j = map(int, row)
        if not (0 <= v < n and 0 <= i < d):
            raise FormatError(f"endpoint ({v}, {i}) out of range")
        if nbr[v, i] != -1:
            raise FormatError(f"endpoint ({v}, {i}) listed twice")
        nbr[v, i], port[v, i] = u, j
    if (nbr < 0).any():
        raise FormatError("rotation map is not total")
    try:
        return RotationGraph(nbr, port)
    except ConstructionError as exc:
        raise FormatError(str(exc)) from exc


def all_subsets(n: int, max_size: int):
    for k in range(max_size + 1):
        yield from itertools.combinations(range(n), k)
