"""Walsh-Hadamard codes, linearity testing and the exponential-size PCP verifier.

Bit vectors are ints: coordinate i (1-based) of z is bit i-1 of the integer,
so tables are indexed in the natural order of z.  The tensor ``u (x) u``
places ``u_i u_j`` at coordinate ``i*n1 + j`` (0-based), i.e. lexicographic
pairs.

Acceptance probabilities are exact.  The verifier's randomness space is far
too large to walk string by string once the quadratic table has more than a
few hundred entries, so ``round_accept_count`` regroups the sum: the test on
g is independent of the rest, and the two self-corrected reads of g share
``r6`` only through correlations of ``(-1)^g``, which one fast
Walsh-Hadamard transform supplies for every shift at once.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from .cnf import Cnf
from .errors import FormatError, PreconditionError, ResourceError, ShapeError

BLR_MAX_K = 14
ENUM_MAX_TABLE_BITS = 26


def bits_to_int(bits: Sequence[int]) -> int:
    return sum((int(b) & 1) << i for i, b in enumerate(bits))


def int_to_bits(x: int, k: int) -> tuple:
    return tuple((x >> i) & 1 for i in range(k))


def parity(a: np.ndarray) -> np.ndarray:
    """Bitwise parity of nonnegative int64 entries."""
    a = np.asarray(a, dtype=np.int64).copy()
    out = np.zeros(a.shape, dtype=np.int64)
    while np.any(a):
        out ^= a & 1
        a >>= 1
    return out


@lru_cache(maxsize=None)
def _sylvester(k: int) -> np.ndarray:
    H = np.ones((1, 1))
    for _ in range(k):
        H = np.block([[H, H], [H, -H]])
    H.flags.writeable = False
    return H


def fwht(v: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform over the last axis (length 2^k)."""
    h = np.array(v, dtype=np.int64, copy=True)
    n = h.shape[-1]
    k = n.bit_length() - 1
    if k >= 6 and h.size and int(np.abs(h).max()) * n < 1 << 52:
        # H_n is a Kronecker product of small Sylvester blocks, one per 4-bit digit
        # of the index; every partial sum stays below 2^53, so float64 is exact
        digits = [4] * (k // 4) + ([k % 4] if k % 4 else [])
        lead = h.ndim - 1
        X = h.reshape(h.shape[:-1] + tuple(1 << d for d in digits)).astype(np.float64)
        for ax, d in enumerate(digits):
            X = np.moveaxis(np.tensordot(_sylvester(d), X, axes=([1], [lead + ax])), 0, lead + ax)
        return np.rint(X).astype(np.int64).reshape(h.shape)
    step = 1
    while step < n:
        h = h.reshape(h.shape[:-1] + (n // (2 * step), 2, step))
        a = h[..., 0, :].copy()
        b = h[..., 1, :]
        h[..., 0, :] = a + b
        h[..., 1, :] = a - b
        h = h.reshape(h.shape[:-3] + (n,))
        step *= 2
    return h


@dataclass(frozen=True, eq=False)
class BoolFn:
    k: int
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.uint8).copy()
        if t.shape != (1 << self.k,):
            raise ShapeError(f"table must have 2^{self.k} entries, got {t.shape}")
        if t.size and t.max() > 1:
            raise ShapeError("table entries must be bits")
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    def __call__(self, x: int) -> int:
        return int(self.table[x])

    def __eq__(self, other):
        return isinstance(other, BoolFn) and self.k == other.k and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.k, self.table.tobytes()))

    def flip(self, *positions: int) -> BoolFn:
        t = self.table.copy()
        for p in positions:
            t[p] ^= 1
        return BoolFn(self.k, t)


def wh_table(u: int, k: int) -> np.ndarray:
    return parity(np.arange(1 << k, dtype=np.int64) & u).astype(np.uint8)


def wh_encode(u) -> BoolFn:
    """Truth table of z -> <u, z> mod 2; ``u`` is a bit sequence."""
    u = tuple(u)
    return BoolFn(len(u), wh_table(bits_to_int(u), len(u)))


def blr_pass_count(f: BoolFn) -> int:
    """Number of pairs (x, y) with f(x+y) = f(x) + f(y), counted directly."""
    if f.k > BLR_MAX_K:
        raise ResourceError(f"exhaustive BLR limited to k <= {BLR_MAX_K}")
    N = 1 << f.k
    t = f.table.astype(np.int64)
    ys = np.arange(N)
    total = 0
    chunk = max(1, (1 << 22) // N)
    for x0 in range(0, N, chunk):
        xs = np.arange(x0, min(N, x0 + chunk))[:, None]
        total += int(np.count_nonzero(t[xs ^ ys] == (t[xs] ^ t[ys])))
    return total


def blr_pass_rate(f: BoolFn) -> Fraction:
    return Fraction(blr_pass_count(f), 1 << (2 * f.k))


def blr_pass_counts_batch(tables: np.ndarray) -> np.ndarray:
    """Pass counts for many tables at once (rows of ``tables``)."""
    tables = np.asarray(tables, dtype=np.uint8)
    N = tables.shape[1]
    xs, ys = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    xs, ys = xs.ravel(), ys.ravel()
    ok = tables[:, xs ^ ys] == (tables[:, xs] ^ tables[:, ys])
    return ok.sum(axis=1)


def linear_agreements(f: BoolFn) -> np.ndarray:
    """agreement[u] = #{x : f(x) = <u, x>} for every u."""
    signs = 1 - 2 * f.table.astype(np.int64)
    return ((1 << f.k) + fwht(signs)) // 2


def nearest_linear(f: BoolFn) -> tuple[tuple, Fraction]:
    """Best-agreeing linear function; ties go to the lexicographically least u."""
    if f.k > 20:
        raise ResourceError("nearest_linear limited to k <= 20")
    agree = linear_agreements(f)
    best = agree.max()
    winners = [int(u) for u in np.flatnonzero(agree == best)]
    u = min(winners, key=lambda w: int_to_bits(w, f.k))
    return int_to_bits(u, f.k), Fraction(int(best), 1 << f.k)


def majority_correct(f: BoolFn) -> BoolFn:
    """g(x) = 1 iff f(y) + f(x+y) = 1 for at least half of all y."""
    N = 1 << f.k
    t = f.table.astype(np.int64)
    ys = np.arange(N)
    ones = np.array([int(np.count_nonzero(t[ys] ^ t[x ^ ys])) for x in range(N)])
    return BoolFn(f.k, (2 * ones >= N).astype(np.uint8))


def self_correct(f: BoolFn, x: int, r: int) -> int:
    N = 1 << f.k
    if not (0 <= x < N and 0 <= r < N):
        raise ShapeError("x and r must be k-bit values")
    return int(f.table[x ^ r] ^ f.table[r])


def decode_rate(f: BoolFn, target: int, x: int) -> Fraction:
    """Pr_r[f(x+r) + f(r) = target]."""
    N = 1 << f.k
    r = np.arange(N)
    hits = np.count_nonzero((f.table[x ^ r] ^ f.table[r]) == target)
    return Fraction(int(hits), N)


# ---------------------------------------------------------------- quadratic systems

@dataclass(frozen=True, eq=False)
class QuadSystem:
    n1: int
    A: np.ndarray  # m x n1^2 bits
    b: np.ndarray  # m bits

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.uint8).reshape(-1, self.n1 * self.n1).copy()
        b = np.asarray(self.b, dtype=np.uint8).ravel().copy()
        if A.shape[0] != b.shape[0]:
            raise ShapeError("A and b disagree on the number of equations")
        A.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def row_index(self, i: int) -> int:
        """Equation i as an n1^2-bit WH index."""
        return bits_to_int(self.A[i])

    def lhs(self, u: int) -> np.ndarray:
        uu = tensor_bits(u, self.n1)
        return (self.A.astype(np.int64) @ uu) % 2

    def is_solution(self, u: int) -> bool:
        return bool(np.array_equal(self.lhs(u), self.b))

    def solutions(self) -> list[int]:
        if self.n1 > 22:
            raise ResourceError("solution search limited to n1 <= 22")
        return [u for u in range(1 << self.n1) if self.is_solution(u)]

    def __eq__(self, other):
        return (isinstance(other, QuadSystem) and self.n1 == other.n1
                and np.array_equal(self.A, other.A) and np.array_equal(self.b, other.b))

    __hash__ = object.__hash__


def tensor_bits(u: int, n1: int) -> np.ndarray:
    ub = np.array(int_to_bits(u, n1), dtype=np.int64)
    return np.outer(ub, ub).ravel()


def tensor_index(r1: int, r2: int, n1: int) -> int:
    """WH index of r1 (x) r2: bit i*n1 + j is r1_i r2_j."""
    out = 0
    for i in range(n1):
        if (r1 >> i) & 1:
            out |= r2 << (i * n1)
    return out


def _tensor_index_array(r1: np.ndarray, r2: np.ndarray, n1: int) -> np.ndarray:
    out = np.zeros(np.broadcast(r1, r2).shape, dtype=np.int64)
    for i in range(n1):
        out |= ((r1 >> i) & 1) * (r2 << (i * n1))
    return out


@dataclass(frozen=True)
class QuadLayout:
    """Where the formula's variables live inside u."""

    n_inputs: int
    one: int | None     # index of the pinned constant, if any
    aux: tuple          # (clause index, position) for every auxiliary variable


def cnf_to_quadsys(cnf: Cnf, pin_one: bool = False) -> tuple[QuadSystem, QuadLayout]:
    """Quadratic system over GF(2), solvable iff the formula is satisfiable.

    Write F(l) for the indicator that literal l is false: 1 - x for x, x for
    not-x.  A clause l1 v l2 v l3 gives F(l1) y = 0 and y + F(l2) F(l3) = 0 with
    a fresh y; shorter clauses give F(l1) F(l2) = 0 or F(l1) = 0 directly.
    Linear terms use u_i u_i = u_i, constants move into b.  Inputs come first.
    """
    if cnf.width > 3:
        raise ShapeError("clauses must have at most 3 literals; split them first")
    nv = cnf.nvars
    one = nv if pin_one else None
    nxt = nv + (1 if pin_one else 0)
    aux = []
    polys = []  # each: dict monomial(frozenset) -> 1, with frozenset() the constant

    def false_ind(lit):
        v = abs(lit) - 1
        return {frozenset(): 1, frozenset([v]): 1} if lit > 0 else {frozenset([v]): 1}

    def mul(p, q):
        out = {}
        for a in p:
            for b in q:
                mono = a | b
                out[mono] = out.get(mono, 0) ^ 1
        return {k: 1 for k, v in out.items() if v}

    def add(p, q):
        out = dict(p)
        for k in q:
            out[k] = out.get(k, 0) ^ 1
        return {k: 1 for k, v in out.items() if v}

    marker = False
    for ci, c in enumerate(cnf.clauses):
        if len(c) == 0:
            marker = True
        elif len(c) == 1:
            polys.append(false_ind(c[0]))
        elif len(c) == 2:
            polys.append(mul(false_ind(c[0]), false_ind(c[1])))
        else:
            y = nxt
            nxt += 1
            aux.append((ci, y))
            ypoly = {frozenset([y]): 1}
            polys.append(mul(false_ind(c[0]), ypoly))
            polys.append(add(ypoly, mul(false_ind(c[1]), false_ind(c[2]))))
    n1 = max(nxt, 1)
    if pin_one:
        polys.append({frozenset([one]): 1, frozenset(): 1})  # u_one = 1
    rows, rhs = [], []
    for p in polys:
        row = np.zeros(n1 * n1, dtype=np.uint8)
        const = 0
        for mono in p:
            if not mono:
                const ^= 1
                continue
            idx = sorted(mono)
            i, j = (idx[0], idx[0]) if len(idx) == 1 else idx
            row[i * n1 + j] ^= 1
        rows.append(row)
        rhs.append(const)  # p = 0  <=>  sum of monomials = const
    if marker:
        rows.append(np.zeros(n1 * n1, dtype=np.uint8))
        rhs.append(1)
    A = np.array(rows, dtype=np.uint8).reshape(-1, n1 * n1)
    return QuadSystem(n1, A, np.array(rhs, dtype=np.uint8)), QuadLayout(nv, one, tuple(aux))


def extend_assignment(cnf: Cnf, layout: QuadLayout, x: Sequence[int]) -> int:
    """Honest u for a formula assignment x (x[i] is variable i+1)."""
    u = bits_to_int(x)
    if layout.one is not None:
        u |= 1 << layout.one
    for ci, pos in layout.aux:
        l2, l3 = cnf.clauses[ci][1], cnf.clauses[ci][2]
        f2 = (1 - x[abs(l2) - 1]) if l2 > 0 else x[abs(l2) - 1]
        f3 = (1 - x[abs(l3) - 1]) if l3 > 0 else x[abs(l3) - 1]
        if f2 and f3:
            u |= 1 << pos
    return u


# ---------------------------------------------------------------- proofs and verifier

@dataclass(frozen=True, eq=False)
class ExpPcpProof:
    n1: int
    f_table: np.ndarray
    g_table: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f_table, dtype=np.uint8).copy()
        g = np.asarray(self.g_table, dtype=np.uint8).copy()
        if f.shape != (1 << self.n1,) or g.shape != (1 << (self.n1 * self.n1),):
            raise ShapeError("proof tables have the wrong sizes")
        f.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "f_table", f)
        object.__setattr__(self, "g_table", g)

    @property
    def nbits(self) -> int:
        return self.f_table.size + self.g_table.size

    def flip(self, *positions: int) -> ExpPcpProof:
        f, g = self.f_table.copy(), self.g_table.copy()
        for p in positions:
            if p < f.size:
                f[p] ^= 1
            else:
                g[p - f.size] ^= 1
        return ExpPcpProof(self.n1, f, g)

    def __eq__(self, other):
        return (isinstance(other, ExpPcpProof) and self.n1 == other.n1
                and np.array_equal(self.f_table, other.f_table) and np.array_equal(self.g_table, other.g_table))

    def __hash__(self):
        return hash((self.n1, self.f_table.tobytes(), self.g_table.tobytes()))


def _check_table_size(n1: int):
    if n1 * n1 > ENUM_MAX_TABLE_BITS:
        raise ResourceError(f"tables of 2^{n1 * n1} bits exceed the budget")


def honest_proof(u: int, n1: int) -> ExpPcpProof:
    _check_table_size(n1)
    uu = bits_to_int(tensor_bits(u, n1))
    return ExpPcpProof(n1, wh_table(u, n1), wh_table(uu, n1 * n1))


def exp_pcp_prove(sys: QuadSystem, u: int) -> ExpPcpProof:
    if not sys.is_solution(u):
        raise PreconditionError("u does not solve the system")
    return honest_proof(u, sys.n1)


@dataclass(frozen=True)
class RoundRandomness:
    r1: int
    r2: int
    r3: int
    r4: int
    r5: int
    r6: int
    r7: int

    @classmethod
    def draw(cls, rng: np.random.Generator, n1: int, m: int) -> RoundRandomness:
        def bits(k):
            return int(rng.integers(0, 1 << k)) if k <= 62 else bits_to_int(rng.integers(0, 2, size=k))
        return cls(bits(n1), bits(n1), bits(n1), bits(n1 * n1), bits(n1 * n1), bits(n1 * n1), bits(m))


def combine_rows(sys: QuadSystem, r7: int) -> tuple[int, int]:
    """z = r7^T A as a WH index, and the matching sum of b."""
    z, c = 0, 0
    for i in range(sys.m):
        if (r7 >> i) & 1:
            z ^= sys.row_index(i)
            c ^= int(sys.b[i])
    return z, c


def exp_pcp_verify_round(sys: QuadSystem, proof: ExpPcpProof, w: RoundRandomness) -> bool:
    n1 = sys.n1
    if proof.n1 != n1:
        raise ShapeError("proof and system disagree on n1")
    f, g = proof.f_table, proof.g_table
    if f[w.r1 ^ w.r2] != f[w.r1] ^ f[w.r2]:
        return False
    if g[w.r4 ^ w.r5] != g[w.r4] ^ g[w.r5]:
        return False
    f1 = f[w.r1 ^ w.r3] ^ f[w.r3]
    f2 = f[w.r2 ^ w.r3] ^ f[w.r3]
    a = tensor_index(w.r1, w.r2, n1)
    if g[a ^ w.r6] ^ g[w.r6] != f1 & f2:
        return False
    z, c = combine_rows(sys, w.r7)
    return bool(g[z ^ w.r6] ^ g[w.r6] == c)


def exp_pcp_verify(sys: QuadSystem, proof: ExpPcpProof, rounds: Sequence[RoundRandomness]) -> bool:
    return all(exp_pcp_verify_round(sys, proof, w) for w in rounds)


def randomness_bits(n1: int, m: int) -> int:
    return 3 * n1 + 3 * n1 * n1 + m


def _autocorrelation(g: np.ndarray) -> np.ndarray:
    """AC[s] = sum_x (-1)^(g(x) + g(x+s)), exactly."""
    signs = 1 - 2 * g.astype(np.int64)
    spec = fwht(signs)
    return fwht(spec * spec) // g.size


def round_accept_count(sys: QuadSystem, proof: ExpPcpProof) -> tuple[int, int]:
    """(accepting randomness strings, all strings) for one verifier round."""
    n1, m = sys.n1, sys.m
    _check_table_size(n1)
    f = proof.f_table.astype(np.int64)
    g = proof.g_table.astype(np.int64)
    N1, N2 = 1 << n1, 1 << (n1 * n1)
    ac = _autocorrelation(g)
    signs = 1 - 2 * g
    lin_g = (N2 * N2 + int((signs * ac).sum())) // 2
    # per r7: combined row index and right-hand side
    r7 = np.arange(1 << m, dtype=np.int64)
    rows = np.array([sys.row_index(i) for i in range(m)], dtype=np.int64)
    z = np.zeros(r7.size, dtype=np.int64)
    c2 = np.zeros(r7.size, dtype=np.int64)
    for i in range(m):
        sel = (r7 >> i) & 1
        z ^= sel * rows[i]
        c2 ^= sel * int(sys.b[i])
    s2 = 1 - 2 * c2
    ac_z = ac[z]
    r1, r2 = np.meshgrid(np.arange(N1), np.arange(N1), indexing="ij")
    r1, r2 = r1.ravel(), r2.ravel()
    keep = f[r1 ^ r2] == (f[r1] ^ f[r2])
    r1, r2 = r1[keep], r2[keep]
    a = _tensor_index_array(r1, r2, n1)
    R = r7.size
    # 4 * #{r6 : both self-corrected reads match}, summed over r7, is
    # N2*R + s1*(R*ac[a] + cross[a]) + sum(s2*ac_z); only s1 depends on r3
    cross = (s2[None, :] * ac[a[:, None] ^ z[None, :]]).sum(axis=1)
    per_pair = R * ac[a] + cross
    total = N1 * r1.size * (N2 * R + int((s2 * ac_z).sum()))
    for r3 in range(N1):
        c1 = (f[r1 ^ r3] ^ f[r3]) & (f[r2 ^ r3] ^ f[r3])
        total += int(((1 - 2 * c1) * per_pair).sum())
    accept = lin_g * (total // 4)
    return accept, 1 << randomness_bits(n1, m)


def round_accept_prob(sys: QuadSystem, proof: ExpPcpProof) -> Fraction:
    acc, tot = round_accept_count(sys, proof)
    return Fraction(acc, tot)


@dataclass(frozen=True)
class Acceptance:
    value: Fraction | float
    method: str
    single_round: Fraction | None = None
    interval: tuple | None = None
    samples: int = 0


def exp_pcp_accept_prob(sys: QuadSystem, proof: ExpPcpProof, m0: int = 8, mode: str = "enumerate",
                        samples: int = 2000, rng: np.random.Generator | None = None) -> Acceptance:
    """Acceptance of the m0-round verifier.

    Rounds use independent randomness, so the enumerated value is p**m0 with p
    the exactly counted single-round acceptance.
    """
    if mode == "enumerate":
        p = round_accept_prob(sys, proof)
        return Acceptance(p ** m0, "exact", single_round=p)
    if mode == "sample":
        from .harness.stats import clopper_pearson
        if rng is None:
            raise ShapeError("sampling needs an explicit generator")
        hits = 0
        for _ in range(samples):
            rounds = [RoundRandomness.draw(rng, sys.n1, sys.m) for _ in range(m0)]
            hits += exp_pcp_verify(sys, proof, rounds)
        return Acceptance(hits / samples, "sampled", interval=clopper_pearson(hits, samples, 0.99), samples=samples)
    raise ShapeError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------- adversaries

def _sample_pairs(total: int, limit: int, rng: np.random.Generator):
    if total * (total - 1) // 2 <= limit:
        for i in range(total):
            for j in range(i + 1, total):
                yield i, j
        return
    seen = set()
    while len(seen) < limit:
        i, j = sorted(int(x) for x in rng.choice(total, size=2, replace=False))
        if (i, j) not in seen:
            seen.add((i, j))
            yield i, j


def structured_adversaries(sys: QuadSystem, rng: np.random.Generator, limit: int = 200,
                           hill_climbers: int = 2, hill_steps: int = 200) -> Iterator[tuple[str, ExpPcpProof]]:
    """Proof families covering each case of the soundness argument.

    ``limit`` caps every family; families larger than the cap are sampled
    with ``rng`` (exhaustive otherwise).  Base points are the honest-shaped
    proofs WH(u), WH(u (x) u) for every u, solutions or not.
    """
    n1 = sys.n1
    _check_table_size(n1)
    N1, N2 = 1 << n1, 1 << (n1 * n1)
    us = list(range(N1))
    bases = [honest_proof(u, n1) for u in us]
    for u, p in zip(us, bases):
        yield f"shaped u={u}", p
    nbits = N1 + N2
    for u, p in zip(us, bases):
        singles = range(nbits) if nbits <= limit else rng.choice(nbits, size=limit, replace=False)
        for i in singles:
            yield f"flip1 u={u}", p.flip(int(i))
        for i, j in _sample_pairs(nbits, limit, rng):
            yield f"flip2 u={u}", p.flip(i, j)
    # linear f, linear g with g != WH(u (x) u)
    for u in us:
        uu = bits_to_int(tensor_bits(u, n1))
        ws = range(N2) if N2 <= limit else rng.choice(N2, size=limit, replace=False)
        for w in ws:
            if int(w) != uu:
                yield f"linear-wrong u={u}", ExpPcpProof(n1, wh_table(u, n1), wh_table(int(w), n1 * n1))
    # mismatched linear pairs: f from one u, g from another u'
    for u in us:
        for v in us:
            if u != v:
                yield f"mismatch u={u} v={v}", ExpPcpProof(n1, wh_table(u, n1),
                                                           wh_table(bits_to_int(tensor_bits(v, n1)), n1 * n1))
    for k in range(min(limit, 16)):
        yield "random", ExpPcpProof(n1, rng.integers(0, 2, N1), rng.integers(0, 2, N2))
    for k in range(hill_climbers):
        start = bases[int(rng.integers(0, len(bases)))]
        yield "hill-climb", hill_climb(sys, start, rng, hill_steps)


def hill_climb(sys: QuadSystem, start: ExpPcpProof, rng: np.random.Generator, steps: int = 200) -> ExpPcpProof:
    """Greedy random single-bit flips that never lower single-round acceptance."""
    cur = start
    score = round_accept_prob(sys, cur)
    for _ in range(steps):
        cand = cur.flip(int(rng.integers(0, cur.nbits)))
        s = round_accept_prob(sys, cand)
        if s >= score:
            cur, score = cand, s
    return cur


# ---------------------------------------------------------------- assignment tester

@dataclass(frozen=True)
class TesterRandomness:
    blr1: tuple
    blr2: tuple
    rounds: tuple
    concat: tuple         # one (x, y) pair per concatenation check

    @classmethod
    def draw(cls, rng: np.random.Generator, n1: int, sys: QuadSystem, reps: int,
             concat_reps: int = 2) -> TesterRandomness:
        def bits(k):
            return int(rng.integers(0, 1 << k))
        return cls((bits(n1), bits(n1)), (bits(n1), bits(n1)),
                   tuple(RoundRandomness.draw(rng, sys.n1, sys.m) for _ in range(reps)),
                   tuple((bits(n1), bits(n1)) for _ in range(concat_reps)))


@dataclass(frozen=True)
class Tester:
    """Assignment tester for a predicate C on two n1-bit inputs."""

    n1: int
    sys: QuadSystem
    layout: QuadLayout
    cnf: Cnf
    reps: int
    concat_reps: int = 2

    def draw(self, rng: np.random.Generator) -> TesterRandomness:
        return TesterRandomness.draw(rng, self.n1, self.sys, self.reps, self.concat_reps)

    @property
    def proof_bits(self) -> int:
        return (1 << self.sys.n1) + (1 << (self.sys.n1 * self.sys.n1))


def predicate_cnf(C: Callable[[int, int], bool], n1: int) -> Cnf:
    """One clause per rejected input pair, ruling that pair out."""
    clauses = []
    for x in range(1 << n1):
        for y in range(1 << n1):
            if not C(x, y):
                z = x | (y << n1)
                clauses.append(tuple(-(i + 1) if (z >> i) & 1 else (i + 1) for i in range(2 * n1)))
    return Cnf(2 * n1, tuple(clauses))


def make_tester(C: Callable[[int, int], bool], n1: int, reps: int = 8, concat_reps: int = 2) -> Tester:
    from .cnf import split_to_width3
    if n1 > 4:
        raise ResourceError("the assignment tester is limited to n1 <= 4")
    cnf, _ = split_to_width3(predicate_cnf(C, n1))
    sys, layout = cnf_to_quadsys(cnf)
    _check_table_size(sys.n1)
    return Tester(n1, sys, layout, cnf, reps, concat_reps)


def tester_honest(t: Tester, u1: int, u2: int) -> tuple[BoolFn, BoolFn, ExpPcpProof]:
    """Honest codewords and inner proof for inputs accepted by C."""
    x = list(int_to_bits(u1 | (u2 << t.n1), 2 * t.n1))
    # fill chaining variables by brute force over the (tiny) extension space
    extra = t.cnf.nvars - 2 * t.n1
    for e in range(1 << extra):
        full = x + list(int_to_bits(e, extra))
        if t.cnf.evaluate(full):
            u = extend_assignment(t.cnf, t.layout, full)
            return wh_encode(int_to_bits(u1, t.n1)), wh_encode(int_to_bits(u2, t.n1)), exp_pcp_prove(t.sys, u)
    raise PreconditionError("C rejects the given inputs")


def assignment_tester(t: Tester, pi1: BoolFn, pi2: BoolFn, pi3: ExpPcpProof, w: TesterRandomness) -> bool:
    if pi1.k != t.n1 or pi2.k != t.n1 or pi3.n1 != t.sys.n1:
        raise ShapeError("codeword or proof sizes do not match the tester")
    for fn, (x, y) in ((pi1, w.blr1), (pi2, w.blr2)):
        if fn(x ^ y) != fn(x) ^ fn(y):
            return False
    if not exp_pcp_verify(t.sys, pi3, w.rounds):
        return False
    return all(int(pi3.f_table[x | (y << t.n1)]) == pi1(x) ^ pi2(y) for x, y in w.concat)


def concat_pass_rate(t: Tester, pi1: BoolFn, pi2: BoolFn, pi3: ExpPcpProof) -> Fraction:
    N = 1 << t.n1
    hits = sum(int(pi3.f_table[x | (y << t.n1)]) == pi1(x) ^ pi2(y) for x in range(N) for y in range(N))
    return Fraction(hits, N * N)


def tester_accept_prob(t: Tester, pi1: BoolFn, pi2: BoolFn, pi3: ExpPcpProof) -> Fraction:
    """Exact acceptance: every check draws independent randomness."""
    return (blr_pass_rate(pi1) * blr_pass_rate(pi2) * round_accept_prob(t.sys, pi3) ** t.reps
            * concat_pass_rate(t, pi1, pi2, pi3) ** t.concat_reps)


def close_codeword(fn: BoolFn, closeness=Fraction(99, 100)):
    """The u whose codeword agrees with fn on at least ``closeness`` of inputs, else None."""
    u, agree = nearest_linear(fn)
    return bits_to_int(u) if agree >= closeness else None


# ---------------------------------------------------------------- file formats

def dumps_quadsys(sys: QuadSystem) -> str:
    lines = [f"quadsys v1 {sys.n1} {sys.m}"]
    lines += ["".join(str(int(x)) for x in row) for row in sys.A]
    lines.append("".join(str(int(x)) for x in sys.b))
    return "\n".join(lines) + "\n"


def loads_quadsys(text: str) -> QuadSystem:
    rows = [ln.strip() for ln in text.splitlines()]
    while rows and not rows[-1]:
        rows.pop()
    head = rows[0].split() if rows else []
    if head[:2] != ["quadsys", "v1"] or len(head) != 4:
        raise FormatError("missing 'quadsys v1 n1 m' header")
    n1, m = int(head[2]), int(head[3])
    body = rows[1:]
    if len(body) != m + 1:
        raise FormatError(f"expected {m} rows and a right-hand side")
    try:
        A = np.array([[int(c) for c in r] for r in body[:m]], dtype=np.uint8).reshape(m, n1 * n1)
        b = np.array([int(c) for c in body[m]], dtype=np.uint8)
    except ValueError as exc:
        raise FormatError("rows must be bit strings of length n1^2") from exc
    if b.size != m:
        raise FormatError("right-hand side has the wrong length")
    return QuadSystem(n1, A, b)


PROOF_MAGIC = b"WHPF"


def dumps_proof(proof: ExpPcpProof) -> bytes:
    bits = np.concatenate([proof.f_table, proof.g_table])
    return PROOF_MAGIC + struct.pack("<I", proof.n1) + np.packbits(bits, bitorder="little").tobytes()


def loads_proof(data: bytes) -> ExpPcpProof:
    if len(data) < 8 or data[:4] != PROOF_MAGIC:
        raise FormatError("not a proof file")
    (n1,) = struct.unpack("<I", data[4:8])
    N1, N2 = 1 << n1, 1 << (n1 * n1)
    bits = np.unpackbits(np.frombuffer(data[8:], dtype=np.uint8), bitorder="little")
    if bits.size < N1 + N2:
        raise FormatError("proof file is truncated")
    return ExpPcpProof(n1, bits[:N1], bits[N1:N1 + N2])
