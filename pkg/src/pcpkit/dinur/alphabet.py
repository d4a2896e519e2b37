"""Alphabet reduction through the Hadamard assignment tester.

Each variable becomes the Walsh-Hadamard codeword of its value's bits, and
each constraint gets a private inner proof (the exponential-size PCP for the
constraint's predicate).  A block holds one Boolean constraint per tester
random string; the strings are a seeded sample of fixed size per block, so
block size does not depend on the instance.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..csp import Constraint, CspInstance
from ..errors import PreconditionError, ResourceError
from ..hadamard import (BoolFn, ExpPcpProof, Tester, TesterRandomness, assignment_tester, close_codeword,
                        combine_rows, make_tester, tensor_index, tester_honest, wh_table)
from ..harness.stats import make_rng
from .config import PipelineConfig
from .stages import Stage


def tester_queries(t: Tester, w: TesterRandomness) -> list[tuple[str, int]]:
    """Positions read by the tester on randomness w, known before any read."""
    q = []
    for name, (x, y) in (("U1", w.blr1), ("U2", w.blr2)):
        q += [(name, x), (name, y), (name, x ^ y)]
    N1 = 1 << t.sys.n1
    for r in w.rounds:
        q += [("P", r.r1), ("P", r.r2), ("P", r.r1 ^ r.r2), ("P", r.r1 ^ r.r3), ("P", r.r3), ("P", r.r2 ^ r.r3)]
        a = tensor_index(r.r1, r.r2, t.sys.n1)
        z, _ = combine_rows(t.sys, r.r7)
        q += [("P", N1 + g) for g in (r.r4, r.r5, r.r4 ^ r.r5, a ^ r.r6, r.r6, z ^ r.r6)]
    for x, y in w.concat:
        q += [("P", x | (y << t.n1)), ("U1", x), ("U2", y)]
    return q


@dataclass(frozen=True, eq=False)
class Block:
    scope: tuple          # source variables (i, j); i == j for one-variable constraints
    tester: Tester
    proof_offset: int
    strings: tuple


@dataclass(frozen=True, eq=False)
class ReducedInstance:
    src: CspInstance
    bits: int             # bits per source value
    blocks: tuple
    csp: CspInstance

    @property
    def m(self) -> int:
        return self.csp.m

    @property
    def n(self) -> int:
        return self.csp.n

    def codeword_slice(self, v: int) -> slice:
        size = 1 << self.bits
        return slice(v * size, (v + 1) * size)

    def _parts(self, Y, blk: Block):
        i, j = blk.scope
        p1 = BoolFn(self.bits, Y[self.codeword_slice(i)])
        p2 = BoolFn(self.bits, Y[self.codeword_slice(j)])
        N1 = 1 << blk.tester.sys.n1
        N2 = 1 << (blk.tester.sys.n1 ** 2)
        o = blk.proof_offset
        pr = ExpPcpProof(blk.tester.sys.n1, Y[o:o + N1], Y[o + N1:o + N1 + N2])
        return p1, p2, pr

    def block_rejections(self, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=np.uint8)
        out = np.zeros(len(self.blocks), dtype=np.int64)
        for k, blk in enumerate(self.blocks):
            p1, p2, pr = self._parts(Y, blk)
            out[k] = sum(not assignment_tester(blk.tester, p1, p2, pr, w) for w in blk.strings)
        return out

    def unsat_fraction(self, Y) -> Fraction:
        if self.m == 0:
            return Fraction(0)
        return Fraction(int(self.block_rejections(Y).sum()), self.m)


def _predicate(c: Constraint, W: int):
    if len(c.scope) == 1:
        return lambda x, y: x < W and bool(c.table[x])
    return lambda x, y: x < W and y < W and bool(c.table[x * W + y])


def alphabet_reduce(phi: CspInstance, cfg: PipelineConfig = PipelineConfig()) -> Stage:
    bits = max(1, (phi.W - 1).bit_length())
    if bits > cfg.tester_max_bits:
        raise ResourceError(f"alphabet of size {phi.W} needs {bits}-bit codewords; "
                            f"the tester cap is {cfg.tester_max_bits}")
    if not isinstance(phi, CspInstance) or phi.q != 2:
        raise PreconditionError("alphabet reduction expects a binary instance")
    size = 1 << bits
    offset = phi.n * size
    cache = {}
    blocks, cons = [], []
    for k, c in enumerate(phi.constraints):
        if c.table is None:
            raise PreconditionError("alphabet reduction needs tabulated constraints")
        key = (len(c.scope), c.table.tobytes())
        if key not in cache:
            cache[key] = make_tester(_predicate(c, phi.W), bits, reps=cfg.m0)
        t = cache[key]
        rng = make_rng(cfg.seed, 3, k)
        strings = tuple(t.draw(rng) for _ in range(cfg.tester_samples))
        scope = (c.scope[0], c.scope[-1])
        blk = Block(scope, t, offset, strings)
        offset += t.proof_bits
        blocks.append(blk)
        if len(cons) + len(strings) > cfg.reduce_budget:
            raise ResourceError("alphabet reduction exceeds its constraint budget")
        for w in strings:
            cons.append(_tester_constraint(blk, w, bits))
    out_csp = CspInstance(max((len(c.scope) for c in cons), default=1), 2, offset, tuple(cons))
    red = ReducedInstance(phi, bits, tuple(blocks), out_csp)

    def lift(u):
        u = np.asarray(u, dtype=np.int64)
        Y = np.zeros(offset, dtype=np.uint8)
        for v in range(phi.n):
            Y[red.codeword_slice(v)] = wh_table(int(u[v]), bits)
        for blk in blocks:
            i, j = blk.scope
            _, _, pr = tester_honest(blk.tester, int(u[i]), int(u[j]))
            o = blk.proof_offset
            Y[o:o + pr.f_table.size] = pr.f_table
            Y[o + pr.f_table.size:o + pr.nbits] = pr.g_table
        return Y

    def decode(Y):
        Y = np.asarray(Y, dtype=np.uint8)
        u = np.zeros(phi.n, dtype=np.int64)
        for v in range(phi.n):
            val = close_codeword(BoolFn(bits, Y[red.codeword_slice(v)]))
            u[v] = val if val is not None and val < phi.W else 0
        return u

    info = {"bits": bits, "block_size": cfg.tester_samples, "proof_bits": offset - phi.n * size}
    return Stage("alphabet_reduce", phi, red, lift, decode, info)


def _tester_constraint(blk: Block, w: TesterRandomness, bits: int) -> Constraint:
    size = 1 << bits
    i, j = blk.scope
    t = blk.tester

    def where(part, idx):
        if part == "U1":
            return i * size + idx
        if part == "U2":
            return j * size + idx
        return blk.proof_offset + idx

    scope = tuple(sorted({where(p, x) for p, x in tester_queries(t, w)}))
    slot = {v: k for k, v in enumerate(scope)}
    N1 = 1 << t.sys.n1

    def pred(vals):
        U1 = np.zeros(size, dtype=np.uint8)
        U2 = np.zeros(size, dtype=np.uint8)
        P = np.zeros(t.proof_bits, dtype=np.uint8)
        for v, k in slot.items():
            if i * size <= v < (i + 1) * size:
                U1[v - i * size] = vals[k]
            if j * size <= v < (j + 1) * size:
                U2[v - j * size] = vals[k]
            if v >= blk.proof_offset:
                P[v - blk.proof_offset] = vals[k]
        return assignment_tester(t, BoolFn(bits, U1), BoolFn(bits, U2), ExpPcpProof(t.sys.n1, P[:N1], P[N1:]), w)

    return Constraint(scope, pred=pred, tag="tester")
