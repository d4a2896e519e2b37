"""Acceptance run: one test per criterion, each ending in a PASS/FAIL verdict line.

Every check compares the library against a route it does not share code
with: numpy eigensolvers for spectra, integer loops for BLR counts, scipy for
binomial distances, exhaustive enumeration for proofs.
"""
import time
from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest
from scipy.stats import binom

from pcpkit import csp
from pcpkit import hadamard as hd
from pcpkit import specgraph as sg
from pcpkit.cnf import brute_force, small_cnf_universe
from pcpkit.dinur import (PartialRun, PipelineConfig, accept_prob, alphabet_reduce, amplify_once, honest_proof, make_nice,
                          pcp_verify, power_t, run_pipeline)
from pcpkit.dinur.pipeline import accept_prob_enumerated
from pcpkit.dinur.stages import stage_unsat
from pcpkit.exactmath import cert_sqrt
from pcpkit.harness.cli import main
from pcpkit.harness.stats import binom_statdist, clopper_pearson, make_rng, second_moment_bound
from pcpkit.harness.suite import FIXTURES

import lawkit
import verdicts

CFG = PipelineConfig()


def verdict(code: str, ok: bool, detail: str, started: float, limit: float):
    took = time.perf_counter() - started
    ok = bool(ok) and took < limit
    verdicts.record(code, ok, f"{detail} [{took:.1f}s, limit {limit:.0f}s]")
    assert ok, detail


# ---------------------------------------------------------------- spectral oracle

def walk_matrix(G: sg.RotationGraph) -> np.ndarray:
    M = np.zeros((G.n, G.n))
    np.add.at(M, (np.repeat(np.arange(G.n), G.d), G.nbr.ravel()), 1.0 / G.d)
    return M


def eigen_lambda(G: sg.RotationGraph) -> float:
    if G.n == 1:
        return 0.0
    M = walk_matrix(G) - 1.0 / G.n
    return float(np.max(np.abs(np.linalg.eigvalsh((M + M.T) / 2))))


def random_graph(rng, n: int, d: int) -> sg.RotationGraph:
    while True:
        G = sg.random_regular(n, d, rng) if n * d % 2 == 0 else sg.add_loops(sg.random_regular(n, d - 1, rng), 1)
        if G.is_connected():
            return G


# ---------------------------------------------------------------- A1

def test_a1_certified_square_roots():
    t0 = time.perf_counter()
    rng = make_rng(2024, 1)
    dens = rng.integers(1, 10 ** 6 + 1, size=100_000)
    nums = [int(rng.integers(0, 10 ** 6 * int(b) + 1)) for b in dens]
    exps = rng.integers(4, 21, size=100_000)
    bad = 0
    for a, b, e in zip(nums, dens, exps):
        r, L = Fraction(a, int(b)), 1 << int(e)
        err = cert_sqrt(r, L).value ** 2 - r
        bad += not (0 <= err <= Fraction(1, L))
    verdict("A1", bad == 0, f"100000 rationals in [0, 1e6], {bad} contract failures", t0, 30)


# ---------------------------------------------------------------- A2

def all_tables(k: int) -> np.ndarray:
    N = 1 << k
    idx = np.arange(1 << N, dtype=np.int64)
    return ((idx[:, None] >> np.arange(N)) & 1).astype(np.uint8)


def blr_check(k: int, code: str, limit: float):
    t0 = time.perf_counter()
    T = all_tables(k)
    N = 1 << k
    counts = np.zeros(len(T), dtype=np.int64)
    for x in range(N):
        for y in range(N):
            counts += T[:, x ^ y] == T[:, x] ^ T[:, y]
    lin = np.array([[bin(u & x).count("1") & 1 for x in range(N)] for u in range(N)], dtype=np.uint8)
    agree = np.zeros(len(T), dtype=np.int64)
    for row in lin:
        agree = np.maximum(agree, (T == row).sum(axis=1))
    lib_counts = hd.blr_pass_counts_batch(T)
    lib_agree = np.array([hd.linear_agreements(hd.BoolFn(k, t)).max() for t in T])
    routes_agree = np.array_equal(lib_counts, counts) and np.array_equal(lib_agree, agree)
    # rate <= max(29/32, 1/2 + a/2) with rate = c/N^2 and a = A/N, cleared of denominators
    nonlinear = agree < N
    c, A = counts[nonlinear], agree[nonlinear]
    ok_bound = (32 * c <= 29 * N * N) | (2 * c <= N * N + A * N)
    bad = int((~ok_bound).sum())
    ratio = max(Fraction(int(ci), N * N) / max(Fraction(29, 32), Fraction(1, 2) + Fraction(int(ai), 2 * N))
                for ci, ai in zip(c, A))
    verdict(code, routes_agree and bad == 0,
            f"k={k}: {len(T)} functions, {int(nonlinear.sum())} non-linear, {bad} violations, "
            f"worst rate/bound {ratio}, library counts match loops: {routes_agree}", t0, limit)


def test_a2_blr_soundness_three_bits():
    blr_check(3, "A2", 5)


@pytest.mark.slow
def test_a2_blr_soundness_four_bits():
    blr_check(4, "A2", 600)


# ---------------------------------------------------------------- A3

def decode_cases():
    for u in range(8):
        for flips in [()] + [(i,) for i in range(8)]:
            yield 3, u, flips
    rng = make_rng(2024, 3)
    for _ in range(1000):
        u = int(rng.integers(0, 16))
        s = int(rng.integers(0, 4))
        yield 4, u, tuple(int(i) for i in rng.choice(16, size=s, replace=False))


def test_a3_local_decoding():
    t0 = time.perf_counter()
    cases = bad = 0
    worst = Fraction(1)
    for k, u, flips in decode_cases():
        N = 1 << k
        table = hd.wh_table(u, k).copy()
        table[list(flips)] ^= 1
        f = hd.BoolFn(k, table)
        s = Fraction(len(flips), N)
        for x in range(N):
            target = bin(u & x).count("1") & 1
            hits = sum(int(table[x ^ r] ^ table[r]) == target for r in range(N))
            rate = hd.decode_rate(f, target, x)
            bad += rate != Fraction(hits, N) or rate < 1 - 2 * s
            worst = min(worst, rate - (1 - 2 * s))
        cases += 1
    verdict("A3", bad == 0, f"{cases} functions (72 on 3 bits, 1000 on 4 bits), {bad} failures, "
            f"tightest slack {worst}", t0, 120)


# ---------------------------------------------------------------- A4

def test_a4_exponential_pcp():
    t0 = time.perf_counter()
    universe = small_cnf_universe()
    incomplete, unsat, worst_single, sampled_misses = 0, 0, Fraction(0), 0
    round_bad = 0
    rng = make_rng(2024, 4)
    for idx, cnf in enumerate(universe):
        sys, layout = hd.cnf_to_quadsys(cnf)
        x = brute_force(cnf)
        if x is not None:
            for x in product((0, 1), repeat=cnf.nvars):
                if cnf.evaluate(x):
                    proof = hd.exp_pcp_prove(sys, hd.extend_assignment(cnf, layout, x))
                    acc = hd.exp_pcp_accept_prob(sys, proof)
                    rounds = [hd.RoundRandomness.draw(rng, sys.n1, sys.m) for _ in range(16)]
                    incomplete += acc.value != 1 or not hd.exp_pcp_verify(sys, proof, rounds)
            continue
        unsat += 1
        worst, worst_proof = Fraction(0), None
        for _, proof in hd.structured_adversaries(sys, make_rng(2024, 40, idx)):
            p = hd.round_accept_prob(sys, proof)
            if worst_proof is None or p > worst:
                worst, worst_proof = p, proof
        worst_single = max(worst_single, worst)
        round_bad += worst > Fraction(63, 64) or worst ** CFG.m0 > Fraction(1, 2)
        # the counted probability must sit inside a sampled interval for the same proof
        draws = 3000
        hits = sum(hd.exp_pcp_verify_round(sys, worst_proof, hd.RoundRandomness.draw(rng, sys.n1, sys.m))
                   for _ in range(draws))
        lo, hi = clopper_pearson(hits, draws, 0.9999)
        sampled_misses += not lo <= float(worst) <= hi
    ok = incomplete == 0 and unsat == 21 and round_bad == 0 and sampled_misses == 0
    verdict("A4", ok, f"{len(universe)} formulas, {incomplete} incomplete honest proofs; {unsat} unsatisfiable, "
            f"worst single round {worst_single}, 8 rounds {worst_single ** CFG.m0}, "
            f"{sampled_misses} sampled cross-check misses", t0, 600)


# ---------------------------------------------------------------- A5

def small_zoo():
    """Every graph of at most 14 vertices the family and product operations pass through."""
    H3 = sg.cycle(3)
    rng = make_rng(2024, 5)
    yield "family level 1: K9", sg.complete(9)
    yield "K5", sg.complete(5)
    yield "C7^2", sg.graph_power(sg.cycle(7), 2)
    yield "C3 x C3", sg.tensor(sg.cycle(3), sg.cycle(3))
    yield "K3 x C4", sg.tensor(sg.complete(3), sg.cycle(4))
    yield "K4 (r) C3", sg.replacement(sg.complete(4), H3)
    yield "(K4 (r) C3)^2", sg.graph_power(sg.replacement(sg.complete(4), H3), 2)
    yield "pair5 (r) C5", sg.replacement(sg.parallel_pair(5), sg.cycle(5))
    yield "searched (12, 3)", sg.find_base_expander(12, 3, Fraction(9, 10), seed=1)
    yield "searched (14, 4)", sg.find_base_expander(14, 4, Fraction(4, 5), seed=0)
    yield "random (13, 4)", random_graph(rng, 13, 4)


def brute_force_inequalities(G: sg.RotationGraph) -> tuple[int, int]:
    lam = eigen_lambda(G)
    n, d = G.n, G.d
    subsets = bad = 0
    for k in range(1, n // 2 + 1):
        for S in combinations(range(n), k):
            subsets += 1
            bad += sg.edge_cut(G, S) < d * k * (1 - lam) / 2 - d / 1e6
            mu = k / n
            for l in range(1, 5):
                bad += float(sg.collision_prob(G, l, S)) > mu * (mu + 2 * lam ** l) + 1e-9
    return subsets, bad


def test_a5_expander_family():
    t0 = time.perf_counter()
    target = Fraction(3, 5)
    spec = sg.FamilySpec(H=sg.find_base_expander(64, 4, Fraction(9, 10), seed=0), G1=sg.complete(9),
                         G2=sg.find_base_expander(16, 8, target, seed=0), b=1, target_lambda=target)
    levels, certified_ok = [], True
    for k in (1, 2, 3, 4):
        G = sg.build_family(k, spec)
        est = sg.lambda_upper(G)
        if est.certified:
            certified_ok &= est.lambda_upper <= target and est.lambda_upper >= eigen_lambda(G) - 1e-9
        levels.append(f"k={k} n={G.n} lambda~{float(est.lambda_upper):.3f} "
                      f"{'certified' if est.certified else 'estimate'}")
    total_sets = bad = 0
    for _, G in small_zoo():
        s, b = brute_force_inequalities(G)
        total_sets += s
        bad += b
    verdict("A5", certified_ok and bad == 0,
            f"{'; '.join(levels)}; target {target}; brute force over {total_sets} subsets of 11 graphs "
            f"with n <= 14, {bad} violations", t0, 900)


# ---------------------------------------------------------------- A6

def test_a6_product_bounds():
    t0 = time.perf_counter()
    rng = make_rng(2024, 6)
    bad = {"tensor": 0, "tensor-max": 0, "replacement": 0, "power": 0, "certificate": 0}
    for _ in range(50):
        G = random_graph(rng, int(rng.integers(3, 9)), int(rng.integers(2, 5)))
        G2 = random_graph(rng, int(rng.integers(3, 9)), int(rng.integers(2, 5)))
        a, b = eigen_lambda(G), eigen_lambda(G2)
        T = sg.tensor(G, G2)
        lt = eigen_lambda(T)
        bad["tensor"] += lt > max(a + b - a * b, a * b, a, b) + 1e-6
        bad["tensor-max"] += lt > max(a, b) + 1e-6
        bad["certificate"] += float(sg.lambda_upper(T, "exact").lambda_upper) < lt - 1e-9
    for _ in range(50):
        d = int(rng.integers(3, 5))
        G = random_graph(rng, int(rng.integers(4, 11)), d)
        H = random_graph(rng, d, int(rng.integers(2, 4)))
        eps, delta = 1 - eigen_lambda(G), 1 - eigen_lambda(H)
        cube = sg.graph_power(sg.replacement(G, H), 3)
        bad["replacement"] += eigen_lambda(cube) > 1 - eps * delta ** 2 / 8 + 1e-3
    for _ in range(50):
        G = random_graph(rng, int(rng.integers(3, 13)), int(rng.integers(2, 5)))
        p = int(rng.integers(2, 5))
        bad["power"] += eigen_lambda(sg.graph_power(G, p)) > eigen_lambda(G) ** p + 1e-6
    verdict("A6", not any(bad.values()), f"50 pairs per bound, violations {bad}", t0, 600)


# ---------------------------------------------------------------- A7

def test_a7_stage_laws():
    t0 = time.perf_counter()
    notes, ok = [], True
    incomplete = 0
    law_totals: dict[str, list[int]] = {}

    def tally(res):
        nonlocal ok
        ok &= res.passed
        c = law_totals.setdefault(res.law, [0, 0, 0])
        c[0] += res.checked
        c[1] += res.violations
        c[2] += res.vacuous

    for seed in range(20):
        n = 4 + seed % 5
        phi = lawkit.qcsp_instance(seed, n)
        chain = lawkit.build_chain(phi)
        for check in (lawkit.check_binary_form_law, lawkit.check_regularize_law, lawkit.check_nice_law):
            tally(check(chain, seed, 1000))
        u = make_rng(seed, 77).integers(0, phi.W, size=n)
        sat = lawkit.build_chain(lawkit.planted(phi, u))
        y1 = sat.binary.lift(u)
        y2 = sat.regular.lift(y1)
        incomplete += stage_unsat(sat.binary, y1) != 0
        incomplete += stage_unsat(sat.regular, y2) != 0
        incomplete += csp.unsat_fraction(sat.nice.out, y2) != 0

        ring = lawkit.ring_instance(seed, 6, 4)
        tally(lawkit.check_powering_law(lawkit.nice_ring(seed), seed, 1000))
        v = make_rng(seed, 78).integers(0, 4, size=6)
        psi = make_nice(lawkit.planted(ring, v), CFG).out
        st = power_t(psi, 1)
        incomplete += st.out.unsat_fraction(st.lift(v)) != 0

        bphi = lawkit.binary_instance(seed, n, n + 2)
        tally(lawkit.check_alphabet_law(bphi, seed, 1000))
        w = make_rng(seed, 79).integers(0, 2, size=n)
        red = alphabet_reduce(lawkit.planted(bphi, w), CFG)
        incomplete += stage_unsat(red, red.lift(w)) != 0

    sweeps = {}
    for n in (4, 6, 8):
        with pytest.raises(PartialRun) as info:
            amplify_once(lawkit.cyclic_instance(0, n), CFG)
        sweeps[n] = [s.blowup for s in info.value.stages]
        sweeps[n].append(alphabet_reduce(lawkit.ring_instance(0, n, 2), CFG).blowup)
    base = sweeps[4]
    steady = all(abs(float(b) / float(b0) - 1) <= 0.01 for n in (6, 8) for b, b0 in zip(sweeps[n], base))
    laws = ", ".join(f"{k} {c[0]} checked/{c[1]} violations" + (f"/{c[2]} vacuous" if c[2] else "")
                     for k, c in law_totals.items())
    notes.append(laws)
    notes.append(f"{incomplete} completeness failures across 20 instances per stage")
    notes.append(f"blowups {[str(b) for b in base]} constant over n=4,6,8: {steady}")
    verdict("A7", ok and incomplete == 0 and steady, "; ".join(notes), t0, 1200)


# ---------------------------------------------------------------- A8

def test_a8_end_to_end_gap():
    t0 = time.perf_counter()
    lines, ok = [], True
    for name in ("contradiction", "chain", "xor2"):
        res = run_pipeline(FIXTURES[name], 1)
        gap = res.manifest["gap"]
        reached = Fraction(gap["gap"]) >= Fraction(gap["realized_epsilon0"])
        desc = res.descriptor
        worst = Fraction(0)
        for bits in product((0, 1), repeat=desc.proof_bits):
            proof = np.array(bits, dtype=np.int64)
            p = accept_prob(desc, proof)
            ok &= p == accept_prob_enumerated(desc, proof)
            worst = max(worst, p)
        ok &= reached and worst <= Fraction(1, 2)
        lines.append(f"{name}: gap {gap['gap']} >= {gap['realized_epsilon0']}, "
                     f"worst of {2 ** desc.proof_bits} proofs {worst}")
    cnf = FIXTURES["sat3"]
    res = run_pipeline(cnf, 1)
    honest_ok = all(pcp_verify(res.descriptor, honest_proof(res, x), w)
                    for x in product((0, 1), repeat=cnf.nvars) if cnf.evaluate(x)
                    for w in range(res.descriptor.space))
    ok &= honest_ok
    lines.append(f"sat3 honest proofs accepted on all randomness: {honest_ok}")
    verdict("A8", ok, "; ".join(lines), t0, 1800)


# ---------------------------------------------------------------- A9

def test_a9_statistics_facts():
    t0 = time.perf_counter()
    grid_bad = float_bad = cells = 0
    for t in (4, 16, 64, 256):
        r = int(t ** 0.5)
        for k in range(1, 100):
            delta = Fraction(k, 100)
            shift = int(delta * r)
            for sign in (1, -1):
                exact = binom_statdist(t, shift, sign)
                grid_bad += exact > 20 * delta
                top = t + max(0, sign * shift)
                ks = np.arange(top + 1)
                ref = np.abs(binom.pmf(ks, t, 0.5) - binom.pmf(ks, t + sign * shift, 0.5)).sum()
                float_bad += abs(float(exact) - ref) > 1e-9
                cells += 1
    rng = make_rng(2024, 9)
    moment_bad = 0
    for _ in range(10_000):
        vals = [int(v) for v in rng.integers(0, 11, size=int(rng.integers(1, 21)))]
        if not any(vals):
            vals[0] = 1
        lhs, rhs = second_moment_bound(vals)
        n, s1, s2 = len(vals), sum(vals), sum(v * v for v in vals)
        moment_bad += (lhs, rhs) != (Fraction(sum(v > 0 for v in vals), n), Fraction(s1 * s1, n * s2)) or lhs < rhs
    verdict("A9", grid_bad == float_bad == moment_bad == 0,
            f"{cells} grid cells, {grid_bad} above 20*delta, {float_bad} scipy mismatches; "
            f"10000 multisets, {moment_bad} failures", t0, 60)


# ---------------------------------------------------------------- A10

def test_a10_deterministic_suite(tmp_path, capsys):
    t0 = time.perf_counter()
    outs = []
    for d in ("first", "second"):
        code = main(["--out", str(tmp_path / d), "suite", "run"])
        outs.append((code, capsys.readouterr().out))
    a, b = tmp_path / "first", tmp_path / "second"
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    same_tree = files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    differing = [str(f) for f in files if (a / f).read_bytes() != (b / f).read_bytes()]
    ok = same_tree and not differing and outs[0] == outs[1] and outs[0][0] == 0
    verdict("A10", ok, f"{len(files)} files compared byte for byte, differing: {differing or 'none'}", t0, 600)
