from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcpkit import csp
from pcpkit.cnf import Cnf, brute_force, random_cnf
from pcpkit.csp import Constraint, CspInstance, null_constraint
from pcpkit.dinur import (PartialRun, PipelineConfig, alphabet_reduce, amplify_once, make_nice,
                          plurality_assignment, power_t, qcsp_to_2cspW, regularize, stage_unsat, to_qcsp)
from pcpkit.errors import ParameterError, PreconditionError, ResourceError

import lawkit
from oracles import rc2_max

CFG = PipelineConfig()
formulas = st.builds(lambda seed, n, m: random_cnf(np.random.default_rng(seed), n, m, 3),
                     st.integers(0, 10 ** 6), st.integers(1, 5), st.integers(1, 8))


def small_unsat_qcsp():
    # x0 must be 1 and 0 at once, one extra clause on x1, x2
    return to_qcsp(Cnf(3, ((1,), (-1,), (2, 3)))).out


# ---------------------------------------------------------------- to_qcsp

def test_empty_cnf_gives_empty_instance():
    out = to_qcsp(Cnf(0, ())).out
    assert out.m == 0 and csp.val_exact(out) == 1


def test_contradiction_has_value_one_half():
    out = to_qcsp(Cnf(1, ((1,), (-1,)))).out
    assert out.m == 2 and csp.val_exact(out) == Fraction(1, 2)


def test_q0_below_three_rejected():
    with pytest.raises(PreconditionError):
        to_qcsp(Cnf(1, ((1,),)), q0=2)


@given(formulas)
def test_clause_instance_value_matches_maxsat(cnf):
    out = to_qcsp(cnf).out
    assert csp.val_exact(out) == Fraction(rc2_max(cnf), len(cnf.clauses))


@given(st.integers(0, 10 ** 6))
def test_wide_clauses_are_chained(seed):
    cnf = random_cnf(np.random.default_rng(seed), 5, 4, 5)
    stage = to_qcsp(cnf)
    x = brute_force(cnf)
    assert (csp.val_exact(stage.out) == 1) == (x is not None)
    if x is not None:
        assert stage_unsat(stage, stage.lift(x)) == 0
        assert list(stage.decode(stage.lift(x))) == list(x)
    else:
        assert csp.val_exact(stage.out) <= 1 - Fraction(1, stage.out.m)


# ---------------------------------------------------------------- binary form

def test_binary_form_counts():
    phi = lawkit.qcsp_instance(1, 5)
    stage = qcsp_to_2cspW(phi)
    assert stage.out.m == phi.q * phi.m
    assert stage.out.n == phi.n + phi.m
    assert stage.out.W == phi.W ** phi.q and stage.blowup == phi.q


def test_binary_form_value_window():
    phi = small_unsat_qcsp()
    eps = 1 - csp.val_exact(phi)
    v = csp.val_exact(qcsp_to_2cspW(phi).out)
    assert 1 - eps <= v <= 1 - eps / phi.q


@pytest.mark.parametrize("seed", range(5))
def test_binary_form_completeness(seed):
    phi = lawkit.qcsp_instance(seed, 5)
    u = csp.argmax_assignment(phi)
    stage = qcsp_to_2cspW(phi)
    y = stage.lift(u)
    assert stage_unsat(stage, y) <= csp.unsat_fraction(phi, u)
    if csp.unsat_fraction(phi, u) == 0:
        assert stage_unsat(stage, y) == 0
    assert list(stage.decode(y)) == list(u)


# ---------------------------------------------------------------- regularize

@pytest.mark.parametrize("seed", range(4))
def test_regularize_degree(seed):
    s1 = qcsp_to_2cspW(lawkit.qcsp_instance(seed, 5))
    out = regularize(s1.out, CFG).out
    cg = csp.constraint_graph(out)
    assert cg.regular and cg.graph.d == CFG.d + 1


def test_single_occurrence_gets_a_trivial_cloud():
    phi = CspInstance(2, 2, 3, (Constraint((0, 1), np.array([0, 1, 1, 0])),))
    stage = regularize(phi, CFG)
    assert stage.info["dropped"] == 1 and stage.info["cloud_sizes"] == [1, 1]
    tags = [c.tag for c in stage.out.constraints]
    assert tags.count("loop") == 2 * CFG.d
    assert list(stage.decode(stage.lift([1, 0, 1]))) == [1, 0, 0]


def test_regularize_value_drop():
    phi = CspInstance(2, 2, 2, (Constraint((0, 1), np.array([0, 1, 1, 0])),
                                Constraint((0, 1), np.array([1, 0, 0, 1]))))
    out = regularize(phi, CFG).out
    eps = 1 - csp.val_exact(phi)
    assert csp.val_exact(out) <= 1 - eps / (100 * phi.W * CFG.d)
    assert csp.val_exact(out) < 1


# ---------------------------------------------------------------- make_nice

@pytest.mark.parametrize("seed", range(3))
def test_make_nice_output(seed):
    s1 = qcsp_to_2cspW(lawkit.qcsp_instance(seed, 4))
    s2 = regularize(s1.out, CFG)
    s3 = make_nice(s2.out, CFG)
    report = csp.is_nice(s3.out)
    assert report.nice, report.failures
    assert report.degree == 4 * CFG.nice_degree
    assert s3.out.m <= s3.info["count_bound"] == 4 * CFG.nice_degree * s2.out.n
    u = s2.lift(s1.lift(csp.argmax_assignment(s1.src)))
    assert csp.unsat_fraction(s3.out, u) <= csp.unsat_fraction(s2.out, u)


def test_make_nice_on_empty_instance():
    stage = make_nice(CspInstance(2, 3, 0, ()), CFG)
    assert stage.out.m == 0 and stage.out.n == 0


def test_make_nice_needs_regular_input():
    phi = CspInstance(2, 2, 3, (null_constraint((0, 1), 2), null_constraint((1, 2), 2)))
    with pytest.raises(PreconditionError):
        make_nice(phi, CFG)


# ---------------------------------------------------------------- powering

def loop_pair():
    return CspInstance(2, 2, 2, (null_constraint((0, 1), 2), null_constraint((0,), 2), null_constraint((1,), 2)))


def test_power_counts_and_alphabet():
    psi = lawkit.nice_ring(0)
    stage = power_t(psi, 1)
    D = stage.info["degree"]
    assert stage.out.m == psi.n * D ** 3 <= stage.info["count_bound"] == psi.n * D ** 5
    assert stage.out.max_ball <= stage.info["alphabet_exponent_bound"]
    assert stage.out.W == psi.W ** stage.out.max_ball


def test_induced_assignment_satisfies_and_decodes_back():
    psi = lawkit.nice_ring(1)
    stage = power_t(psi, 1)
    for u in csp.all_assignments(psi.n, psi.W)[::97]:
        Y = stage.lift(u)
        assert list(stage.decode(Y)) == list(u)
        if csp.unsat_fraction(psi, u) == 0:
            assert stage.out.unsat_fraction(Y) == 0


def test_plurality_tie_goes_to_smaller_value():
    pw = power_t(loop_pair(), 1).out
    assert pw.balls == ([0, 1], [1, 0])
    # walks from vertex 0 end at 0 (loop) and 1: their views of vertex 0 are 1 and 0
    Y = np.array([[1, 0], [1, 0]])
    assert plurality_assignment(Y, pw)[0] == 0
    Y = np.array([[1, 0], [1, 1]])
    assert plurality_assignment(Y, pw)[0] == 1


def test_power_rejects_bad_parameters():
    with pytest.raises(PreconditionError):
        power_t(loop_pair(), 2)
    with pytest.raises(ResourceError):
        power_t(lawkit.nice_ring(0), 1, budget=1000)
    with pytest.raises(ParameterError):
        PipelineConfig(t=3)


def test_walk_constraint_predicates_match_vectorised_rejection():
    pw = power_t(loop_pair(), 1).out
    as_csp = pw.as_csp()
    rng = np.random.default_rng(0)
    for _ in range(20):
        Y = rng.integers(0, 2, size=(2, 2))
        symbols = [pw.symbol(row) for row in Y]
        assert csp.unsat_fraction(as_csp, symbols) == pw.unsat_fraction(Y)


# ---------------------------------------------------------------- alphabet reduction

def test_alphabet_reduce_honest_lift():
    phi = lawkit.binary_instance(2, 5, 6)
    stage = alphabet_reduce(phi, CFG)
    for u in csp.all_assignments(phi.n, phi.W):
        if csp.unsat_fraction(phi, u) == 0:
            Y = stage.lift(u)
            assert stage_unsat(stage, Y) == 0
            assert list(stage.decode(Y)) == list(u)


def test_block_size_is_independent_of_instance_size():
    sizes = {len(b.strings) for n, m in ((3, 2), (6, 9), (8, 20))
             for b in alphabet_reduce(lawkit.binary_instance(0, n, m), CFG).out.blocks}
    assert sizes == {CFG.tester_samples}


def test_alphabet_reduce_limits():
    with pytest.raises(ResourceError):
        alphabet_reduce(lawkit.ring_instance(0, 4, 4), CFG)
    with pytest.raises(PreconditionError):
        alphabet_reduce(lawkit.qcsp_instance(0, 4), CFG)


# ---------------------------------------------------------------- per-assignment laws

@pytest.mark.parametrize("seed", range(3))
def test_laws_on_chained_stages(seed):
    chain = lawkit.build_chain(lawkit.qcsp_instance(seed, 5))
    for check in (lawkit.check_binary_form_law, lawkit.check_regularize_law, lawkit.check_nice_law):
        res = check(chain, seed, 200)
        assert res.passed, res.line()


def test_powering_law_sample():
    res = lawkit.check_powering_law(lawkit.nice_ring(3), 3, 60)
    assert res.passed, res.line()


def test_alphabet_law_sample():
    res = lawkit.check_alphabet_law(lawkit.binary_instance(4, 5, 7), 4, 100)
    assert res.passed, res.line()


# ---------------------------------------------------------------- one round

def test_amplify_once_stops_at_the_tester_cap():
    phi = lawkit.cyclic_instance(0, 4)
    with pytest.raises(PartialRun) as info:
        amplify_once(phi, CFG)
    assert info.value.failed_stage == "alphabet_reduce"
    assert [s.name for s in info.value.stages] == ["qcsp_to_2cspW", "regularize", "make_nice", "power_t"]


def test_cyclic_family_blowups():
    for n in (4, 6):
        phi = lawkit.cyclic_instance(0, n)
        with pytest.raises(PartialRun) as info:
            amplify_once(phi, CFG)
        blowups = [s.blowup for s in info.value.stages]
        assert blowups == [3, 5, Fraction(37, 5), Fraction(27648, 37)]
