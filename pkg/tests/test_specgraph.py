from fractions import Fraction
from math import cos, pi
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcpkit import specgraph as sg
from pcpkit.errors import FormatError, NotFoundError, PreconditionError, ResourceError, ShapeError

FIXTURES = Path(__file__).parent / "fixtures"


def walk_counts(G):
    """Edge multiplicities read endpoint by endpoint from the rotation map."""
    M = np.zeros((G.n, G.n), dtype=np.int64)
    for v in range(G.n):
        for i in range(G.d):
            u, _ = G.rot(v, i)
            M[v, u] += 1
    return M


def second_singular(M: np.ndarray) -> float:
    n = M.shape[0]
    return float(np.max(np.abs(np.linalg.eigvalsh(M - 1.0 / n)))) if n > 1 else 0.0


def is_involution(G) -> bool:
    return all(G.rot(*G.rot(v, i)) == (v, i) for v in range(G.n) for i in range(G.d))


small_graphs = st.builds(
    lambda n, half, seed: sg.random_regular(n, 2 * half, np.random.default_rng(seed)),
    st.integers(2, 9), st.integers(1, 3), st.integers(0, 10 ** 6))


def test_rw_matrix_examples():
    assert sg.rw_matrix(sg.single_vertex(3)).to_fractions() == [[1]]
    A = sg.rw_matrix(sg.cycle(4))
    for i in range(4):
        for j in range(4):
            expect = Fraction(1, 2) if (i - j) % 4 in (1, 3) else 0
            assert A.entry(i, j) == expect
    K = sg.rw_matrix(sg.complete(4))
    assert all(K.entry(i, j) == (0 if i == j else Fraction(1, 3)) for i in range(4) for j in range(4))


def test_power_of_four_cycle():
    A = [[Fraction(int(c), 2) for c in row] for row in walk_counts(sg.cycle(4))]
    A2 = [[sum(A[i][k] * A[k][j] for k in range(4)) for j in range(4)] for i in range(4)]
    P = sg.rw_matrix(sg.graph_power(sg.cycle(4), 2))
    assert P.to_fractions() == A2
    assert all(P.entry(i, i) == Fraction(1, 2) for i in range(4))


def test_power_degree_and_identity_case():
    G = sg.complete(4)
    assert sg.graph_power(G, 2).d == 9
    assert sg.rw_matrix(sg.graph_power(G, 1)) == sg.rw_matrix(G)
    with pytest.raises(ResourceError):
        sg.graph_power(G, 12, budget=1000)


def test_tensor_examples():
    C = sg.cycle(4)
    T = sg.tensor(C, C)
    assert (T.n, T.d) == (16, 4)
    same = sg.tensor(C, sg.single_vertex(3))
    assert same.n == 4 and sg.rw_matrix(same) == sg.rw_matrix(C)


def test_replacement_examples():
    D = 5
    R = sg.replacement(sg.parallel_pair(D), sg.cycle(D))
    assert (R.n, R.d) == (2 * D, 4)
    G = sg.complete(4)
    with pytest.raises(ShapeError):
        sg.replacement(G, sg.cycle(5))
    H = sg.cycle(3)
    R = sg.replacement(G, H)
    assert (R.n, R.d) == (G.n * G.d, 2 * H.d)


def test_lambda_of_complete_graph():
    est = sg.lambda_upper(sg.complete(4), "exact")
    assert est.certified and est.lambda_upper == Fraction(1, 3)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7, 9, 12])
def test_lambda_of_cycles(n):
    est = sg.lambda_upper(sg.cycle(n), "exact")
    closed_form = max(abs(cos(2 * pi * k / n)) for k in range(1, n))
    assert closed_form - 1e-9 <= float(est.lambda_upper) <= closed_form + 1e-6


def test_lambda_of_single_vertex():
    assert sg.lambda_upper(sg.single_vertex(4)).lambda_upper == 0


def test_lambda_estimators_on_large_graphs():
    G = sg.random_regular(200, 6, np.random.default_rng(5))
    est = sg.lambda_upper(G)
    assert est.method == "power-iteration" and not est.certified
    assert abs(float(est.lambda_upper) - second_singular(walk_counts(G) / 6)) < 1e-4
    assert sg.lambda_upper(G, "rayleigh").lambda_upper <= est.lambda_upper + Fraction(1, 10 ** 6)
    with pytest.raises(ResourceError):
        sg.lambda_upper(G, "exact")


def test_edge_cut_examples():
    assert sg.edge_cut(sg.complete(4), []) == 0
    assert sg.edge_cut(sg.complete(4), [0, 1]) == 4
    assert sg.edge_cut(sg.cycle(6), [0, 1, 2]) == 2
    with pytest.raises(IndexError):
        sg.edge_cut(sg.cycle(6), [7])


def test_collision_examples():
    K = sg.complete(4)
    assert sg.collision_prob(K, 1, []) == 0
    assert sg.collision_prob(K, 1, [0]) == 0
    with pytest.raises(PreconditionError):
        sg.collision_prob(K, 1, [0, 1, 2])


def test_collision_on_eight_vertex_graph():
    G = sg.random_regular(8, 4, np.random.default_rng(11))
    S = {0, 3, 5}
    walks = [(v, G.rot(G.rot(v, i)[0], j)[0]) for v in range(8) for i in range(4) for j in range(4)]
    direct = Fraction(sum(a in S and b in S for a, b in walks), len(walks))
    assert sg.collision_prob(G, 2, S) == direct
    lam = sg.lambda_upper(G, "exact").lambda_upper
    assert direct <= Fraction(3, 8) * (Fraction(3, 8) + 2 * lam ** 2)


def test_find_base_expander_complete_case():
    G = sg.find_base_expander(4, 3, Fraction(1, 2), seed=0)
    assert sg.lambda_upper(G, "exact").lambda_upper == Fraction(1, 3)


def test_find_base_expander_vacuous_target():
    G = sg.find_base_expander(6, 2, 1, seed=3)
    assert G.is_connected()


def test_find_base_expander_matches_recorded_witness():
    G = sg.find_base_expander(16, 4, Fraction(9, 10), seed=0)
    assert G == sg.loads_graph((FIXTURES / "expander_16_4_seed0.graph").read_text())
    est = sg.lambda_upper(G, "exact")
    assert est.certified and est.lambda_upper <= Fraction(9, 10)


def test_find_base_expander_reports_best():
    with pytest.raises(NotFoundError) as info:
        sg.find_base_expander(10, 2, Fraction(1, 10), seed=0, budget=5)
    assert info.value.best is not None


def tiny_family(b: int = 1):
    # degrees chosen so every level has degree 4 = sqrt(|V(H)|)
    G2 = sg.find_base_expander(6, 4, Fraction(9, 10), seed=1)
    return sg.FamilySpec(H=sg.cycle(16), G1=sg.complete(5), G2=G2, b=b)


def test_family_base_and_third_level():
    spec = tiny_family()
    assert sg.build_family(1, spec) is spec.G1
    G3 = sg.build_family(3, spec)
    assert G3.d == (2 * spec.H.d) ** spec.b
    assert sg.build_family(3, spec) is G3


def test_family_vertex_count_recurrence():
    spec = tiny_family()
    counts = {1: 5, 2: 6}
    for k in range(3, 7):
        counts[k] = counts[(k - 1) // 2] * counts[k - 1 - (k - 1) // 2] * 16
    for k in range(1, 7):
        assert sg.family_size(k, 5, 6, 16) == counts[k]
        G = sg.build_family(k, spec)
        assert G.n == counts[k] and G.d == 4
        assert np.array_equal(G.nbr[G.nbr, G.port], np.broadcast_to(np.arange(G.n)[:, None], G.nbr.shape))


def test_family_shape_mismatch():
    spec = sg.FamilySpec(H=sg.cycle(9), G1=sg.complete(5), G2=sg.complete(5))
    with pytest.raises(ShapeError):
        sg.build_family(3, spec)


def test_graph_file_round_trip_and_validation():
    G = sg.replacement(sg.complete(4), sg.cycle(3))
    assert sg.loads_graph(sg.dumps_graph(G)) == G
    with pytest.raises(FormatError):
        sg.loads_graph("rotgraph v1 2 1\n0 0 1 0\n1 0 1 0\n")
    with pytest.raises(FormatError):
        sg.loads_graph("graph 2 1\n")


@given(small_graphs)
def test_involution_and_stochasticity(G):
    for H in (G, sg.graph_power(G, 2), sg.tensor(G, sg.cycle(3))):
        assert is_involution(H)
        A = sg.rw_matrix(H)
        assert A.is_symmetric()
        assert all(s == 1 for s in A.row_sums())


@given(small_graphs, small_graphs)
def test_tensor_is_kronecker(G, H):
    T = sg.tensor(G, H)
    assert np.array_equal(walk_counts(T), np.kron(walk_counts(G), walk_counts(H)))


@given(small_graphs, st.integers(0, 10 ** 6))
def test_replacement_matrix_identity(G, seed):
    D = G.d
    H = sg.cycle(D) if D > 2 else sg.parallel_pair(2) if D == 2 else sg.single_vertex(2)
    R = sg.replacement(G, H)
    n = G.n
    rot_perm = np.zeros((n * D, n * D), dtype=np.int64)
    for v in range(n):
        for a in range(D):
            u, b = G.rot(v, a)
            rot_perm[v * D + a, u * D + b] = 1
    cloud = np.kron(np.eye(n, dtype=np.int64), walk_counts(H))
    # counts/(2d) == 1/2 * P + 1/2 * cloud/d, cleared of denominators
    assert np.array_equal(walk_counts(R), H.d * rot_perm + cloud)
    assert is_involution(R)


@given(small_graphs)
def test_lambda_certificate_encloses_true_value(G):
    est = sg.lambda_upper(G, "exact")
    true = second_singular(walk_counts(G) / G.d)
    assert est.certified
    assert true - 1e-9 <= float(est.lambda_upper) <= true + 1e-6
    assert est.lambda_upper <= 1


@given(small_graphs, st.data())
def test_expansion_and_collision_bounds(G, data):
    lam = sg.lambda_upper(G, "exact").lambda_upper
    S = data.draw(st.sets(st.integers(0, G.n - 1), max_size=G.n // 2))
    frac = Fraction(len(S), G.n)
    assert sg.edge_cut(G, S) >= G.d * len(S) * (1 - lam) / 2 - Fraction(G.d, 10 ** 6)
    for l in range(1, 5):
        assert sg.collision_prob(G, l, S) <= frac * (frac + 2 * lam ** l) + Fraction(1, 10 ** 9)
