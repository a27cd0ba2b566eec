import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wha import FiniteCStarAlgebra, fp2, fpn, gns, gp2, kz2, matrix_algebra
from wha.algebra import NotFaithful, check_conditional_expectation, is_conditional_expectation
from wha.linalg import NotPSD, dag, err, subspace_distance


def test_builtin_algebras_satisfy_axioms():
    for A in (kz2().algebra, fp2().algebra, gp2().algebra, matrix_algebra([1, 2, 3])):
        assert max(A.verify().values()) < 1e-12


def test_corrupted_product_flags_associativity():
    A = kz2().algebra
    M = A.mult.copy()
    M[0, 0, 1] += 0.1          # e * g acquires a 0.1 e component
    rep = FiniteCStarAlgebra(M, A.unit, A.star).verify()
    assert rep["associativity"] == pytest.approx(0.1, abs=1e-12)


def test_shape_validation():
    with pytest.raises(ValueError):
        FiniteCStarAlgebra(np.zeros((2, 2, 2)), np.ones(3), np.eye(2))


def test_non_c_star_positivity_flag():
    # C[x]/(x^2): not semisimple, the trace form is degenerate
    M = np.zeros((2, 2, 2))
    M[0, 0, 0] = M[1, 0, 1] = M[1, 1, 0] = 1
    A = FiniteCStarAlgebra(M, [1, 0], np.eye(2))
    assert A.verify()["positivity"] == 1.0


class TestBlocks:
    def test_kz2_two_characters(self):
        bs = kz2().algebra.blocks()
        assert bs.dims == [1, 1]
        projs = sorted((tuple(np.round(p.real, 12)) for p in bs.central_projections))
        assert projs == [(0.5, -0.5), (0.5, 0.5)]

    def test_gp2_single_block(self):
        assert gp2().algebra.blocks().dims == [2]

    def test_fp2_commutative(self):
        assert fp2().algebra.blocks().dims == [1, 1, 1, 1]

    def test_order_is_size_descending(self):
        assert matrix_algebra([1, 3, 2]).blocks().dims == [3, 2, 1]

    def test_matrix_units(self):
        A = matrix_algebra([2, 1])
        for u, d in zip(A.blocks().units, A.blocks().dims):
            for i in range(d):
                for j in range(d):
                    assert err(A.adj(u[i, j]), u[j, i]) < 1e-10
                    for k in range(d):
                        for l in range(d):
                            want = u[i, l] if j == k else 0 * u[i, l]
                            assert err(A.mul(u[i, j], u[k, l]), want) < 1e-10

    def test_block_roundtrip(self):
        A = gp2().algebra
        x = np.arange(4) + 1j
        assert err(A.from_blocks(A.to_blocks(x)), x) < 1e-10


class TestFunctionals:
    def test_positive(self):
        A = fp2().algebra
        assert A.is_positive([1, 2, 0, 3])
        assert not A.is_positive([1, -1, 0, 0])
        assert A.is_positive_functional([0.25] * 4, faithful=True)
        assert not A.is_positive_functional([1, 0, 0, 0], faithful=True)

    def test_element_functions(self):
        A = gp2().algebra
        x = A.mul(A.adj([1, 2, 0, 1j]), [1, 2, 0, 1j]) + A.unit
        r = A.element_sqrt(x)
        assert err(A.mul(r, r), x) < 1e-10
        assert err(A.mul(A.element_inverse(x), x), A.unit) < 1e-10
        assert err(A.element_power(x, 0.5), r) < 1e-10

    def test_subalgebra(self):
        G = fp2()
        S = G.algebra.subalgebra(G.Bt)
        assert S.dim == 2 and max(S.verify().values()) < 1e-10
        assert G.algebra.span_closure_defect(G.Bt) < 1e-10
        with pytest.raises(ValueError):
            G.algebra.subalgebra(np.array([[1.0], [0], [0], [0]]) + 0.5)


class TestGNS:
    def test_kz2_regular_representation(self):
        A = kz2().algebra
        g = gns(A, [1, 0])
        assert g.dim == 2 and g.faithful
        assert np.allclose(g.rep([0, 1]), [[0, 1], [1, 0]])

    def test_fp2_uniform_conjugation(self):
        A = fp2().algebra
        g = gns(A, [0.25] * 4)
        assert g.dim == 4
        assert np.allclose(g.J, np.eye(4))
        assert np.allclose(g.modular_operator(), np.eye(4))

    def test_not_faithful(self):
        with pytest.raises(NotFaithful):
            gns(fp2().algebra, [1, 0, 0, 0], faithful=True)
        g = gns(fp2().algebra, [1, 0, 0, 0])
        assert g.dim == 1 and not g.faithful
        with pytest.raises(NotFaithful):
            g.tomita()

    def test_negative_functional(self):
        with pytest.raises(NotPSD):
            gns(fp2().algebra, [1, -1, 0, 0])

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_modular_theory_matrix_block(self, seed):
        rng = np.random.default_rng(seed)
        A = matrix_algebra([2])
        x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = x @ dag(x) + 0.1 * np.eye(2)
        rho /= np.trace(rho).real
        # phi(e_ij) = rho_ji
        phi = np.array([rho[j, i] for i in range(2) for j in range(2)])
        g = gns(A, phi, faithful=True)
        J = g.J
        assert err(J @ np.conj(J), np.eye(4)) < 1e-8
        a, b = rng.normal(size=4), rng.normal(size=4)
        # j(A) commutes with pi(A)
        assert err(g.rep(a) @ g.j_map(b), g.j_map(b) @ g.rep(a)) < 1e-8
        assert abs(g.inner(a, b) - phi @ A.mul(A.adj(b), a)) < 1e-10


class TestConditionalExpectation:
    def test_identity(self):
        A = fp2().algebra
        assert is_conditional_expectation(np.eye(4), A, np.eye(4))

    def test_state_times_unit(self):
        A = fp2().algebra
        E = np.outer(A.unit, [0.25] * 4)
        assert is_conditional_expectation(E, A, A.unit[:, None])

    def test_non_idempotent_rejected(self):
        A = fp2().algebra
        E = A.left([1, 2, 3, 4])
        rep = check_conditional_expectation(E, A, np.eye(4))
        assert rep["idempotent"] > 1
        assert not is_conditional_expectation(E, A, np.eye(4))

    def test_haar_expectation_onto_target(self):
        G = fpn(3)
        rep = check_conditional_expectation(G.E_t, G.algebra, G.Bt)
        assert max(rep.values()) < 1e-10
        assert subspace_distance(G.E_t, G.Bt) < 1e-10
