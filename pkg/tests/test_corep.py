import itertools

import numpy as np
import pytest

from wha import BUILTINS, fp2, gp2, kz2
from wha.corep import (
    Comodule,
    Corep,
    InvalidComodule,
    bridge_defect,
    bridge_inverse,
    coefficient_defects,
    coideal_comodule,
    comodule_to_corep,
    conjugate,
    conjugate_equation_defects,
    corep_to_comodule,
    decompose,
    decomposition_defect,
    dual_module_bridge,
    mor_space,
    multiplicities,
    peter_weyl,
    registry,
    regular_corep,
    rigidity,
    tensor,
    trivial_corep,
    unit_defects,
)
from wha.linalg import err, range_basis, rank, subspace_distance

SMALL = ["kz2", "fp2", "gp2", "fp3"]


@pytest.fixture(scope="module", params=sorted(BUILTINS))
def G(request):
    return BUILTINS[request.param]()


def test_corep_axioms(G):
    for U in [regular_corep(G), trivial_corep(G), *registry(G).reps]:
        assert max(U.verify().values()) < 1e-9, U.name


def test_trivial_corep_kz2():
    G = kz2()
    U = trivial_corep(G)
    assert U.hdim == 1
    assert np.allclose(U.coeffs[0, 0], G.unit)
    assert np.allclose(U.operator, np.eye(2))


def test_regular_corep_fp2_is_delta():
    G = fp2()
    U = regular_corep(G)
    assert max(U.verify().values()) < 1e-12
    # in the h-orthonormal basis sqrt(2) delta_g the coefficients are Delta's
    Y = U.embedding
    n = G.dim
    D = np.stack([G.delta(Y[:, j]).reshape(n, n) for j in range(n)], 1)
    assert err(np.einsum("ijk,ai->ajk", U.coeffs, Y), D) < 1e-12


def test_non_coideal_rejected():
    with pytest.raises(InvalidComodule):
        coideal_comodule(fp2(), np.eye(4)[:, [1]])


def test_comodule_roundtrip(G):
    for U in [regular_corep(G), *registry(G).reps]:
        M = corep_to_comodule(U)
        assert M.is_valid()
        back = comodule_to_corep(M)
        assert err(back.coeffs, U.coeffs) < 1e-8


def test_trivial_comodule_is_v_tensor_one():
    G = kz2()
    M = corep_to_comodule(trivial_corep(G))
    assert np.allclose(M.coaction_map[:, 0], np.kron([1], G.unit))


def test_invalid_comodule_rejected():
    G = kz2()
    M = Comodule(G, np.array([[1.0], [1.0]]))
    assert not M.is_valid()
    with pytest.raises(InvalidComodule):
        comodule_to_corep(M)


def test_bridge(G):
    for U in [trivial_corep(G), *registry(G).reps]:
        rho = dual_module_bridge(U)
        assert max(bridge_defect(G, rho).values()) < 1e-9
        assert err(bridge_inverse(G, rho).coeffs, U.coeffs) == 0


def test_bridge_regular_fp2_image_algebra():
    G = fp2()
    rho = dual_module_bridge(regular_corep(G))
    # image of the dual (GP2 = M_2) acting on C^4: two copies of C^2
    span = range_basis(np.stack([r.reshape(-1) for r in rho], 1))
    assert span.shape[1] == 4


class TestMorphisms:
    def test_schur(self, G):
        for U in registry(G).reps:
            assert len(mor_space(U, U)) == 1

    def test_unit_simple_iff_coconnected(self):
        assert len(mor_space(trivial_corep(fp2()), trivial_corep(fp2()))) == 1
        assert len(mor_space(trivial_corep(gp2()), trivial_corep(gp2()))) == 2

    def test_regular_fp2_endomorphisms(self):
        W = regular_corep(fp2())
        assert len(mor_space(W, W)) == 4

    def test_intertwiners_intertwine(self, G):
        W = regular_corep(G)
        for T in mor_space(W, W)[:3]:
            assert err(np.einsum("ai,ijk->ajk", T, W.coeffs), np.einsum("abk,bj->ajk", W.coeffs, T)) < 1e-9


class TestDecomposition:
    def test_irreducible_single_summand(self, G):
        reg = registry(G)
        for x, U in enumerate(reg.reps):
            s = decompose(U, reg)
            assert len(s) == 1 and s[0].label == x
            assert abs(abs(np.linalg.det(s[0].isometry)) - 1) < 1e-9

    def test_fp2_regular(self):
        G = fp2()
        reg = registry(G)
        assert reg.dims == [2]
        assert multiplicities(decompose(regular_corep(G), reg), reg) == {"x0": 2}

    def test_kz2_regular(self):
        G = kz2()
        reg = registry(G)
        assert reg.dims == [1, 1]
        assert multiplicities(decompose(regular_corep(G), reg), reg) == {"x0": 1, "x1": 1}

    def test_defects(self, G):
        W = regular_corep(G)
        reg = registry(G)
        assert max(decomposition_defect(W, decompose(W, reg), reg).values()) < 1e-9

    def test_seed_independent_classes(self):
        G = fp2()
        reg = registry(G)
        W = regular_corep(G)
        a = multiplicities(decompose(W, reg, seed=0), reg)
        b = multiplicities(decompose(W, reg, seed=11), reg)
        assert a == b


class TestTensor:
    def test_unit_laws(self, G):
        for U in registry(G).reps:
            assert max(unit_defects(U).values()) < 1e-9
            one = trivial_corep(G)
            assert len(mor_space(tensor(one, U).corep, U)) == 1
            assert len(mor_space(tensor(U, one).corep, U)) == 1

    def test_fp2_square(self):
        x = registry(fp2()).reps[0]
        t = tensor(x, x)
        assert t.corep.hdim == rank(t.P) == 2
        assert err(t.P @ t.P, t.P) < 1e-12
        assert multiplicities(decompose(t.corep), registry(fp2())) == {"x0": 1}

    def test_kz2_fusion_is_z2(self):
        G = kz2()
        reg = registry(G)
        # position of each group element (e = [1, 0], g = [0, 1]) in the registry
        elt = [int(np.argmax(np.abs(U.coeffs[0, 0]))) for U in reg.reps]
        label = {e: x for x, e in enumerate(elt)}
        for a, b in itertools.product(range(2), repeat=2):
            s = decompose(tensor(reg.reps[a], reg.reps[b]).corep, reg)
            assert [t.label for t in s] == [label[elt[a] ^ elt[b]]]

    @pytest.mark.parametrize("name", SMALL)
    def test_frobenius_reciprocity(self, name):
        G = BUILTINS[name]()
        reps = registry(G).reps
        for U, V, W in itertools.product(reps, repeat=3):
            lhs = len(mor_space(tensor(U, V).corep, W))
            rhs = len(mor_space(V, tensor(conjugate(U), W).corep))
            assert lhs == rhs


class TestConjugation:
    def test_trivial_self_conjugate(self, G):
        one = trivial_corep(G)
        Ts = mor_space(conjugate(one), one)
        assert len(Ts) == len(mor_space(one, one))
        # a generic combination is invertible, so the two are isomorphic
        T = sum((k + 1.3) * t for k, t in enumerate(Ts))
        assert abs(np.linalg.det(T)) > 1e-6

    def test_double_conjugate(self, G):
        for U in registry(G).reps:
            Ts = mor_space(conjugate(conjugate(U)), U)
            assert len(Ts) == 1 and abs(np.linalg.det(Ts[0])) > 1e-6

    def test_fp2_self_conjugate(self):
        x = registry(fp2()).reps[0]
        assert len(mor_space(x, conjugate(x))) == 1

    def test_conjugate_equations(self, G):
        for U in [trivial_corep(G), *registry(G).reps]:
            assert max(conjugate_equation_defects(rigidity(U)).values()) < 1e-9

    def test_kz2_sign_character(self):
        G = kz2()
        g = next(U for U in registry(G).reps if np.allclose(U.coeffs[0, 0], [0, 1]))
        r = rigidity(g)
        assert np.allclose(r.R, [[1]]) and np.allclose(r.Rbar, [[1]])
        assert np.allclose(r.Ubar.coeffs[0, 0], [0, 1])

    def test_trivial_rigidity_is_unit_isometry(self):
        G = fp2()
        r = rigidity(trivial_corep(G))
        assert err(r.R.conj().T @ r.R, np.eye(r.R.shape[1])) < 1e-9


class TestCoefficients:
    def test_trivial_span_is_BtBs(self, G):
        A = G.algebra
        prods = [A.mul(G.Bt[:, i], G.Bs[:, j]) for i in range(G.Bt.shape[1]) for j in range(G.Bs.shape[1])]
        assert subspace_distance(trivial_corep(G).span(), range_basis(np.stack(prods, 1))) < 1e-9

    def test_regular_span_fp2(self):
        assert regular_corep(fp2()).span().shape[1] == 4

    def test_kz2_group_likes(self):
        G = kz2()
        for U in registry(G).reps:
            c = U.coeffs[0, 0]
            assert err(G.delta(c), np.kron(c, c)) < 1e-12
            assert max(coefficient_defects(U).values()) < 1e-12

    def test_peter_weyl(self, G):
        pw = peter_weyl(G)
        dims = registry(G).dims
        assert [s.shape[1] for s in pw.spans] == [d * d for d in dims]
        assert err(sum(pw.projections), np.eye(G.dim)) < 1e-9
        for P in pw.projections:
            assert err(P @ P, P) < 1e-9
        assert pw.multiplicities == {l: d for l, d in zip(registry(G).labels, dims)}


def test_corep_shape_check():
    with pytest.raises(ValueError):
        Corep(fp2(), np.zeros((2, 3, 4)))


def test_zero_corep_decomposes_to_nothing():
    G = gp2()
    assert decompose(Corep(G, np.zeros((0, 0, G.dim)))) == []
