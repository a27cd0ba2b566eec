import numpy as np
import pytest

import oracles
from wha import BUILTINS, WeakHopf, fp2, fpn, gp2, kz2
from wha.builtins import (
    Groupoid,
    InvalidGroupoid,
    cyclic_group,
    function_algebra,
    groupoid_algebra,
    pair_groupoid,
    trivial_group,
)
from wha.linalg import err, subspace_distance
from wha.weakhopf import NoHaar, NonUniqueHaar, NotApplicable, intersect


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtins_valid(name):
    G = BUILTINS[name]()
    assert G.is_valid()
    # S(B_t) = B_s and the base algebras commute
    assert subspace_distance(G.antipode @ G.Bt, G.Bs) < 1e-10
    A = G.algebra
    for i in range(G.Bt.shape[1]):
        for j in range(G.Bs.shape[1]):
            x, y = G.Bt[:, i], G.Bs[:, j]
            assert err(A.mul(x, y), A.mul(y, x)) < 1e-10


def test_wrong_counit_flagged():
    G = fp2()
    bad = WeakHopf(G.algebra, G.comult, np.ones(4), G.antipode)
    rep = bad.verify()
    assert rep["weak_counit"] > 0.5 and rep["counit"] > 0.5
    assert not bad.is_valid()


def test_shape_check():
    G = fp2()
    with pytest.raises(ValueError):
        WeakHopf(G.algebra, G.comult[:4], G.counit, G.antipode)


class TestCounitalMaps:
    def test_kz2_scalars(self):
        G = kz2()
        assert np.allclose(G.eps_t, np.outer(G.unit, G.counit))
        assert G.Bt.shape[1] == 1

    def test_fp2_target_functions(self):
        G = fp2()
        # eps_t(delta_ij) = delta_ij(units) * indicator of arrows with target i
        want = np.array([[1, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 0, 1]])
        assert np.allclose(G.eps_t, want)
        assert np.allclose(G.eps_t, oracles.eps_t(G))

    @pytest.mark.parametrize("name", sorted(BUILTINS))
    def test_idempotent(self, name):
        G = BUILTINS[name]()
        Et, Es = G.counital_maps()
        assert err(Et @ Et, Et) < 1e-10 and err(Es @ Es, Es) < 1e-10
        assert np.allclose(Et, oracles.eps_t(G))

    def test_gp2_dims(self):
        G = gp2()
        assert G.Bt.shape[1] == 2 and G.Bs.shape[1] == 2


@pytest.mark.parametrize("name,connected,coconnected", [
    ("kz2", True, True), ("fp2", False, True), ("gp2", True, False), ("fp3", False, True),
])
def test_connectivity(name, connected, coconnected):
    G = BUILTINS[name]()
    assert G.connected is connected and G.coconnected is coconnected
    assert G.biconnected is (connected and coconnected)


def test_intersection_helper():
    a = np.eye(3)[:, :2]
    b = np.eye(3)[:, 1:]
    assert subspace_distance(intersect(a, b), np.eye(3)[:, [1]]) < 1e-12


class TestDuality:
    def test_dual_kz2_commutative(self):
        D = kz2().dual()
        assert D.algebra.blocks().dims == [1, 1] and D.is_valid()

    def test_dual_fp2_is_gp2(self):
        D = fp2().dual()
        assert D.algebra.blocks().dims == [2]
        G = gp2()
        assert err(D.algebra.mult, G.algebra.mult) < 1e-12 and err(D.comult, G.comult) < 1e-12

    @pytest.mark.parametrize("name", sorted(BUILTINS))
    def test_bidual(self, name):
        G = BUILTINS[name]()
        D = G.dual().dual()
        assert err(D.algebra.mult, G.algebra.mult) < 1e-12
        assert err(D.comult, G.comult) < 1e-12
        assert err(D.antipode, G.antipode) < 1e-12
        assert err(D.algebra.star, G.algebra.star) < 1e-12


class TestHaar:
    def test_kz2(self):
        assert np.allclose(kz2().h, [1, 0])

    def test_fp2(self):
        assert np.allclose(fp2().h, [0.5] * 4)

    def test_gp2(self):
        # frozen from the linear-system oracle
        assert np.allclose(gp2().h, [1, 0, 0, 1])
        dim, h = oracles.haar(gp2())
        assert dim == 1 and np.allclose(h, [1, 0, 0, 1])

    def test_fp3(self):
        assert np.allclose(fpn(3).h, [1 / 3] * 9)

    @pytest.mark.parametrize("name", sorted(BUILTINS))
    def test_axioms(self, name):
        G = BUILTINS[name]()
        h = G.h
        assert err(h @ G.antipode, h) < 1e-10
        assert err(h @ G.eps_t, G.counit) < 1e-10
        assert err(G.E_t @ G.unit, G.unit) < 1e-10
        assert G.haar.faithful

    def test_direct_sum_still_unique(self):
        # two disjoint copies of kz2: normalisation pins each summand
        G = kz2()
        M = np.zeros((4, 4, 4), complex)
        M[:2, :2, :2] = G.algebra.mult
        M[2:, 2:, 2:] = G.algebra.mult
        D = np.zeros((16, 4), complex)
        Dk = G.comult.reshape(2, 2, 2)
        for off in (0, 2):
            for i in range(2):
                for j in range(2):
                    D[(off + i) * 4 + off + j, off:off + 2] = Dk[i, j]
        W = WeakHopf(type(G.algebra)(M, np.r_[G.unit, G.unit], np.kron(np.eye(2), G.algebra.star)),
                     D, np.r_[G.counit, G.counit], np.kron(np.eye(2), G.antipode))
        assert W.is_valid()
        assert np.allclose(W.h, [1, 0, 1, 0])

    def test_failures(self):
        G = fp2()
        with pytest.raises(NoHaar):
            WeakHopf(G.algebra, G.comult, np.ones(4), G.antipode).haar_measure()
        with pytest.raises(NonUniqueHaar):
            WeakHopf(G.algebra, np.zeros((16, 4)), G.counit, G.antipode).haar_measure()


class TestGroupLike:
    @pytest.mark.parametrize("name", ["kz2", "fp2", "gp2", "fp3"])
    def test_unit(self, name):
        G = BUILTINS[name]()
        assert G.regularity_check()
        assert np.allclose(G.glike, G.unit)
        assert np.allclose(G.dual_glike, G.counit)
        assert G.group_like_defect(G.glike) < 1e-10

    def test_separability_kz2(self):
        G = kz2()
        assert np.allclose(G.separability_element, np.kron(G.unit, G.unit))

    def test_separability_fp2(self):
        # sum_{i,k,j} delta_ik (x) S(delta_kj) = sum delta_ik (x) delta_jk
        want = np.zeros((4, 4))
        idx = {(0, 0): 0, (0, 1): 1, (1, 0): 2, (1, 1): 3}
        for i in range(2):
            for k in range(2):
                for j in range(2):
                    want[idx[(i, k)], idx[(j, k)]] = 1
        assert np.allclose(fp2().separability_element.reshape(4, 4), want)

    def test_irregular_rejected(self):
        G = fp2()
        G.__dict__["regularity_check"] = lambda tol=None: False
        with pytest.raises(NotApplicable):
            G.canonical_group_like()


class TestGroupoids:
    def test_trivial(self):
        G = function_algebra(trivial_group())
        assert G.dim == 1 and G.is_valid()

    def test_pair_groupoid_two(self):
        assert err(function_algebra(pair_groupoid(2)).comult, fp2().comult) == 0

    def test_z2_functions_dual_to_kz2(self):
        F = function_algebra(cyclic_group(2))
        assert F.algebra.blocks().dims == [1, 1]
        assert err(F.dual().comult, kz2().comult) < 1e-12

    def test_groupoid_algebras(self):
        assert groupoid_algebra(pair_groupoid(2)).algebra.blocks().dims == [2]
        G3 = groupoid_algebra(pair_groupoid(3))
        assert G3.dim == 9 and G3.algebra.blocks().dims == [3]

    def test_invalid(self):
        bad = Groupoid(((0, 0), (0, 0)), {(0, 0): 0, (0, 1): 0, (1, 0): 1, (1, 1): 1}, ("a", "b"))
        with pytest.raises(InvalidGroupoid):
            function_algebra(bad)
        missing = Groupoid(((0, 0),), {}, ("a",))
        with pytest.raises(InvalidGroupoid):
            missing.validate()

    def test_fpn_range(self):
        with pytest.raises(ValueError):
            fpn(5)
