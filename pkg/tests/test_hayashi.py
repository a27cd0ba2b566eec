import numpy as np
import pytest

from wha.coaction import source_coaction
from wha.corep import mor_space, registry
from wha.hayashi import (
    PentagonViolation,
    UnsupportedMultiplicity,
    build_dual_algebra,
    build_weak_hopf,
    corrupt_fusion,
    fusion_roundtrip,
    hayashi_functor,
    pointed_fusion,
    trivial_fusion,
    vecz2,
)

Z2 = [[[1, 0], [0, 1]], [[0, 1], [1, 0]]]


@pytest.fixture(scope="module")
def HG():
    return build_weak_hopf(vecz2())


class TestFusionData:
    @pytest.mark.parametrize("Fd", [vecz2(), vecz2(True), pointed_fusion(3), pointed_fusion(3, 1), trivial_fusion()],
                             ids=lambda f: f.name)
    def test_valid(self, Fd):
        assert max(Fd.verify().values()) < 1e-12
        Fd.validate()
        assert Fd.multiplicity_free

    def test_corrupt_breaks_pentagon(self):
        bad = corrupt_fusion(vecz2())
        assert bad.verify()["pentagon"] > 0.1
        with pytest.raises(PentagonViolation):
            bad.validate()

    def test_twisted_symbol(self):
        Fd = vecz2(True)
        assert Fd.f(1, 1, 1, 1, 0, 0) == pytest.approx(-1)
        assert vecz2().f(1, 1, 1, 1, 0, 0) == pytest.approx(1)


class TestFunctor:
    def test_vecz2_modules(self):
        H = hayashi_functor(vecz2())
        assert [m.dim for m in H.modules] == [2, 2]
        assert max(H.verify().values()) < 1e-12

    def test_unit_module(self):
        H = hayashi_functor(vecz2())
        one = H.modules[0]
        assert one.basis == [(0, 0), (1, 1)]

    def test_jinv_shape(self):
        H = hayashi_functor(pointed_fusion(3))
        J = H.jinv(1, 2)
        assert J.shape == (3, 3)

    def test_multiplicity_rejected(self, monkeypatch):
        Fd = vecz2()
        Fd.N = Fd.N * 2
        monkeypatch.setattr(Fd, "validate", lambda tol=None: None)
        with pytest.raises(UnsupportedMultiplicity):
            hayashi_functor(Fd)

    def test_corrupt_rejected_before_build(self):
        with pytest.raises(PentagonViolation):
            hayashi_functor(corrupt_fusion(vecz2()))


class TestWeakHopf:
    def test_vecz2(self, HG):
        G = HG.weak_hopf
        assert G.dim == 8
        assert G.biconnected
        assert max(G.verify().values()) < 1e-9
        assert G.regularity_check()

    def test_trivial_category_is_scalars(self):
        G = build_weak_hopf(trivial_fusion()).weak_hopf
        assert G.dim == 1
        assert np.allclose(G.unit, [1]) and np.allclose(G.counit, [1])

    @pytest.mark.parametrize("Fd", [vecz2(True), pointed_fusion(3)], ids=lambda f: f.name)
    def test_other_categories(self, Fd):
        G = build_weak_hopf(Fd).weak_hopf
        assert max(G.verify().values()) < 1e-9

    def test_comodules(self, HG):
        for x in range(2):
            U = HG.comodule(x)
            assert max(U.verify().values()) < 1e-9
            assert len(mor_space(U, U)) == 1

    def test_comodules_pairwise_distinct(self, HG):
        assert mor_space(HG.comodule(0), HG.comodule(1)) == []

    def test_dual_blocks(self, HG):
        rep = build_dual_algebra(HG)
        assert rep["blocks"] == [2, 2] and rep["match"]
        assert build_dual_algebra(build_weak_hopf(trivial_fusion()))["blocks"] == [1]

    def test_registry_size(self, HG):
        assert registry(HG.weak_hopf).dims == [2, 2]

    def test_source_coaction_ergodic(self, HG):
        assert source_coaction(HG.weak_hopf).ergodic


class TestRoundTrip:
    def test_vecz2(self):
        r = fusion_roundtrip(vecz2())
        assert r.ok and r.table.tolist() == Z2
        assert r.comodule_defect < 1e-9
        assert r.mismatches() == []

    def test_twisted_same_rules(self):
        assert fusion_roundtrip(vecz2(True)).table.tolist() == Z2

    def test_z3(self):
        r = fusion_roundtrip(pointed_fusion(3))
        assert r.ok
        assert r.table[1, 1].tolist() == [0, 0, 1]

    def test_corrupt_raises_before_comparison(self):
        with pytest.raises(PentagonViolation):
            fusion_roundtrip(corrupt_fusion(vecz2()))

    def test_mismatch_reported(self):
        r = fusion_roundtrip(vecz2(), strict=False)
        r.expected = r.expected[:, :, ::-1].copy()
        assert not r.ok and len(r.mismatches()) == 8
