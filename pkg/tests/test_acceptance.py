"""The eleven acceptance criteria, one test each.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""
import numpy as np
import pytest

import oracles
from wha import BUILTINS, build_weak_hopf, fusion_roundtrip, regular_coaction, source_coaction, vecz2
from wha.coaction import coideal_coaction
from wha.corep import (
    conjugate_equation_defects,
    decompose,
    multiplicities,
    peter_weyl,
    registry,
    regular_corep,
    rigidity,
    unit_defects,
)
from wha.reconstruction import (
    associativity_defect,
    build_g_algebra,
    g_algebra_report,
    projection_laws,
    rechoice_invariance,
    roundtrip_spec_weak,
    spectral_functor,
)


def _groupoids():
    out = {name: f() for name, f in BUILTINS.items()}
    out["vecz2-hayashi"] = build_weak_hopf(vecz2()).weak_hopf
    return out


GROUPOIDS = _groupoids()
ROUNDTRIP = {"fp2/regular": regular_coaction(BUILTINS["fp2"]()),
             "fp2/source": source_coaction(BUILTINS["fp2"]())}


def _worst(d):
    return max(d.values(), default=0.0)




@pytest.mark.criterion(1, "axiom suites")
def test_criterion_01_axioms():
    names = ["kz2", "fp2", "gp2", "fp3", "fp4", "vecz2-hayashi"]
    worst = {n: _worst(GROUPOIDS[n].verify()) for n in names}
    assert all(v < 1e-8 for v in worst.values()), worst


@pytest.mark.criterion(2, "Haar measure")
def test_criterion_02_haar():
    for name, G in GROUPOIDS.items():
        dim, h_oracle = oracles.haar(G)
        assert dim == 1, name
        h = G.haar_measure().functional
        assert np.max(np.abs(h - h_oracle)) < 1e-8, name
        # positive faithful: the Gram matrix h(b_i* b_j) is positive definite
        M, star = G.algebra.mult, G.algebra.star
        gram = np.array([[h @ oracles.product(M, np.conj(star[:, i]), np.eye(G.dim)[j])
                          for j in range(G.dim)] for i in range(G.dim)])
        assert np.min(np.linalg.eigvalsh((gram + gram.conj().T) / 2)) > 1e-10, name
        Bt = G.Bt
        assert np.max(np.abs(h @ Bt - G.counit @ Bt)) < 1e-8, name
    # frozen value of the linear-system oracle on fp2
    h = GROUPOIDS["fp2"].haar_measure().functional
    assert np.allclose(h, [0.5, 0.5, 0.5, 0.5], atol=1e-12)


@pytest.mark.criterion(3, "duality")
def test_criterion_03_duality():
    for name, G in GROUPOIDS.items():
        D = G.dual().dual()
        for a, b in [(D.algebra.mult, G.algebra.mult), (D.algebra.star, G.algebra.star),
                     (D.algebra.unit, G.algebra.unit), (D.comult, G.comult),
                     (D.counit, G.counit), (D.antipode, G.antipode)]:
            assert np.max(np.abs(a - b)) < 1e-8, name
    assert sorted(GROUPOIDS["fp2"].dual().algebra.blocks().dims) == [2]


@pytest.mark.criterion(4, "Peter-Weyl decomposition")
def test_criterion_04_peter_weyl():
    for name, G in GROUPOIDS.items():
        reg = registry(G)
        mult = multiplicities(decompose(regular_corep(G), reg), reg)
        assert [mult.get(l, 0) for l in reg.labels] == reg.dims, name
        assert sum(d * d for d in reg.dims) == G.dim, name
        spans = peter_weyl(G).spans
        assert sum(s.shape[1] for s in spans) == G.dim, name
        assert np.linalg.matrix_rank(np.hstack(spans), tol=1e-8) == G.dim, name


@pytest.mark.criterion(5, "corepresentation calculus")
def test_criterion_05_corep_calculus():
    worst = {}
    for name, G in GROUPOIDS.items():
        for U in registry(G).reps:
            r = U.verify()
            defects = {"initial": r["initial_projection"], "final": r["final_projection"],
                       **unit_defects(U), **conjugate_equation_defects(rigidity(U))}
            worst[name] = max(worst.get(name, 0.0), _worst(defects))
    assert all(v < 1e-8 for v in worst.values()), worst


@pytest.mark.criterion(6, "coaction of the comultiplication")
def test_criterion_06_regular_coaction():
    for name, G in GROUPOIDS.items():
        C = regular_coaction(G)
        F = C.fixed_points
        assert F.shape[1] == G.Bt.shape[1], name
        assert oracles.distance(F, G.Bt) < 1e-9, name
        # membership of B_t in the oracle fixed-point space
        assert oracles.distance(oracles.fixed_points(C), G.Bt) < 1e-9, name
        assert _worst(C.conditional_expectation_report()) < 1e-8, name
        assert _worst(C.canonical_implementation().report()) < 1e-8, name


@pytest.mark.criterion(7, "spectral theory")
def test_criterion_07_spectral():
    for name, G in GROUPOIDS.items():
        for C in (regular_coaction(G), source_coaction(G)):
            sd = C.spectral_decomposition()
            assert sum(sd.dims) == C.m, name
            assert np.linalg.matrix_rank(np.hstack(sd.parts), tol=1e-8) == C.m, name
            if G.coconnected and G.regularity_check():
                assert C.a_epsilon_factorization()["distance"] < 1e-8, name
        # fixed points of a coideal are its intersection with B_t
        Cs = coideal_coaction(G, G.Bs)
        Bs, Bt = G.Bs, G.Bt
        from scipy.linalg import null_space
        N = null_space(np.hstack([Bs, -Bt]))
        inter = Bs @ N[:Bs.shape[1]]
        fixed_in_B = Bs @ Cs.fixed_points
        assert oracles.distance(fixed_in_B, inter) < 1e-8, name


@pytest.mark.criterion(8, "Hayashi reconstruction")
def test_criterion_08_hayashi():
    Fd = vecz2()
    G = build_weak_hopf(Fd).weak_hopf
    assert G.dim == 8
    assert G.biconnected and G.regularity_check()
    assert _worst(G.verify()) < 1e-8
    rep = fusion_roundtrip(Fd)
    assert rep.ok and rep.mismatches() == []
    z2 = np.array([[[int((a + b) % 2 == c) for c in range(2)] for b in range(2)] for a in range(2)])
    assert np.array_equal(rep.table, z2)


@pytest.mark.criterion(9, "module-category round trip")
def test_criterion_09_roundtrip():
    for name, C in ROUNDTRIP.items():
        rep = roundtrip_spec_weak(C, strict=False)
        assert _worst(rep) < 1e-7, (name, rep)
        assert rechoice_invariance(C, trials=5, seed=2024) < 1e-7, name


@pytest.mark.criterion(10, "reconstruction algebra laws")
def test_criterion_10_algebra_laws():
    for name, C in ROUNDTRIP.items():
        GA = build_g_algebra(spectral_functor(C))
        laws = projection_laws(GA, seed=7, samples=6)
        assert _worst(laws) < 1e-8, (name, laws)
        assert associativity_defect(GA.algebra)[0] < 1e-8, name
        report = g_algebra_report(GA)
        assert _worst(report) < 1e-8, (name, report)


@pytest.mark.criterion(11, "oracle cross-checks")
def test_criterion_11_oracles():
    for name, G in GROUPOIDS.items():
        reps = registry(G).reps
        for C in (regular_coaction(G), source_coaction(G)):
            assert oracles.distance(C.fixed_points, oracles.fixed_points(C)) < 1e-9, name
            for U in reps:
                d = oracles.distance(C.spectral_subspace(U), oracles.spectral_subspace(C, U.coeffs))
                assert d < 1e-9, (name, U.name, d)
