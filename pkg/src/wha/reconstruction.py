"""Spectral functors and the reconstruction of G-C*-algebras from them.

For a coaction ``(A, a)`` and a corepresentation ``U`` with orthonormal basis
``xi_i`` the spectral space is

    F(U) = { X = sum_i xi_i (x) a_i :  a(a_i) = sum_j a_j (x) Ubar_ji },

with ``Ubar`` the coefficients of the conjugate corepresentation, i.e. the
tensors whose legs ``xibar_i -> a_i`` form a comodule map ``Hbar_U -> A``.
``X`` is stored as a ``(d, m)`` array.  Elements of ``A_U = F(U) (x) Hbar_U``
are stored as ``(d, m, d)`` arrays ``W`` with ``W[:, :, l]`` the ``F(U)``
component paired with ``xibar_l``; the evaluation map is then the trace
``Theta(W) = sum_i W[i, :, i]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .algebra import FiniteCStarAlgebra
from .coaction import (
    Coaction,
    generator_module,
    module_morphisms,
    module_tensor,
)
from .corep import (
    Corep,
    Summand,
    _unit_data,
    conjugate,
    decompose,
    left_unit_map,
    registry,
    rigidity,
    right_unit_map,
    tensor,
)
from .linalg import DEFAULT_TOL, Tolerance, dag, err, null_space, random_unitary, subspace_distance
from .weakhopf import NotApplicable


class FunctorInvalid(RuntimeError):
    pass


class NonAssociative(RuntimeError):
    def __init__(self, worst, triple):
        super().__init__(f"product not associative: defect {worst:.3e} at basis triple {triple}")
        self.worst, self.triple = worst, triple


class RoundTripFailure(RuntimeError):
    def __init__(self, report):
        worst = max(report, key=report.get)
        super().__init__(f"round trip failed: {worst} = {report[worst]:.3e}")
        self.report = report


# -- the spectral functor ----------------------------------------------------------


class SpectralFunctor:
    """The weak tensor functor ``UCorep(G) -> Corr(R)`` of a coaction, ``R = A^a``."""

    def __init__(self, coaction: Coaction, tol: Tolerance = DEFAULT_TOL):
        self.coaction = coaction
        self.tol = tol
        self._spaces: dict[int, np.ndarray] = {}
        self._keep: list = []

    # -- shorthand
    @property
    def A(self) -> FiniteCStarAlgebra:
        return self.coaction.algebra

    @property
    def G(self):
        return self.coaction.parent

    @cached_property
    def registry(self):
        return registry(self.G)

    @cached_property
    def base(self) -> np.ndarray:
        """Basis of ``R = A^a`` inside ``A``."""
        return self.coaction.fixed_points

    @cached_property
    def phi(self) -> np.ndarray:
        """Faithful state used for scalar products: the normalised regular trace of ``A``."""
        t = self.A.regular_trace()
        return t / (t @ self.A.unit)

    # -- R-correspondence structure
    def inner(self, X, Y) -> np.ndarray:
        """``<X, Y> = sum_i a_i* b_i``."""
        A = self.A
        return np.einsum("kpq,pi,iq->k", A.mult, A.star @ np.conj(X).T, Y, optimize=True)

    def scalar(self, X, Y) -> complex:
        return complex(self.phi @ self.inner(X, Y))

    def left(self, r, X) -> np.ndarray:
        """``r.X = sum_i xi_i (x) r a_i``."""
        return (self.A.left(r) @ X.T).T

    def right(self, X, r) -> np.ndarray:
        return (self.A.right(r) @ X.T).T

    def space(self, U: Corep) -> np.ndarray:
        """Basis of ``F(U)``: array ``(f, d, m)``, orthonormal for ``phi(<X, Y>)``."""
        key = id(U)
        if key in self._spaces:
            return self._spaces[key]
        C = self.coaction
        d, m, n = U.hdim, C.m, C.n
        Ub = conjugate(U).coeffs                                   # (d, d, n)
        # a(a_i) - sum_j a_j (x) Ubar_ji = 0 for all i
        L = np.zeros((d, m * n, d, m), dtype=complex)
        for i in range(d):
            L[i, :, i, :] += C.amap
            for j in range(d):
                L[i, :, j, :] -= np.kron(np.eye(m), Ub[j, i][:, None])
        N = null_space(L.reshape(d * m * n, d * m), self.tol)
        basis = N.T.reshape(N.shape[1], d, m)
        if basis.shape[0]:
            g = np.array([[self.scalar(x, y) for y in basis] for x in basis])
            w, v = np.linalg.eigh((g + dag(g)) / 2)
            basis = np.einsum("sb,sim->bim", v / np.sqrt(w)[None, :], basis)
        self._spaces[key] = basis
        self._keep.append(U)
        return basis

    def coords(self, U: Corep, X) -> tuple[np.ndarray, float]:
        """Coordinates of ``X`` in the basis of ``F(U)`` and the residual."""
        B = self.space(U).reshape(len(self.space(U)), U.hdim * self.coaction.m).T
        if B.shape[1] == 0:
            return np.zeros(0, dtype=complex), float(np.linalg.norm(X))
        c, *_ = np.linalg.lstsq(B, np.reshape(X, -1), rcond=None)
        return c, float(np.linalg.norm(B @ c - np.reshape(X, -1)))

    def in_space(self, U: Corep, X) -> float:
        return self.coords(U, X)[1]

    # -- tensor structure
    def J_ambient(self, X, Y) -> np.ndarray:
        """``Y_23 X_13`` in ``H_U (x) H_V (x) A``: entries ``b_j a_i``."""
        A = self.A
        out = np.einsum("cba,jb,ia->ijc", A.mult, Y, X, optimize=True)
        return out.reshape(X.shape[0] * Y.shape[0], -1)

    def J(self, tp, X, Y) -> np.ndarray:
        """``J_{U,V}(X (x) Y)`` in ``F(U (*) V)`` (carrier coordinates of ``tp``)."""
        return dag(tp.Q) @ self.J_ambient(X, Y)

    @staticmethod
    def apply(T, X) -> np.ndarray:
        """``F(T) X = (T (x) id) X``."""
        return T @ X

    def S_star(self, Y, Z) -> np.ndarray:
        """``S*_Y Z = sum_i xi_i (x) sum_j b_j* z_ij`` for ``Z`` of shape ``(d_U, d_V, m)``."""
        A = self.A
        Ys = (A.star @ np.conj(Y).T).T
        return np.einsum("cab,ja,ijb->ic", A.mult, Ys, Z, optimize=True)

    # -- the unit object
    @cached_property
    def unit_object(self) -> Corep:
        return _unit_data(self.G)

    @cached_property
    def unit_vector(self) -> np.ndarray:
        """Coordinates of ``1_B`` in the orthonormal basis of ``H_1 = B_s``."""
        one = self.unit_object
        K = self.G.h_gram
        return dag(one.embedding) @ K @ self.G.unit

    def iota_inv(self, X) -> np.ndarray:
        """``F(1) -> R``: ``X -> (1bar (x) id) X``."""
        return np.conj(self.unit_vector) @ X

    @cached_property
    def unit_element(self) -> np.ndarray:
        """``X_1`` in ``F(1)`` with ``iota_inv(X_1) = 1_A``."""
        return self.iota(self.A.unit)

    def iota(self, r) -> np.ndarray:
        basis = self.space(self.unit_object)
        imgs = np.stack([self.iota_inv(b) for b in basis], 1)
        c, *_ = np.linalg.lstsq(imgs, r, rcond=None)
        if err(imgs @ c, r) > 1e-7:
            raise FunctorInvalid("element is not in the base algebra")
        return np.einsum("s,sim->im", c, basis)

    # -- rigidity and the bullet maps
    def rigidity(self, U: Corep):
        rig = getattr(U, "_rig", None)
        if rig is None:
            rig = rigidity(U)
            U._rig = rig
            self._keep.append(U)
        return rig

    def bullet(self, U: Corep, X) -> np.ndarray:
        """``X. = S*_X F(R_U)(1)`` in ``F(Ubar)``."""
        rig = self.rigidity(U)
        Z = rig.R @ self.unit_element                            # (dUb*dU, m)
        return self.S_star(X, Z.reshape(rig.Ubar.hdim, U.hdim, -1))

    def vector_bullet(self, U: Corep) -> np.ndarray:
        """Rows ``l``: coordinates of ``(xi_l). = (xibar_l (x) id) Rbar_U(1)`` in ``H_Ubar``."""
        rig = self.rigidity(U)
        v = rig.Rbar @ self.unit_vector
        return v.reshape(U.hdim, rig.Ubar.hdim)

    # -- Def "weak" checks ------------------------------------------------------
    def check(self, reps=None, seed: int = 0) -> dict[str, float]:
        """Conditions (i)-(v) on the registry (or ``reps``), (i)-(iv) before (v)."""
        reps = reps if reps is not None else self.registry.reps
        A = self.A
        rng = np.random.default_rng(seed)
        R = self.base
        rs = [R @ (rng.normal(size=R.shape[1]) + 1j * rng.normal(size=R.shape[1])) for _ in range(2)]
        res = dict.fromkeys(
            ["inner_in_R", "inner_right_linear", "inner_hermitian", "left_action_closed",
             "right_action_closed", "J_in_target", "J_isometric", "J_balanced", "J_bilinear",
             "J_natural", "unit_identification", "left_unit", "right_unit", "J_associative",
             "S_adjoint", "S_star_identity"], 0.0)
        rank_R = R.shape[1]

        def in_R(x):
            c, *_ = np.linalg.lstsq(R, x, rcond=None)
            return err(R @ c, x)

        spaces = {id(U): self.space(U) for U in reps}
        for U in reps:
            for X in spaces[id(U)]:
                for Y in spaces[id(U)]:
                    ip = self.inner(X, Y)
                    res["inner_in_R"] = max(res["inner_in_R"], in_R(ip))
                    res["inner_hermitian"] = max(res["inner_hermitian"], err(A.adj(ip), self.inner(Y, X)))
                    for r in rs:
                        res["inner_right_linear"] = max(res["inner_right_linear"],
                                                        err(self.inner(X, self.right(Y, r)), A.mul(ip, r)))
                for r in rs:
                    res["left_action_closed"] = max(res["left_action_closed"], self.in_space(U, self.left(r, X)))
                    res["right_action_closed"] = max(res["right_action_closed"], self.in_space(U, self.right(X, r)))
        # (ii) F(1) = R
        one = self.unit_object
        F1 = self.space(one)
        res["unit_identification"] = float(abs(F1.shape[0] - rank_R))
        for r in rs:
            for s in rs:
                res["unit_identification"] = max(res["unit_identification"],
                                                 err(self.inner(self.iota(r), self.iota(s)), A.mul(A.adj(r), s)))
        # (i), (iii) and (v) on pairs
        for U in reps:
            for V in reps:
                tp = tensor(U, V, self.tol)
                W = tp.corep
                FU, FV = spaces[id(U)], spaces[id(V)]
                for X in FU:
                    for Y in FV:
                        Z = self.J(tp, X, Y)
                        res["J_in_target"] = max(res["J_in_target"], self.in_space(W, Z),
                                                 err(tp.Q @ Z, self.J_ambient(X, Y)))
                        r = rs[0]
                        res["J_balanced"] = max(res["J_balanced"],
                                                err(self.J(tp, self.left(r, X), Y), self.J(tp, X, self.right(Y, r))))
                        res["J_bilinear"] = max(res["J_bilinear"],
                                                err(self.J(tp, self.right(X, r), Y), self.right(Z, r)),
                                                err(self.J(tp, X, self.left(r, Y)), self.left(r, Z)))
                        for X2 in FU:
                            for Y2 in FV:
                                lhs = self.inner(Z, self.J(tp, X2, Y2))
                                rhs = self.inner(X, self.left(self.inner(Y, Y2), X2))
                                res["J_isometric"] = max(res["J_isometric"], err(lhs, rhs))
                # naturality along the decomposition isometries of U (*) V
                for s in decompose(W, self.registry, self.tol):
                    Ux = self.registry.reps[s.label]
                    T = np.kron(s.isometry, np.eye(V.hdim))
                    for X in self.space(Ux)[:2]:
                        for Y in FV[:2]:
                            lhs = self.J_ambient(self.apply(s.isometry, X), Y)
                            res["J_natural"] = max(res["J_natural"], err(lhs, T @ self.J_ambient(X, Y)))
            # (iii) unit laws
            lmap, rmap = left_unit_map(U, one), right_unit_map(U, one)
            for X in spaces[id(U)]:
                for r in rs:
                    Xr = self.iota(r)
                    left = lmap @ self.J_ambient(Xr, X)
                    right = rmap @ self.J_ambient(X, Xr)
                    res["left_unit"] = max(res["left_unit"], err(left, self.right(X, r)))
                    res["right_unit"] = max(res["right_unit"], err(right, self.left(r, X)))
        # (iv) associativity in the ambient H_U (x) H_V (x) H_W (x) A
        for U in reps[:3]:
            for V in reps[:3]:
                for Wc in reps[:3]:
                    for X in spaces[id(U)][:1]:
                        for Y in spaces[id(V)][:1]:
                            for Zc in spaces[id(Wc)][:1]:
                                a = self.J_ambient(self.J_ambient(X, Y), Zc)
                                YZ = self.J_ambient(Y, Zc).reshape(V.hdim, Wc.hdim, -1)
                                # J(X (x) J(Y (x) Z)) with the composite leg order U, V, W
                                b = np.einsum("cba,jkb,ia->ijkc", A.mult, YZ, X).reshape(a.shape)
                                res["J_associative"] = max(res["J_associative"], err(a, b))
        # (v) S_Y adjointable, adjoint equals the formula, and J(id (x) S*_Y) = S*_Y J
        for U in reps:
            for V in reps:
                tp = tensor(U, V, self.tol)
                FU = spaces[id(U)]
                FW = self.space(tp.corep)
                if not len(FU) or not len(FW):
                    continue
                for Y in spaces[id(V)]:
                    Smat = np.stack([self.coords(tp.corep, self.J(tp, X, Y))[0] for X in FU], 1)
                    adj = dag(Smat)                      # both bases are scalar-orthonormal
                    formula = []
                    for Zb in FW:
                        Zamb = (tp.Q @ Zb).reshape(U.hdim, V.hdim, -1)
                        formula.append(self.coords(U, self.S_star(Y, Zamb))[0])
                    res["S_adjoint"] = max(res["S_adjoint"], err(np.stack(formula, 1), adj))
                    for U2 in reps[:2]:
                        for Wv in self.space(U2)[:1]:
                            for Zb in FW[:2]:
                                Zamb = (tp.Q @ Zb).reshape(U.hdim, V.hdim, -1)
                                lhs = self.J_ambient(Wv, self.S_star(Y, Zamb))
                                JZ = self.J_ambient(Wv, Zamb.reshape(U.hdim * V.hdim, -1))
                                JZ = JZ.reshape(U2.hdim * U.hdim, V.hdim, -1)
                                rhs = self.S_star(Y, JZ)
                                res["S_star_identity"] = max(res["S_star_identity"], err(lhs, rhs))
        return res

    def is_valid(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return all(v <= 100 * tol.atol for v in self.check().values())

    def dims(self) -> list[int]:
        return [self.space(U).shape[0] for U in self.registry.reps]

    def basis_invariance_defect(self, U: Corep, seed: int = 0) -> float:
        """``<X, Y>`` computed after a random unitary change of basis of ``H_U``."""
        rng = np.random.default_rng(seed)
        u = random_unitary(U.hdim, rng)
        worst = 0.0
        for X in self.space(U):
            for Y in self.space(U):
                # the same tensors, read in the basis xi'_k = sum_i u_ik xi_i
                X2, Y2 = dag(u) @ X, dag(u) @ Y
                worst = max(worst, err(self.inner(X2, Y2), self.inner(X, Y)))
        return worst


def spectral_functor(C: Coaction, tol: Tolerance = DEFAULT_TOL) -> SpectralFunctor:
    if not C.is_valid(tol):
        raise FunctorInvalid("the coaction does not pass verification")
    return SpectralFunctor(C, tol)


@dataclass
class ModuleCategoryFunctor:
    """``F(U) = D_A(A, U . A)`` with ``R = End(A)``, computed in the module category."""

    functor: SpectralFunctor
    spaces: list[np.ndarray]             # per registry label: (f, d*m) morphisms evaluated at 1
    base: np.ndarray                     # End(A) evaluated at 1, inside A
    residual: float = 0.0                # failure of T(1) to lie in F(U) + null vectors

    def comparison(self) -> dict[str, float]:
        """Distance between ``T -> T(1)`` of ``D_A(A, U^x . A)`` and the spectral spaces."""
        F = self.functor
        res = {"dims": 0.0, "spaces": 0.0, "base": subspace_distance(self.base, F.base),
               "residual": self.residual}
        for U, S in zip(F.registry.reps, self.spaces):
            mine = F.space(U).reshape(len(F.space(U)), U.hdim * F.coaction.m).T
            res["dims"] = max(res["dims"], float(abs(mine.shape[1] - S.shape[1])))
            if mine.shape[1] or S.shape[1]:
                res["spaces"] = max(res["spaces"], subspace_distance(mine, S))
        return res


def functor_from_module_category(C: Coaction, tol: Tolerance = DEFAULT_TOL) -> ModuleCategoryFunctor:
    F = spectral_functor(C, tol)
    E = generator_module(C)
    one_coords = E.quotient @ C.algebra.unit
    base = np.stack([E.section @ T @ one_coords for T in module_morphisms(E, E, tol)], 1)
    spaces, resid = [], 0.0
    for U in F.registry.reps:
        UE = module_tensor(U, E, tol)
        vals = [UE.section @ T @ one_coords for T in module_morphisms(E, UE, tol)]
        if not vals:
            spaces.append(np.zeros((U.hdim * C.m, 0), dtype=complex))
            continue
        # representatives are defined modulo the null vectors of U . A
        amb = np.stack(vals, 1)
        S, r = _balanced_representatives(F, U, E, UE, amb)
        spaces.append(S)
        resid = max(resid, r)
    return ModuleCategoryFunctor(F, spaces, base, resid)


def _balanced_representatives(F: SpectralFunctor, U: Corep, E, UE, amb: np.ndarray) -> np.ndarray:
    """Move ``H_U (x) E`` representatives into ``F(U)`` along the null vectors of ``U . E``."""
    d, m = U.hdim, F.coaction.m
    to_A = np.kron(np.eye(d), E.section)
    basis = F.space(U).reshape(len(F.space(U)), d * m).T
    null = to_A @ null_space(UE.quotient, F.tol)
    M = np.hstack([basis, null])
    target = to_A @ amb
    coef = np.linalg.lstsq(M, target, rcond=None)[0]
    return basis @ coef[: basis.shape[1]], err(M @ coef, target)


# -- the G-algebra of a weak tensor functor ----------------------------------------


def _rechoose(summands: list[Summand], rng: np.random.Generator) -> list[Summand]:
    """Another admissible family of decomposition isometries."""
    groups: dict[int, list[Summand]] = {}
    for s in summands:
        groups.setdefault(s.label, []).append(s)
    out = []
    for label, ss in groups.items():
        u = random_unitary(len(ss), rng)
        for a in range(len(ss)):
            w = sum(u[b, a] * ss[b].isometry for b in range(len(ss)))
            out.append(Summand(label, w))
    perm = rng.permutation(len(out))
    return [out[i] for i in perm]


@dataclass
class GAlgebra:
    """``A_F = (+)_x F(U^x) (x) Hbar_x`` with the reconstructed product, involution and coaction."""

    functor: SpectralFunctor
    index: list[tuple[int, int, int]]            # (label, a, i)
    offsets: list[int]
    fdims: list[int]
    coaction: Coaction
    theta: np.ndarray                            # A_F -> A
    rng: np.random.Generator | None = field(default=None, repr=False)

    @property
    def algebra(self) -> FiniteCStarAlgebra:
        return self.coaction.algebra

    @property
    def dim(self) -> int:
        return len(self.index)


class _Builder:
    def __init__(self, F: SpectralFunctor, rng=None):
        self.F = F
        self.reg = F.registry
        self.rng = rng
        self.reps = self.reg.reps
        self.bases = [F.space(U) for U in self.reps]
        self.fdims = [b.shape[0] for b in self.bases]
        self.dims = [U.hdim for U in self.reps]
        self.offsets = np.cumsum([0] + [f * d for f, d in zip(self.fdims, self.dims)]).tolist()
        self.D = self.offsets[-1]
        self.m = F.coaction.m
        self._dec: dict[int, list[Summand]] = {}
        self._tp: dict[tuple[int, int], object] = {}
        self._conj: dict[int, Corep] = {}

    # -- decompositions
    def summands(self, U: Corep) -> list[Summand]:
        key = id(U)
        if key not in self._dec:
            s = decompose(U, self.reg, self.F.tol)
            if self.rng is not None:
                s = _rechoose(s, self.rng)
            self._dec[key] = s
            self.F._keep.append(U)
        return self._dec[key]

    def tp(self, x, y):
        if (x, y) not in self._tp:
            self._tp[(x, y)] = tensor(self.reps[x], self.reps[y], self.F.tol)
        return self._tp[(x, y)]

    def conj(self, U: Corep) -> Corep:
        return self.F.rigidity(U).Ubar

    # -- elements
    def elementary(self, s: int) -> tuple[Corep, np.ndarray]:
        x = int(np.searchsorted(self.offsets, s, side="right") - 1)
        r = s - self.offsets[x]
        a, i = divmod(r, self.dims[x])
        W = np.zeros((self.dims[x], self.m, self.dims[x]), dtype=complex)
        W[:, :, i] = self.bases[x][a]
        return x, W

    def from_coords(self, c) -> list[tuple[Corep, np.ndarray]]:
        out = []
        for x, U in enumerate(self.reps):
            blk = np.reshape(c[self.offsets[x]:self.offsets[x + 1]], (self.fdims[x], self.dims[x]))
            W = np.einsum("al,aim->iml", blk, self.bases[x])
            out.append((U, W))
        return out

    def p(self, U: Corep, W, summands=None) -> tuple[np.ndarray, float]:
        """``p(X (x) xibar) = sum_k F(w_k*) X (x) conj(w_k* xi)`` in ``A_F`` coordinates."""
        out = np.zeros(self.D, dtype=complex)
        resid = 0.0
        for s in (summands if summands is not None else self.summands(U)):
            w = s.isometry
            Wk = np.einsum("iz,icj,jw->zcw", np.conj(w), W, w)
            x = s.label
            blk = np.zeros((self.fdims[x], self.dims[x]), dtype=complex)
            for l in range(self.dims[x]):
                c, r = self.F.coords(self.reps[x], Wk[:, :, l])
                blk[:, l] = c
                resid = max(resid, r)
            out[self.offsets[x]:self.offsets[x + 1]] += blk.reshape(-1)
        return out, resid

    def tilde_product(self, W1, W2, Q) -> np.ndarray:
        """``(X (x) xibar)(Y (x) etabar) = J(X (x) Y) (x) (xibar (x) etabar)`` in ``A_{U (*) V}``."""
        M = self.F.A.mult
        d1, d2 = W1.shape[0], W2.shape[0]
        amb = np.einsum("cba,jbn,ial->ijcln", M, W2, W1, optimize=True).reshape(d1 * d2, self.m, d1 * d2)
        return np.einsum("ai,acb,bj->icj", np.conj(Q), amb, Q, optimize=True)

    def bullet(self, U: Corep, W) -> tuple[Corep, np.ndarray]:
        """``(X (x) xibar). = X. (x) conj(xi.)`` extended additively."""
        vb = self.F.vector_bullet(U)                   # (d_U, d_Ubar)
        Ub = self.conj(U)
        out = np.zeros((Ub.hdim, self.m, Ub.hdim), dtype=complex)
        for l in range(U.hdim):
            Xb = self.F.bullet(U, W[:, :, l])
            out += np.einsum("im,k->imk", Xb, np.conj(vb[l]))
        return Ub, out

    def theta(self, W) -> np.ndarray:
        return np.einsum("imi->m", W)


def build_g_algebra(F: SpectralFunctor, rng: np.random.Generator | None = None,
                    tol: Tolerance = DEFAULT_TOL, check: bool = True) -> GAlgebra:
    """Reconstruct ``(A_F, a_F)``; ``rng`` re-chooses every decomposition isometry."""
    G = F.G
    if not G.coconnected or not G.regularity_check(tol):
        raise NotApplicable("reconstruction needs a regular coconnected quantum groupoid")
    bd = _Builder(F, rng)
    D, n = bd.D, G.dim
    if D == 0:
        raise FunctorInvalid("empty spectral data")
    elems = [bd.elementary(s) for s in range(D)]
    mult = np.zeros((D, D, D), dtype=complex)
    resid = 0.0
    for s, (ix, W1) in enumerate(elems):
        for t, (iy, W2) in enumerate(elems):
            tp = bd.tp(ix, iy)
            Wt = bd.tilde_product(W1, W2, tp.Q)
            c, r = bd.p(tp.corep, Wt)
            mult[:, s, t] = c
            resid = max(resid, r)
    # unit: p(X_1 (x) 1bar) on the unit object
    one = F.unit_object
    W1 = np.einsum("im,l->iml", F.unit_element, np.conj(F.unit_vector))
    unit, r = bd.p(one, W1)
    resid = max(resid, r)
    # involution
    star = np.zeros((D, D), dtype=complex)
    for s, (ix, W) in enumerate(elems):
        Ub, Wb = bd.bullet(bd.reps[ix], W)
        c, r = bd.p(Ub, Wb)
        star[:, s] = c
        resid = max(resid, r)
    labels = [f"{bd.reg.labels[x]}:{a},{i}" for x in range(len(bd.reps))
              for a in range(bd.fdims[x]) for i in range(bd.dims[x])]
    index = [(x, a, i) for x in range(len(bd.reps)) for a in range(bd.fdims[x]) for i in range(bd.dims[x])]
    AF = FiniteCStarAlgebra(mult, unit, star, labels)
    # coaction a_F(X (x) xibar_i) = sum_j X (x) xibar_j (x) Ubar_ji
    amap = np.zeros((D * n, D), dtype=complex)
    for s, (x, a, i) in enumerate(index):
        Ub = bd.conj(bd.reps[x]).coeffs
        for j in range(bd.dims[x]):
            t = bd.offsets[x] + a * bd.dims[x] + j
            amap[t * n:(t + 1) * n, s] += Ub[j, i]
    CF = Coaction(AF, G, amap, f"A_F({F.coaction.name})")
    theta = np.stack([bd.theta(W) for _, W in elems], 1)
    out = GAlgebra(F, index, bd.offsets, bd.fdims, CF, theta, rng)
    out.builder = bd
    out.projection_residual = resid
    if check:
        assoc = associativity_defect(AF)
        if assoc[0] > 100 * tol.atol:
            raise NonAssociative(*assoc)
    return out


def associativity_defect(A: FiniteCStarAlgebra) -> tuple[float, tuple[int, int, int]]:
    M = A.mult
    lhs = np.einsum("kab,bcd->kacd", M, M)          # a (c d)
    rhs = np.einsum("kbd,bac->kacd", M, M)          # (a c) d
    diff = np.abs(lhs - rhs)
    idx = np.unravel_index(np.argmax(diff), diff.shape)
    return float(diff.max()), tuple(int(i) for i in idx[1:])


# -- laws of the projection p --------------------------------------------------


def projection_laws(GA: GAlgebra, seed: int = 0, samples: int = 3) -> dict[str, float]:
    """Idempotence, ``p(p(a)p(b)) = p(ab)``, ``p(p(a).) = p(a.)`` and ``p(a..) = p(a)`` on samples of ``A~``."""
    bd = GA.builder
    F = GA.functor
    rng = np.random.default_rng(seed)
    reps = bd.reps
    k = len(reps)
    res = {"idempotent": 0.0, "product": 0.0, "bullet": 0.0, "double_bullet": 0.0,
           "isometry_invariance": 0.0, "residual": getattr(GA, "projection_residual", 0.0)}

    def random_element(U):
        B = F.space(U)
        if not len(B):
            return None
        c = rng.normal(size=(len(B), U.hdim)) + 1j * rng.normal(size=(len(B), U.hdim))
        return np.einsum("al,aim->iml", c, B)

    # elements of A~ over U^x (*) U^y
    pairs = [(rng.integers(k), rng.integers(k)) for _ in range(samples)]
    for (x, y) in pairs:
        tp = bd.tp(x, y)
        U = tp.corep
        a = random_element(U)
        if a is None:
            continue
        pa, _ = bd.p(U, a)
        # idempotence: p on A_F itself, through a fresh decomposition of each U^z
        again = np.zeros_like(pa)
        for V, W in bd.from_coords(pa):
            c, _ = bd.p(V, W, decompose(V, bd.reg, F.tol))
            again += c
        res["idempotent"] = max(res["idempotent"], err(again, pa))
        # p does not depend on the choice of the isometries w_i
        other = _rechoose(bd.summands(U), rng)
        res["isometry_invariance"] = max(res["isometry_invariance"], err(bd.p(U, a, other)[0], pa))
        # p(p(a) p(b)) = p(ab) with b over U^z
        z = int(rng.integers(k))
        V = reps[z]
        b = random_element(V)
        if b is not None:
            big = tensor(U, V, F.tol)
            ab = bd.tilde_product(a, b, big.Q)
            lhs, _ = bd.p(big.corep, ab)
            prod = np.einsum("kst,s,t->k", GA.algebra.mult, pa, bd.p(V, b)[0])
            res["product"] = max(res["product"], err(lhs, prod))
        # bullets
        Ub, ab_ = bd.bullet(U, a)
        pab, _ = bd.p(Ub, ab_)
        star_pa = GA.algebra.adj(pa)
        res["bullet"] = max(res["bullet"], err(pab, star_pa))
        Ubb, abb = bd.bullet(Ub, ab_)
        res["double_bullet"] = max(res["double_bullet"], err(bd.p(Ubb, abb)[0], pa))
    return res


def bullet_identities(F: SpectralFunctor, reps=None) -> dict[str, float]:
    """``<X., Y> = F(R*)J(Y (x) X)`` and ``<X, Y> = F(Rbar*)J(Y (x) X.)``."""
    reps = reps if reps is not None else F.registry.reps
    res = {"first": 0.0, "second": 0.0, "in_conjugate_space": 0.0}
    for U in reps:
        rig = F.rigidity(U)
        Ub = rig.Ubar
        FU, FUb = F.space(U), F.space(Ub)
        for X in FU:
            Xb = F.bullet(U, X)
            res["in_conjugate_space"] = max(res["in_conjugate_space"], F.in_space(Ub, Xb))
            for Y in FUb:
                rhs = F.iota_inv(dag(rig.R) @ F.J_ambient(Y, X))
                res["first"] = max(res["first"], err(F.inner(Xb, Y), rhs))
            for Y in FU:
                rhs = F.iota_inv(dag(rig.Rbar) @ F.J_ambient(Y, Xb))
                res["second"] = max(res["second"], err(F.inner(X, Y), rhs))
    return res


def g_algebra_report(GA: GAlgebra, tol: Tolerance = DEFAULT_TOL) -> dict[str, float]:
    """Algebra laws of ``A_F`` and the properties of ``a_F``."""
    AF = GA.algebra
    CF = GA.coaction
    res = {f"algebra_{k}": v for k, v in AF.verify(tol).items()}
    res["associativity_basis_triples"] = associativity_defect(AF)[0]
    res.update({f"coaction_{k}": v for k, v in CF.verify(tol).items()})
    # T^{a_F} kills every component but the trivial one
    F = GA.functor
    one = F.unit_object
    triv = {s.label for s in decompose(one, F.registry, tol)}
    T = CF.T
    kill = 0.0
    for s, (x, a, i) in enumerate(GA.index):
        if x not in triv:
            kill = max(kill, float(np.linalg.norm(T[:, s])))
    res["expectation_kills_nontrivial"] = kill
    res["fixed_points_dim_vs_R"] = float(abs(CF.fixed_points.shape[1] - F.base.shape[1]))
    return res


# -- round trip ------------------------------------------------------------------


def roundtrip_spec_weak(C: Coaction, tol: Tolerance = DEFAULT_TOL, strict: bool = True) -> dict[str, float]:
    """``A -> F -> A_F -> A`` through ``p(X (x) xibar) -> (xibar (x) id) X``."""
    F = spectral_functor(C, tol)
    GA = build_g_algebra(F, tol=tol)
    A, AF = C.algebra, GA.algebra
    Th = GA.theta
    D, m = GA.dim, A.dim
    res = {"dimension": float(abs(D - m))}
    if D == m:
        res["bijective"] = float(m - np.linalg.matrix_rank(Th, tol=1e-8))
        Ti = np.linalg.inv(Th) if res["bijective"] == 0 else np.linalg.pinv(Th)
        # structure constants transported along Theta
        Mt = np.einsum("ka,abc,bs,ct->kst", Ti, A.mult, Th, Th, optimize=True)
        res["product"] = err(Mt, AF.mult)
        res["unit"] = err(Th @ AF.unit, A.unit)
        res["star"] = err(Th @ AF.star, A.star @ np.conj(Th))
        n = C.n
        lhs = np.kron(Th, np.eye(n)) @ GA.coaction.amap
        rhs = C.amap @ Th
        res["equivariant"] = err(lhs, rhs)
    else:
        res.update(bijective=1.0, product=1.0, unit=1.0, star=1.0, equivariant=1.0)
    res["functor_iso"] = functor_iso_defect(GA)
    if strict and max(res.values()) > 10 * tol.atol:
        raise RoundTripFailure(res)
    return res


def functor_iso_defect(GA: GAlgebra) -> float:
    """``X -> sum_i xi_i (x) (X (x) xibar_i)`` is a unitary ``F(U^x) -> F'(U^x)``."""
    F = GA.functor
    F2 = SpectralFunctor(GA.coaction, F.tol)
    bd = GA.builder
    worst = 0.0
    for x, U in enumerate(bd.reps):
        d = U.hdim
        FU = bd.bases[x]
        imgs = []
        for a in range(len(FU)):
            Xp = np.zeros((d, GA.dim), dtype=complex)
            for i in range(d):
                Xp[i, bd.offsets[x] + a * d + i] = 1
            imgs.append(Xp)
            worst = max(worst, F2.in_space(U, Xp))
        worst = max(worst, float(abs(len(FU) - F2.space(U).shape[0])))
        for a, Xa in enumerate(imgs):
            for b, Xb in enumerate(imgs):
                lhs = GA.theta @ F2.inner(Xa, Xb)
                rhs = F.inner(FU[a], FU[b])
                worst = max(worst, err(lhs, rhs))
    return worst


def rechoice_invariance(C: Coaction, trials: int = 5, seed: int = 0, tol: Tolerance = DEFAULT_TOL) -> float:
    """Largest structure-constant change when every decomposition isometry is re-chosen."""
    F = spectral_functor(C, tol)
    ref = build_g_algebra(F, tol=tol)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        GA = build_g_algebra(F, rng=rng, tol=tol)
        worst = max(worst, err(GA.algebra.mult, ref.algebra.mult), err(GA.algebra.unit, ref.algebra.unit),
                    err(GA.algebra.star, ref.algebra.star), err(GA.coaction.amap, ref.coaction.amap))
    return worst
