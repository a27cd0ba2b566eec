"""Weak Hopf C*-algebras (finite quantum groupoids) in coordinates.

``comult`` is a ``(n*n, n)`` matrix: column ``k`` holds the coordinates of
``Delta(b_k)`` in ``b_i (x) b_j`` at row ``i*n + j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import FiniteCStarAlgebra, ModularData, StateData, gns
from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    asc,
    dag,
    err,
    null_space,
    range_basis,
)


class NoHaar(RuntimeError):
    pass


class NonUniqueHaar(RuntimeError):
    pass


class NotPositive(RuntimeError):
    pass


class NoImplementer(RuntimeError):
    pass


class NotApplicable(RuntimeError):
    pass


def intersect(*bases, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the intersection of column spans."""
    n = bases[0].shape[0]
    comps = []
    for b in bases:
        q = range_basis(b, tol)
        comps.append(np.eye(n) - q @ dag(q))
    return null_space(np.vstack(comps), tol)


@dataclass
class WeakHopf:
    algebra: FiniteCStarAlgebra
    comult: np.ndarray
    counit: np.ndarray
    antipode: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.comult = asc(self.comult)
        self.counit = asc(self.counit)
        self.antipode = asc(self.antipode)
        n = self.algebra.dim
        if self.comult.shape != (n * n, n) or self.counit.shape != (n,) or self.antipode.shape != (n, n):
            raise ValueError("inconsistent weak Hopf shapes")

    # -- shorthand ------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def B(self) -> FiniteCStarAlgebra:
        return self.algebra

    @property
    def unit(self) -> np.ndarray:
        return self.algebra.unit

    def delta(self, x) -> np.ndarray:
        return self.comult @ asc(x)

    def S(self, x) -> np.ndarray:
        return self.antipode @ asc(x)

    def eps(self, x) -> complex:
        return complex(self.counit @ asc(x))

    def mul2(self, x, y) -> np.ndarray:
        """Product in ``B (x) B``."""
        return self.algebra.mul_tensor(self.algebra, x, y)

    def mul3(self, x, y) -> np.ndarray:
        n = self.dim
        M = self.algebra.mult
        X, Y = np.reshape(asc(x), (n, n, n)), np.reshape(asc(y), (n, n, n))
        T1 = np.tensordot(M, X, axes=([1], [0]))                  # k a j p
        T2 = np.tensordot(Y, M, axes=([2], [2]))                  # a b m p
        T3 = np.tensordot(T1, T2, axes=([1, 3], [0, 3]))          # k j b m
        return np.tensordot(T3, M, axes=([1, 2], [1, 2])).transpose(0, 2, 1).reshape(-1)

    @cached_property
    def delta1(self) -> np.ndarray:
        return self.delta(self.unit)

    # -- counital maps ----------------------------------------------------
    @cached_property
    def eps_t(self) -> np.ndarray:
        """``eps_t(b) = (eps (x) id)(Delta(1)(b (x) 1))``."""
        n, A = self.dim, self.algebra
        cols = []
        for k in range(n):
            prod = np.reshape(self.mul2(self.delta1, np.kron(A.e(k), self.unit)), (n, n))
            cols.append(self.counit @ prod)
        return np.stack(cols, axis=1)

    @cached_property
    def eps_s(self) -> np.ndarray:
        """``eps_s(b) = (id (x) eps)((1 (x) b)Delta(1))``."""
        n, A = self.dim, self.algebra
        cols = []
        for k in range(n):
            prod = np.reshape(self.mul2(np.kron(self.unit, A.e(k)), self.delta1), (n, n))
            cols.append(prod @ self.counit)
        return np.stack(cols, axis=1)

    def counital_maps(self):
        return self.eps_t, self.eps_s

    @cached_property
    def Bt(self) -> np.ndarray:
        return range_basis(self.eps_t)

    @cached_property
    def Bs(self) -> np.ndarray:
        return range_basis(self.eps_s)

    @cached_property
    def connected(self) -> bool:
        return intersect(self.Bt, self.algebra.center()).shape[1] == 1

    @cached_property
    def coconnected(self) -> bool:
        return intersect(self.Bt, self.Bs).shape[1] == 1

    @property
    def biconnected(self) -> bool:
        return self.connected and self.coconnected

    def counital_subalgebras(self):
        return self.Bt, self.Bs, {
            "connected": self.connected,
            "coconnected": self.coconnected,
            "biconnected": self.biconnected,
        }

    # -- axioms -----------------------------------------------------------
    def verify(self, tol: Tolerance = DEFAULT_TOL) -> dict[str, float]:
        A, n = self.algebra, self.dim
        D, S, e, u = self.comult, self.antipode, self.counit, self.unit
        I = np.eye(n)
        res = dict(A.verify(tol))
        mult = 0.0
        for i in range(n):
            for j in range(n):
                lhs = D @ A.mul(A.e(i), A.e(j))
                rhs = self.mul2(D[:, i], D[:, j])
                mult = max(mult, err(lhs, rhs))
        res["comult_multiplicative"] = mult
        res["comult_star"] = max(err(D @ A.adj(A.e(k)), A.adj_tensor(A, D[:, k])) for k in range(n))
        res["coassociativity"] = err(np.kron(D, I) @ D, np.kron(I, D) @ D)
        res["counit"] = max(err(np.kron(e[None, :], I) @ D, I), err(np.kron(I, e[None, :]) @ D, I))
        # eps(b c1) eps(c2 d) = eps(b c d) = eps(b c2) eps(c1 d)
        M = A.mult
        EM = np.einsum("k,kij->ij", e, M)             # eps(b_i b_j)
        Dt = np.reshape(D, (n, n, n))                 # Dt[p, q, c]
        lhs = np.einsum("bp,dq,pqc->bcd", EM, EM.T, Dt)       # eps(b c1) eps(c2 d)
        lhs2 = np.einsum("bq,dp,pqc->bcd", EM, EM.T, Dt)      # eps(b c2) eps(c1 d)
        mid = np.einsum("k,kaj,abc->bcj", e, M, M)            # eps((b c) d)
        res["weak_counit"] = max(err(lhs, mid), err(lhs2, mid))
        # (Delta(1) (x) 1)(1 (x) Delta(1)) = (Delta (x) id)Delta(1) = (1 (x) Delta(1))(Delta(1) (x) 1)
        d1 = self.delta1
        left = np.kron(d1, u)
        right = np.kron(u, d1)
        target = np.kron(D, I) @ d1
        res["weak_unit"] = max(err(self.mul3(left, right), target), err(self.mul3(right, left), target))
        # antipode
        mS = np.stack([np.einsum("kij,ij->k", M, np.reshape(D[:, c], (n, n)) @ S.T) for c in range(n)], 1)
        Sm = np.stack([np.einsum("kij,ij->k", M, S @ np.reshape(D[:, c], (n, n))) for c in range(n)], 1)
        res["antipode_target"] = err(mS, self.eps_t)
        res["antipode_source"] = err(Sm, self.eps_s)
        # S(b1) b2 S(b3) = S(b)
        D3 = np.reshape(np.kron(D, I) @ D, (n, n, n, n))
        SbS = np.einsum("kpq,qjr,pi,ra,ijac->kc", M, M, S, S, D3, optimize=True)
        res["antipode_sandwich"] = err(SbS, S)
        # S antimultiplicative and anticomultiplicative
        anti = np.einsum("ka,aij->kij", S, M) - np.einsum("kab,aj,bi->kij", M, S, S)
        res["antipode_antialgebra"] = err(anti)
        swap = np.reshape(np.transpose(np.reshape(D, (n, n, n)), (1, 0, 2)), (n * n, n))
        res["antipode_anticoalgebra"] = err(D @ S, np.kron(S, S) @ swap)
        SSt = S @ A.star
        res["antipode_star_involutive"] = err(SSt @ np.conj(SSt), I)
        return res

    def is_valid(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return all(v <= 10 * tol.atol for v in self.verify(tol).values())

    def regularity_check(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        S2 = self.antipode @ self.antipode
        return err(S2 @ self.Bt, self.Bt) <= 10 * tol.atol

    # -- Haar measure ------------------------------------------------------
    @cached_property
    def haar(self) -> StateData:
        return self.haar_measure()

    def haar_measure(self, tol: Tolerance = DEFAULT_TOL) -> StateData:
        """Solve the four Haar constraints as one homogeneous system in ``(h, t)``.

        ``t`` stands in for the right-hand sides ``eps`` and ``1_B`` so the
        solution space can be checked for dimension one before normalising.
        """
        n = self.dim
        D = np.reshape(self.comult, (n, n, n))     # D[i, j, k]
        Et, S, e, u = self.eps_t, self.antipode, self.counit, self.unit
        I = np.eye(n)
        rows = []
        # Mh[i, k] = sum_j D[i, j, k] h_j ;  (I - Et) Mh = 0   (n*n rows)
        Mh_lin = np.transpose(D, (0, 2, 1))           # [i, k, j]
        c1 = np.einsum("ai,ikj->akj", I - Et, Mh_lin).reshape(n * n, n)
        rows.append(np.hstack([c1, np.zeros((n * n, 1))]))
        rows.append(np.hstack([S.T - I, np.zeros((n, 1))]))
        rows.append(np.hstack([Et.T, -e[:, None]]))
        c4 = np.einsum("ikj,k->ij", Mh_lin, u)
        rows.append(np.hstack([c4, -u[:, None]]))
        N = null_space(np.vstack(rows), tol)
        if N.shape[1] == 0:
            raise NoHaar("Haar constraints have no solution")
        if N.shape[1] > 1:
            raise NonUniqueHaar(f"Haar solution space has dimension {N.shape[1]}")
        v = N[:, 0]
        if abs(v[-1]) < tol.atol:
            raise NoHaar("Haar solution does not normalise")
        h = v[:n] / v[-1]
        state = StateData.of(self.algebra, h)
        if not self.algebra.is_positive_functional(h, tol, faithful=True):
            raise NotPositive("Haar functional is not positive and faithful")
        return state

    @property
    def h(self) -> np.ndarray:
        return self.haar.functional

    @cached_property
    def hilbert(self) -> ModularData:
        """GNS data of ``(B, h)``; ``h`` is faithful on a C*-quantum groupoid."""
        return gns(self.algebra, self.h, faithful=True)

    @cached_property
    def h_gram(self) -> np.ndarray:
        """``K`` with ``h(y* x) = y^H K x``."""
        return self.algebra.gram(self.h)

    def pi(self, b) -> np.ndarray:
        return self.hilbert.rep(b)

    @cached_property
    def E_t(self) -> np.ndarray:
        """Target Haar conditional expectation ``(id (x) h)Delta``."""
        n = self.dim
        return np.einsum("ijk,j->ik", np.reshape(self.comult, (n, n, n)), self.h)

    @cached_property
    def E_s(self) -> np.ndarray:
        n = self.dim
        return np.einsum("ijk,i->jk", np.reshape(self.comult, (n, n, n)), self.h)

    # -- duality ------------------------------------------------------------
    def dual(self) -> "WeakHopf":
        n = self.dim
        D = np.reshape(self.comult, (n, n, n))
        mult_hat = np.transpose(D, (2, 0, 1))
        comult_hat = np.transpose(self.algebra.mult, (1, 2, 0)).reshape(n * n, n)
        S = self.antipode
        star_hat = S.T @ dag(self.algebra.star)
        labels = [f"^{l}" for l in self.algebra.basis_labels]
        Bh = FiniteCStarAlgebra(mult_hat, self.counit.copy(), star_hat, labels)
        name = f"dual({self.name})" if self.name else ""
        return WeakHopf(Bh, comult_hat, self.unit.copy(), S.T.copy(), name)

    @cached_property
    def dual_wh(self) -> "WeakHopf":
        return self.dual()

    # -- group-like elements -----------------------------------------------
    @cached_property
    def glike(self) -> np.ndarray:
        return self.canonical_group_like()

    def canonical_group_like(self, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
        if not self.regularity_check(tol):
            raise NotApplicable("S^2 is not the identity on B_t")
        A, n = self.algebra, self.dim
        S2 = self.antipode @ self.antipode
        # S^2(b_i) T - T b_i = 0 for all i, linear in T
        N = null_space(np.vstack([A.left(S2[:, i]) - A.right(A.e(i)) for i in range(n)]), tol)
        if N.shape[1] == 0:
            raise NoImplementer("S^2 is not inner")
        T = N @ np.arange(1, N.shape[1] + 1, dtype=complex)
        P = A.element_sqrt(A.mul(A.adj(T), T), tol)
        blocks = A.to_blocks(P)
        if any(np.linalg.matrix_rank(X, tol=1e-8) < X.shape[0] for X in blocks):
            raise NoImplementer("no invertible positive implementer found")
        G = A.from_blocks([X / np.linalg.det(X).real ** (1.0 / X.shape[0]) for X in blocks])
        if self.group_like_defect(G) > 1e-6:
            raise NoImplementer("normalised implementer is not group-like")
        return G

    def group_like_defect(self, G) -> float:
        A, n = self.algebra, self.dim
        S2 = self.antipode @ self.antipode
        Ginv = A.element_inverse(G)
        ad = max(err(S2[:, i], A.prod(G, A.e(i), Ginv)) for i in range(n))
        GG = np.kron(G, G)
        gl = max(err(self.delta(G), self.mul2(GG, self.delta1)),
                 err(self.delta(G), self.mul2(self.delta1, GG)))
        return max(ad, gl)

    @cached_property
    def dual_glike(self) -> np.ndarray:
        """``G^`` as coordinates in the dual basis."""
        return self.dual_wh.glike

    @cached_property
    def separability_element(self) -> np.ndarray:
        """``(id (x) S)Delta(1)``."""
        return np.kron(np.eye(self.dim), self.antipode) @ self.delta1

    # -- dual actions --------------------------------------------------------
    def harpoon_left(self, f, b) -> np.ndarray:
        """``f -> b = b_1 <f, b_2>``."""
        n = self.dim
        return np.reshape(self.delta(b), (n, n)) @ asc(f)

    def harpoon_right(self, b, f) -> np.ndarray:
        """``b <- f = b_2 <f, b_1>``."""
        n = self.dim
        return asc(f) @ np.reshape(self.delta(b), (n, n))
