"""Finite-dimensional C*-algebras given by structure constants.

An algebra of dimension ``n`` is stored through

* ``mult``   complex ``(n, n, n)`` tensor, ``b_i b_j = sum_k mult[k, i, j] b_k``
* ``unit``   coordinates of ``1``
* ``star``   complex ``(n, n)`` matrix with ``x* = star @ conj(x)``

Elements are coordinate vectors.  Elements of ``A (x) B`` are vectors of
length ``dim A * dim B`` with ``A`` as the slow index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    NotPSD,
    Tolerance,
    asc,
    cluster,
    dag,
    err,
    hermitian_eig,
    null_space,
    psd_sqrt,
    range_basis,
    solve_coords,
)


class NotSemisimple(ValueError):
    pass


class DecompositionError(RuntimeError):
    pass


class NotFaithful(ValueError):
    pass


@dataclass
class BlockStructure:
    """Wedderburn data: ``A`` is isomorphic to a direct sum of full matrix blocks."""

    dims: list[int]
    central_projections: list[np.ndarray]
    units: list[np.ndarray]          # units[a][i, j] is the vector e^a_ij
    to_blocks_mat: np.ndarray        # coordinates -> stacked block entries
    from_blocks_mat: np.ndarray

    def split(self, flat):
        out, pos = [], 0
        for d in self.dims:
            out.append(np.reshape(flat[pos:pos + d * d], (d, d)))
            pos += d * d
        return out


@dataclass
class FiniteCStarAlgebra:
    mult: np.ndarray
    unit: np.ndarray
    star: np.ndarray
    basis_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.mult = asc(self.mult)
        self.unit = asc(self.unit)
        self.star = asc(self.star)
        n = self.unit.shape[0]
        if self.mult.shape != (n, n, n) or self.star.shape != (n, n):
            raise ValueError("inconsistent structure-constant shapes")
        if not self.basis_labels:
            self.basis_labels = [f"b{i}" for i in range(n)]
        self._blocks: BlockStructure | None = None

    # -- basic operations ---------------------------------------------------
    @property
    def dim(self) -> int:
        return self.unit.shape[0]

    def e(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[i] = 1
        return v

    def mul(self, x, y) -> np.ndarray:
        return np.einsum("kij,i,j->k", self.mult, asc(x), asc(y), optimize=True)

    def adj(self, x) -> np.ndarray:
        return self.star @ np.conj(asc(x))

    def left(self, x) -> np.ndarray:
        """Matrix of ``y -> x y``."""
        return np.einsum("kij,i->kj", self.mult, asc(x))

    def right(self, y) -> np.ndarray:
        """Matrix of ``x -> x y``."""
        return np.einsum("kij,j->ki", self.mult, asc(y))

    def commutator_map(self, x) -> np.ndarray:
        return self.left(x) - self.right(x)

    def prod(self, *xs) -> np.ndarray:
        out = self.unit
        for x in xs:
            out = self.mul(out, x)
        return out

    # -- tensor-leg helpers ---------------------------------------------------
    def mul_tensor(self, other: "FiniteCStarAlgebra", x, y) -> np.ndarray:
        """Product in ``self (x) other`` computed leg-wise."""
        n, m = self.dim, other.dim
        X, Y = np.reshape(asc(x), (n, m)), np.reshape(asc(y), (n, m))
        Z = np.einsum("kij,lpq,ip,jq->kl", self.mult, other.mult, X, Y, optimize=True)
        return Z.reshape(-1)

    def adj_tensor(self, other: "FiniteCStarAlgebra", x) -> np.ndarray:
        X = np.reshape(np.conj(asc(x)), (self.dim, other.dim))
        return (self.star @ X @ other.star.T).reshape(-1)

    def tensor(self, other: "FiniteCStarAlgebra") -> "FiniteCStarAlgebra":
        n, m = self.dim, other.dim
        mult = np.einsum("kij,lpq->klipjq", self.mult, other.mult).reshape(n * m, n * m, n * m)
        labels = [f"{a}*{b}" for a in self.basis_labels for b in other.basis_labels]
        return FiniteCStarAlgebra(mult, np.kron(self.unit, other.unit),
                                  np.kron(self.star, other.star), labels)

    # -- axioms -----------------------------------------------------------
    def verify(self, tol: Tolerance = DEFAULT_TOL) -> dict[str, float]:
        """Residuals of the C*-algebra axioms (all should be ~0)."""
        M, n = self.mult, self.dim
        I = np.eye(n)
        res = {}
        # (b_i b_j) b_a vs b_i (b_j b_a)
        lhs = np.einsum("lij,kla->kija", M, M)
        rhs = np.einsum("kil,lja->kija", M, M)
        res["associativity"] = err(lhs, rhs)
        res["unit"] = max(err(self.left(self.unit), I), err(self.right(self.unit), I))
        res["involution"] = err(self.star @ np.conj(self.star), I)
        # (b_i b_j)* = b_j* b_i*
        lhs = np.einsum("ak,kij->aij", self.star, np.conj(M))
        rhs = np.einsum("kab,ai,bj->kij", M, self.star, self.star)
        rhs = np.transpose(rhs, (0, 2, 1))
        res["antimultiplicative"] = err(lhs, rhs)
        res["unit_selfadjoint"] = err(self.adj(self.unit), self.unit)
        # C*-ness: the regular trace is a faithful positive functional
        K = self.trace_gram()
        w = np.linalg.eigvalsh((K + dag(K)) / 2)
        res["positivity"] = 0.0 if w.min() > tol.atol * max(1.0, float(w.max())) else 1.0
        return res

    def trace_gram(self) -> np.ndarray:
        """``K[j, i] = Tr L(b_j* b_i)``, positive definite iff ``A`` is C*."""
        return self.gram(self.regular_trace())

    # -- functionals --------------------------------------------------------
    def gram(self, phi) -> np.ndarray:
        """``K[j, i] = phi(b_j* b_i)`` so that ``<x, y> = y^H K x``."""
        phi = asc(phi)
        prods = np.einsum("kai,aj->kji", self.mult, self.star)
        return np.einsum("k,kji->ji", phi, prods)

    def regular_trace(self) -> np.ndarray:
        return np.einsum("kik->i", self.mult)

    # -- Wedderburn decomposition ------------------------------------------
    def center(self, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
        stack = np.vstack([self.commutator_map(self.e(i)) for i in range(self.dim)])
        return null_space(stack, tol)

    def _lagrange_projections(self, c, vals, unit):
        projs = []
        for a, la in enumerate(vals):
            p = unit.copy()
            for b, lb in enumerate(vals):
                if a != b:
                    p = self.mul(p, c - lb * unit) / (la - lb)
            projs.append(p)
        return projs

    def blocks(self, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> BlockStructure:
        if self._blocks is None:
            self._blocks = self._decompose(tol, seed)
        return self._blocks

    def _decompose(self, tol: Tolerance, seed: int) -> BlockStructure:
        rng = np.random.default_rng(seed)
        Z = self.center(tol)
        nz = Z.shape[1]
        # deterministic central element first, seeded random ones on collision
        z = Z @ np.arange(1, nz + 1, dtype=complex)
        for _ in range(50):
            c = z + self.adj(z)
            w = np.linalg.eigvals(self.left(c))
            groups = cluster(w.real, 1e-6 * max(1.0, float(np.max(np.abs(w)))))
            if len(groups) == nz:
                vals = [float(np.mean(w[g].real)) for g in groups]
                break
            z = Z @ (rng.normal(size=nz) + 1j * rng.normal(size=nz))
        else:
            raise NotSemisimple("could not separate the centre")
        projs = self._lagrange_projections(c, vals, self.unit)
        sizes = [len(g) for g in groups]
        dims = []
        for s in sizes:
            d = int(round(np.sqrt(s)))
            if d * d != s:
                raise NotSemisimple("block of non-square dimension")
            dims.append(d)
        # deterministic ordering: size descending, then smallest basis support
        def key(a):
            p = projs[a]
            support = tuple(int(i) for i in np.flatnonzero(np.abs(p) > 1e-6))
            return (-dims[a], support)
        order = sorted(range(nz), key=key)
        dims = [dims[a] for a in order]
        projs = [projs[a] for a in order]
        units = [self._matrix_units(p, d, rng, tol) for p, d in zip(projs, dims)]
        cols = [u[i, j] for u, d in zip(units, dims) for i in range(d) for j in range(d)]
        F = np.stack(cols, axis=1) if cols else np.zeros((0, 0), dtype=complex)
        T = np.linalg.inv(F)
        return BlockStructure(dims, projs, units, T, F)

    def _matrix_units(self, p, d, rng, tol):
        n = self.dim
        u = np.zeros((d, d, n), dtype=complex)
        if d == 1:
            u[0, 0] = p
            return u
        Q = range_basis(self.left(p))
        for _ in range(50):
            r = rng.normal(size=n) + 1j * rng.normal(size=n)
            y = self.mul(p, r + self.adj(r))
            w = np.linalg.eigvals(dag(Q) @ self.left(y) @ Q)
            groups = cluster(w.real, 1e-6 * max(1.0, float(np.max(np.abs(w)))))
            if len(groups) == d and all(len(g) == d for g in groups):
                break
        else:
            raise DecompositionError("could not split a simple block")
        vals = [float(np.mean(w[g].real)) for g in groups]
        diag = self._lagrange_projections(y, vals, p)
        for i in range(d):
            u[i, i] = diag[i]
        for i in range(1, d):
            for _ in range(50):
                r = rng.normal(size=n) + 1j * rng.normal(size=n)
                x = self.prod(diag[0], r, diag[i])
                xx = self.mul(x, self.adj(x))
                lam = float(np.real(np.vdot(diag[0], xx) / np.vdot(diag[0], diag[0])))
                if lam > 1e-6:
                    break
            u[0, i] = x / np.sqrt(lam)
            u[i, 0] = self.adj(u[0, i])
        for i in range(1, d):
            for j in range(1, d):
                u[i, j] = self.mul(u[i, 0], u[0, j])
        return u

    def to_blocks(self, x) -> list[np.ndarray]:
        bs = self.blocks()
        return bs.split(bs.to_blocks_mat @ asc(x))

    def from_blocks(self, mats: Sequence[np.ndarray]) -> np.ndarray:
        bs = self.blocks()
        return bs.from_blocks_mat @ np.concatenate([asc(m).reshape(-1) for m in mats])

    def density(self, phi) -> list[np.ndarray]:
        """Density matrices with ``phi(x) = sum_a Tr(rho_a X_a)``."""
        bs = self.blocks()
        phi = asc(phi)
        return [np.array([[phi @ u[i, j] for i in range(d)] for j in range(d)])
                for u, d in zip(bs.units, bs.dims)]

    def is_positive(self, x, tol: Tolerance = DEFAULT_TOL) -> bool:
        if err(self.adj(x), x) > tol.atol * max(1.0, float(np.max(np.abs(x)))) * 10:
            return False
        for X in self.to_blocks(x):
            w = np.linalg.eigvalsh((X + dag(X)) / 2)
            if w.size and w.min() < -tol.atol * max(1.0, float(np.max(np.abs(w)))) * 10:
                return False
        return True

    def is_positive_functional(self, phi, tol: Tolerance = DEFAULT_TOL, faithful=False) -> bool:
        for rho in self.density(phi):
            try:
                w, _ = hermitian_eig(rho, Tolerance(tol.atol * 10, tol.rtol))
            except ValueError:
                return False
            lo = w.min() if w.size else 1.0
            if lo < -tol.atol * 10 or (faithful and lo <= tol.atol):
                return False
        return True

    def element_sqrt(self, x, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
        return self.from_blocks([psd_sqrt(X, tol) for X in self.to_blocks(x)])

    def element_inverse(self, x) -> np.ndarray:
        return self.from_blocks([np.linalg.inv(X) for X in self.to_blocks(x)])

    def element_power(self, x, p: float, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
        """``x**p`` for a positive invertible element ``x``."""
        mats = []
        for X in self.to_blocks(x):
            w, v = hermitian_eig(X, Tolerance(tol.atol * 100, tol.rtol))
            if w.min() <= 0:
                raise NotPSD("element is not positive invertible")
            mats.append((v * w ** p) @ dag(v))
        return self.from_blocks(mats)

    # -- subalgebras -----------------------------------------------------------
    def span_closure_defect(self, basis) -> float:
        """How far ``span(basis)`` is from being a unital *-subalgebra."""
        Q = range_basis(basis)
        out = [self.unit[:, None]]
        out += [self.adj(Q[:, i])[:, None] for i in range(Q.shape[1])]
        out += [self.mul(Q[:, i], Q[:, j])[:, None]
                for i in range(Q.shape[1]) for j in range(Q.shape[1])]
        V = np.hstack(out)
        return err(V - Q @ (dag(Q) @ V))

    def subalgebra(self, basis, labels=None) -> "FiniteCStarAlgebra":
        """Structure constants of the *-subalgebra spanned by ``basis`` columns."""
        B = asc(basis)
        k = B.shape[1]
        prods = np.stack([self.mul(B[:, i], B[:, j]) for i in range(k) for j in range(k)], axis=1)
        c, r1 = solve_coords(B, prods)
        mult = c.reshape(k, k, k)
        unit, r2 = solve_coords(B, self.unit)
        stars = np.stack([self.adj(B[:, i]) for i in range(k)], axis=1)
        sc, r3 = solve_coords(B, stars)
        if max(r1, r2, r3) > 1e-7:
            raise ValueError("basis does not span a unital *-subalgebra")
        # x* = sum_i conj(x_i) b_i*  ->  star matrix acts on conj(x)
        return FiniteCStarAlgebra(mult, unit, sc, labels or [])

    # -- GNS ------------------------------------------------------------------
    def gns(self, phi, faithful: bool = False, tol: Tolerance = DEFAULT_TOL) -> "ModularData":
        return gns(self, phi, faithful=faithful, tol=tol)


def matrix_algebra(dims: Sequence[int]) -> FiniteCStarAlgebra:
    """``M_d1 + ... + M_dk`` in its matrix-unit basis."""
    labels, blocks = [], []
    for a, d in enumerate(dims):
        for i in range(d):
            for j in range(d):
                labels.append(f"e{a}_{i}{j}")
                blocks.append((a, i, j))
    n = len(blocks)
    index = {b: k for k, b in enumerate(blocks)}
    mult = np.zeros((n, n, n), dtype=complex)
    unit = np.zeros(n, dtype=complex)
    star = np.zeros((n, n), dtype=complex)
    for k, (a, i, j) in enumerate(blocks):
        if i == j:
            unit[k] = 1
        star[index[(a, j, i)], k] = 1
        for l, (b, p, q) in enumerate(blocks):
            if a == b and j == p:
                mult[index[(a, i, q)], k, l] = 1
    return FiniteCStarAlgebra(mult, unit, star, labels)


@dataclass
class StateData:
    """A positive functional together with its block densities.

    ``functional`` is a covector: ``phi(x) = functional @ x``.  States have
    ``phi(1) = 1``; the Haar functional of a weak Hopf algebra is stored in the
    same container but normalised by ``h(1) = eps(1)`` instead.
    """

    functional: np.ndarray
    density: list[np.ndarray]

    @classmethod
    def of(cls, A: FiniteCStarAlgebra, phi) -> "StateData":
        phi = asc(phi)
        return cls(phi, A.density(phi))

    def __call__(self, x) -> complex:
        return complex(self.functional @ asc(x))

    @property
    def faithful(self) -> bool:
        return all(np.linalg.eigvalsh((r + dag(r)) / 2).min() > 1e-9 for r in self.density)


@dataclass
class ModularData:
    """GNS data of a positive functional.

    ``W`` maps coordinates to the GNS space, ``Lambda(x) = W @ x``, and the
    inner product is ``<Lambda x, Lambda y> = phi(y* x)``, linear in the
    first slot.  Conjugate-linear operators ``X`` are stored as matrices
    ``x`` with ``X(xi) = x @ conj(xi)``.
    """

    algebra: FiniteCStarAlgebra
    phi: np.ndarray
    W: np.ndarray
    W_pinv: np.ndarray
    faithful: bool

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    @property
    def cyclic_vector(self) -> np.ndarray:
        return self.W @ self.algebra.unit

    def vector(self, x) -> np.ndarray:
        return self.W @ asc(x)

    def rep(self, a) -> np.ndarray:
        return self.W @ self.algebra.left(a) @ self.W_pinv

    def inner(self, x, y) -> complex:
        return complex(np.vdot(self.vector(y), self.vector(x)))

    def _require_faithful(self):
        if not self.faithful:
            raise NotFaithful("modular theory needs a faithful functional")

    def tomita(self) -> np.ndarray:
        """``S Lambda(x) = Lambda(x*)``."""
        self._require_faithful()
        return self.W @ self.algebra.star @ np.conj(self.W_pinv)

    def modular_operator(self) -> np.ndarray:
        s = self.tomita()
        return np.conj(dag(s) @ s)

    @property
    def J(self) -> np.ndarray:
        """Modular conjugation ``J xi = J_mat @ conj(xi)``."""
        s = self.tomita()
        return s @ np.conj(psd_sqrt(self.modular_operator(), inverse=True))

    def sigma_half(self, a) -> np.ndarray:
        """``sigma_{i/2}(a)`` as an operator on the GNS space."""
        D = self.modular_operator()
        return psd_sqrt(D, inverse=True) @ self.rep(a) @ psd_sqrt(D)

    def j_map(self, a) -> np.ndarray:
        """``j(a) = J pi(a)* J``, an anti-representation commuting with ``pi``."""
        j = self.J
        return j @ self.rep(a).T @ np.conj(j)


def gns(A: FiniteCStarAlgebra, phi, faithful: bool = False,
        tol: Tolerance = DEFAULT_TOL) -> ModularData:
    phi = asc(getattr(phi, "functional", phi))
    if not A.is_positive_functional(phi, tol):
        raise NotPSD("functional is not positive")
    K = A.gram(phi)
    w, v = hermitian_eig(K, Tolerance(tol.atol * 100, tol.rtol))
    keep = w > tol.rank_cutoff(K.shape) * max(1.0, float(np.max(np.abs(w))))
    if faithful and not np.all(keep):
        raise NotFaithful("density matrix is rank deficient")
    W = np.sqrt(w[keep])[:, None] * dag(v[:, keep])
    Wp = v[:, keep] / np.sqrt(w[keep])[None, :]
    return ModularData(A, phi, W, Wp, bool(np.all(keep)))


def check_conditional_expectation(E, A: FiniteCStarAlgebra, C, tol: Tolerance = DEFAULT_TOL,
                                  samples: int = 8, seed: int = 0) -> dict[str, float]:
    """Residuals of the conditional-expectation axioms for ``E : A -> span(C)``.

    Positivity is tested on the block diagonal matrix units and on seeded
    random elements ``x* x``; the result is 0 when all tested images are
    positive and 1 otherwise.
    """
    E, C = asc(E), range_basis(C, tol)
    res = {
        "idempotent": err(E @ E, E),
        "range": err(E @ C, C),
        "into": err(E - C @ (dag(C) @ E)),
        "unital": err(E @ A.unit, A.unit),
    }
    rng = np.random.default_rng(seed)
    tests = [u[i, i] for u in A.blocks().units for i in range(u.shape[0])]
    for _ in range(samples):
        x = rng.normal(size=A.dim) + 1j * rng.normal(size=A.dim)
        tests.append(A.mul(A.adj(x), x))
    res["positive"] = 0.0 if all(A.is_positive(E @ t, Tolerance(tol.atol * 10, tol.rtol)) for t in tests) else 1.0
    bim = 0.0
    for i in range(C.shape[1]):
        for j in range(C.shape[1]):
            c, d = C[:, i], C[:, j]
            for k in range(A.dim):
                a = A.e(k)
                bim = max(bim, err(E @ A.prod(c, a, d), A.prod(c, E @ a, d)))
    res["bimodule"] = bim
    return res


def is_conditional_expectation(E, A, C, tol: Tolerance = DEFAULT_TOL) -> bool:
    res = check_conditional_expectation(E, A, C, tol)
    return all(v <= tol.atol * 100 for v in res.values())
