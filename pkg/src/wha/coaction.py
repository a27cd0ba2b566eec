"""Right coactions of a finite quantum groupoid on finite-dimensional C*-algebras.

A coaction is stored as the matrix ``amap`` of shape ``(m*n, m)`` of the
linear map ``A -> A (x) B`` (``A`` the slow leg).  Read column-wise it is a
(generally non-orthonormal) comodule, and in a ``phi``-orthonormal basis of
``A`` it is the canonical implementing corepresentation.

The second half of the module covers equivariant Hilbert modules: finite
dimensional right Hilbert ``A``-modules with a compatible coaction, their
``B_s``-bimodule structure, the left action of corepresentations by interior
tensor product and the generator presentation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .algebra import FiniteCStarAlgebra, NotFaithful, StateData, check_conditional_expectation, gns
from .corep import Corep, _coeffs_from_map, _map_from_coeffs, decompose, registry, tensor
from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    asc,
    dag,
    err,
    null_space,
    range_basis,
    rank,
    solve_coords,
    subspace_distance,
)
from .weakhopf import NotApplicable, WeakHopf


class NoFaithfulInvariant(RuntimeError):
    pass


class NotInvariant(ValueError):
    pass


class IncompleteSpectrum(RuntimeError):
    pass


class InvalidCoaction(ValueError):
    pass


def _in_span_residual(basis, vecs) -> float:
    vecs = asc(vecs)
    if vecs.ndim == 1:
        vecs = vecs[:, None]
    if basis.shape[1] == 0:
        return err(vecs)
    Q = range_basis(basis)
    return err(vecs - Q @ (dag(Q) @ vecs))


@dataclass
class Coaction:
    algebra: FiniteCStarAlgebra
    parent: WeakHopf
    amap: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.amap = asc(self.amap)
        m, n = self.algebra.dim, self.parent.dim
        if self.amap.shape != (m * n, m):
            raise ValueError(f"amap must have shape ({m * n}, {m})")

    # -- basic data -------------------------------------------------------
    @property
    def A(self) -> FiniteCStarAlgebra:
        return self.algebra

    @property
    def m(self) -> int:
        return self.algebra.dim

    @property
    def n(self) -> int:
        return self.parent.dim

    def __call__(self, a) -> np.ndarray:
        return self.amap @ asc(a)

    def legs(self, a) -> np.ndarray:
        """``a(a)`` as an ``(m, n)`` matrix: ``a(a) = sum_{c,k} X[c,k] a_c (x) b_k``."""
        return np.reshape(self.amap @ asc(a), (self.m, self.n))

    @cached_property
    def one(self) -> np.ndarray:
        return self.amap @ self.algebra.unit

    @property
    def coeffs(self) -> np.ndarray:
        return _coeffs_from_map(self.amap, self.m, self.n)

    def left_on_tensor(self, X) -> np.ndarray:
        """Matrix of ``Y -> X Y`` on ``A (x) B``."""
        X = np.reshape(asc(X), (self.m, self.n))
        L = np.einsum("ak,cab,rkl->crbl", X, self.algebra.mult, self.parent.algebra.mult, optimize=True)
        return np.reshape(L, (self.m * self.n, self.m * self.n))

    def right_on_tensor(self, X) -> np.ndarray:
        """Matrix of ``Y -> Y X`` on ``A (x) B``."""
        X = np.reshape(asc(X), (self.m, self.n))
        R = np.einsum("bl,cab,rkl->crak", X, self.algebra.mult, self.parent.algebra.mult, optimize=True)
        return np.reshape(R, (self.m * self.n, self.m * self.n))

    # -- alpha: B_s -> A ---------------------------------------------------
    def alpha(self, x) -> np.ndarray:
        """``alpha(x) = x . 1_A = 1_A^1 eps(x 1_A^2)``."""
        G = self.parent
        w = G.counit @ G.algebra.left(x)
        return self.legs(self.algebra.unit) @ w

    @cached_property
    def alpha_image(self) -> np.ndarray:
        Bs = self.parent.Bs
        return range_basis(np.stack([self.alpha(Bs[:, i]) for i in range(Bs.shape[1])], 1))

    # -- axioms -----------------------------------------------------------
    def verify(self, tol: Tolerance = DEFAULT_TOL) -> dict[str, float]:
        A, G = self.algebra, self.parent
        m, n = self.m, self.n
        MA, MB = A.mult, G.algebra.mult
        X = np.reshape(self.amap, (m, n, m))
        lhs = np.einsum("pk,kij->pij", self.amap, MA)
        rhs = np.einsum("cab,rkl,aki,blj->crij", MA, MB, X, X, optimize=True).reshape(m * n, m, m)
        res = {"multiplicative": err(lhs, rhs)}
        star_lhs = self.amap @ A.star
        star_rhs = np.stack([A.adj_tensor(G.algebra, self.amap[:, j]) for j in range(m)], 1)
        # amap(x*) = amap(x)*; with x* = St conj(x) and linearity this reads amap St = adj(amap e_j)
        res["star"] = err(star_lhs, star_rhs)
        Im, In = np.eye(m), np.eye(n)
        res["coassociativity"] = err(np.kron(self.amap, In) @ self.amap, np.kron(Im, G.comult) @ self.amap)
        res["counit"] = err(np.kron(Im, G.counit[None, :]) @ self.amap, Im)
        X1 = self.legs(A.unit)
        Bt = G.Bt
        res["unit_in_A_Bt"] = err(X1.T - Bt @ (dag(Bt) @ X1.T))
        res["simplifiable"] = self.simplifiability_defect(tol)
        return res

    def simplifiability_defect(self, tol: Tolerance = DEFAULT_TOL) -> float:
        m, n = self.m, self.n
        X = np.reshape(self.amap, (m, n, m))
        gen = np.einsum("cka,rkb->crab", X, self.parent.algebra.mult).reshape(m * n, m * n)
        target = self.left_on_tensor(self.one)
        return subspace_distance(range_basis(gen, tol), range_basis(target, tol))

    def is_valid(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return all(v <= 10 * tol.atol for v in self.verify(tol).values())

    def identity_checks(self) -> dict[str, float]:
        """The compatibility identities relating ``alpha``, ``S`` and ``a``."""
        A, G = self.algebra, self.parent
        Bs, S = G.Bs, G.antipode
        res = {"legs": err(self.one, np.kron(self._alpha_matrix(), np.eye(self.n)) @ G.delta1)}
        c1 = c2 = 0.0
        for i in range(Bs.shape[1]):
            x = Bs[:, i]
            ax = self.alpha(x)
            for k in range(self.m):
                a = A.e(k)
                lhs = self.amap @ A.mul(ax, a)
                rhs = self.left_on_tensor(np.kron(A.unit, x)) @ self(a)
                c1 = max(c1, err(lhs, rhs))
                l2 = self.left_on_tensor(np.kron(ax, G.unit)) @ self(a)
                r2 = self.left_on_tensor(np.kron(A.unit, S @ x)) @ self(a)
                c2 = max(c2, err(l2, r2))
        res["alpha_left"] = c1
        res["alpha_antipode"] = c2
        hom = 0.0
        for i in range(Bs.shape[1]):
            for j in range(Bs.shape[1]):
                hom = max(hom, err(self.alpha(G.algebra.mul(Bs[:, i], Bs[:, j])),
                                   A.mul(self.alpha(Bs[:, i]), self.alpha(Bs[:, j]))))
        res["alpha_homomorphism"] = hom
        res["alpha_unital"] = err(self.alpha(G.unit), A.unit)
        return res

    def _alpha_matrix(self) -> np.ndarray:
        """``alpha`` extended to all of ``B`` by the same formula."""
        return np.stack([self.alpha(self.parent.algebra.e(k)) for k in range(self.n)], 1)

    # -- fixed points and the conditional expectation ------------------------
    @cached_property
    def fixed_points(self) -> np.ndarray:
        """Orthonormal (Euclidean) basis of ``A^a``."""
        L = self.left_on_tensor(self.one) @ np.kron(np.eye(self.m), self.parent.unit[:, None])
        return null_space(self.amap - L)

    @cached_property
    def T(self) -> np.ndarray:
        """``T^a = (id (x) h) a``."""
        X = np.reshape(self.amap, (self.m, self.n, self.m))
        return np.einsum("akj,k->aj", X, self.parent.h)

    def T_identity(self) -> np.ndarray:
        """``a -> alpha(S(E_t(a^2))) a^1`` evaluated leg-wise."""
        G, A = self.parent, self.algebra
        al = self._alpha_matrix() @ G.antipode @ G.E_t       # b -> alpha(S(E_t b))
        cols = []
        for j in range(self.m):
            X = self.legs(A.e(j))
            cols.append(sum(A.mul(al[:, k], X[:, k]) for k in range(self.n)))
        return np.stack(cols, 1)

    def conditional_expectation_report(self, tol: Tolerance = DEFAULT_TOL) -> dict[str, float]:
        F, T = self.fixed_points, self.T
        res = dict(check_conditional_expectation(T, self.algebra, F, tol))
        res["range_equals_fixed_points"] = subspace_distance(range_basis(T, tol), F)
        res["faithful"] = 0.0 if self._T_faithful(tol) else 1.0
        res["proof_identity"] = err(self.T_identity(), T)
        return res

    def _T_faithful(self, tol: Tolerance) -> bool:
        # T(a* a) = 0 forces a = 0: the quadratic form a -> phi(T(a*a)) is definite
        # for any faithful state phi on A^a; use the regular trace of A.
        A = self.algebra
        tr = A.regular_trace()
        K = A.gram(tr @ self.T)
        w = np.linalg.eigvalsh((K + dag(K)) / 2)
        return bool(w.min() > tol.atol * max(1.0, w.max()))

    @property
    def ergodic(self) -> bool:
        return self.fixed_points.shape[1] == 1

    # -- invariant states --------------------------------------------------
    @cached_property
    def fixed_algebra(self) -> FiniteCStarAlgebra:
        return self.algebra.subalgebra(self.fixed_points)

    def invariant_functionals(self) -> np.ndarray:
        """Rows spanning ``{omega o T}``: the linear space of invariant forms."""
        F = self.fixed_points
        coords, _ = solve_coords(F, self.T)
        return coords

    @cached_property
    def invariant_state(self) -> StateData:
        """``omega_0 o T`` with ``omega_0`` the normalised regular trace of ``A^a``."""
        Af = self.fixed_algebra
        w = Af.regular_trace()
        w = w / (w @ Af.unit)
        phi = w @ self.invariant_functionals()
        phi = phi / (phi @ self.algebra.unit)
        if not self.algebra.is_positive_functional(phi, faithful=True):
            raise NoFaithfulInvariant("omega_0 o T is not faithful")
        return StateData.of(self.algebra, phi)

    def invariance_report(self, phi=None, tol: Tolerance = DEFAULT_TOL) -> dict[str, float]:
        A, G = self.algebra, self.parent
        phi = asc(getattr(phi, "functional", phi)) if phi is not None else self.invariant_state.functional
        m, n = self.m, self.n
        slices = np.stack([phi @ self.legs(A.e(j)) for j in range(m)], 1)      # (phi (x) id)a(e_j)
        res = {
            "slice_in_Bs": _in_span_residual(G.Bs, slices),
            "slice_in_Bt": _in_span_residual(G.Bt, slices),
            "fixed_by_T": err(phi @ self.T, phi),
        }
        F = self.fixed_points
        omega = phi @ F
        res["factors_through_T"] = err(omega @ solve_coords(F, self.T)[0], phi)
        iv = 0.0
        for i in range(m):
            ax = self(A.e(i))
            for j in range(m):
                lhs = self.right_on_tensor(np.kron(A.e(j), G.unit)) @ ax
                rhs = self.left_on_tensor(np.kron(A.e(i), G.unit)) @ self(A.e(j))
                iv = max(iv, err(phi @ np.reshape(lhs, (m, n)),
                                 G.antipode @ (phi @ np.reshape(rhs, (m, n)))))
        res["antipode_slice"] = iv
        legs = range_basis(self.legs(A.unit), tol)
        res["unit_legs_centralize"] = max(
            (err(phi @ A.commutator_map(legs[:, c])) for c in range(legs.shape[1])), default=0.0)
        res["state"] = abs(phi @ A.unit - 1)
        res["faithful"] = 0.0 if A.is_positive_functional(phi, tol, faithful=True) else 1.0
        return res

    # -- canonical implementation ------------------------------------------
    def canonical_implementation(self, phi=None, tol: Tolerance = DEFAULT_TOL) -> "Implementation":
        A, G = self.algebra, self.parent
        phi = self.invariant_state if phi is None else phi
        func = asc(getattr(phi, "functional", phi))
        if not A.is_positive_functional(func, tol, faithful=True):
            raise NotFaithful("implementation needs a faithful state")
        if err(func @ self.T, func) > 100 * tol.atol:
            raise NotInvariant("state is not invariant under the coaction")
        md = gns(A, func, faithful=True, tol=tol)
        Y = md.W_pinv                                   # columns: phi-orthonormal basis of A
        U = np.stack([md.W @ self.legs(Y[:, j]) for j in range(Y.shape[1])], 1)
        V = Corep(G, U, f"V({self.name})" if self.name else "V")
        return Implementation(self, V, md)

    # -- spectral subspaces ---------------------------------------------------
    def spectral_subspace(self, U: Corep, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
        """``A_U = {a : a(a) in a(1)(A (x) B_U)}`` as an orthonormal basis."""
        BU = U.span(tol)
        m = self.m
        gens = np.concatenate([np.kron(np.eye(m), BU[:, [c]]) for c in range(BU.shape[1])], 1)
        S = range_basis(self.left_on_tensor(self.one) @ gens, tol)
        proj = np.eye(self.m * self.n) - S @ dag(S)
        return null_space(proj @ self.amap, tol)

    def spectral_subspace_bruteforce(self, U: Corep, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
        """Span of the images of all comodule maps ``H_U -> A``."""
        m, n, d = self.m, self.n, U.hdim
        X = np.reshape(self.amap, (m, n, m))
        # unknown R (m x d):  amap R e_j = sum_i R e_i (x) U_ij
        rows = []
        for j in range(d):
            blk = np.zeros((m * n, m * d), dtype=complex)
            for i in range(d):
                # contribution of column i of R on the right-hand side
                blk[:, i * m:(i + 1) * m] -= np.kron(np.eye(m), U.coeffs[i, j][:, None])
            blk[:, j * m:(j + 1) * m] += np.reshape(X, (m * n, m))
            rows.append(blk)
        N = null_space(np.vstack(rows), tol)
        if N.shape[1] == 0:
            return np.zeros((m, 0), dtype=complex)
        imgs = np.concatenate([np.reshape(N[:, c], (d, m)).T for c in range(N.shape[1])], 1)
        return range_basis(imgs, tol)

    def spectral_decomposition(self, tol: Tolerance = DEFAULT_TOL) -> "SpectralDecomposition":
        reg = registry(self.parent)
        parts = [self.spectral_subspace(R, tol) for R in reg.reps]
        total = np.hstack(parts)
        if sum(p.shape[1] for p in parts) != self.m or rank(total) != self.m:
            raise IncompleteSpectrum("spectral subspaces do not fill A")
        return SpectralDecomposition(self, parts, list(reg.labels))

    @cached_property
    def a_epsilon(self) -> np.ndarray:
        from .corep import trivial_corep
        return self.spectral_subspace(trivial_corep(self.parent))

    def a_epsilon_factorization(self, tol: Tolerance = DEFAULT_TOL) -> dict:
        G = self.parent
        if not G.coconnected:
            raise NotApplicable("factorisation needs a coconnected quantum groupoid")
        if not G.regularity_check(tol):
            raise NotApplicable("factorisation needs a regular quantum groupoid")
        F, Al = self.fixed_points, self.alpha_image
        prods = [self.algebra.mul(F[:, i], Al[:, j]) for i in range(F.shape[1]) for j in range(Al.shape[1])]
        span = range_basis(np.stack(prods, 1), tol)
        return {"A_eps": self.a_epsilon, "fixed_times_alpha": span,
                "distance": subspace_distance(self.a_epsilon, span)}

    def end_of_generator(self, tol: Tolerance = DEFAULT_TOL) -> "EndData":
        """Equivariant right ``A``-linear endomorphisms of ``A``."""
        A, m, n = self.algebra, self.m, self.n
        rows = []
        Im = np.eye(m)
        for k in range(m):
            R = A.right(A.e(k))
            rows.append(np.kron(Im, R.T) - np.kron(R, Im))              # T R - R T
        # amap T - (T (x) id) amap = 0
        C = self.amap
        rows.append(np.kron(C, Im) - _kron_left_action(C, m, n))
        N = null_space(np.vstack(rows), tol)
        maps = [np.reshape(N[:, c], (m, m)) for c in range(N.shape[1])]
        images = np.stack([T @ A.unit for T in maps], 1) if maps else np.zeros((m, 0))
        return EndData(self, maps, images)


def _kron_left_action(C: np.ndarray, m: int, n: int) -> np.ndarray:
    """Matrix of ``vec(T) -> vec((T (x) id_B) C)`` in row-major ``vec``."""
    # ((T (x) I) C)[a*n+k, j] = sum_b T[a, b] C[b*n+k, j]
    X = np.reshape(C, (m, n, m))                      # X[b, k, j]
    out = np.einsum("ac,bkj->akjcb", np.eye(m), X)    # coefficient of T[c, b]
    return np.reshape(out, (m * n * m, m * m))


@dataclass
class Implementation:
    coaction: Coaction
    corep: Corep
    gns: object

    def report(self) -> dict[str, float]:
        C, V, md = self.coaction, self.corep, self.gns
        G, A = C.parent, C.algebra
        op = V.operator
        X1 = C.legs(A.unit)
        jS = sum(np.kron(md.j_map(X1[:, k]), G.pi(G.antipode[:, k])) for k in range(C.n))
        piA = sum(np.kron(md.rep(X1[:, k]), G.pi(G.algebra.e(k))) for k in range(C.n))
        res = dict(V.verify())
        res["initial_support"] = err(dag(op) @ op, jS)
        res["final_support"] = err(op @ dag(op), piA)
        impl = 0.0
        hb = G.hilbert.dim
        for k in range(C.m):
            Xk = C.legs(A.e(k))
            lhs = sum(np.kron(md.rep(Xk[:, l]), G.pi(G.algebra.e(l))) for l in range(C.n))
            rhs = op @ np.kron(md.rep(A.e(k)), np.eye(hb)) @ dag(op)
            impl = max(impl, err(lhs, rhs))
        res["implements"] = impl
        return res


@dataclass
class SpectralDecomposition:
    coaction: Coaction
    parts: list[np.ndarray]
    labels: list[str]

    @property
    def dims(self) -> list[int]:
        return [p.shape[1] for p in self.parts]

    def report(self, tol: Tolerance = DEFAULT_TOL) -> dict[str, float]:
        from .corep import conjugate
        C = self.coaction
        A = C.algebra
        reg = registry(C.parent)
        res = {"completeness": float(abs(sum(self.dims) - A.dim))}
        prod = 0.0
        for x, Px in enumerate(self.parts):
            for y, Py in enumerate(self.parts):
                if Px.shape[1] == 0 or Py.shape[1] == 0:
                    continue
                t = tensor(reg.reps[x], reg.reps[y], tol)
                zs = sorted({s.label for s in decompose(t.corep, reg, tol)}) if t.corep.hdim else []
                allowed = np.hstack([self.parts[z] for z in zs]) if zs else np.zeros((A.dim, 0))
                prods = np.stack([A.mul(Px[:, i], Py[:, j]) for i in range(Px.shape[1])
                                  for j in range(Py.shape[1])], 1)
                prod = max(prod, _in_span_residual(allowed, prods))
        res["product_containment"] = prod
        conj = 0.0
        for x, Px in enumerate(self.parts):
            Pbar = C.spectral_subspace(conjugate(reg.reps[x]), tol)
            starred = np.stack([A.adj(Px[:, i]) for i in range(Px.shape[1])], 1) if Px.shape[1] else Px
            conj = max(conj, subspace_distance(range_basis(starred, tol), Pbar) if Px.shape[1] else float(Pbar.shape[1]))
        res["conjugate_is_adjoint"] = conj
        return res


@dataclass
class EndData:
    coaction: Coaction
    maps: list[np.ndarray]
    images: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.maps)

    def report(self) -> dict[str, float]:
        C = self.coaction
        A = C.algebra
        res = {"dimension_matches_fixed_points": float(abs(self.dim - C.fixed_points.shape[1]))}
        res["images_are_fixed"] = _in_span_residual(C.fixed_points, self.images) if self.dim else 0.0
        res["left_multiplication"] = max(
            (err(T, A.left(T @ A.unit)) for T in self.maps), default=0.0)
        # composition corresponds to the product in A
        hom = 0.0
        for S_ in self.maps:
            for T in self.maps:
                hom = max(hom, err((S_ @ T) @ A.unit, A.mul(S_ @ A.unit, T @ A.unit)))
        res["composition_is_product"] = hom
        return res


# -- constructions ----------------------------------------------------------


def regular_coaction(G: WeakHopf) -> Coaction:
    """``(B, Delta)``."""
    return Coaction(G.algebra, G, G.comult.copy(), f"{G.name}:regular" if G.name else "regular")


def coideal_coaction(G: WeakHopf, basis, name: str = "") -> Coaction:
    """Restriction of ``Delta`` to a unital right coideal *-subalgebra ``I``."""
    basis = asc(basis)
    A = G.algebra.subalgebra(basis)
    n, k = G.dim, basis.shape[1]
    cols = []
    for j in range(k):
        D = np.reshape(G.delta(basis[:, j]), (n, n))            # D[p, q] coefficient of b_p (x) b_q
        c, r = solve_coords(basis, D)                            # (k, n)
        if r > 1e-7:
            raise InvalidCoaction("subspace is not a right coideal")
        cols.append(c.reshape(-1))
    C = Coaction(A, G, np.stack(cols, 1), name or "coideal")
    C.embedding = basis
    return C


def source_coaction(G: WeakHopf) -> Coaction:
    """``(B_s, Delta|_{B_s})``: the unit object of the module category over ``B_s``."""
    return coideal_coaction(G, G.Bs, "Bs")


def trivial_coaction(G: WeakHopf) -> Coaction:
    """``a -> a (x) 1`` on ``C``; only a coaction when ``Delta(1) = 1 (x) 1``."""
    A = FiniteCStarAlgebra(np.ones((1, 1, 1)), np.ones(1), np.ones((1, 1)), ["1"])
    C = Coaction(A, G, G.unit[:, None].copy(), "trivial")
    return C


def perturbed_unit_coaction(C: Coaction, direction=None, size: float = 1e-3) -> Coaction:
    """Copy of ``C`` whose ``a(1_A)`` gets a component outside ``A (x) B_t``."""
    G = C.parent
    Bt = G.Bt
    out = np.eye(C.n) - Bt @ dag(Bt)
    v = out[:, int(np.argmax(np.linalg.norm(out, axis=0)))] if direction is None else asc(direction)
    amap = C.amap.copy()
    amap += size * np.outer(np.kron(C.algebra.unit, v), C.algebra.unit) / C.m
    return Coaction(C.algebra, G, amap, f"{C.name}:perturbed")


BUILTIN_COACTIONS = {
    "regular": regular_coaction,
    "source": source_coaction,
}


# -- equivariant Hilbert modules ----------------------------------------------


@dataclass
class EquivariantModule:
    """A right Hilbert ``A``-module with a compatible coaction.

    ``ract[k]`` is the matrix of ``xi -> xi . a_k``, ``ip[:, i, j]`` the
    coordinates of ``<e_i, e_j>_A`` (conjugate linear in the first slot) and
    ``amap`` the ``(N*n, N)`` matrix of ``xi -> a_E(xi)``.
    """

    coaction: Coaction
    ract: np.ndarray
    ip: np.ndarray
    amap: np.ndarray
    name: str = ""
    generators: np.ndarray | None = None
    quotient: np.ndarray | None = field(default=None, repr=False)     # ambient -> carrier
    section: np.ndarray | None = field(default=None, repr=False)      # carrier -> ambient

    @property
    def N(self) -> int:
        return self.amap.shape[1]

    @property
    def coeffs(self) -> np.ndarray:
        return _coeffs_from_map(self.amap, self.N, self.coaction.n)

    def inner(self, xi, eta) -> np.ndarray:
        return np.einsum("kij,i,j->k", self.ip, np.conj(asc(xi)), asc(eta))

    def scalar_gram(self, phi=None) -> np.ndarray:
        phi = self.coaction.invariant_state.functional if phi is None else asc(getattr(phi, "functional", phi))
        return np.einsum("k,kij->ij", phi, self.ip)

    def right(self, a) -> np.ndarray:
        return np.einsum("kij,k->ij", self.ract, asc(a))

    def left_bs(self, z) -> np.ndarray:
        """``z . xi = xi^1 eps(z xi^2)``."""
        G = self.coaction.parent
        return np.einsum("ijk,k->ij", self.coeffs, G.counit @ G.algebra.left(z))

    def right_bs(self, z) -> np.ndarray:
        """``xi . z = xi^1 eps(xi^2 z)``."""
        G = self.coaction.parent
        return np.einsum("ijk,k->ij", self.coeffs, G.counit @ G.algebra.right(z))

    def hat_action(self, f) -> np.ndarray:
        return np.einsum("ijk,k->ij", self.coeffs, asc(f))

    def _times_tensor(self, Y, Z) -> np.ndarray:
        """``(E (x) B) x (A (x) B) -> E (x) B``: ``(xi (x) b)(a (x) c) = xi.a (x) bc``."""
        MB = self.coaction.parent.algebra.mult
        return np.einsum("aqp,pl,ac,rlc->qr", self.ract, Y, Z, MB, optimize=True)

    def _tensor_inner(self, Y1, Y2) -> np.ndarray:
        """``<Y1, Y2>_{A (x) B}`` for ``Y1, Y2`` in ``E (x) B`` given as ``(N, n)`` matrices."""
        B = self.coaction.parent.algebra
        bstar = B.star                                             # b_l* = star[:, l]
        Bpart = np.einsum("rsc,sl->rlc", B.mult, bstar)            # b_l* b_c
        return np.einsum("kpq,pl,qc,rlc->kr", self.ip, np.conj(Y1), Y2, Bpart, optimize=True)

    def verify(self, tol: Tolerance = DEFAULT_TOL, samples: int = 6, seed: int = 0) -> dict[str, float]:
        C = self.coaction
        A, G = C.algebra, C.parent
        N, n, m = self.N, C.n, C.m
        IN = np.eye(N)
        res = {
            "coassociativity": err(np.kron(self.amap, np.eye(n)) @ self.amap, np.kron(IN, G.comult) @ self.amap),
            "counit": err(np.kron(IN, G.counit[None, :]) @ self.amap, IN),
        }
        # right module: xi.(ab) = (xi.a).b
        lhs = np.einsum("kab,kij->abij", A.mult, self.ract)
        rhs = np.einsum("bil,alj->abij", self.ract, self.ract)
        res["right_module"] = max(err(lhs, rhs), err(self.right(A.unit), IN))
        # inner product: <xi, eta.a> = <xi, eta> a, hermitian
        lin = np.einsum("kil,alj->kaij", self.ip, self.ract)
        lin2 = np.einsum("cka,kij->caij", A.mult, self.ip)
        res["inner_right_linear"] = err(lin, lin2)
        herm = np.einsum("ab,bji->aij", A.star, np.conj(self.ip))
        res["inner_hermitian"] = err(herm, self.ip)
        rng = np.random.default_rng(seed)
        pos = True
        for _ in range(samples):
            xi = rng.normal(size=N) + 1j * rng.normal(size=N)
            pos &= A.is_positive(self.inner(xi, xi), Tolerance(tol.atol * 10, tol.rtol))
        w = np.linalg.eigvalsh(self.scalar_gram()) if N else np.ones(1)
        res["inner_positive_definite"] = 0.0 if pos and w.min() > tol.atol else 1.0
        U = self.coeffs
        mod = herm_ = simple = 0.0
        one = C.legs(A.unit)
        for i in range(N):
            Yi = U[:, i, :]
            simple = max(simple, err(self._times_tensor(Yi, one), Yi))
            for k in range(m):
                lhs = self.coeffs_of(self.ract[k][:, i])
                mod = max(mod, err(lhs, self._times_tensor(Yi, C.legs(A.e(k)))))
            for j in range(N):
                herm_ = max(herm_, err(self._tensor_inner(Yi, U[:, j, :]),
                                       C.legs(self.ip[:, i, j])))
        res["module_compatible"] = mod
        res["inner_compatible"] = herm_
        res["absorbs_unit"] = simple
        b1 = b2 = 0.0
        Bs = G.Bs
        for c in range(Bs.shape[1]):
            z = Bs[:, c]
            Lz = self.left_bs(z)
            Lzs = self.left_bs(G.algebra.adj(z))
            for k in range(m):
                b1 = max(b1, err(self.ract[k] @ Lz, Lz @ self.ract[k]))
            b2 = max(b2, err(np.einsum("kpq,pi,qj->kij", self.ip, np.conj(Lz), IN),
                             np.einsum("kpq,pi,qj->kij", self.ip, IN, Lzs)))
        res["bimodule_associative"] = b1
        res["bimodule_adjoint"] = b2
        return res

    def coeffs_of(self, xi) -> np.ndarray:
        """``a_E(xi)`` as an ``(N, n)`` matrix."""
        return np.reshape(self.amap @ asc(xi), (self.N, self.coaction.n))

    def is_valid(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return all(v <= 100 * tol.atol for v in self.verify(tol).values())

    def corep(self, name: str = "") -> Corep:
        """The comodule ``E`` read in its scalar-orthonormal basis."""
        return Corep(self.coaction.parent, self.coeffs, name or self.name)


def _reduce(C: Coaction, ract, ip, amap, name: str = "", phi=None, generators=None,
            tol: Tolerance = DEFAULT_TOL) -> EquivariantModule:
    """Pass to the quotient by the null vectors and a ``phi``-orthonormal basis."""
    phi = C.invariant_state.functional if phi is None else asc(getattr(phi, "functional", phi))
    K = np.einsum("k,kij->ij", phi, ip)
    K = (K + dag(K)) / 2
    w, v = np.linalg.eigh(K)
    keep = w > tol.atol * 100 * max(1.0, float(np.max(np.abs(w)))) if w.size else np.zeros(0, bool)
    Q, wk = v[:, keep], w[keep]
    sec = Q / np.sqrt(wk)[None, :]
    quo = np.sqrt(wk)[:, None] * dag(Q)
    n = C.n
    U = _coeffs_from_map(amap, amap.shape[1], n)
    U2 = np.einsum("ai,abk,bj->ijk", quo.T, U, sec)
    ract2 = np.einsum("ia,kab,bj->kij", quo, ract, sec)
    ip2 = np.einsum("ai,kab,bj->kij", np.conj(sec), ip, sec)
    gens = None if generators is None else quo @ generators
    return EquivariantModule(C, ract2, ip2, _map_from_coeffs(U2), name, gens, quo, sec)


def generator_module(C: Coaction) -> EquivariantModule:
    """``A`` itself with ``<a, b>_A = a* b``."""
    A = C.algebra
    m = A.dim
    ract = np.stack([A.right(A.e(k)) for k in range(m)])
    ip = np.stack([np.stack([A.mul(A.star[:, i], A.e(j)) for j in range(m)], 1) for i in range(m)], 1)
    return _reduce(C, ract, ip, C.amap, "A", generators=A.unit[:, None])


def source_inner(V: Corep) -> np.ndarray:
    """``<e_i, e_j>_{B_s}`` as elements of ``B``: the unique ``x`` with ``eps(x t) = <beta(t) e_j, e_i>``."""
    G = V.parent
    Bs = G.Bs
    k = Bs.shape[1]
    E = np.array([[G.counit @ G.algebra.mul(Bs[:, c], Bs[:, a]) for c in range(k)] for a in range(k)])
    rhs = np.stack([V.beta(Bs[:, a]) for a in range(k)])          # (k, d, d): [a, i, j]
    coords = np.linalg.solve(E, rhs.reshape(k, -1))                # (k, d*d)
    return np.einsum("pc,cij->ijp", Bs, coords.reshape(k, V.hdim, V.hdim))


def corep_module(V: Corep, Cs: Coaction | None = None) -> EquivariantModule:
    """``H_V`` as an equivariant ``B_s``-correspondence."""
    G = V.parent
    Cs = Cs or source_coaction(G)
    basis = Cs.embedding
    ract = np.stack([V.beta(basis[:, a]) for a in range(basis.shape[1])])
    X = source_inner(V)                                             # (d, d, n)
    coords, _ = solve_coords(basis, X.reshape(-1, G.dim).T)
    ip = coords.reshape(basis.shape[1], V.hdim, V.hdim)
    return _reduce(Cs, ract, ip, V.coaction_map, f"H_{V.name}")


def direct_sum(E1: EquivariantModule, E2: EquivariantModule) -> EquivariantModule:
    C = E1.coaction
    N1, N2, n = E1.N, E2.N, C.n

    def bd(a, b):
        out = np.zeros((a.shape[0], N1 + N2, N1 + N2), dtype=complex)
        out[:, :N1, :N1], out[:, N1:, N1:] = a, b
        return out
    U = np.zeros((N1 + N2, N1 + N2, n), dtype=complex)
    U[:N1, :N1], U[N1:, N1:] = E1.coeffs, E2.coeffs
    gens = None
    if E1.generators is not None and E2.generators is not None:
        g1 = np.vstack([E1.generators, np.zeros((N2, E1.generators.shape[1]))])
        g2 = np.vstack([np.zeros((N1, E2.generators.shape[1])), E2.generators])
        gens = np.hstack([g1, g2])
    return EquivariantModule(C, bd(E1.ract, E2.ract), bd(E1.ip, E2.ip), _map_from_coeffs(U),
                             f"{E1.name}+{E2.name}", gens)


def module_tensor(V: Corep, E: EquivariantModule, tol: Tolerance = DEFAULT_TOL) -> EquivariantModule:
    """``H_V (x)_{B_s} E`` with ``<v (x) z, w (x) y>_A = <z, <v, w>_{B_s} . y>_A``."""
    C = E.coaction
    G = C.parent
    d, N = V.hdim, E.N
    if d == 0 or N == 0:
        z = np.zeros((C.m, 0, 0), dtype=complex)
        return EquivariantModule(C, z, z.copy(), np.zeros((0, 0), dtype=complex), f"{V.name}.{E.name}",
                                 None, np.zeros((0, d * N)), np.zeros((d * N, 0)))
    ract = np.stack([np.kron(np.eye(d), E.ract[k]) for k in range(C.m)])
    X = source_inner(V)
    lam = np.stack([np.stack([E.left_bs(X[i, j]) for j in range(d)]) for i in range(d)])   # [i, j, r, q]
    ip = np.einsum("kpr,ijrq->kipjq", E.ip, lam).reshape(C.m, d * N, d * N)
    W = np.einsum("ija,pqb,cab->ipjqc", V.coeffs, E.coeffs, G.algebra.mult, optimize=True)
    W = W.reshape(d * N, d * N, G.dim)
    gens = None
    if E.generators is not None:
        gens = np.kron(np.eye(d), E.generators)
    return _reduce(C, ract, ip, _map_from_coeffs(W), f"{V.name}.{E.name}", generators=gens, tol=tol)


def module_morphisms(E1: EquivariantModule, E2: EquivariantModule, tol: Tolerance = DEFAULT_TOL) -> list[np.ndarray]:
    """Equivariant right ``A``-linear maps ``E1 -> E2``."""
    N1, N2 = E1.N, E2.N
    I1, I2 = np.eye(N1), np.eye(N2)
    rows = [np.kron(I2, E1.ract[k].T) - np.kron(E2.ract[k], I1) for k in range(E1.coaction.m)]
    U1, U2 = E1.coeffs, E2.coeffs
    rows += [np.kron(I2, U1[:, :, k].T) - np.kron(U2[:, :, k], I1) for k in range(E1.coaction.n)]
    N = null_space(np.vstack(rows), tol)
    return [np.reshape(N[:, c], (N2, N1)) for c in range(N.shape[1])]


def unitary_defects(T: np.ndarray, E1: EquivariantModule, E2: EquivariantModule) -> dict[str, float]:
    """``T`` is an isomorphism in ``D_A``: A-linear, equivariant and preserving ``<.,.>_A``."""
    m, n = E1.coaction.m, E1.coaction.n
    res = {
        "A_linear": max(err(T @ E1.ract[k], E2.ract[k] @ T) for k in range(m)),
        "equivariant": max(err(T @ E1.coeffs[:, :, k], E2.coeffs[:, :, k] @ T) for k in range(n)),
        "inner_preserving": err(np.einsum("kpq,pi,qj->kij", E2.ip, np.conj(T), T), E1.ip),
        "bijective": float(abs(rank(T) - E1.N) + abs(E1.N - E2.N)),
    }
    return res


def is_isomorphic(E1: EquivariantModule, E2: EquivariantModule, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> bool:
    if E1.N != E2.N:
        return False
    Ms = module_morphisms(E1, E2, tol)
    if not Ms:
        return E1.N == 0
    rng = np.random.default_rng(seed)
    T = sum(c * M for c, M in zip(rng.normal(size=len(Ms)) + 1j * rng.normal(size=len(Ms)), Ms))
    return rank(T) == E1.N


def unit_map(E: EquivariantModule) -> np.ndarray:
    """``1 (x) E -> E``, ``z (x) xi -> z . xi``, on the carrier of ``trivial . E``."""
    from .corep import _unit_data
    G = E.coaction.parent
    one = _unit_data(G)
    Y = one.embedding
    amb = np.concatenate([E.left_bs(Y[:, a]) for a in range(Y.shape[1])], 1)
    return amb


def module_unit_defects(E: EquivariantModule) -> dict[str, float]:
    from .corep import _unit_data
    one = _unit_data(E.coaction.parent)
    T1 = module_tensor(one, E)
    L = unit_map(E) @ T1.section
    return unitary_defects(L, T1, E)


def module_associator(U: Corep, V: Corep, E: EquivariantModule, tol: Tolerance = DEFAULT_TOL):
    """Canonical map ``(U * V) . E -> U . (V . E)`` on carriers together with both modules."""
    tp = tensor(U, V, tol)
    left = module_tensor(tp.corep, E, tol)
    VE = module_tensor(V, E, tol)
    right = module_tensor(U, VE, tol)
    dU, dV, N = U.hdim, V.hdim, E.N
    Q = tp.Q.reshape(dU, dV, -1)                                    # [i, j, a]
    qVE = VE.quotient.reshape(VE.N, dV, N)                          # [c, j, p]
    amb = np.einsum("ija,cjp->icap", Q, qVE).reshape(dU * VE.N, tp.Q.shape[1] * N)
    return right.quotient @ amb @ left.section, left, right


def source_action_module(V: Corep, Cs: Coaction | None = None) -> np.ndarray:
    """``V . B_s -> H_V``, ``v (x) a -> v . a``, on the carriers."""
    Cs = Cs or source_coaction(V.parent)
    gen = generator_module(Cs)
    T1 = module_tensor(V, gen)
    HV = corep_module(V, Cs)
    d = V.hdim
    # ambient (i, a) -> beta(a) e_i in the original basis of H_V, then to HV carrier
    basis_A = gen.section                                           # generator carrier -> A coords
    amb = np.zeros((d, d * gen.N), dtype=complex)
    for i in range(d):
        for c in range(gen.N):
            a = Cs.embedding @ basis_A[:, c]                        # element of B_s in B coords
            amb[:, i * gen.N + c] = V.beta(a)[:, i]
    return HV.quotient @ amb @ T1.section, T1, HV


@dataclass
class Presentation:
    module: EquivariantModule
    corep: Corep
    induced: EquivariantModule          # H_V (x)_{B_s} A
    u: np.ndarray                        # E -> induced, isometric
    p: np.ndarray                        # u u*

    def report(self) -> dict[str, float]:
        E, I = self.module, self.induced
        u, p = self.u, self.p
        res = {
            "isometry": err(dag(u) @ u, np.eye(E.N)),
            "projection": max(err(p @ p, p), err(dag(p), p)),
            "range": err(p @ u, u),
        }
        m, n = E.coaction.m, E.coaction.n
        res["u_A_linear"] = max(err(u @ E.ract[k], I.ract[k] @ u) for k in range(m))
        res["u_equivariant"] = max(err(u @ E.coeffs[:, :, k], I.coeffs[:, :, k] @ u) for k in range(n))
        res["u_inner"] = err(np.einsum("kpq,pi,qj->kij", I.ip, np.conj(u), u), E.ip)
        res["p_invariant"] = max(err(p @ I.coeffs[:, :, k], I.coeffs[:, :, k] @ p) for k in range(n))
        res["p_A_linear"] = max(err(p @ I.ract[k], I.ract[k] @ p) for k in range(m))
        return res


def hat_submodule(E: EquivariantModule, vecs, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ``B^ . span(vecs)``."""
    vecs = asc(vecs)
    if vecs.ndim == 1:
        vecs = vecs[:, None]
    n = E.coaction.n
    imgs = [E.coeffs[:, :, k] @ vecs for k in range(n)]
    return range_basis(np.hstack(imgs), tol)


def generator_presentation(E: EquivariantModule, tol: Tolerance = DEFAULT_TOL) -> Presentation:
    """``E = p(H_V (x)_{B_s} A)`` via the polar decomposition of ``T(v (x) a) = v . a``."""
    C = E.coaction
    gens = E.generators if E.generators is not None else np.eye(E.N)
    E0 = hat_submodule(E, gens, tol)
    # enlarge until E0 . A = E
    if rank(np.hstack([E.ract[k] @ E0 for k in range(C.m)]), tol) < E.N:
        E0 = hat_submodule(E, np.eye(E.N), tol)
    V = E.corep().restrict(E0, f"V({E.name})")
    if not V.is_valid(tol):
        raise RuntimeError("comodule E_0 is not unitary for the invariant scalar product")
    gen = generator_module(C)
    induced = module_tensor(V, gen, tol)
    d = V.hdim
    amb = np.zeros((E.N, d * gen.N), dtype=complex)
    for i in range(d):
        for c in range(gen.N):
            a = gen.section[:, c]
            amb[:, i * gen.N + c] = E.right(a) @ E0[:, i]
    T = amb @ induced.section                                        # induced -> E
    Ts = dag(T)
    absT = _psd_sqrt_inv(T @ Ts)                                     # |T*|^{-1}
    u = Ts @ absT
    return Presentation(E, V, induced, u, u @ dag(u))


def _psd_sqrt_inv(M) -> np.ndarray:
    w, v = np.linalg.eigh((M + dag(M)) / 2)
    if w.min() <= 1e-12 * max(1.0, w.max()):
        raise RuntimeError("T is not surjective")
    return (v / np.sqrt(w)) @ dag(v)


def extend_scalars(E: EquivariantModule, f: np.ndarray, C1: Coaction, tol: Tolerance = DEFAULT_TOL) -> EquivariantModule:
    """``E (x)_{A0} A1`` along an equivariant unital *-homomorphism ``f: A0 -> A1``."""
    A1 = C1.algebra
    m1, N = A1.dim, E.N
    G = C1.parent
    ract = np.stack([np.kron(np.eye(N), A1.right(A1.e(k))) for k in range(m1)])
    fip = np.einsum("ak,kpq->apq", f, E.ip)                               # f(<e_p, e_q>)
    # <xi_p (x) b_s, xi_q (x) b_t> = b_s* f(<p, q>) b_t
    left = np.einsum("ayl,ys,lpq->aspq", A1.mult, A1.star, fip)              # b_s* f(<p, q>)
    ip = np.einsum("xat,aspq->xpsqt", A1.mult, left).reshape(m1, N * m1, N * m1)
    UE = E.coeffs
    X1 = np.reshape(C1.amap, (m1, G.dim, m1))                              # [c, k, j]
    W = np.einsum("pqa,cbj,rab->pcqjr", UE, X1, G.algebra.mult, optimize=True).reshape(N * m1, N * m1, G.dim)
    gens = None if E.generators is None else np.kron(E.generators, A1.unit[:, None])
    return _reduce(C1, ract, ip, _map_from_coeffs(W), f"{E.name}@{A1.dim}", generators=gens, tol=tol)


def is_equivariant_morphism(f: np.ndarray, C0: Coaction, C1: Coaction) -> dict[str, float]:
    A0, A1 = C0.algebra, C1.algebra
    res = {
        "unital": err(f @ A0.unit, A1.unit),
        "multiplicative": max(err(f @ A0.mul(A0.e(i), A0.e(j)), A1.mul(f[:, i], f[:, j]))
                              for i in range(A0.dim) for j in range(A0.dim)),
        "star": err(f @ A0.star, A1.star @ np.conj(f)),
        "equivariant": err(np.kron(f, np.eye(C0.n)) @ C0.amap, C1.amap @ f),
    }
    return res
