"""Unitary comodules and corepresentations of a finite quantum groupoid.

Both views share one coefficient tensor ``U`` of shape ``(d, d, n)``: in an
orthonormal basis ``e_i`` of the carrier,

    a(e_j) = sum_i e_i (x) U_ij,        U_ij = sum_k U[i, j, k] b_k.

The corepresentation operator on ``H (x) H_h`` is ``sum_ij E_ij (x) pi_h(U_ij)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    asc,
    cluster,
    dag,
    err,
    null_space,
    range_basis,
)
from .weakhopf import WeakHopf


class InvalidComodule(ValueError):
    pass


class InvalidCorep(ValueError):
    pass


class IncompleteRegistry(RuntimeError):
    pass


def _coeffs_from_map(amap: np.ndarray, d: int, n: int) -> np.ndarray:
    # amap[i*n + k, j] -> U[i, j, k]
    return np.transpose(np.reshape(asc(amap), (d, n, d)), (0, 2, 1))


def _map_from_coeffs(U: np.ndarray) -> np.ndarray:
    d, _, n = U.shape
    return np.reshape(np.transpose(U, (0, 2, 1)), (d * n, d))


@dataclass
class Corep:
    """A corepresentation in an orthonormal basis of its carrier."""

    parent: WeakHopf
    coeffs: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.coeffs = asc(self.coeffs)
        d1, d2, n = self.coeffs.shape
        if d1 != d2 or n != self.parent.dim:
            raise ValueError("coefficient tensor must be (d, d, dim B)")

    @property
    def hdim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def G(self) -> WeakHopf:
        return self.parent

    def U(self, i, j) -> np.ndarray:
        return self.coeffs[i, j]

    # -- module maps of B_s ------------------------------------------------
    def alpha(self, z) -> np.ndarray:
        """``alpha(z) v = v^1 eps(z v^2)``."""
        B, e = self.parent.algebra, self.parent.counit
        zl = e @ B.left(z)              # b -> eps(z b)
        return np.einsum("ijk,k->ij", self.coeffs, zl)

    def beta(self, z) -> np.ndarray:
        """``beta(z) v = v^1 eps(v^2 z)``."""
        B, e = self.parent.algebra, self.parent.counit
        zr = e @ B.right(z)
        return np.einsum("ijk,k->ij", self.coeffs, zr)

    def hat_action(self, f) -> np.ndarray:
        """Action of a dual element ``f`` (a covector on ``B``): ``f.v = v^1 <f, v^2>``."""
        return np.einsum("ijk,k->ij", self.coeffs, asc(f))

    # -- corepresentation operator ---------------------------------------
    @cached_property
    def operator(self) -> np.ndarray:
        G = self.parent
        return sum(np.kron(self.coeffs[:, :, k], G.pi(G.algebra.e(k))) for k in range(G.dim))

    @cached_property
    def operator_adjoint_formula(self) -> np.ndarray:
        """``V*(x (x) Lambda y) = x^1 (x) Lambda(S(x^2) y)``."""
        G = self.parent
        SU = np.einsum("ak,ijk->ija", G.antipode, self.coeffs)
        return sum(np.kron(SU[:, :, k], G.pi(G.algebra.e(k))) for k in range(G.dim))

    def _sep_projection(self, left, right_map) -> np.ndarray:
        G = self.parent
        n = G.dim
        es = np.reshape(G.separability_element, (n, n))
        out = 0
        for a in range(n):
            for b in range(n):
                if abs(es[a, b]) > 1e-14:
                    out = out + es[a, b] * np.kron(left(G.algebra.e(a)), G.pi(right_map(G.algebra.e(b))))
        return out

    @cached_property
    def e_beta_id(self) -> np.ndarray:
        return self._sep_projection(self.beta, lambda b: b)

    @cached_property
    def e_alpha_S(self) -> np.ndarray:
        return self._sep_projection(self.alpha, self.parent.S)

    # -- coefficients -------------------------------------------------------
    @property
    def coaction_map(self) -> np.ndarray:
        return _map_from_coeffs(self.coeffs)

    def character(self) -> np.ndarray:
        return np.einsum("iik->k", self.coeffs)

    def span(self, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
        """Orthonormal basis of ``B_U``, the span of the matrix coefficients."""
        d = self.hdim
        return range_basis(np.reshape(self.coeffs, (d * d, -1)).T, tol)

    def verify(self, tol: Tolerance = DEFAULT_TOL) -> dict[str, float]:
        G = self.parent
        B, n, d = G.algebra, G.dim, self.hdim
        U = self.coeffs
        res = {}
        # Delta(U_ij) = sum_k U_ik (x) U_kj
        DU = np.einsum("pk,ijk->ijp", G.comult, U)
        UU = np.einsum("ila,ljb->ijab", U, U).reshape(d, d, n * n)
        res["comultiplicative"] = err(DU, UU)
        res["counit"] = err(np.einsum("ijk,k->ij", U, G.counit), np.eye(d))
        # unitarity U_ij = S(U_ji)*
        SU = np.einsum("ak,jik->ija", G.antipode, U)
        res["unitarity"] = err(U, np.einsum("ab,ijb->ija", B.star, np.conj(SU)))
        V, Vs = self.operator, self.operator_adjoint_formula
        res["adjoint_formula"] = err(dag(V), Vs)
        res["initial_projection"] = err(dag(V) @ V, self.e_beta_id)
        res["final_projection"] = err(V @ dag(V), self.e_alpha_S)
        return res

    def is_valid(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return all(v <= 10 * tol.atol for v in self.verify(tol).values())

    def restrict(self, Wc: np.ndarray, name: str = "") -> "Corep":
        """Compression to an invariant subspace with orthonormal columns ``Wc``."""
        return Corep(self.parent, np.einsum("ai,abk,bj->ijk", np.conj(Wc), self.coeffs, Wc), name)

    def transform(self, T: np.ndarray) -> np.ndarray:
        """Coefficients of ``T U T^{-1}`` for an invertible ``T`` (no validity implied)."""
        Ti = np.linalg.inv(T)
        return np.einsum("ai,ijk,jb->abk", T, self.coeffs, Ti)


@dataclass
class Comodule:
    """A unitary comodule: ``coaction_map`` is the ``(d*n, d)`` matrix of ``a``."""

    parent: WeakHopf
    coaction_map: np.ndarray
    name: str = ""

    @property
    def hdim(self) -> int:
        return self.coaction_map.shape[1]

    @property
    def coeffs(self) -> np.ndarray:
        return _coeffs_from_map(self.coaction_map, self.hdim, self.parent.dim)

    def verify(self, tol: Tolerance = DEFAULT_TOL) -> dict[str, float]:
        G, d = self.parent, self.hdim
        C = asc(self.coaction_map)
        I = np.eye(d)
        res = {
            "coassociativity": err(np.kron(C, np.eye(G.dim)) @ C, np.kron(I, G.comult) @ C),
            "counit": err(np.kron(I, G.counit[None, :]) @ C, I),
        }
        U = self.coeffs
        SU = np.einsum("ak,jik->ija", G.antipode, U)
        res["unitarity"] = err(U, np.einsum("ab,ijb->ija", G.algebra.star, np.conj(SU)))
        return res

    def is_valid(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return all(v <= 10 * tol.atol for v in self.verify(tol).values())


def comodule_to_corep(M: Comodule, tol: Tolerance = DEFAULT_TOL) -> Corep:
    if not M.is_valid(tol):
        raise InvalidComodule(str(M.verify(tol)))
    return Corep(M.parent, M.coeffs, M.name)


def corep_to_comodule(U: Corep, tol: Tolerance = DEFAULT_TOL) -> Comodule:
    """``a(v) = V(v (x) Lambda_h(1))`` read back in coordinates."""
    G = U.parent
    d = U.hdim
    hs = G.hilbert
    xi = hs.vector(G.unit)
    V = U.operator
    cols = []
    for j in range(d):
        out = V @ np.kron(np.eye(d)[:, j], xi)                  # in H (x) H_h
        out = np.reshape(out, (d, hs.dim)) @ hs.W_pinv.T        # back to B-coordinates
        cols.append(out.reshape(-1))
    M = Comodule(G, np.stack(cols, axis=1), U.name)
    if not M.is_valid(tol):
        raise InvalidCorep(str(M.verify(tol)))
    return M


# -- constructions --------------------------------------------------------


def coideal_comodule(G: WeakHopf, basis, name: str = "") -> Corep:
    """Right coideal ``I`` with ``<v, w> = h(w* v)`` and coaction ``Delta|_I``."""
    basis = asc(basis)
    K = G.h_gram
    # orthonormalise w.r.t. h
    Q = range_basis(basis)
    g = dag(Q) @ K @ Q
    w, v = np.linalg.eigh((g + dag(g)) / 2)
    Y = Q @ v / np.sqrt(w)
    n, d = G.dim, Y.shape[1]
    coords = dag(Y) @ K                                   # b -> <b, y_i>
    U = np.empty((d, d, n), dtype=complex)
    for j in range(d):
        D = np.reshape(G.delta(Y[:, j]), (n, n))
        U[:, j, :] = coords @ D
    C = Corep(G, U, name)
    C.embedding = Y
    if err(np.einsum("ijk,ai->ajk", U, Y), np.stack([np.reshape(G.delta(Y[:, j]), (n, n)) for j in range(d)], 1)) > 1e-8:
        raise InvalidComodule("subspace is not a right coideal")
    return C


def trivial_corep(G: WeakHopf) -> Corep:
    """The unit object: ``B_s`` with ``Delta|_{B_s}``."""
    return coideal_comodule(G, G.Bs, "1")


def regular_corep(G: WeakHopf) -> Corep:
    return coideal_comodule(G, np.eye(G.dim), "regular")


def dual_module_bridge(U: Corep) -> np.ndarray:
    """Matrices ``rho[k]`` of the dual-basis functionals acting on ``H``."""
    return np.transpose(U.coeffs, (2, 0, 1))


def bridge_inverse(G: WeakHopf, rho: np.ndarray, name: str = "") -> Corep:
    """``a(v) = sum_k (f_k . v) (x) b_k``."""
    return Corep(G, np.transpose(asc(rho), (1, 2, 0)), name)


def bridge_defect(G: WeakHopf, rho: np.ndarray) -> dict[str, float]:
    """How far ``rho`` is from a unital *-representation of the dual algebra."""
    Bh = G.dual_wh.algebra
    res = {"unital": err(np.einsum("kij,k->ij", rho, Bh.unit), np.eye(rho.shape[1]))}
    # rho(f_k) rho(f_l) = rho(f_k f_l)
    direct = np.einsum("kab,lbc->klac", rho, rho)
    res["multiplicative"] = err(np.einsum("mkl,mac->klac", Bh.mult, rho), direct)
    starred = np.einsum("jk,jab->kab", Bh.star, rho)             # rho(f_k*)
    res["star"] = err(starred, np.conj(np.transpose(rho, (0, 2, 1))))
    return res


# -- morphisms and decomposition ---------------------------------------


def mor_space(U: Corep, V: Corep, tol: Tolerance = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal (Frobenius) basis of intertwiners ``T: H_U -> H_V``."""
    dU, dV, n = U.hdim, V.hdim, U.parent.dim
    IU, IV = np.eye(dU), np.eye(dV)
    rows = [np.kron(IV, U.coeffs[:, :, k].T) - np.kron(V.coeffs[:, :, k], IU) for k in range(n)]
    N = null_space(np.vstack(rows), tol)
    return [np.reshape(N[:, c], (dV, dU)) for c in range(N.shape[1])]


def _irreducible_pieces(U: Corep, rng: np.random.Generator, tol: Tolerance) -> list[np.ndarray]:
    """Orthonormal bases of irreducible subcomodules whose sum is ``H_U``."""
    End = mor_space(U, U, tol)
    if len(End) == 1:
        return [np.eye(U.hdim, dtype=complex)]
    for _ in range(20):
        X = sum(c * T for c, T in zip(rng.normal(size=len(End)) + 1j * rng.normal(size=len(End)), End))
        Hm = X + dag(X)
        w, v = np.linalg.eigh(Hm)
        groups = cluster(w, 1e-6 * max(1.0, float(np.max(np.abs(w)))))
        pieces = [v[:, g] for g in groups]
        # each piece must be irreducible: End of the restriction is one dimensional
        if all(len(mor_space(U.restrict(P), U.restrict(P), tol)) == 1 for P in pieces):
            return pieces
    raise RuntimeError("could not split corepresentation into irreducibles")


@dataclass
class Summand:
    label: int
    isometry: np.ndarray          # H_x -> H_U


@dataclass
class Registry:
    """One representative per class of irreducible corepresentations."""

    parent: WeakHopf
    reps: list[Corep]
    labels: list[str] = field(default_factory=list)

    @property
    def dims(self) -> list[int]:
        return [r.hdim for r in self.reps]

    def classify(self, P: Corep, tol: Tolerance = DEFAULT_TOL) -> tuple[int, np.ndarray]:
        """Label ``x`` and a unitary ``u: H_x -> H_P`` intertwining ``U^x`` and ``P``."""
        for x, R in enumerate(self.reps):
            if R.hdim != P.hdim:
                continue
            Ts = mor_space(R, P, tol)
            if Ts:
                T = Ts[0]
                lam = np.real(np.trace(dag(T) @ T)) / R.hdim
                return x, T / np.sqrt(lam)
        raise IncompleteRegistry("irreducible not found in the registry")


def _fingerprint(U: Corep) -> tuple:
    chi = U.character()
    return tuple(np.round(np.concatenate([chi.real, chi.imag]), 6).tolist())


def build_registry(G: WeakHopf, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> Registry:
    rng = np.random.default_rng(seed)
    W = regular_corep(G)
    reps: list[Corep] = []
    for P in _irreducible_pieces(W, rng, tol):
        R = W.restrict(P)
        if not any(r.hdim == R.hdim and mor_space(r, R, tol) for r in reps):
            reps.append(R)
    reps.sort(key=lambda r: (r.hdim, _fingerprint(r)))
    labels = [f"x{i}" for i in range(len(reps))]
    for r, l in zip(reps, labels):
        r.name = l
    return Registry(G, reps, labels)


def registry(G: WeakHopf) -> Registry:
    reg = getattr(G, "_registry", None)
    if reg is None:
        reg = build_registry(G)
        G._registry = reg
    return reg


def decompose(U: Corep, reg: Registry | None = None, tol: Tolerance = DEFAULT_TOL,
              seed: int = 0) -> list[Summand]:
    reg = reg or registry(U.parent)
    if U.hdim == 0:
        return []
    rng = np.random.default_rng(seed)
    out = []
    for P in _irreducible_pieces(U, rng, tol):
        x, u = reg.classify(U.restrict(P), tol)
        out.append(Summand(x, P @ u))
    out.sort(key=lambda s: s.label)
    return out


def multiplicities(summands: list[Summand], reg: Registry) -> dict[str, int]:
    counts = {l: 0 for l in reg.labels}
    for s in summands:
        counts[reg.labels[s.label]] += 1
    return {k: v for k, v in counts.items() if v}


def decomposition_defect(U: Corep, summands: list[Summand], reg: Registry) -> dict[str, float]:
    d = U.hdim
    ws = [s.isometry for s in summands]
    res = {"completeness": err(sum(w @ dag(w) for w in ws), np.eye(d)) if ws else float(d)}
    orth = 0.0
    for a, wa in enumerate(ws):
        for b, wb in enumerate(ws):
            target = np.eye(wa.shape[1]) if a == b else np.zeros((wa.shape[1], wb.shape[1]))
            orth = max(orth, err(dag(wa) @ wb, target))
    res["orthogonality"] = orth
    inter = 0.0
    for s in summands:
        X = reg.reps[s.label].coeffs
        inter = max(inter, err(np.einsum("ai,ijk->ajk", s.isometry, X),
                               np.einsum("abk,bj->ajk", U.coeffs, s.isometry)))
    res["intertwining"] = inter
    re = sum(np.einsum("ai,ijk,bj->abk", s.isometry, reg.reps[s.label].coeffs, np.conj(s.isometry))
             for s in summands)
    res["reassembly"] = err(re, U.coeffs)
    return res


# -- tensor products --------------------------------------------------------


@dataclass
class TensorProduct:
    """``U (*) V`` on the range of ``P`` inside ``H_U (x) H_V``."""

    corep: Corep
    Q: np.ndarray                 # orthonormal basis of range(P), columns in H_U (x) H_V
    P: np.ndarray
    left: Corep
    right: Corep


def tensor_projection(U: Corep, V: Corep) -> np.ndarray:
    """``P(x (x) y) = x^1 (x) y^1 eps(x^2 y^2)``."""
    G = U.parent
    B = G.algebra
    E = np.einsum("k,kab->ab", G.counit, B.mult)          # eps(b_a b_b)
    P = np.einsum("ija,klb,ab->ikjl", U.coeffs, V.coeffs, E)
    d1, d2 = U.hdim, V.hdim
    return np.reshape(P, (d1 * d2, d1 * d2))


def tensor_coeffs(U: Corep, V: Corep) -> np.ndarray:
    """Ambient coefficients ``W_(ik),(jl) = U_ij V_kl``."""
    B = U.parent.algebra
    W = np.einsum("ija,klb,cab->ikjlc", U.coeffs, V.coeffs, B.mult, optimize=True)
    d1, d2 = U.hdim, V.hdim
    return np.reshape(W, (d1 * d2, d1 * d2, -1))


def tensor(U: Corep, V: Corep, tol: Tolerance = DEFAULT_TOL) -> TensorProduct:
    P = tensor_projection(U, V)
    Q = range_basis(P, tol)
    W = tensor_coeffs(U, V)
    C = Corep(U.parent, np.einsum("ai,abk,bj->ijk", np.conj(Q), W, Q), f"({U.name}*{V.name})")
    return TensorProduct(C, Q, P, U, V)


# -- conjugation and rigidity -------------------------------------------


def _dual_power(G: WeakHopf, p: float) -> np.ndarray:
    Bh = G.dual_wh.algebra
    return Bh.element_power(G.dual_glike, p)


def conjugate(U: Corep) -> Corep:
    """Conjugate comodule on ``H-bar``: ``v-bar -> v-bar^1 (x) [G^{-1/2} -> (v^2)* <- G^{1/2}]``."""
    G = U.parent
    B = G.algebra
    gm, gp = _dual_power(G, -0.5), _dual_power(G, 0.5)
    starred = np.einsum("ab,ijb->ija", B.star, np.conj(U.coeffs))
    out = np.empty_like(starred)
    d = U.hdim
    for i in range(d):
        for j in range(d):
            out[i, j] = G.harpoon_right(G.harpoon_left(gm, starred[i, j]), gp)
    return Corep(G, out, f"conj({U.name})")


@dataclass
class Rigidity:
    U: Corep
    Ubar: Corep
    R: np.ndarray            # H_1 -> H_{Ubar (*) U}   (ambient coordinates in Ubar (x) U)
    Rbar: np.ndarray         # H_1 -> H_{U (*) Ubar}
    unit: Corep


def _unit_data(G: WeakHopf):
    one = getattr(G, "_unit_corep", None)
    if one is None:
        one = trivial_corep(G)
        G._unit_corep = one
    return one


def _extend_from_unit(G: WeakHopf, one: Corep, W: np.ndarray, v1: np.ndarray) -> np.ndarray:
    """Linear map ``R: H_1 -> ambient`` with ``R(f.1) = f.v1`` for dual elements ``f``."""
    n = G.dim
    Y = one.embedding
    K = G.h_gram
    D1 = np.reshape(G.delta1, (n, n))
    src, dst = [], []
    for k in range(n):
        z = D1[:, k]                                 # f_k . 1 = 1_1 <f_k, 1_2>
        src.append(dag(Y) @ K @ z)
        dst.append(W[:, :, k] @ v1)                  # f_k . v1
    S_, D_ = np.stack(src, 1), np.stack(dst, 1)
    R, *_ = np.linalg.lstsq(S_.T, D_.T, rcond=None)
    if err(R.T @ S_, D_) > 1e-7:
        raise RuntimeError("rigidity morphism is not well defined")
    return R.T


def rigidity(U: Corep, Ubar: Corep | None = None) -> Rigidity:
    G = U.parent
    Ubar = Ubar or conjugate(U)
    one = _unit_data(G)
    d = U.hdim
    gp, gm = _dual_power(G, 0.5), _dual_power(G, -0.5)
    I = np.eye(d)
    # R(1) = sum_i G^{1/2}.e_i-bar (x) e_i ;  Rbar(1) = sum_i e_i (x) G^{-1/2}.e_i-bar
    Ag = Ubar.hat_action(gp)
    Am = Ubar.hat_action(gm)
    r1 = sum(np.kron(Ag @ I[:, i], I[:, i]) for i in range(d))
    rb1 = sum(np.kron(I[:, i], Am @ I[:, i]) for i in range(d))
    P1, P2 = tensor_projection(Ubar, U), tensor_projection(U, Ubar)
    r1, rb1 = P1 @ r1, P2 @ rb1
    R = _extend_from_unit(G, one, tensor_coeffs(Ubar, U), r1)
    Rb = _extend_from_unit(G, one, tensor_coeffs(U, Ubar), rb1)
    return Rigidity(U, Ubar, R, Rb, one)


def left_unit_map(U: Corep, one: Corep | None = None) -> np.ndarray:
    """``l(z (x) v) = alpha(z) v`` on ``H_1 (x) H_U`` (ambient)."""
    one = one or _unit_data(U.parent)
    Y = one.embedding
    return np.concatenate([U.alpha(Y[:, a]) for a in range(Y.shape[1])], axis=1)


def right_unit_map(U: Corep, one: Corep | None = None) -> np.ndarray:
    """``r(v (x) z) = beta(z) v`` on ``H_U (x) H_1`` (ambient)."""
    one = one or _unit_data(U.parent)
    Y = one.embedding
    d, r = U.hdim, Y.shape[1]
    out = np.zeros((d, d * r), dtype=complex)
    for j in range(d):
        for a in range(r):
            out[:, j * r + a] = U.beta(Y[:, a])[:, j]
    return out


def unit_defects(U: Corep) -> dict[str, float]:
    """Unitarity of ``l`` and ``r`` restricted to the tensor-product carriers."""
    one = _unit_data(U.parent)
    tl, tr = tensor(one, U), tensor(U, one)
    L = left_unit_map(U, one) @ tl.Q
    Rm = right_unit_map(U, one) @ tr.Q
    d = U.hdim
    res = {
        "left_unitary": max(err(dag(L) @ L, np.eye(L.shape[1])), err(L @ dag(L), np.eye(d))),
        "right_unitary": max(err(dag(Rm) @ Rm, np.eye(Rm.shape[1])), err(Rm @ dag(Rm), np.eye(d))),
    }
    # the maps are morphisms: l U_1(*)U = U l
    res["left_intertwines"] = err(np.einsum("ai,ijk->ajk", L, tl.corep.coeffs),
                                  np.einsum("abk,bj->ajk", U.coeffs, L))
    res["right_intertwines"] = err(np.einsum("ai,ijk->ajk", Rm, tr.corep.coeffs),
                                   np.einsum("abk,bj->ajk", U.coeffs, Rm))
    return res


def conjugate_equation_defects(rig: Rigidity) -> dict[str, float]:
    """``(Rbar* (x) id)(id (x) R) = id_U`` and ``(R* (x) id)(id (x) Rbar) = id_Ubar``."""
    U, Ub, one = rig.U, rig.Ubar, rig.unit
    Id = np.eye(U.hdim)

    def chain(X, Rx, Rybar):
        # X -> X (x) 1 -> X (x) (Y (x) X) = (X (x) Y) (x) X -> 1 (x) X -> X
        rinv = np.linalg.pinv(right_unit_map(X, one) @ tensor(X, one).Q)
        rinv = tensor(X, one).Q @ rinv                       # H_X -> H_X (x) H_1
        step = np.kron(np.eye(X.hdim), Rx) @ rinv             # -> H_X (x) H_Y (x) H_X
        step = np.kron(dag(Rybar), np.eye(X.hdim)) @ step     # -> H_1 (x) H_X
        return left_unit_map(X, one) @ step

    res = {
        "zigzag_U": err(chain(U, rig.R, rig.Rbar), Id),
        "zigzag_Ubar": err(chain(Ub, rig.Rbar, rig.R), np.eye(Ub.hdim)),
    }
    # R and Rbar are morphisms from the unit object
    t1, t2 = tensor_coeffs(Ub, U), tensor_coeffs(U, Ub)
    res["R_morphism"] = err(np.einsum("ai,ijk->ajk", rig.R, one.coeffs), np.einsum("abk,bj->ajk", t1, rig.R))
    res["Rbar_morphism"] = err(np.einsum("ai,ijk->ajk", rig.Rbar, one.coeffs), np.einsum("abk,bj->ajk", t2, rig.Rbar))
    return res


# -- matrix coefficients and Peter-Weyl --------------------------------


def matrix_coefficients(U: Corep, tol: Tolerance = DEFAULT_TOL):
    return U.coeffs, U.span(tol)


def coefficient_defects(U: Corep) -> dict[str, float]:
    r = U.verify()
    return {k: r[k] for k in ("comultiplicative", "counit", "unitarity")}


@dataclass
class PeterWeyl:
    spans: list[np.ndarray]
    projections: list[np.ndarray]
    multiplicities: dict[str, int]


def peter_weyl(G: WeakHopf, tol: Tolerance = DEFAULT_TOL) -> PeterWeyl:
    reg = registry(G)
    spans = [R.span(tol) for R in reg.reps]
    total = np.hstack(spans)
    if total.shape[1] != G.dim or np.linalg.matrix_rank(total, tol=1e-8) != G.dim:
        raise IncompleteRegistry("matrix coefficients do not fill B")
    # projections along the direct sum decomposition
    inv = np.linalg.inv(total)
    projs, pos = [], 0
    for s in spans:
        k = s.shape[1]
        projs.append(total[:, pos:pos + k] @ inv[pos:pos + k])
        pos += k
    mult = multiplicities(decompose(regular_corep(G), reg, tol), reg)
    return PeterWeyl(spans, projs, mult)
