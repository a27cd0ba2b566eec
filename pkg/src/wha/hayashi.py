"""Fusion-category data and the Hayashi reconstruction of a weak Hopf C*-algebra.

Hom spaces of a multiplicity-free category are spanned by canonical trees
``f^{a,b}_c : c -> a (x) b``.  F-symbols are stored blockwise,

    a_{a,b,c} ((a b)_e c)_d = sum_f F[(a,b,c,d)][e, f] (a (b c)_f)_d,

with rows indexed by admissible ``e`` and columns by admissible ``f``.
Rigidity is ``coev_x = c_x f^{x,x*}_1`` and ``ev_x = e_x (f^{x*,x}_1)^*``;
the right unit constraint is ``rho_x f^{x,1}_x = r_x id_x`` and the left one is
taken trivial.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .algebra import FiniteCStarAlgebra
from .corep import Corep, decompose, registry, tensor
from .linalg import DEFAULT_TOL, Tolerance, dag, err
from .weakhopf import WeakHopf


class InvalidFusion(ValueError):
    pass


class PentagonViolation(InvalidFusion):
    pass


class TriangleViolation(InvalidFusion):
    pass


class RigidityViolation(InvalidFusion):
    pass


class UnsupportedMultiplicity(NotImplementedError):
    pass


class AxiomFailure(RuntimeError):
    def __init__(self, axiom: str, value: float):
        super().__init__(f"axiom {axiom!r} violated by {value:.3e}")
        self.axiom, self.value = axiom, value


class FusionMismatch(RuntimeError):
    def __init__(self, triples):
        super().__init__(f"fusion multiplicities differ on {triples}")
        self.triples = triples


@dataclass
class FusionData:
    labels: list[str]
    unit: int
    dual_map: list[int]
    N: np.ndarray                                   # N[x, y, z] = N_{xy}^z
    F: dict[tuple[int, int, int, int], np.ndarray]
    coev: np.ndarray
    ev: np.ndarray
    unit_constraints: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.N = np.asarray(self.N, dtype=int)
        self.coev = np.asarray(self.coev, dtype=complex)
        self.ev = np.asarray(self.ev, dtype=complex)
        self.unit_constraints = np.asarray(self.unit_constraints, dtype=complex)
        self.F = {tuple(int(i) for i in k): np.asarray(v, dtype=complex) for k, v in self.F.items()}

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def multiplicity_free(self) -> bool:
        return bool(np.all(self.N <= 1))

    def left_channels(self, a, b, c, d) -> list[int]:
        """Admissible ``e`` in ``((a b)_e c)_d``."""
        return [e for e in range(self.size) if self.N[a, b, e] and self.N[e, c, d]]

    def right_channels(self, a, b, c, d) -> list[int]:
        """Admissible ``f`` in ``(a (b c)_f)_d``."""
        return [f for f in range(self.size) if self.N[b, c, f] and self.N[a, f, d]]

    @cached_property
    def dense(self) -> np.ndarray:
        """All F-symbols as ``T[a, b, c, d, e, f]`` (zero where inadmissible)."""
        n = self.size
        T = np.zeros((n,) * 6, dtype=complex)
        for (a, b, c, d), blk in self.F.items():
            rows, cols = self.left_channels(a, b, c, d), self.right_channels(a, b, c, d)
            if blk.shape == (len(rows), len(cols)):
                T[a, b, c, d][np.ix_(rows, cols)] = blk
        return T

    def f(self, a, b, c, d, e, f) -> complex:
        return complex(self.dense[a, b, c, d, e, f])

    # -- validation -----------------------------------------------------------
    def check_fusion_rules(self) -> dict[str, float]:
        n, u = self.size, self.unit
        I = np.eye(n, dtype=int)
        unit_law = max(np.abs(self.N[:, u, :] - I).max(), np.abs(self.N[u, :, :] - I).max())
        duals = max(abs(int(self.N[x, self.dual_map[x], u]) - 1) for x in range(n))
        invol = max(abs(self.dual_map[self.dual_map[x]] - x) for x in range(n))
        assoc = np.abs(np.einsum("abe,ecd->abcd", self.N, self.N)
                       - np.einsum("bcf,afd->abcd", self.N, self.N)).max()
        return {"unit_law": float(unit_law), "duals": float(duals),
                "dual_involutive": float(invol), "associativity": float(assoc)}

    def check_blocks(self) -> dict[str, float]:
        shape, unitary = 0.0, 0.0
        for a, b, c, d in itertools.product(range(self.size), repeat=4):
            rows, cols = self.left_channels(a, b, c, d), self.right_channels(a, b, c, d)
            if not rows and not cols:
                continue
            blk = self.F.get((a, b, c, d))
            if blk is None or blk.shape != (len(rows), len(cols)):
                shape = 1.0
                continue
            unitary = max(unitary, err(dag(blk) @ blk, np.eye(len(cols))),
                          err(blk @ dag(blk), np.eye(len(rows))))
        return {"block_shapes": shape, "unitarity": unitary}

    def pentagon_defect(self) -> float:
        """``F^{fcd}_e[g,l] F^{abl}_e[f,k] = sum_h F^{abc}_g[f,h] F^{ahd}_e[g,k] F^{bcd}_k[h,l]``."""
        T = self.dense
        lhs = np.einsum("fcdegl,ablefk->abcdefgkl", T, T)
        rhs = np.einsum("abcgfh,ahdegk,bcdkhl->abcdefgkl", T, T, T, optimize=True)
        return float(np.abs(lhs - rhs).max())

    def triangle_defect(self) -> float:
        n, u, r = self.size, self.unit, self.unit_constraints
        worst = 0.0
        for a, c, d in itertools.product(range(n), repeat=3):
            if self.N[a, c, d]:
                worst = max(worst, abs(self.f(a, u, c, d, a, c) - r[a]))
        return worst

    def zigzag_defects(self) -> dict[str, float]:
        u, r = self.unit, self.unit_constraints
        left = right = 0.0
        for x in range(self.size):
            xb = self.dual_map[x]
            ce = self.coev[x] * self.ev[x]
            left = max(left, abs(ce * self.f(x, xb, x, x, u, u) * r[x] - 1))
            right = max(right, abs(ce * np.conj(self.f(xb, x, xb, xb, u, u)) * np.conj(r[xb]) - 1))
        return {"zigzag_left": left, "zigzag_right": right}

    def verify(self) -> dict[str, float]:
        rep = self.check_fusion_rules()
        rep.update(self.check_blocks())
        rep["pentagon"] = self.pentagon_defect()
        rep["triangle"] = self.triangle_defect()
        rep["unit_constraints_unitary"] = float(np.abs(np.abs(self.unit_constraints) - 1).max())
        rep.update(self.zigzag_defects())
        return rep

    def validate(self, tol: Tolerance = DEFAULT_TOL) -> None:
        """Raise the first failing invariant (fusion rules, blocks, pentagon, triangle, rigidity)."""
        fr = self.check_fusion_rules()
        if any(v for v in fr.values()):
            raise InvalidFusion(f"fusion rules violated: {fr}")
        blocks = self.check_blocks()
        if blocks["block_shapes"] or blocks["unitarity"] > tol.atol:
            raise InvalidFusion(f"F-symbol blocks invalid: {blocks}")
        p = self.pentagon_defect()
        if p > tol.atol:
            raise PentagonViolation(f"pentagon defect {p:.3e}")
        t = self.triangle_defect()
        if t > tol.atol:
            raise TriangleViolation(f"triangle defect {t:.3e}")
        z = self.zigzag_defects()
        if max(z.values()) > tol.atol:
            raise RigidityViolation(f"conjugate equations violated: {z}")


def pointed_fusion(n: int, k: int = 0, name: str = "") -> FusionData:
    """``Vec_{Z/n}`` with the 3-cocycle ``exp(2 pi i k a (b + c - [b+c]) / n^2)``."""
    N = np.zeros((n, n, n), dtype=int)
    for a, b in itertools.product(range(n), repeat=2):
        N[a, b, (a + b) % n] = 1

    def omega(a, b, c):
        return np.exp(2j * np.pi * k * a * (b + c - (b + c) % n) / n**2)

    F = {(a, b, c, (a + b + c) % n): np.array([[omega(a, b, c)]])
         for a, b, c in itertools.product(range(n), repeat=3)}
    dual_map = [(-a) % n for a in range(n)]
    coev = np.ones(n, dtype=complex)
    ev = np.array([1 / omega(a, dual_map[a], a) for a in range(n)])
    return FusionData([str(a) for a in range(n)], 0, dual_map, N, F, coev, ev,
                      np.ones(n, dtype=complex), name or f"vecz{n}" + (f"^{k}" if k else ""))


def vecz2(twisted: bool = False) -> FusionData:
    return pointed_fusion(2, int(twisted), "vecz2-twisted" if twisted else "vecz2")


def trivial_fusion() -> FusionData:
    return pointed_fusion(1, 0, "trivial")


def corrupt_fusion(Fd: FusionData, key=None, phase: float = 0.3) -> FusionData:
    """Copy of ``Fd`` with one F-symbol multiplied by a phase (breaks the pentagon)."""
    F = {k: v.copy() for k, v in Fd.F.items()}
    key = key or sorted(k for k in F if len(set(k[:3])) > 1 or k[0] != Fd.unit)[-1]
    F[key] = F[key] * np.exp(1j * phase)
    return FusionData(list(Fd.labels), Fd.unit, list(Fd.dual_map), Fd.N.copy(), F,
                      Fd.coev.copy(), Fd.ev.copy(), Fd.unit_constraints.copy(), Fd.name + "-corrupt")


BUILTIN_FUSION = {
    "vecz2-fusion": vecz2,
    "vecz2-twisted": lambda: vecz2(True),
    "vecz3": lambda: pointed_fusion(3),
    "trivial-fusion": trivial_fusion,
}


# -- the Hayashi functor -----------------------------------------------------


@dataclass
class HayashiModule:
    """``H_x = sum_{y,z} C(z, y (x) x)`` with basis ``e_(y,z) = f^{y,x}_z``."""

    label: int
    basis: list[tuple[int, int]]
    size: int

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, y, z) -> int:
        return self.basis.index((y, z))

    def left_proj(self, y) -> np.ndarray:
        return np.diag([1.0 if b[0] == y else 0.0 for b in self.basis])

    def right_proj(self, z) -> np.ndarray:
        return np.diag([1.0 if b[1] == z else 0.0 for b in self.basis])

    def verify(self) -> dict[str, float]:
        L = [self.left_proj(y) for y in range(self.size)]
        R = [self.right_proj(z) for z in range(self.size)]
        I = np.eye(self.dim)
        idem = max(max(err(p @ p, p) for p in L + R), 0.0)
        orth = max([err(L[a] @ L[b]) for a in range(self.size) for b in range(self.size) if a != b]
                   + [err(R[a] @ R[b]) for a in range(self.size) for b in range(self.size) if a != b]
                   + [0.0])
        full = max(err(sum(L), I), err(sum(R), I))
        commute = max(err(p @ q, q @ p) for p in L for q in R)
        return {"idempotent": idem, "orthogonal": orth, "complete": full, "bimodule": commute}


@dataclass
class Hayashi:
    fusion: FusionData
    modules: list[HayashiModule]

    def jinv(self, x: int, y: int) -> np.ndarray:
        """``J^{-1}_{x,y}: H_x (x)_R H_y -> (+)_u H_u`` as a matrix.

        Columns are balanced pairs ``(e^x_(z,t), e^y_(t,s))``; rows are
        ``(u, e^u_(z,s))`` over ``N_{xy}^u = 1``.
        """
        Fd = self.fusion
        Hx, Hy = self.modules[x], self.modules[y]
        cols = [(i, j) for i, (z, t) in enumerate(Hx.basis)
                for j, (t2, s) in enumerate(Hy.basis) if t == t2]
        rows = [(u, k) for u in range(Fd.size) if Fd.N[x, y, u]
                for k in range(self.modules[u].dim)]
        M = np.zeros((len(rows), len(cols)), dtype=complex)
        for c, (i, j) in enumerate(cols):
            z, t = Hx.basis[i]
            s = Hy.basis[j][1]
            for r, (u, k) in enumerate(rows):
                if self.modules[u].basis[k] == (z, s):
                    M[r, c] = Fd.f(z, x, y, s, t, u)
        return M

    def verify(self) -> dict[str, float]:
        rep = {"modules": max(max(m.verify().values()) for m in self.modules)}
        uni = 0.0
        n = self.fusion.size
        for x, y in itertools.product(range(n), repeat=2):
            J = self.jinv(x, y)
            uni = max(uni, err(dag(J) @ J, np.eye(J.shape[1])), err(J @ dag(J), np.eye(J.shape[0])))
        rep["jinv_unitary"] = uni
        return rep


def hayashi_functor(Fd: FusionData, tol: Tolerance = DEFAULT_TOL) -> Hayashi:
    Fd.validate(tol)
    if not Fd.multiplicity_free:
        raise UnsupportedMultiplicity("the Hayashi builder handles multiplicity-free data only")
    n = Fd.size
    mods = [HayashiModule(x, [(y, z) for y in range(n) for z in range(n) if Fd.N[y, x, z]], n)
            for x in range(n)]
    return Hayashi(Fd, mods)


# -- the weak Hopf algebra ------------------------------------------------------


@dataclass
class HayashiGroupoid:
    """``B = (+)_x Hbar_x (x) H_x`` with basis ``(x, a, b) <-> ebar^x_a (x) e^x_b``."""

    hayashi: Hayashi
    weak_hopf: WeakHopf
    index: dict[tuple[int, int, int], int] = field(repr=False)

    @property
    def fusion(self) -> FusionData:
        return self.hayashi.fusion

    def comodule(self, x: int) -> Corep:
        """``a_x(v) = sum_j e_j (x) (ebar_j (x) v)``."""
        G = self.weak_hopf
        d = self.hayashi.modules[x].dim
        U = np.zeros((d, d, G.dim), dtype=complex)
        for i, j in itertools.product(range(d), repeat=2):
            U[i, j, self.index[(x, i, j)]] = 1
        return Corep(G, U, f"H_{self.fusion.labels[x]}")

    def block_sizes(self) -> list[int]:
        return [m.dim for m in self.hayashi.modules]


def _structure(H: Hayashi):
    Fd = H.fusion
    n, u = Fd.size, Fd.unit
    r, c = Fd.unit_constraints, Fd.coev
    mods = H.modules
    index = {}
    for x in range(n):
        d = mods[x].dim
        for a, b in itertools.product(range(d), repeat=2):
            index[(x, a, b)] = len(index)
    D = len(index)

    mult = np.zeros((D, D, D), dtype=complex)
    for x, y in itertools.product(range(n), repeat=2):
        Hx, Hy = mods[x], mods[y]
        for (a, (z1, t1)), (cc, (t1b, s1)) in itertools.product(enumerate(Hx.basis), enumerate(Hy.basis)):
            if t1 != t1b:
                continue
            for (b, (z2, t2)), (dd, (t2b, s2)) in itertools.product(enumerate(Hx.basis), enumerate(Hy.basis)):
                if t2 != t2b:
                    continue
                i, j = index[(x, a, b)], index[(y, cc, dd)]
                for w in range(n):
                    if not Fd.N[x, y, w]:
                        continue
                    coef = np.conj(Fd.f(z1, x, y, s1, t1, w)) * Fd.f(z2, x, y, s2, t2, w)
                    if coef:
                        k = index[(w, mods[w].index(z1, s1), mods[w].index(z2, s2))]
                        mult[k, i, j] += coef

    unit = np.zeros(D, dtype=complex)
    for y, y2 in itertools.product(range(n), repeat=2):
        a, b = mods[u].index(y, y), mods[u].index(y2, y2)
        unit[index[(u, a, b)]] = r[y] / r[y2]

    comult = np.zeros((D * D, D), dtype=complex)
    counit = np.zeros(D, dtype=complex)
    for (x, a, b), k in index.items():
        counit[k] = float(a == b)
        for j in range(mods[x].dim):
            comult[index[(x, a, j)] * D + index[(x, j, b)], k] = 1

    antipode = np.zeros((D, D), dtype=complex)
    for (x, a, b), k in index.items():
        xb = Fd.dual_map[x]
        y, z = mods[x].basis[a]          # w = e^x_(y,z)
        y2, z2 = mods[x].basis[b]        # v = e^x_(y2,z2)
        phi = r[y2] * np.conj(c[x]) * Fd.f(y2, x, xb, y2, z2, u)
        psi = np.conj(r[y]) * c[x] * np.conj(Fd.f(y, x, xb, y, z, u))
        kk = index[(xb, mods[xb].index(z2, y2), mods[xb].index(z, y))]
        antipode[kk, k] = phi * psi

    # star transported from the matrix adjoint on the dual (+)_x B(H_x)
    P = np.zeros((D, D))
    for (x, a, b), k in index.items():
        P[index[(x, b, a)], k] = 1
    star = antipode @ P
    return index, mult, unit, star, comult, counit, antipode


def build_weak_hopf(Fd: FusionData, tol: Tolerance = DEFAULT_TOL, check: bool = True) -> HayashiGroupoid:
    H = hayashi_functor(Fd, tol)
    index, mult, unit, star, comult, counit, antipode = _structure(H)
    labels = [f"{Fd.labels[x]}:{a}|{b}" for (x, a, b) in index]
    B = FiniteCStarAlgebra(mult, unit, star, labels)
    G = WeakHopf(B, comult, counit, antipode, f"hayashi({Fd.name})")
    if check:
        rep = G.verify(tol)
        bad = {k: v for k, v in rep.items() if v > 10 * tol.atol}
        if bad:
            k = max(bad, key=bad.get)
            raise AxiomFailure(k, bad[k])
    return HayashiGroupoid(H, G, index)


def build_dual_algebra(HG: HayashiGroupoid, tol: Tolerance = DEFAULT_TOL) -> dict:
    blocks = sorted(HG.weak_hopf.dual().algebra.blocks(tol).dims)
    expected = sorted(HG.block_sizes())
    return {"blocks": blocks, "expected": expected, "match": blocks == expected}


@dataclass
class RoundTripReport:
    labels: dict[int, int]          # fusion label -> registry label
    table: np.ndarray               # reconstructed N[x, y, z]
    expected: np.ndarray
    comodule_defect: float

    @property
    def ok(self) -> bool:
        return bool(np.array_equal(self.table, self.expected))

    def mismatches(self) -> list[tuple[int, int, int]]:
        return [tuple(int(i) for i in t) for t in np.argwhere(self.table != self.expected)]


def fusion_roundtrip(Fd: FusionData, tol: Tolerance = DEFAULT_TOL, strict: bool = True) -> RoundTripReport:
    """Rebuild the fusion table from the corepresentation theory of the reconstructed groupoid."""
    HG = build_weak_hopf(Fd, tol)
    G = HG.weak_hopf
    reg = registry(G)
    if len(reg.reps) != Fd.size:
        raise FusionMismatch([("classes", len(reg.reps), Fd.size)])
    comods = [HG.comodule(x) for x in range(Fd.size)]
    cdef = max(max(U.verify(tol).values()) for U in comods)
    to_reg = {x: reg.classify(U, tol)[0] for x, U in enumerate(comods)}
    from_reg = {v: k for k, v in to_reg.items()}
    if len(from_reg) != Fd.size:
        raise FusionMismatch([("labels", to_reg)])
    n = Fd.size
    table = np.zeros((n, n, n), dtype=int)
    for x, y in itertools.product(range(n), repeat=2):
        for s in decompose(tensor(comods[x], comods[y], tol).corep, reg, tol):
            table[x, y, from_reg[s.label]] += 1
    rep = RoundTripReport(to_reg, table, Fd.N.copy(), cdef)
    if strict and not rep.ok:
        raise FusionMismatch(rep.mismatches())
    return rep
