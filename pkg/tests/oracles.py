"""Independent brute-force oracles.

Each function works directly on the raw structure tensors with scipy and
shares no code with the package, so agreement is a genuine cross-check.
"""
import numpy as np
import scipy.linalg as sla


def null(M, atol=1e-9):
    """Null space with an absolute singular-value cutoff (scaled by max(1, |M|))."""
    M = np.atleast_2d(M)
    if M.shape[0] == 0:
        return np.eye(M.shape[1], dtype=complex)
    _, s, vh = sla.svd(M)
    cut = atol * max(1.0, s[0] if len(s) else 0.0)
    r = int(np.sum(s > cut))
    return vh[r:].conj().T


def orth(M, atol=1e-9):
    u, s, _ = sla.svd(np.atleast_2d(M), full_matrices=False)
    cut = atol * max(1.0, s[0] if len(s) else 0.0)
    return u[:, :int(np.sum(s > cut))]


def product(M, x, y):
    return np.einsum("kij,i,j->k", M, x, y)


def tensor_mult(MA, MB):
    """Structure constants of A (x) B with the A-index varying slowest."""
    m, n = MA.shape[0], MB.shape[0]
    T = np.einsum("kia,ljb->klijab", MA, MB)
    return T.reshape(m * n, m * n, m * n)


def eps_t(G):
    """Matrix of x -> (eps (x) id)(Delta(1)(x (x) 1))."""
    n = G.dim
    M, eps = G.algebra.mult, G.counit
    d1 = (G.comult @ G.algebra.unit).reshape(n, n)
    out = np.zeros((n, n), dtype=complex)
    for x in range(n):
        for i in range(n):
            out[:, x] += d1[i, :] * (eps @ M[:, i, x])
    return out


def haar(G):
    """Solve the Haar axioms written out literally; returns (solution dimension, h)."""
    n = G.dim
    D = G.comult.reshape(n, n, n)
    Et = eps_t(G)
    rows = []
    # (id (x) h)Delta(b_k) = (eps_t (x) h)Delta(b_k), one row per (component, k)
    for k in range(n):
        for a in range(n):
            r = np.zeros(n + 1, dtype=complex)
            for j in range(n):
                r[j] = D[a, j, k] - Et[a, :] @ D[:, j, k]
            rows.append(r)
    # h o S = h
    for k in range(n):
        r = np.zeros(n + 1, dtype=complex)
        r[:n] = G.antipode[:, k]
        r[k] -= 1
        rows.append(r)
    # h o eps_t = eps, with t standing for the right-hand side scale
    for k in range(n):
        r = np.zeros(n + 1, dtype=complex)
        r[:n] = Et[:, k]
        r[n] = -G.counit[k]
        rows.append(r)
    # (id (x) h)Delta(1) = 1
    d1 = (G.comult @ G.algebra.unit).reshape(n, n)
    for a in range(n):
        r = np.zeros(n + 1, dtype=complex)
        r[:n] = d1[a, :]
        r[n] = -G.algebra.unit[a]
        rows.append(r)
    N = null(np.array(rows))
    h = N[:n, 0] / N[n, 0] if N.shape[1] == 1 else None
    return N.shape[1], h


def fixed_points(C):
    """{a : alpha(a) = alpha(1)(a (x) 1)} by a direct null space."""
    m, n = C.algebra.dim, C.parent.dim
    T = tensor_mult(C.algebra.mult, C.parent.algebra.mult)
    one = C.amap @ C.algebra.unit
    cols = []
    for j in range(m):
        e = np.zeros(m)
        e[j] = 1
        cols.append(C.amap[:, j] - product(T, one, np.kron(e, C.parent.algebra.unit)))
    return null(np.array(cols).T)


def spectral_subspace(C, coeffs):
    """{a : alpha(a) in alpha(1)(A (x) B_U)} for a coefficient tensor ``coeffs`` (d, d, n)."""
    m, n = C.algebra.dim, C.parent.dim
    d = coeffs.shape[0]
    BU = orth(coeffs.reshape(d * d, n).T)
    T = tensor_mult(C.algebra.mult, C.parent.algebra.mult)
    one = C.amap @ C.algebra.unit
    gens = []
    for c in range(m):
        e = np.zeros(m)
        e[c] = 1
        for b in BU.T:
            gens.append(product(T, one, np.kron(e, b)))
    S = orth(np.array(gens).T)
    P = np.eye(m * n) - S @ S.conj().T
    return null(P @ C.amap)


def distance(a, b):
    """Operator-norm distance of orthogonal projections; 1.0 on a rank mismatch."""
    qa, qb = orth(a) if a.shape[1] else a, orth(b) if b.shape[1] else b
    if qa.shape[1] != qb.shape[1]:
        return 1.0
    if qa.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(qa @ qa.conj().T - qb @ qb.conj().T, 2))
