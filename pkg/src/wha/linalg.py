"""Dense numerical kernel shared by every other module.

Everything is plain ``numpy`` on complex128.  Tolerances are carried by a
small :class:`Tolerance` value object so that callers can tighten or relax
them in one place.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg as sla


class NotHermitian(ValueError):
    """Raised when a matrix expected to be Hermitian is not."""


class NotPSD(ValueError):
    """Raised when a Hermitian matrix has a significantly negative eigenvalue."""


@dataclass(frozen=True)
class Tolerance:
    atol: float = 1e-9
    rtol: float = 1e-7

    def rank_cutoff(self, shape) -> float:
        return self.atol * max(1, *shape)

    def close(self, a, b) -> bool:
        return bool(np.allclose(a, b, atol=self.atol, rtol=self.rtol))


DEFAULT_TOL = Tolerance()


def asc(x) -> np.ndarray:
    """Coerce to a complex128 array (copying only when needed)."""
    return np.asarray(x, dtype=complex)


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def kron(*mats) -> np.ndarray:
    """Kronecker product; the first factor is the slow index."""
    return reduce(np.kron, mats)


def err(a, b=None) -> float:
    """Max-abs residual, 0 for empty arrays."""
    d = asc(a) if b is None else asc(a) - asc(b)
    return float(np.max(np.abs(d))) if d.size else 0.0


def hermitian_eig(m, tol: Tolerance = DEFAULT_TOL):
    """Eigenvalues in descending order and a unitary of eigenvectors.

    Each eigenvector is rotated so that its first non-negligible entry is
    real and positive, which makes the output deterministic.
    """
    m = asc(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"square matrix expected, got {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if err(m, dag(m)) > tol.atol * scale:
        raise NotHermitian(f"hermitian defect {err(m, dag(m)):.3e}")
    w, v = np.linalg.eigh((m + dag(m)) / 2)
    w, v = w[::-1], v[:, ::-1]
    for j in range(v.shape[1]):
        k = int(np.argmax(np.abs(v[:, j]) > 1e-8))
        v[:, j] *= np.conj(v[k, j]) / abs(v[k, j])
    return w, v


def psd_sqrt(m, tol: Tolerance = DEFAULT_TOL, inverse: bool = False):
    """Square root (or pseudo-inverse square root) of a PSD matrix."""
    w, v = hermitian_eig(m, tol)
    cut = tol.rank_cutoff(m.shape) * max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    if w.size and w.min() < -cut:
        raise NotPSD(f"negative eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    if inverse:
        s = np.where(w > cut, 1.0 / np.sqrt(np.where(w > cut, w, 1.0)), 0.0)
    else:
        s = np.sqrt(w)
    return (v * s) @ dag(v)


def null_space(m, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of ker m.

    The cutoff is relative to the largest singular value so that badly
    scaled stacked systems still give sensible answers.
    """
    m = asc(m)
    n = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(n, dtype=complex)
    # the left factor is never used; only a wide matrix needs the full right one
    _, s, vh = np.linalg.svd(m, full_matrices=m.shape[0] < n)
    smax = s[0] if s.size else 0.0
    cut = tol.rank_cutoff(m.shape) * max(1.0, smax)
    rank = int(np.sum(s > cut))
    return dag(vh[rank:])


def range_basis(m, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the column space of ``m``."""
    m = asc(m)
    if m.size == 0:
        return np.zeros((m.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    cut = tol.rank_cutoff(m.shape) * max(1.0, s[0] if s.size else 0.0)
    return u[:, : int(np.sum(s > cut))]


def rank(m, tol: Tolerance = DEFAULT_TOL) -> int:
    return range_basis(m, tol).shape[1]


def polar(t, tol: Tolerance = DEFAULT_TOL):
    """Polar decomposition ``t = u |t|`` with ``u`` a partial isometry."""
    t = asc(t)
    mod = psd_sqrt(dag(t) @ t, tol)
    u = t @ psd_sqrt(dag(t) @ t, tol, inverse=True)
    return u, mod


def subspace_distance(a, b) -> float:
    """Spectral-norm distance between orthogonal projections onto col(a), col(b).

    Projections of different rank are at distance exactly 1.
    """
    qa, qb = range_basis(a), range_basis(b)
    if qa.shape[1] != qb.shape[1]:
        return 1.0
    pa, pb = qa @ dag(qa), qb @ dag(qb)
    return float(np.linalg.norm(pa - pb, 2)) if pa.size else 0.0


def in_span(basis, vecs, tol: Tolerance = DEFAULT_TOL) -> float:
    """Residual of projecting ``vecs`` onto the column span of ``basis``."""
    vecs = asc(vecs)
    q = range_basis(basis, tol)
    return err(vecs - q @ (dag(q) @ vecs))


def solve_coords(basis, vecs) -> tuple[np.ndarray, float]:
    """Least-squares coordinates of ``vecs`` in ``basis`` plus the residual."""
    basis, vecs = asc(basis), asc(vecs)
    c, *_ = np.linalg.lstsq(basis, vecs, rcond=None)
    return c, err(basis @ c - vecs)


def cluster(values, tol: float) -> list[list[int]]:
    """Group indices of (real) sorted-ish values whose gaps are below ``tol``."""
    values = np.asarray(values)
    order = np.argsort(values.real if np.iscomplexobj(values) else values)
    groups: list[list[int]] = []
    for i in order:
        if groups and abs(values[i] - values[groups[-1][-1]]) <= tol:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    return groups


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (x + dag(x)) / 2


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(x)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def block_diag(*blocks) -> np.ndarray:
    return sla.block_diag(*blocks) if blocks else np.zeros((0, 0), dtype=complex)


def vec(x: np.ndarray) -> np.ndarray:
    """Row-major vectorisation."""
    return np.reshape(x, -1)
