"""Dense numerical kernels: SVD nullspaces, symmetric eigenvalues, orthogonal completion.

System dimensions here stay small (n <= ~10, sample counts <= ~1e4), so all
solvers are dense; backed by numpy.linalg behind the module contracts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, SpecError

DEFAULT_NULLSPACE_TOL = 1e-9


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal columns spanning a subspace, plus the threshold used."""

    dim: int
    vectors: np.ndarray  # shape (ambient, dim)
    tol: float

    def contains(self, v, tol=None):
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v)
        if nv == 0:
            return True
        resid = v - self.vectors @ (self.vectors.T @ v)
        return np.linalg.norm(resid) <= (tol if tol is not None else 10 * self.tol) * nv


def nullspace(matrix, tol=DEFAULT_NULLSPACE_TOL):
    """Orthonormal basis of the numerical nullspace of `matrix`.

    Singular values below tol * sigma_max are treated as zero.
    """
    m = np.asarray(matrix, dtype=float)
    if m.size == 0:
        raise NumericalError("nullspace of an empty matrix")
    if tol <= 0:
        raise NumericalError("nullspace tolerance must be positive")
    _, svals, vt = np.linalg.svd(m, full_matrices=True)
    smax = svals[0] if svals.size else 0.0
    rank = int(np.sum(svals > tol * smax))
    basis = vt[rank:].T.copy()
    return SubspaceBasis(dim=basis.shape[1], vectors=_canonical_signs(basis), tol=tol)


def joint_nullspace(matrices, tol=DEFAULT_NULLSPACE_TOL):
    """Nullspace of several matrices stacked; empty list means the full space."""
    mats = [np.atleast_2d(np.asarray(m, dtype=float)) for m in matrices]
    if not mats:
        raise NumericalError("joint_nullspace needs the ambient dimension; got no matrices")
    return nullspace(np.vstack(mats), tol)


def _canonical_signs(basis):
    """Fix each column's sign so its first significantly nonzero entry is positive."""
    out = basis.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12 * max(1.0, np.abs(col).max()))[0]
        if nz.size and col[nz[0]] < 0:
            out[:, j] = -col
    return out


def sym_eigvals(matrix, asym_tol=1e-10):
    """Ascending eigenvalues of a (nearly) symmetric matrix.

    The input is symmetrized as (M + M^T)/2 after checking it is symmetric
    within `asym_tol` relative to its magnitude.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NumericalError(f"sym_eigvals needs a square matrix, got shape {m.shape}")
    scale = max(1.0, np.abs(m).max())
    if np.abs(m - m.T).max() > asym_tol * scale:
        raise NumericalError("matrix is not symmetric within tolerance")
    return np.linalg.eigvalsh(0.5 * (m + m.T))


def orthogonal_completion(rows, tol=1e-10):
    """Complete k orthonormal rows to a full n x n orthogonal matrix.

    The input rows appear unchanged as the first k rows of the result.
    """
    r = np.atleast_2d(np.asarray(rows, dtype=float))
    k, n = r.shape
    if k > n:
        raise SpecError(f"cannot complete {k} rows in dimension {n}")
    gram = r @ r.T
    if np.abs(gram - np.eye(k)).max() > tol:
        raise SpecError("input rows are not orthonormal within tolerance")
    if k == n:
        return r.copy()
    comp = nullspace(r, tol=DEFAULT_NULLSPACE_TOL).vectors.T
    out = np.vstack([r, comp])
    if np.abs(out @ out.T - np.eye(n)).max() > tol:
        raise NumericalError("orthogonal completion failed residual check")
    return out


def numerical_rank(matrix, tol=DEFAULT_NULLSPACE_TOL):
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    svals = np.linalg.svd(m, compute_uv=False)
    smax = svals[0] if svals.size else 0.0
    return int(np.sum(svals > tol * smax))


def orthonormalize(vectors, tol=DEFAULT_NULLSPACE_TOL):
    """Orthonormal basis (columns) for the span of the given columns."""
    v = np.asarray(vectors, dtype=float)
    if v.size == 0:
        return v.reshape(v.shape[0], 0)
    u, svals, _ = np.linalg.svd(v, full_matrices=False)
    smax = svals[0] if svals.size else 0.0
    rank = int(np.sum(svals > tol * smax))
    return _canonical_signs(u[:, :rank])


def span_equal(a, b, tol=1e-8):
    """Whether two column spans coincide within tol."""
    a = orthonormalize(a)
    b = orthonormalize(b)
    if a.shape[1] != b.shape[1]:
        return False
    if a.shape[1] == 0:
        return True
    resid_a = a - b @ (b.T @ a)
    resid_b = b - a @ (a.T @ b)
    return max(np.abs(resid_a).max(), np.abs(resid_b).max()) <= tol
