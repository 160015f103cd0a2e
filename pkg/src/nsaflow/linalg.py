"""Dense linear-algebra kernels.

Matrices are plain 2-D ``float64`` numpy arrays throughout the package.
Every function here is pure: inputs are never modified.
"""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .errors import DegenerateInputError, DimensionError, NonFiniteError

# Seed for the deterministic completion of rank-deficient factorizations.
_COMPLETION_SEED = 20240917
_RANK_RTOL = 1e-12


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D float64 array (copying only if needed)."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return A


def frobenius_norm(M) -> float:
    return float(np.linalg.norm(np.asarray(M, dtype=np.float64), "fro"))


def symmetrize(S: np.ndarray) -> np.ndarray:
    return 0.5 * (S + S.T)


class SymEig(NamedTuple):
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthonormal columns


def sym_eig(S) -> SymEig:
    """Eigendecomposition of a symmetric matrix, symmetrizing first."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"sym_eig needs a square matrix, got shape {S.shape}")
    lam, V = np.linalg.eigh(symmetrize(S))
    return SymEig(lam, V)


def default_clip(eigenvalues: np.ndarray) -> float:
    return 1e-8 * max(float(eigenvalues[-1]), 1.0)


def inv_sqrt_psd(S, clip_eps: float | None = None) -> np.ndarray:
    """Inverse square root ``V diag(max(lam, clip_eps))^(-1/2) V^T``.

    Eigenvalues below ``clip_eps`` are clipped up to it, so rank-deficient or
    slightly indefinite Gram matrices still give a finite result.
    """
    lam, V = sym_eig(S)
    eps = default_clip(lam) if clip_eps is None else float(clip_eps)
    if eps <= 0:
        raise ValueError("clip_eps must be positive")
    d = 1.0 / np.sqrt(np.maximum(lam, eps))
    return symmetrize((V * d) @ V.T)


def _complete_orthonormal(B: np.ndarray, n_missing: int) -> np.ndarray:
    """Extend the orthonormal columns of ``B`` by ``n_missing`` more columns.

    The new directions come from a fixed-seed Gaussian draw projected onto the
    orthogonal complement, so the result is deterministic.
    """
    m = B.shape[0]
    rng = np.random.default_rng(_COMPLETION_SEED)
    R = rng.standard_normal((m, n_missing))
    R -= B @ (B.T @ R)
    R -= B @ (B.T @ R)
    Q, _ = np.linalg.qr(R)
    return np.hstack([B, Q[:, :n_missing]])


def svd_polar(Y: np.ndarray) -> np.ndarray:
    """Polar factor ``U V^T`` from a thin SVD, with deterministic rank completion."""
    U, s, Vt = np.linalg.svd(Y, full_matrices=False)
    r = int(np.sum(s > _RANK_RTOL * s[0]))
    m = s.size
    if r < m:
        U = _complete_orthonormal(U[:, :r], m - r)
        Vt = _complete_orthonormal(Vt[:r].T, m - r).T
    return U @ Vt


def polar_orthonormal(Y) -> np.ndarray:
    """Nearest matrix with orthonormal columns (tall) or rows (wide).

    Tall inputs use ``Y (Y^T Y)^(-1/2)``; wide or rank-deficient inputs use the
    thin SVD.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {Y.shape}")
    nrm = frobenius_norm(Y)
    if nrm == 0.0 or not np.isfinite(nrm):
        raise DegenerateInputError("polar factor of a zero or non-finite matrix is undefined")
    p, k = Y.shape
    if p < k:
        return svd_polar(Y)
    # Rescaling leaves the polar factor unchanged and keeps the Gram matrix O(1).
    Yn = Y / nrm
    gram = Yn.T @ Yn
    lam = np.linalg.eigvalsh(symmetrize(gram))
    if lam[0] <= default_clip(lam):
        # clipping would leave the result off the manifold
        return svd_polar(Y)
    return Yn @ inv_sqrt_psd(gram)


def qr_orthonormalize(Y) -> np.ndarray:
    """Orthonormal basis of span(Y) via Householder QR.

    Each column is signed so that its largest-magnitude entry is positive.
    Householder QR keeps ``Q`` orthonormal even when ``Y`` is rank deficient,
    so the missing directions are filled from the orthogonal complement.
    """
    Y = np.asarray(Y, dtype=np.float64)
    p, k = Y.shape
    if p < k:
        raise DimensionError(f"qr_orthonormalize needs rows >= cols, got {Y.shape}")
    Q, _ = np.linalg.qr(Y)
    idx = np.argmax(np.abs(Q), axis=0)
    signs = np.sign(Q[idx, np.arange(k)])
    signs[signs == 0] = 1.0
    return Q * signs


def finite_diff_grad(f: Callable[[np.ndarray], float], Y, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of a matrix."""
    Y = np.array(Y, dtype=np.float64)
    G = np.empty_like(Y)
    for idx in np.ndindex(*Y.shape):
        orig = Y[idx]
        Y[idx] = orig + h
        fp = f(Y)
        Y[idx] = orig - h
        fm = f(Y)
        Y[idx] = orig
        G[idx] = (fp - fm) / (2.0 * h)
    return G
