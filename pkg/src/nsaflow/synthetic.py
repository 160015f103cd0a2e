"""Seeded synthetic matrices for tests, sweeps and demos.

All generators draw from ``numpy.random.default_rng(seed)`` (PCG64), so the
same arguments always give the same matrix on every platform.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionError

KINDS = ("block_nonneg", "correlated_noise", "nonneg_lowrank", "toy43", "two_factor")
# sparse PCA penalty at which two_factor(200, 40, noise=0.1) supports are recovered
TWO_FACTOR_LAMBDA = 0.4


def _check_dims(rows: int, cols: int) -> None:
    if rows < 1 or cols < 1:
        raise DimensionError(f"invalid dimensions {rows}x{cols}")


def block_supports(rows: int, cols: int) -> list[np.ndarray]:
    """Row indices of the ``cols`` contiguous, disjoint, near-equal blocks."""
    return np.array_split(np.arange(rows), cols)


def block_nonneg(rows: int, cols: int, noise: float = 0.0, seed: int = 0) -> np.ndarray:
    """Disjoint row-blocks of positive entries plus Gaussian noise, clamped at zero.

    Column ``j`` is supported on the ``j``-th block, so with ``noise = 0`` the
    columns are exactly orthogonal.
    """
    _check_dims(rows, cols)
    if cols > rows:
        raise DimensionError("block_nonneg needs rows >= cols so every block is non-empty")
    if noise < 0:
        raise ValueError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    X = np.zeros((rows, cols))
    for j, idx in enumerate(block_supports(rows, cols)):
        X[idx, j] = rng.uniform(0.5, 1.5, size=idx.size)
    X += noise * rng.standard_normal((rows, cols))
    return np.maximum(X, 0.0)


def correlated_noise(
    rows: int, cols: int, noise: float = 0.1, seed: int = 0, correlation: float = 0.5
) -> np.ndarray:
    """Gaussian columns sharing one common factor, plus independent noise.

    Column ``j`` is ``sqrt(c) f + sqrt(1 - c) g_j + noise * e_j`` so distinct
    columns have population correlation about ``c / (1 + noise^2)``.
    """
    _check_dims(rows, cols)
    if noise < 0 or not 0.0 <= correlation <= 1.0:
        raise ValueError("need noise >= 0 and correlation in [0, 1]")
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((rows, 1))
    G = rng.standard_normal((rows, cols))
    E = rng.standard_normal((rows, cols))
    return np.sqrt(correlation) * f + np.sqrt(1.0 - correlation) * G + noise * E


TOY43_SUPPORTS = ((0, 1), (2,), (3,))
TOY43_SCALES = (1.0, 0.8, 1.2)


def toy43(noise: float = 0.05, seed: int = 7) -> np.ndarray:
    """Fixed 4x3 matrix of three disjoint non-negative unit columns, scaled and noised."""
    if noise < 0:
        raise ValueError("noise must be non-negative")
    X = np.zeros((4, 3))
    for j, (rows, s) in enumerate(zip(TOY43_SUPPORTS, TOY43_SCALES)):
        X[list(rows), j] = s / np.sqrt(len(rows))
    rng = np.random.default_rng(seed)
    return X + noise * rng.standard_normal((4, 3))


def two_factor(
    n: int, p: int, noise: float = 0.05, seed: int = 0, k: int = 2, active: float = 0.5
) -> tuple[np.ndarray, np.ndarray]:
    """Data ``n x p`` driven by ``k`` non-negative loadings with disjoint supports.

    Returns ``(X, V)`` where ``V`` (``p x k``) holds the true unit-norm
    loadings. Factor ``j`` loads on the leading ``active`` fraction of the
    ``j``-th contiguous block of variables; the rest are pure noise. Factor
    scores have decreasing variances so the components are identifiable.
    Sparse PCA recovers the supports at ``lambda = TWO_FACTOR_LAMBDA``.
    """
    _check_dims(n, p)
    if k > p:
        raise DimensionError("two_factor needs k <= p")
    if not 0.0 < active <= 1.0:
        raise ValueError("active must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    V = np.zeros((p, k))
    for j, block in enumerate(block_supports(p, k)):
        idx = block[: max(1, int(round(active * block.size)))]
        V[idx, j] = rng.uniform(0.5, 1.5, size=idx.size)
    V /= np.linalg.norm(V, axis=0)
    sd = 3.0 * np.linspace(1.0, 0.6, k)
    scores = rng.standard_normal((n, k)) * sd
    X = scores @ V.T + noise * rng.standard_normal((n, p))
    return X, V


def nonneg_lowrank(
    n: int, p: int, k: int = 3, noise: float = 0.1, seed: int = 0, density: float = 0.5
) -> np.ndarray:
    """``W H^T`` plus noise, with half-normal scores ``W`` and sparse, overlapping loadings ``H``.

    Entries of ``H`` are uniform on ``[0.5, 1.5]`` and kept with probability
    ``density``, so loading supports overlap and plain thresholding leaves
    correlated components.
    """
    _check_dims(n, p)
    if not 1 <= k <= p:
        raise DimensionError("nonneg_lowrank needs 1 <= k <= p")
    if noise < 0 or not 0.0 < density <= 1.0:
        raise ValueError("need noise >= 0 and density in (0, 1]")
    rng = np.random.default_rng(seed)
    H = rng.uniform(0.5, 1.5, (p, k)) * (rng.random((p, k)) < density)
    W = 3.0 * np.abs(rng.standard_normal((n, k)))
    return W @ H.T + noise * rng.standard_normal((n, p))


def gen_synthetic(kind: str, rows: int = 0, cols: int = 0, noise: float = 0.0, seed: int = 0) -> np.ndarray:
    """Dispatch by ``kind``; ``toy43`` ignores ``rows``/``cols``."""
    if kind == "block_nonneg":
        return block_nonneg(rows, cols, noise, seed)
    if kind == "correlated_noise":
        return correlated_noise(rows, cols, noise, seed)
    if kind == "nonneg_lowrank":
        return nonneg_lowrank(rows, cols, noise=noise, seed=seed)
    if kind == "toy43":
        return toy43(noise, seed)
    if kind == "two_factor":
        return two_factor(rows, cols, noise, seed)[0]
    raise ValueError(f"unknown synthetic kind {kind!r}; expected one of {KINDS}")
