"""Sparse PCA by proximal gradient, with soft-thresholding or NSA-Flow as the prox.

The smooth part is the negative explained variance
``f(Y) = -tr(Y^T S Y) / (2n)`` with ``S = Xc^T Xc``. Each outer iteration takes
an Armijo-backtracked gradient step and then a proximal step. Loadings are
kept at unit column norm after every prox so that ``f`` stays bounded.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import NonnegMode, soft_threshold
from .errors import ConfigError, DimensionError
from .flow import FlowConfig, run_nsa_flow
from .linalg import as_matrix, qr_orthonormalize
from .objective import orth_defect_invariant

ZERO_TOL = 1e-8
PROX_TYPES = ("basic", "nsa_flow")


@dataclass(frozen=True)
class SpcaConfig:
    k: int = 2
    lam: float = 0.0
    proximal_type: str = "basic"
    w: float = 0.5
    nonneg: bool = False
    max_iter: int = 100
    tol: float = 1e-6
    patience: int = 10
    lr_shrink: float = 0.5
    inner_max_iter: int = 100

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not self.lam >= 0:
            raise ConfigError("lambda must be non-negative")
        if self.proximal_type not in PROX_TYPES:
            raise ConfigError(f"proximal_type must be one of {PROX_TYPES}, got {self.proximal_type!r}")
        if not 0.0 <= self.w <= 1.0:
            raise ConfigError("w must lie in [0, 1]")
        if self.max_iter < 1 or self.patience < 1 or self.inner_max_iter < 1:
            raise ConfigError("max_iter, patience and inner_max_iter must be >= 1")
        if not 0.0 < self.lr_shrink < 1.0:
            raise ConfigError("lr_shrink must lie in (0, 1)")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")


@dataclass
class SpcaResult:
    Y: np.ndarray
    explained_variance_ratio: float
    sparsity: float
    orth_residual: float
    energy: float
    energies: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def center_columns(X) -> np.ndarray:
    X = as_matrix(X, "X")
    if X.shape[0] < 2:
        raise DimensionError("centering needs at least two rows")
    return X - X.mean(axis=0)


def spca_smooth_value(Y, S, n: int) -> float:
    """``-tr(Y^T S Y) / (2n)``."""
    return -float(np.vdot(Y, S @ Y)) / (2.0 * n)


def spca_smooth_grad(Y, S, n: int) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    if S.shape != (Y.shape[0], Y.shape[0]):
        raise DimensionError(f"S must be {Y.shape[0]}x{Y.shape[0]}, got {S.shape}")
    return -(S @ Y) / n


def armijo_search(
    Y,
    S,
    n: int,
    direction,
    alpha0: float,
    shrink: float = 0.5,
    c1: float = 1e-4,
    max_backtracks: int = 30,
) -> float:
    """Largest ``alpha0 * shrink**j`` giving sufficient decrease of ``f`` along ``direction``.

    Non-descent directions (and exhausted backtracking) return the floor
    ``alpha0 * shrink**max_backtracks``.
    """
    floor = alpha0 * shrink**max_backtracks
    f0 = spca_smooth_value(Y, S, n)
    slope = float(np.vdot(spca_smooth_grad(Y, S, n), direction))
    if not slope < 0:
        return floor
    alpha = alpha0
    for _ in range(max_backtracks):
        if spca_smooth_value(Y + alpha * direction, S, n) <= f0 + c1 * alpha * slope:
            return alpha
        alpha *= shrink
    return floor


def spca_prox_basic(Z, tau: float, nonneg: bool = False) -> np.ndarray:
    Y = soft_threshold(Z, tau)
    return np.maximum(Y, 0.0) if nonneg else Y


def spca_prox_nsaflow(
    Z, w: float, budget: int = 100, cfg: FlowConfig | None = None, return_result: bool = False
):
    """Inner NSA-Flow toward ``Z`` (start and target both ``Z``) with clamping.

    Returns the flow's best iterate, or the whole
    :class:`~nsaflow.flow.FlowResult` when ``return_result`` is set.
    """
    base = FlowConfig() if cfg is None else cfg
    inner = base.replace(w=w, nonneg=NonnegMode("clamp"), max_iter=budget)
    res = run_nsa_flow(Z, Z, inner)
    return res if return_result else res.Y


def _normalize_columns(Y: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(Y, axis=0)
    norms[norms == 0.0] = 1.0
    return Y / norms


def _orient(V: np.ndarray) -> np.ndarray:
    """Flip columns so each has a non-negative sum."""
    signs = np.where(V.sum(axis=0) < 0, -1.0, 1.0)
    return V * signs


def sparsity(Y, tol: float = ZERO_TOL) -> float:
    Y = np.asarray(Y)
    return float(np.mean(np.abs(Y) < tol))


def explained_variance_ratio(Y, S) -> float:
    """``tr(Q^T S Q) / tr(S)`` over an orthonormal basis ``Q`` of the loadings."""
    Q = qr_orthonormalize(Y)
    return float(np.vdot(Q, S @ Q)) / float(np.trace(S))


def pca_loadings(X, k: int) -> np.ndarray:
    """Top-``k`` right singular vectors of the column-centered data."""
    Xc = center_columns(X)
    _, _, Vt = np.linalg.svd(Xc, full_matrices=False)
    return _orient(Vt[:k].T.copy())


def spca_energy(Y, S, n: int, lam: float) -> float:
    return spca_smooth_value(Y, S, n) + lam * float(np.abs(Y).sum())


def run_spca(X, cfg: SpcaConfig = SpcaConfig(), flow_cfg: FlowConfig | None = None) -> SpcaResult:
    """Sparse PCA loadings (``p x k``) for data ``X`` (``n x p``)."""
    X = as_matrix(X, "X")
    n, p = X.shape
    if cfg.k > min(n, p):
        raise DimensionError(f"k={cfg.k} exceeds min(n, p)={min(n, p)}")
    Xc = center_columns(X)
    S = Xc.T @ Xc
    lmax = float(np.linalg.eigvalsh(S)[-1])
    if lmax <= 0:
        raise DimensionError("data has zero variance after centering")
    alpha0 = n / lmax  # inverse Lipschitz constant of grad f

    Y = pca_loadings(X, cfg.k)
    prev_out = Y
    prev_E = spca_energy(Y, S, n, cfg.lam)
    best_Y, best_E = None, np.inf
    energies = []
    stall = 0
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        if cfg.proximal_type == "basic":
            Y = qr_orthonormalize(Y)
        G = spca_smooth_grad(Y, S, n)
        alpha = armijo_search(Y, S, n, -G, alpha0)
        Z = Y - alpha * G
        if cfg.proximal_type == "basic":
            Y_new = spca_prox_basic(Z, alpha * cfg.lam, cfg.nonneg)
        else:
            # the l1 part of the regularizer thresholds the flow's target
            Y_new = spca_prox_nsaflow(soft_threshold(Z, alpha * cfg.lam), cfg.w, cfg.inner_max_iter, flow_cfg)
        Y_new = _normalize_columns(Y_new)
        E = spca_energy(Y_new, S, n, cfg.lam)
        energies.append(E)

        if E < best_E:
            if best_E - E > cfg.tol * max(abs(best_E), 1.0):
                stall = 0
            best_Y, best_E = Y_new.copy(), E
        else:
            stall += 1
        if stall >= cfg.patience:
            alpha0 *= cfg.lr_shrink
            stall = 0

        rel_dE = abs(E - prev_E) / max(abs(prev_E), 1e-12)
        change = float(np.linalg.norm(Y_new - prev_out)) / max(float(np.linalg.norm(prev_out)), 1e-12)
        # gradient mapping: the prox-gradient analogue of the gradient norm
        grad_map = change * float(np.linalg.norm(prev_out)) / max(alpha * float(np.linalg.norm(G)), 1e-300)
        prev_out, prev_E, Y = Y_new, E, Y_new
        if rel_dE < cfg.tol and change < cfg.tol and grad_map < cfg.tol:
            converged = True
            break

    return SpcaResult(
        Y=best_Y,
        explained_variance_ratio=explained_variance_ratio(best_Y, S),
        sparsity=sparsity(best_Y),
        orth_residual=orth_defect_invariant(best_Y),
        energy=best_E,
        energies=energies,
        iterations=it,
        converged=converged,
    )
