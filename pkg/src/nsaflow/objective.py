"""Composite NSA-Flow energy: fidelity, orthogonality penalties and gradients."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, DimensionError

_EPS = 1e-12


class PenaltyMode(str, Enum):
    RAW = "raw"
    SCALE_INVARIANT = "scale_invariant"

    @classmethod
    def parse(cls, value: "PenaltyMode | str") -> "PenaltyMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"invariant": "scale_invariant", "inv": "scale_invariant"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class ScaleFactors:
    """Reciprocal warmup magnitudes applied to the fidelity and orthogonality terms."""

    c_fid: float = 1.0
    c_orth: float = 1.0

    def __post_init__(self):
        for name in ("c_fid", "c_orth"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive, got {v}")


def _check_same_shape(Y: np.ndarray, X0: np.ndarray) -> None:
    if Y.shape != X0.shape:
        raise DimensionError(f"shape mismatch: {Y.shape} vs {X0.shape}")


def fidelity_loss(Y, X0) -> float:
    """``0.5 * ||Y - X0||_F^2``."""
    Y = np.asarray(Y, dtype=np.float64)
    X0 = np.asarray(X0, dtype=np.float64)
    _check_same_shape(Y, X0)
    D = Y - X0
    return 0.5 * float(np.vdot(D, D))


def grad_fidelity(Y, X0) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    X0 = np.asarray(X0, dtype=np.float64)
    _check_same_shape(Y, X0)
    return Y - X0


def orth_penalty_raw(Y) -> float:
    """``0.5 * ||Y^T Y - I||_F^2``; zero exactly on the Stiefel manifold."""
    Y = np.asarray(Y, dtype=np.float64)
    D = Y.T @ Y
    D[np.diag_indices_from(D)] -= 1.0
    return 0.5 * float(np.vdot(D, D))


def grad_orth_raw(Y) -> np.ndarray:
    """``2 Y (Y^T Y - I)``, the exact derivative of :func:`orth_penalty_raw`."""
    Y = np.asarray(Y, dtype=np.float64)
    D = Y.T @ Y
    D[np.diag_indices_from(D)] -= 1.0
    return 2.0 * (Y @ D)


def _gram_parts(Y: np.ndarray):
    G = Y.T @ Y
    tr = float(np.trace(G))
    if not tr > 0.0:
        raise DegenerateInputError("orthogonality defect is undefined for a zero matrix")
    M = G.copy()
    M[np.diag_indices_from(M)] = 0.0
    return M, tr


def orth_defect_invariant(Y) -> float:
    """Scale-invariant defect ``sum_{i!=j} G_ij^2 / (tr G)^2`` with ``G = Y^T Y``.

    Zero iff the columns are mutually orthogonal; unchanged under ``Y -> cY``.
    """
    Y = np.asarray(Y, dtype=np.float64)
    M, tr = _gram_parts(Y)
    return float(np.vdot(M, M)) / (tr * tr)


def grad_orth_invariant(Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    M, tr = _gram_parts(Y)
    s = tr * tr
    N = float(np.vdot(M, M))
    # d(tr G)/dY = 2Y, so ds/dY = 4 tr(G) Y and tr(G) = ||Y||_F^2
    return 4.0 * (Y @ M) / s - 4.0 * N * tr * Y / (s * s)


def orth_term(Y, mode: PenaltyMode) -> float:
    if mode is PenaltyMode.RAW:
        return orth_penalty_raw(Y)
    return orth_defect_invariant(Y)


def grad_orth(Y, mode: PenaltyMode) -> np.ndarray:
    if mode is PenaltyMode.RAW:
        return grad_orth_raw(Y)
    return grad_orth_invariant(Y)


def energy(
    Y,
    X0,
    w: float,
    mode: PenaltyMode | str = PenaltyMode.SCALE_INVARIANT,
    scales: ScaleFactors = ScaleFactors(),
) -> float:
    """``(1-w) c_fid L_fid + w c_orth L_orth``."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w must lie in [0, 1], got {w}")
    mode = PenaltyMode.parse(mode)
    return (1.0 - w) * scales.c_fid * fidelity_loss(Y, X0) + w * scales.c_orth * orth_term(Y, mode)


def energy_grad(
    Y,
    X0,
    w: float,
    mode: PenaltyMode | str = PenaltyMode.SCALE_INVARIANT,
    scales: ScaleFactors = ScaleFactors(),
) -> np.ndarray:
    mode = PenaltyMode.parse(mode)
    return (1.0 - w) * scales.c_fid * grad_fidelity(Y, X0) + w * scales.c_orth * grad_orth(Y, mode)


def scale_factors_from_losses(fid: Sequence[float], orth: Sequence[float], eps: float = _EPS) -> ScaleFactors:
    """Reciprocal-mean factors; a loss that stays at ~0 keeps factor 1."""

    def factor(values: Sequence[float]) -> float:
        m = float(np.mean(values))
        if not np.isfinite(m) or m <= eps:
            return 1.0
        return 1.0 / m

    return ScaleFactors(factor(fid), factor(orth))


def init_scale_factors(
    Y0,
    X0,
    mode: PenaltyMode | str = PenaltyMode.SCALE_INVARIANT,
    warmup_iters: int = 10,
    w: float = 0.5,
) -> ScaleFactors:
    """Estimate loss magnitudes over a short unscaled gradient-descent probe.

    The probe runs on copies of ``Y0`` and ``X0`` divided by ``||Y0||_F`` and
    the recorded fidelity is scaled back, so the factors follow the data's
    scale exactly. Each probe step moves a fixed distance ``1e-3`` (relative to
    ``||Y0||_F``) along the negative gradient; both raw losses are recorded at
    every visited iterate, ``Y0`` included.
    """
    if warmup_iters < 1:
        raise ValueError("warmup_iters must be >= 1")
    mode = PenaltyMode.parse(mode)
    Y = np.array(Y0, dtype=np.float64)
    X0 = np.asarray(X0, dtype=np.float64)
    _check_same_shape(Y, X0)
    scale = float(np.linalg.norm(Y))
    if scale == 0.0:
        scale = 1.0
    Y = Y / scale
    X = X0 / scale

    step_len = 1e-3
    fid, orth = [], []
    for _ in range(warmup_iters):
        fid.append(fidelity_loss(Y, X) * scale * scale)
        orth.append(orth_term(Y, mode) if mode is PenaltyMode.SCALE_INVARIANT else orth_penalty_raw(Y * scale))
        g = energy_grad(Y, X, w, mode)
        Y = Y - (step_len / max(float(np.linalg.norm(g)), _EPS)) * g
        if not np.all(np.isfinite(Y)) or not np.any(Y):
            break
    return scale_factors_from_losses(fid, orth)
