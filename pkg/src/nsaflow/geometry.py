"""Tangent-space projection and soft/polar retractions toward the Stiefel manifold."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DimensionError
from .linalg import frobenius_norm, inv_sqrt_psd, polar_orthonormal, symmetrize

_EPS = 1e-300

_KIND_ALIASES = {"soft": "soft_polar", "soft-polar": "soft_polar", "off": "none"}
_KINDS = ("none", "soft_polar", "polar")


@dataclass(frozen=True)
class RetractionMode:
    """Which retraction to apply and whether to keep the input's Frobenius norm.

    ``polar`` is the full retraction: it behaves like ``soft_polar`` at
    ``omega = 1`` without norm preservation, whatever ``omega`` is passed.
    """

    kind: str = "soft_polar"
    preserve_norm: bool = True

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in _KINDS:
            raise ValueError(f"unknown retraction {self.kind!r}; expected one of {_KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "polar":
            object.__setattr__(self, "preserve_norm", False)


def tangent_project(Y, G) -> np.ndarray:
    """``G - Y sym(Y^T G)``: the Stiefel tangent projection at ``Y`` (exact when ``Y^T Y = I``)."""
    Y = np.asarray(Y, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if Y.shape != G.shape:
        raise DimensionError(f"shape mismatch: {Y.shape} vs {G.shape}")
    return G - Y @ symmetrize(Y.T @ G)


def _soft_candidate(Y: np.ndarray, omega: float) -> np.ndarray:
    p, k = Y.shape
    if p >= k:
        nrm = frobenius_norm(Y)
        if nrm == 0.0:
            raise DegenerateInputError("cannot retract a zero matrix")
        Yn = Y / nrm
        # T for the normalized matrix; the 1/nrm factor is restored below
        T = inv_sqrt_psd(Yn.T @ Yn) / nrm
        T_omega = omega * T
        T_omega[np.diag_indices_from(T_omega)] += 1.0 - omega
        return Y @ T_omega
    Q = polar_orthonormal(Y)
    return (1.0 - omega) * Y + omega * Q


def retract(Y, omega: float, mode: RetractionMode = RetractionMode()) -> np.ndarray:
    """Pull ``Y`` toward the Stiefel manifold with strength ``omega`` in [0, 1]."""
    Y = np.asarray(Y, dtype=np.float64)
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must lie in [0, 1], got {omega}")
    if mode.kind == "none":
        return Y.copy()
    if mode.kind == "polar":
        return polar_orthonormal(Y)
    if omega == 0.0:
        return Y.copy()
    cand = _soft_candidate(Y, omega)
    if mode.preserve_norm:
        cn = frobenius_norm(cand)
        if cn > 0.0:
            cand = cand * (frobenius_norm(Y) / cn)
    return cand


def contraction_ratio(Y_tilde, Y_new, eps: float = _EPS) -> float:
    """``||Y_new - Q||_F / ||Y_tilde - Q||_F`` with ``Q`` the polar factor of ``Y_tilde``."""
    Y_tilde = np.asarray(Y_tilde, dtype=np.float64)
    Y_new = np.asarray(Y_new, dtype=np.float64)
    if Y_tilde.shape != Y_new.shape:
        raise DimensionError(f"shape mismatch: {Y_tilde.shape} vs {Y_new.shape}")
    Q = polar_orthonormal(Y_tilde)
    return frobenius_norm(Y_new - Q) / max(frobenius_norm(Y_tilde - Q), eps)
