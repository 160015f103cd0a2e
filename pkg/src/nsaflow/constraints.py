"""Non-negativity maps, soft-thresholding and violation diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MODES = ("off", "clamp", "softplus")
_ALIASES = {"relu": "clamp", "clamped": "clamp", "none": "off", "false": "off", "true": "clamp"}
_SOFTPLUS_CUTOFF = 30.0


@dataclass(frozen=True)
class NonnegMode:
    kind: str = "clamp"
    beta: float = 20.0

    def __post_init__(self):
        kind = str(self.kind).strip().lower()
        kind = _ALIASES.get(kind, kind)
        if kind not in _MODES:
            raise ValueError(f"unknown non-negativity mode {self.kind!r}; expected one of {_MODES} or 'relu'")
        if not self.beta > 0:
            raise ValueError("softplus beta must be positive")
        object.__setattr__(self, "kind", kind)


def softplus(Y: np.ndarray, beta: float = 20.0) -> np.ndarray:
    """``log(1 + exp(beta*y)) / beta``, exact-passthrough above and zero below +-30."""
    Y = np.asarray(Y, dtype=np.float64)
    # clipping first keeps beta*y finite; the cutoffs below make it exact
    z = beta * np.clip(Y, -2.0 * _SOFTPLUS_CUTOFF / beta, 2.0 * _SOFTPLUS_CUTOFF / beta)
    out = np.log1p(np.exp(np.minimum(z, _SOFTPLUS_CUTOFF))) / beta
    out = np.where(z > _SOFTPLUS_CUTOFF, Y, out)
    return np.where(z < -_SOFTPLUS_CUTOFF, 0.0, out)


def project_nonneg(Y, mode: NonnegMode = NonnegMode()) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if mode.kind == "off":
        return Y.copy()
    if mode.kind == "clamp":
        return np.maximum(Y, 0.0)
    return softplus(Y, mode.beta)


def soft_threshold(Z, tau: float) -> np.ndarray:
    """Proximal map of ``tau * ||.||_1``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    Z = np.asarray(Z, dtype=np.float64)
    return np.sign(Z) * np.maximum(np.abs(Z) - tau, 0.0)


def nonneg_violation(Y) -> tuple[float, float]:
    """Return ``(sum of squared negative parts, magnitude of the most negative entry)``."""
    neg = np.minimum(np.asarray(Y, dtype=np.float64), 0.0)
    return float(np.vdot(neg, neg)), float(-neg.min()) + 0.0
