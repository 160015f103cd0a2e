"""First-order update rules used by the flow driver.

Each optimizer turns a gradient into an additive update ``-lr * direction``
and keeps whatever per-entry state its rule needs. ``ASGD`` additionally keeps
a Polyak average of the iterates it is shown and reports it as the candidate
solution once averaging has started.
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import NonFiniteError


class OptimizerKind(str, Enum):
    GD = "gd"
    MOMENTUM = "momentum"
    ADAM = "adam"
    ADAGRAD = "adagrad"
    ASGD = "asgd"
    LARS = "lars"

    @classmethod
    def parse(cls, value: "OptimizerKind | str") -> "OptimizerKind":
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower())


class Optimizer:
    kind = OptimizerKind.GD

    def reset(self) -> None:
        """Drop all accumulated state."""

    def direction(self, grad: np.ndarray, param: np.ndarray) -> np.ndarray:
        return grad

    def step(self, grad: np.ndarray, lr: float, param: np.ndarray | None = None) -> np.ndarray:
        """Return the additive update for ``param`` given ``grad``."""
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError("non-finite gradient")
        return -lr * self.direction(grad, param)

    def candidate(self, Y: np.ndarray, iteration: int) -> np.ndarray:
        """Point reported as the current solution after ``iteration`` steps."""
        return Y


class GD(Optimizer):
    kind = OptimizerKind.GD


class Momentum(Optimizer):
    kind = OptimizerKind.MOMENTUM

    def __init__(self, beta: float = 0.9):
        if not 0.0 <= beta < 1.0:
            raise ValueError("momentum beta must lie in [0, 1)")
        self.beta = beta
        self.velocity = None

    def reset(self):
        self.velocity = None

    def direction(self, grad, param):
        if self.velocity is None:
            self.velocity = grad.copy()
        else:
            self.velocity = self.beta * self.velocity + grad
        return self.velocity


class Adam(Optimizer):
    kind = OptimizerKind.ADAM

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0 and eps > 0):
            raise ValueError("adam needs 0 <= beta1, beta2 < 1 and eps > 0")
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.reset()

    def reset(self):
        self.m = self.v = None
        self.t = 0

    def direction(self, grad, param):
        if self.m is None:
            self.m = np.zeros_like(grad)
            self.v = np.zeros_like(grad)
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return m_hat / (np.sqrt(v_hat) + self.eps)


class AdaGrad(Optimizer):
    kind = OptimizerKind.ADAGRAD

    def __init__(self, eps: float = 1e-10):
        self.eps = eps
        self.acc = None

    def reset(self):
        self.acc = None

    def direction(self, grad, param):
        if self.acc is None:
            self.acc = np.zeros_like(grad)
        self.acc += grad * grad
        return grad / (np.sqrt(self.acc) + self.eps)


class ASGD(Optimizer):
    """Plain gradient steps plus a Polyak running average of the iterates."""

    kind = OptimizerKind.ASGD

    def __init__(self, average_start: int = 100):
        if average_start < 0:
            raise ValueError("average_start must be >= 0")
        self.average_start = average_start
        self.reset()

    def reset(self):
        self.average = None
        self.n_averaged = 0

    def candidate(self, Y, iteration):
        if iteration < self.average_start:
            return Y
        if self.average is None:
            self.average = Y.copy()
            self.n_averaged = 1
        else:
            self.n_averaged += 1
            self.average = self.average + (Y - self.average) / self.n_averaged
        return self.average


class LARS(Optimizer):
    """Gradient direction rescaled by ``trust * ||param|| / ||grad||`` for the whole matrix."""

    kind = OptimizerKind.LARS

    def __init__(self, trust: float = 0.001):
        if not trust > 0:
            raise ValueError("LARS trust coefficient must be positive")
        self.trust = trust

    def direction(self, grad, param):
        gn = float(np.linalg.norm(grad))
        pn = float(np.linalg.norm(param)) if param is not None else 0.0
        if gn == 0.0 or pn == 0.0:
            return grad
        return grad * (self.trust * pn / gn)


_REGISTRY = {
    OptimizerKind.GD: GD,
    OptimizerKind.MOMENTUM: Momentum,
    OptimizerKind.ADAM: Adam,
    OptimizerKind.ADAGRAD: AdaGrad,
    OptimizerKind.ASGD: ASGD,
    OptimizerKind.LARS: LARS,
}


def make_optimizer(kind: OptimizerKind | str, **hyper) -> Optimizer:
    return _REGISTRY[OptimizerKind.parse(kind)](**hyper)


def optimizer_step(opt: Optimizer, grad: np.ndarray, lr: float, param: np.ndarray | None = None):
    """Functional form of :meth:`Optimizer.step`: returns ``(update, opt)``."""
    return opt.step(grad, lr, param), opt
