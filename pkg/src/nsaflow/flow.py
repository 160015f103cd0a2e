"""The NSA-Flow driver.

One iteration is: combined gradient, optional tangent projection, optimizer
step, soft retraction with strength ``w``, non-negativity projection, NaN
guard, trace record and best-energy bookkeeping.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .constraints import NonnegMode, nonneg_violation, project_nonneg
from .errors import ConfigError, DimensionError, NonFiniteError
from .geometry import RetractionMode, retract, tangent_project
from .linalg import as_matrix, polar_orthonormal
from .objective import (
    PenaltyMode,
    ScaleFactors,
    energy,
    energy_grad,
    fidelity_loss,
    grad_fidelity,
    grad_orth,
    init_scale_factors,
    orth_defect_invariant,
)
from .optimizers import Optimizer, OptimizerKind, make_optimizer

LR_GRID = tuple(10.0 ** (-4.0 + 0.5 * i) for i in range(9))
PROBE_STEPS = 5
ARMIJO_C1 = 1e-4
SLOPE_WINDOW = 10
MAX_NAN_STRIKES = 3
STOP_REASONS = ("slope", "grad_norm", "max_iter", "nan_guard")


@dataclass(frozen=True)
class FlowConfig:
    w: float = 0.5
    penalty_mode: PenaltyMode = PenaltyMode.SCALE_INVARIANT
    retraction: RetractionMode = RetractionMode()
    nonneg: NonnegMode = NonnegMode()
    optimizer: OptimizerKind = OptimizerKind.ASGD
    max_iter: int = 1000
    tol_slope: float = 1e-6
    tol_grad: float = 1e-8
    record_every: int = 1
    warmup_iters: int = 10
    lr: Optional[float] = None
    lr_strategy: str = "probe"
    tangent_projection: bool = True
    seed: int = 0
    optimizer_params: dict = field(default_factory=dict)

    def __post_init__(self):
        coerce = object.__setattr__
        try:
            coerce(self, "penalty_mode", PenaltyMode.parse(self.penalty_mode))
            coerce(self, "optimizer", OptimizerKind.parse(self.optimizer))
            if isinstance(self.retraction, str):
                coerce(self, "retraction", RetractionMode(self.retraction))
            if isinstance(self.nonneg, str):
                coerce(self, "nonneg", NonnegMode(self.nonneg))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not 0.0 <= self.w <= 1.0:
            raise ConfigError(f"w must lie in [0, 1], got {self.w}")
        if self.max_iter < 1 or self.record_every < 1 or self.warmup_iters < 1:
            raise ConfigError("max_iter, record_every and warmup_iters must be >= 1")
        if not (self.tol_slope > 0 and self.tol_grad > 0):
            raise ConfigError("tolerances must be positive")
        if self.lr_strategy not in ("fixed", "probe"):
            raise ConfigError(f"lr_strategy must be 'fixed' or 'probe', got {self.lr_strategy!r}")
        if self.lr_strategy == "fixed" and self.lr is None:
            raise ConfigError("lr_strategy='fixed' requires lr")
        if self.lr is not None and not (np.isfinite(self.lr) and self.lr > 0):
            raise ConfigError("lr must be positive")

    def replace(self, **changes) -> "FlowConfig":
        return replace(self, **changes)


@dataclass
class TraceRecord:
    iter: int
    wall_time: float
    fidelity: float
    orth_defect: float
    energy: float
    grad_norm: float
    lr: float
    best_energy_so_far: float

    FIELDS = ("iter", "time_s", "fidelity", "orth_defect", "energy", "grad_norm", "lr", "best_energy")

    def as_row(self) -> tuple:
        return (self.iter, self.wall_time, self.fidelity, self.orth_defect, self.energy,
                self.grad_norm, self.lr, self.best_energy_so_far)


@dataclass
class FlowResult:
    Y: np.ndarray
    converged: bool
    stop_reason: str
    fidelity: float
    orth_defect: float
    energy: float
    nonneg_violation: tuple[float, float]
    traces: list[TraceRecord]
    iterations: int
    lr: float
    scales: ScaleFactors
    nan_strikes: int = 0


class _Problem:
    """Objective and pipeline pieces shared by the driver and the learning-rate probe."""

    def __init__(self, X0: np.ndarray, cfg: FlowConfig, scales: ScaleFactors):
        self.X0 = X0
        self.cfg = cfg
        self.scales = scales

    def energy(self, Y: np.ndarray) -> float:
        return energy(Y, self.X0, self.cfg.w, self.cfg.penalty_mode, self.scales)

    def raw_gradient(self, Y: np.ndarray) -> np.ndarray:
        return energy_grad(Y, self.X0, self.cfg.w, self.cfg.penalty_mode, self.scales)

    def gradient(self, Y: np.ndarray) -> np.ndarray:
        """Combined scaled gradient; the orthogonality part is optionally tangent-projected.

        The projection is taken at the polar factor of ``Y``, where it is an
        exact orthogonal projector. The fidelity part is never projected so that
        the ``w = 0`` flow is plain least squares.
        """
        cfg, sc = self.cfg, self.scales
        g_fid = (1.0 - cfg.w) * sc.c_fid * grad_fidelity(Y, self.X0)
        if cfg.w == 0.0:
            return g_fid
        g_orth = cfg.w * sc.c_orth * grad_orth(Y, cfg.penalty_mode)
        if cfg.tangent_projection:
            g_orth = tangent_project(polar_orthonormal(Y), g_orth)
        return g_fid + g_orth

    def retract(self, Y: np.ndarray) -> np.ndarray:
        """Soft retraction with strength ``w``.

        With norm preservation on, the blend happens at the polar factor's own
        scale (``||Y||_F^2 = min(p, k)``) and the result is scaled back, so the
        pull toward the manifold does not depend on the data's magnitude.
        """
        mode = self.cfg.retraction
        if mode.kind != "soft_polar" or not mode.preserve_norm:
            return retract(Y, self.cfg.w, mode)
        nrm = float(np.linalg.norm(Y))
        if nrm == 0.0:
            return retract(Y, self.cfg.w, mode)
        s = np.sqrt(min(Y.shape)) / nrm
        return retract(Y * s, self.cfg.w, mode) / s

    def advance(self, Y: np.ndarray, g: np.ndarray, opt: Optimizer, lr: float) -> np.ndarray:
        """Optimizer step, retraction and non-negativity projection."""
        Y_tilde = Y + opt.step(g, lr, Y)
        if not np.all(np.isfinite(Y_tilde)):
            raise NonFiniteError("non-finite iterate after optimizer step")
        Y_new = self.retract(Y_tilde)
        Y_new = project_nonneg(Y_new, self.cfg.nonneg)
        if not np.all(np.isfinite(Y_new)) or not np.any(Y_new):
            raise NonFiniteError("degenerate iterate after retraction/projection")
        return Y_new


def _new_optimizer(cfg: FlowConfig) -> Optimizer:
    return make_optimizer(cfg.optimizer, **cfg.optimizer_params)


def _curvature(problem: _Problem, Y0: np.ndarray, g0: np.ndarray) -> float:
    """Secant estimate of the energy's curvature along the initial gradient."""
    gn = float(np.linalg.norm(g0))
    h = 1e-4 * float(np.linalg.norm(Y0))
    if gn == 0.0 or h == 0.0:
        return 0.0
    g1 = problem.raw_gradient(Y0 - (h / gn) * g0)
    return float(np.linalg.norm(g1 - problem.raw_gradient(Y0))) / h


def _rate_unit(problem: _Problem, Y0: np.ndarray) -> float:
    """Absolute learning rate corresponding to a relative rate of 1.

    At relative rate 1 the first update has the length ``||g0|| / L`` of a
    gradient step with rate ``1/L``, ``L`` being the secant curvature.
    """
    g0 = problem.gradient(Y0)
    L = _curvature(problem, Y0, g0)
    u = float(np.linalg.norm(_new_optimizer(problem.cfg).step(g0, 1.0, Y0)))
    if not (np.isfinite(L) and L > 0 and np.isfinite(u) and u > 0):
        return 1.0
    return float(np.linalg.norm(g0)) / (L * u)


def estimate_learning_rate(Y0, X0, cfg: FlowConfig, scales: ScaleFactors | None = None) -> float:
    """Pick a learning rate by probing a geometric grid of relative rates.

    Grid values ``r`` in ``1e-4 ... 1`` are relative to the inverse secant
    curvature of the energy at ``Y0`` (see :func:`_rate_unit`), which makes the
    choice independent of the data's scale. Every candidate runs a few pipeline steps
    from ``Y0``; among candidates that stay finite and satisfy the Armijo
    decrease on the first step, the one with the lowest final energy wins.
    Falls back to the smallest candidate.
    """
    Y0 = as_matrix(Y0, "Y0")
    X0 = Y0 if X0 is None else as_matrix(X0, "X0")
    if scales is None:
        scales = init_scale_factors(Y0, X0, cfg.penalty_mode, cfg.warmup_iters, cfg.w)
    problem = _Problem(X0, cfg, scales)
    unit = _rate_unit(problem, Y0)
    g0 = problem.gradient(Y0)
    # Reference for the sufficient-decrease test: the pipeline with a zero
    # gradient step, so retraction/projection effects are not charged to lr.
    try:
        E0 = problem.energy(problem.advance(Y0, np.zeros_like(g0), _new_optimizer(cfg), 0.0))
    except NonFiniteError:
        E0 = problem.energy(Y0)
    g0_sq = float(np.vdot(g0, g0))

    best_lr, best_E = LR_GRID[0] * unit, np.inf
    for r in LR_GRID:
        lr = r * unit
        opt = _new_optimizer(cfg)
        Y = Y0
        try:
            for step in range(PROBE_STEPS):
                g = g0 if step == 0 else problem.gradient(Y)
                Y = problem.advance(Y, g, opt, lr)
                E = problem.energy(Y)
                if not np.isfinite(E):
                    raise NonFiniteError("non-finite energy")
                if step == 0 and E > E0 - ARMIJO_C1 * lr * g0_sq:
                    break
            else:
                if E < best_E:
                    best_lr, best_E = lr, E
        except (NonFiniteError, FloatingPointError, ValueError):
            continue
    return best_lr


def energy_slope(energies, window: int = SLOPE_WINDOW, first: float | None = None) -> float | None:
    """Least-squares slope of the last ``window`` energies, normalised by ``max(|E_first|, 1)``.

    Returns ``None`` while fewer than ``window`` values are available.
    """
    energies = list(energies)
    if window < 2 or len(energies) < window:
        return None
    tail = np.asarray(energies[-window:], dtype=np.float64)
    x = np.arange(window, dtype=np.float64)
    x -= x.mean()
    slope = float(np.dot(x, tail - tail.mean()) / np.dot(x, x))
    ref = energies[0] if first is None else first
    return slope / max(abs(ref), 1.0)


GradHook = Callable[[int, np.ndarray], np.ndarray]


def run_nsa_flow(
    Y0,
    X0=None,
    cfg: FlowConfig | None = None,
    grad_hook: GradHook | None = None,
) -> FlowResult:
    """Approximate ``X0`` by a non-negative, near-orthogonal matrix starting from ``Y0``.

    ``X0`` defaults to ``Y0``. ``grad_hook(iteration, grad)`` may rewrite the
    gradient before the optimizer sees it (used to exercise the NaN guard).
    """
    cfg = FlowConfig() if cfg is None else cfg
    Y0 = as_matrix(Y0, "Y0")
    X0 = Y0 if X0 is None else as_matrix(X0, "X0")
    if X0.shape != Y0.shape:
        raise DimensionError(f"Y0 {Y0.shape} and X0 {X0.shape} differ in shape")

    t_start = time.monotonic()
    scales = init_scale_factors(Y0, X0, cfg.penalty_mode, cfg.warmup_iters, cfg.w)
    problem = _Problem(X0, cfg, scales)
    if cfg.lr_strategy == "fixed":
        lr = float(cfg.lr)
    else:
        lr = estimate_learning_rate(Y0, X0, cfg, scales)

    opt = _new_optimizer(cfg)
    Y = Y0
    last_good = project_nonneg(Y0, cfg.nonneg)
    best_Y, best_E = None, np.inf
    traces: list[TraceRecord] = []
    recorded_E: list[float] = []
    strikes = 0
    stop_reason = "max_iter"
    it = 0

    for it in range(1, cfg.max_iter + 1):
        try:
            g = problem.gradient(Y)
            if grad_hook is not None:
                g = grad_hook(it, g)
            Y_new = problem.advance(Y, g, opt, lr)
        except (NonFiniteError, FloatingPointError) as exc:
            strikes += 1
            if strikes >= MAX_NAN_STRIKES:
                stop_reason = "nan_guard"
                break
            Y = last_good
            lr *= 0.5
            opt.reset()
            continue

        Y = last_good = Y_new
        cand = opt.candidate(Y, it)
        E = problem.energy(cand)
        if E < best_E:
            best_Y, best_E = cand.copy(), E
        grad_norm = float(np.linalg.norm(g))

        if it % cfg.record_every == 0:
            traces.append(TraceRecord(
                iter=it,
                wall_time=time.monotonic() - t_start,
                fidelity=fidelity_loss(cand, X0),
                orth_defect=orth_defect_invariant(cand),
                energy=E,
                grad_norm=grad_norm,
                lr=lr,
                best_energy_so_far=best_E,
            ))
            recorded_E.append(E)

        if grad_norm < cfg.tol_grad:
            stop_reason = "grad_norm"
            break
        slope = energy_slope(recorded_E, SLOPE_WINDOW)
        if slope is not None and abs(slope) < cfg.tol_slope:
            stop_reason = "slope"
            break

    if best_Y is None:
        best_Y = last_good
        best_E = problem.energy(best_Y)

    return FlowResult(
        Y=best_Y,
        converged=stop_reason in ("slope", "grad_norm"),
        stop_reason=stop_reason,
        fidelity=fidelity_loss(best_Y, X0),
        orth_defect=orth_defect_invariant(best_Y),
        energy=best_E,
        nonneg_violation=nonneg_violation(best_Y),
        traces=traces,
        iterations=it,
        lr=lr,
        scales=scales,
        nan_strikes=strikes,
    )
