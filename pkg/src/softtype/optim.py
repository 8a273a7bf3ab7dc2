"""Penalised objective over softmax-parameterised type matrices, and its solver.

The objective for scores ``Y`` (one row of unconstrained reals per identifier) is

    sum_v ||softmax(y_v) - mu_v||^2  -  lambda * (f_E(softmax(Y)) - 1)

where ``f_E`` is the relaxed truth value of the constraint.  With no natural
matrix the fit term is dropped and only the constraint is maximised.

The ``log`` penalty replaces ``f_E - 1`` by ``log f_E``, which is also zero
exactly when the constraint holds.  When many emissions are conjoined the
relaxed value starts out astronomically small and the linear penalty has
almost no gradient, so the fit term pulls every row to its prior before the
constraint is felt; the log penalty keeps a gradient of order one per
conjunct.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DimensionError
from .logic import Constraint, TypeEnvironment
from .relax import compile_constraint

log = logging.getLogger(__name__)

LINEAR_PENALTY, LOG_PENALTY = "linear", "log"
FIXED_PENALTY = "fixed"
DUAL_ASCENT = "dual"


@dataclass(frozen=True)
class OptimiserConfig:
    learning_rate: float = 0.05
    rmsprop_decay: float = 0.9
    epsilon: float = 1e-8
    max_iterations: int = 5000
    convergence_threshold: float = 1e-4
    initial_lambda: float = 100.0
    lambda_mode: str = FIXED_PENALTY
    dual_step: float = 1.0
    seed: int = 0
    init_scale: float = 0.01
    log_space: bool = False
    penalty: str = LINEAR_PENALTY
    sign_gains: bool = True
    record_trace: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.rmsprop_decay < 1:
            raise ValueError("rmsprop_decay must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if self.convergence_threshold <= 0:
            raise ValueError("convergence_threshold must be positive")
        if self.initial_lambda <= 0:
            raise ValueError("initial_lambda must be positive")
        if self.lambda_mode not in (FIXED_PENALTY, DUAL_ASCENT):
            raise ValueError(f"lambda_mode must be {FIXED_PENALTY!r} or {DUAL_ASCENT!r}")
        if self.penalty not in (LINEAR_PENALTY, LOG_PENALTY):
            raise ValueError(f"penalty must be {LINEAR_PENALTY!r} or {LOG_PENALTY!r}")
        if self.dual_step <= 0:
            raise ValueError("dual_step must be positive")

    def with_(self, **changes) -> OptimiserConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class TracePoint:
    iteration: int
    objective: float
    constraint_value: float
    grad_norm: float
    lam: float


@dataclass(frozen=True)
class SolveReport:
    probabilities: np.ndarray
    objective: float
    constraint_value: float
    iterations: int
    converged: bool
    lam: float
    grad_norm: float
    trace: tuple[TracePoint, ...] = field(default=())

    @property
    def residual(self) -> float:
        return 1.0 - self.constraint_value


def softmax_row(y) -> np.ndarray:
    """Softmax over the last axis, with max-subtraction."""
    y = np.asarray(y, dtype=float)
    z = np.exp(y - y.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def log_softmax_row(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    shifted = y - y.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _check_inputs(y, m, e):
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise DimensionError(f"score matrix must be 2-D, got shape {y.shape}")
    if m is not None and np.shape(m) != y.shape:
        raise DimensionError(f"natural matrix shape {np.shape(m)} != score shape {y.shape}")
    circuit = None
    if e is not None:
        circuit = compile_constraint(e)
        circuit.check_dims(*y.shape)
    return y, circuit


def _evaluate(y, lam, m, circuit, log_space, want_grad=True, penalty=LINEAR_PENALTY):
    """objective, constraint value, and d objective / d Y."""
    p = softmax_row(y)
    grad_p = np.zeros_like(p)
    fit = 0.0
    if m is not None:
        diff = p - m
        fit = float(np.sum(diff * diff))
        grad_p += 2.0 * diff
    if circuit is None:
        f = 1.0
        grad_y_extra = None
    elif log_space or penalty == LOG_PENALTY:
        logf, dlogf = circuit.log_value_and_grad(log_softmax_row(y))
        f = float(np.exp(logf))
        # chain through log-softmax: d logp_j / d y_k = delta_jk - p_k
        g = -lam * dlogf if penalty == LOG_PENALTY else -lam * f * dlogf
        grad_y_extra = g - p * g.sum(axis=1, keepdims=True)
    else:
        f, df = circuit.value_and_grad(p)
        grad_p -= lam * df
        grad_y_extra = None
    if penalty == LOG_PENALTY and circuit is not None:
        objective = fit - lam * float(logf)
    else:
        objective = fit - lam * (f - 1.0)
    if not want_grad:
        return objective, f, None
    # chain through softmax: d p_j / d y_k = p_j (delta_jk - p_k)
    grad_y = p * (grad_p - np.sum(grad_p * p, axis=1, keepdims=True))
    if grad_y_extra is not None:
        grad_y = grad_y + grad_y_extra
    return objective, f, grad_y


def objective(y, lam: float, m, e: Optional[Constraint], log_space: bool = False,
              penalty: str = LINEAR_PENALTY) -> float:
    y, circuit = _check_inputs(y, m, e)
    return _evaluate(y, lam, None if m is None else np.asarray(m, float), circuit, log_space, False, penalty)[0]


def gradient(y, lam: float, m, e: Optional[Constraint], log_space: bool = False,
             penalty: str = LINEAR_PENALTY) -> np.ndarray:
    y, circuit = _check_inputs(y, m, e)
    return _evaluate(y, lam, None if m is None else np.asarray(m, float), circuit, log_space, True, penalty)[2]


class RMSprop:
    """RMSprop with optional per-coordinate step gains.

    With `sign_gains`, a coordinate whose gradient changes sign has its gain
    halved and one whose sign persists has it grown back towards 1.  Plain
    RMSprop with a fixed rate keeps oscillating around interior optima at an
    amplitude of about the learning rate; the gains let those coordinates
    settle while saturating coordinates keep moving at the full rate.
    """

    def __init__(self, shape, learning_rate, decay, epsilon, sign_gains=True,
                 gain_up=1.2, gain_down=0.5, min_gain=1e-6):
        self.lr = learning_rate
        self.decay = decay
        self.eps = epsilon
        self.sq = np.zeros(shape)
        self.sign_gains = sign_gains
        self.gain = np.ones(shape)
        self.prev = np.zeros(shape)
        self.gain_up, self.gain_down, self.min_gain = gain_up, gain_down, min_gain

    def step(self, params, grad):
        self.sq = self.decay * self.sq + (1.0 - self.decay) * grad * grad
        if self.sign_gains:
            agree = grad * self.prev
            self.gain = np.where(agree > 0, np.minimum(self.gain * self.gain_up, 1.0),
                                 np.where(agree < 0, np.maximum(self.gain * self.gain_down, self.min_gain),
                                          self.gain))
            self.prev = grad.copy()
        params -= self.lr * self.gain * grad / (np.sqrt(self.sq) + self.eps)
        return params


def solve(m, e: Optional[Constraint], cfg: OptimiserConfig = OptimiserConfig(), shape=None) -> SolveReport:
    """Minimise the penalised objective with RMSprop.

    `m` is the natural matrix, or None for a logical-only solve (then `shape`
    gives (V, T)).  Stops once the constraint residual and the gradient norm
    are both below `cfg.convergence_threshold`.
    """
    if m is not None:
        m = np.asarray(m, dtype=float)
        shape = m.shape
    if shape is None:
        raise ValueError("shape is required when no natural matrix is given")
    rng = np.random.default_rng(cfg.seed)
    y = rng.uniform(-cfg.init_scale, cfg.init_scale, size=shape)
    y, circuit = _check_inputs(y, m, e)
    opt = RMSprop(y.shape, cfg.learning_rate, cfg.rmsprop_decay, cfg.epsilon, cfg.sign_gains)
    lam = cfg.initial_lambda
    thr = cfg.convergence_threshold
    trace = []
    converged = False
    it = 0
    while True:
        obj, f, grad = _evaluate(y, lam, m, circuit, cfg.log_space, penalty=cfg.penalty)
        gnorm = float(np.sqrt(np.sum(grad * grad)))
        if cfg.record_trace:
            trace.append(TracePoint(it, float(obj), float(f), gnorm, lam))
        if 1.0 - f < thr and gnorm < thr:
            converged = True
            break
        if it >= cfg.max_iterations:
            break
        if not np.all(np.isfinite(grad)):
            log.warning("non-finite gradient at iteration %d; stopping", it)
            break
        opt.step(y, grad)
        if cfg.lambda_mode == DUAL_ASCENT:
            lam += cfg.dual_step * (1.0 - f)
        it += 1
    return SolveReport(
        probabilities=softmax_row(y),
        objective=float(obj),
        constraint_value=float(min(max(f, 0.0), 1.0)),
        iterations=it,
        converged=converged,
        lam=float(lam),
        grad_norm=gnorm,
        trace=tuple(trace),
    )


def solve_logical_only(e: Optional[Constraint], shape, cfg: OptimiserConfig = OptimiserConfig()) -> SolveReport:
    """Maximise the relaxed truth value of `e` alone over (V, T) matrices."""
    return solve(None, e, cfg, shape=tuple(shape))


def discretise(p) -> TypeEnvironment:
    """Row-wise argmax; ties go to the lowest type index."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {p.shape}")
    return TypeEnvironment(tuple(int(t) for t in np.argmax(p, axis=1)), p.shape[1])
