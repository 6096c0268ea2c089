"""Augmented Lagrangian outer loop around a proximal gradient inner solver.

The primal problem at a fixed ``lambda`` is

    min_theta  nmll(theta) + lambda ||S||_1   s.t.  h(S) = 0,

solved as a sequence of penalized problems

    nmll(theta) + alpha h(S) + rho/2 h(S)**2 + lambda ||S||_1

whose smooth part goes to ``pgm_solve`` and whose L1 part is handled by the
soft-threshold prox. Only S is penalized; ell takes plain gradient steps in
the same iteration.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from . import acyclicity, likelihood
from .exceptions import KernelError, SolverError
from .model import Dataset, Theta, offdiag_mask, pack, s_slice, unpack

logger = logging.getLogger(__name__)

MAX_SHRINKS = 50

SmoothObjective = Callable[[np.ndarray], tuple[float, np.ndarray]]


@dataclass(frozen=True)
class PgmConfig:
    max_iters: int = 500
    grad_tol: float = 1e-5
    line_search_shrink: float = 0.5
    initial_step: float = 1.0
    expand: float = 1.25
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.max_iters <= 0 or self.grad_tol <= 0 or self.initial_step <= 0:
            raise ValueError("max_iters, grad_tol and initial_step must be positive")
        if not 0.0 < self.line_search_shrink < 1.0:
            raise ValueError(f"line_search_shrink must lie in (0, 1), got {self.line_search_shrink}")
        if self.expand < 1.0:
            raise ValueError(f"expand must be >= 1, got {self.expand}")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be nonnegative")


@dataclass(frozen=True)
class SolverConfig:
    """Everything one regularization-path fit needs besides the data."""

    eps: float = 0.1
    rho_max: float = 1e8
    max_outer: int = 100
    sigma: float = 0.01
    lambda_min_ratio: float = 1e-3
    pgm: PgmConfig = field(default_factory=PgmConfig)

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.rho_max < 1:
            raise ValueError(f"rho_max must be >= 1, got {self.rho_max}")
        if self.max_outer <= 0:
            raise ValueError("max_outer must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0.0 < self.lambda_min_ratio < 1.0:
            raise ValueError(f"lambda_min_ratio must lie in (0, 1), got {self.lambda_min_ratio}")

    # keys accepted in the ``solver`` object of config files and in settings
    FILE_KEYS = {
        'eps': 'eps', 'rho_max': 'rho_max', 'max_outer': 'max_outer', 'sigma': 'sigma',
        'lambda_min_ratio': 'lambda_min_ratio',
        'pgm.max_iters': 'max_iters', 'pgm.grad_tol': 'grad_tol', 'pgm.shrink': 'line_search_shrink',
        'pgm.initial_step': 'initial_step', 'pgm.expand': 'expand', 'pgm.rel_tol': 'rel_tol',
    }

    @classmethod
    def from_mapping(cls, values: dict, base: 'SolverConfig | None' = None) -> 'SolverConfig':
        """Apply ``{'eps': .., 'pgm.max_iters': ..}`` style keys on top of ``base``."""
        base = base or cls()
        top, inner = {}, {}
        for key, val in values.items():
            if val is None:
                continue
            if key not in cls.FILE_KEYS:
                raise ValueError(f"unknown solver key {key!r}")
            target = cls.FILE_KEYS[key]
            (inner if key.startswith('pgm.') else top)[target] = val
        pgm = replace(base.pgm, **inner) if inner else base.pgm
        return replace(base, pgm=pgm, **top)

    def to_mapping(self) -> dict:
        out = {}
        for key, target in self.FILE_KEYS.items():
            out[key] = getattr(self.pgm if key.startswith('pgm.') else self, target)
        return out


class PgmResult(NamedTuple):
    x: np.ndarray
    value: float
    iterations: int
    converged: bool
    step: float


@dataclass(frozen=True)
class AugLagStep:
    outer: int
    rho: float
    alpha: float
    g: float
    accepted: bool


@dataclass(frozen=True, eq=False)
class AugLagState:
    alpha: float
    rho: float
    theta: Theta
    g: float
    outer_iterations: int = 0
    inner_iterations: int = 0
    trace: tuple = ()


def soft_threshold(x, threshold: float):
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def prox_l1(S, threshold: float):
    """Entrywise soft threshold; square matrices keep a zero diagonal."""
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    S = np.asarray(S, dtype=float)
    out = soft_threshold(S, threshold)
    if out.ndim == 2 and out.shape[0] == out.shape[1]:
        np.fill_diagonal(out, 0.0)
    return out


def _prox_step(x, grad, step, lam, penalized):
    z = x - step * grad
    if lam > 0:
        z = np.where(penalized, soft_threshold(z, step * lam), z)
    return z


def pgm_solve(objective: SmoothObjective, lam: float, x0, cfg: PgmConfig, penalized=None) -> PgmResult:
    """Proximal gradient with backtracking on the majorization inequality.

    A trial point ``x+ = prox(x - t grad, t lam)`` is accepted once
    ``f(x+) <= f(x) + grad.(x+ - x) + ||x+ - x||**2 / (2t)``; the step then
    grows by ``cfg.expand`` for the next iteration. Stops when the gradient
    mapping ``||x - x+|| / t`` drops below ``cfg.grad_tol``, when the composite
    objective stalls (``cfg.rel_tol``) or after ``cfg.max_iters``.
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    x = np.atleast_1d(np.array(x0, dtype=float))
    penalized = np.ones_like(x, dtype=bool) if penalized is None else np.asarray(penalized, dtype=bool)

    def _l1(v):
        return lam * float(np.sum(np.abs(v[penalized])))

    f, grad = objective(x)
    if not np.isfinite(f) or grad is None or not np.all(np.isfinite(grad)):
        raise SolverError("objective is not finite at the initial point")
    composite = f + _l1(x)
    step = cfg.initial_step

    for it in range(1, cfg.max_iters + 1):
        for _ in range(MAX_SHRINKS):
            x_new = _prox_step(x, grad, step, lam, penalized)
            diff = x_new - x
            f_new, grad_new = objective(x_new)
            if np.isfinite(f_new) and f_new <= f + grad @ diff + (diff @ diff) / (2.0 * step):
                break
            if not np.isfinite(f_new):
                logger.debug("pgm iteration %d: non-finite objective, shrinking step %.3g", it, step)
            step *= cfg.line_search_shrink
        else:
            if not np.isfinite(f_new):
                raise SolverError(f"objective stayed non-finite after {MAX_SHRINKS} step shrinks (iteration {it})")
            logger.warning("pgm iteration %d: line search exhausted at step %.3g without sufficient decrease", it, step)
            return PgmResult(x, composite, it, False, step)

        mapping_norm = math.sqrt(float(diff @ diff)) / step
        composite_new = f_new + _l1(x_new)
        stalled = abs(composite - composite_new) <= cfg.rel_tol * max(1.0, abs(composite))
        x, f, grad, composite = x_new, f_new, grad_new, composite_new
        if mapping_norm < cfg.grad_tol or stalled:
            return PgmResult(x, composite, it, True, step)
        step *= cfg.expand
    return PgmResult(x, composite, cfg.max_iters, False, step)


def augmented_objective(dataset: Dataset, k: int, sigma: float, alpha: float, rho: float) -> SmoothObjective:
    """Smooth part ``nmll + alpha h + rho/2 h**2`` over packed parameters."""
    mask = offdiag_mask(k)
    s_part = s_slice(k)

    def objective(x):
        theta = unpack(x, k, sigma=sigma)
        try:
            value, grad = likelihood.evaluate(theta, dataset)
        except KernelError as exc:
            logger.debug("objective rejected trial point: %s", exc)
            return math.inf, None
        h, h_grad = acyclicity.evaluate(theta.S)
        total = value + alpha * h + 0.5 * rho * h * h
        grad = grad.copy()
        grad[s_part] += (alpha + rho * h) * h_grad[mask]
        return total, grad

    return objective


def auglag_solve(
    dataset: Dataset,
    lam: float,
    theta0: Theta,
    eps: float = 0.1,
    rho_max: float = 1e8,
    cfg: PgmConfig | None = None,
    max_outer: int = 100,
) -> tuple[Theta, AugLagState]:
    """Dual ascent on the acyclicity constraint.

    Per outer iteration: repeat {solve the primal at (alpha, rho); accept if
    ``h`` fell below a quarter of its previous value, else ``rho *= 10``} while
    ``rho < rho_max``; then ``alpha += rho h``; stop once ``h < eps`` or
    ``rho >= rho_max``. The first decrease test is against ``h = inf``.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if rho_max < 1:
        raise ValueError(f"rho_max must be >= 1, got {rho_max}")
    cfg = cfg or PgmConfig()
    k = theta0.k
    sigma = theta0.sigma
    penalized = np.zeros(k * (k - 1) + k, dtype=bool)
    penalized[s_slice(k)] = True

    alpha, rho = 0.0, 1.0
    x = pack(theta0)
    g_prev = math.inf
    g_new = acyclicity.h_value(theta0.S)
    inner_total = 0
    trace = []

    for outer in range(1, max_outer + 1):
        x_new = x
        while True:
            objective = augmented_objective(dataset, k, sigma, alpha, rho)
            try:
                result = pgm_solve(objective, lam, x, cfg, penalized=penalized)
            except SolverError as exc:
                raise SolverError(f"outer iteration {outer} (rho={rho:g}, alpha={alpha:g}): {exc}") from exc
            inner_total += result.iterations
            x_new = result.x
            g_new = acyclicity.h_value(unpack(x_new, k, sigma=sigma).S)
            accepted = g_new < 0.25 * g_prev
            trace.append(AugLagStep(outer=outer, rho=rho, alpha=alpha, g=g_new, accepted=accepted))
            if accepted or rho >= rho_max:
                break
            rho *= 10.0
            logger.debug("outer %d: h=%.4g did not drop below %.4g, rho -> %g", outer, g_new, 0.25 * g_prev, rho)
            if rho >= rho_max:
                break
        x, g_prev = x_new, g_new
        alpha += rho * g_new
        if g_new < eps or rho >= rho_max:
            break

    theta = unpack(x, k, sigma=sigma)
    state = AugLagState(
        alpha=alpha, rho=rho, theta=theta, g=g_new,
        outer_iterations=outer, inner_iterations=inner_total, trace=tuple(trace),
    )
    logger.debug("auglag lambda=%.4g: h=%.3g rho=%g after %d outer / %d inner iterations",
                 lam, g_new, rho, outer, inner_total)
    return theta, state
