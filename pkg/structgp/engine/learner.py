"""Regularization path, AIC selection and graph extraction.

A fit walks a log-spaced lambda grid from ``lambda_max`` down to
``lambda_min = ratio * lambda_max``. Each point is solved by the augmented
Lagrangian from the previous point's raw (un-thresholded) parameters; the
first point starts at ``S = 0, ell = 0``. Every point is then hard
thresholded to DAGness and scored by AIC on the thresholded parameters; the
lowest AIC wins, ties going to the larger lambda.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import acyclicity, likelihood
from .exceptions import KernelError, LearnerError, SolverError
from .model import Dag, Dataset, Theta, offdiag_mask
from .optimizer import SolverConfig, auglag_solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PathPoint:
    lam: float
    theta: Theta
    theta_dag: Theta
    nmll: float
    aic: float
    h: float
    nnz: int
    threshold: float
    outer_iterations: int = 0
    inner_iterations: int = 0


@dataclass(frozen=True, eq=False)
class FitResult:
    selected: PathPoint
    graph: Dag
    threshold_used: float
    path: list
    failures: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def lam(self) -> float:
        return self.selected.lam


def lambda_max(dataset: Dataset, sigma: float = 0.01) -> float:
    """Smallest lambda at which the first prox step from ``S = 0`` keeps every weight at zero."""
    if len(dataset) == 0:
        raise ValueError("cannot build a lambda grid for an empty dataset")
    if dataset.k < 2:
        raise ValueError("a lambda grid needs at least two tasks")
    theta0 = Theta.zeros(dataset.k, sigma=sigma)
    grad = likelihood.nmll_grad(theta0, dataset)
    return float(np.max(np.abs(grad[:dataset.k * (dataset.k - 1)])))


def lambda_grid(dataset: Dataset, n_lambda: int, ratio: float = 1e-3, sigma: float = 0.01) -> list[float]:
    if n_lambda < 1:
        raise ValueError(f"n_lambda must be positive, got {n_lambda}")
    top = lambda_max(dataset, sigma=sigma)
    if not top > 0:
        raise ValueError("gradient at zero weights vanishes; no cross-task signal to regularize")
    return [float(x) for x in np.geomspace(top, top * ratio, n_lambda)]


def _evaluate_point(dataset: Dataset, lam: float, theta: Theta, state) -> PathPoint:
    threshold, S_masked = acyclicity.min_dag_threshold(theta.S)
    theta_dag = theta.replace(S=S_masked)
    value = likelihood.nmll(theta_dag, dataset)
    nnz = likelihood.count_edges(theta_dag)
    return PathPoint(
        lam=lam,
        theta=theta,
        theta_dag=theta_dag,
        nmll=value,
        aic=2.0 * nnz + 2.0 * value,
        h=state.g,
        nnz=nnz,
        threshold=threshold,
        outer_iterations=state.outer_iterations,
        inner_iterations=state.inner_iterations,
    )


def fit_path(dataset: Dataset, grid, config: SolverConfig | None = None, theta0: Theta | None = None) -> tuple[list[PathPoint], list]:
    """Warm-started solves along ``grid`` (descending). Returns points and recorded failures."""
    config = config or SolverConfig()
    grid = [float(lam) for lam in grid]
    if any(a < b for a, b in zip(grid, grid[1:])):
        raise ValueError("lambda grid must be sorted in descending order")
    warm = theta0 or Theta.zeros(dataset.k, sigma=config.sigma)
    points, failures = [], []
    for j, lam in enumerate(grid):
        try:
            theta, state = auglag_solve(
                dataset, lam, warm, eps=config.eps, rho_max=config.rho_max,
                cfg=config.pgm, max_outer=config.max_outer,
            )
            point = _evaluate_point(dataset, lam, theta, state)
        except (SolverError, KernelError) as exc:
            logger.warning("path point %d (lambda=%.4g) failed: %s", j, lam, exc)
            failures.append((lam, str(exc)))
            continue
        points.append(point)
        warm = theta
        logger.debug("path point %d/%d lambda=%.4g nnz=%d aic=%.4f h=%.3g",
                     j + 1, len(grid), lam, point.nnz, point.aic, point.h)
    if not points:
        raise LearnerError(f"all {len(grid)} path points failed")
    return points, failures


def select(path, failures=None, diagnostics=None) -> FitResult:
    if not path:
        raise LearnerError("cannot select from an empty path")
    best = path[0]
    for point in path[1:]:
        # strict: equal AIC keeps the earlier, larger lambda
        if point.aic < best.aic:
            best = point
    return FitResult(
        selected=best,
        graph=Dag.from_weights(best.theta_dag.S),
        threshold_used=best.threshold,
        path=list(path),
        failures=list(failures or []),
        diagnostics=dict(diagnostics or {}),
    )


def fit(dataset: Dataset, n_lambda: int, config: SolverConfig | None = None) -> FitResult:
    """Grid, warm-started path and AIC selection in one call."""
    config = config or SolverConfig()
    started = time.perf_counter()
    grid = lambda_grid(dataset, n_lambda, ratio=config.lambda_min_ratio, sigma=config.sigma)
    path, failures = fit_path(dataset, grid, config)
    result = select(path, failures, diagnostics={
        'n_lambda': n_lambda,
        'lambda_max': grid[0],
        'lambda_min': grid[-1],
        'outer_iterations': sum(p.outer_iterations for p in path),
        'inner_iterations': sum(p.inner_iterations for p in path),
        'failed_points': len(failures),
        'wall_time': time.perf_counter() - started,
    })
    logger.info("selected lambda=%.4g with %d edges (aic=%.4f) from %d points",
                result.lam, result.graph.n_edges, result.selected.aic, len(path))
    return result


def random_theta0(k: int, rng: np.random.Generator, sigma: float = 0.01) -> Theta:
    """Random start: off-diagonal S ~ U(-1, 1), ell ~ U(-0.5, 0.5)."""
    S = np.zeros((k, k))
    S[offdiag_mask(k)] = rng.uniform(-1.0, 1.0, size=k * (k - 1))
    return Theta(S=S, ell=rng.uniform(-0.5, 0.5, size=k), sigma=sigma)


def fit_direct(dataset: Dataset, lam: float, theta0: Theta, config: SolverConfig | None = None) -> FitResult:
    """Single solve at ``lam`` from ``theta0``: the no-path baseline."""
    config = config or SolverConfig()
    started = time.perf_counter()
    path, failures = fit_path(dataset, [lam], config, theta0=theta0)
    return select(path, failures, diagnostics={
        'n_lambda': 1,
        'outer_iterations': path[0].outer_iterations,
        'inner_iterations': path[0].inner_iterations,
        'wall_time': time.perf_counter() - started,
    })
