"""Randomized self-checks behind ``manage.py verify``.

Each check draws its own instances from ``default_rng([seed, index])`` and
compares an engine routine against an independent oracle: quadrature for the
kernel, central differences for gradients, brute force for the hard
threshold, frequency-domain partial correlations for the structure.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import acyclicity, ci_oracle, kernel, likelihood, simulator
from .model import Dag, Dataset, Theta, pack, unpack

logger = logging.getLogger(__name__)

FD_STEP = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    instances: int
    worst: float
    tolerance: float

    def as_row(self) -> dict:
        return {'check': self.name, 'passed': self.passed, 'instances': self.instances,
                'worst': self.worst, 'tolerance': self.tolerance}


def central_difference(func: Callable[[np.ndarray], float], x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = step
        out.flat[i] = (func(x + e) - func(x - e)) / (2.0 * step)
    return out


def relative_error(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1.0))


def brute_force_threshold(S) -> float:
    """Scan every candidate magnitude in increasing order."""
    S = np.asarray(S, dtype=float)
    magnitudes = np.unique(np.abs(S[S != 0.0]))
    for t in np.concatenate([[0.0], magnitudes, [np.nextafter(magnitudes[-1], np.inf)] if magnitudes.size else []]):
        if acyclicity.is_dag(np.where(np.abs(S) < t, 0.0, S) != 0.0):
            return float(t)
    raise AssertionError("unreachable: the empty graph is acyclic")


def _random_theta(k: int, rng: np.random.Generator, md: float | None = None, sigma: float = 0.1) -> Theta:
    md = min(2.0, k - 1) if md is None else md
    dag = simulator.sample_er_dag(k, md, rng)
    return simulator.sample_theta(dag, rng, sigma=sigma)


def _small_dataset(theta: Theta, rng: np.random.Generator, r: int = 3, n_per_task: int = 2) -> Dataset:
    return simulator.sample_dataset(theta, r, n_per_task, rng)


def check_kernel(seed: int, k: int, instances: int = 100, tol: float = 1e-8) -> CheckResult:
    worst = 0.0
    for i in range(instances):
        rng = np.random.default_rng([seed, 1, i])
        theta = _random_theta(k, rng)
        u, v = (int(x) for x in rng.integers(0, k, size=2))
        tau = float(rng.uniform(-3.0, 3.0))
        closed = kernel.cross_cov(theta, u, v, tau)
        worst = max(worst, abs(closed - kernel.cross_cov_quadrature_oracle(theta, u, v, tau)))
    return CheckResult('kernel_quadrature', worst < tol, instances, worst, tol)


def check_nmll_gradient(seed: int, k: int, instances: int = 50, tol: float = 1e-5) -> CheckResult:
    worst = 0.0
    for i in range(instances):
        rng = np.random.default_rng([seed, 2, i])
        truth = _random_theta(k, rng)
        dataset = _small_dataset(truth, rng)
        # evaluate away from the truth so every S entry carries gradient
        x = pack(truth) + rng.normal(scale=0.1, size=pack(truth).shape)
        x[:k * (k - 1)] *= 0.5
        theta = unpack(x, k, sigma=truth.sigma)
        analytic = likelihood.nmll_grad(theta, dataset)
        numeric = central_difference(lambda y: likelihood.nmll(unpack(y, k, sigma=truth.sigma), dataset), x)
        worst = max(worst, relative_error(analytic, numeric))
    return CheckResult('nmll_gradient', worst < tol, instances, worst, tol)


def check_h_gradient(seed: int, k: int, instances: int = 50, tol: float = 1e-5) -> CheckResult:
    worst = 0.0
    for i in range(instances):
        rng = np.random.default_rng([seed, 3, i])
        S = rng.normal(scale=0.5, size=(k, k))
        np.fill_diagonal(S, 0.0)
        numeric = central_difference(lambda y: float(np.trace(acyclicity.matrix_exp(y * y))), S)
        np.fill_diagonal(numeric, 0.0)
        analytic = acyclicity.h_grad(S)
        np.fill_diagonal(analytic, 0.0)
        worst = max(worst, relative_error(analytic, numeric))
    return CheckResult('h_gradient', worst < tol, instances, worst, tol)


def check_acyclicity(seed: int, k: int, instances: int = 500) -> CheckResult:
    disagreements = 0
    for i in range(instances):
        rng = np.random.default_rng([seed, 4, i])
        adj = rng.random((k, k)) < rng.uniform(0.1, 0.5)
        np.fill_diagonal(adj, False)
        S = np.where(adj, rng.uniform(0.5, 2.0, size=(k, k)), 0.0)
        if (acyclicity.h_value(S) < 1e-12) != acyclicity.is_dag(adj):
            disagreements += 1
    return CheckResult('h_equivalence', disagreements == 0, instances, float(disagreements), 0.0)


def check_threshold(seed: int, k: int, instances: int = 200) -> CheckResult:
    k = min(k, 6)
    worst = 0.0
    for i in range(instances):
        rng = np.random.default_rng([seed, 5, i])
        S = rng.normal(size=(k, k)) * (rng.random((k, k)) < 0.6)
        np.fill_diagonal(S, 0.0)
        threshold, _ = acyclicity.min_dag_threshold(S)
        worst = max(worst, abs(threshold - brute_force_threshold(S)))
    return CheckResult('threshold_minimality', worst == 0.0, instances, worst, 0.0)


def check_identifiability(seed: int, k: int, instances: int = 50) -> CheckResult:
    k = min(k, 5)
    disagreements = 0
    for i in range(instances):
        rng = np.random.default_rng([seed, 6, i])
        theta = _random_theta(k, rng)
        order = Dag.from_weights(theta.S).topological_order()
        for pos_u, pos_v in itertools.combinations(range(k), 2):
            u, v = order[pos_u], order[pos_v]
            independent = ci_oracle.ordered_ci_check(theta, u, v, order=order)
            if independent != (theta.S[v, u] == 0.0):
                disagreements += 1
    return CheckResult('ordered_ci_identifiability', disagreements == 0, instances, float(disagreements), 0.0)


def check_markov_factorization(seed: int, k: int, instances: int = 20, tol: float = 1e-6) -> CheckResult:
    k = min(k, 4)
    worst = 0.0
    for i in range(instances):
        rng = np.random.default_rng([seed, 7, i])
        theta = _random_theta(k, rng)
        dag = Dag.from_weights(theta.S)
        omegas = ci_oracle.DEFAULT_OMEGAS
        snapshot = ci_oracle.sample_snapshot(theta, omegas, rng)
        gap = ci_oracle.markov_factorization_gap(theta, omegas, ci_oracle.ancestor_sets(dag), snapshot)
        worst = max(worst, gap)
    return CheckResult('markov_factorization', worst < tol, instances, worst, tol)


CHECKS = (
    (check_kernel, 100),
    (check_nmll_gradient, 50),
    (check_h_gradient, 50),
    (check_acyclicity, 500),
    (check_threshold, 200),
    (check_identifiability, 50),
    (check_markov_factorization, 20),
)


def run_checks(seed: int = 0, k: int = 4, scale: float = 1.0) -> list[CheckResult]:
    """All checks; ``scale`` shrinks instance counts for quick runs."""
    if k < 2:
        raise ValueError(f"verification needs k >= 2, got {k}")
    if not 0 < scale <= 1:
        raise ValueError(f"scale must lie in (0, 1], got {scale}")
    results = []
    for check, instances in CHECKS:
        result = check(seed, k, instances=max(1, int(round(instances * scale))))
        logger.info("%s: %s (worst %.3g over %d instances)",
                    result.name, 'pass' if result.passed else 'FAIL', result.worst, result.instances)
        results.append(result)
    return results
