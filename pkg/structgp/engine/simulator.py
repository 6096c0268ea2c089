"""Ground-truth sampling and the simulation experiments.

Per rep: sample an Erdos-Renyi DAG, its StructGP parameters and a dataset
from the prior GP; fit along the regularization path; score against the truth
and against an independent random graph of the same distribution. All
randomness of rep ``i`` flows from ``default_rng([seed, i])``.
"""
from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import learner, metrics
from .exceptions import StructGPError
from .kernel import add_noise, batch_covariance, cholesky
from .model import Dag, Dataset, Theta
from .optimizer import SolverConfig

logger = logging.getLogger(__name__)

WEIGHT_RANGE = (0.5, 2.0)
ELL_RANGE = (-0.5, 0.5)
TIME_RANGE = (0.0, 10.0)
SIGMA = 0.01


def sample_er_dag(k: int, md: float, rng: np.random.Generator) -> Dag:
    """Erdos-Renyi DAG with edge probability ``md / (k - 1)`` under a random order."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if not 0 <= md <= max(k - 1, 0):
        raise ValueError(f"mean degree {md} outside [0, {k - 1}]")
    p = md / (k - 1) if k > 1 else 0.0
    order = rng.permutation(k)
    draws = rng.random((k, k)) < p
    lower = np.tril(draws, k=-1)
    adj = np.zeros((k, k), dtype=bool)
    # position j precedes position i in the order: edge order[j] -> order[i]
    adj[np.ix_(order, order)] = lower
    return Dag(adj)


def sample_theta(dag: Dag, rng: np.random.Generator, sigma: float = SIGMA) -> Theta:
    """Weights uniform on [-2, -0.5] u [0.5, 2] over the DAG edges, ell uniform on [-0.5, 0.5]."""
    k = dag.k
    magnitude = rng.uniform(*WEIGHT_RANGE, size=(k, k))
    sign = np.where(rng.random((k, k)) < 0.5, -1.0, 1.0)
    S = np.where(dag.adj, sign * magnitude, 0.0)
    ell = rng.uniform(*ELL_RANGE, size=k)
    return Theta(S=S, ell=ell, sigma=sigma)


def toy_theta(sigma: float = SIGMA) -> Theta:
    """The four-task toy model: edges 1->3, 2->3, 1->4, 3->4 (0-based 0->2, 1->2, 0->3, 2->3)."""
    mixing = np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-1.18, -1.45, 1.0, 0.0],
        [0.82, 0.0, 0.57, 1.0],
    ])
    return Theta(S=np.eye(4) - mixing, ell=np.zeros(4), sigma=sigma)


def sample_dataset(theta: Theta, r: int, n_per_task: int, rng: np.random.Generator,
                   time_range: tuple[float, float] = TIME_RANGE) -> Dataset:
    """Uniform observation times per (patient, task); values drawn jointly per patient."""
    if r < 1 or n_per_task < 1:
        raise ValueError("r and n_per_task must be positive")
    k = theta.k
    tasks = np.repeat(np.arange(k), n_per_task)
    n = tasks.shape[0]
    times = rng.uniform(*time_range, size=(r, n))
    task_stack = np.broadcast_to(tasks, (r, n))
    K, _ = batch_covariance(theta, task_stack, times)
    L = cholesky(add_noise(K, theta.sigma))
    values = (L @ rng.standard_normal((r, n, 1)))[:, :, 0]
    return Dataset(
        patient=np.repeat(np.arange(r), n),
        task=np.tile(tasks, r),
        time=times.ravel(),
        value=values.ravel(),
        k=k,
        r=r,
    )


def _axis(value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


@dataclass(frozen=True)
class ExperimentConfig:
    """One recovery experiment; tuple-valued axes are swept."""

    name: str = 'custom'
    k: tuple = (4,)
    md: tuple = (2,)
    n_lambda: tuple = (50,)
    r: tuple = (50,)
    n_per_task: int = 10
    reps: int = 25
    seed: int = 0
    direct_fit: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        for axis in ('k', 'md', 'n_lambda', 'r'):
            values = _axis(getattr(self, axis))
            if not values:
                raise ValueError(f"sweep axis {axis!r} is empty")
            object.__setattr__(self, axis, values)
        if self.n_per_task <= 0:
            raise ValueError("n_per_task must be positive")
        if self.reps <= 0:
            raise ValueError("reps must be positive")
        if any(k < 2 for k in self.k):
            raise ValueError("k must be at least 2")
        if any(n < 1 for n in self.n_lambda) or any(r < 1 for r in self.r):
            raise ValueError("n_lambda and r must be positive")

    def sweep(self) -> list[dict]:
        points = []
        for k, md, n_lambda, r in itertools.product(self.k, self.md, self.n_lambda, self.r):
            if md > k - 1:
                logger.warning("skipping sweep point k=%d md=%s: mean degree exceeds k - 1", k, md)
                continue
            points.append({'k': k, 'md': md, 'n_lambda': n_lambda, 'r': r})
        return points

    def to_mapping(self) -> dict:
        out = asdict(self)
        out['solver'] = self.solver.to_mapping()
        for axis in ('k', 'md', 'n_lambda', 'r'):
            out[axis] = list(out[axis])
        return out

    @classmethod
    def from_mapping(cls, values: dict, solver_base: SolverConfig | None = None) -> 'ExperimentConfig':
        """Build from a config-file object; a preset ``name`` supplies the defaults."""
        values = dict(values)
        preset = PRESETS.get(str(values.get('name') or '').upper())
        base = preset or cls()
        solver = SolverConfig.from_mapping(values.pop('solver', None) or {}, base=solver_base or base.solver)
        fields = [f for f in cls.__dataclass_fields__ if f != 'solver']
        unknown = set(values) - set(fields)
        if unknown:
            raise ValueError(f"unknown experiment keys: {', '.join(sorted(unknown))}")
        merged = {**{f: getattr(base, f) for f in fields}, **values}
        if preset is not None:
            merged['name'] = preset.name
        return cls(solver=solver, **merged)


PRESETS = {
    'TOY': ExperimentConfig(name='TOY', k=(4,), md=(2,), n_lambda=(256,), r=(50,), reps=20),
    'EXP1': ExperimentConfig(name='EXP1', k=(10,), md=(2,), n_lambda=(50,), r=(1, 2, 5, 10, 20, 35, 50, 100), reps=20),
    'EXP2': ExperimentConfig(name='EXP2', k=(10,), md=(3,), n_lambda=(2, 5, 10, 20, 50, 100, 256, 512), r=(50,),
                             reps=15, direct_fit=True),
    'EXP3': ExperimentConfig(name='EXP3', k=(2, 4, 6, 8, 10, 12, 16, 20), md=(1, 2, 3), n_lambda=(50,), r=(50,), reps=25),
}


@dataclass(frozen=True)
class RepTask:
    sweep_index: int
    point: dict
    rep: int
    seed: int
    n_per_task: int
    direct_fit: bool
    solver: SolverConfig


def _score_columns(prefix: str, score: metrics.GraphScore) -> dict:
    return {f'{prefix}{key}': value for key, value in score.as_row().items()}


def run_rep(task: RepTask) -> dict:
    """One replication; pure function of the task (safe in worker processes)."""
    point = task.point
    row = {'sweep_index': task.sweep_index, **point, 'rep': task.rep, 'seed': task.seed}
    rng = np.random.default_rng([task.seed, task.rep])
    try:
        truth = sample_er_dag(point['k'], point['md'], rng)
        theta_true = sample_theta(truth, rng, sigma=task.solver.sigma)
        dataset = sample_dataset(theta_true, point['r'], task.n_per_task, rng)
        baseline = sample_er_dag(point['k'], point['md'], rng)
        baseline_theta = sample_theta(baseline, rng, sigma=task.solver.sigma)
        direct_theta0 = learner.random_theta0(point['k'], rng, sigma=task.solver.sigma)

        started = time.perf_counter()
        result = learner.fit(dataset, point['n_lambda'], task.solver)
        score = metrics.score(result.graph, truth, result.selected.theta_dag, theta_true)
        row.update({
            'n_edges_true': truth.n_edges,
            'n_edges_pred': result.graph.n_edges,
            'lambda_star': result.lam,
            'failed_points': len(result.failures),
        })
        row.update(_score_columns('', score))
        row.update(_score_columns('baseline_', metrics.score(baseline, truth, baseline_theta, theta_true)))
        if task.direct_fit:
            direct = learner.fit_direct(dataset, result.lam, direct_theta0, task.solver)
            row.update(_score_columns('direct_', metrics.score(direct.graph, truth, direct.selected.theta_dag, theta_true)))
        row['error'] = ''
        logger.info("rep %d at %s finished in %.1fs: shd=%d", task.rep, point, time.perf_counter() - started, score.shd)
    except (StructGPError, ValueError, np.linalg.LinAlgError) as exc:
        logger.warning("rep %d at %s failed: %s", task.rep, point, exc)
        row['error'] = str(exc) or exc.__class__.__name__
    return row


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    config: ExperimentConfig
    rows: list

    @property
    def failures(self) -> int:
        return sum(1 for row in self.rows if row.get('error'))

    def frame(self):
        import pandas as pd

        return pd.DataFrame(self.rows)

    def summary(self):
        return metrics.summarize_report(self.frame(), sweep_keys=['k', 'md', 'n_lambda', 'r'], seed=self.config.seed)


def rep_tasks(config: ExperimentConfig) -> list[RepTask]:
    return [
        RepTask(sweep_index=i, point=point, rep=rep, seed=config.seed, n_per_task=config.n_per_task,
                direct_fit=config.direct_fit, solver=config.solver)
        for i, point in enumerate(config.sweep())
        for rep in range(config.reps)
    ]


def run_experiment(config: ExperimentConfig, jobs: int = 1,
                   progress: Callable[[int, int], None] | None = None) -> ExperimentReport:
    """Run every (sweep point, rep); ``jobs`` changes wall time only, never rows."""
    tasks = rep_tasks(config)
    total = len(tasks)
    logger.info("experiment %s: %d sweep points x %d reps (%d jobs)", config.name, len(config.sweep()), config.reps, jobs)
    rows = []
    if jobs <= 1:
        for done, task in enumerate(tasks, start=1):
            rows.append(run_rep(task))
            if progress:
                progress(done, total)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for done, row in enumerate(pool.map(run_rep, tasks), start=1):
                rows.append(row)
                if progress:
                    progress(done, total)
    rows.sort(key=lambda row: (row['sweep_index'], row['rep']))
    for row in rows:
        row['name'] = config.name
    report = ExperimentReport(config=config, rows=rows)
    if report.failures:
        logger.warning("experiment %s: %d of %d reps failed and are excluded", config.name, report.failures, total)
    return report
