"""Graph and parameter recovery scores, with bootstrap summaries."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
import scipy.stats

from .model import Dag, Theta, offdiag_mask


class ShdCounts(NamedTuple):
    shd: int
    extra: int
    missing: int
    reversed: int


class PrecisionRecall(NamedTuple):
    precision: float
    recall: float
    precision_undefined: bool
    recall_undefined: bool


@dataclass(frozen=True)
class GraphScore:
    shd: int
    precision: float
    recall: float
    extra: int
    missing: int
    reversed: int
    rmse_s: float
    tp: int
    precision_undefined: bool = False
    recall_undefined: bool = False

    def as_row(self) -> dict:
        return asdict(self)


def _adjacencies(pred: Dag, truth: Dag) -> tuple[np.ndarray, np.ndarray]:
    if pred.k != truth.k:
        raise ValueError(f"graphs have different task counts ({pred.k} vs {truth.k})")
    return pred.adj, truth.adj


def shd(pred: Dag, truth: Dag) -> ShdCounts:
    """Edge insertions, deletions and reversals turning ``pred`` into ``truth``.

    Each unordered task pair contributes at most one edit.
    """
    P, T = _adjacencies(pred, truth)
    upper = np.triu_indices(P.shape[0], k=1)
    p_fwd, p_bwd = P.T[upper], P[upper]
    t_fwd, t_bwd = T.T[upper], T[upper]
    pred_any = p_fwd | p_bwd
    truth_any = t_fwd | t_bwd
    same = (p_fwd == t_fwd) & (p_bwd == t_bwd)
    extra = int(np.sum(pred_any & ~truth_any))
    missing = int(np.sum(truth_any & ~pred_any))
    reversed_ = int(np.sum(pred_any & truth_any & ~same))
    return ShdCounts(shd=extra + missing + reversed_, extra=extra, missing=missing, reversed=reversed_)


def precision_recall(pred: Dag, truth: Dag) -> PrecisionRecall:
    """Directed-edge precision and recall; reversed edges count as false positives.

    An empty prediction has precision 1.0 flagged undefined; an empty truth has
    recall 1.0 flagged undefined.
    """
    P, T = _adjacencies(pred, truth)
    tp = int(np.sum(P & T))
    n_pred, n_true = int(P.sum()), int(T.sum())
    precision = tp / n_pred if n_pred else 1.0
    recall = tp / n_true if n_true else 1.0
    return PrecisionRecall(precision, recall, n_pred == 0, n_true == 0)


def rmse_s(theta_pred: Theta, theta_truth: Theta) -> float:
    if theta_pred.k != theta_truth.k:
        raise ValueError("parameter sets have different task counts")
    mask = offdiag_mask(theta_pred.k)
    diff = theta_pred.S[mask] - theta_truth.S[mask]
    return float(np.sqrt(np.mean(diff * diff)))


def score(pred: Dag, truth: Dag, theta_pred: Theta | None = None, theta_truth: Theta | None = None) -> GraphScore:
    counts = shd(pred, truth)
    pr = precision_recall(pred, truth)
    rmse = rmse_s(theta_pred, theta_truth) if theta_pred is not None and theta_truth is not None else float('nan')
    return GraphScore(
        shd=counts.shd,
        precision=pr.precision,
        recall=pr.recall,
        extra=counts.extra,
        missing=counts.missing,
        reversed=counts.reversed,
        rmse_s=rmse,
        tp=int(np.sum(pred.adj & truth.adj)),
        precision_undefined=pr.precision_undefined,
        recall_undefined=pr.recall_undefined,
    )


def bootstrap_ci(values, level: float = 0.95, n_resamples: int = 2000, rng=None, statistic=np.mean) -> tuple[float, float]:
    """Percentile bootstrap interval of ``statistic`` over ``values`` (NaNs dropped)."""
    values = np.asarray(values, dtype=float)
    values = values[~np.isnan(values)]
    if values.size == 0:
        return float('nan'), float('nan')
    if values.size < 2 or np.all(values == values[0]):
        point = float(statistic(values))
        return point, point
    rng = np.random.default_rng(rng)
    res = scipy.stats.bootstrap(
        (values,), statistic, confidence_level=level, n_resamples=n_resamples,
        method='percentile', random_state=rng, vectorized=True,
    )
    return float(res.confidence_interval.low), float(res.confidence_interval.high)


class Summary(NamedTuple):
    n: int
    mean: float
    ci_lo: float
    ci_hi: float
    median: float
    q25: float
    q75: float


def summarize(values, level: float = 0.95, n_resamples: int = 2000, rng=None) -> Summary:
    """Mean with a bootstrap CI and median with its IQR."""
    values = np.asarray(values, dtype=float)
    values = values[~np.isnan(values)]
    if values.size == 0:
        nan = float('nan')
        return Summary(0, nan, nan, nan, nan, nan, nan)
    lo, hi = bootstrap_ci(values, level=level, n_resamples=n_resamples, rng=rng)
    q25, median, q75 = np.percentile(values, [25, 50, 75])
    return Summary(int(values.size), float(values.mean()), lo, hi, float(median), float(q25), float(q75))


SUMMARY_METRICS = ('shd', 'extra', 'missing', 'reversed', 'precision', 'recall', 'rmse_s')


def _flag_filtered(group, prefix: str, metric: str) -> np.ndarray:
    values = group[f'{prefix}{metric}'].to_numpy(dtype=float)
    flag = f'{prefix}{metric}_undefined'
    if flag in group:
        flags = group[flag].astype(bool).to_numpy()
        # flagged values are ignored unless every value is flagged
        if not flags.all():
            values = values[~flags]
    return values


def summarize_report(frame, sweep_keys, seed: int = 0, level: float = 0.95, n_resamples: int = 2000):
    """One row per sweep point with mean/CI and median/IQR per metric and prefix."""
    import pandas as pd

    if 'error' in frame:
        frame = frame[frame['error'].fillna('') == '']
    prefixes = [p for p in ('', 'baseline_', 'direct_') if f'{p}shd' in frame]
    rows = []
    for keys, group in frame.groupby(list(sweep_keys), sort=True):
        row = dict(zip(sweep_keys, keys if isinstance(keys, tuple) else (keys,)))
        row['reps'] = len(group)
        for prefix in prefixes:
            for metric in SUMMARY_METRICS:
                if f'{prefix}{metric}' not in group:
                    continue
                # one generator per cell keeps the summary independent of column order
                stats = summarize(_flag_filtered(group, prefix, metric), level=level,
                                  n_resamples=n_resamples, rng=np.random.default_rng([seed, len(rows)]))
                for stat in ('mean', 'ci_lo', 'ci_hi', 'median', 'q25', 'q75'):
                    row[f'{prefix}{stat}_{metric}'] = getattr(stats, stat)
        rows.append(row)
    return pd.DataFrame(rows)
