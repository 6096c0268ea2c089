"""Negative marginal log-likelihood of a dataset under StructGP, and AIC.

Zero-mean GP. Evaluation runs per block-size batch: every patient is an
independent block, and patients sharing a block size are factorized together.
The gradient is the usual ``1/2 tr((K^-1 - alpha alpha^T) dK/dtheta)``
contracted analytically, so no per-parameter derivative matrices are built:

* S: with ``Q = W o G`` aggregated per task pair into ``T = E^T Q E``
  (``E`` the one-hot task design), ``dnmll/dS = -(T M)``;
* ell: ``dnmll/dell_c = sum_{p: task c} sum_q W_pq K_pq D_pq`` with ``D`` the
  row log-derivative of the overlap factor (see ``kernel.gram_grad``).
"""
from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np

from .kernel import add_noise, batch_covariance, gram, jittered_cholesky
from .model import Dataset, Theta, offdiag_mask

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


class NmllValue(NamedTuple):
    value: float
    grad: np.ndarray | None


def evaluate(theta: Theta, dataset: Dataset, with_grad: bool = True) -> NmllValue:
    if len(dataset) == 0:
        raise ValueError("cannot evaluate the likelihood of an empty dataset")
    k = theta.k
    a = theta.a
    value = 0.0
    T = np.zeros((k, k))
    grad_ell = np.zeros(k)

    for batch in dataset.batches:
        tasks = batch.tasks
        g, n = tasks.shape
        K, G = batch_covariance(theta, tasks, batch.times)
        L, jitter = jittered_cholesky(add_noise(K, theta.sigma))
        L_inv = np.linalg.solve(L, np.broadcast_to(np.eye(n), (g, n, n)))
        z = L_inv @ batch.values[:, :, None]
        value += 0.5 * float(np.sum(z * z))
        value += float(np.sum(np.log(np.diagonal(L, axis1=1, axis2=2))))
        value += 0.5 * g * n * LOG_2PI
        if not with_grad:
            continue

        L_inv_t = np.swapaxes(L_inv, 1, 2)
        alpha = L_inv_t @ z
        W = L_inv_t @ L_inv - alpha @ np.swapaxes(alpha, 1, 2)
        if np.any(jitter):
            # jitter is proportional to mean(diag K), so dK picks up jitter * mean(diag dK) * I
            W = W + (jitter * np.trace(W, axis1=1, axis2=2) / n)[:, None, None] * np.eye(n)

        onehot = np.eye(k)[tasks]
        T += np.sum(np.swapaxes(onehot, 1, 2) @ (W * G) @ onehot, axis=0)

        a_row = a[tasks][:, :, None]
        s = a_row + a[tasks][:, None, :]
        tau_sq = np.square(batch.times[:, :, None] - batch.times[:, None, :])
        D = 0.5 - 0.5 * a_row / s + tau_sq * a_row / np.square(s)
        row_sums = np.sum(W * K * D, axis=2)
        grad_ell += np.bincount(tasks.ravel(), weights=row_sums.ravel(), minlength=k)

    if not np.isfinite(value):
        logger.debug("non-finite nmll for %r", theta)
    if not with_grad:
        return NmllValue(value=value, grad=None)
    grad_S = -(T @ theta.mixing)
    grad = np.concatenate([grad_S[offdiag_mask(k)], grad_ell])
    return NmllValue(value=value, grad=grad)


def nmll(theta: Theta, dataset: Dataset) -> float:
    return evaluate(theta, dataset, with_grad=False).value


def nmll_grad(theta: Theta, dataset: Dataset) -> np.ndarray:
    return evaluate(theta, dataset).grad


def count_edges(theta: Theta) -> int:
    return int(np.count_nonzero(theta.S[offdiag_mask(theta.k)]))


def aic(theta_thresholded: Theta, dataset: Dataset) -> float:
    """``2 ||S||_0 + 2 nmll`` at the thresholded parameters, without refitting."""
    return 2.0 * count_edges(theta_thresholded) + 2.0 * nmll(theta_thresholded, dataset)


def dense_nmll(theta: Theta, dataset: Dataset) -> float:
    """Monolithic evaluation with an explicit inverse; reference for the blockwise path."""
    K = gram(theta, dataset).dense()
    y = dataset.value
    _, logdet = np.linalg.slogdet(K)
    return float(0.5 * y @ np.linalg.inv(K) @ y + 0.5 * logdet + 0.5 * len(y) * LOG_2PI)
