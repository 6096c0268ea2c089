"""StructGP covariance: convolved Gaussian impulse responses.

Derivation of the closed form used everywhere below. The covariance between
task ``u`` at time ``t`` and task ``v`` at time ``t'`` of one patient is the
cross-correlation of the impulse responses driven by the shared white noises,

    Cov = sum_w  integral H_uw(s) H_vw(s - tau) ds,        tau = t - t'.

With ``H_uw(s) = M_uw exp(-s**2 / a_u)`` and ``M = I - S`` the lengthscale
does not depend on ``w``, so

    Cov = B_uv * G(a_u, a_v, tau),     B = M M^T,
    G(a, b, tau) = sqrt(pi a b / (a + b)) * exp(-tau**2 / (a + b)).

Both factors are symmetric under ``(u, v, tau) -> (v, u, -tau)``; because the
Gaussian responses are even, convolution and cross-correlation coincide and
the sign convention of ``tau`` does not matter. The closed form is checked
against ``cross_cov_quadrature_oracle`` in the tests.

Patients are independent, so the Gram matrix is block diagonal with one
block per patient.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from .exceptions import KernelError, QuadratureError
from .model import Dataset, Theta, impulse_response, offdiag_mask

logger = logging.getLogger(__name__)

JITTER_FACTOR = 1e-8


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Per-patient covariance blocks and the (task, time) inputs indexing them."""

    blocks: list
    index_map: list

    def dense(self) -> np.ndarray:
        return scipy.linalg.block_diag(*self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)


def overlap(a_u, a_v, tau):
    """``integral exp(-s**2/a_u) exp(-(s - tau)**2/a_v) ds``, broadcasting."""
    s = a_u + a_v
    return np.sqrt(np.pi * a_u * a_v / s) * np.exp(-np.square(tau) / s)


def _check_index(theta: Theta, *tasks: int):
    for task in tasks:
        if not 0 <= task < theta.k:
            raise IndexError(f"task {task} out of range for k={theta.k}")


def cross_cov(theta: Theta, u: int, v: int, tau: float) -> float:
    _check_index(theta, u, v)
    M = theta.mixing
    a = theta.a
    return float(M[u] @ M[v] * overlap(a[u], a[v], tau))


def cross_cov_quadrature_oracle(theta: Theta, u: int, v: int, tau: float, epsabs: float = 1e-10) -> float:
    """Adaptive quadrature of ``sum_w integral H_uw(s) H_vw(s - tau) ds``."""
    _check_index(theta, u, v)
    a = theta.a
    half_width = 40.0 * np.sqrt(max(a[u], a[v])) + abs(tau)
    lo, hi = min(0.0, tau) - half_width, max(0.0, tau) + half_width
    total = 0.0
    for w in range(theta.k):
        if theta.mixing[u, w] == 0.0 or theta.mixing[v, w] == 0.0:
            continue

        def integrand(s, w=w):
            return impulse_response(theta, u, w, s) * impulse_response(theta, v, w, s - tau)

        result = scipy.integrate.quad(
            integrand, lo, hi, points=sorted({0.0, float(tau)}),
            epsabs=epsabs, epsrel=0.0, limit=500, full_output=1,
        )
        if len(result) > 3:
            raise QuadratureError(f"quadrature for (u={u}, v={v}, w={w}, tau={tau}) did not converge: {result[3]}")
        total += result[0]
    return total


def batch_covariance(theta: Theta, tasks: np.ndarray, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Noiseless covariance of stacked blocks and its overlap factor.

    ``tasks``/``times`` have shape ``(g, n)``; both outputs have shape ``(g, n, n)``.
    """
    a = theta.a
    B = theta.mixing @ theta.mixing.T
    a_row = a[tasks][:, :, None]
    a_col = a[tasks][:, None, :]
    tau = times[:, :, None] - times[:, None, :]
    G = overlap(a_row, a_col, tau)
    K = B[tasks[:, :, None], tasks[:, None, :]] * G
    if not np.all(np.isfinite(K)):
        raise KernelError(_nonfinite_message(theta))
    return K, G


def _nonfinite_message(theta: Theta) -> str:
    bad_s = np.argwhere(~np.isfinite(theta.S))
    if bad_s.size:
        v, u = bad_s[0]
        return f"non-finite covariance: S[{v}, {u}] = {theta.S[v, u]}"
    a = theta.a
    bad_a = np.flatnonzero(~np.isfinite(a) | (a == 0.0))
    if bad_a.size:
        v = bad_a[0]
        return f"non-finite covariance: ell[{v}] = {theta.ell[v]} overflows exp"
    v, u = np.unravel_index(np.argmax(np.abs(theta.S)), theta.S.shape)
    return f"non-finite covariance: largest weight S[{v}, {u}] = {theta.S[v, u]}"


def add_noise(K: np.ndarray, sigma: float) -> np.ndarray:
    n = K.shape[-1]
    return K + (sigma ** 2) * np.eye(n)


def jittered_cholesky(K: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cholesky factors of a stack of blocks with the one-shot jitter policy.

    A failing block is retried once with ``1e-8 * mean(diag)`` added to its
    diagonal; a second failure raises ``KernelError``. Also returns the jitter
    factor applied to each block (0 where none was needed), so the likelihood
    gradient can account for the jitter's dependence on the diagonal.
    """
    try:
        return np.linalg.cholesky(K), np.zeros(K.shape[:-2])
    except np.linalg.LinAlgError:
        pass
    stack = K.reshape((-1,) + K.shape[-2:])
    factors = np.empty_like(stack)
    jitter = np.zeros(len(stack))
    for i, block in enumerate(stack):
        try:
            factors[i] = np.linalg.cholesky(block)
            continue
        except np.linalg.LinAlgError:
            pass
        added = JITTER_FACTOR * float(np.mean(np.diag(block)))
        logger.debug("cholesky failed on block %d, retrying with jitter %.3g", i, added)
        try:
            factors[i] = np.linalg.cholesky(block + added * np.eye(block.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise KernelError(f"covariance block {i} is not positive definite after jitter {added:.3g}") from exc
        jitter[i] = JITTER_FACTOR
    return factors.reshape(K.shape), jitter.reshape(K.shape[:-2])


def cholesky(K: np.ndarray) -> np.ndarray:
    return jittered_cholesky(K)[0]


def gram(theta: Theta, dataset: Dataset, noise: bool = True) -> GramMatrix:
    if len(dataset) == 0:
        raise ValueError("gram needs a non-empty dataset")
    blocks, index_map = [], []
    for block in dataset.blocks:
        K, _ = batch_covariance(theta, block.tasks[None, :], block.times[None, :])
        K = K[0]
        blocks.append(add_noise(K, theta.sigma) if noise else K)
        index_map.append((block.tasks, block.times))
    return GramMatrix(blocks=blocks, index_map=index_map)


def gram_grad(theta: Theta, dataset: Dataset) -> list[GramMatrix]:
    """Analytic ``dK/dparam`` for every packed parameter (S off-diagonal, then ell).

    With ``B = M M^T`` and ``M = I - S``:
    ``dB_uv/dS_ab = -(d_ua M_vb + M_ub d_va)``, and
    ``dlogG/dell_c = [u=c] (1/2 - a_u/(2s) + tau**2 a_u/s**2) + [v=c] (same with a_v)``
    where ``s = a_u + a_v``.
    """
    if len(dataset) == 0:
        raise ValueError("gram_grad needs a non-empty dataset")
    k = theta.k
    M = theta.mixing
    a = theta.a
    B = M @ M.T
    per_block = []
    for block in dataset.blocks:
        tasks, times = block.tasks, block.times
        a_row = a[tasks][:, None]
        a_col = a[tasks][None, :]
        s = a_row + a_col
        tau = times[:, None] - times[None, :]
        G = overlap(a_row, a_col, tau)
        K = B[tasks[:, None], tasks[None, :]] * G
        if not np.all(np.isfinite(K)):
            raise KernelError(_nonfinite_message(theta))
        d_row = 0.5 - 0.5 * a_row / s + np.square(tau) * a_row / np.square(s)
        d_col = 0.5 - 0.5 * a_col / s + np.square(tau) * a_col / np.square(s)
        per_block.append((tasks, times, G, K, d_row, d_col))

    grads = []
    rows, cols = np.nonzero(offdiag_mask(k))
    for a_idx, b_idx in zip(rows, cols):
        mats = []
        for tasks, _, G, _, _, _ in per_block:
            dB = np.zeros((k, k))
            dB[a_idx, :] -= M[:, b_idx]
            dB[:, a_idx] -= M[:, b_idx]
            mats.append(dB[tasks[:, None], tasks[None, :]] * G)
        grads.append(GramMatrix(blocks=mats, index_map=[(t, x) for t, x, *_ in per_block]))
    for c in range(k):
        mats = []
        for tasks, _, _, K, d_row, d_col in per_block:
            is_row = (tasks == c)[:, None]
            is_col = (tasks == c)[None, :]
            mats.append(K * (is_row * d_row + is_col * d_col))
        grads.append(GramMatrix(blocks=mats, index_map=[(t, x) for t, x, *_ in per_block]))
    return grads
