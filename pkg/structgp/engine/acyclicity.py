"""Trace-exponential acyclicity function and the hard threshold to DAGness.

``h(S) = tr(exp(S o S)) - k`` is zero exactly when the support of ``S`` is
acyclic, and smooth in ``S`` with gradient ``exp(S o S)^T o 2S``.
"""
from __future__ import annotations

import logging
from typing import NamedTuple

import networkx as nx
import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

# entries below this magnitude are structural zeros (round-off guard only)
SUPPORT_TOL = 1e-12


class AcyclicityValue(NamedTuple):
    h: float
    grad: np.ndarray


def _square(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    return S


def matrix_exp(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring with Pade approximants."""
    return scipy.linalg.expm(_square(A))


def evaluate(S) -> AcyclicityValue:
    S = _square(S)
    E = matrix_exp(S * S)
    # clip: tr(exp(.)) >= k holds exactly for nonnegative arguments
    h = max(float(np.trace(E)) - S.shape[0], 0.0)
    return AcyclicityValue(h=h, grad=E.T * S * 2.0)


def h_value(S) -> float:
    return evaluate(S).h


def h_grad(S) -> np.ndarray:
    return evaluate(S).grad


def is_dag(adjacency) -> bool:
    """True iff the boolean adjacency (``adj[v, u]`` for ``u -> v``) has no directed cycle."""
    adj = np.asarray(adjacency, dtype=bool)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {adj.shape}")
    if np.any(np.diag(adj)):
        return False
    graph = nx.from_numpy_array(adj.T.astype(np.int8), create_using=nx.DiGraph)
    return nx.is_directed_acyclic_graph(graph)


def support(S, tol: float = SUPPORT_TOL) -> np.ndarray:
    return np.abs(np.asarray(S, dtype=float)) >= tol


def min_dag_threshold(S) -> tuple[float, np.ndarray]:
    """Smallest threshold ``t`` such that zeroing ``|S| < t`` leaves an acyclic support.

    Candidates are 0 and the distinct nonzero magnitudes of ``S``; DAGness is
    monotone in ``t`` so the candidates are bisected. When the largest
    magnitude still closes a cycle (ties), the threshold moves just past it
    and the result is the empty graph.
    """
    S = _square(S)
    S = np.where(support(S), S, 0.0)
    if is_dag(S != 0.0):
        return 0.0, S

    magnitudes = np.unique(np.abs(S[S != 0.0]))
    candidates = np.append(magnitudes, np.nextafter(magnitudes[-1], np.inf))

    def _masked(t):
        return np.where(np.abs(S) < t, 0.0, S)

    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if is_dag(_masked(candidates[mid]) != 0.0):
            hi = mid
        else:
            lo = mid + 1
    threshold = float(candidates[lo])
    logger.debug("hard threshold %.6g removes %d entries", threshold, int(np.sum((np.abs(S) < threshold) & (S != 0.0))))
    return threshold, _masked(threshold)
