"""Shared domain types and the StructGP impulse-response parameterization.

The impulse response of the process is ``H(t) = (I - S) o L(t)`` where
``L_vu(t) = exp(-t**2 / a_v)`` and ``a_v = exp(ell_v)`` is tied per output
task ``v``. ``S[v, u] != 0`` encodes the edge ``u -> v``.

All indices used in-process are 0-based. Files use 1-based ids and are
converted in ``structgp.formats``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

import networkx as nx
import numpy as np

from .acyclicity import is_dag


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


def offdiag_mask(k: int) -> np.ndarray:
    """Boolean mask of the ``k*(k-1)`` off-diagonal entries, row-major."""
    return ~np.eye(k, dtype=bool)


@dataclass(frozen=True, eq=False)
class Theta:
    """Full parameter set of a StructGP: weights, log-lengthscales, noise."""

    S: np.ndarray
    ell: np.ndarray
    sigma: float = 0.01

    def __post_init__(self):
        S = np.array(self.S, dtype=float)
        ell = np.array(self.ell, dtype=float).reshape(-1)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] == 0:
            raise ValueError(f"S must be a non-empty square matrix, got shape {S.shape}")
        if ell.shape[0] != S.shape[0]:
            raise ValueError(f"ell has {ell.shape[0]} entries, expected {S.shape[0]}")
        if np.any(np.diag(S) != 0.0):
            raise ValueError("diag(S) must be exactly zero")
        if not np.all(np.isfinite(ell)):
            raise ValueError("ell must be finite")
        sigma = float(self.sigma)
        if not sigma >= 0.0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma!r}")
        S.flags.writeable = False
        ell.flags.writeable = False
        object.__setattr__(self, 'S', S)
        object.__setattr__(self, 'ell', ell)
        object.__setattr__(self, 'sigma', sigma)

    @property
    def k(self) -> int:
        return self.S.shape[0]

    @property
    def a(self) -> np.ndarray:
        """Effective lengthscales ``exp(ell)``."""
        return np.exp(self.ell)

    @property
    def mixing(self) -> np.ndarray:
        """``I - S``: output scales of the impulse response."""
        return np.eye(self.k) - self.S

    @classmethod
    def zeros(cls, k: int, sigma: float = 0.01) -> 'Theta':
        return cls(S=np.zeros((k, k)), ell=np.zeros(k), sigma=sigma)

    def replace(self, **changes) -> 'Theta':
        return dataclasses.replace(self, **changes)

    def __repr__(self) -> str:
        return f"Theta(k={self.k}, nnz={int(np.count_nonzero(self.S))}, sigma={self.sigma})"


def impulse_response(theta: Theta, v: int, u: int, t):
    """``H_vu(t) = (I - S)_vu * exp(-t**2 / a_v)``; ``t`` may be an array."""
    k = theta.k
    if not (0 <= v < k and 0 <= u < k):
        raise IndexError(f"task pair ({v}, {u}) out of range for k={k}")
    return theta.mixing[v, u] * np.exp(-np.square(t) / theta.a[v])


def pack(theta: Theta) -> np.ndarray:
    """Flatten off-diagonal S (row-major) followed by ell. Sigma is fixed and excluded."""
    return np.concatenate([theta.S[offdiag_mask(theta.k)], theta.ell])


def unpack(vector, k: int, sigma: float = 0.01) -> Theta:
    vector = np.asarray(vector, dtype=float)
    expected = k * (k - 1) + k
    if vector.ndim != 1 or vector.shape[0] != expected:
        raise ValueError(f"packed vector has length {vector.size}, expected {expected} for k={k}")
    S = np.zeros((k, k))
    S[offdiag_mask(k)] = vector[:k * (k - 1)]
    return Theta(S=S, ell=vector[k * (k - 1):].copy(), sigma=sigma)


def s_slice(k: int) -> slice:
    """Position of the S entries inside a packed vector."""
    return slice(0, k * (k - 1))


@dataclass(frozen=True)
class Observation:
    patient: int
    task: int
    time: float
    value: float


class PatientBlock(NamedTuple):
    patient: int
    tasks: np.ndarray
    times: np.ndarray
    values: np.ndarray


class PatientBatch(NamedTuple):
    """Patients sharing one block size, stacked along the first axis."""

    patients: np.ndarray
    tasks: np.ndarray
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class Dataset:
    """Irregularly sampled multi-patient observations, stored patient-contiguous."""

    patient: np.ndarray
    task: np.ndarray
    time: np.ndarray
    value: np.ndarray
    k: int
    r: int

    def __post_init__(self):
        patient = np.asarray(self.patient, dtype=np.int64).reshape(-1)
        task = np.asarray(self.task, dtype=np.int64).reshape(-1)
        time = np.asarray(self.time, dtype=float).reshape(-1)
        value = np.asarray(self.value, dtype=float).reshape(-1)
        n = patient.shape[0]
        if not (task.shape[0] == time.shape[0] == value.shape[0] == n):
            raise ValueError("patient, task, time and value must have equal lengths")
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")
        if n and (task.min() < 0 or task.max() >= self.k):
            raise ValueError(f"task ids must lie in [0, {self.k})")
        if not np.all(np.isfinite(time)):
            raise ValueError("observation times must be finite")
        if not np.all(np.isfinite(value)):
            raise ValueError("observation values must be finite")
        if not np.array_equal(np.unique(patient), np.arange(self.r)):
            raise ValueError(f"patient ids must be dense in [0, {self.r})")
        order = np.argsort(patient, kind='stable')
        for name, arr in (('patient', patient), ('task', task), ('time', time), ('value', value)):
            object.__setattr__(self, name, _frozen_array(arr[order], dtype=arr.dtype))
        object.__setattr__(self, 'k', int(self.k))
        object.__setattr__(self, 'r', int(self.r))

    @classmethod
    def from_observations(cls, observations: Iterable[Observation], k: int, r: int | None = None) -> 'Dataset':
        obs = list(observations)
        patient = np.array([o.patient for o in obs], dtype=np.int64)
        if r is None:
            r = int(patient.max()) + 1 if obs else 0
        return cls(
            patient=patient,
            task=np.array([o.task for o in obs], dtype=np.int64),
            time=np.array([o.time for o in obs], dtype=float),
            value=np.array([o.value for o in obs], dtype=float),
            k=k,
            r=r,
        )

    def __len__(self) -> int:
        return int(self.patient.shape[0])

    @property
    def observations(self) -> list[Observation]:
        return [
            Observation(int(p), int(j), float(t), float(y))
            for p, j, t, y in zip(self.patient, self.task, self.time, self.value)
        ]

    @cached_property
    def blocks(self) -> list[PatientBlock]:
        bounds = np.searchsorted(self.patient, np.arange(self.r + 1))
        return [
            PatientBlock(i, self.task[lo:hi], self.time[lo:hi], self.value[lo:hi])
            for i, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:]))
        ]

    @cached_property
    def batches(self) -> list[PatientBatch]:
        by_size: dict[int, list[PatientBlock]] = {}
        for block in self.blocks:
            by_size.setdefault(len(block.tasks), []).append(block)
        return [
            PatientBatch(
                patients=np.array([b.patient for b in group]),
                tasks=np.stack([b.tasks for b in group]),
                times=np.stack([b.times for b in group]),
                values=np.stack([b.values for b in group]),
            )
            for size, group in sorted(by_size.items())
            if size > 0
        ]

    def observed_tasks(self) -> np.ndarray:
        return np.unique(self.task)


@dataclass(frozen=True, eq=False)
class Dag:
    """Directed acyclic graph; ``adj[v, u]`` is true for the edge ``u -> v``."""

    adj: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adj, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        if np.any(np.diag(adj)):
            raise ValueError("adjacency diagonal must be false")
        if not is_dag(adj):
            raise ValueError("adjacency contains a directed cycle")
        adj.flags.writeable = False
        object.__setattr__(self, 'adj', adj)

    @property
    def k(self) -> int:
        return self.adj.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adj.sum())

    @classmethod
    def empty(cls, k: int) -> 'Dag':
        return cls(np.zeros((k, k), dtype=bool))

    @classmethod
    def from_edges(cls, k: int, edges: Iterable[tuple[int, int]]) -> 'Dag':
        adj = np.zeros((k, k), dtype=bool)
        for u, v in edges:
            adj[v, u] = True
        return cls(adj)

    @classmethod
    def from_weights(cls, S) -> 'Dag':
        return cls(np.asarray(S) != 0.0)

    def edges(self) -> list[tuple[int, int]]:
        """Edges ``(u, v)`` meaning ``u -> v``, sorted."""
        vs, us = np.nonzero(self.adj)
        return sorted((int(u), int(v)) for u, v in zip(us, vs))

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.k))
        graph.add_edges_from(self.edges())
        return graph

    def parents(self, v: int) -> list[int]:
        return [int(u) for u in np.flatnonzero(self.adj[v])]

    def ancestors(self, v: int) -> list[int]:
        return sorted(nx.ancestors(self.to_networkx(), v))

    def topological_order(self) -> list[int]:
        return list(nx.lexicographical_topological_sort(self.to_networkx()))

    def __repr__(self) -> str:
        return f"Dag(k={self.k}, edges={self.edges()})"
