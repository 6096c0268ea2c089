"""Numerical oracles for the identifiability argument.

The Fourier transform of the impulse response is
``Ht_vu(w) = (I - S)_vu sqrt(pi a_v) exp(-a_v w**2 / 4)``, i.e. a positive
diagonal row scaling of ``I - S``. In a topological order of the graph it is
lower triangular with positive diagonal, hence the Cholesky factor of the
spectral density ``f(w) = Ht Ht^T``; zeros of ``S`` are zeros of that factor
and therefore ordered conditional independences, which show up as vanishing
partial cross spectra.

The finite snapshot used for the Markov factorization is the vector of
spectral components at a grid of frequencies (independent across
frequencies). There, the factorization is exact over ancestor sets;
direct-parent sets generally do not suffice.
"""
from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.integrate
import scipy.stats

from .exceptions import QuadratureError
from .model import Dag, Theta, impulse_response

ZERO_TOL = 1e-8
DEFAULT_OMEGAS = (0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0)


class SpectralDensity(NamedTuple):
    omega: float
    f: np.ndarray


def transfer_function(theta: Theta, omega: float) -> np.ndarray:
    a = theta.a
    scale = np.sqrt(np.pi * a) * np.exp(-a * omega * omega / 4.0)
    return scale[:, None] * theta.mixing


def transfer_function_quadrature(theta: Theta, omega: float, epsabs: float = 1e-10) -> np.ndarray:
    """``integral H(t) cos(w t) dt``; the sine part vanishes because ``H`` is even."""
    k = theta.k
    out = np.zeros((k, k))
    for v in range(k):
        half_width = 40.0 * np.sqrt(theta.a[v])
        for u in range(k):
            if theta.mixing[v, u] == 0.0:
                continue
            result = scipy.integrate.quad(
                lambda t: impulse_response(theta, v, u, t) * np.cos(omega * t),
                -half_width, half_width, epsabs=epsabs, epsrel=0.0, limit=500, full_output=1,
            )
            if len(result) > 3:
                raise QuadratureError(f"Fourier quadrature for H[{v}, {u}] at omega={omega} did not converge")
            out[v, u] = result[0]
    return out


def spectral_density(theta: Theta, omega: float) -> SpectralDensity:
    H = transfer_function(theta, omega)
    return SpectralDensity(omega=float(omega), f=H @ H.T)


def partial_cross_spectrum(f: SpectralDensity | np.ndarray, u: int, v: int, C: Iterable[int] = ()) -> float:
    """``f_uv - f_uC f_CC^-1 f_Cv``."""
    F = f.f if isinstance(f, SpectralDensity) else np.asarray(f, dtype=float)
    C = list(C)
    if u in C or v in C:
        raise ValueError("u and v must not belong to the conditioning set")
    if not C:
        return float(F[u, v])
    return float(F[u, v] - F[u, C] @ np.linalg.solve(F[np.ix_(C, C)], F[C, v]))


def ordered_ci_check(theta: Theta, u: int, v: int, omegas: Sequence[float] = DEFAULT_OMEGAS,
                     order: Sequence[int] | None = None, tol: float = ZERO_TOL) -> bool:
    """``Y_u`` independent of ``Y_v`` given the tasks preceding ``u`` in ``order``, at every tested frequency."""
    order = list(range(theta.k)) if order is None else list(order)
    C = order[:order.index(u)]
    return all(abs(partial_cross_spectrum(spectral_density(theta, w), u, v, C)) < tol for w in omegas)


def cholesky_sparsity_oracle(K, u: int, v: int, tol: float = ZERO_TOL) -> bool:
    """Ordered CI of ``u`` and ``v`` (``u < v``) given ``0..u-1``: ``chol(K)[v, u] == 0``."""
    L = np.linalg.cholesky(np.asarray(K, dtype=float))
    return abs(L[max(u, v), min(u, v)]) < tol


def precision_sparsity_oracle(K, u: int, v: int, tol: float = ZERO_TOL) -> bool:
    """Full-conditional CI of ``u`` and ``v``: zero precision entry."""
    return abs(np.linalg.inv(np.asarray(K, dtype=float))[u, v]) < tol


def ancestor_sets(dag: Dag) -> list[list[int]]:
    return [dag.ancestors(v) for v in range(dag.k)]


def parent_sets(dag: Dag) -> list[list[int]]:
    return [dag.parents(v) for v in range(dag.k)]


def conditional_logpdf(x: np.ndarray, cov: np.ndarray, v: int, given: Sequence[int]) -> float:
    """``log p(x_v | x_given)`` under ``N(0, cov)``."""
    given = list(given)
    if not given:
        return float(scipy.stats.norm.logpdf(x[v], scale=np.sqrt(cov[v, v])))
    weights = np.linalg.solve(cov[np.ix_(given, given)], cov[given, v])
    mean = weights @ x[given]
    var = cov[v, v] - cov[v, given] @ weights
    return float(scipy.stats.norm.logpdf(x[v], loc=mean, scale=np.sqrt(var)))


def markov_factorization_gap(theta: Theta, omegas: Sequence[float], parents: Sequence[Sequence[int]],
                             values: np.ndarray) -> float:
    """``|log p(z) - sum_v log p(z_v | z_parents(v))|`` over a frequency snapshot.

    ``values`` has shape ``(len(omegas), k)``: one draw of the spectral
    components per frequency.
    """
    values = np.asarray(values, dtype=float)
    joint, factored = 0.0, 0.0
    for omega, z in zip(omegas, values):
        f = spectral_density(theta, omega).f
        joint += float(scipy.stats.multivariate_normal(mean=np.zeros(theta.k), cov=f).logpdf(z))
        factored += sum(conditional_logpdf(z, f, v, parents[v]) for v in range(theta.k))
    return abs(joint - factored)


def sample_snapshot(theta: Theta, omegas: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    """One draw of the spectral components ``Ht(w) W`` at each frequency."""
    return np.stack([transfer_function(theta, w) @ rng.standard_normal(theta.k) for w in omegas])
