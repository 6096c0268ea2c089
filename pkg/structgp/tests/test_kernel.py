"""Tests for the closed-form StructGP covariance."""

import numpy as np
from django.test import SimpleTestCase, tag

from ..engine import kernel
from ..engine.exceptions import KernelError
from ..engine.model import Dataset, Theta, pack, unpack
from ..engine.simulator import sample_er_dag, sample_theta


def random_theta(rng, k, sigma=0.1):
	dag = sample_er_dag(k, min(2, k - 1), rng)
	return sample_theta(dag, rng, sigma=sigma)


class CrossCovTest(SimpleTestCase):
	def test_single_task_at_zero_lag(self):
		self.assertAlmostEqual(kernel.cross_cov(Theta.zeros(1), 0, 0, 0.0), np.sqrt(np.pi / 2))

	def test_independent_channels(self):
		theta = Theta.zeros(2)
		for tau in (0.0, 0.4, -2.0):
			self.assertEqual(kernel.cross_cov(theta, 0, 1, tau), 0.0)

	def test_single_edge_scales_the_child(self):
		c = -0.7
		theta = Theta(S=np.array([[0.0, 0.0], [c, 0.0]]), ell=np.zeros(2))
		base = kernel.cross_cov(Theta.zeros(1), 0, 0, 0.9)
		# child row of I - S is (-c, 1), parent row (1, 0)
		self.assertAlmostEqual(kernel.cross_cov(theta, 1, 0, 0.9), -c * base)

	def test_symmetry(self):
		theta = random_theta(np.random.default_rng(0), 4)
		self.assertAlmostEqual(kernel.cross_cov(theta, 1, 3, 0.6), kernel.cross_cov(theta, 3, 1, -0.6))

	def test_matches_quadrature(self):
		for i in range(20):
			rng = np.random.default_rng([11, i])
			k = int(rng.integers(2, 5))
			theta = random_theta(rng, k)
			u, v = (int(x) for x in rng.integers(0, k, size=2))
			tau = float(rng.uniform(-3, 3))
			closed = kernel.cross_cov(theta, u, v, tau)
			oracle = kernel.cross_cov_quadrature_oracle(theta, u, v, tau)
			self.assertLess(abs(closed - oracle), 1e-8)

	@tag('slow')
	def test_matches_quadrature_hundred_instances(self):
		for i in range(100):
			rng = np.random.default_rng([12, i])
			k = int(rng.integers(2, 7))
			theta = random_theta(rng, k)
			u, v = (int(x) for x in rng.integers(0, k, size=2))
			tau = float(rng.uniform(-5, 5))
			closed = kernel.cross_cov(theta, u, v, tau)
			self.assertLess(abs(closed - kernel.cross_cov_quadrature_oracle(theta, u, v, tau)), 1e-8)


class GramTest(SimpleTestCase):
	def test_one_observation(self):
		theta = Theta.zeros(1, sigma=0.1)
		dataset = Dataset(patient=[0], task=[0], time=[3.0], value=[0.0], k=1, r=1)
		blocks = kernel.gram(theta, dataset).blocks
		self.assertEqual(len(blocks), 1)
		np.testing.assert_allclose(blocks[0], [[np.sqrt(np.pi / 2) + 0.01]])

	def test_block_per_patient(self):
		theta = Theta.zeros(2)
		dataset = Dataset(patient=[0, 0, 1], task=[0, 1, 0], time=[0.0, 1.0, 2.0], value=[0.0, 0.0, 0.0], k=2, r=2)
		gram = kernel.gram(theta, dataset)
		self.assertEqual([b.shape for b in gram.blocks], [(2, 2), (1, 1)])
		dense = gram.dense()
		self.assertEqual(dense.shape, (3, 3))
		self.assertEqual(dense[0, 2], 0.0)

	def test_entries_match_quadrature(self):
		rng = np.random.default_rng(5)
		theta = random_theta(rng, 3)
		tasks = np.array([0, 1, 2, 2, 0])
		times = rng.uniform(0, 4, size=5)
		dataset = Dataset(patient=np.zeros(5, dtype=int), task=tasks, time=times, value=np.zeros(5), k=3, r=1)
		block = kernel.gram(theta, dataset, noise=False).blocks[0]
		for p in range(5):
			for q in range(5):
				oracle = kernel.cross_cov_quadrature_oracle(theta, tasks[p], tasks[q], times[p] - times[q])
				self.assertLess(abs(block[p, q] - oracle), 1e-8)

	def test_nonfinite_weight_names_parameter(self):
		S = np.zeros((2, 2))
		S[1, 0] = np.inf
		theta = Theta(S=S, ell=np.zeros(2))
		dataset = Dataset(patient=[0, 0], task=[0, 1], time=[0.0, 1.0], value=[0.0, 0.0], k=2, r=1)
		with self.assertRaisesMessage(KernelError, 'S[1, 0]'):
			kernel.gram(theta, dataset)


class GramGradTest(SimpleTestCase):
	def _dataset(self, rng, k):
		tasks = np.tile(np.arange(k), 2)
		n = tasks.size
		return Dataset(patient=np.repeat([0, 1], n), task=np.tile(tasks, 2), time=rng.uniform(0, 3, size=2 * n),
					   value=np.zeros(2 * n), k=k, r=2)

	def test_matches_finite_differences(self):
		rng = np.random.default_rng(9)
		k = 3
		theta = random_theta(rng, k)
		dataset = self._dataset(rng, k)
		x = pack(theta)
		grads = kernel.gram_grad(theta, dataset)
		step = 1e-5
		for i, grad in enumerate(grads):
			e = np.zeros_like(x)
			e[i] = step
			plus = kernel.gram(unpack(x + e, k, theta.sigma), dataset).dense()
			minus = kernel.gram(unpack(x - e, k, theta.sigma), dataset).dense()
			numeric = (plus - minus) / (2 * step)
			err = np.linalg.norm(grad.dense() - numeric) / max(np.linalg.norm(numeric), 1.0)
			self.assertLess(err, 1e-5, msg=f'parameter {i}')

	def test_ell_derivatives_symmetric(self):
		rng = np.random.default_rng(4)
		theta = random_theta(rng, 3)
		dataset = self._dataset(rng, 3)
		for grad in kernel.gram_grad(theta, dataset)[6:]:
			dense = grad.dense()
			np.testing.assert_allclose(dense, dense.T, atol=1e-12)

	def test_weight_derivative_is_local_at_zero(self):
		theta = Theta.zeros(3)
		dataset = Dataset(patient=[0, 0, 0], task=[0, 1, 2], time=[0.0, 0.5, 1.0], value=[0.0] * 3, k=3, r=1)
		# first packed entry is S[0, 1]: only pairs touching tasks 0 or 1 move
		dK = kernel.gram_grad(theta, dataset)[0].dense()
		self.assertEqual(dK[2, 2], 0.0)


class CholeskyTest(SimpleTestCase):
	def test_jitter_rescues_singular_block(self):
		K = np.ones((1, 2, 2))
		L = kernel.cholesky(K)
		np.testing.assert_allclose(L[0] @ L[0].T, K[0], atol=1e-6)

	def test_reports_jitter_per_block(self):
		K = np.stack([np.eye(2), np.ones((2, 2))])
		_, jitter = kernel.jittered_cholesky(K)
		np.testing.assert_array_equal(jitter, [0.0, kernel.JITTER_FACTOR])

	def test_no_jitter_needed(self):
		_, jitter = kernel.jittered_cholesky(np.eye(3))
		self.assertEqual(float(jitter), 0.0)

	def test_indefinite_block_raises(self):
		with self.assertRaises(KernelError):
			kernel.cholesky(np.array([[[1.0, 2.0], [2.0, 1.0]]]))


class CovarianceInvariantTest(SimpleTestCase):
	def _block(self, rng, k, n=8):
		tasks = rng.integers(0, k, size=n)
		times = rng.uniform(0, 5, size=n)
		return tasks, times

	def test_positive_semidefinite(self):
		for i in range(20):
			rng = np.random.default_rng([21, i])
			k = int(rng.integers(2, 6))
			theta = random_theta(rng, k)
			tasks, times = self._block(rng, k)
			K, _ = kernel.batch_covariance(theta, tasks[None, :], times[None, :])
			eigenvalues = np.linalg.eigvalsh(K[0])
			self.assertGreaterEqual(eigenvalues.min(), -1e-8 * max(1.0, eigenvalues.max()), msg=f'draw {i}')

	def test_stationary_under_time_shift(self):
		for i in range(10):
			rng = np.random.default_rng([22, i])
			k = int(rng.integers(2, 5))
			theta = random_theta(rng, k)
			tasks, times = self._block(rng, k)
			shift = float(rng.uniform(-10, 10))
			K, _ = kernel.batch_covariance(theta, tasks[None, :], times[None, :])
			shifted, _ = kernel.batch_covariance(theta, tasks[None, :], times[None, :] + shift)
			np.testing.assert_allclose(shifted, K, rtol=0, atol=1e-11)
