"""Tests for ground-truth sampling and the experiment runner."""

import numpy as np
from django.test import SimpleTestCase, tag

from ..engine import kernel, simulator
from ..engine.model import Dag, Theta
from ..engine.optimizer import PgmConfig, SolverConfig

QUICK = SolverConfig(max_outer=10, pgm=PgmConfig(max_iters=40))


class SampleErDagTest(SimpleTestCase):
	def test_zero_degree_is_empty(self):
		rng = np.random.default_rng(0)
		for _ in range(20):
			self.assertEqual(simulator.sample_er_dag(6, 0, rng).n_edges, 0)

	def test_two_tasks_full_degree(self):
		rng = np.random.default_rng(0)
		for _ in range(20):
			self.assertEqual(simulator.sample_er_dag(2, 1, rng).n_edges, 1)

	def test_mean_edge_count(self):
		rng = np.random.default_rng(1)
		counts = np.array([simulator.sample_er_dag(10, 2, rng).n_edges for _ in range(2000)])
		# binomial(45, 2/9): mean 10, std of the sample mean ~ 0.063
		self.assertLess(abs(counts.mean() - 10.0), 3 * np.sqrt(45 * (2 / 9) * (7 / 9) / 2000))

	def test_out_of_range_degree(self):
		with self.assertRaises(ValueError):
			simulator.sample_er_dag(3, 2.5, np.random.default_rng(0))


class SampleThetaTest(SimpleTestCase):
	def test_empty_dag(self):
		theta = simulator.sample_theta(Dag.empty(4), np.random.default_rng(0))
		np.testing.assert_array_equal(theta.S, np.zeros((4, 4)))

	def test_weight_ranges_and_signs(self):
		k = 40
		adj = np.tril(np.ones((k, k), dtype=bool), k=-1)
		rng = np.random.default_rng(2)
		weights = np.concatenate([simulator.sample_theta(Dag(adj), rng).S[adj] for _ in range(10)])
		self.assertTrue(np.all(np.abs(weights) >= 0.5))
		self.assertTrue(np.all(np.abs(weights) <= 2.0))
		positive = np.mean(weights > 0)
		self.assertLess(abs(positive - 0.5), 3 * np.sqrt(0.25 / weights.size))

	def test_lengthscales(self):
		theta = simulator.sample_theta(Dag.empty(50), np.random.default_rng(3))
		self.assertTrue(np.all(np.abs(theta.ell) <= 0.5))
		self.assertEqual(theta.sigma, 0.01)


class SampleDatasetTest(SimpleTestCase):
	def test_toy_size(self):
		dataset = simulator.sample_dataset(simulator.toy_theta(), 50, 10, np.random.default_rng(0))
		self.assertEqual(len(dataset), 2000)
		self.assertEqual(dataset.r, 50)
		self.assertTrue(np.all((dataset.time >= 0) & (dataset.time <= 10)))

	def test_deterministic(self):
		a = simulator.sample_dataset(simulator.toy_theta(), 3, 2, np.random.default_rng(7))
		b = simulator.sample_dataset(simulator.toy_theta(), 3, 2, np.random.default_rng(7))
		np.testing.assert_array_equal(a.value, b.value)

	def test_single_value_variance(self):
		theta = Theta.zeros(1, sigma=0.01)
		rng = np.random.default_rng(4)
		values = np.array([simulator.sample_dataset(theta, 1, 1, rng).value[0] for _ in range(10000)])
		expected = kernel.cross_cov(theta, 0, 0, 0.0) + 0.01 ** 2
		self.assertLess(abs(values.var() / expected - 1.0), 0.05)

	def test_patients_independent(self):
		theta = Theta.zeros(1, sigma=0.01)
		rng = np.random.default_rng(5)
		pairs = np.array([simulator.sample_dataset(theta, 2, 1, rng).value for _ in range(10000)])
		self.assertLess(abs(np.corrcoef(pairs.T)[0, 1]), 0.05)


class ExperimentConfigTest(SimpleTestCase):
	def test_presets(self):
		self.assertEqual(simulator.PRESETS['EXP1'].r, (1, 2, 5, 10, 20, 35, 50, 100))
		self.assertTrue(simulator.PRESETS['EXP2'].direct_fit)
		self.assertEqual(simulator.PRESETS['TOY'].n_lambda, (256,))

	def test_sweep_skips_impossible_degree(self):
		config = simulator.ExperimentConfig(k=(2, 4), md=(1, 3))
		self.assertEqual([(p['k'], p['md']) for p in config.sweep()], [(2, 1), (4, 1), (4, 3)])

	def test_scalar_axes(self):
		config = simulator.ExperimentConfig(k=5, r=10)
		self.assertEqual(config.k, (5,))
		self.assertEqual(config.r, (10,))

	def test_from_mapping_with_preset(self):
		config = simulator.ExperimentConfig.from_mapping({'name': 'exp3', 'reps': 2, 'k': [4]})
		self.assertEqual(config.name, 'EXP3')
		self.assertEqual(config.reps, 2)
		self.assertEqual(config.md, (1, 2, 3))

	def test_round_trip(self):
		config = simulator.ExperimentConfig(k=(3, 4), reps=2, solver=QUICK)
		self.assertEqual(simulator.ExperimentConfig.from_mapping(config.to_mapping()), config)

	def test_unknown_key(self):
		with self.assertRaises(ValueError):
			simulator.ExperimentConfig.from_mapping({'patients': 5})


class RunExperimentTest(SimpleTestCase):
	def _config(self, **changes):
		values = dict(name='tiny', k=(3,), md=(1,), n_lambda=(3,), r=(2, 3), n_per_task=3, reps=2, seed=5, solver=QUICK)
		values.update(changes)
		return simulator.ExperimentConfig(**values)

	def test_rows_per_sweep_point_and_rep(self):
		report = simulator.run_experiment(self._config())
		self.assertEqual(len(report.rows), 4)
		self.assertEqual([(row['r'], row['rep']) for row in report.rows], [(2, 0), (2, 1), (3, 0), (3, 1)])
		for row in report.rows:
			self.assertEqual(row['name'], 'tiny')
			self.assertIn('baseline_shd', row)

	def test_deterministic(self):
		first = simulator.run_experiment(self._config(reps=1))
		second = simulator.run_experiment(self._config(reps=1))
		self.assertEqual(first.frame().to_csv(), second.frame().to_csv())

	def test_common_truth_across_sweep_points(self):
		report = simulator.run_experiment(self._config(reps=1))
		self.assertEqual(report.rows[0]['n_edges_true'], report.rows[1]['n_edges_true'])

	def test_direct_fit_columns(self):
		report = simulator.run_experiment(self._config(r=(2,), reps=1, direct_fit=True))
		self.assertIn('direct_shd', report.rows[0])

	def test_progress_callback(self):
		calls = []
		simulator.run_experiment(self._config(r=(2,)), progress=lambda done, total: calls.append((done, total)))
		self.assertEqual(calls, [(1, 2), (2, 2)])

	@tag('slow')
	def test_jobs_do_not_change_rows(self):
		serial = simulator.run_experiment(self._config(), jobs=1)
		parallel = simulator.run_experiment(self._config(), jobs=2)
		self.assertEqual(serial.frame().to_csv(), parallel.frame().to_csv())
