"""Tests for graph recovery scores and bootstrap summaries."""

import itertools

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from ..engine import metrics
from ..engine.model import Dag, Theta
from ..engine.simulator import sample_er_dag


def brute_force_shd(pred, truth):
	"""Per unordered pair: 0 if the pair states agree, else one edit."""
	edits = 0
	for u, v in itertools.combinations(range(pred.k), 2):
		if (pred.adj[v, u], pred.adj[u, v]) != (truth.adj[v, u], truth.adj[u, v]):
			edits += 1
	return edits


class ShdTest(SimpleTestCase):
	def test_identical(self):
		dag = Dag.from_edges(3, [(0, 1), (1, 2)])
		self.assertEqual(metrics.shd(dag, dag).shd, 0)

	def test_reversed_edge(self):
		counts = metrics.shd(Dag.from_edges(2, [(1, 0)]), Dag.from_edges(2, [(0, 1)]))
		self.assertEqual((counts.shd, counts.reversed, counts.extra, counts.missing), (1, 1, 0, 0))

	def test_extra_and_missing(self):
		counts = metrics.shd(Dag.from_edges(3, [(0, 2)]), Dag.from_edges(3, [(0, 1)]))
		self.assertEqual((counts.shd, counts.extra, counts.missing), (2, 1, 1))

	def test_against_brute_force(self):
		rng = np.random.default_rng(0)
		for _ in range(100):
			k = int(rng.integers(2, 6))
			pred, truth = sample_er_dag(k, 1, rng), sample_er_dag(k, 1, rng)
			self.assertEqual(metrics.shd(pred, truth).shd, brute_force_shd(pred, truth))

	def test_size_mismatch(self):
		with self.assertRaises(ValueError):
			metrics.shd(Dag.empty(2), Dag.empty(3))


class PrecisionRecallTest(SimpleTestCase):
	def test_perfect(self):
		dag = Dag.from_edges(3, [(0, 1), (0, 2)])
		pr = metrics.precision_recall(dag, dag)
		self.assertEqual((pr.precision, pr.recall), (1.0, 1.0))

	def test_empty_prediction(self):
		pr = metrics.precision_recall(Dag.empty(3), Dag.from_edges(3, [(0, 1)]))
		self.assertEqual((pr.precision, pr.recall), (1.0, 0.0))
		self.assertTrue(pr.precision_undefined)
		self.assertFalse(pr.recall_undefined)

	def test_reversed_counts_as_false_positive(self):
		pr = metrics.precision_recall(Dag.from_edges(2, [(1, 0)]), Dag.from_edges(2, [(0, 1)]))
		self.assertEqual((pr.precision, pr.recall), (0.0, 0.0))


class RmseTest(SimpleTestCase):
	def test_identical(self):
		theta = Theta(S=np.array([[0.0, 0.3], [0.0, 0.0]]), ell=np.zeros(2))
		self.assertEqual(metrics.rmse_s(theta, theta), 0.0)

	def test_constant_offset(self):
		truth = Theta.zeros(3)
		S = np.full((3, 3), 0.1)
		np.fill_diagonal(S, 0.0)
		self.assertAlmostEqual(metrics.rmse_s(Theta(S=S, ell=np.zeros(3)), truth), 0.1)

	def test_score_without_parameters(self):
		dag = Dag.from_edges(2, [(0, 1)])
		score = metrics.score(dag, dag)
		self.assertEqual(score.shd, 0)
		self.assertEqual(score.tp, 1)
		self.assertTrue(np.isnan(score.rmse_s))


class BootstrapTest(SimpleTestCase):
	def test_constant(self):
		self.assertEqual(metrics.bootstrap_ci([2.0] * 10), (2.0, 2.0))

	def test_contains_point_estimate(self):
		values = np.random.default_rng(0).normal(size=40)
		lo, hi = metrics.bootstrap_ci(values, rng=1)
		self.assertLessEqual(lo, values.mean())
		self.assertGreaterEqual(hi, values.mean())

	def test_narrows_with_more_data(self):
		values = np.random.default_rng(3).normal(size=400)
		widths = []
		for n in (10, 100, 400):
			lo, hi = metrics.bootstrap_ci(values[:n], rng=0)
			widths.append(hi - lo)
		self.assertGreater(widths[0], widths[1])
		self.assertGreater(widths[1], widths[2])

	def test_reproducible(self):
		values = np.arange(20.0)
		self.assertEqual(metrics.bootstrap_ci(values, rng=4), metrics.bootstrap_ci(values, rng=4))

	def test_nan_dropped(self):
		summary = metrics.summarize([1.0, np.nan, 3.0], rng=0)
		self.assertEqual(summary.n, 2)
		self.assertEqual(summary.mean, 2.0)
		self.assertEqual(summary.median, 2.0)


class SummarizeReportTest(SimpleTestCase):
	def test_one_row_per_sweep_point(self):
		frame = pd.DataFrame({
			'r': [5, 5, 10, 10],
			'shd': [2, 4, 0, 2],
			'precision': [1.0, 0.5, 1.0, 1.0],
			'precision_undefined': [True, False, False, False],
			'baseline_shd': [5, 5, 6, 4],
			'error': ['', '', '', ''],
		})
		summary = metrics.summarize_report(frame, sweep_keys=['r'])
		self.assertEqual(list(summary['r']), [5, 10])
		self.assertEqual(list(summary['mean_shd']), [3.0, 1.0])
		self.assertEqual(list(summary['baseline_mean_shd']), [5.0, 5.0])
		# flagged precision at r=5 is left out
		self.assertEqual(summary['mean_precision'].iloc[0], 0.5)

	def test_failed_reps_excluded(self):
		frame = pd.DataFrame({'r': [5, 5], 'shd': [2.0, np.nan], 'error': ['', 'boom']})
		summary = metrics.summarize_report(frame, sweep_keys=['r'])
		self.assertEqual(summary['reps'].iloc[0], 1)
