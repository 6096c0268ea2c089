"""Tests for the ExperimentRun ledger and the process_runs worker."""

import json
import tempfile
from io import StringIO
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.test import TestCase, override_settings

from ..engine.simulator import ExperimentConfig
from ..ledger import execute_run, queue_run
from ..models import ExperimentRun

QUICK = {**settings.STRUCTGP, 'MAX_OUTER': 10, 'PGM_MAX_ITERS': 40}


class LedgerTestCase(TestCase):
	def setUp(self):
		self.tmp = tempfile.TemporaryDirectory()
		self.dir = Path(self.tmp.name)
		self.override = override_settings(STRUCTGP={**QUICK, 'OUTPUT_ROOT': self.dir})
		self.override.enable()

	def tearDown(self):
		self.override.disable()
		self.tmp.cleanup()

	def tiny_config(self, **changes):
		values = dict(name='tiny', k=(2,), md=(1,), n_lambda=(2,), r=(2,), n_per_task=3, reps=2, seed=1)
		values.update(changes)
		return ExperimentConfig(**values)


class QueueRunTest(LedgerTestCase):
	def test_pending_with_default_report_path(self):
		run = queue_run(self.tiny_config())
		run.refresh_from_db()
		self.assertEqual(run.status, ExperimentRun.STATUS_PENDING)
		self.assertEqual(run.config['name'], 'tiny')
		self.assertEqual(Path(run.report_path), self.dir / str(run.id) / 'report.csv')

	def test_execute_marks_done(self):
		run = queue_run(self.tiny_config())
		report = execute_run(run)
		run.refresh_from_db()
		self.assertEqual(run.status, ExperimentRun.STATUS_DONE)
		self.assertEqual(run.progress, 100)
		self.assertEqual(run.failures, report.failures)
		self.assertEqual(len(Path(run.report_path).read_text().splitlines()), 3)

	def test_invalid_config_marks_failed(self):
		run = ExperimentRun.objects.create(name='broken', config={'patients': 3})
		self.assertIsNone(execute_run(run))
		run.refresh_from_db()
		self.assertEqual(run.status, ExperimentRun.STATUS_FAILED)
		self.assertIn('patients', run.error_message)


class ExperimentLedgerCommandTest(LedgerTestCase):
	def _config_file(self):
		path = self.dir / 'tiny.json'
		path.write_text(json.dumps(self.tiny_config().to_mapping()))
		return str(path)

	def test_queue_does_not_run(self):
		out = StringIO()
		call_command('experiment', config=self._config_file(), queue=True, stdout=out, stderr=StringIO())
		run = ExperimentRun.objects.get()
		self.assertEqual(run.status, ExperimentRun.STATUS_PENDING)
		self.assertIn(str(run.id), out.getvalue())
		self.assertFalse(Path(run.report_path).exists())

	def test_record_runs_and_tracks(self):
		report = self.dir / 'recorded.csv'
		call_command('experiment', config=self._config_file(), record=True, out=str(report),
					 stdout=StringIO(), stderr=StringIO())
		run = ExperimentRun.objects.get()
		self.assertEqual(run.status, ExperimentRun.STATUS_DONE)
		self.assertEqual(Path(run.report_path), report)
		self.assertTrue(report.exists())


class ProcessRunsCommandTest(LedgerTestCase):
	def test_once_without_pending(self):
		out = StringIO()
		call_command('process_runs', once=True, stdout=out)
		self.assertIn('No pending runs', out.getvalue())

	def test_processes_in_creation_order(self):
		first = queue_run(self.tiny_config(name='first'))
		second = queue_run(self.tiny_config(name='second', reps=1))
		broken = ExperimentRun.objects.create(name='broken', config={'reps': 0})
		out = StringIO()
		call_command('process_runs', once=True, stdout=out)
		for run in (first, second, broken):
			run.refresh_from_db()
		self.assertEqual(first.status, ExperimentRun.STATUS_DONE)
		self.assertEqual(second.status, ExperimentRun.STATUS_DONE)
		self.assertEqual(broken.status, ExperimentRun.STATUS_FAILED)
		text = out.getvalue()
		self.assertLess(text.index(str(first.id)), text.index(str(second.id)))
		self.assertTrue(Path(second.report_path).exists())
