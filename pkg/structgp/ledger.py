"""Executing recorded experiment runs.

Shared by ``experiment --record`` and the ``process_runs`` worker. The
engine knows nothing about the database; progress reaches the row through
the callback passed to ``run_experiment``.
"""
import logging
from pathlib import Path

from django.conf import settings

from structgp.engine.exceptions import StructGPError
from structgp.engine.simulator import ExperimentConfig, run_experiment
from structgp.formats import write_report_csv
from structgp.models import ExperimentRun

logger = logging.getLogger(__name__)


def default_report_path(run: ExperimentRun) -> Path:
    root = Path(settings.STRUCTGP.get('OUTPUT_ROOT', Path(settings.BASE_DIR) / 'runs'))
    return root / str(run.id) / 'report.csv'


def queue_run(config: ExperimentConfig, jobs: int = 1, report_path=None) -> ExperimentRun:
    run = ExperimentRun.objects.create(name=config.name, config=config.to_mapping(), jobs=max(int(jobs), 1))
    run.report_path = str(report_path or default_report_path(run))
    run.save(update_fields=['report_path', 'updated_at'])
    return run


def execute_run(run: ExperimentRun, solver_base=None):
    """Run ``run`` to completion, keeping status and progress current. Returns the report or None."""
    run.mark(ExperimentRun.STATUS_PROCESSING, progress=0, error_message='')
    try:
        config = ExperimentConfig.from_mapping(run.config, solver_base=solver_base)
    except (TypeError, ValueError) as exc:
        run.mark(ExperimentRun.STATUS_FAILED, error_message=f'invalid config: {exc}')
        return None

    def progress(done, total):
        percent = int(100 * done / total)
        if percent != run.progress:
            run.progress = percent
            run.save(update_fields=['progress', 'updated_at'])

    try:
        report = run_experiment(config, jobs=run.jobs, progress=progress)
        path = write_report_csv(report.rows, run.report_path or default_report_path(run))
    except (StructGPError, OSError, ValueError) as exc:
        logger.warning("run %s failed: %s", run.id, exc)
        run.mark(ExperimentRun.STATUS_FAILED, progress=0, error_message=str(exc))
        return None
    run.mark(ExperimentRun.STATUS_DONE, progress=100, report_path=str(path), failures=report.failures)
    return report
