import time

from structgp.ledger import execute_run
from structgp.models import ExperimentRun

from ._base import StructGPCommand


class Command(StructGPCommand):
    help = 'Process pending ExperimentRun entries (queued with experiment --queue) in creation order.'

    def add_arguments(self, parser):
        parser.add_argument('--once', action='store_true', help='Process pending runs once and exit')
        parser.add_argument('--poll', type=int, default=5, help='Poll interval in seconds when running continuously')

    def run(self, **options):
        once = options.get('once')
        poll = options.get('poll', 5)
        solver_base = self.solver_config()

        self.stdout.write(self.style.NOTICE('Starting run processor (experiment worker)'))

        while True:
            pending = ExperimentRun.objects.filter(status=ExperimentRun.STATUS_PENDING).order_by('created_at')
            if not pending.exists():
                if once:
                    self.stdout.write('No pending runs, exiting')
                    return
                time.sleep(poll)
                continue

            for run in pending:
                self.stdout.write(f'Processing run {run.id} ({run.name})...')
                # queued configs carry their own solver block; settings fill only what is missing
                try:
                    report = execute_run(run, solver_base=solver_base)
                except Exception as exc:
                    run.mark(ExperimentRun.STATUS_FAILED, progress=0, error_message=str(exc))
                    report = None
                if report is None:
                    self.stdout.write(self.style.ERROR(f'Run {run.id} failed: {run.error_message}'))
                else:
                    self.stdout.write(self.style.SUCCESS(
                        f'Run {run.id} finished: {run.report_path} ({run.failures} failed reps)'))

            if once:
                return
            time.sleep(poll)
