from pathlib import Path

from structgp.engine.simulator import PRESETS, ExperimentConfig, run_experiment
from structgp.formats import write_report_csv
from structgp.ledger import execute_run, queue_run

from ._base import StructGPCommand, runtime_error, structgp_setting, usage_error


class Command(StructGPCommand):
    help = ('Run a simulation experiment (preset TOY, EXP1, EXP2, EXP3 or a JSON config) and write the '
            'per-rep report CSV. --jobs changes wall time only, never the report.')

    def add_arguments(self, parser):
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument('--config', help='Experiment config JSON (keys of ExperimentConfig, optional "solver")')
        source.add_argument('--preset', choices=sorted(PRESETS), type=str.upper, help='Built-in experiment')
        parser.add_argument('--reps', type=int, default=None, help='Replications per sweep point')
        parser.add_argument('--seed', type=int, default=None, help='Experiment seed (default: config, then STRUCTGP_SEED)')
        parser.add_argument('--jobs', type=int, default=None, help='Worker processes (default: STRUCTGP JOBS)')
        parser.add_argument('--out', default=None, help='Report CSV (default: <OUTPUT_ROOT>/<name>/report.csv)')
        parser.add_argument('--summary', default=None, help='Also write the per-sweep-point summary CSV here')
        ledger = parser.add_mutually_exclusive_group()
        ledger.add_argument('--record', action='store_true', help='Track this run in the ExperimentRun ledger')
        ledger.add_argument('--queue', action='store_true', help='Store as a pending run for process_runs and exit')

    def build_config(self, options) -> ExperimentConfig:
        if options.get('config'):
            values = self.read_json_input(options['config'], '--config')
            if not isinstance(values, dict):
                raise usage_error('--config must hold a JSON object')
        else:
            values = {'name': options['preset']}
        if options.get('reps') is not None:
            values['reps'] = options['reps']
        if options.get('seed') is not None or 'seed' not in values:
            values['seed'] = self.seed(options.get('seed'))
        try:
            return ExperimentConfig.from_mapping(values, solver_base=self.solver_config())
        except (TypeError, ValueError) as exc:
            raise usage_error(f'invalid experiment config: {exc}') from exc

    def run(self, **options):
        config = self.build_config(options)
        jobs = options.get('jobs')
        if jobs is None:
            jobs = int(structgp_setting('JOBS', 1))
        if jobs < 1:
            raise usage_error('--jobs must be positive')
        out = options.get('out')
        if not config.sweep():
            raise usage_error('every sweep point was skipped (mean degree exceeds k - 1)')

        if options.get('queue') or options.get('record'):
            run = queue_run(config, jobs=jobs, report_path=out)
            if options.get('queue'):
                self.stdout.write(self.style.SUCCESS(f'Queued run {run.id} ({config.name})'))
                return
            self.notice(f'Recording run {run.id} ({config.name})')
            report = execute_run(run, solver_base=config.solver)
            if report is None:
                raise runtime_error(f'run {run.id} failed: {run.error_message}')
            out = run.report_path
        else:
            out = out or Path(structgp_setting('OUTPUT_ROOT', 'runs')) / config.name / 'report.csv'
            self.notice(f'Running {config.name}: {len(config.sweep())} sweep points x {config.reps} reps, {jobs} jobs')
            report = run_experiment(config, jobs=jobs, progress=self._progress)
            write_report_csv(report.rows, out)

        if options.get('summary'):
            report.summary().to_csv(options['summary'], index=False, float_format='%.17g', lineterminator='\n')
        style = self.style.WARNING if report.failures else self.style.SUCCESS
        self.stdout.write(style(f'Wrote {out} ({len(report.rows)} rows, {report.failures} failed reps)'))

    def _progress(self, done, total):
        if self.verbosity_level >= 2:
            self.stderr.write(f'  {done}/{total} reps')
