"""Figure-ready tidy CSVs from an experiment report.

exp1 and exp2 give mean SHD with bootstrap intervals along the swept axis
(patients, grid size); exp3 gives median precision and recall with
interquartile ranges per (k, md), next to the random-graph baseline.
"""
from pathlib import Path

from structgp.engine.metrics import summarize_report
from structgp.formats import FLOAT_FORMAT, read_report_csv

from ._base import StructGPCommand, usage_error

FIGURES = {
    'exp1': {'axis': ['r'], 'stats': ('mean', 'ci_lo', 'ci_hi'), 'metrics': ('shd',)},
    'exp2': {'axis': ['n_lambda'], 'stats': ('mean', 'ci_lo', 'ci_hi'), 'metrics': ('shd',)},
    'exp3': {'axis': ['k', 'md'], 'stats': ('median', 'q25', 'q75'), 'metrics': ('precision', 'recall')},
}


def figure_frame(report, figure: str, seed: int = 0):
    spec = FIGURES[figure]
    missing = [c for c in spec['axis'] + ['shd'] if c not in report.columns]
    if missing:
        raise ValueError(f"report lacks columns {', '.join(missing)}")
    summary = summarize_report(report, sweep_keys=spec['axis'], seed=seed)
    columns = {key: key for key in spec['axis'] + ['reps']}
    for prefix in ('', 'baseline_', 'direct_'):
        for metric in spec['metrics']:
            for stat in spec['stats']:
                source = f'{prefix}{stat}_{metric}'
                if source not in summary:
                    continue
                # single-metric figures drop the metric suffix on interval columns
                if len(spec['metrics']) == 1 and stat != spec['stats'][0]:
                    columns[source] = f'{prefix}{stat}'
                else:
                    columns[source] = source
    return summary[list(columns)].rename(columns=columns)


class Command(StructGPCommand):
    help = 'Summarize a report CSV into the tidy table behind one figure (exp1, exp2) or the recovery table (exp3).'

    def add_arguments(self, parser):
        parser.add_argument('--report', required=True, help='Report CSV written by experiment')
        parser.add_argument('--figure', required=True, choices=sorted(FIGURES))
        parser.add_argument('--seed', type=int, default=None, help='Bootstrap seed (default: STRUCTGP_SEED)')
        parser.add_argument('--out', default=None, help='Output CSV (default: stdout)')

    def run(self, **options):
        path = Path(options['report'])
        if not path.exists():
            raise usage_error(f'report {path} does not exist')
        try:
            report = read_report_csv(path)
            frame = figure_frame(report, options['figure'], seed=self.seed(options.get('seed')))
        except ValueError as exc:
            raise usage_error(str(exc)) from exc

        if options.get('out'):
            out = Path(options['out'])
            out.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(out, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
            self.notice(f'Wrote {out} ({len(frame)} rows)')
        else:
            self.stdout.write(frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n'), ending='')
