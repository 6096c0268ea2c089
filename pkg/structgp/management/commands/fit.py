from structgp.engine import learner
from structgp.formats import fit_result_to_dict, read_dataset_csv

from ._base import StructGPCommand, structgp_setting, usage_error


class Command(StructGPCommand):
    help = ('Fit StructGP to a dataset CSV along a warm-started lambda path and select the graph by AIC. '
            'Defaults follow the experiment setup: sigma 0.01 (oracle), eps 0.1, 50 lambdas.')

    def add_arguments(self, parser):
        parser.add_argument('--data', required=True, help='Dataset CSV (patient,task,time,value; 1-based ids)')
        parser.add_argument('--k', type=int, default=None, help='Number of tasks (default: largest task id)')
        parser.add_argument('--sigma', type=float, default=None, help='Observation noise std (default: STRUCTGP SIGMA)')
        parser.add_argument('--n-lambda', type=int, default=None, help='Grid size (default: STRUCTGP N_LAMBDA)')
        parser.add_argument('--eps', type=float, default=None,
                            help='Acyclicity tolerance for the augmented Lagrangian (default: STRUCTGP EPS)')
        parser.add_argument('--out', default=None, help='FitResult JSON path (default: stdout)')

    def run(self, **options):
        n_lambda = options.get('n_lambda')
        if n_lambda is None:
            n_lambda = int(structgp_setting('N_LAMBDA', 50))
        if n_lambda < 1:
            raise usage_error('--n-lambda must be positive')
        config = self.solver_config(sigma=options.get('sigma'), eps=options.get('eps'))
        dataset = read_dataset_csv(options['data'], k=options.get('k'))
        if dataset.k < 2:
            raise usage_error(f"{options['data']}: at least two tasks are needed to learn a graph")

        self.notice(f'Fitting {len(dataset)} observations, k={dataset.k}, r={dataset.r}, n_lambda={n_lambda}')
        try:
            result = learner.fit(dataset, n_lambda, config)
        except ValueError as exc:
            raise usage_error(str(exc)) from exc
        self.emit_json(fit_result_to_dict(result), options.get('out'))
        self.notice(f'Selected lambda={result.lam:.4g} with {result.graph.n_edges} edges')
