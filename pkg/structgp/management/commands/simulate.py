from pathlib import Path

import numpy as np

from structgp.engine import simulator
from structgp.engine.model import Dag
from structgp.formats import truth_to_dict, write_dataset_csv

from ._base import StructGPCommand, structgp_setting, usage_error


class Command(StructGPCommand):
    help = ('Sample an Erdos-Renyi DAG, its StructGP parameters and a multi-patient dataset. '
            'Writes dataset.csv and truth.json into --out-dir.')

    def add_arguments(self, parser):
        parser.add_argument('--k', type=int, default=4, help='Number of tasks (TOY: 4)')
        parser.add_argument('--md', type=float, default=2.0, help='Mean degree of the ER graph (TOY: 2)')
        parser.add_argument('--patients', type=int, default=50, help='Number of patients r (TOY: 50)')
        parser.add_argument('--obs-per-task', type=int, default=10,
                            help='Observations per task and patient (10 in every experiment)')
        parser.add_argument('--seed', type=int, default=None, help='Random seed (default: STRUCTGP_SEED)')
        parser.add_argument('--toy', action='store_true',
                            help='Use the fixed four-task TOY weights instead of sampling a graph')
        parser.add_argument('--out-dir', required=True, help='Directory for dataset.csv and truth.json')

    def run(self, **options):
        k, md = options['k'], options['md']
        patients, per_task = options['patients'], options['obs_per_task']
        seed = self.seed(options.get('seed'))
        sigma = float(structgp_setting('SIGMA', simulator.SIGMA))
        if patients < 1 or per_task < 1:
            raise usage_error('--patients and --obs-per-task must be positive')
        if not options.get('toy'):
            if k < 1:
                raise usage_error('--k must be positive')
            if not 0 <= md <= max(k - 1, 0):
                raise usage_error(f'--md must lie in [0, k - 1] = [0, {max(k - 1, 0)}]')

        rng = np.random.default_rng(seed)
        if options.get('toy'):
            theta = simulator.toy_theta(sigma=sigma)
            dag = Dag.from_weights(theta.S)
        else:
            dag = simulator.sample_er_dag(k, md, rng)
            theta = simulator.sample_theta(dag, rng, sigma=sigma)
        dataset = simulator.sample_dataset(theta, patients, per_task, rng)

        out_dir = Path(options['out_dir'])
        data_path = write_dataset_csv(dataset, out_dir / 'dataset.csv')
        extra = {'md': md, 'patients': patients, 'obs_per_task': per_task, 'seed': seed, 'toy': bool(options.get('toy'))}
        self.emit_json(truth_to_dict(theta, dag, extra), out_dir / 'truth.json')
        self.notice(f'Simulated {len(dataset)} observations ({dag.n_edges} true edges) into {data_path}')
