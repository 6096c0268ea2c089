from structgp.engine.verification import run_checks

from ._base import StructGPCommand, runtime_error, usage_error


class Command(StructGPCommand):
    help = ('Run the randomized oracle checks: kernel vs quadrature, analytic vs finite-difference gradients, '
            'h(S) vs cycle detection, threshold minimality, ordered conditional independences, Markov factorization.')

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=None, help='Random seed (default: STRUCTGP_SEED)')
        parser.add_argument('--k', type=int, default=4, help='Task count of the random instances (capped per check)')
        parser.add_argument('--scale', type=float, default=1.0, help='Fraction of the default instance counts to run')
        parser.add_argument('--out', default=None, help='Also write the summary as JSON')

    def run(self, **options):
        seed = self.seed(options.get('seed'))
        try:
            results = run_checks(seed=seed, k=options['k'], scale=options.get('scale', 1.0))
        except ValueError as exc:
            raise usage_error(str(exc)) from exc

        for result in results:
            style = self.style.SUCCESS if result.passed else self.style.ERROR
            label = 'PASS' if result.passed else 'FAIL'
            self.stdout.write(style(f'{label} {result.name}: worst {result.worst:.3g} '
                                    f'(tolerance {result.tolerance:g}, {result.instances} instances)'))
        if options.get('out'):
            self.emit_json({'seed': seed, 'k': options['k'], 'checks': [r.as_row() for r in results]}, options['out'])
        failed = [r.name for r in results if not r.passed]
        if failed:
            raise runtime_error(f"verification failed: {', '.join(failed)}")
