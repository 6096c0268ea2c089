import logging

from django.apps import AppConfig

logger = logging.getLogger(__name__)


class StructgpConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'structgp'
    verbose_name = 'StructGP'

    def ready(self):
        # Best-effort settings check (non-fatal)
        self._check_solver_settings()

    def _check_solver_settings(self):
        """Log warnings for STRUCTGP values the solver would reject."""
        from django.conf import settings

        from .engine.optimizer import SolverConfig

        values = getattr(settings, 'STRUCTGP', None)
        if values is None:
            logger.warning("settings.STRUCTGP is missing; commands fall back to built-in defaults")
            return
        try:
            SolverConfig.from_mapping(settings_to_solver_keys(values))
        except (TypeError, ValueError) as exc:
            logger.warning("STRUCTGP solver settings are invalid: %s", exc)

        if values.get('JOBS', 1) < 1:
            logger.warning("STRUCTGP JOBS=%s; experiments will run serially", values.get('JOBS'))


# settings key -> SolverConfig mapping key
SETTINGS_SOLVER_KEYS = {
    'SIGMA': 'sigma',
    'EPS': 'eps',
    'RHO_MAX': 'rho_max',
    'MAX_OUTER': 'max_outer',
    'LAMBDA_MIN_RATIO': 'lambda_min_ratio',
    'PGM_MAX_ITERS': 'pgm.max_iters',
    'PGM_GRAD_TOL': 'pgm.grad_tol',
    'PGM_SHRINK': 'pgm.shrink',
    'PGM_INITIAL_STEP': 'pgm.initial_step',
    'PGM_EXPAND': 'pgm.expand',
    'PGM_REL_TOL': 'pgm.rel_tol',
}


def settings_to_solver_keys(values: dict) -> dict:
    return {target: values[key] for key, target in SETTINGS_SOLVER_KEYS.items() if key in values}
