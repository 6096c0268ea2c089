"""
Django settings for the structgp_site project.

The project hosts a single app, ``structgp``, whose management commands are
the command-line surface (simulate, fit, score, experiment, verify, plot_data,
process_runs). There is no web front end, so only the pieces Django needs for
commands, the run ledger and the test runner are configured here.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-structgp-local-only')


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    # Local apps
    'structgp',
]


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases
# Only the experiment run ledger lives here.

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.getenv('STRUCTGP_DB', str(BASE_DIR / 'db.sqlite3')),
    }
}


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

# Default primary key field type
# https://docs.djangoproject.com/en/4.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging
# https://docs.djangoproject.com/en/4.2/topics/logging/

LOG_LEVEL = os.getenv('STRUCTGP_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'structgp': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}


# StructGP defaults. Every key can be overridden from the environment and most
# of them again per command invocation (see ``structgp.engine.optimizer.SolverConfig``).

STRUCTGP = {
    # observation noise, given as oracle and never optimized
    'SIGMA': float(os.getenv('STRUCTGP_SIGMA', '0.01')),
    # augmented Lagrangian: loose constraint tolerance, penalty ceiling
    'EPS': float(os.getenv('STRUCTGP_EPS', '0.1')),
    'RHO_MAX': float(os.getenv('STRUCTGP_RHO_MAX', '1e8')),
    'MAX_OUTER': int(os.getenv('STRUCTGP_MAX_OUTER', '100')),
    # proximal gradient inner solver
    'PGM_MAX_ITERS': int(os.getenv('STRUCTGP_PGM_MAX_ITERS', '500')),
    'PGM_GRAD_TOL': float(os.getenv('STRUCTGP_PGM_GRAD_TOL', '1e-5')),
    'PGM_SHRINK': float(os.getenv('STRUCTGP_PGM_SHRINK', '0.5')),
    'PGM_INITIAL_STEP': float(os.getenv('STRUCTGP_PGM_INITIAL_STEP', '1.0')),
    'PGM_EXPAND': float(os.getenv('STRUCTGP_PGM_EXPAND', '1.25')),
    'PGM_REL_TOL': float(os.getenv('STRUCTGP_PGM_REL_TOL', '1e-10')),
    # regularization path
    'N_LAMBDA': int(os.getenv('STRUCTGP_N_LAMBDA', '50')),
    'LAMBDA_MIN_RATIO': float(os.getenv('STRUCTGP_LAMBDA_MIN_RATIO', '1e-3')),
    # experiments
    'SEED': int(os.getenv('STRUCTGP_SEED', '0')),
    'JOBS': int(os.getenv('STRUCTGP_JOBS', '1')),
    'OUTPUT_ROOT': Path(os.getenv('STRUCTGP_OUTPUT_ROOT', str(BASE_DIR / 'runs'))),
}
