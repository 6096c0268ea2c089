"""Shared plumbing for the structgp management commands.

Exit codes: 0 on success, 1 on usage or input errors (argparse errors
included), 2 on runtime failures.
"""
import json
import sys

import numpy as np
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from structgp.apps import settings_to_solver_keys
from structgp.engine.exceptions import DatasetError, StructGPError
from structgp.engine.optimizer import SolverConfig

EXIT_USAGE = 1
EXIT_RUNTIME = 2


def usage_error(message: str) -> CommandError:
    return CommandError(message, returncode=EXIT_USAGE)


def runtime_error(message: str) -> CommandError:
    return CommandError(message, returncode=EXIT_RUNTIME)


def structgp_setting(key: str, default=None):
    return getattr(settings, 'STRUCTGP', {}).get(key, default)


def json_safe(value):
    """NaN and inf become null; numpy scalars become Python numbers."""
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


class StructGPCommand(BaseCommand):
    """Base command: argparse errors exit 1, engine errors exit 2."""

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)

        def error(message):
            if parser.called_from_command_line:
                parser.print_usage(sys.stderr)
                parser.exit(EXIT_USAGE, f"{parser.prog}: error: {message}\n")
            raise usage_error(f"Error: {message}")

        parser.error = error
        return parser

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except CommandError:
            raise
        except (DatasetError, FileNotFoundError) as exc:
            raise usage_error(str(exc)) from exc
        except (StructGPError, np.linalg.LinAlgError) as exc:
            raise runtime_error(f"{exc.__class__.__name__}: {exc}") from exc

    def run(self, **options):
        raise NotImplementedError('subclasses of StructGPCommand must provide a run() method')

    def solver_config(self, **overrides) -> SolverConfig:
        """Solver settings from ``settings.STRUCTGP`` with non-None ``overrides`` on top."""
        try:
            base = SolverConfig.from_mapping(settings_to_solver_keys(getattr(settings, 'STRUCTGP', {})))
            return SolverConfig.from_mapping(overrides, base=base)
        except (TypeError, ValueError) as exc:
            raise usage_error(f"invalid solver settings: {exc}") from exc

    def seed(self, value) -> int:
        return int(value) if value is not None else int(structgp_setting('SEED', 0))

    def read_json_input(self, path, what: str) -> dict:
        from structgp.formats import read_json

        try:
            return read_json(path)
        except ValueError as exc:
            raise usage_error(f"{what}: {exc}") from exc

    def emit_json(self, data: dict, out=None) -> None:
        from structgp.formats import write_json

        data = json_safe(data)
        if out:
            path = write_json(data, out)
            if self.verbosity_level >= 1:
                self.stderr.write(self.style.SUCCESS(f'Wrote {path}'))
        else:
            self.stdout.write(json.dumps(data, indent=2))

    @property
    def verbosity_level(self) -> int:
        return getattr(self, '_verbosity', 1)

    def execute(self, *args, **options):
        self._verbosity = int(options.get('verbosity', 1))
        return super().execute(*args, **options)

    def notice(self, message: str) -> None:
        if self.verbosity_level >= 1:
            self.stderr.write(self.style.NOTICE(message))
