"""
Shared flags and error mapping for the forecasting management commands.
"""
import logging
import sys
from functools import partial
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from ..config import RunConfig
from ..exceptions import ConfigurationError, ForecastingError

logger = logging.getLogger(__name__)

TRUE_VALUES = {'1', 'true', 'yes', 'on'}
FALSE_VALUES = {'0', 'false', 'no', 'off'}


def boolean(text):
    value = str(text).strip().lower()
    if value in TRUE_VALUES:
        return True
    if value in FALSE_VALUES:
        return False
    raise ValueError(f'not a boolean: {text!r}')


def variant_list(text):
    return [token.strip() for token in text.split(',') if token.strip()]


def usage_error(parser, message):
    """Report a bad flag with the configuration exit code instead of argparse's 2."""
    if parser.called_from_command_line:
        parser.print_usage(sys.stderr)
        parser.exit(ConfigurationError.exit_code, f'{parser.prog}: error: {message}\n')
    raise CommandError(f'Error: {message}', returncode=ConfigurationError.exit_code)


class ForecastingCommand(BaseCommand):
    """
    Base command: reads ``--config``, applies flag overrides and turns any
    ``ForecastingError`` into a one-line ``CommandError`` carrying the
    error's exit code.
    """
    uses_checkpoint = False

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.error = partial(usage_error, parser)
        return parser

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Run configuration JSON file (defaults apply when omitted)')
        parser.add_argument('--out', help='Output directory; overrides output_dir')
        parser.add_argument('--seed', type=int, help='Random seed; overrides seed')
        parser.add_argument('--deterministic', type=boolean, help='true/false; overrides deterministic')
        if self.uses_checkpoint:
            parser.add_argument('--checkpoint', required=True, help='Checkpoint (.npz) to load')

    def build_config(self, options):
        config = RunConfig.load(options['config']) if options.get('config') else RunConfig.from_mapping({})
        return config.with_overrides(
            seed=options.get('seed'),
            deterministic=options.get('deterministic'),
            variants=options.get('variants'),
        )

    def output_dir(self, config, options):
        if options.get('out'):
            return Path(options['out'])
        path = Path(config.output_dir)
        if path.is_absolute():
            return path
        return Path(settings.FCGAGA['OUTPUT_ROOT']) / path

    def handle(self, *args, **options):
        try:
            config = self.build_config(options)
            self.run(config, self.output_dir(config, options), options)
        except ForecastingError as exc:
            message = (str(exc).splitlines() or [type(exc).__name__])[0]
            logger.error('%s failed: %s', type(self).__module__.rsplit('.', 1)[-1], message)
            raise CommandError(message, returncode=exc.exit_code) from exc

    def run(self, config, output_dir, options):
        raise NotImplementedError('subclasses of ForecastingCommand must provide a run() method')
