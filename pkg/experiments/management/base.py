"""
Shared plumbing for the experiment commands: the common flags, config
assembly (file values first, then any flag that was given) and the mapping
of failures to exit codes. Validation, usage and I/O errors exit 1; a
broken internal guarantee exits 2.
"""
import sys
from functools import partial

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from density.distributions import read_document

from ..config import ExperimentConfig, format_validation_error
from ..exceptions import ReportIOError
from ..runner import run_experiment, save_report

VALIDATION_ERROR = 1
INTERNAL_ERROR = 2

# flags that override the config value of the same name
OVERRIDES = ('seed', 'n', 'c', 'density', 'trials', 'out', 'format', 'workers', 'surface', 'grid', 'window')


def _usage_error(parser, message):
    if not parser.called_from_command_line:
        raise CommandError(f'Error: {message}', returncode=VALIDATION_ERROR)
    parser.print_usage(sys.stderr)
    parser.exit(VALIDATION_ERROR, f'{parser.prog}: error: {message}\n')


class DiskCommand(BaseCommand):
    """Base for every command of the project: usage errors exit 1, not 2."""

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.error = partial(_usage_error, parser)
        return parser

    def add_common_arguments(self, parser):
        parser.add_argument('--config', help='JSON or YAML experiment config; flags override its values')
        parser.add_argument('--seed', type=int, help='Master seed (unsigned 64-bit), defaults to DISKTOUR_SEED')
        parser.add_argument('--n', help='Batch size or comma list of sizes, e.g. 1e4,1e5')
        parser.add_argument('--c', type=float, help='Seek slope c > 0')
        parser.add_argument('--density', help='Density spec file (JSON/YAML) or "uniform"')
        parser.add_argument('--out', help='Output directory, relative to DISKTOUR_OUTPUT_ROOT unless absolute')
        parser.add_argument('--format', choices=['csv', 'json'], help='Format of the trial tables')
        parser.add_argument('--surface', choices=['disk', 'square'], help='Disk (default) or unit square')

    def fail(self, error):
        """Turn a library error into a CommandError with the matching exit code."""
        if isinstance(error, ValidationError):
            return CommandError(format_validation_error(error), returncode=VALIDATION_ERROR)
        if isinstance(error, ReportIOError):
            return CommandError(str(error), returncode=VALIDATION_ERROR)
        return CommandError(f'Internal check failed: {error}', returncode=INTERNAL_ERROR)


class ExperimentCommand(DiskCommand):
    """A command that runs one experiment kind through the harness."""
    kind = None

    def add_arguments(self, parser):
        self.add_common_arguments(parser)
        parser.add_argument('--trials', type=int, help='Trials per batch size')
        parser.add_argument('--workers', type=int, help='Worker processes, defaults to DISKTOUR_WORKERS')
        parser.add_argument('--grid', type=int, help='Grid size of the prediction DP')
        parser.add_argument('--window', type=int, help='Move window of the increasing-path DP')
        parser.add_argument('--save', action='store_true', help='Store the run and its trials in the database')

    def build_config(self, options):
        data = {}
        if options.get('config'):
            data = read_document(options['config'])
            if not isinstance(data, dict):
                raise ValidationError(f'{options["config"]} does not hold a config mapping', code='config')
            if data.get('kind', self.kind) != self.kind:
                raise ValidationError(
                    f'{options["config"]} configures a {data["kind"]} run, not {self.kind}', code='config')
        data['kind'] = self.kind
        for key in OVERRIDES:
            if options.get(key) is not None:
                data[key] = options[key]
        return ExperimentConfig.from_dict(data)

    def handle(self, *args, **options):
        try:
            config = self.build_config(options)
            report = run_experiment(config)
            written = report.write()
        except (ValidationError, ReportIOError, AssertionError) as exc:
            raise self.fail(exc) from exc

        self.show(report)
        for path in written:
            self.stdout.write(f'  wrote {path}')
        if options.get('save'):
            run = save_report(report, output_dir=config.output_dir)
            self.stdout.write(self.style.SUCCESS(f'Saved run {run.run_id}'))
        if report.failures:
            raise CommandError(f'{report.failures} trial(s) failed their checks', returncode=INTERNAL_ERROR)
        self.stdout.write(self.style.SUCCESS(
            f'{config.kind}: {len(report.trials)} trial(s) finished, config {report.config_hash[:12]}'))

    def show(self, report):
        """Print the per-n aggregates; subclasses print their own table."""
        columns = ['n'] + [name for name in report.aggregates.columns if name.endswith('_mean')]
        self.stdout.write(report.aggregates[columns].to_string(index=False))
