import json

from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

from density.distributions import SampleBatch
from geometry.coordinates import SeekModel
from peeling.layers import peel_cylinder_ver
from scheduler.tours import EXACT_LIMIT, abz, exact_service_time, modified_abz, validate_tour

from ...exceptions import ReportIOError
from ...runner import FLOAT_FORMAT
from ..base import INTERNAL_ERROR, ExperimentCommand


class Command(ExperimentCommand):
    help = 'Schedule sampled batches (or one batch from --batch) with the modified ABZ and ABZ tours'
    kind = 'schedule'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--batch', help='theta,r CSV to schedule instead of sampling')

    def handle(self, *args, **options):
        if not options.get('batch'):
            return super().handle(*args, **options)
        try:
            config = self.build_config(options)
            summary, tour = self.schedule_file(options['batch'], SeekModel(config.c))
            out_dir = config.output_dir
            try:
                out_dir.mkdir(parents=True, exist_ok=True)
                tour.to_frame().to_csv(out_dir / 'tour.csv', index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
                (out_dir / 'summary.json').write_text(json.dumps(summary, indent=2, sort_keys=True))
            except OSError as exc:
                raise ReportIOError(out_dir, exc) from exc
        except (ValidationError, ReportIOError, AssertionError) as exc:
            raise self.fail(exc) from exc

        self.stdout.write(
            f"n={summary['n']} M={summary['depth']} k_modified={summary['k_modified']} "
            f"k_abz={summary['k_abz']} k_exact={summary['k_exact']}")
        if not summary['valid']:
            raise CommandError('A tour failed validation', returncode=INTERNAL_ERROR)
        self.stdout.write(self.style.SUCCESS(f'Wrote {out_dir / "tour.csv"} and {out_dir / "summary.json"}'))

    def schedule_file(self, path, model):
        batch = SampleBatch.from_csv(path, model)
        layers = peel_cylinder_ver(batch, model)
        modified = modified_abz(batch, model, layers)
        heuristic = abz(batch, model, layers)
        summary = {
            'batch': str(path),
            'c': model.c,
            'n': len(batch),
            'depth': layers.depth,
            'k_modified': modified.k,
            'k_abz': heuristic.k,
            'k_exact': exact_service_time(batch, model) if len(batch) <= EXACT_LIMIT else None,
            'valid': bool(validate_tour(modified, batch, model) and validate_tour(heuristic, batch, model)),
        }
        return summary, modified
