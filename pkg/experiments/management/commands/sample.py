from django.core.exceptions import ValidationError

from density.distributions import load_density

from ...config import ExperimentConfig
from ...exceptions import ReportIOError
from ..base import DiskCommand


class Command(DiskCommand):
    help = 'Draw a batch of requests from a density and write it as a theta,r CSV'

    def add_arguments(self, parser):
        self.add_common_arguments(parser)
        parser.add_argument('--poisson', action='store_true', help='Poissonised batch: the size is Poisson(n)')

    def handle(self, *args, **options):
        try:
            config = ExperimentConfig.from_dict({
                'kind': 'schedule',
                **{key: options[key] for key in ('n', 'density', 'seed', 'out') if options.get(key) is not None},
            })
            if len(config.n) != 1:
                raise ValidationError('sample draws one batch; give a single --n', code='sample_size')
            density = load_density(config.density)
            n = config.n[0]
            batch = density.poisson_sample(n, config.seed) if options.get('poisson') else density.sample(n, config.seed)
            path = config.output_dir / 'batch.csv'
            try:
                config.output_dir.mkdir(parents=True, exist_ok=True)
                batch.to_csv(path)
            except OSError as exc:
                raise ReportIOError(path, exc) from exc
        except (ValidationError, ReportIOError) as exc:
            raise self.fail(exc) from exc
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(batch)} requests to {path}'))
