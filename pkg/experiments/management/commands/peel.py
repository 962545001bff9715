import math

from django.core.exceptions import ValidationError

from density.distributions import SampleBatch, load_density
from geometry.coordinates import OrderKind, SeekModel
from peeling.layers import peel

from ...config import ExperimentConfig
from ...exceptions import ReportIOError
from ...runner import FLOAT_FORMAT, predict
from ..base import DiskCommand


class Command(DiskCommand):
    help = 'Peel a batch into layers (vertical order on the cylinder, or increasing order on the square)'

    def add_arguments(self, parser):
        self.add_common_arguments(parser)
        parser.add_argument('--batch', help='theta,r CSV to peel instead of sampling')

    def handle(self, *args, **options):
        try:
            config = ExperimentConfig.from_dict({
                'kind': 'estimate_m',
                **{key: options[key] for key in ('n', 'c', 'density', 'seed', 'out', 'surface')
                   if options.get(key) is not None},
            })
            model = SeekModel(config.c)
            order = OrderKind.INC_PLANE if config.surface == 'square' else OrderKind.VER_CYLINDER
            if options.get('batch'):
                batch = SampleBatch.from_csv(options['batch'], model if order == OrderKind.VER_CYLINDER else None)
            elif len(config.n) == 1:
                batch = load_density(config.density).sample(config.n[0], config.seed)
            else:
                raise ValidationError('peel works on one batch; give a single --n', code='sample_size')
            layers = peel(batch.points, order, model)

            frame = batch.to_frame()
            frame['layer'] = layers.layer_of
            frame['pred'] = layers.pred
            path = config.output_dir / 'layers.csv'
            try:
                config.output_dir.mkdir(parents=True, exist_ok=True)
                frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
            except OSError as exc:
                raise ReportIOError(path, exc) from exc
            prediction = predict(config)
        except (ValidationError, ReportIOError) as exc:
            raise self.fail(exc) from exc

        n = len(batch)
        self.stdout.write(f'n={n} depth={layers.depth} depth/sqrt(n)={layers.depth / math.sqrt(n):.6f} '
                          f'predicted m={prediction["m"]:.6f} ({prediction["method"]})')
        self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
