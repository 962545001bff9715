import json
import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import pandas as pd
import yaml
from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings, tag

from analytics.profiles import fine_constants
from geometry.coordinates import SeekModel
from scheduler.tours import SandwichReport

from .config import DEFAULT_SIZES, ExperimentConfig
from .exceptions import ReportIOError
from .models import ExperimentRun, TrialRecord
from .runner import TRIAL_COLUMNS, aggregate, run_experiment, save_report

RADIAL_STEP = {'kind': 'radial_step', 'breakpoints': [0, 0.4, 1], 'values': [3, 1]}


class TempDirMixin:

    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()


@override_settings(DISKTOUR_SEED=11, DISKTOUR_WORKERS=1)
class ExperimentConfigTests(TempDirMixin, SimpleTestCase):

    def test_defaults_follow_kind_and_settings(self):
        config = ExperimentConfig.from_dict({'kind': 'sandwich'})
        self.assertEqual(config.n, DEFAULT_SIZES['sandwich'])
        self.assertEqual(config.seed, 11)
        self.assertEqual(config.density, {'kind': 'uniform'})
        self.assertEqual(config.workers, 1)

    def test_sizes_accept_scientific_notation(self):
        config = ExperimentConfig.from_dict({'kind': 'estimate_m', 'n': '1e3, 2e3'})
        self.assertEqual(config.n, [1000, 2000])

    def test_invalid_values_are_rejected(self):
        bad = [
            {'kind': 'schedule', 'c': 0},
            {'kind': 'schedule', 'c': -1},
            {'kind': 'schedule', 'trials': 0},
            {'kind': 'schedule', 'n': '1.5'},
            {'kind': 'sandwich', 'n': [10]},
            {'kind': 'schedule', 'surface': 'square'},
            {'kind': 'fine_asymptotics', 'density': RADIAL_STEP},
            {'kind': 'profile', 'density': {'kind': 'general_grid', 'table': [[1, 2], [2, 1]]}},
            {'kind': 'teleport'},
            {'kind': 'schedule', 'colour': 'red'},
            {'kind': 'schedule', 'density': {'kind': 'radial_step', 'breakpoints': [0, 1], 'values': [-1]}},
        ]
        for data in bad:
            with self.subTest(data=data), self.assertRaises(ValidationError):
                ExperimentConfig.from_dict(data)

    def test_error_names_the_field(self):
        with self.assertRaisesMessage(ValidationError, 'trials'):
            ExperimentConfig.from_dict({'kind': 'schedule', 'trials': 0})

    def test_round_trip_through_json_and_yaml(self):
        config = ExperimentConfig.from_dict({
            'kind': 'profile', 'density': RADIAL_STEP, 'c': 0.5, 'n': [500, 800], 'trials': 3, 'seed': 2 ** 63 + 5,
        })
        for name in ('config.json', 'config.yaml'):
            with self.subTest(name=name):
                path = config.save(self.tmp / name)
                self.assertEqual(ExperimentConfig.load(path), config)

    def test_density_file_is_inlined(self):
        path = self.tmp / 'radial.yaml'
        path.write_text(yaml.safe_dump(RADIAL_STEP))
        config = ExperimentConfig.from_dict({'kind': 'estimate_m', 'density': str(path)})
        self.assertEqual(config.density, RADIAL_STEP)

    def test_hash_ignores_workers_and_output(self):
        base = ExperimentConfig.from_dict({'kind': 'schedule', 'seed': 3})
        moved = ExperimentConfig.from_dict({'kind': 'schedule', 'seed': 3, 'workers': 4, 'out': 'elsewhere'})
        reseeded = ExperimentConfig.from_dict({'kind': 'schedule', 'seed': 4})
        self.assertEqual(base.config_hash(), moved.config_hash())
        self.assertNotEqual(base.config_hash(), reseeded.config_hash())
        self.assertRegex(base.config_hash(), r'^[0-9a-f]{64}$')

    def test_relative_output_resolves_under_root(self):
        with override_settings(DISKTOUR_OUTPUT_ROOT=str(self.tmp)):
            config = ExperimentConfig.from_dict({'kind': 'schedule', 'out': 'run7'})
            self.assertEqual(config.output_dir, self.tmp / 'run7')


class RunExperimentTests(TempDirMixin, SimpleTestCase):

    def config(self, **values):
        values.setdefault('seed', 7)
        values.setdefault('out', str(self.tmp / 'run'))
        return ExperimentConfig.from_dict(values)

    def test_records_are_sorted_and_columns_fixed(self):
        report = run_experiment(self.config(kind='estimate_m', n=[300, 200], trials=3))
        self.assertEqual(list(report.trials.columns),
                         ['n', 'trial', 'seed', *TRIAL_COLUMNS['estimate_m'], 'elapsed'])
        self.assertEqual(list(zip(report.trials['n'], report.trials['trial'])),
                         [(200, 0), (200, 1), (200, 2), (300, 0), (300, 1), (300, 2)])
        self.assertAlmostEqual(report.predictions['m'], math.sqrt(2))
        self.assertEqual(report.predictions['method'], 'closed_form')

    def test_aggregates_are_recomputable_from_records(self):
        report = run_experiment(self.config(kind='estimate_m', n=[400], trials=5))
        expected = report.trials['depth'].astype(float).mean()
        self.assertAlmostEqual(report.aggregates.loc[0, 'depth_mean'], expected)
        pd.testing.assert_frame_equal(aggregate(report.trials), report.aggregates)

    def test_same_seed_gives_identical_csv(self):
        first = run_experiment(self.config(kind='schedule', n=[150], trials=2, out=str(self.tmp / 'a')))
        second = run_experiment(self.config(kind='schedule', n=[150], trials=2, out=str(self.tmp / 'b')))
        first.write()
        second.write()
        for name in ('trials.csv', 'aggregates.csv', 'tour.csv'):
            with self.subTest(name=name):
                self.assertEqual((self.tmp / 'a' / name).read_bytes(), (self.tmp / 'b' / name).read_bytes())

    def test_parallel_run_matches_serial_run(self):
        serial = run_experiment(self.config(kind='estimate_m', n=[100, 200], trials=3, out=str(self.tmp / 's')))
        parallel = run_experiment(self.config(kind='estimate_m', n=[100, 200], trials=3, workers=2,
                                              out=str(self.tmp / 'p')))
        serial.write()
        parallel.write()
        self.assertEqual((self.tmp / 's' / 'trials.csv').read_bytes(), (self.tmp / 'p' / 'trials.csv').read_bytes())

    def test_schedule_outputs(self):
        report = run_experiment(self.config(kind='schedule', n=[8, 120], trials=2))
        self.assertEqual(report.failures, 0)
        self.assertTrue(report.trials['valid'].all())
        small = report.trials[report.trials['n'] == 8]
        self.assertTrue(small['k_exact'].notna().all())
        self.assertTrue((small['k_exact'] <= small['k_modified']).all())
        self.assertTrue(report.trials.loc[report.trials['n'] == 120, 'k_exact'].isna().all())

        names = {path.name for path in report.write()}
        self.assertEqual(names, {'trials.csv', 'aggregates.csv', 'tour.csv', 'summary.json'})
        summary = json.loads((self.tmp / 'run' / 'summary.json').read_text())
        self.assertEqual(summary['config_hash'], report.config_hash)
        self.assertEqual(summary['seed'], 7)
        self.assertIn('total_seconds', summary['timing'])
        header = (self.tmp / 'run' / 'trials.csv').read_text().splitlines()[0]
        self.assertNotIn('elapsed', header)

    def test_json_format(self):
        report = run_experiment(self.config(kind='estimate_m', n=[100], trials=2, format='json'))
        report.write()
        rows = json.loads((self.tmp / 'run' / 'trials.json').read_text())
        self.assertEqual([row['trial'] for row in rows], [0, 1])

    def test_sandwich_run_passes(self):
        report = run_experiment(self.config(kind='sandwich', n=[2, 5, 9], trials=15, c=0.5))
        self.assertEqual(report.failures, 0)
        self.assertTrue(report.trials['holds'].all())
        self.assertTrue((report.trials['k_exact'] >= report.trials['lower'] - 1e-9).all())

    def test_profile_table(self):
        report = run_experiment(self.config(kind='profile', n=[2000], trials=2))
        profile = report.tables['profile']
        self.assertEqual(list(profile.columns), ['n', 'tau', 'predicted', 'layers', 'service'])
        self.assertAlmostEqual(profile['predicted'].iloc[-1], 1.0)
        self.assertTrue((report.trials['layer_sup_distance'] < 0.25).all())

    def test_square_estimate_uses_the_path_dp(self):
        report = run_experiment(self.config(kind='estimate_m', surface='square', n=[500], grid=60, window=4))
        self.assertEqual(report.predictions['method'], 'grid_dp')
        self.assertAlmostEqual(report.predictions['m'], 2.0, delta=0.05)

    def test_fine_band_table(self):
        report = run_experiment(self.config(kind='fine_asymptotics', n=[1000], trials=2))
        band = report.tables['band']
        lower, upper = fine_constants(SeekModel(1))
        self.assertAlmostEqual(band.loc[0, 'band_lower'], lower * math.log(1000) ** (2 / 3))
        self.assertAlmostEqual(band.loc[0, 'band_upper'], upper * math.log(1000) ** (2 / 3))

    def test_unwritable_output_raises_with_path(self):
        blocker = self.tmp / 'blocker'
        blocker.write_text('')
        report = run_experiment(self.config(kind='estimate_m', n=[50], out=str(blocker / 'run')))
        with self.assertRaises(ReportIOError) as ctx:
            report.write()
        self.assertIn('blocker', str(ctx.exception))


class ExperimentRunModelTests(TempDirMixin, TestCase):

    def test_run_id_is_generated(self):
        run = ExperimentRun.objects.create(kind='schedule', config={}, config_hash='0' * 64, seed='1')
        self.assertRegex(run.run_id, r'^EXP\d{8}[0-9A-F]{8}$')
        self.assertTrue(run.passed)
        self.assertEqual(str(run), f'{run.run_id} - Schedule batches')

    def test_save_report_stores_every_trial(self):
        config = ExperimentConfig.from_dict({'kind': 'schedule', 'n': [6, 40], 'trials': 3, 'seed': 2 ** 64 - 1})
        run = save_report(run_experiment(config), output_dir=self.tmp)
        self.assertEqual(run.trial_count, 6)
        self.assertEqual(run.status, 'completed')
        self.assertEqual(run.seed, str(2 ** 64 - 1))
        record = run.trials.get(n=6, trial=0)
        self.assertIsNotNone(record.k_exact)
        self.assertIsNone(run.trials.get(n=40, trial=0).k_exact)
        self.assertEqual(run.summary['kind'], 'schedule')


@override_settings(DISKTOUR_SEED=20240601, DISKTOUR_WORKERS=1)
class CommandTests(TempDirMixin, TestCase):

    def call(self, *args):
        out = StringIO()
        call_command(*args, stdout=out, stderr=StringIO())
        return out.getvalue()

    def test_schedule_smoke(self):
        output = self.call('schedule', '--n', '1000', '--c', '1', '--seed', '7', '--out', str(self.tmp / 'run'))
        self.assertTrue((self.tmp / 'run' / 'tour.csv').exists())
        self.assertTrue((self.tmp / 'run' / 'summary.json').exists())
        self.assertIn('schedule: 1 trial(s) finished', output)

    def test_estimate_prints_both_constants(self):
        spec = self.tmp / 'radial.json'
        spec.write_text(json.dumps(RADIAL_STEP))
        output = self.call('estimate', '--density', str(spec), '--c', '0.5', '--n', '300', '--grid', '80',
                           '--out', str(self.tmp / 'run'))
        self.assertIn('analytic m', output)
        self.assertIn('DP m', output)

    def test_flags_override_config_file(self):
        path = self.tmp / 'config.yaml'
        path.write_text(yaml.safe_dump({'kind': 'estimate_m', 'n': [100], 'trials': 2, 'seed': 1}))
        self.call('estimate', '--config', str(path), '--trials', '3', '--out', str(self.tmp / 'run'))
        trials = pd.read_csv(self.tmp / 'run' / 'trials.csv')
        self.assertEqual(len(trials), 3)
        self.assertEqual(set(trials['n']), {100})

    def test_config_for_another_kind_is_rejected(self):
        path = self.tmp / 'config.json'
        path.write_text(json.dumps({'kind': 'sandwich'}))
        with self.assertRaises(CommandError) as ctx:
            self.call('estimate', '--config', str(path))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_validation_errors_exit_one(self):
        for args in (['--c', '-1'], ['--trials', '0'], ['--n', 'many'], ['--density', str(self.tmp / 'missing.json')]):
            with self.subTest(args=args), self.assertRaises(CommandError) as ctx:
                self.call('schedule', '--out', str(self.tmp / 'run'), *args)
            self.assertEqual(ctx.exception.returncode, 1)

    def test_usage_errors_exit_one(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('schedule', '--c', 'steep')
        self.assertEqual(ctx.exception.returncode, 1)
        with self.assertRaises(CommandError) as ctx:
            self.call('schedule', '--format', 'xml')
        self.assertEqual(ctx.exception.returncode, 1)

    def test_sandwich_violation_exits_two(self):
        broken = SandwichReport(n=3, depth=2, k_exact=9, k_modified=9, k_abz=9, lower=0.0, upper=5.0, holds=False)
        with mock.patch('experiments.runner.sandwich_check', return_value=broken):
            with self.assertRaises(CommandError) as ctx:
                self.call('sandwich', '--n', '3', '--trials', '2', '--out', str(self.tmp / 'run'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_sandwich_passes(self):
        output = self.call('sandwich', '--trials', '5', '--c', '2', '--out', str(self.tmp / 'run'))
        self.assertIn('All 40 instances within the bounds', output)

    def test_save_flag_persists_the_run(self):
        self.call('schedule', '--n', '50', '--trials', '2', '--save', '--out', str(self.tmp / 'run'))
        run = ExperimentRun.objects.get()
        self.assertEqual(TrialRecord.objects.filter(run=run).count(), 2)
        self.assertEqual(run.config['n'], [50])

    def test_sample_peel_and_schedule_a_batch_file(self):
        self.call('sample', '--n', '300', '--seed', '3', '--out', str(self.tmp / 'batch'))
        batch = self.tmp / 'batch' / 'batch.csv'
        self.assertEqual(len(pd.read_csv(batch)), 300)

        output = self.call('peel', '--batch', str(batch), '--out', str(self.tmp / 'peel'))
        self.assertIn('depth=', output)
        layers = pd.read_csv(self.tmp / 'peel' / 'layers.csv')
        self.assertEqual(list(layers.columns), ['theta', 'r', 'layer', 'pred'])
        self.assertEqual(layers['layer'].min(), 1)

        output = self.call('schedule', '--batch', str(batch), '--out', str(self.tmp / 'tour'))
        summary = json.loads((self.tmp / 'tour' / 'summary.json').read_text())
        self.assertEqual(summary['n'], 300)
        self.assertEqual(summary['depth'], layers['layer'].max())
        self.assertIn('k_modified=', output)

    def test_sample_needs_one_size(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('sample', '--n', '10,20', '--out', str(self.tmp / 'batch'))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_fine_prints_band(self):
        output = self.call('fine', '--n', '500,1000', '--trials', '2', '--out', str(self.tmp / 'run'))
        self.assertIn('band_lower', output)
        self.assertTrue((self.tmp / 'run' / 'band.csv').exists())

    def test_profile_on_the_square(self):
        self.call('profile', '--surface', 'square', '--n', '2000', '--grid', '40', '--out', str(self.tmp / 'run'))
        profile = pd.read_csv(self.tmp / 'run' / 'profile.csv')
        self.assertEqual(list(profile.columns), ['n', 'tau', 'predicted', 'layers'])


@tag('slow')
class AcceptanceTests(TempDirMixin, SimpleTestCase):

    def run_kind(self, **values):
        values.setdefault('seed', 20240601)
        values.setdefault('out', str(self.tmp / 'run'))
        return run_experiment(ExperimentConfig.from_dict(values))

    def test_sandwich_on_a_thousand_instances(self):
        for c in (0.5, 1.0, 2.0):
            with self.subTest(c=c):
                report = self.run_kind(kind='sandwich', c=c, n=list(range(2, 10)), trials=1000)
                self.assertEqual(report.failures, 0)

    def test_uniform_depth_constant(self):
        report = self.run_kind(kind='estimate_m', n=[10 ** 5], trials=20)
        mean = report.aggregates.loc[0, 'depth_per_sqrt_n_mean']
        self.assertAlmostEqual(mean, math.sqrt(2), delta=0.05)

    def test_linear_radial_depth_constant(self):
        density = {'kind': 'radial_smooth', 'values': [0, 2]}
        report = self.run_kind(kind='estimate_m', density=density, n=[10 ** 5], trials=20)
        self.assertAlmostEqual(report.predictions['m'], 4 / 3, places=8)
        mean = report.aggregates.loc[0, 'depth_per_sqrt_n_mean']
        self.assertAlmostEqual(mean, 4 / 3, delta=0.05)

    def test_square_pile_profile(self):
        report = self.run_kind(kind='profile', surface='square', n=[10 ** 5], trials=10)
        self.assertLessEqual(report.trials['layer_sup_distance'].max(), 0.05)

    def test_disk_service_profile(self):
        report = self.run_kind(kind='profile', n=[10 ** 5], trials=1)
        self.assertLessEqual(report.trials['service_sup_distance'].max(), 0.07)

    def test_fine_statistic(self):
        report = self.run_kind(kind='fine_asymptotics', n=[10 ** 4, 10 ** 5, 10 ** 6], trials=50, workers=4)
        band = report.tables['band']
        lower, upper = fine_constants(SeekModel(1))
        self.assertTrue((band['statistic_mean'] > 0).all())
        # the band constants bound the excess once it is divided by n^(1/6) ln^(2/3) n
        last = band.iloc[-1]
        self.assertGreaterEqual(last['statistic_scaled_mean'], lower / 2)
        self.assertLessEqual(last['statistic_scaled_mean'], 2 * upper)
