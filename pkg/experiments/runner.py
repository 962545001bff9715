"""
Experiment orchestration.

A run is a list of independent trials, one per (n, trial index). Every trial
draws its batch from a seed derived from the master seed and its (n, trial)
key, so the records do not depend on execution order or on the number of
worker processes. Records are sorted by (n, trial) before anything is
aggregated or written.
"""
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from django.db import transaction

from analytics.functionals import analytic_m_radial, maximize_dz, maximize_vertical_functional
from analytics.profiles import (
    empirical_layer_profile, empirical_service_profile, fine_asymptotics_band, served_fraction_radial,
    uniform_square_pile_profile,
)
from density.distributions import load_density, trial_seed
from disk_scheduling import __version__
from geometry.coordinates import SeekModel
from peeling.layers import patience_peel, peel_cylinder_ver
from scheduler.tours import EXACT_LIMIT, abz, exact_service_time, modified_abz, sandwich_check, validate_tour

from .exceptions import ReportIOError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
PROFILE_POINTS = 101
SUMMARY_SCHEMA = 'disk-scheduling/summary/v1'

# fixed CSV headers per experiment kind, after n, trial and seed
TRIAL_COLUMNS = {
    'schedule': ['depth', 'k_modified', 'k_abz', 'k_exact', 'valid',
                 'predicted_m', 'predicted_depth', 'lower_bound', 'upper_bound'],
    'estimate_m': ['depth', 'depth_per_sqrt_n', 'predicted'],
    'profile': ['depth', 'layer_sup_distance', 'service_sup_distance'],
    'fine_asymptotics': ['k', 'depth', 'statistic', 'statistic_scaled', 'band_lower', 'band_upper',
                         'band_scaled_lower', 'band_scaled_upper'],
    'sandwich': ['depth', 'k_exact', 'k_modified', 'k_abz', 'lower', 'upper', 'heuristic_gap', 'holds'],
}
QUANTILES = {'q05': 0.05, 'q50': 0.5, 'q95': 0.95}


def predict(config):
    """Asymptotic predictions for a config, computed once per run."""
    density = load_density(config.density)
    model = SeekModel(config.c)
    if config.surface == 'square':
        prediction = maximize_dz(density, m=config.grid, w=config.window)
        return {'m': prediction.m, 'method': prediction.method}
    if density.is_radial:
        return {'m': analytic_m_radial(density, model), 'method': 'closed_form'}
    prediction = maximize_vertical_functional(density, model, grid=config.grid)
    return {'m': prediction.m, 'method': prediction.method}


def _schedule_trial(batch, model, n, predictions):
    layers = peel_cylinder_ver(batch, model)
    modified = modified_abz(batch, model, layers)
    heuristic = abz(batch, model, layers)
    valid = validate_tour(modified, batch, model) and validate_tour(heuristic, batch, model)
    if not valid:
        logger.debug('Tour validation failed for n=%d seed=%s', n, batch.seed)
    record = {
        'depth': layers.depth,
        'k_modified': modified.k,
        'k_abz': heuristic.k,
        'k_exact': exact_service_time(batch, model) if n <= EXACT_LIMIT else None,
        'valid': bool(valid),
        'predicted_m': predictions['m'],
        'predicted_depth': predictions['m'] * math.sqrt(n),
        'lower_bound': layers.depth - 1 - 1 / model.c,
        'upper_bound': layers.depth + 1 + 2 / model.c,
    }
    return record, {'tour': modified.to_frame()}


def _estimate_trial(batch, model, n, predictions, surface):
    layers = patience_peel(batch.points) if surface == 'square' else peel_cylinder_ver(batch, model)
    record = {
        'depth': layers.depth,
        'depth_per_sqrt_n': layers.depth / math.sqrt(n),
        'predicted': predictions['m'],
    }
    return record, {}


def _profile_trial(batch, model, n, predictions, surface, density):
    taus = np.linspace(0.0, predictions['m'] if surface == 'disk' else 2.0, PROFILE_POINTS)
    if surface == 'square':
        layers = patience_peel(batch.points)
        layer_profile = empirical_layer_profile(layers, n)
        predicted = uniform_square_pile_profile(taus)
        record = {
            'depth': layers.depth,
            'layer_sup_distance': layer_profile.sup_distance(uniform_square_pile_profile, tau_max=2.0),
            'service_sup_distance': None,
        }
        table = pd.DataFrame({'tau': taus, 'predicted': predicted, 'layers': layer_profile(taus)})
        return record, {'profile': table}

    def prediction(tau):
        return served_fraction_radial(tau, density, model)

    layers = peel_cylinder_ver(batch, model)
    layer_profile = empirical_layer_profile(layers, n)
    service_profile = empirical_service_profile(modified_abz(batch, model, layers), n)
    # the tail of both step functions may run past the predicted total
    tau_max = predictions['m']
    record = {
        'depth': layers.depth,
        'layer_sup_distance': layer_profile.sup_distance(prediction, tau_max=tau_max),
        'service_sup_distance': service_profile.sup_distance(prediction, tau_max=tau_max),
    }
    table = pd.DataFrame({
        'tau': taus,
        'predicted': prediction(taus),
        'layers': layer_profile(taus),
        'service': service_profile(taus),
    })
    return record, {'profile': table}


def _fine_trial(batch, model, n):
    layers = peel_cylinder_ver(batch, model)
    k = modified_abz(batch, model, layers).k
    excess = k - math.sqrt(2.0 * n / model.c)
    log_factor = math.log(n) ** (2.0 / 3.0)
    lower, upper = fine_asymptotics_band(n, model)
    scaled_lower, scaled_upper = fine_asymptotics_band(n, model, scaled=True)
    record = {
        'k': k,
        'depth': layers.depth,
        'statistic': excess / log_factor,
        'statistic_scaled': excess / (log_factor * n ** (1.0 / 6.0)),
        'band_lower': lower,
        'band_upper': upper,
        'band_scaled_lower': scaled_lower,
        'band_scaled_upper': scaled_upper,
    }
    return record, {}


def _sandwich_trial(batch, model):
    report = sandwich_check(batch, model)
    gap = abs(report.k_abz - report.k_modified)
    close = gap <= 2 + 3 / model.c + 1e-9
    if not close:
        logger.warning('Heuristic tours differ by %d rotations at c=%s', gap, model.c)
    record = report.as_dict()
    record.pop('n')
    record['heuristic_gap'] = gap
    record['holds'] = bool(report.holds and close)
    return record, {}


def run_trial(config_dict, n, trial, predictions):
    """One trial; module level so a process pool can pickle it."""
    started = time.perf_counter()
    kind = config_dict['kind']
    surface = config_dict['surface']
    density = load_density(config_dict['density'])
    model = SeekModel(config_dict['c'])
    seed = trial_seed(config_dict['seed'], n, trial)
    batch = density.sample(n, seed)

    if kind == 'schedule':
        record, tables = _schedule_trial(batch, model, n, predictions)
    elif kind == 'estimate_m':
        record, tables = _estimate_trial(batch, model, n, predictions, surface)
    elif kind == 'profile':
        record, tables = _profile_trial(batch, model, n, predictions, surface, density)
    elif kind == 'fine_asymptotics':
        record, tables = _fine_trial(batch, model, n)
    else:
        record, tables = _sandwich_trial(batch, model)

    elapsed = time.perf_counter() - started
    logger.debug('%s n=%d trial=%d done in %.3fs', kind, n, trial, elapsed)
    return {'n': n, 'trial': trial, 'seed': seed, **record, 'elapsed': elapsed}, tables


def aggregate(trials):
    """Mean, standard deviation and quantiles of every metric, per n."""
    metrics = [column for column in trials.columns if column not in ('n', 'trial', 'seed', 'elapsed')]
    values = trials[metrics].astype(float)
    values.insert(0, 'n', trials['n'])
    grouped = values.groupby('n')
    parts = {'mean': grouped.mean(), 'std': grouped.std(ddof=1)}
    for label, q in QUANTILES.items():
        parts[label] = grouped.quantile(q)
    aggregates = pd.concat(parts, axis=1)
    aggregates.columns = [f'{metric}_{stat}' for stat, metric in aggregates.columns]
    ordered = [f'{metric}_{stat}' for metric in metrics for stat in parts]
    return aggregates[ordered].reset_index()


def _band_table(aggregates):
    columns = {
        'n': 'n',
        'statistic_mean': 'statistic_mean',
        'statistic_std': 'statistic_std',
        'band_lower_mean': 'band_lower',
        'band_upper_mean': 'band_upper',
        'statistic_scaled_mean': 'statistic_scaled_mean',
        'band_scaled_lower_mean': 'band_scaled_lower',
        'band_scaled_upper_mean': 'band_scaled_upper',
    }
    table = aggregates[list(columns)].rename(columns=columns)
    table['within_band'] = (table['statistic_mean'] > table['band_lower']) & \
        (table['statistic_mean'] < table['band_upper'])
    return table


@dataclass
class Report:
    config: object
    trials: pd.DataFrame
    aggregates: pd.DataFrame
    predictions: dict
    tables: dict = field(default_factory=dict)
    elapsed: float = 0.0
    failures: int = 0

    @property
    def config_hash(self):
        return self.config.config_hash()

    def summary(self):
        return {
            'schema': SUMMARY_SCHEMA,
            'kind': self.config.kind,
            'version': __version__,
            'seed': self.config.seed,
            'config': self.config.to_dict(),
            'config_hash': self.config_hash,
            'predictions': self.predictions,
            'aggregates': json.loads(self.aggregates.to_json(orient='records', double_precision=15)),
            'failures': self.failures,
            'timing': {
                'total_seconds': self.elapsed,
                'mean_trial_seconds': float(self.trials['elapsed'].mean()) if len(self.trials) else 0.0,
            },
        }

    def _write_frame(self, frame, path_stem, out_dir):
        if self.config.format == 'json':
            path = out_dir / f'{path_stem}.json'
            path.write_text(frame.to_json(orient='records', double_precision=15, indent=2))
        else:
            path = out_dir / f'{path_stem}.csv'
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        return path

    def write(self, out_dir=None):
        """Write trials, aggregates, extra tables and summary.json; returns the written paths."""
        out_dir = Path(out_dir or self.config.output_dir)
        written = []
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            written.append(self._write_frame(self.trials.drop(columns=['elapsed']), 'trials', out_dir))
            written.append(self._write_frame(self.aggregates, 'aggregates', out_dir))
            for name, table in sorted(self.tables.items()):
                path = out_dir / f'{name}.csv'
                table.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
                written.append(path)
            summary_path = out_dir / 'summary.json'
            summary_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True, default=str))
            written.append(summary_path)
        except OSError as exc:
            raise ReportIOError(getattr(exc, 'filename', None) or out_dir, exc) from exc
        for path in written:
            logger.info('Wrote %s', path)
        return written


def _collect_tables(kind, results):
    """The plot-ready tables of a run, taken from trial 0 of each size."""
    first = [(record['n'], tables) for record, tables in results if record['trial'] == 0]
    out = {}
    if kind == 'schedule' and first:
        out['tour'] = first[0][1]['tour']
    if kind == 'profile':
        frames = []
        for n, tables in first:
            frame = tables['profile'].copy()
            frame.insert(0, 'n', n)
            frames.append(frame)
        if frames:
            out['profile'] = pd.concat(frames, ignore_index=True)
    return out


def run_experiment(config):
    """Run every trial of a validated config and return the Report (nothing is written)."""
    started = time.perf_counter()
    predictions = {} if config.kind in ('fine_asymptotics', 'sandwich') else predict(config)
    config_dict = config.to_dict()
    work = [(n, trial) for n in config.n for trial in range(config.trials)]
    logger.info('Starting %s: %d trials over n=%s c=%s seed=%s workers=%d',
                config.kind, len(work), config.n, config.c, config.seed, config.workers)

    if config.workers > 1 and len(work) > 1:
        results = []
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            futures = [executor.submit(run_trial, config_dict, n, trial, predictions) for n, trial in work]
            for future in as_completed(futures):
                results.append(future.result())
    else:
        results = [run_trial(config_dict, n, trial, predictions) for n, trial in work]

    results.sort(key=lambda item: (item[0]['n'], item[0]['trial']))
    columns = ['n', 'trial', 'seed', *TRIAL_COLUMNS[config.kind], 'elapsed']
    trials = pd.DataFrame([record for record, _ in results], columns=columns)
    aggregates = aggregate(trials)
    tables = _collect_tables(config.kind, results)
    if config.kind == 'fine_asymptotics':
        tables['band'] = _band_table(aggregates)

    failures = 0
    if config.kind == 'schedule':
        failures = int((~trials['valid'].astype(bool)).sum())
    elif config.kind == 'sandwich':
        failures = int((~trials['holds'].astype(bool)).sum())

    for row in aggregates.itertuples(index=False):
        logger.info('n=%d %s', row.n, ' '.join(
            f'{name}={getattr(row, name):.6g}' for name in aggregates.columns if name.endswith('_mean')))
    elapsed = time.perf_counter() - started
    logger.info('Finished %s in %.2fs with %d failures', config.kind, elapsed, failures)
    return Report(config=config, trials=trials, aggregates=aggregates, predictions=predictions,
                  tables=tables, elapsed=elapsed, failures=failures)


def save_report(report, output_dir=''):
    """Persist a report as an ExperimentRun with one TrialRecord per trial."""
    from .models import ExperimentRun, TrialRecord

    def value(row, name, cast):
        raw = row.get(name)
        if raw is None or (isinstance(raw, float) and math.isnan(raw)):
            return None
        return cast(raw)

    with transaction.atomic():
        run = ExperimentRun.objects.create(
            kind=report.config.kind,
            status='failed' if report.failures else 'completed',
            config=report.config.to_dict(),
            config_hash=report.config_hash,
            seed=str(report.config.seed),
            output_dir=str(output_dir),
            summary=json.loads(json.dumps(report.summary(), default=str)),
            failures=report.failures,
        )
        TrialRecord.objects.bulk_create([
            TrialRecord(
                run=run,
                n=int(row['n']),
                trial=int(row['trial']),
                seed=str(row['seed']),
                depth=value(row, 'depth', int),
                k_modified=value(row, 'k_modified', int) if 'k_modified' in row else value(row, 'k', int),
                k_abz=value(row, 'k_abz', int),
                k_exact=value(row, 'k_exact', int),
                statistic=value(row, 'statistic', float) if 'statistic' in row
                else value(row, 'depth_per_sqrt_n', float),
                elapsed=float(row['elapsed']),
            )
            for row in report.trials.to_dict(orient='records')
        ])
    logger.info('Saved run %s with %d trials', run.run_id, len(report.trials))
    return run
