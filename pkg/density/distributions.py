"""
Request densities on the cylinder and reproducible sampling from them.

Radial densities depend on the radius only; the angle of every request is
uniform on [0, 1). General densities are bilinear interpolants of a square
table over (theta, r) and are sampled by rejection.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from django.core.exceptions import ValidationError
from scipy import integrate
from scipy.interpolate import RegularGridInterpolator

from geometry.coordinates import DiskPoint, general_position_check
from geometry.exceptions import GeneralPositionError

from .forms import DensitySpecForm

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION = 512
REJECTION_OVERSAMPLING = 1.25


def trial_seed(master_seed, *keys):
    """Derive an independent 64-bit seed for one trial from the master seed."""
    entropy = [int(master_seed), *(int(k) for k in keys)]
    if any(e < 0 for e in entropy):
        raise ValidationError(f'Seeds and trial keys must be non-negative, got {entropy}', code='seed')
    state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
    return int(state[0])


class Density:
    """
    A probability density on [0,1) x [0,1], normalised to mass 1.

    Build one with the classmethods (uniform, radial_step, radial_smooth,
    general_grid, from_function) or from a spec document with from_spec.
    """

    UNIFORM = 'uniform'
    RADIAL_STEP = 'radial_step'
    RADIAL_SMOOTH = 'radial_smooth'
    GENERAL_GRID = 'general_grid'
    RADIAL_KINDS = (UNIFORM, RADIAL_STEP, RADIAL_SMOOTH)

    def __init__(self, kind, nodes=None, values=None, table=None):
        self.kind = kind
        self.nodes = None if nodes is None else np.asarray(nodes, dtype=float)
        self.values = None if values is None else np.asarray(values, dtype=float)
        self.table = None if table is None else np.asarray(table, dtype=float)
        self._normalise()

    # construction

    @classmethod
    def uniform(cls):
        return cls(cls.UNIFORM)

    @classmethod
    def radial_step(cls, breakpoints, values):
        return cls.from_spec({'kind': cls.RADIAL_STEP, 'breakpoints': list(breakpoints), 'values': list(values)})

    @classmethod
    def radial_smooth(cls, values, radii=None):
        spec = {'kind': cls.RADIAL_SMOOTH, 'values': list(values)}
        if radii is not None:
            spec['radii'] = list(radii)
        return cls.from_spec(spec)

    @classmethod
    def from_function(cls, func, resolution=DEFAULT_RESOLUTION):
        """Tabulate a radial profile p(r) on an even grid."""
        radii = np.linspace(0.0, 1.0, resolution)
        return cls.radial_smooth(np.asarray(func(radii), dtype=float), radii)

    @classmethod
    def general_grid(cls, table):
        return cls.from_spec({'kind': cls.GENERAL_GRID, 'table': np.asarray(table, dtype=float).tolist()})

    @classmethod
    def from_spec(cls, spec):
        if isinstance(spec, str):
            spec = {'kind': spec}
        form = DensitySpecForm(data=spec)
        if not form.is_valid():
            raise ValidationError(f'Invalid density spec: {form.errors.as_text()}', code='density_spec')
        data = form.cleaned_data
        kind = data['kind']
        if kind == cls.UNIFORM:
            return cls(kind)
        if kind == cls.RADIAL_STEP:
            return cls(kind, nodes=data['breakpoints'], values=data['values'])
        if kind == cls.RADIAL_SMOOTH:
            values = data['values']
            radii = data['radii'] or np.linspace(0.0, 1.0, len(values))
            return cls(kind, nodes=radii, values=values)
        return cls(kind, table=data['table'])

    def to_spec(self):
        if self.kind == self.UNIFORM:
            return {'kind': self.kind}
        if self.kind == self.RADIAL_STEP:
            return {'kind': self.kind, 'breakpoints': self.nodes.tolist(), 'values': self.values.tolist()}
        if self.kind == self.RADIAL_SMOOTH:
            return {'kind': self.kind, 'radii': self.nodes.tolist(), 'values': self.values.tolist()}
        return {'kind': self.kind, 'table': self.table.tolist()}

    def _normalise(self):
        if self.kind == self.UNIFORM:
            self._cumulative = np.ones(1)
            return
        if self.kind == self.RADIAL_STEP:
            mass = float(np.sum(self.values * np.diff(self.nodes)))
        elif self.kind == self.RADIAL_SMOOTH:
            mass = float(integrate.trapezoid(self.values, self.nodes))
        elif self.kind == self.GENERAL_GRID:
            axis = np.linspace(0.0, 1.0, self.table.shape[0])
            mass = float(integrate.trapezoid(integrate.trapezoid(self.table, axis, axis=1), axis))
        else:
            raise ValidationError(f'Unknown density kind {self.kind!r}', code='density_kind')
        if mass <= 0:
            raise ValidationError('Density has zero mass; nothing can be sampled from it', code='zero_density')
        if self.kind == self.GENERAL_GRID:
            self.table = self.table / mass
            axis = np.linspace(0.0, 1.0, self.table.shape[0])
            self._interpolator = RegularGridInterpolator((axis, axis), self.table, method='linear')
        else:
            self.values = self.values / mass
            cumulative = self._segment_masses().cumsum()
            self._cumulative = cumulative / cumulative[-1]

    def __repr__(self):
        return f'Density(kind={self.kind!r})'

    @property
    def is_radial(self):
        return self.kind in self.RADIAL_KINDS

    # evaluation

    def evaluate(self, theta, r):
        """Normalised density value at (theta, r); broadcasts over arrays."""
        theta, r = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(r, dtype=float))
        if np.any(~np.isfinite(theta)) or np.any((theta < 0) | (theta > 1)):
            raise ValidationError('Angle outside the domain [0, 1]', code='domain')
        if np.any(~np.isfinite(r)) or np.any((r < 0) | (r > 1)):
            raise ValidationError('Radius outside the domain [0, 1]', code='domain')
        if self.kind == self.GENERAL_GRID:
            out = self._interpolator(np.stack([theta.ravel(), r.ravel()], axis=-1)).reshape(theta.shape)
        else:
            out = self.radial_value(r)
        return float(out) if out.ndim == 0 else out

    def radial_value(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == self.UNIFORM:
            return np.ones_like(r)
        if self.kind == self.RADIAL_STEP:
            idx = np.clip(np.searchsorted(self.nodes, r, side='right') - 1, 0, len(self.values) - 1)
            return self.values[idx]
        if self.kind == self.RADIAL_SMOOTH:
            return np.interp(r, self.nodes, self.values)
        raise ValidationError('Density is not radial', code='not_radial')

    def _segments(self):
        """Radial segments as (left node, width, left value, right value)."""
        if self.kind == self.UNIFORM:
            return np.zeros(1), np.ones(1), np.ones(1), np.ones(1)
        if self.kind == self.RADIAL_STEP:
            return self.nodes[:-1], np.diff(self.nodes), self.values, self.values
        if self.kind == self.RADIAL_SMOOTH:
            return self.nodes[:-1], np.diff(self.nodes), self.values[:-1], self.values[1:]
        raise ValidationError('Density is not radial', code='not_radial')

    def _segment_masses(self):
        _, widths, p0, p1 = self._segments()
        return widths * (p0 + p1) / 2.0

    # integrals

    def total_mass(self):
        """Quadrature of the density over the cylinder."""
        if self.kind == self.GENERAL_GRID:
            axis = np.linspace(0.0, 1.0, self.table.shape[0])
            return float(integrate.trapezoid(integrate.trapezoid(self.table, axis, axis=1), axis))
        left, widths, _, _ = self._segments()
        return float(sum(
            integrate.quad(lambda x: float(self.radial_value(x)), a, a + w)[0]
            for a, w in zip(left, widths)
        ))

    @staticmethod
    def _sqrt_linear_integral(width, p0, p1):
        # closed form of the integral of sqrt(p) over a segment where p is linear
        s0, s1 = np.sqrt(p0), np.sqrt(p1)
        denom = s0 + s1
        with np.errstate(invalid='ignore', divide='ignore'):
            value = 2.0 * width * (p0 + s0 * s1 + p1) / (3.0 * denom)
        return np.where(denom > 0, value, 0.0)

    def integral_sqrt_radial(self):
        """The integral of sqrt(p(r)) over [0, 1]."""
        if not self.is_radial:
            raise ValidationError('integral_sqrt_radial needs a radial density', code='not_radial')
        return float(self.partial_integral_sqrt_radial(1.0))

    def partial_integral_sqrt_radial(self, r):
        if not self.is_radial:
            raise ValidationError('partial_integral_sqrt_radial needs a radial density', code='not_radial')
        r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
        left, widths, p0, p1 = self._segments()
        if self.kind == self.RADIAL_STEP:
            pieces = np.sqrt(p0) * widths
        else:
            pieces = self._sqrt_linear_integral(widths, p0, p1)
        before = np.concatenate([[0.0], np.cumsum(pieces)])
        idx = np.clip(np.searchsorted(left, r, side='right') - 1, 0, len(left) - 1)
        h = r - left[idx]
        if self.kind == self.RADIAL_STEP:
            partial = np.sqrt(p0[idx]) * h
        else:
            partial = self._sqrt_linear_integral(h, p0[idx], self.radial_value(r))
        out = before[idx] + partial
        return float(out) if out.ndim == 0 else out

    def radial_cdf(self, r):
        if not self.is_radial:
            raise ValidationError('radial_cdf needs a radial density', code='not_radial')
        r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
        left, _, p0, _ = self._segments()
        before = np.concatenate([[0.0], self._cumulative])
        idx = np.clip(np.searchsorted(left, r, side='right') - 1, 0, len(left) - 1)
        h = r - left[idx]
        if self.kind == self.RADIAL_STEP:
            partial = p0[idx] * h
        else:
            partial = h * (p0[idx] + self.radial_value(r)) / 2.0
        out = np.minimum(before[idx] + partial, 1.0)
        return float(out) if out.ndim == 0 else out

    # sampling

    def _inverse_radial_cdf(self, u):
        left, widths, p0, p1 = self._segments()
        cumulative = np.concatenate([[0.0], self._cumulative])
        idx = np.clip(np.searchsorted(cumulative, u, side='right') - 1, 0, len(left) - 1)
        v = u - cumulative[idx]
        a = (p1[idx] - p0[idx]) / (2.0 * widths[idx])
        # root of a*s^2 + p0*s - v = 0 in the cancellation-free form
        denom = p0[idx] + np.sqrt(np.maximum(p0[idx] ** 2 + 4.0 * a * v, 0.0))
        with np.errstate(invalid='ignore', divide='ignore'):
            s = np.where(denom > 0, 2.0 * v / denom, 0.0)
        return np.clip(left[idx] + np.clip(s, 0.0, widths[idx]), 0.0, 1.0)

    def _draw(self, rng, n):
        if self.is_radial:
            thetas = rng.random(n)
            if self.kind == self.UNIFORM:
                radii = rng.random(n)
            else:
                radii = self._inverse_radial_cdf(rng.random(n))
            return np.column_stack([thetas, radii])

        ceiling = float(self.table.max())
        accepted = []
        count = 0
        while count < n:
            batch = max(16, int(math.ceil((n - count) * ceiling * REJECTION_OVERSAMPLING)))
            candidates = rng.random((batch, 2))
            heights = rng.random(batch) * ceiling
            keep = candidates[heights < self.evaluate(candidates[:, 0], candidates[:, 1])]
            accepted.append(keep)
            count += len(keep)
        return np.concatenate(accepted)[:n] if accepted else np.empty((0, 2))

    def sample(self, n, seed):
        """Draw n independent requests; the same seed gives the same batch."""
        if int(n) != n or n < 0:
            raise ValidationError(f'Sample size must be a non-negative integer, got {n!r}', code='sample_size')
        rng = np.random.default_rng(seed)
        return SampleBatch(points=self._draw(rng, int(n)), seed=seed, density=self)

    def poisson_sample(self, intensity, seed):
        """Poissonised batch: the size itself is Poisson(intensity)."""
        if not math.isfinite(intensity) or intensity < 0:
            raise ValidationError(f'Intensity must be finite and non-negative, got {intensity!r}', code='intensity')
        rng = np.random.default_rng(seed)
        n = int(rng.poisson(intensity))
        return SampleBatch(points=self._draw(rng, n), seed=seed, density=self)


@dataclass
class SampleBatch:
    """An ordered batch of requests; row i is (theta_i, r_i)."""
    points: np.ndarray
    seed: object = None
    density: Density = field(default=None, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        theta, r = self.points[i]
        return DiskPoint(theta, r)

    def __iter__(self):
        return (DiskPoint(theta, r) for theta, r in self.points)

    @property
    def thetas(self):
        return self.points[:, 0]

    @property
    def radii(self):
        return self.points[:, 1]

    def to_frame(self):
        return pd.DataFrame({'theta': self.thetas, 'r': self.radii})

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')

    @classmethod
    def from_csv(cls, path, model=None):
        """Load a theta,r batch; with a seek model the batch must be in general position."""
        try:
            frame = pd.read_csv(path, float_precision='round_trip')
        except (OSError, pd.errors.ParserError) as exc:
            raise ValidationError(f'Cannot read request batch {path}: {exc}', code='batch_file')
        if list(frame.columns[:2]) != ['theta', 'r']:
            raise ValidationError(f'{path}: expected header "theta,r"', code='batch_file')
        points = frame[['theta', 'r']].to_numpy(dtype=float)
        if np.any(~np.isfinite(points)) or np.any((points[:, 0] < 0) | (points[:, 0] >= 1)) \
                or np.any((points[:, 1] < 0) | (points[:, 1] > 1)):
            raise ValidationError(f'{path}: requests must lie in [0,1) x [0,1]', code='batch_file')
        if model is not None:
            pair = general_position_check(points, model)
            if pair is not None:
                raise GeneralPositionError(pair, f'{path}: requests {pair[0]} and {pair[1]} are not in general position')
        return cls(points=points)


def read_document(path):
    """Read a JSON or YAML document, chosen by suffix."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f'Cannot read {path}: {exc}', code='document')
    try:
        if path.suffix.lower() in ('.yaml', '.yml'):
            return yaml.safe_load(text)
        return json.loads(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise ValidationError(f'Cannot parse {path}: {exc}', code='document')


def load_density(source):
    """A Density from 'uniform', a spec dict, or a JSON/YAML spec file path."""
    if isinstance(source, Density):
        return source
    if isinstance(source, dict):
        return Density.from_spec(source)
    if source in (None, '', Density.UNIFORM):
        return Density.uniform()
    return Density.from_spec(read_document(source))


def dump_density(density, path):
    path = Path(path)
    spec = density.to_spec()
    if path.suffix.lower() in ('.yaml', '.yml'):
        path.write_text(yaml.safe_dump(spec, sort_keys=True))
    else:
        path.write_text(json.dumps(spec, indent=2, sort_keys=True))
    return path
