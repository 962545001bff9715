"""
Variational predictions for the peel depth.

Two length functionals are maximised on grids:

* the increasing-path functional 2 * integral of sqrt(phi'(x) q(x, phi(x))) dx
  over nondecreasing curves of the square, whose maximum is the limit of
  LIS / sqrt(n) for n points drawn from q;
* the vertical functional sqrt(2/c) * integral of
  sqrt(p(psi(r), r) (1 - c^2 psi'(r)^2)) dr over slope-bounded curves of the
  cylinder, whose maximum is the limit of depth / sqrt(n) for the disk.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

from density.distributions import Density, trial_seed
from geometry.coordinates import SQRT2
from peeling.layers import patience_peel

logger = logging.getLogger(__name__)

MONOTONE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CurveOnGrid:
    """A curve sampled at increasing abscissae (x for phi, r for psi)."""
    xs: np.ndarray
    values: np.ndarray
    kind: str = 'monotone'

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if xs.ndim != 1 or xs.shape != values.shape or len(xs) < 2:
            raise ValidationError('A curve needs matching abscissae and values, at least two of each', code='curve')
        if np.any(np.diff(xs) <= 0):
            raise ValidationError('Curve abscissae must increase strictly', code='curve')
        object.__setattr__(self, 'xs', xs)
        object.__setattr__(self, 'values', values)

    def is_monotone(self):
        return bool(np.all(np.diff(self.values) >= -MONOTONE_TOLERANCE))

    def max_slope(self):
        return float(np.max(np.abs(np.diff(self.values) / np.diff(self.xs))))


@dataclass(frozen=True)
class AsymptoticPrediction:
    m: float
    method: str
    maximizer: CurveOnGrid = None
    extras: dict = field(default_factory=dict)


def _density_callable(q):
    if isinstance(q, Density):
        return q.evaluate
    if callable(q):
        return q
    raise ValidationError(f'Expected a Density or a callable q(x, y), got {q!r}', code='density')


def dz_functional(phi, q):
    """Segment-wise value of the increasing-path functional on a sampled curve."""
    if not phi.is_monotone():
        raise ValidationError('The increasing-path functional needs a nondecreasing curve', code='not_monotone')
    q = _density_callable(q)
    dx = np.diff(phi.xs)
    dphi = np.clip(np.diff(phi.values), 0.0, None)
    mid_x = (phi.xs[:-1] + phi.xs[1:]) / 2.0
    mid_y = (phi.values[:-1] + phi.values[1:]) / 2.0
    weights = np.asarray(q(mid_x, mid_y), dtype=float)
    return float(2.0 * np.sum(np.sqrt(dx * dphi * np.clip(weights, 0.0, None))))


def maximize_dz(q, m=200, w=8, a=1.0):
    """
    Grid dynamic programme for the increasing-path functional on [0, a]^2.

    Moves go from node (i, j) to (i + da, j + db) with 1 <= da, db <= w and
    weigh 2 h sqrt(da db q(midpoint)); flat and vertical unit moves weigh 0.
    """
    if m < 1 or w < 1 or a <= 0:
        raise ValidationError('maximize_dz needs m >= 1, w >= 1 and a > 0', code='grid')
    q = _density_callable(q)
    h = a / m
    half = np.arange(2 * m + 1) * (h / 2.0)
    # q on the half-grid: every move midpoint is a half-grid node
    table = np.clip(np.asarray(q(half[:, None], half[None, :]), dtype=float), 0.0, None)

    value = np.full((m + 1, m + 1), -np.inf)
    move_a = np.zeros((m + 1, m + 1), dtype=np.int64)
    move_b = np.zeros((m + 1, m + 1), dtype=np.int64)
    cols = np.arange(m + 1)
    for i in range(m + 1):
        row = np.full(m + 1, -np.inf)
        row_a = np.zeros(m + 1, dtype=np.int64)
        row_b = np.zeros(m + 1, dtype=np.int64)
        if i == 0:
            row[0] = 0.0
        for da in range(1, min(w, i) + 1):
            previous = value[i - da]
            better = previous > row
            row = np.where(better, previous, row)
            row_a = np.where(better, da, row_a)
            row_b = np.where(better, 0, row_b)
            for db in range(1, min(w, m) + 1):
                j = cols[db:]
                candidate = previous[j - db] + 2.0 * h * np.sqrt(da * db * table[2 * i - da, 2 * j - db])
                better = candidate > row[j]
                row[j] = np.where(better, candidate, row[j])
                row_a[j] = np.where(better, da, row_a[j])
                row_b[j] = np.where(better, db, row_b[j])
        for j in range(1, m + 1):
            if row[j - 1] > row[j]:
                row[j], row_a[j], row_b[j] = row[j - 1], 0, 1
        value[i], move_a[i], move_b[i] = row, row_a, row_b

    nodes = [(m, m)]
    i, j = m, m
    while (i, j) != (0, 0):
        da, db = move_a[i, j], move_b[i, j]
        i, j = i - da, j - db
        nodes.append((i, j))
    nodes.reverse()
    curve_x, curve_y = [], []
    for i, j in nodes:
        if curve_x and curve_x[-1] == i:
            curve_y[-1] = j
        else:
            curve_x.append(i)
            curve_y.append(j)
    grid = np.arange(m + 1)
    phi = CurveOnGrid(xs=grid * h, values=np.interp(grid, curve_x, curve_y) * h)
    logger.debug('maximize_dz: m=%d w=%d value=%.6f', m, w, value[m, m])
    return AsymptoticPrediction(m=float(value[m, m]), method='grid_dp', maximizer=phi)


def analytic_m_radial(density, model):
    """Closed form for radial densities: sqrt(2/c) times the integral of sqrt(p)."""
    if not density.is_radial:
        raise ValidationError('The closed form needs a radial density', code='not_radial')
    return math.sqrt(2.0 / model.c) * density.integral_sqrt_radial()


def vertical_functional(psi, density, model):
    """Segment-wise value of the vertical functional on a slope-bounded curve psi(r)."""
    dr = np.diff(psi.xs)
    dpsi = np.diff(psi.values)
    room = dr ** 2 - (model.c * dpsi) ** 2
    if np.any(room < -1e-12):
        raise ValidationError(f'Curve slope exceeds 1/c = {1 / model.c}', code='slope')
    mid_theta = np.mod((psi.values[:-1] + psi.values[1:]) / 2.0, 1.0)
    mid_r = (psi.xs[:-1] + psi.xs[1:]) / 2.0
    p = np.asarray(_density_callable(density)(mid_theta, mid_r), dtype=float)
    return float(math.sqrt(2.0 / model.c) * np.sum(np.sqrt(np.clip(p, 0.0, None) * np.clip(room, 0.0, None))))


def maximize_vertical_functional(density, model, grid=200, theta_grid=None):
    """
    Grid dynamic programme for the vertical functional.

    One radial step per stage; from angle node i the curve may shift by s
    nodes with |s| dtheta <= dr / c. The unshifted move is tried first and
    only strict improvements replace it, so a density that ignores the angle
    yields a vertical maximiser.
    """
    theta_grid = theta_grid or grid
    if grid < 1 or theta_grid < 1:
        raise ValidationError('Grid sizes must be positive', code='grid')
    density_fn = _density_callable(density)
    dr, dtheta = 1.0 / grid, 1.0 / theta_grid
    max_shift = int(math.floor(dr / (model.c * dtheta) + 1e-12))
    shifts = [0] + [s for k in range(1, max_shift + 1) for s in (k, -k)]

    half_theta = np.arange(2 * theta_grid) * (dtheta / 2.0)
    mid_r = (np.arange(grid) + 0.5) * dr
    table = np.clip(np.asarray(density_fn(half_theta[:, None], mid_r[None, :]), dtype=float), 0.0, None)
    scale = math.sqrt(2.0 / model.c)
    starts = np.arange(theta_grid)

    value = np.zeros(theta_grid)
    choice = np.zeros((grid, theta_grid), dtype=np.int64)
    for j in range(grid):
        best = np.full(theta_grid, -np.inf)
        best_shift = np.zeros(theta_grid, dtype=np.int64)
        for s in shifts:
            room = dr ** 2 - (model.c * s * dtheta) ** 2
            # arriving at node i' from i' - s
            origin = np.mod(starts - s, theta_grid)
            weight = scale * np.sqrt(table[np.mod(2 * origin + s, 2 * theta_grid), j] * room)
            candidate = value[origin] + weight
            better = candidate > best
            best = np.where(better, candidate, best)
            best_shift = np.where(better, s, best_shift)
        value, choice[j] = best, best_shift

    end = int(np.argmax(value))
    path = [end]
    for j in range(grid - 1, -1, -1):
        path.append(path[-1] - int(choice[j, np.mod(path[-1], theta_grid)]))
    path.reverse()
    psi = CurveOnGrid(xs=np.arange(grid + 1) * dr, values=np.asarray(path) * dtheta, kind='slope_bounded')
    logger.debug('maximize_vertical_functional: grid=%d value=%.6f', grid, value[end])
    return AsymptoticPrediction(m=float(value[end]), method='grid_dp', maximizer=psi)


def to_increasing_frame(psi, density, model):
    """
    Push a slope-bounded cylinder curve through the time rescaling and the
    45 degree rotation. Returns the nondecreasing image curve and the density
    q(x, y) of the rotated frame, so that dz_functional on the image equals
    vertical_functional on psi.
    """
    density_fn = _density_callable(density)
    t = model.c * psi.values
    xs = (psi.xs + t) / SQRT2
    ys = (psi.xs - t) / SQRT2

    def q(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        r = np.clip((x + y) / SQRT2, 0.0, 1.0)
        theta = np.mod((x - y) / SQRT2 / model.c, 1.0)
        return np.asarray(density_fn(theta, r), dtype=float) / model.c

    return CurveOnGrid(xs=xs, values=ys), q


def monte_carlo_lis(q, n, trials, seed):
    """Average longest increasing run of n points drawn from q, divided by sqrt(n)."""
    if n < 1 or trials < 1:
        raise ValidationError('monte_carlo_lis needs n >= 1 and trials >= 1', code='monte_carlo')
    density = q if isinstance(q, Density) else Density.from_spec(q)
    ratios = np.array([
        patience_peel(density.sample(n, seed=trial_seed(seed, n, trial)).points).depth / math.sqrt(n)
        for trial in range(trials)
    ])
    stderr = float(ratios.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float('nan')
    return AsymptoticPrediction(m=float(ratios.mean()), method='monte_carlo', extras={'stderr': stderr, 'trials': trials})
