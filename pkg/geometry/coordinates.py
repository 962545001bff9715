"""
Coordinates of the disk model.

A request lives on the cylinder C = [0,1) x [0,1] (angle, radius). Time on
the rotating disk is the strip U = R x [0,1]; a request is available at every
lift (theta + k, r). The head moves radially at rate c per rotation, which
gives the two orders used throughout:

* horizontal: q1 <= q2 when q2 is reachable from q1 in time,
* vertical: the complementary order, whose antichains are the horizontal chains.

Rotating the strip by 45 degrees (after rescaling time by c) turns the
vertical order into the componentwise order of the plane.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError
from django.db import models

from .exceptions import GeneralPositionError

logger = logging.getLogger(__name__)

TIE_EPSILON = 1e-9
SQRT2 = math.sqrt(2.0)
_RADIUS_SLACK = 1e-12


class OrderKind(models.TextChoices):
    HOR_STRIP = 'hor_strip', 'Horizontal order on the strip'
    VER_STRIP = 'ver_strip', 'Vertical order on the strip'
    VER_CYLINDER = 'ver_cylinder', 'Vertical order on the cylinder'
    INC_PLANE = 'inc_plane', 'Componentwise order on the plane'


def _check_radius(r):
    if not math.isfinite(r) or r < -_RADIUS_SLACK or r > 1.0 + _RADIUS_SLACK:
        raise ValidationError(f'Radius {r!r} is outside [0, 1]', code='radius')
    return min(max(r, 0.0), 1.0)


@dataclass(frozen=True)
class SeekModel:
    """Linear seek function f(theta) = c * theta."""
    c: float = 1.0

    def __post_init__(self):
        if not isinstance(self.c, (int, float)) or not math.isfinite(self.c) or self.c <= 0:
            raise ValidationError(f'Seek slope c must be a positive number, got {self.c!r}', code='seek_slope')
        object.__setattr__(self, 'c', float(self.c))

    @property
    def shift_bound(self):
        return math.ceil(1.0 / self.c)

    @property
    def lift_bound(self):
        # copies k in [-K, K] cover every vertical chain through the k = 0 copy
        return self.shift_bound + 1

    def reach(self, dt):
        return self.c * dt


@dataclass(frozen=True)
class DiskPoint:
    theta: float
    r: float

    def __post_init__(self):
        theta = float(self.theta)
        if not math.isfinite(theta) or not 0.0 <= theta < 1.0:
            raise ValidationError(f'Angle {self.theta!r} is outside [0, 1)', code='angle')
        object.__setattr__(self, 'theta', theta)
        object.__setattr__(self, 'r', _check_radius(float(self.r)))

    def lift(self, k=0):
        return StripPoint(self.theta + k, self.r)


@dataclass(frozen=True)
class StripPoint:
    t: float
    r: float

    def __post_init__(self):
        t = float(self.t)
        if not math.isfinite(t):
            raise ValidationError(f'Time {self.t!r} is not finite', code='time')
        object.__setattr__(self, 't', t)
        object.__setattr__(self, 'r', _check_radius(float(self.r)))

    def project(self):
        return DiskPoint(wrap(self.t), self.r)


@dataclass(frozen=True)
class PlanePoint:
    x: float
    y: float


def wrap(t):
    """Fractional part of t, always in [0, 1)."""
    t = float(t)
    if not math.isfinite(t):
        raise ValidationError(f'Cannot wrap non-finite value {t!r}', code='wrap')
    frac = t % 1.0
    # tiny negatives round up to exactly 1.0
    return 0.0 if frac >= 1.0 else frac


def shift(q, k=1):
    """T^k: the same request k rotations later."""
    return StripPoint(q.t + k, q.r)


def seek_time(p, q, model):
    """Time to reach q from p starting at time theta_p, in rotations."""
    base = wrap(q.theta - p.theta)
    extra = math.ceil(abs(q.r - p.r) / model.c - base)
    return base + max(0, extra)


def seek_time_matrix(thetas, radii, model):
    """Vectorised seek_time between every ordered pair of requests."""
    thetas = np.asarray(thetas, dtype=float)
    radii = np.asarray(radii, dtype=float)
    base = np.mod(thetas[None, :] - thetas[:, None], 1.0)
    base[base >= 1.0] = 0.0
    extra = np.ceil(np.abs(radii[None, :] - radii[:, None]) / model.c - base)
    return base + np.maximum(extra, 0.0)


def leq_hor(q1, q2, model):
    dt = q2.t - q1.t
    return dt >= 0 and model.c * dt >= abs(q2.r - q1.r)


def leq_ver_strip(q1, q2, model):
    dr = q2.r - q1.r
    return dr >= 0 and model.c * abs(q2.t - q1.t) <= dr


def leq_ver_cyl(p1, p2, model):
    dr = p2.r - p1.r
    if dr < 0:
        return False
    dtheta = p2.theta - p1.theta
    bound = model.lift_bound
    return any(model.c * abs(dtheta + k) <= dr for k in range(-bound, bound + 1))


def leq_inc(z1, z2):
    return z1.x <= z2.x and z1.y <= z2.y


def rotate45(q):
    return PlanePoint((q.r + q.t) / SQRT2, (q.r - q.t) / SQRT2)


def unrotate45(z):
    return StripPoint((z.x - z.y) / SQRT2, (z.x + z.y) / SQRT2)


def scale_theta(p, model):
    """V_c: rescale the angular coordinate so the seek slope becomes 1."""
    t = p.theta if isinstance(p, DiskPoint) else p.t
    return StripPoint(model.c * t, p.r)


def rotate_array(ts, rs):
    """Vectorised rotate45 on coordinate arrays."""
    ts = np.asarray(ts, dtype=float)
    rs = np.asarray(rs, dtype=float)
    return (rs + ts) / SQRT2, (rs - ts) / SQRT2


def as_coordinates(points):
    """Accept an (n, 2) array, a SampleBatch or a sequence of points."""
    if hasattr(points, 'points'):
        points = points.points
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
    else:
        rows = []
        for p in points:
            if isinstance(p, DiskPoint):
                rows.append((p.theta, p.r))
            elif isinstance(p, StripPoint):
                rows.append((p.t, p.r))
            elif isinstance(p, PlanePoint):
                rows.append((p.x, p.y))
            else:
                rows.append(tuple(p))
        arr = np.asarray(rows, dtype=float).reshape(-1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError(f'Expected an (n, 2) array of points, got shape {arr.shape}', code='shape')
    return arr


def _first_close_pair(values, owners, eps):
    order = np.argsort(values, kind='stable')
    ordered = values[order]
    who = owners[order]
    gaps = np.diff(ordered)
    close = ((gaps < eps) | (gaps == 0)) & (who[1:] != who[:-1])
    hits = np.flatnonzero(close)
    if hits.size == 0:
        return None
    i, j = who[hits[0]], who[hits[0] + 1]
    return (int(min(i, j)), int(max(i, j)))


def find_tie(points, order, model=None, tie_epsilon=TIE_EPSILON):
    """
    Return the first pair of requests violating general position, or None.

    |c|dt + k| - |dr|| < eps is the same as a near-equality of r + c(t + k)
    or of r - c(t + k) between two copies, so sorting those coordinates
    finds every tie in O(n log n).
    """
    arr = as_coordinates(points)
    n = len(arr)
    if n < 2:
        return None
    if order == OrderKind.INC_PLANE:
        xs, ys = arr[:, 0], arr[:, 1]
        owners = np.arange(n)
        return _first_close_pair(xs, owners, tie_epsilon) or _first_close_pair(ys, owners, tie_epsilon)
    if model is None:
        raise ValidationError(f'Order {order} needs a seek model', code='order')
    bound = model.lift_bound if order == OrderKind.VER_CYLINDER else 0
    ks = np.arange(-bound, bound + 1)
    ts = (arr[:, 0][None, :] + ks[:, None]).ravel()
    rs = np.tile(arr[:, 1], len(ks))
    owners = np.tile(np.arange(n), len(ks))
    plus = rs + model.c * ts
    minus = rs - model.c * ts
    return _first_close_pair(plus, owners, tie_epsilon) or _first_close_pair(minus, owners, tie_epsilon)


def general_position_check(points, model, tie_epsilon=TIE_EPSILON):
    """None when the batch is in general position on the cylinder, else the offending pair."""
    pair = find_tie(points, OrderKind.VER_CYLINDER, model, tie_epsilon)
    if pair is not None:
        logger.debug('General position violated by pair %s', pair)
    return pair


def require_general_position(points, order, model=None, tie_epsilon=TIE_EPSILON):
    """
    Raise GeneralPositionError on the first tie.

    With tie_epsilon=0 only exact ties count: a sampled batch of 10^5
    requests has band gaps far below 1e-9 without being degenerate.
    """
    pair = find_tie(points, order, model, tie_epsilon)
    if pair is not None:
        raise GeneralPositionError(pair)


def comparability_matrix(points, order, model=None):
    """
    Boolean matrix with [i, j] true when point i <= point j.

    Strip and cylinder orders read rows as (t or theta, r); the plane order
    reads (x, y).
    """
    arr = as_coordinates(points)
    a, b = arr[:, 0], arr[:, 1]
    if order == OrderKind.INC_PLANE:
        return (a[:, None] <= a[None, :]) & (b[:, None] <= b[None, :])
    if model is None:
        raise ValidationError(f'Order {order} needs a seek model', code='order')
    dt = a[None, :] - a[:, None]
    dr = b[None, :] - b[:, None]
    if order == OrderKind.HOR_STRIP:
        return (dt >= 0) & (model.c * dt >= np.abs(dr))
    if order == OrderKind.VER_STRIP:
        return (dr >= 0) & (model.c * np.abs(dt) <= dr)
    if order == OrderKind.VER_CYLINDER:
        result = np.zeros(dt.shape, dtype=bool)
        bound = model.lift_bound
        for k in range(-bound, bound + 1):
            result |= model.c * np.abs(dt + k) <= dr
        return result & (dr >= 0)
    raise ValidationError(f'Unknown order {order!r}', code='order')
