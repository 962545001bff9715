"""
Tours that serve a whole batch: the modified ABZ tour, the ABZ heuristic and
an exact optimum for small batches.

A tour starts on the outer edge (r = 0) at time 0, visits a lift of every
request along a horizontal chain and ends back at r = 0 at an integer time k,
the number of rotations used.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from django.core.exceptions import ValidationError

from geometry.coordinates import StripPoint, as_coordinates, seek_time_matrix
from peeling.layers import peel_cylinder_ver

from .curves import CHAIN_TOLERANCE, LayerCurves

logger = logging.getLogger(__name__)

EXACT_LIMIT = 9
SANDWICH_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Tour:
    """
    Visit times and radii including the start (0, 0) and the end (k, 0).
    request_ids and layers are -1 and 0 at the two endpoints.
    """
    times: np.ndarray
    radii: np.ndarray
    request_ids: np.ndarray
    layers: np.ndarray
    k: int
    algorithm: str

    def __len__(self):
        return len(self.times)

    @property
    def visits(self):
        return [StripPoint(t, r) for t, r in zip(self.times, self.radii)]

    @property
    def service_times(self):
        """Visit time of every request, indexed by request id."""
        ids = self.request_ids[1:-1]
        out = np.empty(len(ids))
        out[ids] = self.times[1:-1]
        return out

    def to_frame(self):
        return pd.DataFrame({
            't': self.times,
            'r': self.radii,
            'wrapped_theta': np.mod(self.times, 1.0),
            'layer': self.layers,
            'request_id': self.request_ids,
        })


def _finish(times, radii, ids, layers, model, algorithm):
    last_t, last_r = (times[-1], radii[-1]) if len(times) else (0.0, 0.0)
    k = max(1, math.ceil(last_t + last_r / model.c))
    return Tour(
        times=np.concatenate([[0.0], times, [float(k)]]),
        radii=np.concatenate([[0.0], radii, [0.0]]),
        request_ids=np.concatenate([[-1], ids, [-1]]).astype(np.int64),
        layers=np.concatenate([[0], layers, [0]]).astype(np.int64),
        k=k,
        algorithm=algorithm,
    )


def _require_requests(points):
    arr = as_coordinates(points)
    if len(arr) == 0:
        raise ValidationError('A tour needs at least one request', code='empty_batch')
    return arr


def modified_abz(batch, model, layers=None):
    """
    Serve layer i during rotation i-1 starting from where L_i crosses J.

    Layer i visits its requests whose lifts fall in [t_i, t_i + 1), shifted
    by i - 1 rotations; t_i is the entry time on J.
    """
    arr = _require_requests(batch)
    if layers is None:
        layers = peel_cylinder_ver(arr, model)
    curves = LayerCurves.from_layers(arr, layers, model)
    times, radii, ids, layer_tags = [], [], [], []
    for i, (ordered, entry) in enumerate(zip(curves.orders, curves.entry_times)):
        thetas = arr[ordered, 0]
        lifts = thetas + np.ceil(entry - thetas)
        visit = np.argsort(lifts, kind='stable')
        times.append(lifts[visit] + i)
        radii.append(arr[ordered[visit], 1])
        ids.append(ordered[visit])
        layer_tags.append(np.full(len(ordered), i + 1))
    tour = _finish(np.concatenate(times), np.concatenate(radii), np.concatenate(ids),
                   np.concatenate(layer_tags), model, 'modified_abz')
    logger.debug('modified ABZ: %d requests, %d layers, k=%d', len(arr), curves.depth, tour.k)
    return tour


def abz(batch, model, layers=None):
    """
    Greedy layer-by-layer tour: enter each layer at its earliest reachable
    lift, then follow the layer's chain for one rotation.
    """
    arr = _require_requests(batch)
    if layers is None:
        layers = peel_cylinder_ver(arr, model)
    t_prev, r_prev = 0.0, 0.0
    times, radii, ids, layer_tags = [], [], [], []
    for i, members in enumerate(layers.layers):
        thetas, rs = arr[members, 0], arr[members, 1]
        lifts = thetas + np.ceil(t_prev + np.abs(rs - r_prev) / model.c - thetas)
        start = int(np.argmin(lifts))
        offsets = np.mod(thetas - thetas[start], 1.0)
        visit = np.argsort(offsets, kind='stable')
        layer_times = lifts[start] + offsets[visit]
        times.append(layer_times)
        radii.append(rs[visit])
        ids.append(members[visit])
        layer_tags.append(np.full(len(members), i + 1))
        t_prev, r_prev = layer_times[-1], rs[visit][-1]
    tour = _finish(np.concatenate(times), np.concatenate(radii), np.concatenate(ids),
                   np.concatenate(layer_tags), model, 'abz')
    logger.debug('ABZ: %d requests, k=%d', len(arr), tour.k)
    return tour


def exact_service_time(batch, model):
    """
    Optimal number of rotations for a small batch.

    Subset dynamic programming over (visited set, last request) with the
    earliest arrival time; arrival is monotone in departure time, so this is
    the minimum over all visit orders.
    """
    arr = _require_requests(batch)
    n = len(arr)
    if n > EXACT_LIMIT:
        raise ValidationError(
            f'Exact service time is limited to {EXACT_LIMIT} requests (got {n}); '
            'use the sandwich bounds from the peel depth for larger batches',
            code='too_many_requests',
        )
    seek = seek_time_matrix(arr[:, 0], arr[:, 1], model)
    origin = seek_time_matrix(np.concatenate([[0.0], arr[:, 0]]), np.concatenate([[0.0], arr[:, 1]]), model)[0, 1:]
    full = (1 << n) - 1
    arrival = np.full((1 << n, n), np.inf)
    for j in range(n):
        arrival[1 << j, j] = origin[j]
    for mask in range(1, full):
        best = (arrival[mask][:, None] + seek).min(axis=0)
        for j in range(n):
            bit = 1 << j
            if not mask & bit and best[j] < arrival[mask | bit, j]:
                arrival[mask | bit, j] = best[j]
    finish = arrival[full] + arr[:, 1] / model.c
    return max(1, math.ceil(float(finish.min())))


def validate_tour(tour, batch, model, tolerance=CHAIN_TOLERANCE):
    """True when the tour is a horizontal chain from (0,0) to (k,0) visiting each request once."""
    arr = as_coordinates(batch)
    times, radii = np.asarray(tour.times, dtype=float), np.asarray(tour.radii, dtype=float)
    if len(times) != len(arr) + 2 or len(radii) != len(times):
        logger.debug('Tour has %d visits for %d requests', len(times) - 2, len(arr))
        return False
    if times[0] != 0.0 or radii[0] != 0.0 or radii[-1] != 0.0 or times[-1] != tour.k or tour.k < 1:
        logger.debug('Tour endpoints are wrong')
        return False
    dt = np.diff(times)
    if np.any(dt < -tolerance) or np.any(model.c * dt < np.abs(np.diff(radii)) - tolerance):
        logger.debug('Tour is not a horizontal chain at visit %d',
                     int(np.argmax((dt < -tolerance) | (model.c * dt < np.abs(np.diff(radii)) - tolerance))))
        return False
    ids = np.asarray(tour.request_ids[1:-1])
    if not np.array_equal(np.sort(ids), np.arange(len(arr))):
        logger.debug('Tour does not visit every request exactly once')
        return False
    drift = np.abs(np.mod(times[1:-1], 1.0) - arr[ids, 0])
    drift = np.minimum(drift, 1.0 - drift)
    if np.any(drift > tolerance) or np.any(np.abs(radii[1:-1] - arr[ids, 1]) > tolerance):
        logger.debug('Tour visits do not sit on lifts of their requests')
        return False
    return True


@dataclass(frozen=True)
class SandwichReport:
    n: int
    depth: int
    k_exact: object
    k_modified: int
    k_abz: int
    lower: float
    upper: float
    holds: bool

    def as_dict(self):
        return {
            'n': self.n, 'depth': self.depth, 'k_exact': self.k_exact, 'k_modified': self.k_modified,
            'k_abz': self.k_abz, 'lower': self.lower, 'upper': self.upper, 'holds': self.holds,
        }


def sandwich_bounds(depth, model):
    return depth - 1 - 1 / model.c, depth + 1 + 2 / model.c


def sandwich_check(batch, model):
    """
    Compare the exact optimum (when affordable) and both tours with
    M - 1 - 1/c <= k <= M + 1 + 2/c, M the peel depth.
    """
    arr = _require_requests(batch)
    layers = peel_cylinder_ver(arr, model)
    lower, upper = sandwich_bounds(layers.depth, model)
    k_modified = modified_abz(arr, model, layers).k
    k_abz = abz(arr, model, layers).k
    k_exact = exact_service_time(arr, model) if len(arr) <= EXACT_LIMIT else None

    holds = lower - SANDWICH_TOLERANCE <= k_modified <= upper + SANDWICH_TOLERANCE
    holds &= k_abz <= upper + SANDWICH_TOLERANCE
    if k_exact is not None:
        holds &= lower - SANDWICH_TOLERANCE <= k_exact <= upper + SANDWICH_TOLERANCE
        holds &= k_exact <= min(k_modified, k_abz)
    if not holds:
        logger.warning('Sandwich bounds violated: M=%d exact=%s modified=%d abz=%d c=%s',
                       layers.depth, k_exact, k_modified, k_abz, model.c)
    return SandwichReport(
        n=len(arr), depth=layers.depth, k_exact=k_exact, k_modified=k_modified, k_abz=k_abz,
        lower=lower, upper=upper, holds=bool(holds),
    )

