"""
Layer curves on the strip.

The requests of one peel layer, lifted and sorted by angle, form a periodic
horizontal chain; joining them with straight segments gives L_i'. The layer
curve is L_i = max(L_i', L_{i-1}), i.e. the running maximum of the L_j'.
A tour enters layer i where L_i first meets the line J: r = c t.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from geometry.coordinates import StripPoint, as_coordinates

logger = logging.getLogger(__name__)

CHAIN_TOLERANCE = 1e-9


def layer_chain_order(points, model):
    """
    Indices of a vertical antichain in cyclic horizontal-chain order.

    Sorting by angle is the chain order; each consecutive pair (including the
    wrap from last to first lifted by one rotation) must be horizontally
    comparable.
    """
    arr = as_coordinates(points)
    order = np.argsort(arr[:, 0], kind='stable')
    if len(order) == 0:
        return order
    thetas = arr[order, 0]
    radii = arr[order, 1]
    gaps = np.diff(np.append(thetas, thetas[0] + 1.0))
    rises = np.abs(np.diff(np.append(radii, radii[0])))
    bad = np.flatnonzero(model.c * gaps < rises - CHAIN_TOLERANCE)
    if bad.size:
        i = int(order[bad[0]])
        j = int(order[(bad[0] + 1) % len(order)])
        raise ValidationError(
            f'Requests {i} and {j} are vertically comparable; the set is not an antichain',
            code='antichain',
        )
    return order


def first_crossing(thetas, radii, model):
    """
    Earliest t in [0, 1/c] where the periodic chain through (thetas, radii)
    meets J, i.e. the first zero of L'(t) - c t.

    L' has slopes in [-c, c], so L'(t) - c t is nonincreasing and its value
    at the breakpoints locates the crossing segment.
    """
    horizon = 1.0 / model.c
    copies = np.arange(-1, math.ceil(horizon) + 2)
    ts = (thetas[None, :] + copies[:, None]).ravel()
    rs = np.tile(radii, len(copies))
    gap = rs - model.c * ts
    hits = np.flatnonzero(gap <= 0)
    if hits.size == 0 or hits[0] == 0:
        return 0.0
    j = hits[0]
    left, right = gap[j - 1], gap[j]
    t = ts[j - 1] + left / (left - right) * (ts[j] - ts[j - 1])
    return float(min(max(t, 0.0), horizon))


@dataclass
class LayerCurves:
    """Chain orders, curve breakpoints and entry times of every layer."""
    model: object
    orders: list
    breakpoints: list
    entry_times: np.ndarray

    @classmethod
    def from_layers(cls, points, layers, model):
        arr = as_coordinates(points)
        orders, breakpoints, entries = [], [], []
        entry = 0.0
        for members in layers.layers:
            local = layer_chain_order(arr[members], model)
            ordered = members[local]
            thetas, radii = arr[ordered, 0], arr[ordered, 1]
            entry = max(entry, first_crossing(thetas, radii, model))
            orders.append(ordered)
            breakpoints.append((thetas, radii))
            entries.append(entry)
        return cls(model=model, orders=orders, breakpoints=breakpoints, entry_times=np.asarray(entries))

    @property
    def depth(self):
        return len(self.orders)

    def prime_values(self, i, ts):
        """L_i'(t) for a 1-based layer index."""
        thetas, radii = self.breakpoints[i - 1]
        xp = np.concatenate([[thetas[-1] - 1.0], thetas, [thetas[0] + 1.0]])
        fp = np.concatenate([[radii[-1]], radii, [radii[0]]])
        return np.interp(np.mod(np.asarray(ts, dtype=float), 1.0), xp, fp)

    def values_on_grid(self, ts):
        """Array of shape (depth, len(ts)) with L_i on the grid."""
        ts = np.asarray(ts, dtype=float)
        if not self.depth:
            return np.empty((0, len(ts)))
        primes = np.vstack([self.prime_values(i, ts) for i in range(1, self.depth + 1)])
        return np.maximum.accumulate(primes, axis=0)

    def entry_point(self, i):
        t = float(self.entry_times[i - 1])
        return StripPoint(t, self.model.c * t)
