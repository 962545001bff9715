"""
Peeling a partially ordered batch into layers of minimal elements.

Layer 1 holds the minimal elements; layer i holds those minimal once layers
1..i-1 are gone, so the depth is the length of the longest chain. The plane
order is peeled by patience sorting; the vertical order on the cylinder is
peeled by patience sorting a finite band of rotated lifts.
"""
import logging
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from geometry.coordinates import (
    OrderKind, as_coordinates, comparability_matrix, require_general_position, rotate_array,
)
from geometry.exceptions import GeneralPositionError

logger = logging.getLogger(__name__)

# peeling rejects exact ties only; near ties are checked when a batch is loaded
EXACT_TIES = 0.0


@dataclass(frozen=True)
class PeelLayers:
    """
    layer_of[i] is the 1-based layer of request i; pred[i] is a request of
    the previous layer below it (-1 on layer 1).
    """
    layer_of: np.ndarray
    pred: np.ndarray

    def __post_init__(self):
        for name in ('layer_of', 'pred'):
            arr = np.array(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.layer_of)

    @property
    def depth(self):
        return int(self.layer_of.max()) if len(self.layer_of) else 0

    @property
    def layers(self):
        """Request indices of each layer, ascending."""
        if not len(self.layer_of):
            return []
        order = np.argsort(self.layer_of, kind='stable')
        bounds = np.searchsorted(self.layer_of[order], np.arange(1, self.depth + 2))
        return [order[bounds[i]:bounds[i + 1]] for i in range(self.depth)]

    def layer_sizes(self):
        return np.bincount(self.layer_of, minlength=self.depth + 1)[1:]


def peel_oracle(points, order, model=None):
    """
    Reference peeling by repeated extraction of minimal elements, O(n^2) memory.

    pred is the smallest-index element of the previous layer below each point.
    """
    arr = as_coordinates(points)
    n = len(arr)
    if n == 0:
        return PeelLayers(layer_of=[], pred=[])
    require_general_position(arr, order, model, tie_epsilon=EXACT_TIES)

    below = comparability_matrix(arr, order, model)
    np.fill_diagonal(below, False)
    layer_of = np.zeros(n, dtype=np.int64)
    pred = np.full(n, -1, dtype=np.int64)
    remaining = np.ones(n, dtype=bool)
    layer = 0
    previous = np.empty(0, dtype=np.int64)
    while remaining.any():
        layer += 1
        blocked = below[remaining].any(axis=0)
        minimal = np.flatnonzero(remaining & ~blocked)
        layer_of[minimal] = layer
        if previous.size:
            pred[minimal] = previous[below[np.ix_(previous, minimal)].argmax(axis=0)]
        remaining[minimal] = False
        previous = minimal
    return PeelLayers(layer_of=layer_of, pred=pred)


def patience_peel(points):
    """
    Peel points of the plane under the componentwise order.

    Points are dealt by increasing x onto piles whose tops have increasing y;
    each point goes on the leftmost pile with a top above it. The pile number
    is the layer and the top of the previous pile is a predecessor.
    """
    arr = as_coordinates(points)
    n = len(arr)
    for column in (0, 1):
        values = arr[:, column]
        order = np.argsort(values, kind='stable')
        dup = np.flatnonzero(np.diff(values[order]) == 0)
        if dup.size:
            i, j = sorted((int(order[dup[0]]), int(order[dup[0] + 1])))
            raise GeneralPositionError((i, j), f'Points {i} and {j} share a coordinate')

    layer_of = np.zeros(n, dtype=np.int64)
    pred = np.full(n, -1, dtype=np.int64)
    tops_y = []
    tops_idx = []
    ys = arr[:, 1]
    for idx in np.argsort(arr[:, 0], kind='stable').tolist():
        y = ys[idx]
        pile = bisect_left(tops_y, y)
        if pile == len(tops_y):
            tops_y.append(y)
            tops_idx.append(idx)
        else:
            tops_y[pile] = y
            tops_idx[pile] = idx
        layer_of[idx] = pile + 1
        if pile:
            pred[idx] = tops_idx[pile - 1]
    return PeelLayers(layer_of=layer_of, pred=pred)


def peel_cylinder_ver(points, model):
    """
    Peel requests on the cylinder under the vertical order.

    Every lift within ceil(1/c)+1 rotations is rotated into the plane after
    rescaling time by c; the layer of the unshifted copy in that band equals
    the layer on the cylinder.
    """
    arr = as_coordinates(points)
    n = len(arr)
    if n == 0:
        return PeelLayers(layer_of=[], pred=[])
    require_general_position(arr, OrderKind.VER_CYLINDER, model, tie_epsilon=EXACT_TIES)

    bound = model.lift_bound
    ks = np.arange(-bound, bound + 1)
    ts = model.c * (arr[:, 0][None, :] + ks[:, None]).ravel()
    rs = np.tile(arr[:, 1], len(ks))
    owners = np.tile(np.arange(n), len(ks))
    xs, ys = rotate_array(ts, rs)
    band = patience_peel(np.column_stack([xs, ys]))

    home = slice(bound * n, (bound + 1) * n)
    layer_of = band.layer_of[home]
    band_pred = band.pred[home]
    pred = np.where(band_pred >= 0, owners[np.maximum(band_pred, 0)], -1)
    logger.debug('Peeled %d requests into %d layers (c=%s)', n, int(layer_of.max()), model.c)
    return PeelLayers(layer_of=layer_of, pred=pred)


def peel(points, order, model=None):
    if order == OrderKind.INC_PLANE:
        return patience_peel(points)
    if order == OrderKind.VER_CYLINDER:
        return peel_cylinder_ver(points, model)
    return peel_oracle(points, order, model)


def longest_chain(layers):
    """A longest chain, bottom to top, following predecessor links from the deepest layer."""
    if layers.depth == 0:
        return []
    current = int(np.flatnonzero(layers.layer_of == layers.depth)[0])
    chain = [current]
    while layers.pred[current] >= 0:
        current = int(layers.pred[current])
        chain.append(current)
    return chain[::-1]


def lis_length(perm):
    """Length of the longest increasing subsequence of a permutation of 1..n."""
    values = np.asarray(perm)
    n = len(values)
    if n == 0:
        return 0
    if values.ndim != 1 or not np.array_equal(np.sort(values), np.arange(1, n + 1)):
        raise ValidationError('lis_length expects a permutation of 1..n', code='permutation')
    return patience_peel(np.column_stack([np.arange(n, dtype=float), values.astype(float)])).depth
