"""
Layer and service profiles.

The fraction of requests peeled within the first tau * sqrt(n) layers (or
served within tau * sqrt(n) rotations) converges to a deterministic profile;
these helpers give the predicted profiles, the empirical step profiles and
the sup distance between the two.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from .functionals import analytic_m_radial

logger = logging.getLogger(__name__)

BISECTION_STEPS = 50


def height_radial(r, density, model):
    """Depth density accumulated from the edge to radius r, per sqrt(n)."""
    return math.sqrt(2.0 / model.c) * np.asarray(density.partial_integral_sqrt_radial(r))


def served_fraction_radial(tau, density, model):
    """
    Predicted fraction of requests in the first tau * sqrt(n) layers of a
    radial density: the radial mass inside the radius whose height is tau.
    """
    total = analytic_m_radial(density, model)
    tau = np.asarray(tau, dtype=float)
    clamped = np.clip(tau, 0.0, total)
    if np.any(clamped != tau):
        logger.warning('tau outside [0, %.6f] clamped', total)
    lo = np.zeros_like(clamped)
    hi = np.ones_like(clamped)
    for _ in range(BISECTION_STEPS):
        mid = (lo + hi) / 2.0
        below = height_radial(mid, density, model) < clamped
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = np.asarray(density.radial_cdf(hi))
    out = np.where(clamped >= total, 1.0, np.where(clamped <= 0, 0.0, out))
    return float(out) if out.ndim == 0 else out


def uniform_square_pile_profile(tau):
    """Fraction of uniform points of the square in the first tau * sqrt(n) piles, 0 <= tau <= 2."""
    tau = np.asarray(tau, dtype=float)
    if np.any(~np.isfinite(tau)) or np.any((tau < 0) | (tau > 2)):
        raise ValidationError('The pile profile is defined for 0 <= tau <= 2', code='tau')
    safe = np.where(tau > 0, tau, 1.0)
    out = np.where(tau > 0, safe ** 2 / 2.0 * np.log(2.0 / safe) + safe ** 2 / 4.0, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StepProfile:
    """Right-continuous step function: value fractions[k] from jumps[k] on, 0 before jumps[0]."""
    jumps: np.ndarray
    fractions: np.ndarray

    def __call__(self, tau):
        idx = np.searchsorted(self.jumps, np.asarray(tau, dtype=float), side='right') - 1
        return np.where(idx >= 0, self.fractions[np.maximum(idx, 0)], 0.0)

    def sup_distance(self, prediction, tau_max=None):
        """
        Sup over tau of |step(tau) - prediction(tau)| for a nondecreasing
        continuous prediction; attained at a jump from the left or the right.
        """
        taus = self.jumps if tau_max is None else np.minimum(self.jumps, tau_max)
        predicted = np.asarray(prediction(taus), dtype=float)
        left = np.concatenate([[0.0], self.fractions[:-1]])
        gaps = np.maximum(np.abs(self.fractions - predicted), np.abs(left - predicted))
        tail = 1.0 - self.fractions[-1] if len(self.fractions) else 1.0
        return float(max(gaps.max(initial=0.0), tail))


def empirical_layer_profile(layers, n=None):
    """Fraction of requests in layers 1..k, as a step function of k / sqrt(n)."""
    n = n or len(layers)
    if n <= 0:
        raise ValidationError('An empirical profile needs at least one request', code='empty_batch')
    counts = layers.layer_sizes()
    return StepProfile(jumps=np.arange(1, len(counts) + 1) / math.sqrt(n), fractions=np.cumsum(counts) / n)


def empirical_service_profile(tour, n=None):
    """Fraction of requests served by time tau * sqrt(n) along a tour."""
    times = np.sort(np.asarray(tour.times[1:-1], dtype=float))
    n = n or len(times)
    if n <= 0:
        raise ValidationError('An empirical profile needs at least one request', code='empty_batch')
    return StepProfile(jumps=times / math.sqrt(n), fractions=np.arange(1, len(times) + 1) / n)


def fine_constants(model):
    """Constants of the second-order correction band for the uniform density."""
    lower = 0.25 * (2.0 * model.c) ** (-1.0 / 6.0)
    return lower, 3.0 ** (2.0 / 3.0) * lower


def fine_asymptotics_band(n, model, scaled=False):
    """
    Band (A0 ln^(2/3) n, B0 ln^(2/3) n) for k - sqrt(2n/c); with scaled=True
    both ends carry the n^(1/6) factor of the correction term.
    """
    if n < 2:
        raise ValidationError('The correction band needs n >= 2', code='band')
    lower, upper = fine_constants(model)
    factor = math.log(n) ** (2.0 / 3.0)
    if scaled:
        factor *= n ** (1.0 / 6.0)
    return lower * factor, upper * factor
