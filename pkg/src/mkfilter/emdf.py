"""Empirical metric distribution functions.

For a center ``u`` and a second point ``v``, the empirical metric
distribution function is the fraction of sample points lying in the closed
ball around ``u`` of radius ``d(u, v)``.  Everything here works from one row
of a distance matrix, held in a :class:`DistanceProfile`.
"""
from dataclasses import dataclass

import numpy as np

from .data import as_labels
from .exceptions import EmptyClass
from .metrics import validate_distance_matrix


@dataclass(frozen=True)
class DistanceProfile:
    """Distances from one center to every sample, with their labels.

    ``sort_order`` sorts ``radii`` ascending; equal radii keep ascending
    sample order.
    """

    center_index: int
    radii: np.ndarray
    class_of: np.ndarray
    sort_order: np.ndarray


def build_profiles(D, labels):
    """One :class:`DistanceProfile` per row of the distance matrix ``D``."""
    D = validate_distance_matrix(D)
    y = as_labels(labels)
    if y.size != D.shape[0]:
        raise ValueError(f"{y.size} labels for a {D.shape[0]}x{D.shape[0]} distance matrix")
    order = np.argsort(D, axis=1, kind="stable")
    return [DistanceProfile(i, D[i].copy(), y.copy(), order[i]) for i in range(D.shape[0])]


def emdf_value(profile, class_filter, radius):
    """Fraction of (filtered) samples within ``radius`` of the profile's center.

    Parameters
    ----------
    profile : DistanceProfile
    class_filter : {+1, -1, None}
        Restrict both counts to one class; ``None`` uses every sample.
    radius : float
        Closed-ball radius; a sample at exactly this distance is inside.
    """
    if class_filter is None:
        mask = np.ones(profile.radii.size, dtype=bool)
    else:
        mask = profile.class_of == class_filter
        if not mask.any():
            raise EmptyClass(f"no samples with label {class_filter}")
    inside = np.count_nonzero(mask & (profile.radii <= radius))
    return inside / np.count_nonzero(mask)
