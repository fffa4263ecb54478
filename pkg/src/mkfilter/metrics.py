"""Metrics on the supported object kinds.

Two object kinds carry their own geometry:

* empirical distributions on the real line, compared with the quadratic
  Wasserstein distance;
* symmetric positive-definite (SPD) matrices, compared with the Frobenius,
  Cholesky or Log-Cholesky distance.

A third kind, ``precomputed``, is a ready-made n x n distance matrix.

Squared differences are always accumulated left to right over coordinates so
that the single-pair functions and :func:`pairwise_distances` produce
bit-identical values.
"""
import enum
import math

import numpy as np

from .exceptions import (
    DimMismatch,
    InvalidDistanceMatrix,
    KindMismatch,
    NotPositiveDefinite,
)

SYMMETRY_TOL = 1e-10
PIVOT_TOL = 1e-12
DISTANCE_SYMMETRY_TOL = 1e-9


class MetricKind(str, enum.Enum):
    WASSERSTEIN = "wasserstein"
    FROBENIUS = "frobenius"
    CHOLESKY = "cholesky"
    LOG_CHOLESKY = "log_cholesky"
    PRECOMPUTED = "precomputed"


# object kind -> metrics it may be paired with
KIND_METRICS = {
    "distribution": (MetricKind.WASSERSTEIN,),
    "spd": (MetricKind.FROBENIUS, MetricKind.CHOLESKY, MetricKind.LOG_CHOLESKY),
    "precomputed": (MetricKind.PRECOMPUTED,),
}


def check_kind_metric(kind, metric):
    """Return ``metric`` as a :class:`MetricKind`, or raise KindMismatch."""
    if kind not in KIND_METRICS:
        raise KindMismatch(f"unknown object kind {kind!r}")
    try:
        metric = MetricKind(metric)
    except ValueError:
        raise KindMismatch(f"unknown metric {metric!r}") from None
    if metric not in KIND_METRICS[kind]:
        raise KindMismatch(f"metric {metric.value!r} cannot be used with {kind!r} objects")
    return metric


class EmpiricalDistribution:
    """Empirical distribution of m >= 1 real samples, kept sorted ascending."""

    def __init__(self, samples):
        x = np.array(samples, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("an empirical distribution needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x.sort()
        x.setflags(write=False)
        self.samples = x

    @property
    def m(self):
        return self.samples.size

    def __len__(self):
        return self.samples.size

    def __repr__(self):
        return f"EmpiricalDistribution(m={self.m})"


class SpdMatrix:
    """A validated symmetric positive-definite matrix.

    The lower Cholesky factor is computed once at construction and kept in
    ``chol``.
    """

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        self.chol = chol_lower(a)
        a.setflags(write=False)
        self.entries = a

    @property
    def dim(self):
        return self.entries.shape[0]

    def __repr__(self):
        return f"SpdMatrix(dim={self.dim})"


def _sq_sum(diff):
    """Sum of squares over the last axis, accumulated left to right."""
    acc = np.zeros(diff.shape[:-1])
    for k in range(diff.shape[-1]):
        acc = acc + diff[..., k] * diff[..., k]
    return acc


def _samples(x):
    if isinstance(x, EmpiricalDistribution):
        return x.samples
    return EmpiricalDistribution(x).samples


def wasserstein_empirical(a, b):
    """Quadratic Wasserstein distance between two empirical distributions.

    For equal sample sizes this is the order-statistic form
    ``sqrt(sum_l (a_(l) - b_(l))**2)``, i.e. the quantile integral scaled by
    the sample size m.  Unequal sizes integrate the two step quantile
    functions exactly over their merged breakpoints and scale by the
    geometric mean ``sqrt(m_a * m_b)``, which reduces to the equal-size
    convention when the sizes agree.

    Parameters
    ----------
    a, b : EmpiricalDistribution or array_like
        Samples; raw arrays are sorted on the fly.

    Returns
    -------
    float
    """
    xa = _samples(a)
    xb = _samples(b)
    ma, mb = xa.size, xb.size
    if ma == mb:
        return float(np.sqrt(_sq_sum(xa - xb)))
    L = math.lcm(ma, mb)
    ticks = np.union1d(np.arange(0, L + 1, L // ma), np.arange(0, L + 1, L // mb))
    left = ticks[:-1]
    widths = np.diff(ticks) / L
    # on (left/L, right/L] the quantile of a size-m sample is its floor(m*left/L)-th order statistic
    ia = left // (L // ma)
    ib = left // (L // mb)
    integral = float(np.sum(widths * (xa[ia] - xb[ib]) ** 2))
    return math.sqrt(math.sqrt(ma * mb) * integral)


def _as_matrix(x):
    if isinstance(x, SpdMatrix):
        return x.entries
    a = np.asarray(x, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def chol_lower(x):
    """Lower Cholesky factor ``L`` with ``L @ L.T == x``.

    Raises
    ------
    NotPositiveDefinite
        If ``x`` is not symmetric to within 1e-10 or a pivot (squared
        diagonal entry of ``L``) is at most 1e-12.
    """
    if isinstance(x, SpdMatrix):
        return x.chol
    return _chol_batch(_as_matrix(x)[None])[0]


def _chol_batch(a):
    """Cholesky factors of a stack of matrices of shape (n, m, m)."""
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    asym = np.abs(a - np.swapaxes(a, -1, -2)).max(axis=(-2, -1)) if a.size else np.zeros(0)
    if np.any(asym > SYMMETRY_TOL):
        i = int(np.argmax(asym > SYMMETRY_TOL))
        raise NotPositiveDefinite(f"matrix {i} is not symmetric (max deviation {asym[i]:.3g})")
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        L = None
    if L is not None:
        pivots = np.diagonal(L, axis1=-2, axis2=-1) ** 2
        bad = np.any(~(pivots > PIVOT_TOL), axis=-1)
        if not np.any(bad):
            return L
        i = int(np.argmax(bad))
    else:
        i = next(k for k in range(a.shape[0]) if not _is_pd(a[k]))
    raise NotPositiveDefinite(f"matrix {i} is not positive definite")


def _is_pd(a):
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(np.diag(L) ** 2 > PIVOT_TOL))


def _pair(a, b):
    a = a if isinstance(a, SpdMatrix) else SpdMatrix(_as_matrix(a))
    b = b if isinstance(b, SpdMatrix) else SpdMatrix(_as_matrix(b))
    if a.dim != b.dim:
        raise DimMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    return a, b


def _frobenius_coords(a):
    return a.reshape(*a.shape[:-2], -1)


def _cholesky_coords(L):
    return L.reshape(*L.shape[:-2], -1)


def _log_cholesky_coords(L):
    m = L.shape[-1]
    rows, cols = np.tril_indices(m, -1)
    lower = L[..., rows, cols]
    logdiag = np.log(np.diagonal(L, axis1=-2, axis2=-1))
    return np.concatenate([lower, logdiag], axis=-1)


def spd_coords(mats, metric):
    """Coordinates in which ``metric`` is the Euclidean distance.

    ``mats`` is a stack of shape (n, m, m) of already-validated SPD matrices.
    Frobenius uses the raw entries, Cholesky the entries of the Cholesky
    factor, Log-Cholesky its strictly-lower entries followed by the logs of
    its diagonal.
    """
    metric = MetricKind(metric)
    if metric is MetricKind.FROBENIUS:
        return _frobenius_coords(mats)
    L = _chol_batch(mats)
    if metric is MetricKind.CHOLESKY:
        return _cholesky_coords(L)
    if metric is MetricKind.LOG_CHOLESKY:
        return _log_cholesky_coords(L)
    raise KindMismatch(f"{metric.value!r} is not an SPD metric")


def _spd_distance(a, b, metric):
    a, b = _pair(a, b)
    if metric is MetricKind.FROBENIUS:
        ca, cb = _frobenius_coords(a.entries), _frobenius_coords(b.entries)
    elif metric is MetricKind.CHOLESKY:
        ca, cb = _cholesky_coords(a.chol), _cholesky_coords(b.chol)
    else:
        ca, cb = _log_cholesky_coords(a.chol), _log_cholesky_coords(b.chol)
    return float(np.sqrt(_sq_sum(ca - cb)))


def dist_frobenius(a, b):
    """Euclidean (Frobenius) distance ``||a - b||_F``."""
    return _spd_distance(a, b, MetricKind.FROBENIUS)


def dist_cholesky(a, b):
    """Cholesky distance ``||chol(a) - chol(b)||_F``."""
    return _spd_distance(a, b, MetricKind.CHOLESKY)


def dist_log_cholesky(a, b):
    """Log-Cholesky distance.

    Squared, it is the squared Frobenius distance between the strictly-lower
    parts of the two Cholesky factors plus that between the logs of their
    diagonals.
    """
    return _spd_distance(a, b, MetricKind.LOG_CHOLESKY)


def euclidean_pairwise(coords):
    """n x n Euclidean distance matrix of the rows of ``coords``."""
    coords = np.asarray(coords, dtype=float)
    D = np.sqrt(_sq_sum(coords[:, None, :] - coords[None, :, :]))
    np.fill_diagonal(D, 0.0)
    return D


def validate_distance_matrix(D, tol=DISTANCE_SYMMETRY_TOL):
    """Check that ``D`` is a square, symmetric, zero-diagonal, non-negative matrix.

    Returns the matrix as a float array; raises InvalidDistanceMatrix.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise InvalidDistanceMatrix(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise InvalidDistanceMatrix("distance matrix has non-finite entries")
    if np.any(D < 0):
        i, k = np.argwhere(D < 0)[0]
        raise InvalidDistanceMatrix(f"negative entry at ({i}, {k})")
    if np.any(np.diag(D) != 0):
        i = int(np.flatnonzero(np.diag(D))[0])
        raise InvalidDistanceMatrix(f"nonzero diagonal entry at ({i}, {i})")
    asym = np.abs(D - D.T)
    if np.any(asym > tol):
        i, k = np.unravel_index(np.argmax(asym), asym.shape)
        raise InvalidDistanceMatrix(f"asymmetric entries at ({i}, {k}): {D[i, k]!r} vs {D[k, i]!r}")
    return D


def pairwise_distances(col):
    """Distance matrix of one feature column.

    Parameters
    ----------
    col : FeatureColumn

    Returns
    -------
    ndarray, shape (n, n)
        Symmetric, zero diagonal, non-negative.  Precomputed columns are
        validated and returned as stored.
    """
    metric = check_kind_metric(col.kind, col.metric)
    if col.kind == "precomputed":
        return validate_distance_matrix(col.distance_matrix)
    if col.kind == "distribution":
        objs = col.objects
        if isinstance(objs, np.ndarray):
            return euclidean_pairwise(objs)
        n = len(objs)
        D = np.zeros((n, n))
        for i in range(n):
            for k in range(i + 1, n):
                D[i, k] = D[k, i] = wasserstein_empirical(objs[i], objs[k])
        return D
    return euclidean_pairwise(spd_coords(col.objects, metric))
