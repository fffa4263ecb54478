"""Feature columns and labelled datasets."""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import KindMismatch, LengthMismatch, SingleClass
from .metrics import (
    EmpiricalDistribution,
    MetricKind,
    _chol_batch,
    check_kind_metric,
    pairwise_distances,
    validate_distance_matrix,
)


class FeatureColumn:
    """One feature observed on n samples.

    Exactly one of ``objects`` and ``distance_matrix`` is populated.
    ``objects`` is

    * an (n, m) array of row-sorted samples for empirical distributions of a
      common size m, or a tuple of :class:`EmpiricalDistribution` when sizes
      differ;
    * an (n, m, m) array of validated SPD matrices.

    Use the ``from_*`` constructors rather than calling this directly.
    """

    def __init__(self, kind, metric, objects=None, distance_matrix=None):
        self.metric = check_kind_metric(kind, metric)
        self.kind = kind
        if (objects is None) == (distance_matrix is None):
            raise KindMismatch("a column holds either objects or a distance matrix, not both")
        if kind == "precomputed":
            if distance_matrix is None:
                raise KindMismatch("precomputed columns need a distance matrix")
            distance_matrix = validate_distance_matrix(distance_matrix).copy()
            distance_matrix.setflags(write=False)
        elif objects is None:
            raise KindMismatch(f"{kind!r} columns need objects")
        self.objects = objects
        self.distance_matrix = distance_matrix

    @classmethod
    def from_samples(cls, samples, metric=MetricKind.WASSERSTEIN):
        """Column of empirical distributions, one sample vector per row."""
        if isinstance(samples, np.ndarray) and samples.ndim == 2:
            x = np.array(samples, dtype=float)
            if x.shape[1] == 0 or not np.all(np.isfinite(x)):
                raise ValueError("samples must be finite and non-empty")
            x.sort(axis=1)
            x.setflags(write=False)
            return cls("distribution", metric, objects=x)
        dists = tuple(s if isinstance(s, EmpiricalDistribution) else EmpiricalDistribution(s)
                      for s in samples)
        sizes = {d.m for d in dists}
        if len(sizes) == 1:
            return cls.from_samples(np.stack([d.samples for d in dists]), metric)
        return cls("distribution", metric, objects=dists)

    @classmethod
    def from_spd(cls, mats, metric=MetricKind.LOG_CHOLESKY, validate=True):
        """Column of SPD matrices from an (n, m, m) stack.

        ``validate=False`` skips the positive-definiteness check for stacks
        the caller has already validated.
        """
        a = np.array(mats, dtype=float)
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise KindMismatch(f"SPD column needs shape (n, m, m), got {a.shape}")
        if validate:
            _chol_batch(a)
        a.setflags(write=False)
        return cls("spd", metric, objects=a)

    @classmethod
    def from_distances(cls, D):
        return cls("precomputed", MetricKind.PRECOMPUTED, distance_matrix=D)

    @property
    def n(self):
        if self.distance_matrix is not None:
            return self.distance_matrix.shape[0]
        return len(self.objects)

    def distances(self):
        return pairwise_distances(self)

    def subset(self, rows):
        rows = np.asarray(rows, dtype=int)
        if self.kind == "precomputed":
            D = self.distance_matrix[np.ix_(rows, rows)]
            return FeatureColumn("precomputed", self.metric, distance_matrix=D)
        if isinstance(self.objects, tuple):
            return FeatureColumn(self.kind, self.metric, objects=tuple(self.objects[i] for i in rows))
        sub = self.objects[rows]
        sub.setflags(write=False)
        return FeatureColumn(self.kind, self.metric, objects=sub)

    def __repr__(self):
        return f"FeatureColumn(kind={self.kind!r}, metric={self.metric.value!r}, n={self.n})"


def as_labels(labels):
    """Validate a +/-1 label vector with both classes present."""
    y = np.asarray(labels)
    if y.ndim != 1:
        raise LengthMismatch("labels must be a 1-d vector")
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("labels must be +1 or -1")
    y = y.astype(np.int8)
    if not (np.any(y == 1) and np.any(y == -1)):
        raise SingleClass("both classes must be present")
    return y


@dataclass
class LabeledDataset:
    """p feature columns sharing one +/-1 label vector of length n."""

    columns: list
    labels: np.ndarray
    n_pos: int = field(init=False)
    n_neg: int = field(init=False)

    def __post_init__(self):
        self.labels = as_labels(self.labels)
        self.columns = list(self.columns)
        n = self.labels.size
        for j, col in enumerate(self.columns):
            if col.n != n:
                raise LengthMismatch(f"column {j} has {col.n} rows, labels have {n}")
        self.n_pos = int(np.sum(self.labels == 1))
        self.n_neg = n - self.n_pos

    @property
    def n(self):
        return self.labels.size

    @property
    def p(self):
        return len(self.columns)

    def subset(self, rows):
        """Dataset restricted to the given rows (order kept as given)."""
        rows = np.asarray(rows, dtype=int)
        return LabeledDataset([c.subset(rows) for c in self.columns], self.labels[rows])

    def select(self, features):
        """Dataset restricted to the given feature indices."""
        return LabeledDataset([self.columns[j] for j in features], self.labels)
