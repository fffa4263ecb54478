"""k-nearest-neighbour classification over several metric features.

Two ways of combining the selected features:

``merging``
    One neighbour ranking under the product metric
    ``d(u, v) = sqrt(sum_j d_j(u_j, v_j)**2)``.
``voting``
    A separate k-NN prediction per feature, combined by unweighted majority.

Neighbours at equal distance are taken in ascending training-row order.  A
tied label vote goes to ``tie_label`` (-1 by default).
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import rng as rngmod
from .exceptions import BadParam, LengthMismatch, SingleClass, TooFewNeighbors

STRATEGIES = ("merging", "voting")


@dataclass(frozen=True)
class KnnConfig:
    k: int
    strategy: str
    selected: tuple
    tie_label: int = -1

    def __post_init__(self):
        if self.k < 1:
            raise BadParam(f"k must be positive, got {self.k}")
        if self.strategy not in STRATEGIES:
            raise BadParam(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        object.__setattr__(self, "selected", tuple(int(j) for j in self.selected))
        if not self.selected:
            raise BadParam("at least one feature must be selected")
        if self.tie_label not in (1, -1):
            raise BadParam("tie_label must be +1 or -1")


@dataclass(frozen=True)
class ClassificationReport:
    """Test-set metrics with +1 as the positive class."""

    accuracy: float
    recall: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int

    @classmethod
    def from_predictions(cls, truth, predicted):
        truth = np.asarray(truth)
        predicted = np.asarray(predicted)
        if truth.shape != predicted.shape:
            raise LengthMismatch("truth and predictions differ in length")
        tp = int(np.sum((truth == 1) & (predicted == 1)))
        fp = int(np.sum((truth == -1) & (predicted == 1)))
        tn = int(np.sum((truth == -1) & (predicted == -1)))
        fn = int(np.sum((truth == 1) & (predicted == -1)))
        total = tp + fp + tn + fn
        return cls(
            accuracy=(tp + tn) / total if total else 0.0,
            recall=tp / (tp + fn) if tp + fn else 0.0,
            f1=2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0,
            tp=tp, fp=fp, tn=tn, fn=fn,
        )


def product_distance(u, v, dists):
    """Product-space distance of two tuples of objects.

    ``dists[j]`` is the metric of the j-th component.
    """
    if not len(u) == len(v) == len(dists):
        raise LengthMismatch("u, v and dists must have the same length")
    acc = 0.0
    for a, b, d in zip(u, v, dists):
        dj = d(a, b)
        acc += dj * dj
    return math.sqrt(acc)


def merge_distances(mats):
    """Entrywise product metric of a sequence of distance matrices."""
    acc = np.zeros_like(np.asarray(mats[0], dtype=float))
    for D in mats:
        D = np.asarray(D, dtype=float)
        acc = acc + D * D
    return np.sqrt(acc)


def _vote(labels, tie_label):
    s = int(np.sum(labels))
    return 1 if s > 0 else -1 if s < 0 else tie_label


def _neighbour_predict(cross, train_labels, k, tie_label):
    """k-NN labels from a (n_test, n_train) distance block."""
    order = np.argsort(cross, axis=1, kind="stable")[:, :k]
    return np.array([_vote(train_labels[row], tie_label) for row in order], dtype=int)


def predict_from_distances(mats, train_rows, test_rows, labels, cfg):
    """k-NN predictions given full distance matrices of the selected features.

    Parameters
    ----------
    mats : list of ndarray, shape (n, n)
        One distance matrix per selected feature, in ``cfg.selected`` order.
    train_rows, test_rows : array_like of int
    labels : array_like of +/-1
        Labels of all n rows; only training labels are read.
    cfg : KnnConfig
    """
    train_rows = np.sort(np.asarray(train_rows, dtype=int))
    test_rows = np.asarray(test_rows, dtype=int)
    y_train = np.asarray(labels)[train_rows]
    if train_rows.size < cfg.k:
        raise TooFewNeighbors(f"k={cfg.k} exceeds the {train_rows.size} training rows")
    if not (np.any(y_train == 1) and np.any(y_train == -1)):
        raise SingleClass("training rows must contain both classes")
    if cfg.strategy == "merging":
        D = merge_distances(mats)
        return _neighbour_predict(D[np.ix_(test_rows, train_rows)], y_train, cfg.k, cfg.tie_label)
    votes = np.stack([_neighbour_predict(D[np.ix_(test_rows, train_rows)], y_train, cfg.k, cfg.tie_label)
                      for D in mats])
    return np.array([_vote(col, cfg.tie_label) for col in votes.T], dtype=int)


def knn_predict(ds, train_rows, test_rows, cfg):
    """Predict labels of ``test_rows`` from ``train_rows`` of the same dataset."""
    mats = [ds.columns[j].distances() for j in cfg.selected]
    return predict_from_distances(mats, train_rows, test_rows, ds.labels, cfg)


def train_test_split(labels, train_fraction, gen):
    """Stratified split; each class sends ``round(fraction * size)`` rows to training."""
    if not 0 < train_fraction < 1:
        raise BadParam(f"train_fraction must lie in (0, 1), got {train_fraction}")
    labels = np.asarray(labels)
    train, test = [], []
    for cls in (1, -1):
        rows = gen.permutation(np.flatnonzero(labels == cls))
        cut = int(math.floor(train_fraction * rows.size + 0.5))
        train.append(rows[:cut])
        test.append(rows[cut:])
    train, test = np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
    if test.size == 0 or train.size == 0:
        raise BadParam("split leaves an empty training or test set")
    return train, test


def evaluate_split(ds, cfg, train_fraction=0.7, seed=0, replicates=400, threads=1):
    """Mean, standard deviation and standard error of accuracy, recall and F1.

    Each replicate draws its own stratified train/test split from the stream
    ``(seed, replicate)``; distance matrices are computed once.
    """
    if replicates < 1:
        raise BadParam("replicates must be positive")
    if not 0 < train_fraction < 1:
        raise BadParam(f"train_fraction must lie in (0, 1), got {train_fraction}")
    mats = [ds.columns[j].distances() for j in cfg.selected]

    def one(rep):
        gen = rngmod.substream(seed, rngmod.TRAIN_TEST, rep)
        train, test = train_test_split(ds.labels, train_fraction, gen)
        pred = predict_from_distances(mats, train, test, ds.labels, cfg)
        return ClassificationReport.from_predictions(ds.labels[test], pred)

    if threads <= 1:
        reports = [one(r) for r in range(replicates)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(one, range(replicates)))
    out = {}
    for name in ("accuracy", "recall", "f1"):
        vals = np.array([getattr(r, name) for r in reports])
        sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        out[name] = {"mean": float(vals.mean()), "sd": sd, "se": sd / math.sqrt(vals.size)}
    out["replicates"] = [asdict(r) for r in reports]
    return out
