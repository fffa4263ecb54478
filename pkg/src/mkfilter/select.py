"""Feature selection from screening statistics.

Two rules are provided: keep the ``s`` top-ranked features, or pick a
data-adaptive threshold from a random two-part split of the samples that
targets a false discovery rate ``alpha``.

The split rule computes ``omega_hat`` on both parts (sizes ``n1 > n2``),
combines them into signed statistics::

    W_j = sign(n1**gamma * w1_j - n2**gamma * w2_j) * max(n1**gamma * w1_j, n2**gamma * w2_j)

and keeps ``{j : W_j >= T}`` for the smallest ``t > 0`` with
``(1 + #{W_j <= -t}) / max(#{W_j >= t}, 1) <= alpha``.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .data import as_labels
from .exceptions import BadParam, BadSize, LengthMismatch, TooFewPerClass
from .mks import omega_matrix


@dataclass(frozen=True)
class SplitStatistics:
    omega1: np.ndarray
    omega2: np.ndarray
    n1: int
    n2: int
    gamma: float
    W: np.ndarray


@dataclass(frozen=True)
class FdrSelection:
    """Outcome of the split-based threshold rule.

    ``threshold`` is ``math.inf`` when no candidate meets the target, in
    which case ``selected`` is empty.
    """

    threshold: float
    selected: np.ndarray
    alpha: float
    split_seed: int
    stats: SplitStatistics


def default_model_size(n):
    """``floor(n / ln n)``."""
    if n < 2:
        raise BadSize("need n >= 2")
    return int(math.floor(n / math.log(n)))


def top_s(res, s=None):
    """Indices of the ``s`` highest-ranked features, sorted ascending.

    ``s`` defaults to ``floor(n / ln n)`` capped at the number of features.
    """
    p = res.ranking.size
    if s is None:
        s = min(default_model_size(res.n), p)
    if not 1 <= s <= p:
        raise BadSize(f"model size must lie in [1, {p}], got {s}")
    return np.sort(res.ranking[:s])


def split_sizes(n, K):
    """``(n1, n2)`` with ``n2 = floor(n / K)`` and ``n1 = n - n2``."""
    if K < 3:
        raise BadParam(f"K must be at least 3, got {K}")
    n2 = n // K
    return n - n2, n2


def split_indices(labels, K=3, seed=0):
    """Stratified random split of the rows into parts of sizes ``split_sizes(n, K)``.

    Each class contributes to the second part in proportion to its size,
    with at least one member of every class on each side.

    Returns
    -------
    rows1, rows2 : ndarray
        Disjoint, ascending row indices.
    """
    y = as_labels(labels)
    n = y.size
    n1, n2 = split_sizes(n, K)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == -1)
    if pos.size < 2 or neg.size < 2:
        raise TooFewPerClass("each class needs at least two samples to be split")
    take_pos = int(math.floor(n2 * pos.size / n + 0.5))
    take_pos = min(max(take_pos, 1, n2 - (neg.size - 1)), pos.size - 1, n2 - 1)
    take_neg = n2 - take_pos
    if not (1 <= take_neg <= neg.size - 1) or take_pos < 1:
        raise TooFewPerClass(f"cannot stratify {pos.size}/{neg.size} samples into parts of {n1} and {n2}")
    gen = rngmod.substream(seed, rngmod.SPLIT)
    part2 = np.concatenate([gen.permutation(pos)[:take_pos], gen.permutation(neg)[:take_neg]])
    in2 = np.zeros(n, dtype=bool)
    in2[part2] = True
    return np.flatnonzero(~in2), np.flatnonzero(in2)


def split_dataset(ds, K=3, seed=0):
    """Split a dataset in two with :func:`split_indices`."""
    rows1, rows2 = split_indices(ds.labels, K, seed)
    return ds.subset(rows1), ds.subset(rows2)


def w_statistics(omega1, omega2, n1, n2, gamma=0.5):
    """Signed split statistics; a zero difference counts as positive."""
    w1 = np.asarray(omega1, dtype=float)
    w2 = np.asarray(omega2, dtype=float)
    if w1.shape != w2.shape:
        raise LengthMismatch(f"omega vectors differ in shape: {w1.shape} vs {w2.shape}")
    if not gamma > 0:
        raise BadParam(f"gamma must be positive, got {gamma}")
    a = n1 ** gamma * w1
    b = n2 ** gamma * w2
    sign = np.where(a >= b, 1.0, -1.0)
    return sign * np.maximum(a, b)


def adaptive_threshold(W, alpha):
    """Smallest candidate ``t = |W_j| > 0`` meeting the FDR target, else ``inf``."""
    W = np.asarray(W, dtype=float).ravel()
    if W.size == 0:
        raise LengthMismatch("W must be non-empty")
    if not 0 < alpha < 1:
        raise BadParam(f"alpha must lie in (0, 1), got {alpha}")
    cand = np.unique(np.abs(W[W != 0]))
    if cand.size == 0:
        return math.inf
    Ws = np.sort(W)
    n_neg = np.searchsorted(Ws, -cand, side="right")
    n_pos = W.size - np.searchsorted(Ws, cand, side="left")
    ok = (1 + n_neg) / np.maximum(n_pos, 1) <= alpha
    if not ok.any():
        return math.inf
    return float(cand[np.argmax(ok)])


def select_from_split(omega1, omega2, n1, n2, alpha, gamma=0.5, split_seed=0):
    """Threshold rule applied to already-computed split statistics."""
    W = w_statistics(omega1, omega2, n1, n2, gamma)
    T = adaptive_threshold(W, alpha)
    selected = np.flatnonzero(W >= T) if math.isfinite(T) else np.zeros(0, dtype=int)
    stats = SplitStatistics(np.asarray(omega1, dtype=float), np.asarray(omega2, dtype=float),
                            int(n1), int(n2), float(gamma), W)
    return FdrSelection(T, selected, float(alpha), int(split_seed), stats)


def fdr_select(ds, alpha=0.1, K=3, gamma=0.5, seed=0, threads=1):
    """Split, screen both parts, and keep features passing the adaptive threshold.

    Deterministic given ``seed``; the thread count only affects speed.
    """
    if not 0 < alpha < 1:
        raise BadParam(f"alpha must lie in (0, 1), got {alpha}")
    if ds.n < 2 * K:
        raise BadSize(f"need n >= 2K = {2 * K} samples, got {ds.n}")
    rows1, rows2 = split_indices(ds.labels, K, seed)
    omega1, omega2 = omega_matrix(ds, [rows1, rows2], threads=threads)
    return select_from_split(omega1, omega2, rows1.size, rows2.size, alpha, gamma, seed)


def fdp(selected, true_set):
    """False discovery proportion; an empty selection has FDP 0."""
    selected = set(int(j) for j in selected)
    if not selected:
        return 0.0
    return len(selected - set(int(j) for j in true_set)) / len(selected)
