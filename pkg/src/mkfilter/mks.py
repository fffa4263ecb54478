"""Symmetrized metric Kolmogorov-Smirnov screening statistic.

For a feature with distance matrix ``D`` and labels ``y``, the directed
statistic from class ``c`` averages, over centers ``u`` of class ``c``, the
largest gap between the two class-conditional empirical metric distribution
functions at ``u``::

    max_v | F_+(u, D[u, v]) - F_-(u, D[u, v]) |

where ``F_y(u, r)`` is the fraction of class-``y`` samples within closed
distance ``r`` of ``u`` and ``v`` runs over the pooled sample.  The screening
statistic ``omega_hat`` is the sum of both directions and lies in [0, 2].

The fast kernel sorts each row of ``D`` once and reads both class counts off
running sums, so one feature costs O(n^2 log n).  :func:`omega_hat_naive` is
the O(n^3) definition kept as a reference; both paths evaluate the same
floating-point expressions in the same order and agree exactly.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import as_labels
from .exceptions import MKFilterError
from .metrics import validate_distance_matrix

# upper bound on n*n*features handled per kernel call
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class ScreeningResult:
    """Per-feature statistics and their ranking.

    ``ranking`` lists feature indices by decreasing ``omega_hat``; equal
    values keep ascending feature index.
    """

    omega_hat: np.ndarray
    ranking: np.ndarray
    n: int
    n_pos: int
    n_neg: int

    @classmethod
    def from_omega(cls, omega, labels):
        omega = np.asarray(omega, dtype=float)
        y = np.asarray(labels)
        n_pos = int(np.sum(y == 1))
        return cls(omega, rank_features(omega), int(y.size), n_pos, int(y.size) - n_pos)

    def rank_of(self, j):
        """1-based rank of feature ``j``."""
        return int(np.flatnonzero(self.ranking == j)[0]) + 1


def rank_features(omega):
    return np.argsort(-np.asarray(omega, dtype=float), kind="stable")


class SortedRows:
    """Row-sorted distance matrices, reusable across label vectors.

    Parameters
    ----------
    D : ndarray, shape (..., n, n)
        One distance matrix or a stack of them; not re-validated.
    """

    def __init__(self, D):
        D = np.asarray(D, dtype=float)
        self.order = np.argsort(D, axis=-1, kind="stable")
        Ds = np.take_along_axis(D, self.order, axis=-1)
        # last position of each run of equal radii: the closed-ball count is read there
        self.group_end = np.empty(Ds.shape, dtype=bool)
        self.group_end[..., :-1] = Ds[..., 1:] != Ds[..., :-1]
        self.group_end[..., -1] = True

    @property
    def n(self):
        return self.order.shape[-1]

    def center_gaps(self, labels):
        """Per-center maximum of ``|F_+ - F_-|``, shape (..., n)."""
        y = as_labels(labels)
        n = self.n
        if y.size != n:
            raise ValueError(f"{y.size} labels for {n} samples")
        n_pos = int(np.sum(y == 1))
        n_neg = n - n_pos
        cp = np.cumsum(y[self.order] == 1, axis=-1)
        cn = np.arange(1, n + 1) - cp
        gap = np.abs(cp / n_pos - cn / n_neg)
        return np.where(self.group_end, gap, 0.0).max(axis=-1)

    def omega(self, labels):
        """``omega_hat`` for every matrix in the stack."""
        y = as_labels(labels)
        gaps = self.center_gaps(y)
        return _directed(gaps, y, 1) + _directed(gaps, y, -1)


def _directed(gaps, y, cls):
    vals = gaps[..., y == cls]
    # sequential accumulation in ascending center index
    return np.cumsum(vals, axis=-1)[..., -1] / vals.shape[-1]


def _check(D, labels):
    D = validate_distance_matrix(D)
    y = as_labels(labels)
    if y.size != D.shape[0]:
        raise ValueError(f"{y.size} labels for a {D.shape[0]}x{D.shape[0]} distance matrix")
    return D, y


def mks_hat_directed(D, labels, center_class):
    """Directed statistic averaged over centers of ``center_class`` (+1 or -1)."""
    if center_class not in (1, -1):
        raise ValueError("center_class must be +1 or -1")
    D, y = _check(D, labels)
    return float(_directed(SortedRows(D).center_gaps(y), y, center_class))


def omega_hat(D, labels):
    """Symmetrized statistic of one feature, in [0, 2]."""
    D, y = _check(D, labels)
    return float(SortedRows(D).omega(y))


def omega_hat_naive(D, labels):
    """Reference O(n^3) evaluation by direct indicator counting."""
    D, y = _check(D, labels)
    n = y.size
    d = D.tolist()
    lab = y.tolist()
    n_pos = lab.count(1)
    n_neg = n - n_pos

    def directed(cls):
        acc = 0.0
        count = 0
        for u in range(n):
            if lab[u] != cls:
                continue
            best = 0.0
            row = d[u]
            for v in range(n):
                r = row[v]
                cp = 0
                cn = 0
                for x in range(n):
                    if row[x] <= r:
                        if lab[x] == 1:
                            cp += 1
                        else:
                            cn += 1
                gap = abs(cp / n_pos - cn / n_neg)
                if gap > best:
                    best = gap
            acc += best
            count += 1
        return acc / count

    return directed(1) + directed(-1)


def _chunks(p, n):
    size = max(1, _CHUNK_ELEMENTS // max(1, n * n))
    return [range(s, min(p, s + size)) for s in range(0, p, size)]


def omega_matrix(ds, row_sets=None, threads=1):
    """``omega_hat`` of every feature on each of several row subsets.

    Each column's distance matrix is built once on the full dataset and then
    restricted to every row subset, so data splitting costs no extra
    distance evaluations.

    Parameters
    ----------
    ds : LabeledDataset
    row_sets : list of index arrays, optional
        Defaults to a single set holding every row.
    threads : int
        Worker threads; results do not depend on it.

    Returns
    -------
    ndarray, shape (len(row_sets), p)
    """
    if row_sets is None:
        row_sets = [np.arange(ds.n)]
    row_sets = [np.asarray(r, dtype=int) for r in row_sets]
    label_sets = [as_labels(ds.labels[r]) for r in row_sets]
    out = np.empty((len(row_sets), ds.p))

    def work(chunk):
        try:
            Ds = np.stack([ds.columns[j].distances() for j in chunk])
        except MKFilterError as exc:
            j = next(j for j in chunk if _fails(ds.columns[j]))
            raise type(exc)(f"column {j}: {exc}") from exc
        for k, (rows, y) in enumerate(zip(row_sets, label_sets)):
            sub = Ds[:, rows][:, :, rows]
            out[k, chunk.start:chunk.stop] = SortedRows(sub).omega(y)

    chunks = _chunks(ds.p, ds.n)
    if threads <= 1 or len(chunks) == 1:
        for c in chunks:
            work(c)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, chunks))
    return out


def _fails(col):
    try:
        col.distances()
    except MKFilterError:
        return True
    return False


def screen_all(ds, threads=1):
    """Screen every feature of ``ds``; returns a :class:`ScreeningResult`."""
    omega = omega_matrix(ds, threads=threads)[0]
    return ScreeningResult.from_omega(omega, ds.labels)
