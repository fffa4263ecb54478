"""Reading and writing datasets, and submatrix feature pools.

On-disk layout
--------------
A dataset is a JSON manifest plus CSV files.  Every CSV starts with a header
line naming the format version and the file kind::

    # mkfilter-csv/1 kind=labels
    # mkfilter-csv/1 kind=distribution
    # mkfilter-csv/1 kind=spd m=3
    # mkfilter-csv/1 kind=precomputed

followed by one row per sample: a single +1/-1 for labels, the raw draws
for a distribution (rows may differ in length), the m*m entries in
row-major order for an SPD matrix, or the n distances of one row of a
precomputed matrix.  Floats are written with 17 significant digits.

The manifest lists the columns in feature order::

    {"format_version": "mkfilter-manifest/1", "n": 40, "p": 2,
     "labels": "labels.csv",
     "columns": [{"kind": "distribution", "metric": "wasserstein", "path": "f0.csv"},
                 {"kind": "spd", "metric": "log_cholesky", "path": "covs.csv",
                  "submatrix": [0, 5]}]}

A column with ``submatrix`` reads the principal submatrix on those rows and
columns from a file of larger SPD matrices, which is how a pool built by
:func:`build_submatrix_pool` is stored without copying every submatrix.
"""
import csv
import itertools
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import FeatureColumn, LabeledDataset
from .exceptions import (
    DimMismatch,
    InvalidDistanceMatrix,
    MKFilterError,
    NotPositiveDefinite,
    ParseError,
    ValidationError,
)
from .metrics import MetricKind, _chol_batch, check_kind_metric

CSV_VERSION = "mkfilter-csv/1"
MANIFEST_VERSION = "mkfilter-manifest/1"
FILE_KINDS = ("labels", "distribution", "spd", "precomputed")


def fmt(x):
    return format(float(x), ".17g")


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- CSV --------------------------------------------------------------------

def format_csv(kind, rows, m=None):
    header = f"# {CSV_VERSION} kind={kind}" + (f" m={m}" if m is not None else "")
    lines = [header]
    for row in rows:
        lines.append(",".join(fmt(v) if kind != "labels" else str(int(v)) for v in np.atleast_1d(row)))
    return "\n".join(lines) + "\n"


def _parse_header(path, line):
    parts = line.strip().split()
    if len(parts) < 3 or parts[0] != "#" or parts[1] != CSV_VERSION:
        raise ParseError(path, 1, f"expected header '# {CSV_VERSION} kind=...', got {line.strip()!r}")
    meta = {}
    for item in parts[2:]:
        key, sep, value = item.partition("=")
        if not sep:
            raise ParseError(path, 1, f"malformed header field {item!r}")
        meta[key] = value
    if meta.get("kind") not in FILE_KINDS:
        raise ParseError(path, 1, f"unknown file kind {meta.get('kind')!r}")
    if meta["kind"] == "spd":
        try:
            meta["m"] = int(meta["m"])
        except (KeyError, ValueError):
            raise ParseError(path, 1, "spd files need an integer m= in the header") from None
        if meta["m"] < 1:
            raise ParseError(path, 1, "m must be positive")
    return meta


def read_csv(path, expect_kind=None):
    """Parse one versioned CSV file.

    Returns
    -------
    meta : dict
        Header fields (``kind`` and, for SPD files, ``m``).
    rows : list of list of float
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(path, 0, f"cannot open: {exc.strerror}") from None
    with fh:
        first = fh.readline()
        if not first:
            raise ParseError(path, 1, "empty file")
        meta = _parse_header(path, first)
        if expect_kind is not None and meta["kind"] != expect_kind:
            raise ParseError(path, 1, f"expected kind={expect_kind}, found kind={meta['kind']}")
        rows = []
        for lineno, cells in enumerate(csv.reader(fh), start=2):
            if not cells:
                raise ParseError(path, lineno, "empty row")
            row = []
            for cell in cells:
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(path, lineno, f"not a number: {cell!r}") from None
                if not math.isfinite(v):
                    raise ParseError(path, lineno, f"non-finite value {cell!r}")
                row.append(v)
            if meta["kind"] == "labels" and (len(row) != 1 or row[0] not in (1.0, -1.0)):
                raise ParseError(path, lineno, "a label row holds a single +1 or -1")
            if meta["kind"] == "spd" and len(row) != meta["m"] ** 2:
                raise ParseError(path, lineno, f"expected {meta['m'] ** 2} entries, found {len(row)}")
            rows.append(row)
    return meta, rows


# --- manifest ---------------------------------------------------------------

@dataclass
class ColumnSpec:
    kind: str
    metric: str
    path: str
    submatrix: tuple = None


@dataclass
class DatasetManifest:
    n: int
    p: int
    labels: str
    columns: list = field(default_factory=list)
    format_version: str = MANIFEST_VERSION

    def to_json(self):
        cols = []
        for c in self.columns:
            d = {"kind": c.kind, "metric": c.metric, "path": c.path}
            if c.submatrix is not None:
                d["submatrix"] = list(c.submatrix)
            cols.append(d)
        doc = {"format_version": self.format_version, "n": self.n, "p": self.p,
               "labels": self.labels, "columns": cols}
        return json.dumps(doc, indent=1) + "\n"


def load_manifest(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(path, 0, f"cannot open: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError(path, 1, "manifest must be a JSON object")
    if doc.get("format_version") != MANIFEST_VERSION:
        raise ValidationError(None, f"unsupported manifest version {doc.get('format_version')!r}")
    try:
        n, p, labels, columns = int(doc["n"]), int(doc["p"]), str(doc["labels"]), doc["columns"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(None, f"manifest is missing or mistypes {exc}") from None
    if len(columns) != p:
        raise ValidationError(None, f"manifest declares p={p} but lists {len(columns)} columns")
    specs = []
    for j, c in enumerate(columns):
        try:
            sub = c.get("submatrix")
            spec = ColumnSpec(str(c["kind"]), str(c["metric"]), str(c["path"]),
                              tuple(int(i) for i in sub) if sub is not None else None)
        except (KeyError, TypeError, AttributeError, ValueError):
            raise ValidationError(j, "column entries need kind, metric and path") from None
        try:
            check_kind_metric(spec.kind, spec.metric)
        except MKFilterError as exc:
            raise ValidationError(j, str(exc)) from None
        if spec.submatrix is not None and spec.kind != "spd":
            raise ValidationError(j, "submatrix applies to spd columns only")
        specs.append(spec)
    return DatasetManifest(n, p, labels, specs)


def _as_array(rows):
    """Rectangular rows as a float array, ragged rows as None."""
    if len({len(r) for r in rows}) != 1:
        return None
    return np.array(rows, dtype=float)


def _column_from_rows(j, spec, meta, rows, n, arr=None):
    if arr is None:
        arr = _as_array(rows) if rows else None
    if meta["kind"] != spec.kind:
        raise ValidationError(j, f"file kind {meta['kind']!r} does not match column kind {spec.kind!r}")
    if len(rows) != n:
        raise ValidationError(j, f"expected {n} rows, found {len(rows)}")
    try:
        if spec.kind == "distribution":
            samples = arr if arr is not None else rows
            return FeatureColumn.from_samples(samples, spec.metric)
        if spec.kind == "spd":
            m = meta["m"]
            mats = arr.reshape(n, m, m)
            if spec.submatrix is not None:
                idx = np.array(spec.submatrix)
                if idx.size < 1 or np.any(idx < 0) or np.any(idx >= m) or np.any(np.diff(idx) <= 0):
                    raise ValidationError(j, f"submatrix indices must be increasing within [0, {m})")
                mats = mats[:, idx[:, None], idx[None, :]]
            return FeatureColumn.from_spd(mats, spec.metric)
        D = arr
        if D is None or D.shape != (n, n):
            raise ValidationError(j, f"precomputed matrix must be {n}x{n}")
        return FeatureColumn.from_distances(D)
    except InvalidDistanceMatrix as exc:
        raise InvalidDistanceMatrix(f"column {j}: {exc}") from None
    except NotPositiveDefinite as exc:
        raise NotPositiveDefinite(f"column {j}: {exc}") from None


def load_dataset(manifest_path):
    """Read and validate the dataset described by a manifest.

    Raises
    ------
    ParseError
        Unreadable or malformed file, with path and line.
    ValidationError
        Well-formed input that breaks a dataset invariant, naming the column.
    InvalidDistanceMatrix, NotPositiveDefinite
        Bad precomputed matrix or SPD entry, naming the column.
    """
    manifest_path = Path(manifest_path)
    man = load_manifest(manifest_path)
    base = manifest_path.parent
    _, label_rows = read_csv(base / man.labels, expect_kind="labels")
    if len(label_rows) != man.n:
        raise ValidationError(None, f"expected {man.n} labels, found {len(label_rows)}")
    labels = np.array([r[0] for r in label_rows], dtype=int)
    cache = {}
    columns = []
    for j, spec in enumerate(man.columns):
        key = base / spec.path
        if key not in cache:
            meta, rows = read_csv(key)
            cache[key] = meta, rows, _as_array(rows) if rows else None
        meta, rows, arr = cache[key]
        columns.append(_column_from_rows(j, spec, meta, rows, man.n, arr))
    try:
        return LabeledDataset(columns, labels)
    except MKFilterError as exc:
        raise ValidationError(None, str(exc)) from None


def save_dataset(ds, directory, prefix="feature"):
    """Write ``ds`` as a manifest plus one CSV per column; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    atomic_write(directory / "labels.csv", format_csv("labels", ds.labels))
    specs = []
    width = len(str(max(ds.p - 1, 0)))
    for j, col in enumerate(ds.columns):
        name = f"{prefix}{j:0{width}d}.csv"
        if col.kind == "distribution":
            rows = col.objects if isinstance(col.objects, np.ndarray) else [o.samples for o in col.objects]
            text = format_csv("distribution", rows)
        elif col.kind == "spd":
            m = col.objects.shape[1]
            text = format_csv("spd", col.objects.reshape(col.n, m * m), m=m)
        else:
            text = format_csv("precomputed", col.distance_matrix)
        atomic_write(directory / name, text)
        specs.append(ColumnSpec(col.kind, col.metric.value, name))
    man = DatasetManifest(ds.n, ds.p, "labels.csv", specs)
    path = directory / "manifest.json"
    atomic_write(path, man.to_json())
    return path


# --- submatrix pools --------------------------------------------------------

@dataclass(frozen=True)
class CovariancePool:
    """Maps feature index to the region subset its submatrix is built from.

    ``index_map`` lists all q-subsets of ``range(region_count)`` in
    lexicographic order.
    """

    region_count: int
    q: int
    index_map: tuple

    @classmethod
    def enumerate(cls, R, q):
        return cls(R, q, tuple(itertools.combinations(range(R), q)))

    def regions_of(self, j):
        return self.index_map[j]

    def feature_of(self, regions):
        """Inverse of :meth:`regions_of` (combinatorial number system, no lookup table)."""
        regions = tuple(sorted(int(r) for r in regions))
        R, q = self.region_count, self.q
        if len(regions) != q or len(set(regions)) != q or regions[0] < 0 or regions[-1] >= R:
            raise ValueError(f"{regions} is not a {q}-subset of range({R})")
        j = 0
        prev = -1
        for pos, r in enumerate(regions):
            for skipped in range(prev + 1, r):
                j += math.comb(R - skipped - 1, q - pos - 1)
            prev = r
        return j

    def __len__(self):
        return len(self.index_map)


def build_submatrix_pool(covs, labels, q, metric=MetricKind.LOG_CHOLESKY):
    """One SPD feature per q-subset of regions, from whole covariance matrices.

    Parameters
    ----------
    covs : array_like, shape (n, R, R)
        One covariance matrix per subject.
    labels : array_like of +/-1
    q : int
        Submatrix size, ``2 <= q <= R``.
    metric : str
        SPD metric attached to every column.

    Returns
    -------
    LabeledDataset, CovariancePool
    """
    covs = np.asarray(covs, dtype=float)
    if covs.ndim != 3 or covs.shape[1] != covs.shape[2]:
        raise DimMismatch(f"covariances must have shape (n, R, R), got {covs.shape}")
    n, R, _ = covs.shape
    if not 2 <= q <= R:
        raise DimMismatch(f"q must lie in [2, {R}], got {q}")
    check_kind_metric("spd", metric)
    pool = CovariancePool.enumerate(R, q)
    idx = np.array(pool.index_map, dtype=int)
    subs = covs[:, idx[:, :, None], idx[:, None, :]]  # (n, p, q, q)
    subs = np.ascontiguousarray(np.swapaxes(subs, 0, 1))
    try:
        _chol_batch(subs.reshape(-1, q, q))
    except NotPositiveDefinite:
        for j in range(len(pool)):
            for i in range(n):
                try:
                    _chol_batch(subs[j, i][None])
                except NotPositiveDefinite:
                    raise NotPositiveDefinite(
                        f"subject {i}, regions {pool.index_map[j]}: submatrix is not SPD") from None
        raise
    columns = [FeatureColumn.from_spd(subs[j], metric, validate=False) for j in range(len(pool))]
    return LabeledDataset(columns, labels), pool


def sample_covariance(X):
    """Covariance of a (T, R) data array, ``(X - mean).T @ (X - mean) / (T - 1)``, validated SPD."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DimMismatch("need a (T, R) array with T >= 2")
    Xc = X - X.mean(axis=0)
    S = Xc.T @ Xc / (X.shape[0] - 1)
    S = 0.5 * (S + S.T)
    _chol_batch(S[None])
    return S
