"""Synthetic screening problems and the Monte Carlo harness around them.

Two scenarios are available:

``distributional``
    Every object is an empirical distribution of ``m`` draws; features 0-7
    differ between the classes (location, scale, tail weight, extreme-value
    scale and shape) and the rest are N(0, 1) for both classes.

``spd``
    Every object is a Wishart matrix with ``v = 10`` degrees of freedom;
    features 0-9 differ in the scale matrix and the rest share one randomly
    chosen scale matrix across classes.

Each replicate draws every feature from its own substream keyed by
``(seed, replicate, feature)`` so reports do not depend on thread count.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng as rngmod
from .data import FeatureColumn, LabeledDataset
from .exceptions import BadConfig, BadParam, BadSet
from .metrics import SpdMatrix, check_kind_metric
from .mks import ScreeningResult, omega_matrix
from .select import default_model_size, fdp, select_from_split, split_indices, top_s

N_INFORMATIVE = {"distributional": 8, "spd": 10}
WISHART_DOF = 10
LAMBDA = {3: (1.0, 1.1, 1.2), 5: (1.0, 1.05, 1.1, 1.15, 1.2)}


# --- samplers ---------------------------------------------------------------

def sample_gev(mu, sigma, xi, u):
    """Generalized extreme value quantile function evaluated at ``u`` in (0, 1)."""
    if not sigma > 0:
        raise BadParam(f"sigma must be positive, got {sigma}")
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise BadParam("u must lie strictly inside (0, 1)")
    e = -np.log(u)
    if xi == 0:
        x = mu - sigma * np.log(e)
    else:
        x = mu + sigma * (e ** (-xi) - 1.0) / xi
    return float(x) if x.ndim == 0 else x


def open_uniform(gen, size):
    """Uniform draws on the open interval (0, 1)."""
    return (gen.integers(0, 2**53, size=size) + 0.5) / 2.0**53


def sample_t(df, size, gen):
    """Student-t draws as a normal over an independent sqrt(chi2(df) / df)."""
    z = gen.standard_normal(size)
    return z / np.sqrt(gen.chisquare(df, size) / df)


def sample_wishart_batch(v, sigma, size, gen):
    """``size`` Wishart(v, sigma) draws by the Bartlett decomposition.

    Returns an array of shape (size, m, m).
    """
    sigma = sigma if isinstance(sigma, SpdMatrix) else SpdMatrix(sigma)
    m = sigma.dim
    if not v > m - 1:
        raise BadParam(f"degrees of freedom must exceed m - 1 = {m - 1}, got {v}")
    A = np.zeros((size, m, m))
    rows, cols = np.tril_indices(m, -1)
    A[:, rows, cols] = gen.standard_normal((size, rows.size))
    diag = np.sqrt(gen.chisquare(v - np.arange(m), size=(size, m)))
    A[:, np.arange(m), np.arange(m)] = diag
    LA = sigma.chol @ A
    X = LA @ np.swapaxes(LA, -1, -2)
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def sample_wishart(v, sigma, gen):
    """One Wishart(v, sigma) draw as a validated :class:`SpdMatrix`."""
    return SpdMatrix(sample_wishart_batch(v, sigma, 1, gen)[0])


def cov_ar(m, rho):
    """Autoregressive covariance with entries ``rho ** |k - l|``."""
    if not abs(rho) < 1:
        raise BadParam(f"|rho| must be below 1, got {rho}")
    k = np.arange(m)
    return SpdMatrix(float(rho) ** np.abs(k[:, None] - k[None, :]))


def cov_hc(m, rho, lam):
    """Heterogeneous compound covariance: ``rho*l_k*l_l`` off the diagonal, ``l_k**2`` on it."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (m,) or np.any(lam <= 0):
        raise BadParam("lambda must hold m positive entries")
    S = rho * np.outer(lam, lam)
    np.fill_diagonal(S, lam ** 2)
    return SpdMatrix(S)


# --- configuration and datasets ---------------------------------------------

@dataclass
class SimulationConfig:
    scenario: str
    p: int
    n: int
    m: int = 20
    spd_dim: int = 3
    metric: str = None
    alpha: float = None
    replicates: int = 1
    seed: int = 0
    K: int = 3
    gamma: float = 0.5
    s: int = None

    def __post_init__(self):
        if self.scenario not in N_INFORMATIVE:
            raise BadConfig(f"unknown scenario {self.scenario!r}")
        if self.metric is None:
            self.metric = "wasserstein" if self.scenario == "distributional" else "log_cholesky"
        kind = "distribution" if self.scenario == "distributional" else "spd"
        try:
            self.metric = check_kind_metric(kind, self.metric).value
        except ValueError as exc:
            raise BadConfig(str(exc)) from None
        if self.n < 4 or self.n % 2:
            raise BadConfig(f"n must be even and at least 4, got {self.n}")
        if self.p < N_INFORMATIVE[self.scenario]:
            raise BadConfig(f"p must be at least {N_INFORMATIVE[self.scenario]} for {self.scenario!r}")
        if self.m < 1:
            raise BadConfig("m must be positive")
        if self.scenario == "spd" and self.spd_dim not in LAMBDA:
            raise BadConfig(f"spd_dim must be 3 or 5, got {self.spd_dim}")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise BadConfig(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.replicates < 1:
            raise BadConfig("replicates must be positive")
        if self.seed < 0:
            raise BadConfig("seed must be non-negative")
        if self.K < 3 or not self.gamma > 0:
            raise BadConfig("need K >= 3 and gamma > 0")
        if self.s is not None and not 1 <= self.s <= self.p:
            raise BadConfig(f"s must lie in [1, p], got {self.s}")

    @property
    def model_size(self):
        return self.s if self.s is not None else min(default_model_size(self.n), self.p)


def balanced_labels(n):
    return np.concatenate([np.ones(n // 2, dtype=np.int8), -np.ones(n // 2, dtype=np.int8)])


def _draw_distributional(j, size, cls, gen):
    """Raw draws for feature ``j`` (0-based) and class ``cls``."""
    pos = cls == 1
    if j == 0:
        return gen.normal(0.3 if pos else -0.3, 1.0, size)
    if j == 1:
        return gen.uniform(-1.0, 1.0, size) if pos else gen.uniform(-0.8, 1.2, size)
    if j == 2:
        return gen.normal(0.0, 1.0 if pos else 1.5, size)
    if j == 3:
        return gen.uniform(-1.0, 1.0, size) if pos else gen.uniform(-1.4, 1.4, size)
    if j == 4:
        return gen.standard_normal(size) if pos else sample_t(3, size, gen)
    if j == 5:
        return sample_t(3 if pos else 1, size, gen)
    if j == 6:
        return sample_gev(0.0, 0.1 if pos else 0.2, 0.0, open_uniform(gen, size))
    if j == 7:
        return sample_gev(0.0, 0.1, 0.1 if pos else 0.4, open_uniform(gen, size))
    return gen.standard_normal(size)


def build_distributional_dataset(cfg, replicate=0):
    """Dataset of empirical distributions and the informative set ``{0..7}``."""
    if cfg.scenario != "distributional":
        raise BadConfig("config is not a distributional scenario")
    half = cfg.n // 2
    columns = []
    for j in range(cfg.p):
        gen = rngmod.substream(cfg.seed, rngmod.DATA, replicate, j)
        x = np.concatenate([_draw_distributional(j, (half, cfg.m), 1, gen),
                            _draw_distributional(j, (half, cfg.m), -1, gen)])
        columns.append(FeatureColumn.from_samples(x, cfg.metric))
    return LabeledDataset(columns, balanced_labels(cfg.n)), frozenset(range(8))


def spd_scale_pairs(m):
    """Scale matrices ``(positive, negative)`` of the ten informative SPD features."""
    lam = LAMBDA[m]
    eye = SpdMatrix(np.eye(m))
    pairs = [
        (eye, SpdMatrix(0.6 * np.eye(m))),
        (eye, cov_ar(m, 0.4)),
        (eye, cov_hc(m, 0.5, lam)),
        (cov_ar(m, -0.25), cov_ar(m, 0.25)),
        (cov_hc(m, 0.2, lam), cov_hc(m, 0.5, lam)),
    ]
    return [pair for pair in pairs for _ in range(2)]


def null_scales(m):
    """Candidate shared scale matrices for uninformative SPD features."""
    return [SpdMatrix(np.eye(m)), cov_ar(m, -0.2), cov_ar(m, 0.5), cov_hc(m, 0.5, LAMBDA[m])]


def build_spd_dataset(cfg, replicate=0):
    """Dataset of Wishart matrices and the informative set ``{0..9}``."""
    if cfg.scenario != "spd":
        raise BadConfig("config is not an spd scenario")
    m = cfg.spd_dim
    half = cfg.n // 2
    informative = spd_scale_pairs(m)
    nulls = null_scales(m)
    columns = []
    for j in range(cfg.p):
        gen = rngmod.substream(cfg.seed, rngmod.DATA, replicate, j)
        if j < len(informative):
            s_pos, s_neg = informative[j]
        else:
            s_pos = s_neg = nulls[int(gen.integers(len(nulls)))]
        mats = np.concatenate([sample_wishart_batch(WISHART_DOF, s_pos, half, gen),
                               sample_wishart_batch(WISHART_DOF, s_neg, half, gen)])
        columns.append(FeatureColumn.from_spd(mats, cfg.metric))
    return LabeledDataset(columns, balanced_labels(cfg.n)), frozenset(range(len(informative)))


def build_dataset(cfg, replicate=0):
    if cfg.scenario == "distributional":
        return build_distributional_dataset(cfg, replicate)
    return build_spd_dataset(cfg, replicate)


# --- evaluation -------------------------------------------------------------

def mms(res, true_set):
    """Minimum model size: the worst 1-based rank among the informative features."""
    true_set = sorted(int(j) for j in true_set)
    p = res.ranking.size
    if not true_set or true_set[0] < 0 or true_set[-1] >= p:
        raise BadSet("true set must be a non-empty subset of the feature indices")
    rank = np.empty(p, dtype=int)
    rank[res.ranking] = np.arange(1, p + 1)
    return int(rank[true_set].max())


@dataclass
class SimulationReport:
    """Aggregated replicate outcomes.

    ``proportions`` maps each informative feature to the share of replicates
    placing it among the ``model_size`` top-ranked features;
    ``fdr_proportions`` is the same share for the threshold-selected set.
    """

    config: dict
    model_size: int
    mms_quantiles: dict
    proportions: dict
    empirical_fdr: float = None
    fdr_proportions: dict = None
    mean_selected: float = None
    per_replicate: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def run_replicate(cfg, replicate):
    """Screen (and optionally threshold) one synthetic dataset; returns a record."""
    ds, true_set = build_dataset(cfg, replicate)
    all_rows = np.arange(ds.n)
    if cfg.alpha is None:
        omega = omega_matrix(ds, [all_rows])[0]
    else:
        split_seed = rngmod.derived_seed(cfg.seed, rngmod.SPLIT_SEED, replicate)
        rows1, rows2 = split_indices(ds.labels, cfg.K, split_seed)
        omega, omega1, omega2 = omega_matrix(ds, [all_rows, rows1, rows2])
    res = ScreeningResult.from_omega(omega, ds.labels)
    record = {
        "replicate": replicate,
        "mms": mms(res, true_set),
        "top_s": top_s(res, cfg.model_size).tolist(),
    }
    if cfg.alpha is not None:
        sel = select_from_split(omega1, omega2, rows1.size, rows2.size, cfg.alpha, cfg.gamma, split_seed)
        record.update(
            threshold=sel.threshold,
            selected=sel.selected.tolist(),
            fdp=fdp(sel.selected, true_set),
        )
    return record


def run_simulation(cfg, threads=1):
    """Run every replicate and aggregate MMS, top-s proportions and FDR."""
    reps = range(cfg.replicates)
    if threads <= 1:
        records = [run_replicate(cfg, r) for r in reps]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda r: run_replicate(cfg, r), reps))
    true_set = sorted(range(N_INFORMATIVE[cfg.scenario]))
    mms_values = np.array([r["mms"] for r in records], dtype=float)
    q = np.percentile(mms_values, [25, 50, 75])
    report = SimulationReport(
        config=asdict(cfg),
        model_size=cfg.model_size,
        mms_quantiles={"25": float(q[0]), "50": float(q[1]), "75": float(q[2])},
        proportions={j: _share(records, "top_s", j) for j in true_set},
        per_replicate=records,
    )
    if cfg.alpha is not None:
        report.empirical_fdr = float(np.mean([r["fdp"] for r in records]))
        report.fdr_proportions = {j: _share(records, "selected", j) for j in true_set}
        report.mean_selected = float(np.mean([len(r["selected"]) for r in records]))
    return report


def _share(records, key, j):
    return sum(j in r[key] for r in records) / len(records)
