"""Build a submatrix feature pool from whole covariance matrices, then classify.

Each subject has an R x R covariance matrix.  Every q-subset of regions gives
one feature: the q x q principal submatrix.  Screening picks the subsets
whose connectivity differs between classes, and k-NN on those features
predicts the class of held-out subjects.
"""
import numpy as np

from mkfilter import KnnConfig, build_submatrix_pool, evaluate_split, screen_all
from mkfilter.pool import sample_covariance

R, T, n = 10, 120, 60
gen = np.random.default_rng(0)
labels = np.repeat([1, -1], n // 2)

# positive subjects have correlated activity between regions 2 and 7
covs = []
for y in labels:
    X = gen.standard_normal((T, R))
    if y == 1:
        X[:, 7] = 0.7 * X[:, 2] + np.sqrt(1 - 0.7**2) * X[:, 7]
    covs.append(sample_covariance(X))

ds, pool = build_submatrix_pool(np.stack(covs), labels, q=2, metric="log_cholesky")
print(f"{len(pool)} features from {R} regions")

res = screen_all(ds)
best = res.ranking[:5]
for j in best:
    print(f"  regions {pool.regions_of(j)}: omega_hat={res.omega_hat[j]:.3f}")

target = pool.feature_of((2, 7))
print("rank of the (2, 7) submatrix:", res.rank_of(target))

for strategy in ("merging", "voting"):
    cfg = KnnConfig(k=3, strategy=strategy, selected=tuple(best[:3]))
    out = evaluate_split(ds, cfg, train_fraction=0.7, replicates=100, seed=0)
    acc = out["accuracy"]
    print(f"{strategy}: accuracy {acc['mean']:.3f} (se {acc['se']:.3f}), f1 {out['f1']['mean']:.3f}")
