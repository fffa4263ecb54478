import numpy as np


def random_instance(gen, n_range=(6, 50)):
    """Random symmetric distance matrix with injected ties, and labels.

    Entries are drawn from a small integer grid about half the time so that
    equal radii are common; labels are balanced or unbalanced at random with
    at least one sample per class.
    """
    n = int(gen.integers(n_range[0], n_range[1] + 1))
    if gen.random() < 0.5:
        vals = gen.integers(0, 4, size=(n, n)).astype(float)
    else:
        vals = gen.exponential(size=(n, n))
        # copy some entries to create exact ties
        k = int(gen.integers(0, n * n // 3 + 1))
        src = gen.integers(0, n * n, size=k)
        dst = gen.integers(0, n * n, size=k)
        vals.flat[dst] = vals.flat[src]
    D = np.triu(vals, 1)
    D = D + D.T
    if gen.random() < 0.5:
        y = np.where(np.arange(n) < n // 2, 1, -1)
    else:
        n_pos = int(gen.integers(1, n))
        y = np.where(np.arange(n) < n_pos, 1, -1)
    return D, gen.permutation(y)


def line_matrix(points):
    x = np.asarray(points, dtype=float)
    return np.abs(x[:, None] - x[None, :])
