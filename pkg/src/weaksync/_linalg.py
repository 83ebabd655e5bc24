import numpy as np

RANK_RTOL = 1e-9


def rank_tolerance(singular_values):
    smax = float(singular_values[0]) if len(singular_values) else 0.0
    return RANK_RTOL * max(1.0, smax)


def numerical_rank(matrix):
    """Rank with the singular-value threshold ``1e-9 * max(1, s_max)``."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 0
    s = np.linalg.svd(matrix, compute_uv=False)
    return int(np.sum(s > rank_tolerance(s)))


def smallest_singular_value(matrix):
    s = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    return float(s[-1]), rank_tolerance(s)


def frozen(array):
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out
