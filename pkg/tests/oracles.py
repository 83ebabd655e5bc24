"""Brute-force reference computations, independent of the package internals."""

import itertools

import numpy as np


def random_digraph(rng, n_max=12, n_min=1):
    n = int(rng.integers(n_min, n_max + 1))
    p = rng.uniform(0.0, 0.5)
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    w = np.where(mask, rng.uniform(0.1, 2.0, (n, n)), 0.0)
    return w


def random_spanning_tree_digraph(rng, n_max=8, extra=0.2):
    n = int(rng.integers(2, n_max + 1))
    w = np.zeros((n, n))
    perm = rng.permutation(n)
    for pos in range(1, n):
        parent = perm[rng.integers(0, pos)]
        w[perm[pos], parent] = rng.uniform(0.5, 1.5)
    extra_mask = (rng.random((n, n)) < extra) & (w == 0)
    np.fill_diagonal(extra_mask, False)
    w[extra_mask] = rng.uniform(0.5, 1.5, extra_mask.sum())
    return w


def laplacian(w):
    w = np.asarray(w, dtype=float)
    return np.diag(w.sum(axis=1)) - w


def reach(w):
    """reach[s, t] is True when t is reachable from s (s reaches itself)."""
    n = len(w)
    r = (np.asarray(w).T > 0) | np.eye(n, dtype=bool)
    for m in range(n):
        r = r | (r[:, [m]] & r[[m], :])
    return r


def sccs(w):
    r = reach(w)
    mutual = r & r.T
    seen, out = set(), []
    for v in range(len(w)):
        if v not in seen:
            comp = tuple(int(u) for u in np.flatnonzero(mutual[v]))
            seen.update(comp)
            out.append(comp)
    return out


def basic_sccs(w):
    w = np.asarray(w)
    out = []
    for comp in sccs(w):
        outside = [u for u in range(len(w)) if u not in comp]
        if not np.any(w[np.ix_(list(comp), outside)] > 0):
            out.append(comp)
    return out


def has_root(w):
    r = reach(w)
    return bool(np.any(r.all(axis=1)))


def svd_rank(m, rtol=1e-9):
    s = np.linalg.svd(np.asarray(m, dtype=float), compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > rtol * max(1.0, s[0])))


def svd_nullspace(m, rtol=1e-9):
    _, s, vh = np.linalg.svd(np.asarray(m, dtype=float))
    tol = rtol * max(1.0, s[0]) if s.size else 0.0
    rank = int(np.sum(s > tol))
    return vh[rank:].T


def block_pattern_ok(P_L, sizes):
    """Zero blocks below L0 and off the basic diagonal blocks."""
    b = np.concatenate([[0], np.cumsum(sizes)])
    for r in range(1, len(sizes)):
        for c in range(len(sizes)):
            if r != c and np.any(P_L[b[r] : b[r + 1], b[c] : b[c + 1]] != 0):
                return False
    return True


def permutations_with_pattern(L, sizes):
    """Enumerate every node order giving the canonical block pattern."""
    n = len(L)
    found = []
    for perm in itertools.permutations(range(n)):
        PL = L[np.ix_(perm, perm)]
        if block_pattern_ok(PL, sizes):
            found.append(perm)
    return found


def kron_system(A_t, B_t, H_t, L):
    """Literal ``I(x)A_t + (I(x)B_t)(L(x)H_t)`` for identical agents."""
    N = len(L)
    eye = np.eye(N)
    return np.kron(eye, A_t) + np.kron(eye, B_t) @ np.kron(L, H_t)
