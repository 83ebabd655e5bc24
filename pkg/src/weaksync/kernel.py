"""Nullspace structure of a graph Laplacian.

For a Laplacian in canonical block-triangular form the kernel is spanned by
the columns of ``[beta; blockdiag(1_{M_1}, ..., 1_{M_k})]`` where the
non-basic part solves ``L0 beta_i = -L0i 1``. Each row of ``beta`` is a
vector of convex weights telling how strongly a non-basic node follows each
basic bicomponent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import frozen, numerical_rank
from .errors import StructuralError
from .graph import BicomponentDecomposition, CanonicalLaplacian, canonical_laplacian

RESIDUAL_TOL = 1e-8
CLAMP_TOL = 1e-12
SUPPORT_TOL = 1e-12


def beta_coefficients(canon: CanonicalLaplacian) -> np.ndarray:
    """Solve ``L0 beta_i = -L0i 1_{M_i}`` for every basic bicomponent.

    Returns an ``M0 x k`` matrix with nonnegative rows summing to one.
    Slightly negative roundoff is clamped to zero; anything below
    ``-1e-12`` or a residual above ``1e-8`` raises :class:`StructuralError`.
    """
    m0 = canon.block_sizes[0]
    k = len(canon.block_sizes) - 1
    if m0 == 0:
        return np.zeros((0, k))
    rhs = np.column_stack([-c.sum(axis=1) for c in canon.couplings])
    L0 = canon.L0
    try:
        beta = np.linalg.solve(L0, rhs)
    except np.linalg.LinAlgError as exc:
        raise StructuralError("grounded Laplacian L0 is singular") from exc
    residual = float(np.max(np.abs(L0 @ beta - rhs)))
    if not np.isfinite(residual) or residual > RESIDUAL_TOL:
        raise StructuralError(f"beta solve residual {residual:.3g} exceeds {RESIDUAL_TOL:g}; L0 is singular")
    if np.any(beta <= -CLAMP_TOL):
        j, i = np.argwhere(beta <= -CLAMP_TOL)[0]
        raise StructuralError(f"beta[{j},{i}] = {beta[j, i]:.3g} is negative")
    beta[beta < 0] = 0.0
    return beta


def kernel_basis(beta, block_sizes) -> np.ndarray:
    """Stack ``beta`` over the block-diagonal ones, in canonical node order."""
    beta = np.asarray(beta, dtype=float)
    m0, sizes = block_sizes[0], block_sizes[1:]
    k = len(sizes)
    out = np.zeros((m0 + sum(sizes), k))
    out[:m0] = beta.reshape(m0, k)
    start = m0
    for i, m in enumerate(sizes):
        out[start : start + m, i] = 1.0
        start += m
    return out


def mixing_matrix(beta, block_sizes) -> np.ndarray:
    """Row ``j`` concatenates ``beta[j, i] / M_i * 1^T_{M_i}`` over ``i``.

    Every kernel vector ``(v0, vb)`` in canonical coordinates satisfies
    ``v0 = B vb``.
    """
    beta = np.asarray(beta, dtype=float)
    m0, sizes = block_sizes[0], block_sizes[1:]
    beta = beta.reshape(m0, len(sizes))
    blocks = [np.outer(beta[:, i], np.full(m, 1.0 / m)) for i, m in enumerate(sizes)]
    if not blocks:
        return np.zeros((m0, 0))
    return np.hstack(blocks)


@dataclass(frozen=True)
class KernelStructure:
    beta: np.ndarray
    kernel_basis: np.ndarray
    block_sizes: tuple[int, ...]
    order: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.block_sizes) - 1

    def beta_row(self, node) -> np.ndarray | None:
        """Convex weights of a non-basic node (original index), else None."""
        pos = self.order.index(node)
        if pos >= self.block_sizes[0]:
            return None
        return self.beta[pos]

    def beta_by_node(self) -> dict[int, np.ndarray]:
        return {v: self.beta[r] for r, v in enumerate(self.order[: self.block_sizes[0]])}

    def kernel_basis_original(self) -> np.ndarray:
        """Kernel basis with rows in the original node order."""
        out = np.empty_like(self.kernel_basis)
        out[list(self.order)] = self.kernel_basis
        return out


def kernel_structure(L, d: BicomponentDecomposition) -> KernelStructure:
    canon = canonical_laplacian(L, d)
    beta = beta_coefficients(canon)
    return KernelStructure(
        beta=frozen(beta),
        kernel_basis=frozen(kernel_basis(beta, d.block_sizes)),
        block_sizes=d.block_sizes,
        order=d.canonical_order,
    )


@dataclass(frozen=True)
class ScaledReduction:
    """Laplacian of the nodes driven by one basic bicomponent.

    ``support`` holds original node indices in canonical order; ``reduced``
    is ``Gamma^{-1} L_sub Gamma`` which has zero row sums.
    """

    bicomponent_index: int
    support: tuple[int, ...]
    gamma: np.ndarray
    submatrix: np.ndarray
    reduced: np.ndarray

    @property
    def size(self) -> int:
        return len(self.support)

    @property
    def rank(self) -> int:
        return numerical_rank(self.reduced)


def scaled_reduction(L, ks: KernelStructure, i: int) -> ScaledReduction:
    """Restrict ``L`` to the support of kernel column ``i`` and rescale it."""
    if not 0 <= i < ks.k:
        raise IndexError(f"bicomponent index {i} out of range for k={ks.k}")
    L = np.asarray(L, dtype=float)
    column = ks.kernel_basis[:, i]
    rows = np.flatnonzero(column > SUPPORT_TOL)
    support = [ks.order[r] for r in rows]
    gamma = column[rows]
    if np.any(gamma <= SUPPORT_TOL):
        raise StructuralError(f"support of bicomponent {i} contains a non-positive scaling")
    sub = L[np.ix_(support, support)]
    reduced = sub * gamma[None, :] / gamma[:, None]
    return ScaledReduction(
        bicomponent_index=i,
        support=tuple(support),
        gamma=frozen(np.diag(gamma)),
        submatrix=frozen(sub),
        reduced=frozen(reduced),
    )
