"""Weighted digraphs, Laplacians and the bicomponent decomposition.

Node indices are 0-based inside the library. ``weights[i, j]`` is the weight
of the edge ``j -> i``, so row ``i`` of the adjacency matrix lists the
in-neighbours of node ``i``. File formats use 1-based node labels.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._linalg import frozen
from .errors import GraphValidationError


@dataclass(frozen=True)
class DirectedWeightedGraph:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphValidationError(f"adjacency matrix must be square, got shape {w.shape}")
        if w.shape[0] < 1:
            raise GraphValidationError("graph needs at least one node")
        bad = np.argwhere(~np.isfinite(w))
        if len(bad):
            i, j = bad[0]
            raise GraphValidationError(f"weight a[{i},{j}] is not finite")
        bad = np.argwhere(w < 0)
        if len(bad):
            i, j = bad[0]
            raise GraphValidationError(f"negative weight a[{i},{j}] = {w[i, j]!r}")
        bad = np.flatnonzero(np.diag(w) != 0)
        if len(bad):
            i = bad[0]
            raise GraphValidationError(f"self-loop a[{i},{i}] = {w[i, i]!r}; diagonal must be zero")
        object.__setattr__(self, "weights", frozen(w))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def from_edges(cls, n, edges) -> DirectedWeightedGraph:
        """Build from ``(source, target, weight)`` triples with 0-based nodes.

        Repeated edges accumulate their weights.
        """
        w = np.zeros((n, n))
        for edge in edges:
            src, dst = int(edge[0]), int(edge[1])
            weight = float(edge[2]) if len(edge) > 2 else 1.0
            if not (0 <= src < n and 0 <= dst < n):
                raise GraphValidationError(f"edge {src}->{dst} out of range for n={n}")
            w[dst, src] += weight
        return cls(w)

    def edges(self):
        """Yield ``(source, target, weight)`` in row-major order of the matrix."""
        for dst, src in zip(*np.nonzero(self.weights > 0)):
            yield int(src), int(dst), float(self.weights[dst, src])

    def successors(self, node):
        return np.flatnonzero(self.weights[:, node] > 0)


def build_laplacian(g) -> np.ndarray:
    """Return ``L = diag(A 1) - A`` for a graph or a raw adjacency matrix."""
    if not isinstance(g, DirectedWeightedGraph):
        g = DirectedWeightedGraph(g)
    a = g.weights
    L = np.subtract(0.0, a)
    L[np.diag_indices_from(L)] = a.sum(axis=1)
    return L


def strongly_connected_components(g: DirectedWeightedGraph) -> list[list[int]]:
    """Tarjan's algorithm, iterative. Components come out sinks-first."""
    n = g.n
    succ = [g.successors(v) for v in range(n)]
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0

    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            if pos < len(succ[v]):
                work[-1] = (v, pos + 1)
                w = succ[v][pos]
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(sorted(int(u) for u in comp))
    return components


@dataclass(frozen=True)
class BicomponentDecomposition:
    """SCC partition of a digraph with its basic/non-basic classification.

    ``components`` are sorted by smallest node index. ``canonical_order``
    lists the non-basic nodes first (downstream components before upstream
    ones) followed by each basic bicomponent in component order.
    """

    n: int
    components: tuple[tuple[int, ...], ...]
    basic_flags: tuple[bool, ...]
    canonical_order: tuple[int, ...]
    block_sizes: tuple[int, ...]
    nonbasic_components: tuple[int, ...] = field(default=())

    @property
    def k(self) -> int:
        return len(self.block_sizes) - 1

    @property
    def m0(self) -> int:
        return self.block_sizes[0]

    @property
    def basic_components(self) -> list[tuple[int, ...]]:
        return [c for c, basic in zip(self.components, self.basic_flags) if basic]

    @property
    def nonbasic_nodes(self) -> tuple[int, ...]:
        return self.canonical_order[: self.m0]

    def component_of(self) -> np.ndarray:
        labels = np.empty(self.n, dtype=int)
        for idx, comp in enumerate(self.components):
            labels[list(comp)] = idx
        return labels

    def basic_index_of(self) -> dict[int, int]:
        """Map node -> basic bicomponent index (0-based) for basic nodes only."""
        out = {}
        for i, comp in enumerate(self.basic_components):
            for v in comp:
                out[v] = i
        return out


def decompose_bicomponents(g: DirectedWeightedGraph) -> BicomponentDecomposition:
    raw = strongly_connected_components(g)
    components = sorted((tuple(c) for c in raw), key=lambda c: c[0])
    label = np.empty(g.n, dtype=int)
    for idx, comp in enumerate(components):
        label[list(comp)] = idx

    ncomp = len(components)
    upstream: list[set[int]] = [set() for _ in range(ncomp)]
    downstream: list[set[int]] = [set() for _ in range(ncomp)]
    for src, dst, _ in g.edges():
        a, b = label[src], label[dst]
        if a != b:
            downstream[a].add(b)
            upstream[b].add(a)
    basic = tuple(not upstream[c] for c in range(ncomp))

    # Reverse topological order over non-basic components: a component is
    # placed once everything it feeds (among non-basic ones) is placed.
    nonbasic = [c for c in range(ncomp) if not basic[c]]
    pending = {c: sum(1 for d in downstream[c] if not basic[d]) for c in nonbasic}
    heap = [c for c in nonbasic if pending[c] == 0]
    heapq.heapify(heap)
    order_nb = []
    while heap:
        c = heapq.heappop(heap)
        order_nb.append(c)
        for u in upstream[c]:
            if not basic[u]:
                pending[u] -= 1
                if pending[u] == 0:
                    heapq.heappush(heap, u)

    canonical = [v for c in order_nb for v in components[c]]
    sizes = [len(canonical)]
    for c in range(ncomp):
        if basic[c]:
            canonical.extend(components[c])
            sizes.append(len(components[c]))
    return BicomponentDecomposition(
        n=g.n,
        components=tuple(components),
        basic_flags=basic,
        canonical_order=tuple(int(v) for v in canonical),
        block_sizes=tuple(sizes),
        nonbasic_components=tuple(order_nb),
    )


def has_directed_spanning_tree(d: BicomponentDecomposition) -> bool:
    return d.k == 1


@dataclass(frozen=True)
class CanonicalLaplacian:
    """``L`` permuted into block-triangular form with addressable blocks.

    ``matrix == L[np.ix_(order, order)]``, i.e. ``P L P^T`` where row ``r`` of
    ``P`` selects node ``order[r]``.
    """

    order: np.ndarray
    matrix: np.ndarray
    block_sizes: tuple[int, ...]

    def _bounds(self):
        return np.concatenate([[0], np.cumsum(self.block_sizes)])

    @property
    def L0(self) -> np.ndarray:
        m0 = self.block_sizes[0]
        return self.matrix[:m0, :m0]

    def coupling(self, i) -> np.ndarray:
        """Block ``L_{0i}`` for basic bicomponent ``i`` (0-based)."""
        b = self._bounds()
        return self.matrix[: b[1], b[i + 1] : b[i + 2]]

    def block(self, i) -> np.ndarray:
        """Block ``L_i`` of basic bicomponent ``i`` (0-based)."""
        b = self._bounds()
        return self.matrix[b[i + 1] : b[i + 2], b[i + 1] : b[i + 2]]

    @property
    def couplings(self) -> list[np.ndarray]:
        return [self.coupling(i) for i in range(len(self.block_sizes) - 1)]

    @property
    def blocks(self) -> list[np.ndarray]:
        return [self.block(i) for i in range(len(self.block_sizes) - 1)]

    def permutation_matrix(self) -> np.ndarray:
        n = len(self.order)
        P = np.zeros((n, n))
        P[np.arange(n), self.order] = 1.0
        return P


def canonical_laplacian(L, d: BicomponentDecomposition) -> CanonicalLaplacian:
    L = np.asarray(L, dtype=float)
    order = np.array(d.canonical_order, dtype=int)
    order.setflags(write=False)
    return CanonicalLaplacian(
        order=order,
        matrix=frozen(L[np.ix_(order, order)]),
        block_sizes=d.block_sizes,
    )


# -- file formats -----------------------------------------------------------


def graph_to_dict(g: DirectedWeightedGraph) -> dict:
    edges = sorted(g.edges())
    return {
        "n": g.n,
        "edges": [{"from": s + 1, "to": t + 1, "weight": w} for s, t, w in edges],
    }


def graph_from_dict(data: dict) -> DirectedWeightedGraph:
    if "n" not in data:
        raise GraphValidationError("graph JSON needs an 'n' field")
    n = int(data["n"])
    edges = []
    for pos, e in enumerate(data.get("edges", [])):
        try:
            edges.append((int(e["from"]) - 1, int(e["to"]) - 1, float(e.get("weight", 1.0))))
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphValidationError(f"edges[{pos}]: malformed edge {e!r}") from exc
    return DirectedWeightedGraph.from_edges(n, edges)


def parse_edge_list(text: str, n: int | None = None) -> DirectedWeightedGraph:
    """Parse ``from to [weight]`` lines with 1-based nodes; ``#`` starts a comment.

    Without ``n`` the node count is the largest label seen.
    """
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphValidationError(f"line {lineno}: expected 'from to [weight]', got {line!r}")
        try:
            src, dst = int(parts[0]), int(parts[1])
            weight = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise GraphValidationError(f"line {lineno}: {exc}") from exc
        if src < 1 or dst < 1:
            raise GraphValidationError(f"line {lineno}: node labels are 1-based")
        edges.append((src - 1, dst - 1, weight))
    if n is None:
        n = max((max(s, t) for s, t, _ in edges), default=-1) + 1
    return DirectedWeightedGraph.from_edges(n, edges)


def load_graph(path) -> DirectedWeightedGraph:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return graph_from_dict(json.loads(text))
    return parse_edge_list(text)
