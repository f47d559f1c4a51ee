"""Topological features of multilayer networks.

Node-averaged statistics only consider occupied nodes of a view: nodes that
carry an edge in it or were observed in a quantile sequence. Empty quantile
slots are ignored so features do not depend on ``eta`` padding.

Degree convention (unweighted): a node's degree is the number of stored
edges incident to it, with a self-loop counted once. A directed pair
``i -> j`` and ``j -> i`` therefore contributes 2 to the degree of each
endpoint.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import shortest_path

from .core import MappingError
from .mnet import MultilayerNetwork, SubgraphView

MEASURES = ("avg_degree", "avg_path_length", "modularity", "n_communities")
VIEWS = ("intra1", "intra2", "inter", "all")
JSD_PAIRS = (
    ("intra1", "intra2"),
    ("intra1", "inter"),
    ("intra2", "inter"),
    ("all1", "all2"),
)
FEATURE_NAMES: tuple[str, ...] = (
    tuple(f"{v}_{m}" for v in VIEWS for m in MEASURES)
    + ("avg_ratio_degree",)
    + tuple(f"jsd_{a}_{b}" for a, b in JSD_PAIRS)
)
FEATURE_SUBSETS: dict[str, tuple[str, ...]] = {
    "intra": tuple(n for n in FEATURE_NAMES if n.startswith("intra")),
    "inter": tuple(n for n in FEATURE_NAMES if n.startswith("inter")),
    "all": tuple(n for n in FEATURE_NAMES if n.startswith("all_")),
    "relational": tuple(n for n in FEATURE_NAMES if n == "avg_ratio_degree" or n.startswith("jsd_")),
    "full": FEATURE_NAMES,
}


class _ViewGraph:
    """Index-based snapshot of a view restricted to its occupied nodes."""

    def __init__(self, view: SubgraphView):
        self.view = view
        self.nodes = view.occupied
        index = {node: k for k, node in enumerate(self.nodes)}
        n = len(self.nodes)
        src = np.fromiter((index[e.src] for e in view.edges), dtype=np.int64, count=len(view.edges))
        dst = np.fromiter((index[e.dst] for e in view.edges), dtype=np.int64, count=len(view.edges))
        w = np.fromiter((e.weight for e in view.edges), dtype=float, count=len(view.edges))
        self.n = n
        self.src, self.dst, self.w = src, dst, w
        loops = src == dst
        self.degree = (np.bincount(src, minlength=n) + np.bincount(dst[~loops], minlength=n)).astype(np.int64)

    @cached_property
    def symmetric_weights(self) -> sparse.csr_matrix:
        # S = W + W^T; undirected edges enter both triangles once, loops as 2w
        n = self.n
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        data = np.concatenate([self.w, self.w])
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    @cached_property
    def simple_adjacency(self) -> sparse.csr_matrix:
        keep = self.src != self.dst
        n = self.n
        rows = np.concatenate([self.src[keep], self.dst[keep]])
        cols = np.concatenate([self.dst[keep], self.src[keep]])
        A = sparse.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
        A.data[:] = 1.0
        return A


def _graph(g) -> _ViewGraph:
    return g if isinstance(g, _ViewGraph) else _ViewGraph(g)


def degrees(g) -> np.ndarray:
    """Unweighted degree of each occupied node of a view."""
    return _graph(g).degree


def avg_degree(g) -> float:
    g = _graph(g)
    if g.n == 0:
        raise MappingError("average degree of an empty node set")
    return float(g.degree.mean())


@dataclass(frozen=True)
class PathLengthResult:
    value: float
    degenerate: bool

    def __float__(self) -> float:
        return self.value


def avg_path_length(g) -> PathLengthResult:
    """Mean BFS distance over mutually reachable ordered pairs of distinct nodes.

    Edges are taken as undirected and unweighted. When no pair is reachable
    the result is 0 with ``degenerate`` set.
    """
    g = _graph(g)
    if g.n == 0:
        raise MappingError("average path length of an empty node set")
    if g.n < 2:
        return PathLengthResult(0.0, True)
    dist = shortest_path(g.simple_adjacency, method="D", directed=False, unweighted=True)
    np.fill_diagonal(dist, np.inf)
    finite = dist[np.isfinite(dist)]
    if finite.size == 0:
        return PathLengthResult(0.0, True)
    return PathLengthResult(float(finite.mean()), False)


def modularity_matrix(S, labels) -> float:
    """Newman modularity of ``labels`` on a symmetric weight matrix ``S``."""
    S = sparse.csr_matrix(S)
    labels = np.asarray(labels)
    total = S.sum()
    if total == 0:
        return 0.0
    k = np.asarray(S.sum(axis=1)).ravel()
    coo = S.tocoo()
    inside = coo.data[labels[coo.row] == labels[coo.col]].sum()
    _, inv = np.unique(labels, return_inverse=True)
    tot = np.bincount(inv, weights=k)
    return float(inside / total - np.sum((tot / total) ** 2))


def modularity(g, partition) -> float:
    """Weighted modularity of a view; directed weights are summed both ways.

    ``partition`` maps each occupied node (in ``g.view.occupied`` order, or a
    dict keyed by NodeId) to a community label.
    """
    g = _graph(g)
    if isinstance(partition, dict):
        partition = [partition[node] for node in g.nodes]
    return modularity_matrix(g.symmetric_weights, partition)


def _one_level(S: sparse.csr_matrix) -> tuple[np.ndarray, bool]:
    n = S.shape[0]
    k = np.asarray(S.sum(axis=1)).ravel()
    m2 = k.sum()
    indptr, indices, data = S.indptr, S.indices, S.data
    nbrs = [
        [(j, w) for j, w in zip(indices[indptr[i]:indptr[i + 1]].tolist(), data[indptr[i]:indptr[i + 1]].tolist()) if j != i]
        for i in range(n)
    ]
    k = k.tolist()
    comm = list(range(n))
    tot = list(k)
    any_move = False
    while True:
        moved = False
        for i in range(n):
            ci = comm[i]
            ki = k[i]
            links: dict[int, float] = {}
            for j, w in nbrs[i]:
                c = comm[j]
                links[c] = links.get(c, 0.0) + w
            tot[ci] -= ki
            best = ci
            best_gain = links.get(ci, 0.0) - tot[ci] * ki / m2
            for c, w in links.items():
                gain = w - tot[c] * ki / m2
                if gain > best_gain + 1e-12:
                    best, best_gain = c, gain
            tot[best] += ki
            if best != ci:
                comm[i] = best
                moved = True
        if not moved:
            break
        any_move = True
    _, labels = np.unique(np.asarray(comm), return_inverse=True)
    return labels, any_move


def louvain(g) -> tuple[dict, int]:
    """Multi-level modularity optimisation (Louvain).

    Nodes are visited in ascending id order and a node only moves for a
    strictly positive gain, so results are deterministic. Returns the
    partition keyed by occupied node and the number of communities.
    """
    g = _graph(g)
    labels = louvain_labels(g.symmetric_weights)
    return dict(zip(g.nodes, labels.tolist())), int(labels.max() + 1) if labels.size else 0


def louvain_labels(S) -> np.ndarray:
    S = sparse.csr_matrix(S, dtype=float)
    n = S.shape[0]
    membership = np.arange(n)
    if n == 0 or S.sum() == 0:
        return membership
    current = S
    while True:
        labels, moved = _one_level(current)
        if not moved:
            break
        membership = labels[membership]
        nc = labels.max() + 1
        P = sparse.csr_matrix((np.ones(labels.size), (np.arange(labels.size), labels)), shape=(labels.size, nc))
        current = (P.T @ current @ P).tocsr()
        if nc == 1:
            break
    return membership


@dataclass(frozen=True)
class DegreeDistribution:
    values: np.ndarray
    probs: np.ndarray

    @classmethod
    def from_degrees(cls, degs) -> "DegreeDistribution":
        counts = Counter(np.asarray(degs, dtype=np.int64).tolist())
        if not counts:
            raise MappingError("degree distribution of an empty node set")
        values = np.array(sorted(counts))
        probs = np.array([counts[v] for v in values], dtype=float)
        return cls(values, probs / probs.sum())


def jsd(p: DegreeDistribution, q: DegreeDistribution) -> float:
    """Jensen-Shannon divergence in bits on the union of supports."""
    for d in (p, q):
        if np.any(d.probs < 0) or not np.isclose(d.probs.sum(), 1.0, atol=1e-9):
            raise MappingError("degree distribution is not normalised")
    support = np.union1d(p.values, q.values)
    pp = np.zeros(support.size)
    qq = np.zeros(support.size)
    pp[np.searchsorted(support, p.values)] = p.probs
    qq[np.searchsorted(support, q.values)] = q.probs
    mix = 0.5 * (pp + qq)

    def kl(a):
        nz = a > 0
        return float(np.sum(a[nz] * np.log2(a[nz] / mix[nz])))

    return float(min(1.0, max(0.0, 0.5 * kl(pp) + 0.5 * kl(qq))))


def avg_ratio_degree(net: MultilayerNetwork) -> float:
    """Mean over occupied nodes of inter-degree / (intra-degree + inter-degree)."""
    if net.m < 2:
        raise MappingError("ratio degree needs at least two layers")
    intra = Counter()
    inter = Counter()
    for e in net.edges():
        target = intra if e.src.layer == e.dst.layer else inter
        target[e.src] += 1
        if e.dst != e.src:
            target[e.dst] += 1
    nodes = net.occupied_nodes()
    if not nodes:
        return 0.0
    ratios = []
    for v in nodes:
        total = intra[v] + inter[v]
        ratios.append(inter[v] / total if total else 0.0)
    return float(np.mean(ratios))


def _label_free_partition(g: _ViewGraph) -> tuple[np.ndarray, float]:
    # Louvain depends on visit order; on two-layer views run it with each
    # layer first and keep the better result so that relabelling the layers
    # cannot change the outcome
    S = g.symmetric_weights
    orders = [np.arange(g.n)]
    if len(g.view.layers) == 2:
        layer = np.array([node.layer for node in g.nodes])
        orders.append(np.concatenate([np.flatnonzero(layer == g.view.layers[1]),
                                      np.flatnonzero(layer == g.view.layers[0])]))
    best = None
    for order in orders:
        labels = np.empty(g.n, dtype=np.int64)
        labels[order] = louvain_labels(S[order][:, order])
        q = modularity_matrix(S, labels)
        key = (round(q, 12), -int(labels.max() + 1))
        if best is None or key > best[0]:
            best = (key, labels, q)
    return best[1], best[2]


def view_measures(g) -> dict[str, float]:
    g = _graph(g)
    if g.n == 0:
        raise MappingError(f"{g.view.kind} view has no occupied nodes")
    labels, q = _label_free_partition(g)
    return {
        "avg_degree": avg_degree(g),
        "avg_path_length": avg_path_length(g).value,
        "modularity": q,
        "n_communities": float(labels.max() + 1),
    }


def feature_vector(net: MultilayerNetwork) -> dict[str, float]:
    """The 21 named features of a two-layer network, in FEATURE_NAMES order."""
    if net.m != 2:
        raise MappingError(f"feature vector is defined for 2-layer networks, got m={net.m}")
    graphs = {
        "intra1": _ViewGraph(net.subgraph("intra", 1)),
        "intra2": _ViewGraph(net.subgraph("intra", 2)),
        "inter": _ViewGraph(net.subgraph("inter", 1, 2)),
        "all": _ViewGraph(net.subgraph("all", 1, 2)),
    }
    out: dict[str, float] = {}
    for name in VIEWS:
        for measure, value in view_measures(graphs[name]).items():
            out[f"{name}_{measure}"] = value
    out["avg_ratio_degree"] = avg_ratio_degree(net)

    all_g = graphs["all"]
    layer_of = np.array([node.layer for node in all_g.nodes])
    dists = {name: DegreeDistribution.from_degrees(graphs[name].degree) for name in ("intra1", "intra2", "inter")}
    dists["all1"] = DegreeDistribution.from_degrees(all_g.degree[layer_of == 1])
    dists["all2"] = DegreeDistribution.from_degrees(all_g.degree[layer_of == 2])
    for a, b in JSD_PAIRS:
        out[f"jsd_{a}_{b}"] = jsd(dists[a], dists[b])
    return {name: out[name] for name in FEATURE_NAMES}
