"""Multilayer network storage, subgraph views and serialization.

Nodes live on a fixed grid of ``m`` layers by ``eta`` nodes per layer and are
addressed with 1-based ``NodeId(layer, quantile)``. Intra-layer edges are
directed (self-loops allowed); inter-layer edges are stored once per
unordered pair, keyed with the lower layer first.
"""

from __future__ import annotations

import csv
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .core import MappingError

MAX_SUPRA_SIZE = 10_000


class CapacityError(MappingError):
    pass


class NodeId(NamedTuple):
    layer: int
    quantile: int


class Edge(NamedTuple):
    src: NodeId
    dst: NodeId
    weight: int
    directed: bool


class MultilayerNetwork:
    """Sparse multilayer network on an ``m`` x ``eta`` node grid.

    Parameters
    ----------
    m : int
        Number of layers.
    eta : int
        Nodes per layer.
    directed_intra : bool
        Whether intra-layer edges are directed. Visibility-graph layers are
        undirected and canonicalised to ``i <= j``.
    """

    def __init__(self, m: int, eta: int, directed_intra: bool = True):
        if m < 1 or eta < 1:
            raise MappingError(f"m and eta must be positive, got m={m}, eta={eta}")
        self.m = int(m)
        self.eta = int(eta)
        self.directed_intra = directed_intra
        self._intra: dict[int, dict[tuple[int, int], int]] = {a: {} for a in range(1, self.m + 1)}
        self._inter: dict[tuple[int, int], dict[tuple[int, int], int]] = {
            (a, b): {} for a in range(1, self.m + 1) for b in range(a + 1, self.m + 1)
        }
        self._marked: set[NodeId] = set()
        self.q_seqs: dict[int, np.ndarray] = {}
        self._frozen = False

    # -- construction ------------------------------------------------------

    def _check_node(self, node) -> NodeId:
        node = NodeId(int(node[0]), int(node[1]))
        if not (1 <= node.layer <= self.m and 1 <= node.quantile <= self.eta):
            raise MappingError(f"node {tuple(node)} outside the {self.m}x{self.eta} grid")
        return node

    def _check_layer(self, layer: int) -> int:
        if not 1 <= layer <= self.m:
            raise MappingError(f"unknown layer {layer}; network has {self.m} layers")
        return int(layer)

    def _check_mutable(self):
        if self._frozen:
            raise MappingError("network is frozen")

    def freeze(self) -> "MultilayerNetwork":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def add_or_increment_edge(self, src, dst, amount: int = 1) -> "MultilayerNetwork":
        """Add ``amount`` to the edge ``src -> dst``, creating it if absent."""
        self._check_mutable()
        src, dst = self._check_node(src), self._check_node(dst)
        if int(amount) != amount or amount < 1:
            raise MappingError(f"amount must be a positive integer, got {amount!r}")
        if src.layer == dst.layer:
            key = (src.quantile, dst.quantile)
            if not self.directed_intra and key[0] > key[1]:
                key = key[::-1]
            store = self._intra[src.layer]
        else:
            if src.layer > dst.layer:
                src, dst = dst, src
            key = (src.quantile, dst.quantile)
            store = self._inter[(src.layer, dst.layer)]
        store[key] = store.get(key, 0) + int(amount)
        return self

    def add_intra_counts(self, layer: int, counts: np.ndarray) -> None:
        """Bulk-add an ``eta x eta`` count matrix to a layer's intra edges."""
        self._check_mutable()
        store = self._intra[self._check_layer(layer)]
        self._add_counts(store, counts, symmetric=not self.directed_intra)

    def add_inter_counts(self, layer_a: int, layer_b: int, counts: np.ndarray) -> None:
        """Bulk-add inter-layer counts; ``counts[i-1, j-1]`` links (a, i) with (b, j)."""
        self._check_mutable()
        a, b = self._check_layer(layer_a), self._check_layer(layer_b)
        if a == b:
            raise MappingError("inter-layer counts need two distinct layers")
        counts = np.asarray(counts)
        if a > b:
            a, b, counts = b, a, counts.T
        self._add_counts(self._inter[(a, b)], counts)

    def _add_counts(self, store, counts, symmetric=False):
        counts = np.asarray(counts)
        if counts.shape != (self.eta, self.eta):
            raise MappingError(f"count matrix must be {self.eta}x{self.eta}, got {counts.shape}")
        if np.any(counts < 0) or not np.array_equal(counts, np.round(counts)):
            raise MappingError("counts must be non-negative integers")
        if symmetric:
            counts = np.triu(counts + counts.T - np.diag(np.diag(counts)))
        rows, cols = np.nonzero(counts)
        self._add_pairs(store, rows + 1, cols + 1, counts[rows, cols].astype(np.int64))

    @staticmethod
    def _add_pairs(store, src, dst, weights):
        get = store.get
        for key, w in zip(zip(src.tolist(), dst.tolist()), weights.tolist()):
            store[key] = get(key, 0) + w

    def add_edges(self, layer_a: int, layer_b: int, src, dst, weights=None) -> None:
        """Bulk-add edges between 1-based node indices of two (or one) layers.

        ``weights`` defaults to 1 per edge. Undirected intra edges and all
        inter edges are canonicalised like :meth:`add_or_increment_edge`.
        """
        self._check_mutable()
        a, b = self._check_layer(layer_a), self._check_layer(layer_b)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if src.shape != dst.shape:
            raise MappingError("src and dst must have equal length")
        weights = np.ones(src.shape, dtype=np.int64) if weights is None else np.asarray(weights, dtype=np.int64)
        if src.size == 0:
            return
        if src.min() < 1 or dst.min() < 1 or src.max() > self.eta or dst.max() > self.eta:
            raise MappingError(f"node index outside 1..{self.eta}")
        if weights.min() < 1:
            raise MappingError("edge weights must be positive")
        if a == b:
            if not self.directed_intra:
                src, dst = np.minimum(src, dst), np.maximum(src, dst)
            store = self._intra[a]
        else:
            if a > b:
                a, b, src, dst = b, a, dst, src
            store = self._inter[(a, b)]
        self._add_pairs(store, src, dst, weights)

    def mark_occupied(self, node) -> None:
        self._check_mutable()
        self._marked.add(self._check_node(node))

    def set_q_seq(self, layer: int, q_seq: np.ndarray) -> None:
        self._check_mutable()
        layer = self._check_layer(layer)
        q_seq = np.asarray(q_seq, dtype=np.int64).copy()
        q_seq.setflags(write=False)
        self.q_seqs[layer] = q_seq
        for q in np.unique(q_seq).tolist():
            self._marked.add(self._check_node((layer, q)))

    # -- queries -----------------------------------------------------------

    def weight(self, src, dst) -> int:
        src, dst = self._check_node(src), self._check_node(dst)
        if src.layer == dst.layer:
            key = (src.quantile, dst.quantile)
            if not self.directed_intra and key[0] > key[1]:
                key = key[::-1]
            return self._intra[src.layer].get(key, 0)
        if src.layer > dst.layer:
            src, dst = dst, src
        return self._inter[(src.layer, dst.layer)].get((src.quantile, dst.quantile), 0)

    def intra(self, layer: int) -> dict[tuple[int, int], int]:
        """Read-only mapping ``(i, j) -> weight`` of one layer."""
        return dict(self._intra[self._check_layer(layer)])

    def inter(self, layer_a: int, layer_b: int) -> dict[tuple[int, int], int]:
        a, b = self._check_layer(layer_a), self._check_layer(layer_b)
        if a == b:
            raise MappingError("inter-layer edges need two distinct layers")
        if a < b:
            return dict(self._inter[(a, b)])
        return {(j, i): w for (i, j), w in self._inter[(b, a)].items()}

    @property
    def intra_edges(self) -> dict[tuple[int, int, int], int]:
        return {(a, i, j): w for a, st in self._intra.items() for (i, j), w in st.items()}

    @property
    def inter_edges(self) -> dict[tuple[int, int, int, int], int]:
        return {(a, b, i, j): w for (a, b), st in self._inter.items() for (i, j), w in st.items()}

    def edges(self):
        for a, st in self._intra.items():
            for (i, j), w in st.items():
                yield Edge(NodeId(a, i), NodeId(a, j), w, self.directed_intra)
        for (a, b), st in self._inter.items():
            for (i, j), w in st.items():
                yield Edge(NodeId(a, i), NodeId(b, j), w, False)

    def occupied_nodes(self) -> set[NodeId]:
        nodes = set(self._marked)
        for e in self.edges():
            nodes.add(e.src)
            nodes.add(e.dst)
        return nodes

    def total_intra_weight(self, layer: int) -> int:
        return sum(self._intra[self._check_layer(layer)].values())

    def total_inter_weight(self, layer_a: int, layer_b: int) -> int:
        return sum(self.inter(layer_a, layer_b).values())

    def intra_matrix(self, layer: int) -> np.ndarray:
        """Dense ``eta x eta`` weight matrix of one layer (symmetric if undirected)."""
        mat = np.zeros((self.eta, self.eta), dtype=np.int64)
        for (i, j), w in self._intra[self._check_layer(layer)].items():
            mat[i - 1, j - 1] = w
            if not self.directed_intra:
                mat[j - 1, i - 1] = w
        return mat

    def inter_matrix(self, layer_a: int, layer_b: int) -> np.ndarray:
        mat = np.zeros((self.eta, self.eta), dtype=np.int64)
        for (i, j), w in self.inter(layer_a, layer_b).items():
            mat[i - 1, j - 1] = w
        return mat

    def transition_matrix(self, layer: int) -> np.ndarray:
        """Row-normalised intra weights; rows without out-edges stay zero."""
        mat = self.intra_matrix(layer).astype(float)
        rows = mat.sum(axis=1, keepdims=True)
        np.divide(mat, rows, out=mat, where=rows > 0)
        return mat

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultilayerNetwork):
            return NotImplemented
        return (
            self.m == other.m
            and self.eta == other.eta
            and self.directed_intra == other.directed_intra
            and self._intra == other._intra
            and self._inter == other._inter
        )

    def __repr__(self) -> str:
        n_intra = sum(len(s) for s in self._intra.values())
        n_inter = sum(len(s) for s in self._inter.values())
        return f"MultilayerNetwork(m={self.m}, eta={self.eta}, intra_edges={n_intra}, inter_edges={n_inter})"

    # -- views -------------------------------------------------------------

    def subgraph(self, kind: str, *layers: int) -> "SubgraphView":
        """Project the network onto ``intra(a)``, ``inter(a, b)`` or ``all(a, b)``."""
        if kind == "intra":
            if len(layers) != 1:
                raise MappingError("intra view takes exactly one layer")
            (a,) = (self._check_layer(x) for x in layers)
            edges = [Edge(NodeId(a, i), NodeId(a, j), w, self.directed_intra)
                     for (i, j), w in self._intra[a].items()]
            view_layers = (a,)
        elif kind in ("inter", "all"):
            if len(layers) != 2:
                raise MappingError(f"{kind} view takes exactly two layers")
            a, b = (self._check_layer(x) for x in layers)
            if a == b:
                raise MappingError(f"{kind} view needs two distinct layers")
            a, b = min(a, b), max(a, b)
            edges = [Edge(NodeId(a, i), NodeId(b, j), w, False) for (i, j), w in self._inter[(a, b)].items()]
            if kind == "all":
                for layer in (a, b):
                    edges += [Edge(NodeId(layer, i), NodeId(layer, j), w, self.directed_intra)
                              for (i, j), w in self._intra[layer].items()]
            view_layers = (a, b)
        else:
            raise MappingError(f"unknown subgraph kind {kind!r}")
        nodes = tuple(NodeId(l, q) for l in view_layers for q in range(1, self.eta + 1))
        marked = {n for n in self._marked if n.layer in view_layers}
        return SubgraphView(kind, view_layers, nodes, tuple(edges), frozenset(marked))

    # -- dense form --------------------------------------------------------

    def supra_adjacency(self) -> np.ndarray:
        """Dense ``(m*eta) x (m*eta)`` block matrix in layer order."""
        n = self.m * self.eta
        if n > MAX_SUPRA_SIZE:
            raise CapacityError(f"supra-adjacency of size {n} exceeds the {MAX_SUPRA_SIZE} limit")
        A = np.zeros((n, n), dtype=np.int64)
        for a in range(1, self.m + 1):
            s = (a - 1) * self.eta
            A[s:s + self.eta, s:s + self.eta] = self.intra_matrix(a)
        for (a, b), st in self._inter.items():
            ra, rb = (a - 1) * self.eta, (b - 1) * self.eta
            for (i, j), w in st.items():
                A[ra + i - 1, rb + j - 1] = w
                A[rb + j - 1, ra + i - 1] = w
        return A

    @classmethod
    def from_supra_adjacency(cls, A, m: int, eta: int, directed_intra: bool = True) -> "MultilayerNetwork":
        A = np.asarray(A)
        if A.shape != (m * eta, m * eta):
            raise MappingError(f"expected a {m * eta}x{m * eta} matrix, got {A.shape}")
        net = cls(m, eta, directed_intra)
        for a in range(1, m + 1):
            s = (a - 1) * eta
            block = A[s:s + eta, s:s + eta]
            if not directed_intra:
                if not np.array_equal(block, block.T):
                    raise MappingError(f"undirected layer {a} block is not symmetric")
                block = np.triu(block)
                rows, cols = np.nonzero(block)
                for i, j in zip(rows.tolist(), cols.tolist()):
                    net._intra[a][(i + 1, j + 1)] = int(block[i, j])
            else:
                net.add_intra_counts(a, block)
            for b in range(a + 1, m + 1):
                t = (b - 1) * eta
                upper, lower = A[s:s + eta, t:t + eta], A[t:t + eta, s:s + eta]
                if not np.array_equal(upper, lower.T):
                    raise MappingError(f"inter block ({a},{b}) is not symmetric")
                net.add_inter_counts(a, b, upper)
        return net


@dataclass(frozen=True)
class SubgraphView:
    """Read-only projection of a network onto one or two layers.

    ``nodes`` is the full grid of the view's layers; ``occupied`` narrows it
    to nodes that carry an edge in this view or were observed in a quantile
    sequence.
    """

    kind: str
    layers: tuple[int, ...]
    nodes: tuple[NodeId, ...]
    edges: tuple[Edge, ...]
    marked: frozenset = frozenset()

    @property
    def occupied(self) -> list[NodeId]:
        occ = set(self.marked)
        for e in self.edges:
            occ.add(e.src)
            occ.add(e.dst)
        return sorted(occ)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> int:
        return sum(e.weight for e in self.edges)


# -- serialization ---------------------------------------------------------

EDGE_LIST_COLUMNS = ("layer_from", "node_from", "layer_to", "node_to", "weight", "kind")


def write_edge_list(net: MultilayerNetwork, path) -> None:
    """TSV edge list; leading ``#`` lines carry the grid shape."""
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(f"# m={net.m} eta={net.eta} directed_intra={str(net.directed_intra).lower()}\n")
            writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
            writer.writerow(EDGE_LIST_COLUMNS)
            for e in net.edges():
                kind = "intra" if e.src.layer == e.dst.layer else "inter"
                writer.writerow([e.src.layer, e.src.quantile, e.dst.layer, e.dst.quantile, e.weight, kind])
    except OSError as exc:
        raise OSError(f"cannot write edge list to {path}: {exc.strerror or exc}") from exc


def read_edge_list(path, m: int | None = None, eta: int | None = None,
                   directed_intra: bool | None = None) -> MultilayerNetwork:
    path = Path(path)
    meta: dict[str, str] = {}
    records = []
    with path.open(newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
        elif line.strip():
            body.append(line)
    reader = csv.reader(body, delimiter="\t")
    header = next(reader, None)
    if header is None or tuple(header) != EDGE_LIST_COLUMNS:
        raise MappingError(f"{path}: expected header {EDGE_LIST_COLUMNS}, got {header}")
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(EDGE_LIST_COLUMNS):
            raise MappingError(f"{path}: malformed record on data line {lineno - 1}")
        try:
            la, na, lb, nb, w = (int(x) for x in row[:5])
        except ValueError:
            raise MappingError(f"{path}: non-integer field on data line {lineno - 1}") from None
        kind = row[5]
        if kind not in ("intra", "inter") or (kind == "intra") != (la == lb):
            raise MappingError(f"{path}: bad edge kind {kind!r} on data line {lineno - 1}")
        records.append((la, na, lb, nb, w))

    m = m if m is not None else int(meta.get("m", max([max(r[0], r[2]) for r in records], default=1)))
    eta = eta if eta is not None else int(meta.get("eta", max([max(r[1], r[3]) for r in records], default=1)))
    if directed_intra is None:
        directed_intra = meta.get("directed_intra", "true") == "true"
    net = MultilayerNetwork(m, eta, directed_intra)
    for la, na, lb, nb, w in records:
        net.add_or_increment_edge((la, na), (lb, nb), w)
    return net


def write_supra_csv(net: MultilayerNetwork, path) -> None:
    np.savetxt(Path(path), net.supra_adjacency(), fmt="%d", delimiter=",")


def read_supra_csv(path, m: int, eta: int, directed_intra: bool = True) -> MultilayerNetwork:
    A = np.loadtxt(Path(path), delimiter=",", dtype=np.int64, ndmin=2)
    return MultilayerNetwork.from_supra_adjacency(A, m, eta, directed_intra)


def write_graphml(net: MultilayerNetwork, path) -> None:
    ns = "http://graphml.graphdrawing.org/xmlns"
    ET.register_namespace("", ns)
    root = ET.Element(f"{{{ns}}}graphml")
    for key_id, domain, name, typ in (
        ("d0", "node", "layer", "int"),
        ("d1", "node", "quantile", "int"),
        ("d2", "edge", "weight", "long"),
        ("d3", "edge", "kind", "string"),
        ("d4", "edge", "undirected", "boolean"),
    ):
        ET.SubElement(root, f"{{{ns}}}key", id=key_id, attrib={"for": domain, "attr.name": name, "attr.type": typ})
    graph = ET.SubElement(root, f"{{{ns}}}graph", id="G", edgedefault="directed")
    for a in range(1, net.m + 1):
        for q in range(1, net.eta + 1):
            node = ET.SubElement(graph, f"{{{ns}}}node", id=f"L{a}_Q{q}")
            ET.SubElement(node, f"{{{ns}}}data", key="d0").text = str(a)
            ET.SubElement(node, f"{{{ns}}}data", key="d1").text = str(q)
    for e in net.edges():
        kind = "intra" if e.src.layer == e.dst.layer else "inter"
        el = ET.SubElement(
            graph, f"{{{ns}}}edge",
            source=f"L{e.src.layer}_Q{e.src.quantile}", target=f"L{e.dst.layer}_Q{e.dst.quantile}",
        )
        ET.SubElement(el, f"{{{ns}}}data", key="d2").text = str(e.weight)
        ET.SubElement(el, f"{{{ns}}}data", key="d3").text = kind
        # per-edge directed="false" is rejected by strict readers in a directed graph
        ET.SubElement(el, f"{{{ns}}}data", key="d4").text = str(not e.directed).lower()
    tree = ET.ElementTree(root)
    ET.indent(tree)
    try:
        tree.write(Path(path), encoding="utf-8", xml_declaration=True)
    except OSError as exc:
        raise OSError(f"cannot write GraphML to {path}: {exc.strerror or exc}") from exc


def export(net: MultilayerNetwork, fmt: str, path) -> Path:
    writers = {"edge-list": write_edge_list, "supra-csv": write_supra_csv, "graphml": write_graphml}
    if fmt not in writers:
        raise MappingError(f"unknown export format {fmt!r}; expected one of {sorted(writers)}")
    writers[fmt](net, path)
    return Path(path)
