import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mqgraph.core import MappingError
from mqgraph.mnet import (
    CapacityError,
    MultilayerNetwork,
    NodeId,
    export,
    read_edge_list,
    read_supra_csv,
)


def random_net(rng, m, eta, directed_intra=True, n_edges=15):
    net = MultilayerNetwork(m, eta, directed_intra)
    for _ in range(n_edges):
        a, b = rng.integers(1, m + 1, 2)
        net.add_or_increment_edge((int(a), int(rng.integers(1, eta + 1))),
                                  (int(b), int(rng.integers(1, eta + 1))), int(rng.integers(1, 4)))
    return net


def test_add_or_increment_accumulates():
    net = MultilayerNetwork(2, 3)
    net.add_or_increment_edge((1, 1), (1, 2))
    net.add_or_increment_edge((1, 1), (1, 2), 2)
    assert net.weight((1, 1), (1, 2)) == 3
    assert net.weight((1, 2), (1, 1)) == 0


def test_inter_edges_stored_once_lower_layer_first():
    net = MultilayerNetwork(2, 3)
    net.add_or_increment_edge((2, 3), (1, 1))
    net.add_or_increment_edge((1, 1), (2, 3))
    assert net.inter(1, 2) == {(1, 3): 2}
    assert net.weight((2, 3), (1, 1)) == 2


def test_undirected_intra_canonicalised():
    net = MultilayerNetwork(1, 4, directed_intra=False)
    net.add_or_increment_edge((1, 3), (1, 2))
    net.add_or_increment_edge((1, 2), (1, 3))
    assert net.intra(1) == {(2, 3): 2}


def test_invalid_node_and_amount():
    net = MultilayerNetwork(2, 3)
    with pytest.raises(MappingError):
        net.add_or_increment_edge((3, 1), (1, 1))
    with pytest.raises(MappingError):
        net.add_or_increment_edge((1, 0), (1, 1))
    with pytest.raises(MappingError):
        net.add_or_increment_edge((1, 1), (1, 2), 0)


def test_frozen_network_rejects_mutation():
    net = MultilayerNetwork(1, 2).freeze()
    with pytest.raises(MappingError):
        net.add_or_increment_edge((1, 1), (1, 2))


def test_supra_single_layer_example():
    net = MultilayerNetwork(1, 2)
    net.add_or_increment_edge((1, 1), (1, 2), 2)
    net.add_or_increment_edge((1, 2), (1, 1), 1)
    assert net.supra_adjacency().tolist() == [[0, 2], [1, 0]]


def test_supra_capacity():
    with pytest.raises(CapacityError):
        MultilayerNetwork(2, 5001).supra_adjacency()


def test_subgraph_views():
    net = MultilayerNetwork(3, 2)
    net.add_or_increment_edge((1, 1), (1, 2))
    net.add_or_increment_edge((2, 1), (2, 1))
    net.add_or_increment_edge((1, 2), (2, 1), 3)
    net.add_or_increment_edge((1, 1), (3, 2))
    intra = net.subgraph("intra", 1)
    assert intra.edge_count == 1 and intra.layers == (1,)
    inter = net.subgraph("inter", 2, 1)
    assert inter.layers == (1, 2) and inter.total_weight == 3
    allv = net.subgraph("all", 1, 2)
    assert allv.edge_count == 3 and allv.total_weight == 5
    assert len(allv.nodes) == 4
    assert allv.occupied == [NodeId(1, 1), NodeId(1, 2), NodeId(2, 1)]
    with pytest.raises(MappingError):
        net.subgraph("inter", 1, 1)
    with pytest.raises(MappingError):
        net.subgraph("ring", 1)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 5), st.booleans())
def test_supra_adjacency_block_structure(seed, m, eta, directed):
    net = random_net(np.random.default_rng(seed), m, eta, directed)
    A = net.supra_adjacency()
    for a in range(1, m + 1):
        for b in range(1, m + 1):
            block = A[(a - 1) * eta:a * eta, (b - 1) * eta:b * eta]
            for i in range(1, eta + 1):
                for j in range(1, eta + 1):
                    if a == b:
                        w = net.intra(a).get((i, j), 0)
                        if not directed:
                            w = w or net.intra(a).get((j, i), 0)
                    else:
                        lo, hi = min(a, b), max(a, b)
                        key = (i, j) if a < b else (j, i)
                        w = net.inter(lo, hi).get(key, 0)
                    assert block[i - 1, j - 1] == w
    # off-diagonal blocks are transposes of each other
    assert np.array_equal(A - np.diag(np.diag(A)), (A - np.diag(np.diag(A))).T) or directed
    assert MultilayerNetwork.from_supra_adjacency(A, m, eta, directed) == net


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 6), st.booleans())
def test_round_trips(tmp_path_factory, seed, m, eta, directed):
    d = tmp_path_factory.mktemp("rt")
    net = random_net(np.random.default_rng(seed), m, eta, directed)
    export(net, "edge-list", d / "e.tsv")
    assert read_edge_list(d / "e.tsv") == net
    export(net, "supra-csv", d / "s.csv")
    assert read_supra_csv(d / "s.csv", m, eta, directed) == net


def test_graphml_structure(tmp_path):
    net = random_net(np.random.default_rng(0), 2, 3)
    export(net, "graphml", tmp_path / "g.graphml")
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    root = ET.parse(tmp_path / "g.graphml").getroot()
    assert len(root.findall(".//g:node", ns)) == 6
    edges = root.findall(".//g:edge", ns)
    assert len(edges) == len(list(net.edges()))
    total = sum(int(e.find("g:data[@key='d2']", ns).text) for e in edges)
    assert total == sum(e.weight for e in net.edges())


def test_graphml_readable_by_networkx(tmp_path):
    nx = pytest.importorskip("networkx")
    net = random_net(np.random.default_rng(1), 2, 4)
    export(net, "graphml", tmp_path / "g.graphml")
    g = nx.read_graphml(tmp_path / "g.graphml")
    assert g.number_of_nodes() == 8
    assert sum(d["weight"] for *_, d in g.edges(data=True)) == sum(e.weight for e in net.edges())


def test_edge_list_rejects_bad_header(tmp_path):
    p = tmp_path / "e.tsv"
    p.write_text("a\tb\n1\t2\n")
    with pytest.raises(MappingError):
        read_edge_list(p)


def test_export_unknown_format(tmp_path):
    with pytest.raises(MappingError):
        export(MultilayerNetwork(1, 1), "gexf", tmp_path / "x")
