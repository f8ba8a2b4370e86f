import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypnet.netgraph import (INITIAL, TERMINAL, DanglingEndpoint, GraphError, NonPositiveLength, SelfLoop,
                             UnknownVertex, ZeroFiberDimension, build_graph, incidence, trace_layout)


@st.composite
def graphs(draw, max_vertices=8, max_edges=14, max_k=3):
    nv = draw(st.integers(2, max_vertices))
    ne = draw(st.integers(1, max_edges))
    edges = []
    for j in range(ne):
        a = draw(st.integers(0, nv - 1))
        b = draw(st.integers(0, nv - 2))
        b = b + 1 if b >= a else b
        length = draw(st.floats(0.1, 10.0))
        k = draw(st.integers(1, max_k))
        edges.append({"id": j, "tail": a, "head": b, "length": length, "k": k})
    return build_graph(list(range(nv)), edges)


@given(graphs())
def test_handshake(g):
    assert sum(g.k_v(v) for v in g.vertices) == 2 * g.k


@given(graphs())
def test_incidence_columns_have_one_head_and_one_tail(g):
    inc = incidence(g)
    assert np.all(inc.iota_plus.sum(axis=0) == 1)
    assert np.all(inc.iota_minus.sum(axis=0) == 1)
    assert np.all(inc.iota.sum(axis=0) == 0)


@given(graphs())
def test_layout_is_contiguous_and_sorted(g):
    for v in g.vertices:
        blocks = trace_layout(g, v)
        off = 0
        for b in blocks:
            assert b.offset == off
            off += g.edge(b.edge).k
        assert off == g.k_v(v)
        assert [b.edge for b in blocks] == sorted(b.edge for b in blocks)


def test_layout_orientation_and_sign():
    g = build_graph(["a", "b", "c"], [(2, "b", "c", 1.0, 1), (0, "a", "b", 2.0, 2)])
    lay = trace_layout(g, "b")
    assert [(b.edge, b.offset, b.endpoint, b.sign) for b in lay] == [(0, 0, TERMINAL, 1), (2, 2, INITIAL, -1)]
    assert g.edge_ids == [0, 2]
    assert g.edge_offsets() == {0: 0, 2: 2}


def test_parallel_edges_allowed():
    g = build_graph(["a", "b"], [(0, "a", "b", 1.0, 2), (1, "a", "b", 1.0, 2)])
    assert g.k_v("a") == 4


@pytest.mark.parametrize("edges,err", [
    ([(0, "a", "a", 1.0, 1)], SelfLoop),
    ([(0, "a", "z", 1.0, 1)], DanglingEndpoint),
    ([(0, "a", "b", 0.0, 1)], NonPositiveLength),
    ([(0, "a", "b", float("inf"), 1)], NonPositiveLength),
    ([(0, "a", "b", 1.0, 0)], ZeroFiberDimension),
    ([(0, "a", "b", 1.0, 1), (0, "b", "a", 1.0, 1)], GraphError),
])
def test_rejects_invalid_graphs(edges, err):
    with pytest.raises(err):
        build_graph(["a", "b"], edges)


def test_unknown_vertex():
    g = build_graph(["a", "b"], [(0, "a", "b", 1.0, 1)])
    with pytest.raises(UnknownVertex):
        g.k_v("q")
