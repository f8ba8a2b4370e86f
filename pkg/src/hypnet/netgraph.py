"""Metric graphs, incidence matrices and the vertex trace layout.

Vertex traces stack the endpoint values of incident edges in blocks of
size ``k_e``, ordered by ascending edge id regardless of orientation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np


class GraphError(ValueError):
    """Base class for invalid graph input."""


class NonPositiveLength(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DanglingEndpoint(GraphError):
    pass


class ZeroFiberDimension(GraphError):
    pass


class UnknownVertex(KeyError):
    pass


INITIAL = "initial"
TERMINAL = "terminal"


@dataclass(frozen=True)
class Edge:
    id: int
    tail: Hashable
    head: Hashable
    length: float
    k: int


@dataclass(frozen=True)
class TraceBlock:
    edge: int
    offset: int
    endpoint: str  # INITIAL or TERMINAL

    @property
    def sign(self) -> int:
        """Signed incidence of this endpoint: +1 terminal, -1 initial."""
        return 1 if self.endpoint == TERMINAL else -1


@dataclass(frozen=True)
class IncidenceMatrices:
    iota_plus: np.ndarray
    iota_minus: np.ndarray

    @property
    def iota(self) -> np.ndarray:
        return self.iota_plus - self.iota_minus


@dataclass(frozen=True)
class MetricGraph:
    """Finite directed metric graph with per-edge fiber dimensions.

    Edges are stored sorted by id; edge ``e`` is parametrized on
    ``[0, length]`` with ``x = 0`` at its tail (initial endpoint).
    """

    vertices: tuple
    edges: tuple[Edge, ...]
    _layouts: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def k(self) -> int:
        return sum(e.k for e in self.edges)

    @property
    def edge_ids(self) -> list[int]:
        return [e.id for e in self.edges]

    def edge(self, eid: int) -> Edge:
        for e in self.edges:
            if e.id == eid:
                return e
        raise KeyError(eid)

    def vertex_index(self, v) -> int:
        try:
            return self.vertices.index(v)
        except ValueError:
            raise UnknownVertex(v) from None

    def incident_edges(self, v) -> list[Edge]:
        self.vertex_index(v)
        return [e for e in self.edges if v in (e.tail, e.head)]

    def k_v(self, v) -> int:
        return sum(e.k for e in self.incident_edges(v))

    def edge_offsets(self) -> dict[int, int]:
        """Offset of each edge block in the global fiber ``C^k``."""
        out, off = {}, 0
        for e in self.edges:
            out[e.id] = off
            off += e.k
        return out

    def layout(self, v) -> list[TraceBlock]:
        return trace_layout(self, v)


def build_graph(vertices: Sequence, edges: Iterable) -> MetricGraph:
    """Validate a graph description.

    ``edges`` holds mappings with keys ``id, tail, head, length, k`` or
    tuples ``(id, tail, head, length, k)``.
    """
    vs = tuple(vertices)
    if len(set(vs)) != len(vs):
        raise GraphError("duplicate vertex ids")
    recs = []
    for raw in edges:
        if isinstance(raw, Mapping):
            eid, tail, head = raw["id"], raw["tail"], raw["head"]
            length, k = raw["length"], raw.get("k", 1)
        else:
            eid, tail, head, length, k = raw
        if tail not in vs or head not in vs:
            raise DanglingEndpoint(f"edge {eid}: endpoint not among vertices")
        if tail == head:
            raise SelfLoop(f"edge {eid}: tail equals head ({tail!r})")
        if not float(length) > 0 or not np.isfinite(float(length)):
            raise NonPositiveLength(f"edge {eid}: length {length!r}")
        if int(k) < 1:
            raise ZeroFiberDimension(f"edge {eid}: fiber dimension {k!r}")
        recs.append(Edge(int(eid), tail, head, float(length), int(k)))
    ids = [r.id for r in recs]
    if len(set(ids)) != len(ids):
        raise GraphError("duplicate edge ids")
    recs.sort(key=lambda r: r.id)
    return MetricGraph(vs, tuple(recs))


def incidence(g: MetricGraph) -> IncidenceMatrices:
    nv, ne = len(g.vertices), len(g.edges)
    ip = np.zeros((nv, ne), dtype=int)
    im = np.zeros((nv, ne), dtype=int)
    for j, e in enumerate(g.edges):
        ip[g.vertex_index(e.head), j] = 1
        im[g.vertex_index(e.tail), j] = 1
    return IncidenceMatrices(ip, im)


def trace_layout(g: MetricGraph, v) -> list[TraceBlock]:
    """Block layout of ``C^{k_v}``: one block per incident edge."""
    cached = g._layouts.get(v)
    if cached is not None:
        return cached
    blocks, off = [], 0
    for e in g.incident_edges(v):
        end = TERMINAL if e.head == v else INITIAL
        blocks.append(TraceBlock(e.id, off, end))
        off += e.k
    g._layouts[v] = blocks
    return blocks
