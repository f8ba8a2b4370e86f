"""Random graphs and random systems for property tests and experiments."""
from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .netgraph import MetricGraph, build_graph
from .system import HyperbolicSystem, edge_data, vertex_condition
from .wellposed import basis_condition


def random_graph(rng, max_vertices: int = 8, max_edges: int = 14, max_k: int = 3) -> MetricGraph:
    """Loop-free multigraph with random orientation, lengths and fiber sizes."""
    nv = int(rng.integers(2, max_vertices + 1))
    ne = int(rng.integers(1, max_edges + 1))
    edges = []
    for j in range(ne):
        a, b = rng.choice(nv, size=2, replace=False)
        edges.append((j, f"v{a}", f"v{b}", float(rng.uniform(0.5, 2.0)), int(rng.integers(1, max_k + 1))))
    return build_graph([f"v{i}" for i in range(nv)], edges)


def _random_hermitian_invertible(rng, k: int) -> np.ndarray:
    U = unitary_group.rvs(k, random_state=rng) if k > 1 else np.ones((1, 1))
    d = rng.choice([-1.0, 1.0], size=k) * rng.uniform(0.5, 2.0, size=k)
    return U @ np.diag(d) @ U.conj().T


def _cplx(rng, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_system(rng, graph: MetricGraph | None = None, max_tries: int = 50) -> HyperbolicSystem:
    """Random system with ``Q_e = I``, Hermitian invertible ``M_e``, random
    subspaces ``Y_v^(d) subset Y_v`` and surjective ``B_v`` satisfying the
    basis condition.

    ``dim Y_v - dim Y_v^(d)`` is split so that the dimensions sum to ``k``;
    draws failing the basis condition are rejected.
    """
    for _ in range(max_tries):
        g = graph if graph is not None else random_graph(rng, 5, 6, 2)
        edges = {e.id: edge_data(_random_hermitian_invertible(rng, e.k), 0.3 * _cplx(rng, e.k, e.k),
                                 length=e.length) for e in g.edges}
        kvs = {v: g.k_v(v) for v in g.vertices}
        # split k among the vertices, each at most k_v
        free = {v: 0 for v in g.vertices}
        order = [v for v in g.vertices if kvs[v] > 0]
        for _ in range(g.k):
            cand = [v for v in order if free[v] < kvs[v]]
            free[cand[int(rng.integers(len(cand)))]] += 1
        conds = {}
        for v in g.vertices:
            kv = kvs[v]
            dd = int(rng.integers(0, kv - free[v] + 1))
            Y = np.linalg.qr(_cplx(rng, kv, free[v] + dd))[0]
            Yd = Y[:, :dd] if dd else None
            B = C = None
            if dd:
                Pd, PY = Yd @ Yd.conj().T, Y @ Y.conj().T
                B = Pd @ _cplx(rng, kv, kv) @ PY
                C = Pd @ _cplx(rng, kv, kv) @ Pd
            conds[v] = vertex_condition(kv, Y=Y, Yd=Yd, B=B, C=C, Qv=1.0)
        sys = HyperbolicSystem(g, edges, conds, name="random")
        if basis_condition(sys).holds:
            return sys
    raise RuntimeError("no random system with the basis condition found")


__all__ = ["random_graph", "random_system"]
