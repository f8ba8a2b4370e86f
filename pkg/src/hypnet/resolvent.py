"""Constructive solution of the stationary problem ``A_0 (u, x) = (f, g)`` and
application of the operator to a sampled state.

``A_0`` has ``N_e = 0`` and the vertex feedback ``C_v`` replaced by
``-P_v^(d,0)``, the projector onto ``Ker B_v^* cap Y_v^(d)``.  Edge solutions
are ``u_e = K_e + int_0^x M_e^{-1} f_e``; the constants ``K`` solve one
``k x k`` system whose rows are the extended boundary vectors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .state import DomainViolation, StateVector, check_domain, norm_d, trace
from .system import EdgeData, HyperbolicSystem, MatrixField, VertexCondition
from .wellposed import build_Wv, extend, projectors


class SingularBoundarySystem(ArithmeticError):
    """The boundary matrix is not square or is numerically singular."""


@dataclass
class BoundaryRow:
    site: object
    kind: str           # "perp", "ranBstar" or "kerBstar"
    w: np.ndarray       # vector in C^{k_v} tested against gamma_v
    y: np.ndarray       # Ran B basis vector (ranBstar rows) else None


@dataclass
class BoundaryProblemMatrix:
    matrix: np.ndarray  # rows are conjugated extended vectors
    rows: list

    @property
    def shape(self):
        return self.matrix.shape

    def rank(self, tol_rank: float) -> int:
        s = np.linalg.svd(self.matrix, compute_uv=False)
        return int(np.sum(s > tol_rank * s[0])) if s.size and s[0] > 0 else 0

    def rhs(self, sys: HyperbolicSystem, gamma_nh: dict, g: dict) -> np.ndarray:
        """Right-hand side given the traces of the particular solution and ``g``."""
        out = np.zeros(len(self.rows), complex)
        for i, r in enumerate(self.rows):
            base = -np.vdot(r.w, gamma_nh[r.site])
            if r.kind == "ranBstar":
                base += np.vdot(r.y, g[r.site])
            elif r.kind == "kerBstar":
                base -= np.vdot(r.w, g[r.site])
            out[i] = base
        return out


def boundary_problem_matrix(sys: HyperbolicSystem) -> BoundaryProblemMatrix:
    rows, blocks = [], []
    for v in sys.sites:
        wv = build_Wv(sys, v)
        kinds = ["perp"] * wv.n_perp + ["ranBstar"] * wv.n_ranBstar + ["kerBstar"] * wv.n_kerBstar
        for j, kind in enumerate(kinds):
            y = wv.ranB[:, j - wv.n_perp] if kind == "ranBstar" else None
            rows.append(BoundaryRow(v, kind, wv.vectors[:, j], y))
        blocks.append(extend(sys, v, wv.vectors))
    W = np.hstack(blocks) if blocks else np.zeros((sys.k, 0), complex)
    return BoundaryProblemMatrix(W.conj().T, rows)


def a0_system(sys: HyperbolicSystem) -> HyperbolicSystem:
    """Same graph and vertex data with ``N_e = 0`` and ``C_v = -P_v^(d,0)``."""
    edges = {}
    for e in sys.graph.edges:
        d = sys.edges[e.id]
        edges[e.id] = EdgeData(d.M, MatrixField(np.zeros((e.k, e.k)), e.length), d.Q, d.dQM)
    conds = {}
    for v in sys.sites:
        c = sys.conditions[v]
        P = projectors(c, sys.tol.tol_rank)
        conds[v] = VertexCondition(c.Y, c.Yd, c.B, -P.P_d0, c.Qv)
    return HyperbolicSystem(sys.graph, edges, conds, sys.tol, sys.name + ":A0", sys.coupling)


def _particular(sys: HyperbolicSystem, nodes: dict, f: dict) -> tuple[dict, dict]:
    """``u^nh = int_0^x M^{-1} f`` (composite trapezoid) and ``M^{-1} f`` at the nodes."""
    unh, rate = {}, {}
    for e in sys.graph.edges:
        xs = nodes[e.id]
        fe = np.asarray(f[e.id], complex).reshape(xs.size, e.k)
        r = np.linalg.solve(sys.edges[e.id].M(xs), fe[..., None])[..., 0]
        rate[e.id] = r
        unh[e.id] = cumulative_trapezoid(r, xs, axis=0, initial=0.0)
    return unh, rate


def solve_A0(sys: HyperbolicSystem, f: dict, g: dict | None = None, nodes: dict | None = None,
             tol_res: float = 1e-8) -> StateVector:
    """Solve ``A_0 (u, x) = (f, g)``.

    ``f[e]`` holds samples of shape ``(n_e+1, k_e)`` on ``nodes[e]`` (uniform
    nodes when omitted); ``g[v]`` is an ambient vector in ``Y_v^(d)``.
    """
    if nodes is None:
        nodes = {e.id: np.linspace(0.0, e.length, np.asarray(f[e.id]).shape[0]) for e in sys.graph.edges}
    g = {v: np.zeros(sys.site_dim(v), complex) if g is None or v not in g else np.asarray(g[v], complex)
         for v in sys.sites}
    for v in sys.sites:
        c = sys.conditions[v]
        r = np.linalg.norm(g[v] - c.P_d @ g[v])
        if r > sys.tol.tol_sub * max(1.0, np.linalg.norm(g[v])):
            raise DomainViolation(f"vertex {v}: g_v is not in Y_v^(d) (off by {r:.3e})")

    bpm = boundary_problem_matrix(sys)
    m, k = bpm.shape
    if m != k:
        raise SingularBoundarySystem(f"{m} boundary vectors for k={k}; the basis condition fails")
    cond = np.linalg.cond(bpm.matrix) if k else 1.0
    if not np.isfinite(cond) or cond > 1.0 / sys.tol.tol_rank:
        raise SingularBoundarySystem(f"boundary matrix condition number {cond:.3e} exceeds {1 / sys.tol.tol_rank:.1e}")

    unh, rate = _particular(sys, nodes, f)
    nh = StateVector(nodes, unh, {v: np.zeros(sys.site_dim(v), complex) for v in sys.sites})
    gamma_nh = {v: trace(sys, nh, v) for v in sys.sites}
    K = np.linalg.solve(bpm.matrix, bpm.rhs(sys, gamma_nh, g)) if k else np.zeros(0, complex)

    offs = sys.graph.edge_offsets()
    u = {e.id: unh[e.id] + K[offs[e.id]:offs[e.id] + e.k][None, :] for e in sys.graph.edges}
    st = StateVector(dict(nodes), u, {}, rate)
    st.x = {v: sys.conditions[v].P_d @ trace(sys, st, v) for v in sys.sites}

    # boundary residual of A_0; the edge part equals f by construction
    scale = max(1.0, norm_d(sys, StateVector(nodes, {e: np.asarray(f[e], complex) for e in f}, g)))
    res = 0.0
    for v in sys.sites:
        c = sys.conditions[v]
        P = projectors(c, sys.tol.tol_rank)
        gam = trace(sys, st, v)
        res = max(res, np.linalg.norm(gam - c.P_Y @ gam),
                  np.linalg.norm(c.B @ gam - P.P_d0 @ st.x[v] - g[v]))
    if res > tol_res * scale:
        raise SingularBoundarySystem(f"boundary residual {res:.3e} after solve")
    return st


def spline_derivative(st: StateVector) -> dict:
    return {e: CubicSpline(st.nodes[e], st.u[e], axis=0)(st.nodes[e], 1) for e in st.u}


def apply_A(sys: HyperbolicSystem, st: StateVector, tol: float | None = None) -> StateVector:
    """``(M u' + N u, B gamma(u) + C x)``; ``u'`` from ``st.du`` or a cubic spline."""
    check_domain(sys, st, tol)
    du = st.du if st.du is not None else spline_derivative(st)
    out_u = {}
    for e in sys.graph.edges:
        xs = st.nodes[e.id]
        d = sys.edges[e.id]
        out_u[e.id] = (np.einsum("nij,nj->ni", d.M(xs), du[e.id])
                       + np.einsum("nij,nj->ni", d.N(xs), st.u[e.id]))
    out_x = {}
    for v in sys.sites:
        c = sys.conditions[v]
        out_x[v] = c.B @ trace(sys, st, v) + c.C @ st.x[v]
    return StateVector(dict(st.nodes), out_u, out_x)


def a0_residual(sys: HyperbolicSystem, st: StateVector, f: dict, g: dict | None = None) -> float:
    """``|A_0 st - (f, g)|_d / |(f, g)|_d`` with spline derivatives of ``st``."""
    st, g = StateVector(st.nodes, st.u, st.x), g or {}
    back = apply_A(a0_system(sys), st, tol=1e-8)
    ref = StateVector(st.nodes, {e: np.asarray(f[e], complex) for e in f},
                      {v: np.asarray(g.get(v, np.zeros(sys.site_dim(v))), complex) for v in sys.sites})
    return norm_d(sys, back.combine(ref, 1.0, -1.0)) / max(norm_d(sys, ref), 1e-300)


def roundtrip_error(sys: HyperbolicSystem, f: dict, g: dict | None = None, nodes: dict | None = None) -> float:
    """Relative residual of ``A_0`` applied to the computed solution."""
    return a0_residual(sys, solve_A0(sys, f, g, nodes), f, g)


__all__ = ["SingularBoundarySystem", "DomainViolation", "BoundaryProblemMatrix", "boundary_problem_matrix",
           "a0_system", "solve_A0", "apply_A", "a0_residual", "roundtrip_error", "spline_derivative"]
