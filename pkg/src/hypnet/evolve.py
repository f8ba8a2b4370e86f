"""Semi-discretization, time stepping and energy accounting.

Each edge carries nodal values on a uniform grid.  The derivative is the
second-order summation-by-parts operator (central inside, one-sided at the
ends) paired with trapezoid weights, so that ``u^* H D u`` telescopes to the
endpoint flux exactly.  Endpoint values are eliminated: at every site the
stacked trace is ``Y_v eta_v`` and ``x_v = P_v^(d) Y_v eta_v``.  The reduced
state is (interior node values, ``eta``), with mass matrix ``H`` and
stiffness ``S`` built from the weak form

    (A w, z) = sum_e z^* W_e Q_e (M_e D + N_e) w + sum_v x_z^* Q_v (B_v gamma_v + C_v x_v),

and generator ``A_h = H^{-1} S``.  Then ``2 Re w^* S w`` equals the discrete
dissipation identity term by term.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .netgraph import INITIAL
from .state import (SmoothState, StateVector, check_domain, domain_defect, inner_d,
                    trace, trapezoid_weights, uniform_nodes)
from .system import HyperbolicSystem, assemble_Tv, block_slices

CFL = 0.4
TOL_PROJ = 1e-9
MAX_EXPM_DIM = 4000
DEFAULT_CELLS = 64


class GridTooCoarse(ValueError):
    pass


class BlowupDetected(RuntimeError):
    pass


class DimensionTooLargeForExpm(ValueError):
    pass


class ProjectionWarning(UserWarning):
    """Initial data violated the vertex constraints and was projected."""


def sbp_derivative(n: int, length: float) -> sp.csr_matrix:
    """Second-order SBP first derivative on ``n+1`` uniform nodes."""
    h = length / n
    D = sp.lil_matrix((n + 1, n + 1))
    D[0, 0], D[0, 1] = -1.0 / h, 1.0 / h
    D[n, n - 1], D[n, n] = -1.0 / h, 1.0 / h
    for j in range(1, n):
        D[j, j - 1], D[j, j + 1] = -0.5 / h, 0.5 / h
    return D.tocsr()


def _blockdiag(blocks: np.ndarray) -> sp.csr_matrix:
    """Sparse block diagonal from an ``(n, k, k)`` stack."""
    return sp.block_diag(list(blocks), format="csr") if len(blocks) else sp.csr_matrix((0, 0))


@dataclass
class DiscreteGenerator:
    """Reduced generator ``A = H^{-1} S`` and the maps to full node values.

    Full vectors stack all node values of every edge (ascending id, node
    major) followed by the ambient vertex vectors of every site.
    """

    sys: HyperbolicSystem
    nodes: dict
    A: sp.csr_matrix
    H: sp.csr_matrix
    S: sp.csr_matrix
    P: sp.csr_matrix          # reduced -> full
    WF: sp.csr_matrix         # full mass (trapezoid Q_e, Q_v)
    SF: sp.csr_matrix         # full stiffness
    edge_off: dict            # offsets of edge blocks in full vectors
    site_off: dict            # offsets of vertex blocks in full vectors
    red_site_off: dict        # offsets of eta blocks in reduced vectors
    _Hlu: object = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def full_dim(self) -> int:
        return self.P.shape[0]

    @property
    def h_min(self) -> float:
        return min(float(np.diff(x).min()) for x in self.nodes.values())

    def _solve_H(self, b):
        if self._Hlu is None:
            self._Hlu = spla.splu(self.H.tocsc())
        return self._Hlu.solve(np.asarray(b, complex))

    # conversions
    def full_vector(self, st: StateVector) -> np.ndarray:
        out = np.zeros(self.full_dim, complex)
        for e in self.sys.graph.edges:
            a = st.u[e.id]
            o = self.edge_off[e.id]
            out[o:o + a.size] = a.ravel()
        for v in self.sys.sites:
            o = self.site_off[v]
            out[o:o + st.x[v].size] = st.x[v]
        return out

    def from_full(self, F: np.ndarray) -> StateVector:
        u, x = {}, {}
        for e in self.sys.graph.edges:
            o, m = self.edge_off[e.id], self.nodes[e.id].size
            u[e.id] = F[o:o + m * e.k].reshape(m, e.k).copy()
        for v in self.sys.sites:
            o = self.site_off[v]
            x[v] = F[o:o + self.sys.site_dim(v)].copy()
        return StateVector(dict(self.nodes), u, x)

    def lift(self, w: np.ndarray) -> StateVector:
        return self.from_full(self.P @ w)

    def restrict(self, st: StateVector) -> np.ndarray:
        """Orthogonal projection (discrete energy inner product) onto the reduced space."""
        F = self.full_vector(st)
        return self._solve_H(self.P.conj().T @ (self.WF @ F))

    def energy(self, w: np.ndarray) -> float:
        return float(np.real(np.vdot(w, self.H @ w)))

    def constraint_residual(self, w: np.ndarray) -> float:
        return domain_defect(self.sys, self.lift(w))

    def adjoint(self) -> sp.csr_matrix:
        """Adjoint of ``A`` in the discrete energy inner product, ``H^{-1} S^*``."""
        return sp.csr_matrix(spla.spsolve(self.H.tocsc(), self.S.conj().T.tocsc()))

    def pair(self, u: StateVector, z: StateVector) -> complex:
        """Weak-form value of ``(A u, z)_d`` for full-grid states."""
        return complex(np.vdot(self.full_vector(z), self.SF @ self.full_vector(u)))


def _layout_full(sys: HyperbolicSystem, nodes: dict):
    edge_off, site_off, o = {}, {}, 0
    for e in sys.graph.edges:
        edge_off[e.id] = o
        o += nodes[e.id].size * e.k
    for v in sys.sites:
        site_off[v] = o
        o += sys.site_dim(v)
    return edge_off, site_off, o


def _edge_full_operators(sys: HyperbolicSystem, nodes: dict):
    """Per-edge trapezoid mass ``W Q`` and operator ``M D + N`` on all nodes."""
    out = {}
    for e in sys.graph.edges:
        xs = nodes[e.id]
        d = sys.edges[e.id]
        n = xs.size - 1
        D = sbp_derivative(n, e.length)
        w = trapezoid_weights(xs)
        Q, M, N = d.Q(xs), d.M(xs), d.N(xs)
        WQ = _blockdiag(w[:, None, None] * Q)
        Dk = sp.kron(D, sp.identity(e.k), format="csr")
        L = (_blockdiag(M) @ Dk + _blockdiag(N)).tocsr()
        out[e.id] = (WQ, L, Dk)
    return out


def assemble_discrete_generator(sys: HyperbolicSystem, n_cells=DEFAULT_CELLS) -> DiscreteGenerator:
    """Assemble the reduced generator with ``n_cells`` cells per edge (int or dict)."""
    cells = {e.id: (n_cells[e.id] if isinstance(n_cells, dict) else int(n_cells)) for e in sys.graph.edges}
    for eid, n in cells.items():
        if n < 4:
            raise GridTooCoarse(f"edge {eid}: {n} cells, need at least 4")
    nodes = uniform_nodes(sys, cells)
    edge_off, site_off, nf = _layout_full(sys, nodes)

    # reduced layout: interior nodes per edge, then eta per site
    red_edge_off, r = {}, 0
    for e in sys.graph.edges:
        red_edge_off[e.id] = r
        r += (cells[e.id] - 1) * e.k
    red_site_off = {}
    for v in sys.sites:
        red_site_off[v] = r
        r += sys.conditions[v].Y.shape[1]
    nr = r

    P = sp.lil_matrix((nf, nr), dtype=complex)
    for e in sys.graph.edges:
        n, k = cells[e.id], e.k
        for j in range(1, n):
            for c in range(k):
                P[edge_off[e.id] + j * k + c, red_edge_off[e.id] + (j - 1) * k + c] = 1.0
    for v in sys.sites:
        cnd = sys.conditions[v]
        Y, ro = cnd.Y, red_site_off[v]
        dy = Y.shape[1]
        for eid, sl, end, _x, _s in block_slices(sys, v):
            k = sl.stop - sl.start
            node = 0 if end == INITIAL else cells[eid]
            base = edge_off[eid] + node * k
            for c in range(k):
                for i in range(dy):
                    if Y[sl.start + c, i] != 0:
                        P[base + c, ro + i] = Y[sl.start + c, i]
        X = cnd.P_d @ Y
        so = site_off[v]
        for a in range(X.shape[0]):
            for i in range(dy):
                if X[a, i] != 0:
                    P[so + a, ro + i] = X[a, i]
    P = P.tocsr()

    ops = _edge_full_operators(sys, nodes)
    WF = sp.lil_matrix((nf, nf), dtype=complex)
    SF = sp.lil_matrix((nf, nf), dtype=complex)
    for e in sys.graph.edges:
        WQ, L, _ = ops[e.id]
        o, m = edge_off[e.id], WQ.shape[0]
        WF[o:o + m, o:o + m] = WQ
        SF[o:o + m, o:o + m] = WQ @ L
    for v in sys.sites:
        cnd = sys.conditions[v]
        so, kv = site_off[v], sys.site_dim(v)
        WF[so:so + kv, so:so + kv] = cnd.Qv
        SF[so:so + kv, so:so + kv] = cnd.Qv @ cnd.C
        QB = cnd.Qv @ cnd.B
        for eid, sl, end, _x, _s in block_slices(sys, v):
            k = sl.stop - sl.start
            node = 0 if end == INITIAL else cells[eid]
            base = edge_off[eid] + node * k
            SF[so:so + kv, base:base + k] = QB[:, sl]
    WF, SF = WF.tocsr(), SF.tocsr()

    PH = P.conj().T.tocsr()
    H = (PH @ WF @ P).tocsr()
    S = (PH @ SF @ P).tocsr()
    H = 0.5 * (H + H.conj().T)
    A = sp.csr_matrix(spla.spsolve(H.tocsc(), S.tocsc())) if nr else sp.csr_matrix((0, 0))
    return DiscreteGenerator(sys, nodes, A, H.tocsr(), S, P, WF, SF, edge_off, site_off, red_site_off)


# adjoint discretization

def assemble_adjoint_full(sys: HyperbolicSystem, gen: DiscreteGenerator) -> sp.csr_matrix:
    """Discrete adjoint operator on full vectors ``(v, y)``.

    Edges: ``-M v' - Q^{-1} (Q M)' v + Q^{-1} N^* Q v`` with the SBP derivative;
    vertices: ``Q_v^+ P^(d) (T_v gamma_v(v) + B_v^* Q_v y_v) + Q_v^+ C_v^* Q_v y_v``.
    """
    nf = gen.full_dim
    A = sp.lil_matrix((nf, nf), dtype=complex)
    for e in sys.graph.edges:
        xs = gen.nodes[e.id]
        d = sys.edges[e.id]
        Dk = sp.kron(sbp_derivative(xs.size - 1, e.length), sp.identity(e.k), format="csr")
        Q, M, N = d.Q(xs), d.M(xs), d.N(xs)
        Qi = np.linalg.inv(Q)
        dQM = d.QM_derivative(xs)
        zero = Qi @ (np.conj(np.swapaxes(N, 1, 2)) @ Q) - Qi @ dQM
        L = (-_blockdiag(M) @ Dk + _blockdiag(zero)).tocsr()
        o, m = gen.edge_off[e.id], L.shape[0]
        A[o:o + m, o:o + m] = L
    cells = {e: x.size - 1 for e, x in gen.nodes.items()}
    for v in sys.sites:
        c = sys.conditions[v]
        Qp = np.linalg.pinv(c.Qv)
        Pd = c.P_d
        T = assemble_Tv(sys, v)
        so, kv = gen.site_off[v], sys.site_dim(v)
        A[so:so + kv, so:so + kv] = Qp @ Pd @ c.B.conj().T @ c.Qv + Qp @ c.C.conj().T @ c.Qv
        G = Qp @ Pd @ T
        for eid, sl, end, _x, _s in block_slices(sys, v):
            k = sl.stop - sl.start
            node = 0 if end == INITIAL else cells[eid]
            base = gen.edge_off[eid] + node * k
            A[so:so + kv, base:base + k] = G[:, sl]
    return A.tocsr()


def adjoint_pairing_defect(sys: HyperbolicSystem, gen: DiscreteGenerator, Astar: sp.csr_matrix,
                           u: StateVector, v: StateVector) -> float:
    """``|(A_h u, v)_d - (u, A*_h v)_d|`` for full-grid states."""
    lhs = gen.pair(u, v)
    Fu, Fv = gen.full_vector(u), gen.full_vector(v)
    rhs = np.vdot(Astar @ Fv, gen.WF @ Fu)
    return float(abs(lhs - rhs))


def adjoint_sum_defect(sys: HyperbolicSystem, gen: DiscreteGenerator, Astar: sp.csr_matrix,
                       u: StateVector, z: StateVector) -> float:
    """``|((A_h + A*_h) u, z)_d|`` in the weak pairing."""
    Fu, Fz = gen.full_vector(u), gen.full_vector(z)
    return float(abs(np.vdot(Fz, gen.SF @ Fu) + np.vdot(Fz, gen.WF @ (Astar @ Fu))))


# energy and dissipation identity

def energy(sys: HyperbolicSystem, st: StateVector) -> float:
    """Trapezoid ``sum_e int Q_e u . conj(u)`` plus ``sum_v Q_v x_v . conj(x_v)``."""
    return max(inner_d(sys, st, st).real, 0.0)


def dissipation_sides(sys: HyperbolicSystem, st: StateVector, lam: float = 0.0) -> tuple[float, float]:
    """Both sides of the dissipation identity for a smooth state with ``st.du``.

    Left: ``Re((A - lam) w, w)_d``.  Right: half the edge integrand
    ``Q N + N^* Q - (Q M)'``, the ``Q_v C_v`` term and the vertex forms
    ``T_v + Q_v B_v + B_v^* Q_v``, minus ``lam |w|_d^2``.
    """
    if st.du is None:
        raise ValueError("state needs derivative samples")
    check_domain(sys, st)
    lhs = rhs = 0.0
    for e in sys.graph.edges:
        xs = st.nodes[e.id]
        d = sys.edges[e.id]
        w = trapezoid_weights(xs)
        u, du = st.u[e.id], st.du[e.id]
        Q, M, N = d.Q(xs), d.M(xs), d.N(xs)
        Au = np.einsum("nij,nj->ni", M, du) + np.einsum("nij,nj->ni", N, u)
        lhs += np.sum(w * np.einsum("nij,nj,ni->n", Q, Au, u.conj())).real
        QN = Q @ N
        K = QN + np.conj(np.swapaxes(QN, 1, 2)) - d.QM_derivative(xs)
        rhs += 0.5 * np.sum(w * np.einsum("nij,nj,ni->n", K, u, u.conj())).real
    for v in sys.sites:
        c = sys.conditions[v]
        g, x = trace(sys, st, v), st.x[v]
        lhs += np.vdot(x, c.Qv @ (c.B @ g + c.C @ x)).real
        QC, QB = c.Qv @ c.C, c.Qv @ c.B
        rhs += 0.5 * np.vdot(x, (QC + QC.conj().T) @ x).real
        rhs += 0.5 * np.vdot(g, (assemble_Tv(sys, v) + QB + QB.conj().T) @ g).real
    if lam:
        nrm = energy(sys, st)
        lhs -= lam * nrm
        rhs -= lam * nrm
    return float(lhs), float(rhs)


def dissipativity_residual(sys: HyperbolicSystem, st: StateVector, lam: float = 0.0) -> float:
    lhs, rhs = dissipation_sides(sys, st, lam)
    return abs(lhs - rhs)


# time stepping

@dataclass
class EnergyLedger:
    t: np.ndarray
    E: np.ndarray
    constraint_residual: np.ndarray
    reprojections: int = 0


@dataclass
class Trajectory:
    gen: DiscreteGenerator
    times: np.ndarray
    states: np.ndarray        # (n_out+1, dim) reduced coordinates
    ledger: EnergyLedger
    method: str
    dt: float
    projected_by: float = 0.0

    def state(self, i: int) -> StateVector:
        return self.gen.lift(self.states[i])


def max_speed(sys: HyperbolicSystem) -> float:
    s = 0.0
    for e in sys.graph.edges:
        d = sys.edges[e.id]
        for x in d.sample_nodes():
            s = max(s, float(np.abs(np.linalg.eigvals(d.M(x))).max()))
    return s


def prepare_initial(gen: DiscreteGenerator, initial) -> tuple[np.ndarray, float]:
    """Reduced coordinates of the initial data and the constraint defect before projection."""
    if isinstance(initial, SmoothState):
        initial = initial.sample(gen.nodes)
    if isinstance(initial, np.ndarray):
        return np.asarray(initial, complex), 0.0
    defect = domain_defect(gen.sys, initial)
    if defect > TOL_PROJ:
        warnings.warn(f"initial data off the constraints by {defect:.3e}; projected", ProjectionWarning,
                      stacklevel=3)
    return gen.restrict(initial), defect


def _rk4_step(A, w, dt):
    k1 = A @ w
    k2 = A @ (w + 0.5 * dt * k1)
    k3 = A @ (w + 0.5 * dt * k2)
    k4 = A @ (w + dt * k3)
    return w + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def simulate(sys: HyperbolicSystem, initial, t_final: float, method: str = "rk4", dt: Optional[float] = None,
             n_cells=DEFAULT_CELLS, n_out: int = 50, gen: Optional[DiscreteGenerator] = None,
             cfl: float = CFL) -> Trajectory:
    """Evolve ``initial`` (StateVector, SmoothState or reduced vector) to ``t_final``.

    Outputs are taken at ``n_out + 1`` equally spaced times.  ``rk4`` uses
    ``dt <= cfl h / max|eig M|`` (or the given ``dt``); ``expm`` applies the
    dense propagator over one output interval.
    """
    if method not in ("rk4", "expm"):
        raise ValueError(f"unknown method {method!r}")
    gen = gen or assemble_discrete_generator(sys, n_cells)
    w, defect = prepare_initial(gen, initial)
    times = np.linspace(0.0, float(t_final), n_out + 1)
    dt_out = times[1] - times[0] if n_out else 0.0
    states = np.zeros((n_out + 1, gen.dim), complex)
    states[0] = w
    if method == "expm":
        if gen.dim > MAX_EXPM_DIM:
            raise DimensionTooLargeForExpm(f"dimension {gen.dim} > {MAX_EXPM_DIM}")
        Pm = sla.expm(gen.A.toarray() * dt_out) if gen.dim else np.zeros((0, 0))
        step, substeps = dt_out, 1
    else:
        speed = max(max_speed(sys), 1e-300)
        step_max = dt if dt is not None else cfl * gen.h_min / speed
        substeps = max(1, math.ceil(dt_out / step_max - 1e-12)) if dt_out else 1
        step = dt_out / substeps if dt_out else 0.0
    E = np.zeros(n_out + 1)
    res = np.zeros(n_out + 1)
    E[0], res[0] = gen.energy(w), gen.constraint_residual(w)
    for i in range(1, n_out + 1):
        if method == "expm":
            w = Pm @ w
        else:
            for _ in range(substeps):
                w = _rk4_step(gen.A, w, step)
        states[i] = w
        E[i] = gen.energy(w)
        res[i] = gen.constraint_residual(w)
        if not np.isfinite(E[i]) or (E[0] > 0 and E[i] > 1e10 * E[0]):
            raise BlowupDetected(f"energy {E[i]:.3e} at t={times[i]:.4g} (initial {E[0]:.3e})")
    ledger = EnergyLedger(times, E, res)
    return Trajectory(gen, times, states, ledger, method, step, defect)


__all__ = ["GridTooCoarse", "BlowupDetected", "DimensionTooLargeForExpm", "ProjectionWarning",
           "DiscreteGenerator", "EnergyLedger", "Trajectory", "assemble_discrete_generator",
           "assemble_adjoint_full", "adjoint_pairing_defect", "adjoint_sum_defect", "sbp_derivative",
           "energy", "dissipation_sides", "dissipativity_residual", "simulate", "max_speed"]
