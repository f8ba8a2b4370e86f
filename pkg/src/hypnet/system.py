"""Edge coefficients, vertex conditions and assumption checks.

A :class:`HyperbolicSystem` describes

    du_e/dt = M_e(x) du_e/dx + N_e(x) u_e   on each edge,
    gamma_v(u) in Y_v,  x_v = P_v^(d) gamma_v(u),
    dx_v/dt = B_v gamma_v(u) + C_v x_v      at each vertex,

with weights Q_e (edges) and Q_v (vertices) defining the energy.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .netgraph import INITIAL, TERMINAL, MetricGraph, TraceBlock, UnknownVertex, trace_layout

GLOBAL = "global"


class SubspaceRankError(ValueError):
    """User-supplied spanning vectors are linearly dependent."""


class DimensionMismatch(ValueError):
    pass


class CompressionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Tolerances:
    tol_sym: float = 1e-10
    tol_sub: float = 1e-10
    tol_det: float = 1e-12
    tol_rank: float = 1e-9
    tol_eig: float = 1e-10

    def replace(self, **kw) -> "Tolerances":
        d = {**self.__dict__, **{k: v for k, v in kw.items() if v is not None}}
        return Tolerances(**d)


class MatrixField:
    """Constant or piecewise-linear ``k x k`` matrix field on ``[0, length]``.

    ``samples`` has shape ``(k, k)`` (constant) or ``(m+1, k, k)`` (values at
    uniform nodes).  ``deriv`` optionally holds derivative samples with the
    same node layout.
    """

    def __init__(self, samples, length: float, deriv=None):
        a = np.asarray(samples, dtype=complex)
        if a.ndim == 2:
            a = a[None]
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise DimensionMismatch(f"matrix field of shape {a.shape}")
        self.samples = a
        self.length = float(length)
        self.deriv = None if deriv is None else np.asarray(deriv, dtype=complex).reshape(a.shape)

    @property
    def k(self) -> int:
        return self.samples.shape[1]

    @property
    def constant(self) -> bool:
        return self.samples.shape[0] == 1

    @property
    def nodes(self) -> np.ndarray:
        m = self.samples.shape[0]
        return np.array([0.0]) if m == 1 else np.linspace(0.0, self.length, m)

    def _locate(self, x):
        m = self.samples.shape[0] - 1
        s = np.clip(np.asarray(x, float) / self.length * m, 0.0, m)
        i = np.minimum(np.floor(s).astype(int), m - 1)
        return i, s - i

    def __call__(self, x):
        """Evaluate at scalar or array ``x``; arrays give shape ``(n, k, k)``."""
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, float))
        if self.constant:
            out = np.broadcast_to(self.samples[0], (xs.size, self.k, self.k)).copy()
        else:
            i, t = self._locate(xs)
            out = (1 - t)[:, None, None] * self.samples[i] + t[:, None, None] * self.samples[i + 1]
        return out[0] if scalar else out

    def derivative(self, x):
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, float))
        if self.deriv is not None:
            if self.constant:
                out = np.broadcast_to(self.deriv[0], (xs.size, self.k, self.k)).copy()
            else:
                i, t = self._locate(xs)
                out = (1 - t)[:, None, None] * self.deriv[i] + t[:, None, None] * self.deriv[i + 1]
        elif self.constant:
            out = np.zeros((xs.size, self.k, self.k), complex)
        else:
            m = self.samples.shape[0] - 1
            i, _ = self._locate(xs)
            out = (self.samples[i + 1] - self.samples[i]) * (m / self.length)
        return out[0] if scalar else out

    def to_json(self):
        return self.samples[0] if self.constant else self.samples


@dataclass
class EdgeData:
    """Coefficients of one edge; ``dQM`` overrides the derivative of ``Q M``."""

    M: MatrixField
    N: MatrixField
    Q: MatrixField
    dQM: Optional[MatrixField] = None

    def QM(self, x):
        return self.Q(x) @ self.M(x)

    def QM_derivative(self, x):
        if self.dQM is not None:
            return self.dQM(x)
        return self.Q.derivative(x) @ self.M(x) + self.Q(x) @ self.M.derivative(x)

    def sample_nodes(self) -> np.ndarray:
        """Union of the sample nodes of all fields (always includes both ends)."""
        xs = [self.M.nodes, self.N.nodes, self.Q.nodes, np.array([0.0, self.M.length])]
        return np.unique(np.concatenate(xs))


def edge_data(M, N=None, Q=None, length: float = 1.0, dQM=None) -> EdgeData:
    """Convenience constructor from arrays (constant or sampled)."""
    Mf = M if isinstance(M, MatrixField) else MatrixField(M, length)
    k = Mf.k
    Nf = N if isinstance(N, MatrixField) else MatrixField(np.zeros((k, k)) if N is None else N, length)
    Qf = Q if isinstance(Q, MatrixField) else MatrixField(np.eye(k) if Q is None else Q, length)
    dq = None if dQM is None else (dQM if isinstance(dQM, MatrixField) else MatrixField(dQM, length))
    return EdgeData(Mf, Nf, Qf, dq)


def orthonormalize(vectors, n: int, tol_rank: float, what: str = "subspace") -> np.ndarray:
    """Orthonormal basis (``n x r``) of the column span; dependent input raises."""
    a = np.asarray(vectors, dtype=complex)
    if a.size == 0:
        return np.zeros((n, 0), complex)
    if a.ndim == 1:
        a = a[:, None]
    if a.shape[0] != n:
        raise DimensionMismatch(f"{what}: vectors have length {a.shape[0]}, expected {n}")
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size and (s[0] == 0 or s[-1] <= tol_rank * s[0]):
        raise SubspaceRankError(f"{what}: spanning vectors are linearly dependent")
    return u


def projector(basis: np.ndarray) -> np.ndarray:
    return basis @ basis.conj().T


def null_space(a: np.ndarray, tol_rank: float) -> np.ndarray:
    """Orthonormal basis of ``Ker a`` with relative singular value cut-off."""
    a = np.atleast_2d(np.asarray(a, complex))
    n = a.shape[1]
    if a.shape[0] == 0 or n == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(a)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    r = int(np.sum(s > tol_rank * scale)) if s.size and s[0] > 0 else 0
    return vh[r:].conj().T


def range_basis(a: np.ndarray, tol_rank: float) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, complex))
    if a.size == 0:
        return np.zeros((a.shape[0], 0), complex)
    u, s, _ = np.linalg.svd(a)
    if s.size == 0 or s[0] == 0:
        return np.zeros((a.shape[0], 0), complex)
    r = int(np.sum(s > tol_rank * s[0]))
    return u[:, :r]


@dataclass
class VertexCondition:
    """Stationary and dynamic conditions at one vertex (ambient ``C^{k_v}``).

    ``Y`` and ``Yd`` hold orthonormal columns; ``B``, ``C``, ``Qv`` are stored
    in compressed ambient form.
    """

    Y: np.ndarray
    Yd: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Qv: np.ndarray

    @property
    def kv(self) -> int:
        return self.Y.shape[0]

    @property
    def P_Y(self) -> np.ndarray:
        return projector(self.Y)

    @property
    def P_d(self) -> np.ndarray:
        return projector(self.Yd)


def vertex_condition(kv: int, Y=None, Yd=None, B=None, C=None, Qv=None,
                     tol: Tolerances = Tolerances(), name="vertex") -> VertexCondition:
    """Ingest user data: orthonormalize subspaces and compress operators.

    ``Y=None`` means the full space ``C^{k_v}``; ``Yd=None`` means ``{0}``.
    ``Qv`` may be a scalar (times the identity on ``Y^(d)``).
    """
    Yb = np.eye(kv, dtype=complex) if Y is None else orthonormalize(Y, kv, tol.tol_rank, f"{name}: Y")
    Ydb = np.zeros((kv, 0), complex) if Yd is None else orthonormalize(Yd, kv, tol.tol_rank, f"{name}: Yd")
    PY, Pd = projector(Yb), projector(Ydb)
    z = np.zeros((kv, kv), complex)
    Bm = z if B is None else np.asarray(B, complex).reshape(kv, kv)
    Cm = z if C is None else np.asarray(C, complex).reshape(kv, kv)
    if Qv is None:
        Qm = Pd.copy()
    elif np.ndim(Qv) == 0:
        Qm = complex(Qv) * Pd
    else:
        Qm = np.asarray(Qv, complex).reshape(kv, kv)
    Bc, Cc, Qc = Pd @ Bm @ PY, Pd @ Cm @ Pd, Pd @ Qm @ Pd
    for label, raw, comp in (("B", Bm, Bc), ("C", Cm, Cc), ("Q_v", Qm, Qc)):
        scale = max(1.0, np.linalg.norm(raw))
        if np.linalg.norm(raw - comp) > tol.tol_sub * scale:
            warnings.warn(f"{name}: {label} compressed onto the vertex subspaces", CompressionWarning, stacklevel=2)
    return VertexCondition(Yb, Ydb, Bc, Cc, Qc)


@dataclass
class HyperbolicSystem:
    """Edge coefficients plus vertex conditions.

    With ``coupling="local"`` there is one condition per vertex.  With
    ``coupling="global"`` a single condition (key ``"global"``) acts on the
    stacked trace of all initial endpoints followed by all terminal ones.
    """

    graph: MetricGraph
    edges: dict            # edge id -> EdgeData
    conditions: dict       # site -> VertexCondition
    tol: Tolerances = field(default_factory=Tolerances)
    name: str = ""
    coupling: str = "local"

    def __post_init__(self):
        if self.coupling not in ("local", "global"):
            raise ValueError(f"unknown coupling {self.coupling!r}")
        for e in self.graph.edges:
            d = self.edges.get(e.id)
            if d is None:
                raise DimensionMismatch(f"edge {e.id}: no coefficients")
            for f in (d.M, d.N, d.Q):
                if f.k != e.k:
                    raise DimensionMismatch(f"edge {e.id}: coefficient size {f.k} != k_e={e.k}")
                if abs(f.length - e.length) > 1e-12 * e.length:
                    raise DimensionMismatch(f"edge {e.id}: coefficient length mismatch")
        for v in self.sites:
            c = self.conditions.get(v)
            if c is None:
                raise DimensionMismatch(f"vertex {v!r}: no vertex condition")
            if c.kv != self.site_dim(v):
                raise DimensionMismatch(f"vertex {v!r}: condition size {c.kv} != {self.site_dim(v)}")

    @property
    def k(self) -> int:
        return self.graph.k

    @property
    def sites(self) -> list:
        return [GLOBAL] if self.coupling == "global" else list(self.graph.vertices)

    def site_dim(self, v) -> int:
        return 2 * self.k if self.coupling == "global" else self.graph.k_v(v)

    def layout(self, v) -> list:
        if self.coupling == "local":
            return trace_layout(self.graph, v)
        if v != GLOBAL:
            raise UnknownVertex(v)
        offs, k = self.graph.edge_offsets(), self.k
        return ([TraceBlock(e.id, offs[e.id], INITIAL) for e in self.graph.edges]
                + [TraceBlock(e.id, k + offs[e.id], TERMINAL) for e in self.graph.edges])

    def endpoint_x(self, eid: int, endpoint: str) -> float:
        return 0.0 if endpoint == INITIAL else self.graph.edge(eid).length

    def with_tolerances(self, tol: Tolerances) -> "HyperbolicSystem":
        return HyperbolicSystem(self.graph, self.edges, self.conditions, tol, self.name, self.coupling)


# assumption checks

@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    witness: float
    location: str = ""


@dataclass
class ValidationReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"ok": self.ok,
                "checks": [{"name": c.name, "passed": c.passed, "witness": float(c.witness),
                            "location": c.location} for c in self.checks]}


def _herm_dev(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - a.conj().T) / max(1.0, np.linalg.norm(a)))


def validate_assumptions(sys: HyperbolicSystem) -> ValidationReport:
    """Check symmetrizer, invertibility and vertex-data assumptions.

    Each check records the worst witness and where it occurs.
    """
    tol = sys.tol
    checks = []
    q_min, q_loc = np.inf, ""
    qherm, qherm_loc = 0.0, ""
    asym, asym_loc = 0.0, ""
    det_min, det_loc = np.inf, ""
    for e in sys.graph.edges:
        d = sys.edges[e.id]
        for j, x in enumerate(d.sample_nodes()):
            Q, M = d.Q(x), d.M(x)
            loc = f"edge {e.id}, node {j} (x={x:.6g})"
            h = _herm_dev(Q)
            if h > qherm:
                qherm, qherm_loc = h, loc
            lam = float(np.linalg.eigvalsh((Q + Q.conj().T) / 2)[0])
            if lam < q_min:
                q_min, q_loc = lam, loc
            a = _herm_dev(Q @ M)
            if a > asym:
                asym, asym_loc = a, loc
            dt = abs(np.linalg.det(M))
            if dt < det_min:
                det_min, det_loc = dt, loc
    checks.append(AssumptionCheck("Q_e hermitian", qherm <= tol.tol_sym, qherm, qherm_loc))
    checks.append(AssumptionCheck("Q_e positive definite", q_min > tol.tol_eig, q_min, q_loc))
    checks.append(AssumptionCheck("Q_e M_e hermitian", asym <= tol.tol_sym, asym, asym_loc))
    checks.append(AssumptionCheck("M_e invertible", det_min > tol.tol_det, det_min, det_loc))

    sub, sub_loc = 0.0, ""
    comp, comp_loc = 0.0, ""
    qv_herm, qv_loc = 0.0, ""
    qv_min, qv_min_loc = np.inf, ""
    for v in sys.sites:
        c = sys.conditions[v]
        loc = f"vertex {v}"
        PY, Pd = c.P_Y, c.P_d
        r = float(np.linalg.norm(c.Yd - PY @ c.Yd)) if c.Yd.size else 0.0
        if r > sub:
            sub, sub_loc = r, loc
        dev = max(np.linalg.norm(c.B - Pd @ c.B @ PY), np.linalg.norm(c.C - Pd @ c.C @ Pd),
                  np.linalg.norm(c.Qv - Pd @ c.Qv @ Pd))
        if dev > comp:
            comp, comp_loc = float(dev), loc
        h = _herm_dev(c.Qv)
        if h > qv_herm:
            qv_herm, qv_loc = h, loc
        if c.Yd.shape[1]:
            lam = float(np.linalg.eigvalsh(c.Yd.conj().T @ c.Qv @ c.Yd)[0])
            if lam < qv_min:
                qv_min, qv_min_loc = lam, loc
    checks.append(AssumptionCheck("Y_v^(d) subset of Y_v", sub <= tol.tol_sub, sub, sub_loc))
    checks.append(AssumptionCheck("vertex operators compressed", comp <= tol.tol_sub, comp, comp_loc))
    checks.append(AssumptionCheck("Q_v hermitian", qv_herm <= tol.tol_sym, qv_herm, qv_loc))
    checks.append(AssumptionCheck("Q_v positive definite on Y_v^(d)",
                                  qv_min > tol.tol_eig, qv_min if np.isfinite(qv_min) else 0.0, qv_min_loc))
    return ValidationReport(checks)


def block_slices(sys: HyperbolicSystem, v):
    """``(edge id, slice into C^{k_v}, endpoint, x, incidence sign)`` per block."""
    out = []
    for b in sys.layout(v):
        k = sys.graph.edge(b.edge).k
        out.append((b.edge, slice(b.offset, b.offset + k), b.endpoint, sys.endpoint_x(b.edge, b.endpoint), b.sign))
    return out


def assemble_Tv(sys: HyperbolicSystem, v) -> np.ndarray:
    """Block-diagonal flux matrix with blocks ``iota_ve Q_e M_e`` at ``v``."""
    if v not in sys.sites:
        raise UnknownVertex(v)
    kv = sys.site_dim(v)
    T = np.zeros((kv, kv), complex)
    for eid, sl, _end, x, sign in block_slices(sys, v):
        T[sl, sl] = sign * sys.edges[eid].QM(x)
    return T


def assemble_T_global(sys: HyperbolicSystem) -> np.ndarray:
    """Flux matrix for globally coupled conditions: initial ends, then terminal ends."""
    k = sys.k
    T = np.zeros((2 * k, 2 * k), complex)
    offs = sys.graph.edge_offsets()
    for e in sys.graph.edges:
        d = sys.edges[e.id]
        o = offs[e.id]
        T[o:o + e.k, o:o + e.k] = -d.QM(0.0)
        T[k + o:k + o + e.k, k + o:k + o + e.k] = d.QM(e.length)
    return T


def weight_from_span(spanning, q) -> np.ndarray:
    """Ambient weight for ``x = S xi`` with energy ``xi^* q xi``.

    ``spanning`` holds the (not necessarily normalized) columns ``S``; ``q`` is
    a scalar or a ``d x d`` matrix acting on the coordinates ``xi``.
    """
    S = np.asarray(spanning, complex)
    S = S[:, None] if S.ndim == 1 else S
    Sp = np.linalg.pinv(S)
    qm = complex(q) * np.eye(S.shape[1]) if np.ndim(q) == 0 else np.asarray(q, complex)
    return Sp.conj().T @ qm @ Sp


def operator_from_span(spanning, c) -> np.ndarray:
    """Ambient matrix of ``xi -> c xi`` transported by ``x = S xi``."""
    S = np.asarray(spanning, complex)
    S = S[:, None] if S.ndim == 1 else S
    cm = complex(c) * np.eye(S.shape[1]) if np.ndim(c) == 0 else np.asarray(c, complex)
    return S @ cm @ np.linalg.pinv(S)
