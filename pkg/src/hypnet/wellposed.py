"""Generation certificates: cone tests, the basis condition and the adjoint route.

All quadratic forms are Hermitian parts of matrices on ``C^{k_v}`` (or on
``C^{k_v} + Y_v^(d)``), compressed to a subspace with orthonormal basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg as sla

from .system import (HyperbolicSystem, assemble_Tv, block_slices, null_space,
                     projector, range_basis, validate_assumptions)

NONPOSITIVE = "nonpositive"
NULL = "null"


def herm(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


class Projectors(NamedTuple):
    P_d: np.ndarray       # onto Y^(d)
    P_d0: np.ndarray      # onto Ker B^* inside Y^(d)
    P_dperp: np.ndarray   # onto Y minus Y^(d)
    P_Y: np.ndarray       # onto Y


def projectors(vc, tol_rank: float = 1e-9) -> Projectors:
    P_d, P_Y = vc.P_d, vc.P_Y
    R = range_basis(vc.B, tol_rank)
    return Projectors(P_d, P_d - projector(R), P_Y - P_d, P_Y)


@dataclass
class ConeCheckResult:
    holds: bool
    mode: str
    extremal_value: float
    witness: np.ndarray
    dim: int = 0

    def to_dict(self) -> dict:
        return {"holds": self.holds, "mode": self.mode,
                "extremal_value": float(self.extremal_value), "dim": self.dim}


def cone_check(F: np.ndarray, S: np.ndarray, mode: str = NONPOSITIVE,
               tol_eig: float = 1e-10) -> ConeCheckResult:
    """Is ``span(S)`` inside the nonpositive (or null) cone of ``F``?

    Empty subspaces hold trivially with extremal value 0.
    """
    n = F.shape[0]
    if S.shape[1] == 0:
        return ConeCheckResult(True, mode, 0.0, np.zeros(n, complex), 0)
    w, V = np.linalg.eigh(herm(S.conj().T @ F @ S))
    if mode == NULL:
        i = int(np.argmax(np.abs(w)))
        ext = float(abs(w[i]))
    elif mode == NONPOSITIVE:
        i = len(w) - 1
        ext = float(w[i])
    else:
        raise ValueError(f"unknown cone mode {mode!r}")
    return ConeCheckResult(ext <= tol_eig, mode, ext, S @ V[:, i], S.shape[1])


def min_shift(A: np.ndarray, G: np.ndarray, tol: float = 1e-10) -> tuple[float, Optional[np.ndarray]]:
    """Smallest ``t >= 0`` with ``A - t G`` negative semidefinite.

    ``A`` Hermitian, ``G`` Hermitian positive semidefinite.  Returns
    ``(inf, witness)`` when no shift works, i.e. when ``A`` is not
    negative on ``Ker G`` in the Schur-complement sense.
    """
    A, G = herm(A), herm(G)
    n = A.shape[0]
    if n == 0:
        return 0.0, None
    g, U = np.linalg.eigh(G)
    gmax = max(float(g[-1]), 0.0)
    on = g > tol * max(gmax, 1.0)
    R, K = U[:, on], U[:, ~on]
    if K.shape[1]:
        a, W = np.linalg.eigh(K.conj().T @ A @ K)
        if a[-1] > tol:
            return np.inf, K @ W[:, -1]
        neg = a < -tol
        Z, Nb = K @ W[:, ~neg], K @ W[:, neg]
        if Z.shape[1] and R.shape[1] and np.linalg.norm(Z.conj().T @ A @ R) > np.sqrt(tol):
            return np.inf, Z[:, 0]
    else:
        Nb = K
    if R.shape[1] == 0:
        return 0.0, None
    S = R.conj().T @ A @ R
    if Nb.shape[1]:
        ANN = Nb.conj().T @ A @ Nb
        ANR = Nb.conj().T @ A @ R
        S = S - ANR.conj().T @ np.linalg.solve(ANN, ANR)
    w, V = sla.eigh(herm(S), herm(R.conj().T @ G @ R))
    t = float(w[-1])
    return (t if t > tol else 0.0), R @ V[:, -1]


def boundary_form(sys: HyperbolicSystem, v) -> np.ndarray:
    """``T_v + Q_v B_v + B_v^* Q_v``."""
    c = sys.conditions[v]
    QB = c.Qv @ c.B
    return assemble_Tv(sys, v) + QB + QB.conj().T


def min_lambda(sys: HyperbolicSystem, v) -> float:
    """Least ``lambda >= 0`` with the boundary form minus ``lambda P Q P`` nonpositive on ``Y_v``."""
    c = sys.conditions[v]
    Y = c.Y
    F = Y.conj().T @ boundary_form(sys, v) @ Y
    G = Y.conj().T @ (c.P_d @ c.Qv @ c.P_d) @ Y
    return min_shift(F, G, sys.tol.tol_eig)[0]


def yd_cone_lambda(sys: HyperbolicSystem, v) -> float:
    """Same shift computed on ``Y_v^(d)`` only."""
    c = sys.conditions[v]
    Yd = c.Yd
    return min_shift(Yd.conj().T @ boundary_form(sys, v) @ Yd, Yd.conj().T @ c.Qv @ Yd, sys.tol.tol_eig)[0]


@dataclass
class WvResult:
    vectors: np.ndarray      # k_v x |W_v|, columns in order (Y^perp, B^* y_j, Ker B^*)
    n_perp: int
    n_ranBstar: int
    n_kerBstar: int
    Z: np.ndarray            # orthonormal basis of Z_v
    ranB: np.ndarray = None  # orthonormal basis y_j of Ran B_v, paired with the B^* y_j columns

    @property
    def dim_Z(self) -> int:
        return self.Z.shape[1]


def build_Wv(sys: HyperbolicSystem, v) -> WvResult:
    c = sys.conditions[v]
    tr = sys.tol.tol_rank
    Yperp = null_space(c.Y.conj().T, tr) if c.Y.shape[1] else np.eye(c.kv, dtype=complex)
    R = range_basis(c.B, tr)
    rb = c.B.conj().T @ R
    P = projectors(c, tr)
    ev, U = np.linalg.eigh(herm(P.P_d0))
    Kb = U[:, ev > 0.5]
    W = np.hstack([Yperp, rb, Kb])
    Z = range_basis(W, tr) if W.shape[1] else W
    return WvResult(W, Yperp.shape[1], rb.shape[1], Kb.shape[1], Z, R)


def extend(sys: HyperbolicSystem, v, W: np.ndarray) -> np.ndarray:
    """Extend columns of ``W`` (in ``C^{k_v}``) by zeros to ``C^k``.

    Under global coupling the two endpoint blocks of an edge are added.
    """
    offs = sys.graph.edge_offsets()
    out = np.zeros((sys.k, W.shape[1]), complex)
    for eid, sl, _end, _x, _s in block_slices(sys, v):
        o = offs[eid]
        out[o:o + sl.stop - sl.start] += W[sl]
    return out


@dataclass
class BasisConditionResult:
    holds: bool
    dim_span: int
    k: int
    count: int
    per_vertex: dict
    shortcut_used: str = "none"
    shortcut_holds: Optional[bool] = None

    def to_dict(self) -> dict:
        return {"holds": self.holds, "dim_span": self.dim_span, "k": self.k, "count": self.count,
                "per_vertex": {str(v): d for v, d in self.per_vertex.items()},
                "shortcut_used": self.shortcut_used, "shortcut_holds": self.shortcut_holds}


def boundary_vectors(sys: HyperbolicSystem) -> tuple[np.ndarray, list]:
    """Stacked extended vectors (``k x total``) and per-column labels ``(v, kind, i)``."""
    cols, labels = [], []
    for v in sys.sites:
        wv = build_Wv(sys, v)
        cols.append(extend(sys, v, wv.vectors))
        kinds = ["perp"] * wv.n_perp + ["ranBstar"] * wv.n_ranBstar + ["kerBstar"] * wv.n_kerBstar
        idx = list(range(wv.n_perp)) + list(range(wv.n_ranBstar)) + list(range(wv.n_kerBstar))
        labels += list(zip([v] * len(kinds), kinds, idx))
    W = np.hstack(cols) if cols else np.zeros((sys.k, 0), complex)
    return W, labels


def _rank(a: np.ndarray, tol_rank: float) -> int:
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(s > tol_rank * s[0])) if s[0] > 0 else 0


def basis_condition(sys: HyperbolicSystem) -> BasisConditionResult:
    tr = sys.tol.tol_rank
    W, _ = boundary_vectors(sys)
    per, surj, stationary, dim_sum = {}, True, True, 0
    Zcols = []
    for v in sys.sites:
        c = sys.conditions[v]
        wv = build_Wv(sys, v)
        per[v] = {"dim_Y_perp": wv.n_perp, "dim_ran_Bstar": wv.n_ranBstar,
                  "dim_ker_Bstar": wv.n_kerBstar, "dim_Z": wv.dim_Z}
        dd = c.Yd.shape[1]
        surj &= _rank(c.B, tr) == dd
        stationary &= dd == 0
        dim_sum += c.Y.shape[1] - dd
        Zcols.append(extend(sys, v, wv.Z))
    k, count = sys.k, W.shape[1]
    dim_span = _rank(W, tr)
    holds = count == k and dim_span == k
    res = BasisConditionResult(holds, dim_span, k, count, per)
    if surj:
        res.shortcut_used = "stationary" if stationary else "surjectiveB"
        Zall = np.hstack(Zcols) if Zcols else np.zeros((k, 0))
        res.shortcut_holds = _rank(Zall, tr) == k and dim_sum == k
        if res.shortcut_holds != holds:
            raise AssertionError("basis condition and its dimension shortcut disagree")
    return res


# adjoint route

@dataclass
class AdjointSpace:
    coords: np.ndarray    # (k_v + d_d) x r, coordinates (xi, c) with x = Yd c
    ambient: np.ndarray   # 2 k_v x r, (xi, x)
    kv: int


def adjoint_space(sys: HyperbolicSystem, v) -> AdjointSpace:
    """Orthonormal basis of ``Ker [P^perp T_v, P^perp B^* Q_v]`` on ``C^{k_v} + Y^(d)``."""
    c = sys.conditions[v]
    P = projectors(c, sys.tol.tol_rank)
    T = assemble_Tv(sys, v)
    K = np.hstack([P.P_dperp @ T, P.P_dperp @ c.B.conj().T @ c.Qv @ c.Yd])
    S = null_space(K, sys.tol.tol_rank)
    amb = np.vstack([S[:c.kv], c.Yd @ S[c.kv:]])
    return AdjointSpace(S, amb, c.kv)


def adjoint_form(sys: HyperbolicSystem, v, mu: float = 0.0) -> np.ndarray:
    """Hermitian part of the adjoint-route block form in ``(xi, c)`` coordinates."""
    c = sys.conditions[v]
    T = assemble_Tv(sys, v)
    kv, Yd, Q, B, Pd = c.kv, c.Yd, c.Qv, c.B, c.P_d
    I = np.eye(kv)
    top = np.hstack([-T - 2 * mu * I, T @ Yd])
    low = Yd.conj().T @ ((Pd @ B.conj().T - mu * I) @ Q + Q @ (B - mu * I))
    bot = np.hstack([Yd.conj().T @ Pd @ T, low @ Yd])
    return herm(np.vstack([top, bot]))


def _adjoint_weight(c, trace_weight: float) -> np.ndarray:
    kv, dd = c.kv, c.Yd.shape[1]
    G = np.zeros((kv + dd, kv + dd), complex)
    G[:kv, :kv] = 2 * trace_weight * np.eye(kv)
    Pd, Q = c.P_d, c.Qv
    G[kv:, kv:] = c.Yd.conj().T @ (Pd @ Q @ Pd + Q @ Pd) @ c.Yd
    return G


def adjoint_cone_check(sys: HyperbolicSystem, v, mu: float = 0.0, mode: str = NONPOSITIVE) -> ConeCheckResult:
    S = adjoint_space(sys, v).coords
    return cone_check(adjoint_form(sys, v, mu), S, mode, sys.tol.tol_eig)


def min_mu(sys: HyperbolicSystem, v, trace_weight: float = 1.0) -> float:
    """Least ``mu >= 0`` making the adjoint form nonpositive on the adjoint space.

    ``trace_weight=1`` uses the weight ``diag(2I, P Q P + Q P)``;
    ``trace_weight=0`` lets ``mu`` act on the vertex block only.
    """
    c = sys.conditions[v]
    S = adjoint_space(sys, v).coords
    H0 = adjoint_form(sys, v, 0.0)
    G = _adjoint_weight(c, trace_weight)
    return min_shift(S.conj().T @ H0 @ S, S.conj().T @ G @ S, sys.tol.tol_eig)[0]


def _proportional(A: np.ndarray, G: np.ndarray, tol: float) -> Optional[float]:
    """``t >= 0`` with ``A = t G`` (Frobenius fit), or ``None``."""
    if A.size == 0:
        return 0.0
    gg = float(np.vdot(G, G).real)
    t = float(np.vdot(G, A).real / gg) if gg > 0 else 0.0
    t = max(t, 0.0)
    return t if np.linalg.norm(A - t * G) <= tol * max(1.0, np.sqrt(A.size)) else None


# classification

VERDICT_RANK = {"inconclusive": 0, "semigroup": 1, "contractive_semigroup": 2, "group": 3, "unitary_group": 4}


def _verdict(sg: bool, grp: bool, contr: bool, unit: bool) -> str:
    if not sg:
        return "inconclusive"
    if unit:
        return "unitary_group"
    if grp:
        return "group"
    if contr:
        return "contractive_semigroup"
    return "semigroup"


@dataclass
class ClassificationReport:
    assumptions_ok: bool
    basis_ok: bool
    basis: BasisConditionResult
    semigroup_lambda: Optional[float]
    vertex_lambda: dict
    group_ok: bool
    adjoint_route: dict
    contractive: bool
    contractive_detail: dict
    unitary: bool
    verdict: str
    route: str
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None else ("inf" if np.isinf(x) else float(x))
        return {
            "verdict": self.verdict, "route": self.route,
            "assumptions_ok": self.assumptions_ok, "basis_ok": self.basis_ok,
            "basis": self.basis.to_dict(),
            "semigroup_lambda": num(self.semigroup_lambda),
            "vertex_lambda": {str(v): num(x) for v, x in self.vertex_lambda.items()},
            "group_ok": self.group_ok,
            "adjoint_route": {k: (num(x) if isinstance(x, float) else x) for k, x in self.adjoint_route.items()},
            "contractive": self.contractive,
            "contractive_detail": self.contractive_detail,
            "unitary": self.unitary, "notes": list(self.notes),
        }


def edge_dissipation_extremes(sys: HyperbolicSystem) -> tuple[float, float]:
    """Max eigenvalue and max |eigenvalue| of ``Q N + N^* Q - (Q M)'`` over sample nodes."""
    top, absmax = -np.inf, 0.0
    for e in sys.graph.edges:
        d = sys.edges[e.id]
        for x in d.sample_nodes():
            QN = d.Q(x) @ d.N(x)
            w = np.linalg.eigvalsh(herm(QN + QN.conj().T - d.QM_derivative(x)))
            top, absmax = max(top, float(w[-1])), max(absmax, float(np.abs(w).max()))
    return top, absmax


def classify(sys: HyperbolicSystem) -> ClassificationReport:
    tol = sys.tol
    assumptions_ok = validate_assumptions(sys).ok
    basis = basis_condition(sys)
    lam = {v: min_lambda(sys, v) for v in sys.sites}
    null_Y = {v: cone_check(boundary_form(sys, v), sys.conditions[v].Y, NULL, tol.tol_eig).holds
              for v in sys.sites}

    edge_top, edge_abs = edge_dissipation_extremes(sys)
    edge_neg, edge_zero = edge_top <= tol.tol_eig, edge_abs <= tol.tol_eig
    c_neg = c_null = True
    for v in sys.sites:
        c = sys.conditions[v]
        QC = c.Qv @ c.C
        c_neg &= cone_check(QC + QC.conj().T, c.Yd, NONPOSITIVE, tol.tol_eig).holds
        c_null &= cone_check(QC + QC.conj().T, c.Yd, NULL, tol.tol_eig).holds
    all_lam_finite = all(np.isfinite(x) for x in lam.values())
    all_lam_zero = all(x == 0.0 for x in lam.values())

    # basis route
    b_sg = basis.holds and all_lam_finite
    b_grp = basis.holds and all(null_Y.values())
    b_con = b_sg and all_lam_zero and edge_neg and c_neg
    b_uni = b_grp and edge_zero and c_null
    v_basis = _verdict(b_sg, b_grp, b_con, b_uni)

    # adjoint route
    mu = {v: min_mu(sys, v, 1.0) for v in sys.sites}
    mu_strict = {v: min_mu(sys, v, 0.0) for v in sys.sites}
    yd_lam = {v: yd_cone_lambda(sys, v) for v in sys.sites}
    a_sg = all_lam_finite and all(np.isfinite(x) for x in mu_strict.values())
    a_grp_adj = True
    a_uni_adj = True
    for v in sys.sites:
        c = sys.conditions[v]
        S = adjoint_space(sys, v).coords
        H0 = S.conj().T @ adjoint_form(sys, v, 0.0) @ S
        G = S.conj().T @ _adjoint_weight(c, 0.0) @ S
        a_grp_adj &= _proportional(H0, G, tol.tol_eig) is not None
        a_uni_adj &= cone_check(H0, np.eye(S.shape[1]), NULL, tol.tol_eig).holds
        kv = c.kv
        QC = c.Qv @ c.C
        D = np.zeros((S.shape[0], S.shape[0]), complex)
        D[kv:, kv:] = c.Yd.conj().T @ (QC + QC.conj().T) @ c.Yd
        a_uni_adj &= cone_check(D, S, NULL, tol.tol_eig).holds
    a_grp = a_sg and all(null_Y.values()) and a_grp_adj
    a_con = a_sg and all_lam_zero and all(x == 0.0 for x in mu_strict.values()) and edge_neg and c_neg
    a_uni = a_grp and a_uni_adj and all_lam_zero and edge_zero and c_null
    v_adj = _verdict(a_sg, a_grp, a_con, a_uni)

    if VERDICT_RANK[v_basis] >= VERDICT_RANK[v_adj] and v_basis != "inconclusive":
        verdict, route = v_basis, "basis"
    elif v_adj != "inconclusive":
        verdict, route = v_adj, "adjoint"
    else:
        verdict, route = "inconclusive", "none"
    finite = [x for x in lam.values()]
    sg_lam = max(finite) if finite and all_lam_finite else None
    notes = []
    if not assumptions_ok:
        notes.append("standing assumptions violated; certificates are not meaningful")
    return ClassificationReport(
        assumptions_ok=assumptions_ok, basis_ok=basis.holds, basis=basis,
        semigroup_lambda=sg_lam, vertex_lambda=lam, group_ok=b_grp,
        adjoint_route={"Yd_cone_lambda": max(yd_lam.values(), default=0.0),
                       "adjoint_cone_mu": max(mu.values(), default=0.0),
                       "adjoint_cone_mu_vertex_only": max(mu_strict.values(), default=0.0),
                       "holds": bool(a_sg), "null": bool(a_grp)},
        contractive=bool(b_con or a_con),
        contractive_detail={"edge_form_max_eig": float(edge_top), "edge_form_nonpositive": bool(edge_neg),
                            "edge_form_zero": bool(edge_zero), "C_form_nonpositive": bool(c_neg),
                            "C_form_null": bool(c_null)},
        unitary=bool(b_uni or a_uni), verdict=verdict, route=route, notes=notes)
