"""Preset systems: transport, Maxwell, telegrapher Y-network, second sound,
wave star with a point mass, and a Dirac network.

Vertex weights given as scalars are understood in the coordinates of the
(unnormalized) spanning vectors of ``Y_v^(d)`` listed for each preset; see
:func:`hypnet.system.weight_from_span`.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable, Optional

import numpy as np

from .netgraph import build_graph, incidence
from .system import (GLOBAL, HyperbolicSystem, edge_data, operator_from_span,
                     vertex_condition, weight_from_span)


class InvalidParameter(ValueError):
    pass


def _require(cond: bool, msg: str):
    if not cond:
        raise InvalidParameter(msg)


@dataclass
class TransportParams:
    """Flow network in source-to-target orientation.

    Each flow edge ``(source, target)`` carries ``du/dt = c du/dx``; mass
    enters an edge at ``x = 1`` (source) and leaves at ``x = 0`` (target).
    ``omega`` splits the outflow of a vertex among its edges and ``C`` couples
    the vertex buffers.
    """

    vertices: list = field(default_factory=lambda: ["v1", "v2"])
    flow_edges: list = field(default_factory=lambda: [["v1", "v2"], ["v2", "v1"]])
    c: list = field(default_factory=lambda: [1.0, 1.0])
    omega: Optional[list] = None
    C: list = field(default_factory=lambda: [[-1.0, 0.5], [0.5, -1.0]])


@dataclass
class MaxwellParams:
    pass


@dataclass
class TelegrapherParams:
    """Y-network with the improved Kirchhoff condition; ``Lmat`` is the inductance matrix."""

    P: float = 1.0
    L: float = 1.0
    Lmat: list = field(default_factory=lambda: [[2.0, 0.5], [0.5, 1.0]])


@dataclass
class SecondSoundParams:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    delta: float = 1.0
    tau0: float = 1.0
    kappa: float = 1.0
    length: float = 1.0


@dataclass
class WaveStarParams:
    J: int = 3
    delta: float = 1.0
    alpha: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    beta: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    gamma: list = field(default_factory=lambda: [0.0, 0.0, 0.0])


@dataclass
class DiracParams:
    """Two parallel edges; ``C1`` is the skew-Hermitian block at each vertex."""

    c: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0
    C1: list = field(default_factory=lambda: [[0.0, 0.0], [0.0, 0.0]])


@dataclass
class ModelPreset:
    name: str
    params: Any
    system: HyperbolicSystem
    expected: dict


def _as_params(cls, params):
    if params is None:
        return cls()
    if isinstance(params, cls):
        return params
    if not isinstance(params, dict):
        raise InvalidParameter(f"parameters for {cls.__name__} must be a mapping")
    names = {f.name for f in fields(cls)}
    extra = set(params) - names
    _require(not extra, f"unknown parameters {sorted(extra)}")
    return cls(**params)


# builders

def _transport(p: TransportParams) -> HyperbolicSystem:
    V = list(p.vertices)
    nE = len(p.flow_edges)
    _require(nE > 0, "transport needs at least one edge")
    _require(len(p.c) == nE and all(ci > 0 for ci in p.c), "c must be positive, one per edge")
    for s, t in p.flow_edges:
        _require(s in V and t in V, f"edge ({s}, {t}) references unknown vertex")
    outs = {v: [j for j, (s, _) in enumerate(p.flow_edges) if s == v] for v in V}
    ins = {v: [j for j, (_, t) in enumerate(p.flow_edges) if t == v] for v in V}
    _require(all(outs[v] and ins[v] for v in V), "graph must have neither sinks nor sources")
    omega = np.ones(nE) if p.omega is None else np.asarray(p.omega, float)
    _require(omega.shape == (nE,) and np.all(omega > 0), "omega must be positive, one per edge")
    for v in V:
        omega[outs[v]] /= omega[outs[v]].sum()
    C = np.asarray(p.C, float)
    _require(C.shape == (len(V), len(V)), "C must be |V| x |V|")
    # x = 0 sits at the flow target, so the graph tail is the target vertex
    g = build_graph(V, [(j, t, s, 1.0, 1) for j, (s, t) in enumerate(p.flow_edges)])
    edges = {j: edge_data([[p.c[j]]]) for j in range(nE)}
    k = nE
    S = np.zeros((2 * k, len(V)))
    Iin = np.zeros((len(V), k))
    for i, v in enumerate(V):
        for j in outs[v]:
            S[k + j, i] = omega[j]
        for j in ins[v]:
            Iin[i, j] = 1.0
    Y = np.hstack([np.vstack([np.eye(k), np.zeros((k, k))]), S])
    B = S @ Iin @ np.hstack([np.eye(k), np.zeros((k, k))])
    cond = vertex_condition(2 * k, Y=Y, Yd=S, B=B, C=operator_from_span(S, C),
                            Qv=weight_from_span(S, 1.0), name="global")
    return HyperbolicSystem(g, edges, {GLOBAL: cond}, name="transport", coupling="global")


def _maxwell(p: MaxwellParams) -> HyperbolicSystem:
    g = build_graph(["v-1", "v0", "v1"], [(1, "v-1", "v0", 1.0, 2), (2, "v0", "v1", 1.0, 2)])
    M = [[0.0, 1.0], [1.0, 0.0]]
    edges = {1: edge_data(M), 2: edge_data(M)}
    s = np.array([1.0, 0, 1.0, 0])
    B = np.array([[0, -1, 0, 1], [0, 0, 0, 0], [0, -1, 0, 1], [0, 0, 0, 0]], float)
    conds = {
        "v-1": vertex_condition(2, Y=[0.0, 1.0]),
        "v1": vertex_condition(2, Y=[1.0, 0.0]),
        "v0": vertex_condition(4, Y=[[1, 0, 0], [0, 1, 0], [1, 0, 0], [0, 0, 1]], Yd=s, B=B,
                               Qv=weight_from_span(s, 1.0), name="v0"),
    }
    return HyperbolicSystem(g, edges, conds, name="maxwell_two_intervals")


# current-major layout at the centre: (I1, I2, I0, V1, V2, V0); ours: (V0, I0, V1, I1, V2, I2)


def telegrapher_permutation() -> np.ndarray:
    """Matrix ``Pi`` with ``ours = Pi @ current_major`` for the centre trace."""
    Pi = np.zeros((6, 6))
    for ours, src in enumerate([5, 2, 3, 0, 4, 1]):
        Pi[ours, src] = 1.0
    return Pi


def _telegrapher(p: TelegrapherParams) -> HyperbolicSystem:
    _require(p.P > 0 and p.L > 0, "P and L must be positive")
    Lm = np.asarray(p.Lmat, float)
    _require(Lm.shape == (2, 2) and np.allclose(Lm, Lm.T), "Lmat must be symmetric 2x2")
    _require(np.linalg.eigvalsh(Lm)[0] > 0, "Lmat must be positive definite")
    a = np.linalg.inv(Lm)
    g = build_graph(["v1", "v2", "v3", "v4"],
                    [(0, "v1", "v2", 1.0, 2), (1, "v1", "v3", 1.0, 2), (2, "v1", "v4", 1.0, 2)])
    M = -np.array([[0.0, p.L], [p.P, 0.0]])
    Q = np.diag([abs(p.P), abs(p.L)])
    edges = {j: edge_data(M, Q=Q) for j in range(3)}
    Bp = np.zeros((6, 6))
    Bp[0, 3:] = [-a[0, 0], -a[0, 1], a[0, 0] + a[0, 1]]
    Bp[1, 3:] = [-a[0, 1], -a[1, 1], a[0, 1] + a[1, 1]]
    Bp[5, :3] = -1.0
    Qp = np.zeros((6, 6))
    Qp[np.ix_([0, 1, 5], [0, 1, 5])] = p.P * p.L * np.block([[Lm, np.zeros((2, 1))], [np.zeros((1, 2)), np.ones((1, 1))]])
    Pi = telegrapher_permutation()
    Ydp = np.eye(6)[:, [0, 1, 5]]
    conds = {
        "v1": vertex_condition(6, Y=None, Yd=Pi @ Ydp, B=Pi @ Bp @ Pi.T, Qv=Pi @ Qp @ Pi.T, name="v1"),
        "v2": vertex_condition(2, Y=[1.0, 0.0]),   # I0(1) = 0
        "v3": vertex_condition(2, Y=[0.0, 1.0]),   # V1(1) = 0
        "v4": vertex_condition(2, Y=[0.0, 1.0]),   # V2(1) = 0
    }
    return HyperbolicSystem(g, edges, conds, name="telegrapher_y")


def second_sound_matrices(p: SecondSoundParams):
    al, be, ga, de, ta, ka = p.alpha, p.beta, p.gamma, p.delta, p.tau0, p.kappa
    M = np.array([[0, 1, 0, 0], [al, 0, -be, 0], [0, -de, 0, -ga], [0, 0, -ka / ta, 0]], float)
    Q = np.diag([al * de, de, be, be * ga * ta / ka])
    N = np.diag([0, 0, 0, -1 / ta])
    return M, N, Q


def _second_sound(p: SecondSoundParams) -> HyperbolicSystem:
    vals = asdict(p)
    _require(all(vals[k] > 0 for k in vals), "all second-sound parameters must be positive")
    M, N, Q = second_sound_matrices(p)
    g = build_graph(["v1", "v2"], [(1, "v1", "v2", p.length, 4)])
    edges = {1: edge_data(M, N, Q, length=p.length)}
    e = np.eye(4)
    Y1 = np.column_stack([[p.beta, 0, p.alpha, 0], e[1], e[3]])
    conds = {
        "v1": vertex_condition(4, Y=Y1, Yd=e[3], C=np.diag([0, 0, 0, -1 / p.tau0]),
                               Qv=p.tau0 * p.beta, name="v1"),
        "v2": vertex_condition(4, Y=np.column_stack([e[0], e[3]])),
    }
    return HyperbolicSystem(g, edges, conds, name="second_sound")


def wave_star_permutation(J: int) -> np.ndarray:
    """``ours = Pi @ component_major`` at the centre: component-major to edge-major."""
    Pi = np.zeros((2 * J, 2 * J))
    for i in range(J):
        Pi[2 * i, i] = 1.0
        Pi[2 * i + 1, J + i] = 1.0
    return Pi


def _wave_star(p: WaveStarParams) -> HyperbolicSystem:
    J = int(p.J)
    _require(J >= 2, "wave star needs J >= 2")
    _require(p.delta > 0, "delta must be positive")
    for nm in ("alpha", "beta", "gamma"):
        _require(len(getattr(p, nm)) == J, f"{nm} needs one value per edge")
    verts = ["v0"] + [f"v{i}" for i in range(1, J + 1)]
    edge_list = [(1, "v1", "v0", 1.0, 2)] + [(i, "v0", f"v{i}", 1.0, 2) for i in range(2, J + 1)]
    g = build_graph(verts, edge_list)
    edges = {i: edge_data([[0, 1], [1, p.alpha[i - 1]]], [[0, 0], [p.gamma[i - 1], p.beta[i - 1]]])
             for i in range(1, J + 1)}
    iota = incidence(g).iota[0]            # row of v0, columns ordered by edge id
    Yp = np.zeros((2 * J, J + 1))
    Yp[:J, :J] = np.eye(J)
    Yp[J:, J] = 1.0
    s = np.concatenate([np.zeros(J), np.ones(J)])
    Bp = np.zeros((2 * J, 2 * J))
    Bp[J:, :J] = iota
    Bp *= -1.0 / p.delta
    Pi = wave_star_permutation(J)
    conds = {"v0": vertex_condition(2 * J, Y=Pi @ Yp, Yd=Pi @ s, B=Pi @ Bp @ Pi.T,
                                    Qv=weight_from_span(Pi @ s, p.delta), name="v0")}
    for i in range(1, J + 1):
        conds[f"v{i}"] = vertex_condition(2, Y=[1.0, 0.0])
    return HyperbolicSystem(g, edges, conds, name="wave_star")


def _dirac(p: DiracParams) -> HyperbolicSystem:
    _require(p.c > 0 and p.hbar > 0, "c and hbar must be positive")
    C1 = np.asarray(p.C1, complex)
    _require(C1.shape == (2, 2), "C1 must be 2x2")
    _require(np.allclose(C1, -C1.conj().T), "C1 must be skew-Hermitian")
    g = build_graph(["v1", "v2"], [(1, "v1", "v2", 1.0, 2), (2, "v1", "v2", 1.0, 2)])
    w = p.mass * p.c ** 2 / p.hbar
    M = np.array([[0, 1j * p.c], [-1j * p.c, 0]])
    N = np.diag([-1j * w, 1j * w])
    edges = {1: edge_data(M, N), 2: edge_data(M, N)}
    conds = {}
    iot = incidence(g).iota
    for r, v in enumerate(g.vertices):
        io = iot[r]
        # layout (psi1_e1, psi2_e1, psi1_e2, psi2_e2)
        one = np.array([1.0, 0, 1.0, 0])
        Y = np.column_stack([one, [0, 1.0, 0, 0], [0, 0, 0, 1.0]])
        eta_row = np.array([0, io[0], 0, io[1]], float)
        B = -1j * np.outer(one, eta_row)
        Camb = np.zeros((4, 4), complex)
        Camb[np.ix_([0, 2], [0, 2])] = C1
        conds[v] = vertex_condition(4, Y=Y, Yd=one, B=B, C=Camb,
                                    Qv=weight_from_span(one, p.c), name=v)
    return HyperbolicSystem(g, edges, conds, name="dirac_network")


@dataclass(frozen=True)
class _Entry:
    params: type
    build: Callable
    expected: dict
    schema: dict


REGISTRY = {
    "transport": _Entry(TransportParams, _transport,
                        {"positive_iff_C_metzler": True},
                        {"vertices": "list of ids", "flow_edges": "list of [source, target]",
                         "c": "positive velocity per edge", "omega": "positive outflow weights (optional)",
                         "C": "|V| x |V| real matrix"}),
    "maxwell_two_intervals": _Entry(MaxwellParams, _maxwell,
                                    {"verdict": "unitary_group", "route": "basis", "real": True}, {}),
    "telegrapher_y": _Entry(TelegrapherParams, _telegrapher,
                            {"verdict": "unitary_group", "route": "basis", "real": True},
                            {"P": "> 0", "L": "> 0", "Lmat": "symmetric positive definite 2x2"}),
    "second_sound": _Entry(SecondSoundParams, _second_sound,
                           {"verdict": "semigroup", "route": "basis", "real": True},
                           {k: "> 0" for k in ("alpha", "beta", "gamma", "delta", "tau0", "kappa", "length")}),
    "wave_star": _Entry(WaveStarParams, _wave_star,
                        {"verdict": "group", "route": "basis", "real": True},
                        {"J": "integer >= 2", "delta": "> 0", "alpha": "real per edge",
                         "beta": "real per edge", "gamma": "real per edge"}),
    "dirac_network": _Entry(DiracParams, _dirac,
                            {"verdict": "unitary_group", "route": "adjoint", "basis_ok": False, "real": False},
                            {"c": "> 0", "mass": "real", "hbar": "> 0", "C1": "skew-Hermitian 2x2"}),
}


def list_models() -> dict:
    """Preset names mapped to their parameter schemas (stable order)."""
    return {name: dict(e.schema) for name, e in REGISTRY.items()}


def instantiate(name: str, params=None) -> ModelPreset:
    entry = REGISTRY.get(name)
    if entry is None:
        raise InvalidParameter(f"unknown model {name!r}; choose from {sorted(REGISTRY)}")
    pr = _as_params(entry.params, params)
    if isinstance(pr, WaveStarParams) and params is not None and isinstance(params, dict) and "J" in params:
        J = int(pr.J)
        for nm in ("alpha", "beta", "gamma"):
            if nm not in params:
                setattr(pr, nm, [0.0] * J)
    return ModelPreset(name, pr, entry.build(pr), dict(entry.expected))
