"""Invariance of real, nonnegative and unit-ball states.

Static checks test sufficient algebraic conditions on the system data;
cone invariance of the vertex subspaces is nonlinear and is tested on
random samples.  :func:`dynamic_probe` evolves random states from the cone
and looks for excursions beyond the discretization error.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .state import StateVector, random_cone_state
from .system import HyperbolicSystem, range_basis

REALS, NONNEG, UNIT_BALL = "reals", "nonneg", "unit_ball"
PROPERTY_CONE = {"real": REALS, "positive": NONNEG, "linf": UNIT_BALL}
PROBE_TOL = 1e-6
ERROR_FACTOR = 2.0   # coarse-grid error over coarse/fine difference, first-order bound
N_SAMPLES = 1000


class QualPreconditionError(ValueError):
    """The weights do not allow a componentwise minimizing projector."""


class WeightNotReal(QualPreconditionError):
    pass


class WeightNotDiagonal(QualPreconditionError):
    pass


class WeightNotIdentity(QualPreconditionError):
    pass


@dataclass
class ConditionResult:
    name: str
    holds: bool
    detail: str = ""
    sampled: bool = False

    def to_dict(self) -> dict:
        return {"name": self.name, "holds": bool(self.holds), "detail": self.detail, "sampled": self.sampled}


@dataclass
class QualReport:
    property: str
    conditions: list
    dynamic_verdict: Optional[dict] = None
    notes: list = field(default_factory=list)

    @property
    def static_verdict(self) -> str:
        return "certified" if all(c.holds for c in self.conditions) else "not_certified"

    @property
    def failed_conditions(self) -> list:
        return [c.name for c in self.conditions if not c.holds]

    def to_dict(self) -> dict:
        sampled = any(c.sampled for c in self.conditions)
        verdict = self.static_verdict + (" (sampled)" if sampled and self.static_verdict == "certified" else "")
        return {"property": self.property, "static_verdict": verdict,
                "failed_conditions": self.failed_conditions,
                "conditions": [c.to_dict() for c in self.conditions],
                "dynamic_verdict": self.dynamic_verdict, "notes": list(self.notes)}


# componentwise projectors

def componentwise_projection(z: np.ndarray, cone: str) -> np.ndarray:
    z = np.asarray(z, complex)
    if cone == REALS:
        return z.real.astype(complex)
    if cone == NONNEG:
        return np.maximum(z.real, 0.0).astype(complex)
    if cone == UNIT_BALL:
        a = np.abs(z)
        return np.where(a > 1.0, z / np.where(a > 0, a, 1.0), z)
    raise ValueError(f"unknown cone {cone!r}")


def _scale(a) -> float:
    return max(1.0, float(np.abs(a).max())) if np.size(a) else 1.0


def _is_real(a, tol: float) -> bool:
    return np.size(a) == 0 or float(np.abs(np.imag(a)).max()) <= tol * _scale(a)


def _is_diagonal(a, tol: float) -> bool:
    a = np.asarray(a)
    off = a - np.einsum("...ii->...i", a)[..., None] * np.eye(a.shape[-1])
    return np.size(a) == 0 or float(np.abs(off).max()) <= tol * _scale(a)


def _edge_samples(sys: HyperbolicSystem, attr: str):
    for e in sys.graph.edges:
        d = sys.edges[e.id]
        f = getattr(d, attr)
        yield e.id, f(d.sample_nodes())


def _check_weights(sys: HyperbolicSystem, cone: str) -> None:
    tol = sys.tol.tol_sym
    for eid, Q in _edge_samples(sys, "Q"):
        if not _is_real(Q, tol):
            raise WeightNotReal(f"edge {eid}: Q_e is not real")
        if cone in (NONNEG, UNIT_BALL) and not _is_diagonal(Q, tol):
            raise WeightNotDiagonal(f"edge {eid}: Q_e is not diagonal")
        if cone == UNIT_BALL and np.abs(Q - np.eye(Q.shape[-1])).max() > tol:
            raise WeightNotIdentity(f"edge {eid}: Q_e is not the identity")
    for v in sys.sites:
        c = sys.conditions[v]
        if not _is_real(c.Qv, tol):
            raise WeightNotReal(f"vertex {v}: Q_v is not real")
        if cone in (NONNEG, UNIT_BALL) and not _is_diagonal(c.Qv, tol):
            raise WeightNotDiagonal(f"vertex {v}: Q_v is not diagonal")
        if cone == UNIT_BALL and np.abs(c.Qv - c.P_d).max() > tol:
            raise WeightNotIdentity(f"vertex {v}: Q_v is not the identity on Y_v^(d)")


def minimizing_projector(sys: HyperbolicSystem, st: StateVector, cone: str) -> StateVector:
    """Nearest state in the cone for the weighted inner product.

    Under the required weight structure (real; diagonal for ``nonneg``;
    identity for ``unit_ball``) the weighted projector acts componentwise.
    """
    _check_weights(sys, cone)
    return StateVector(dict(st.nodes), {e: componentwise_projection(a, cone) for e, a in st.u.items()},
                       {v: componentwise_projection(a, cone) for v, a in st.x.items()})


# subspace tests

def real_span(S: np.ndarray, tol_rank: float) -> bool:
    """Is ``span(S)`` closed under conjugation (spanned by real vectors)?"""
    if S.shape[1] == 0:
        return True
    s = np.linalg.svd(np.hstack([S, S.conj()]), compute_uv=False)
    return int(np.sum(s > tol_rank * s[0])) == S.shape[1]


def real_basis(S: np.ndarray, tol_rank: float) -> np.ndarray:
    """Orthonormal real basis of the real parts of ``span(S)``."""
    if S.shape[1] == 0:
        return np.zeros((S.shape[0], 0))
    return range_basis(np.hstack([S.real, S.imag]).astype(float), tol_rank).real


def _dist(z: np.ndarray, S: np.ndarray) -> float:
    if S.shape[1] == 0:
        return float(np.linalg.norm(z))
    return float(np.linalg.norm(z - S @ (S.conj().T @ z)))


def _samples(rng, R: np.ndarray, n: int, complex_: bool) -> list:
    """Basis vectors, their negatives and random combinations (scaled past the unit ball)."""
    if R.shape[1] == 0:
        return []
    out = [R[:, i] for i in range(R.shape[1])] + [-R[:, i] for i in range(R.shape[1])]
    for _ in range(n):
        c = rng.standard_normal(R.shape[1])
        if complex_:
            c = c + 1j * rng.standard_normal(R.shape[1])
        z = R @ c
        out.append(3.0 * z / max(np.abs(z).max(), 1e-300))
    return out


def cone_invariant(S: np.ndarray, cone: str, rng, n: int, tol: float, complex_: bool) -> tuple[bool, float]:
    """Sampled test that the componentwise projector maps ``span(S)`` into itself."""
    worst = 0.0
    base = S if complex_ else real_basis(S, 1e-9)
    for z in _samples(rng, base, n, complex_):
        d = _dist(componentwise_projection(z, cone), S) / max(1.0, np.linalg.norm(z))
        worst = max(worst, d)
    return worst <= tol, worst


def _first_failure(items) -> tuple[bool, str]:
    bad = [loc for loc, ok in items if not ok]
    return (not bad), ("" if not bad else "fails at " + ", ".join(map(str, bad[:4])))


# static checks

def _data_real(sys: HyperbolicSystem, names) -> list:
    tol = sys.tol.tol_sym
    out = []
    for nm in names:
        if nm in ("M", "N", "Q"):
            ok, det = _first_failure((f"edge {eid}", _is_real(a, tol)) for eid, a in _edge_samples(sys, nm))
            out.append(ConditionResult(f"{nm}_e real", ok, det))
        else:
            ok, det = _first_failure((f"vertex {v}", _is_real(getattr(sys.conditions[v], nm), tol))
                                     for v in sys.sites)
            label = "Q_v" if nm == "Qv" else f"{nm}_v"
            out.append(ConditionResult(f"{label} real", ok, det))
    return out


def check_real(sys: HyperbolicSystem) -> QualReport:
    tr = sys.tol.tol_rank
    conds = []
    ok, det = _first_failure((f"vertex {v}", real_span(sys.conditions[v].Y, tr)) for v in sys.sites)
    conds.append(ConditionResult("Y_v spanned by real vectors", ok, det))
    ok, det = _first_failure((f"vertex {v}", real_span(sys.conditions[v].Yd, tr)) for v in sys.sites)
    conds.append(ConditionResult("Y_v^(d) spanned by real vectors", ok, det))
    conds += _data_real(sys, ("Q", "Qv", "B", "C", "M", "N"))
    return QualReport("real", conds)


def _metzler(a: np.ndarray, tol: float) -> bool:
    a = np.asarray(a).real
    if a.size == 0:
        return True
    off = a - np.diag(np.diag(a))
    return float(off.min()) >= -tol * _scale(a)


def check_positive(sys: HyperbolicSystem, seed: int = 0, n_samples: int = N_SAMPLES) -> QualReport:
    rng = np.random.default_rng(seed)
    tol = sys.tol
    conds = _data_real(sys, ("N", "Q", "Qv", "B", "C", "M"))

    diag = [(f"edge {eid}: {nm}_e", _is_diagonal(a, tol.tol_sym))
            for nm in ("M", "Q") for eid, a in _edge_samples(sys, nm)]
    diag += [(f"vertex {v}: Q_v", _is_diagonal(sys.conditions[v].Qv, tol.tol_sym)) for v in sys.sites]
    ok, det = _first_failure(diag)
    conds.append(ConditionResult("M_e, Q_e, Q_v diagonal", ok, det))

    comm = []
    for v in sys.sites:
        Pd = sys.conditions[v].P_d.real
        kv = Pd.shape[0]
        worst = 0.0
        for _ in range(n_samples):
            z = rng.standard_normal(kv)
            worst = max(worst, np.linalg.norm(Pd @ np.maximum(z, 0) - np.maximum(Pd @ z, 0)) / np.linalg.norm(z))
        comm.append((f"vertex {v} ({worst:.2e})", worst <= tol.tol_sub))
    ok, det = _first_failure(comm)
    conds.append(ConditionResult("positive part commutes with P_v^(d)", ok, det, sampled=True))

    inv = []
    for v in sys.sites:
        c = sys.conditions[v]
        for lbl, S in (("Y_v", c.Y), ("Y_v^(d)", c.Yd)):
            good, w = cone_invariant(S, NONNEG, rng, n_samples, tol.tol_sub, False)
            inv.append((f"vertex {v}: {lbl} ({w:.2e})", good))
    ok, det = _first_failure(inv)
    conds.append(ConditionResult("positive part leaves Y_v and Y_v^(d) invariant", ok, det, sampled=True))

    n_ok, n_det = _first_failure((f"edge {eid}", all(_metzler(m, tol.tol_sym) for m in a))
                                 for eid, a in _edge_samples(sys, "N"))
    conds.append(ConditionResult("N_e off-diagonal entries nonnegative", n_ok, n_det))

    vx = []
    for v in sys.sites:
        c = sys.conditions[v]
        coupled = _metzler(c.Qv @ (c.B + c.C @ c.P_d), tol.tol_sym)
        decoupled = np.abs(c.B).max(initial=0.0) <= tol.tol_sym and _metzler(c.C, tol.tol_sym)
        vx.append((f"vertex {v}", coupled or decoupled))
    ok, det = _first_failure(vx)
    conds.append(ConditionResult("Q_v (B_v + C_v P_v^(d)) off-diagonal nonnegative, or B_v = 0 and C_v Metzler",
                                 ok, det))
    return QualReport("positive", conds)


def _row_dominant(a: np.ndarray, tol: float) -> bool:
    """``Re a_ii >= sum_{j != i} |a_ij|`` for every row."""
    a = np.asarray(a)
    if a.size == 0:
        return True
    off = np.abs(a).sum(axis=1) - np.abs(np.diag(a))
    return bool(np.all(np.diag(a).real - off >= -tol * _scale(a)))


def check_linf(sys: HyperbolicSystem, seed: int = 0, n_samples: int = N_SAMPLES) -> QualReport:
    rng = np.random.default_rng(seed)
    tol = sys.tol
    conds = []
    ident = [(f"edge {eid}", float(np.abs(Q - np.eye(Q.shape[-1])).max()) <= tol.tol_sym)
             for eid, Q in _edge_samples(sys, "Q")]
    ident += [(f"vertex {v}", float(np.abs(sys.conditions[v].Qv - sys.conditions[v].P_d).max()) <= tol.tol_sym)
              for v in sys.sites]
    ok, det = _first_failure(ident)
    conds.append(ConditionResult("Q_e and Q_v identities", ok, det))

    ok, det = _first_failure((f"edge {eid}", _is_diagonal(M, tol.tol_sym)) for eid, M in _edge_samples(sys, "M"))
    conds.append(ConditionResult("M_e diagonal", ok, det))

    ok, det = _first_failure((f"edge {eid}", all(_row_dominant(-n, tol.tol_sym) for n in N))
                             for eid, N in _edge_samples(sys, "N"))
    conds.append(ConditionResult("-N_e row dominant (e^{tN_e} contractive in the sup norm)", ok, det))

    inv = []
    for v in sys.sites:
        c = sys.conditions[v]
        for lbl, S in (("Y_v", c.Y), ("Y_v^(d)", c.Yd)):
            good, w = cone_invariant(S, UNIT_BALL, rng, n_samples, tol.tol_sub, True)
            inv.append((f"vertex {v}: {lbl} ({w:.2e})", good))
    ok, det = _first_failure(inv)
    conds.append(ConditionResult("radial clamp leaves Y_v and Y_v^(d) invariant", ok, det, sampled=True))

    vx = []
    for v in sys.sites:
        c = sys.conditions[v]
        K = c.B + c.C @ c.P_d
        contr = float(np.abs(K).sum(axis=1).max(initial=0.0)) <= 1.0 + tol.tol_sym
        decoupled = np.abs(c.B).max(initial=0.0) <= tol.tol_sym and _row_dominant(-c.C, tol.tol_sym)
        vx.append((f"vertex {v}", contr or decoupled))
    ok, det = _first_failure(vx)
    conds.append(ConditionResult("|B_v + C_v P_v^(d)|_inf <= 1, or B_v = 0 and -C_v row dominant", ok, det))
    return QualReport("linf", conds)


STATIC_CHECKS = {"real": check_real, "positive": check_positive, "linf": check_linf}


def static_check(sys: HyperbolicSystem, prop: str, seed: int = 0) -> QualReport:
    if prop not in STATIC_CHECKS:
        raise ValueError(f"unknown property {prop!r}")
    return STATIC_CHECKS[prop](sys) if prop == "real" else STATIC_CHECKS[prop](sys, seed=seed)


# dynamic probes

def excursion(st: StateVector, cone: str) -> float:
    """How far a state lies outside the cone (0 inside)."""
    vals = [a.ravel() for a in st.u.values()] + [a.ravel() for a in st.x.values()]
    z = np.concatenate(vals) if vals else np.zeros(0)
    if z.size == 0:
        return 0.0
    if cone == REALS:
        return float(np.abs(z.imag).max())
    if cone == NONNEG:
        return float(max(0.0, -z.real.min(), np.abs(z.imag).max()))
    return float(max(0.0, np.abs(z).max() - 1.0))


def _coarse_difference(fine: StateVector, coarse: StateVector) -> float:
    """Max difference at the shared nodes of a grid and its refinement."""
    d = 0.0
    for e, a in coarse.u.items():
        d = max(d, float(np.abs(fine.u[e][::2] - a).max(initial=0.0)))
    for v, a in coarse.x.items():
        d = max(d, float(np.abs(fine.x[v] - a).max(initial=0.0)))
    return d


def dynamic_probe(sys: HyperbolicSystem, prop: str, trials: int = 20, seed: int = 0, n_cells: int = 32,
                  t_final: float = 1.0, n_out: int = 20, tol: float = PROBE_TOL) -> dict:
    """Evolve random cone states on ``n`` and ``2n`` cells and report the worst excursion.

    The excursion on the coarse grid is reduced by an estimate of its
    discretization error, ``2 |u_n - u_2n|`` (valid for any scheme converging
    at least at first order), before it is compared to ``tol``.  Random
    initial data satisfy no compatibility beyond the domain conditions, so kinks
    enter from the vertices and the central scheme need not reach second order.
    """
    from .evolve import assemble_discrete_generator, MAX_EXPM_DIM

    cone = PROPERTY_CONE[prop]
    rng = np.random.default_rng(seed)
    gens = [assemble_discrete_generator(sys, n_cells), assemble_discrete_generator(sys, 2 * n_cells)]
    times = np.linspace(0.0, t_final, n_out + 1)
    dt = times[1] - times[0]
    props = []
    for g in gens:
        if g.dim > MAX_EXPM_DIM:
            raise ValueError(f"probe grid too large ({g.dim})")
        props.append(sla.expm(g.A.toarray() * dt))
    worst = {"raw": 0.0, "err": 0.0, "corrected": 0.0, "t": 0.0}
    for _ in range(trials):
        smooth = random_cone_state(sys, rng, cone)
        ws = [g.restrict(smooth.sample(g.nodes)) for g in gens]
        for i, t in enumerate(times):
            if i:
                ws = [Pm @ w for Pm, w in zip(props, ws)]
            coarse, fine = gens[0].lift(ws[0]), gens[1].lift(ws[1])
            raw = excursion(coarse, cone)
            err = ERROR_FACTOR * _coarse_difference(fine, coarse) if raw > tol else 0.0
            corr = max(0.0, raw - err)
            if (corr, raw) > (worst["corrected"], worst["raw"]):
                worst.update(raw=raw, err=err, corrected=corr, t=float(t))
    verdict = "violated" if worst["corrected"] > tol else "consistent"
    out = {"verdict": verdict, "cone": cone, "trials": trials, "seed": seed, "n_cells": n_cells,
           "t_final": t_final, "worst_raw_excursion": worst["raw"], "error_estimate": worst["err"],
           "worst_corrected_excursion": worst["corrected"], "t": worst["t"]}
    if cone == NONNEG:
        out["min_value"] = -worst["corrected"] or 0.0
    return out


def qual_report(sys: HyperbolicSystem, prop: str, trials: int = 0, seed: int = 0, **probe_kw) -> QualReport:
    """Static verdict plus, when ``trials > 0``, a dynamic probe."""
    rep = static_check(sys, prop, seed)
    if trials > 0:
        rep.dynamic_verdict = dynamic_probe(sys, prop, trials, seed, **probe_kw)
    if prop == "positive":
        rep.notes.append("commutation of the positive part with P_v^(d) and cone invariance are sampled")
    return rep


__all__ = ["REALS", "NONNEG", "UNIT_BALL", "QualPreconditionError", "WeightNotReal", "WeightNotDiagonal",
           "WeightNotIdentity", "ConditionResult", "QualReport", "componentwise_projection",
           "minimizing_projector", "real_span", "cone_invariant", "check_real", "check_positive",
           "check_linf", "static_check", "excursion", "dynamic_probe", "qual_report"]
