"""Sampled states ``(u, x)`` on a metric graph, the weighted inner product and
random smooth states inside the operator domains."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .netgraph import INITIAL, TERMINAL
from .system import HyperbolicSystem, block_slices


class DomainViolation(ValueError):
    """A state violates ``gamma_v(u) in Y_v`` or ``x_v = P_v^(d) gamma_v(u)``."""


@dataclass
class StateVector:
    """Per-edge node samples ``u[e]`` of shape ``(n_e+1, k_e)`` on ``nodes[e]``
    and ambient vertex vectors ``x[v]``.  ``du`` optionally holds ``u'``."""

    nodes: dict
    u: dict
    x: dict
    du: Optional[dict] = None

    def copy(self) -> "StateVector":
        return StateVector(dict(self.nodes), {e: a.copy() for e, a in self.u.items()},
                           {v: a.copy() for v, a in self.x.items()},
                           None if self.du is None else {e: a.copy() for e, a in self.du.items()})

    def combine(self, other: "StateVector", a=1.0, b=1.0) -> "StateVector":
        """``a * self + b * other`` on the same grid (derivatives dropped)."""
        return StateVector(dict(self.nodes), {e: a * self.u[e] + b * other.u[e] for e in self.u},
                           {v: a * self.x[v] + b * other.x[v] for v in self.x})


def uniform_nodes(sys: HyperbolicSystem, n) -> dict:
    """``n`` cells per edge (int or dict edge id -> int)."""
    out = {}
    for e in sys.graph.edges:
        ne = n[e.id] if isinstance(n, dict) else int(n)
        out[e.id] = np.linspace(0.0, e.length, ne + 1)
    return out


def zero_state(sys: HyperbolicSystem, nodes: dict) -> StateVector:
    u = {e.id: np.zeros((nodes[e.id].size, e.k), complex) for e in sys.graph.edges}
    x = {v: np.zeros(sys.site_dim(v), complex) for v in sys.sites}
    return StateVector(dict(nodes), u, x)


def trace(sys: HyperbolicSystem, st: StateVector, v, du: bool = False) -> np.ndarray:
    """Stacked endpoint values ``gamma_v`` (or of ``u'`` with ``du=True``)."""
    src = st.du if du else st.u
    g = np.zeros(sys.site_dim(v), complex)
    for eid, sl, end, _x, _s in block_slices(sys, v):
        g[sl] = src[eid][0] if end == INITIAL else src[eid][-1]
    return g


def trapezoid_weights(xs: np.ndarray) -> np.ndarray:
    w = np.zeros(xs.size)
    dx = np.diff(xs)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def inner_d(sys: HyperbolicSystem, a: StateVector, b: StateVector) -> complex:
    """``(a, b)_d``: trapezoid of ``Q_e a . conj(b)`` plus ``Q_v x_a . conj(x_b)``."""
    s = 0.0j
    for e in sys.graph.edges:
        xs = a.nodes[e.id]
        Q = sys.edges[e.id].Q(xs)
        s += np.sum(trapezoid_weights(xs) * np.einsum("nij,nj,ni->n", Q, a.u[e.id], b.u[e.id].conj()))
    for v in sys.sites:
        s += b.x[v].conj() @ sys.conditions[v].Qv @ a.x[v]
    return complex(s)


def norm_d(sys: HyperbolicSystem, a: StateVector) -> float:
    return float(np.sqrt(max(inner_d(sys, a, a).real, 0.0)))


def domain_defect(sys: HyperbolicSystem, st: StateVector) -> float:
    """Largest ``|(I - P_Y) gamma_v|`` or ``|x_v - P_d gamma_v|`` over all sites."""
    worst = 0.0
    for v in sys.sites:
        c = sys.conditions[v]
        g = trace(sys, st, v)
        worst = max(worst, np.linalg.norm(g - c.P_Y @ g), np.linalg.norm(st.x[v] - c.P_d @ g))
    return float(worst)


def check_domain(sys: HyperbolicSystem, st: StateVector, tol: Optional[float] = None) -> None:
    tol = sys.tol.tol_sub if tol is None else tol
    for v in sys.sites:
        c = sys.conditions[v]
        g = trace(sys, st, v)
        scale = max(1.0, np.linalg.norm(g))
        r = np.linalg.norm(g - c.P_Y @ g)
        if r > tol * scale:
            raise DomainViolation(f"vertex {v}: trace leaves Y_v by {r:.3e}")
        r = np.linalg.norm(st.x[v] - c.P_d @ g)
        if r > tol * scale:
            raise DomainViolation(f"vertex {v}: x_v differs from P_d gamma_v by {r:.3e}")


# smooth random states

@dataclass
class SmoothState:
    """Cubic splines per edge plus vertex vectors; sampled on any grid."""

    splines: dict
    x: dict = field(default_factory=dict)

    def sample(self, nodes: dict) -> StateVector:
        u = {e: s(nodes[e]) for e, s in self.splines.items()}
        du = {e: s(nodes[e], 1) for e, s in self.splines.items()}
        return StateVector(dict(nodes), u, {v: a.copy() for v, a in self.x.items()}, du)


def _random(rng, shape, real: bool):
    a = rng.standard_normal(shape)
    return a if real else a + 1j * rng.standard_normal(shape)


def _splines_from_traces(sys, rng, traces: dict, knots: int, real: bool, interior=None,
                         interp=CubicSpline) -> dict:
    """Splines whose endpoint values match the given site traces.

    ``interior(shape)`` draws the interior knot values (Gaussian by default).
    """
    ends = {}
    for v, g in traces.items():
        for eid, sl, end, _x, _s in block_slices(sys, v):
            ends[(eid, end)] = g[sl]
    out = {}
    for e in sys.graph.edges:
        xs = np.linspace(0.0, e.length, knots)
        draw = interior((knots, e.k)) if interior is not None else _random(rng, (knots, e.k), real)
        vals = np.asarray(draw).astype(complex)
        vals[0] = ends[(e.id, INITIAL)]
        vals[-1] = ends[(e.id, TERMINAL)]
        if interp is CubicSpline:
            out[e.id] = CubicSpline(xs, vals, axis=0)
        elif interp is _Squared:
            out[e.id] = _Squared(xs, vals)
        else:
            out[e.id] = _ComplexInterp(interp, xs, vals)
    return out


class _Squared:
    """``s(x)**2`` for a real cubic spline ``s``: smooth and nonnegative."""

    def __init__(self, xs, vals):
        self.s = CubicSpline(xs, np.sqrt(np.maximum(vals.real, 0.0)), axis=0)

    def __call__(self, x, nu=0):
        s = self.s(x)
        return (s * s if nu == 0 else 2 * s * self.s(x, 1)).astype(complex)


class _ComplexInterp:
    """Apply a real interpolant to real and imaginary parts separately."""

    def __init__(self, interp, xs, vals):
        self.re = interp(xs, vals.real, axis=0)
        self.im = interp(xs, vals.imag, axis=0)

    def __call__(self, x, nu=0):
        return self.re(x, nu) + 1j * self.im(x, nu)


def random_domain_state(sys: HyperbolicSystem, rng, knots: int = 6, real: bool = False) -> SmoothState:
    """Random smooth ``(u, x)`` with ``gamma_v(u) in Y_v`` and ``x_v = P_d gamma_v(u)``.

    Under global coupling the stacked trace holds both endpoints of every
    edge, so one draw fixes all endpoint values consistently.
    """
    traces, xs = {}, {}
    for v in sys.sites:
        c = sys.conditions[v]
        eta = _random(rng, c.Y.shape[1], real)
        g = c.Y @ eta
        if real:
            g = g.real.astype(complex)
            g = c.P_Y @ g
        traces[v] = g
        xs[v] = c.P_d @ g
    return SmoothState(_splines_from_traces(sys, rng, traces, knots, real), xs)


def random_cone_state(sys: HyperbolicSystem, rng, cone: str, knots: int = 6, scale: float = 1.0) -> SmoothState:
    """Random smooth state whose boundary data are pushed into a cone.

    ``cone`` is ``"reals"``, ``"nonneg"`` or ``"unit_ball"``.  Boundary
    traces are drawn in ``Y_v`` and then mapped by the componentwise cone
    projector; they stay in ``Y_v`` exactly when the subspace is invariant
    under that projector.  Interior knots are drawn inside the cone and
    joined by shape-preserving (PCHIP) interpolation.
    """
    from .qualinv import componentwise_projection
    traces, xs = {}, {}
    for v in sys.sites:
        c = sys.conditions[v]
        real = cone != "unit_ball"
        g = c.Y @ _random(rng, c.Y.shape[1], real)
        if real:
            g = (c.P_Y @ g.real.astype(complex)).real.astype(complex)
        g = componentwise_projection(g / max(1.0, np.abs(g).max()) * scale, cone)
        traces[v] = g
        xs[v] = componentwise_projection(c.P_d @ g, cone)

    def interior(shape):
        if cone == "nonneg":
            return scale * rng.uniform(0.0, 1.0, shape)
        if cone == "reals":
            return scale * rng.standard_normal(shape)
        r = scale * rng.uniform(0.0, 1.0, shape)
        return r * np.exp(2j * np.pi * rng.uniform(size=shape)) / np.sqrt(2)

    interp = {"nonneg": _Squared, "reals": CubicSpline}.get(cone, PchipInterpolator)
    return SmoothState(_splines_from_traces(sys, rng, traces, knots, cone != "unit_ball", interior, interp), xs)


def adjoint_domain_basis(sys: HyperbolicSystem, v) -> np.ndarray:
    """Ambient basis ``(xi, y)`` of the adjoint boundary space at ``v``."""
    from .wellposed import adjoint_space
    return adjoint_space(sys, v).ambient


def random_adjoint_state(sys: HyperbolicSystem, rng, knots: int = 6) -> SmoothState:
    """Random smooth ``(v, y)`` whose boundary pairs lie in the adjoint boundary space."""
    traces, ys = {}, {}
    for v in sys.sites:
        kv = sys.site_dim(v)
        S = adjoint_domain_basis(sys, v)
        z = S @ _random(rng, S.shape[1], False)
        traces[v], ys[v] = z[:kv], z[kv:]
    return SmoothState(_splines_from_traces(sys, rng, traces, knots, False), ys)


def same_space(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    """Do the column spans of ``a`` and ``b`` coincide?"""
    if a.shape[1] != b.shape[1]:
        return False
    if a.shape[1] == 0:
        return True
    Pa = a @ np.linalg.pinv(a)
    return bool(np.linalg.norm(b - Pa @ b) <= tol * max(1.0, np.linalg.norm(b)))


__all__ = ["DomainViolation", "StateVector", "SmoothState", "uniform_nodes", "zero_state", "trace",
           "trapezoid_weights", "inner_d", "norm_d", "domain_defect", "check_domain",
           "random_domain_state", "random_adjoint_state", "random_cone_state", "same_space"]
