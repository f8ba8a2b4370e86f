"""JSON configuration documents for :class:`HyperbolicSystem`.

Layout::

    {"name": ...,
     "graph": {"vertices": [...], "coupling": "local" | "global",
               "edges": [{"id", "tail", "head", "length", "k"}, ...]},
     "coefficients": {"<edge id>": {"M": F, "N": F, "Q": F, "dQM": F}},
     "vertex_conditions": {"<vertex>": {"Y": S, "Yd": S, "B": A, "C": A, "Qv": A or scalar}},
     "tolerances": {"tol_sym": ..., ...},
     "simulation": {"method", "cells", "t_final", "dt", "n_out", "initial": {...}}}

Scalars are numbers or ``[re, im]``; matrices are row-major nested arrays.
A field ``F`` is a ``k x k`` matrix or ``{"samples": [...]}`` with values at
uniform nodes.  ``S`` holds spanning vectors as columns (``null`` is the full
space for ``Y`` and ``{0}`` for ``Yd``).  Under global coupling the only key
of ``vertex_conditions`` is ``"global"``.
"""
from __future__ import annotations

import json
import re
from numbers import Real

import numpy as np

from .netgraph import GraphError, build_graph
from .system import (GLOBAL, DimensionMismatch, EdgeData, HyperbolicSystem, MatrixField, SubspaceRankError,
                     Tolerances, vertex_condition)

SECTIONS = ("name", "graph", "coefficients", "vertex_conditions", "tolerances", "simulation")


class ConfigParseError(ValueError):
    """Malformed configuration; carries the offending section and a line number when known."""

    def __init__(self, message: str, section: str = "", line: int | None = None):
        self.section, self.line = section, line
        where = " ".join(s for s in (f"[{section}]" if section else "", f"line {line}" if line else "") if s)
        super().__init__(f"{where}: {message}" if where else message)


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(str(key)), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _scalar(o, where: str) -> complex:
    if isinstance(o, bool):
        raise ConfigParseError("boolean where a number is expected", where)
    if isinstance(o, Real):
        return complex(float(o))
    if isinstance(o, list) and len(o) == 2 and all(isinstance(a, Real) and not isinstance(a, bool) for a in o):
        return complex(float(o[0]), float(o[1]))
    raise ConfigParseError(f"expected a number or [re, im], got {o!r}", where)


def parse_array(o, ndim: int, where: str) -> np.ndarray:
    """Nested lists of depth ``ndim`` whose leaves are numbers or ``[re, im]``."""
    if ndim == 0:
        return np.asarray(_scalar(o, where))
    if not isinstance(o, list):
        raise ConfigParseError(f"expected a {ndim}-d nested array", where)
    parts = [parse_array(a, ndim - 1, where) for a in o]
    if not parts:
        return np.zeros((0,) * ndim, complex)
    if len({p.shape for p in parts}) != 1:
        raise ConfigParseError("ragged array", where)
    return np.stack(parts)


def _field(o, length: float, where: str) -> MatrixField:
    if isinstance(o, dict):
        if set(o) != {"samples"}:
            raise ConfigParseError("a sampled field has the single key 'samples'", where)
        a = parse_array(o["samples"], 3, where)
        if a.shape[0] < 2:
            raise ConfigParseError("a sampled field needs at least two nodes", where)
    else:
        a = parse_array(o, 2, where)
    return MatrixField(a, length)


def _span(o, kv: int, where: str):
    if o is None:
        return None
    if isinstance(o, list) and (not o or all(isinstance(r, list) and not r for r in o)):
        return np.zeros((kv, 0), complex)
    a = parse_array(o, 2, where)
    if a.shape[0] != kv:
        raise ConfigParseError(f"spanning vectors have length {a.shape[0]}, expected {kv}", where)
    return a


def _tolerances(d: dict | None, overrides: dict | None) -> Tolerances:
    tol = Tolerances()
    if d:
        unknown = set(d) - set(tol.__dict__)
        if unknown:
            raise ConfigParseError(f"unknown tolerances {sorted(unknown)}", "tolerances")
        tol = tol.replace(**{k: float(v) for k, v in d.items()})
    return tol.replace(**(overrides or {}))


def system_from_dict(doc: dict, tol_overrides: dict | None = None, text: str | None = None) -> HyperbolicSystem:
    """Build a system; ``tol_overrides`` take precedence over the ``tolerances`` section."""
    if not isinstance(doc, dict):
        raise ConfigParseError("top level must be an object")
    extra = set(doc) - set(SECTIONS)
    if extra:
        raise ConfigParseError(f"unknown sections {sorted(extra)}", "", _line_of(text, sorted(extra)[0]))
    for sec in ("graph", "coefficients", "vertex_conditions"):
        if sec not in doc:
            raise ConfigParseError("missing section", sec)
    tol = _tolerances(doc.get("tolerances"), tol_overrides)

    gd = doc["graph"]
    try:
        g = build_graph(gd["vertices"], gd["edges"])
    except (KeyError, TypeError) as exc:
        raise ConfigParseError(f"missing or malformed entry {exc}", "graph", _line_of(text, "graph")) from None
    except GraphError as exc:
        raise ConfigParseError(str(exc), "graph", _line_of(text, "edges")) from None
    coupling = gd.get("coupling", "local")
    if coupling not in ("local", "global"):
        raise ConfigParseError(f"unknown coupling {coupling!r}", "graph", _line_of(text, "coupling"))

    coeffs = doc["coefficients"]
    edges = {}
    for e in g.edges:
        sec = f"coefficients.{e.id}"
        c = coeffs.get(str(e.id))
        if c is None:
            raise ConfigParseError("no coefficients for this edge", sec, _line_of(text, "coefficients"))
        if "M" not in c or set(c) - {"M", "N", "Q", "dQM"}:
            raise ConfigParseError("expected keys M (required), N, Q, dQM", sec, _line_of(text, str(e.id)))
        eye, zero = np.eye(e.k), np.zeros((e.k, e.k))
        flds = {}
        for key, default in (("M", None), ("N", zero), ("Q", eye), ("dQM", None)):
            raw = c.get(key)
            flds[key] = None if raw is None and default is None else (
                MatrixField(default, e.length) if raw is None else _field(raw, e.length, f"{sec}.{key}"))
            if flds[key] is not None and flds[key].k != e.k:
                raise ConfigParseError(f"{key} is {flds[key].k}x{flds[key].k}, edge has k={e.k}", sec,
                                       _line_of(text, key))
        edges[e.id] = EdgeData(flds["M"], flds["N"], flds["Q"], flds["dQM"])
    unknown_edges = set(coeffs) - {str(e.id) for e in g.edges}
    if unknown_edges:
        raise ConfigParseError(f"coefficients for unknown edges {sorted(unknown_edges)}", "coefficients")

    sites = [GLOBAL] if coupling == "global" else list(g.vertices)
    vcs = doc["vertex_conditions"]
    names = {str(v): v for v in sites}
    unknown = set(vcs) - set(names)
    if unknown:
        raise ConfigParseError(f"conditions for unknown vertices {sorted(unknown)}", "vertex_conditions",
                               _line_of(text, sorted(unknown)[0]))
    conds = {}
    for v in sites:
        sec = f"vertex_conditions.{v}"
        kv = 2 * g.k if coupling == "global" else g.k_v(v)
        d = vcs.get(str(v), {})
        if set(d) - {"Y", "Yd", "B", "C", "Qv"}:
            raise ConfigParseError("expected keys Y, Yd, B, C, Qv", sec, _line_of(text, str(v)))
        mats = {}
        for key in ("B", "C"):
            mats[key] = None if d.get(key) is None else parse_array(d[key], 2, f"{sec}.{key}")
        q = d.get("Qv")
        if q is None or isinstance(q, Real) or (isinstance(q, list) and len(q) == 2 and
                                               all(isinstance(a, Real) for a in q)):
            mats["Qv"] = None if q is None else _scalar(q, f"{sec}.Qv")
        else:
            mats["Qv"] = parse_array(q, 2, f"{sec}.Qv")
        try:
            conds[v] = vertex_condition(kv, _span(d.get("Y"), kv, f"{sec}.Y"), _span(d.get("Yd"), kv, f"{sec}.Yd"),
                                        mats["B"], mats["C"], mats["Qv"], tol, name=f"vertex {v}")
        except (SubspaceRankError, DimensionMismatch, ValueError) as exc:
            if isinstance(exc, ConfigParseError):
                raise
            raise ConfigParseError(str(exc), sec, _line_of(text, str(v))) from None
    return HyperbolicSystem(g, edges, conds, tol, str(doc.get("name", "")), coupling)


def load_config(path: str, tol_overrides: dict | None = None) -> tuple[HyperbolicSystem, dict]:
    """Read a config file; returns the system and the raw document."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(exc.msg, "json", exc.lineno) from None
    return system_from_dict(doc, tol_overrides, text), doc


# serialization

def encode_scalar(z) -> float | list:
    z = complex(z)
    return float(z.real) if z.imag == 0 else [float(z.real), float(z.imag)]


def encode_array(a) -> list:
    a = np.asarray(a)
    if a.ndim == 0:
        return encode_scalar(a)
    return [encode_array(r) for r in a]


def _encode_field(f: MatrixField):
    return encode_array(f.samples[0]) if f.constant else {"samples": encode_array(f.samples)}


def system_to_dict(sys: HyperbolicSystem) -> dict:
    """Inverse of :func:`system_from_dict` (vertex data in compressed ambient form)."""
    g = sys.graph
    coeffs = {}
    for e in g.edges:
        d = sys.edges[e.id]
        c = {"M": _encode_field(d.M), "N": _encode_field(d.N), "Q": _encode_field(d.Q)}
        if d.dQM is not None:
            c["dQM"] = _encode_field(d.dQM)
        coeffs[str(e.id)] = c
    vcs = {}
    for v in sys.sites:
        c = sys.conditions[v]
        vcs[str(v)] = {"Y": encode_array(c.Y), "Yd": encode_array(c.Yd), "B": encode_array(c.B),
                       "C": encode_array(c.C), "Qv": encode_array(c.Qv)}
    return {
        "name": sys.name,
        "graph": {"vertices": list(g.vertices), "coupling": sys.coupling,
                  "edges": [{"id": e.id, "tail": e.tail, "head": e.head, "length": e.length, "k": e.k}
                            for e in g.edges]},
        "coefficients": coeffs,
        "vertex_conditions": vcs,
        "tolerances": dict(sys.tol.__dict__),
    }


REPORT_DIGITS = 12


def dumps(obj, digits: int | None = REPORT_DIGITS) -> str:
    """Deterministic JSON text: sorted keys, non-finite floats as strings and
    floats rounded to ``digits`` significant digits (``None`` keeps all)."""
    return json.dumps(_clean(obj, digits), sort_keys=True, indent=2) + "\n"


def _clean(o, digits=None):
    if isinstance(o, dict):
        return {str(k): _clean(v, digits) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v, digits) for v in o]
    if isinstance(o, np.ndarray):
        return _clean(o.tolist(), digits)
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (float, np.floating)):
        x = float(o)
        if not np.isfinite(x):
            return "inf" if x > 0 else "-inf" if x < 0 else "nan"
        return float(f"{x:.{digits}g}") + 0.0 if digits else x
    if isinstance(o, complex):
        return _clean(encode_scalar(o), digits)
    return o


__all__ = ["ConfigParseError", "parse_array", "system_from_dict", "load_config", "system_to_dict",
           "encode_array", "dumps", "SECTIONS"]
