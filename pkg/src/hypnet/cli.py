"""Command line front end: ``hypnet <subcommand> ...``.

Exit codes: 0 success, 1 a certificate failed and ``--strict`` was given,
2 malformed input (config, parameters, violated standing assumptions).
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings

import numpy as np

from .config import ConfigParseError, dumps, encode_array, load_config, parse_array, system_to_dict
from .evolve import simulate
from .models import InvalidParameter, instantiate, list_models
from .netgraph import GraphError
from .qualinv import PROPERTY_CONE, QualPreconditionError, qual_report
from .resolvent import SingularBoundarySystem, a0_residual, solve_A0
from .state import DomainViolation, random_domain_state, uniform_nodes
from .system import validate_assumptions
from .wellposed import NONPOSITIVE, adjoint_cone_check, adjoint_space, boundary_form, classify, cone_check

EXIT_OK, EXIT_CERT, EXIT_INPUT = 0, 1, 2
TOL_FLAGS = ("tol_sym", "tol_sub", "tol_det", "tol_rank", "tol_eig")
SIM_DEFAULTS = {"method": "rk4", "cells": 64, "t_final": 1.0, "dt": None, "n_out": 50}


class InputError(Exception):
    pass


def _emit(text: str, out_dir: str | None, name: str) -> None:
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _load(args):
    tol = {k: getattr(args, k) for k in TOL_FLAGS if getattr(args, k, None) is not None}
    system, doc = load_config(args.config, tol)
    report = validate_assumptions(system)
    if not report.ok:
        bad = "; ".join(f"{c.name} fails at {c.location} (witness {c.witness:.3e})" for c in report.failures())
        raise InputError(f"{args.config}: standing assumptions violated: {bad}")
    return system, doc, report


# subcommands

def cmd_check(args) -> int:
    tol = {k: getattr(args, k) for k in TOL_FLAGS if getattr(args, k, None) is not None}
    system, _ = load_config(args.config, tol)
    report = validate_assumptions(system)
    _emit(dumps(report.to_dict()), args.out, "check.json")
    if not report.ok:
        for c in report.failures():
            print(f"error: {c.name} fails at {c.location} (witness {c.witness:.3e})", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def _shift_checks(system, lam, mu) -> dict:
    out = {}
    for v in system.sites:
        c = system.conditions[v]
        entry = {}
        if lam is not None:
            F = boundary_form(system, v) - lam * c.P_d @ c.Qv @ c.P_d
            entry["lambda"] = cone_check(F, c.Y, NONPOSITIVE, system.tol.tol_eig).to_dict()
        if mu is not None:
            entry["mu"] = adjoint_cone_check(system, v, mu).to_dict()
            entry["adjoint_space_dim"] = int(adjoint_space(system, v).coords.shape[1])
        out[str(v)] = entry
    return out


def cmd_classify(args) -> int:
    system, _, _ = _load(args)
    rep = classify(system).to_dict()
    if args.lam is not None or args.mu is not None:
        rep["shift_checks"] = _shift_checks(system, args.lam, args.mu)
    _emit(dumps(rep), args.out, "classify.json")
    return EXIT_CERT if args.strict and rep["verdict"] == "inconclusive" else EXIT_OK


def _read_edge_csv(path: str, k: int) -> tuple[np.ndarray, np.ndarray]:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if data.shape[1] != 1 + 2 * k:
        raise InputError(f"{path}: expected {1 + 2 * k} columns (x, re/im per component), got {data.shape[1]}")
    return data[:, 0], data[:, 1::2] + 1j * data[:, 2::2]


def _edge_header(k: int, lead=("x",)) -> list:
    return list(lead) + [f"{p}_u{i + 1}" for i in range(k) for p in ("re", "im")]


def _write_csv(path: str, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(a)) for a in r])


def _split(z: np.ndarray) -> np.ndarray:
    """Interleave real and imaginary parts along the last axis."""
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2], out[..., 1::2] = z.real, z.imag
    return out


def cmd_resolvent(args) -> int:
    system, _, _ = _load(args)
    given = {}
    for item in args.f or []:
        eid, _, path = item.partition("=")
        if not path or not eid.strip().lstrip("-").isdigit():
            raise InputError(f"--f expects EDGE=PATH, got {item!r}")
        given[int(eid)] = path
    nodes, f = {}, {}
    default_nodes = uniform_nodes(system, args.cells or 2000)
    for e in system.graph.edges:
        if e.id in given:
            xs, fe = _read_edge_csv(given.pop(e.id), e.k)
            if xs[0] != 0.0 or abs(xs[-1] - e.length) > 1e-12 * e.length or np.any(np.diff(xs) <= 0):
                raise InputError(f"edge {e.id}: x must increase from 0 to {e.length}")
            nodes[e.id], f[e.id] = xs, fe
        else:
            nodes[e.id] = default_nodes[e.id]
            f[e.id] = np.zeros((nodes[e.id].size, e.k), complex)
    if given:
        raise InputError(f"--f names unknown edges {sorted(given)}")
    g = {}
    if args.g:
        try:
            with open(args.g) as fh:
                graw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"{args.g}: {exc}") from None
        names = {str(v): v for v in system.sites}
        for key, val in graw.items():
            if key not in names:
                raise InputError(f"{args.g}: unknown vertex {key!r}")
            g[names[key]] = parse_array(val, 1, f"g.{key}")
    st = solve_A0(system, f, g, nodes)
    res = a0_residual(system, st, f, g)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for e in system.graph.edges:
            rows = np.column_stack([st.nodes[e.id], _split(st.u[e.id])])
            _write_csv(os.path.join(args.out, f"solution_edge_{e.id}.csv"), _edge_header(e.k), rows)
    rep = {"residual": res, "x": {str(v): encode_array(a) for v, a in st.x.items()},
           "nodes_per_edge": {str(e): int(xs.size) for e, xs in st.nodes.items()}}
    _emit(dumps(rep), args.out, "resolvent.json")
    return EXIT_CERT if args.strict and res > 1e-6 else EXIT_OK


def _initial_state(system, init: dict, seed: int):
    kind = init.get("type", "random")
    if kind != "random":
        raise InputError(f"simulation.initial.type must be 'random', got {kind!r}")
    rng = np.random.default_rng(seed)
    return random_domain_state(system, rng, knots=int(init.get("knots", 6)), real=bool(init.get("real", False)))


def cmd_simulate(args) -> int:
    system, doc, _ = _load(args)
    sim = dict(SIM_DEFAULTS)
    sim.update({k: v for k, v in (doc.get("simulation") or {}).items() if k != "initial"})
    for key, val in (("method", args.method), ("cells", args.cells), ("t_final", args.t_final), ("dt", args.dt)):
        if val is not None:
            sim[key] = val
    if sim["method"] not in ("rk4", "expm"):
        raise InputError(f"unknown method {sim['method']!r}")
    init = (doc.get("simulation") or {}).get("initial", {})
    seed = args.seed if args.seed is not None else int(init.get("seed", 0))
    traj = simulate(system, _initial_state(system, init, seed), float(sim["t_final"]), sim["method"],
                    None if sim["dt"] is None else float(sim["dt"]), int(sim["cells"]), int(sim["n_out"]))
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    lifted = [traj.state(i) for i in range(traj.times.size)]
    for e in system.graph.edges:
        rows = []
        for t, st in zip(traj.times, lifted):
            xs = st.nodes[e.id]
            rows.extend(np.column_stack([np.full(xs.size, t), xs, _split(st.u[e.id])]))
        _write_csv(os.path.join(out, f"edge_{e.id}.csv"), _edge_header(e.k, ("t", "x")), rows)
    led = traj.ledger
    _write_csv(os.path.join(out, "energy.csv"), ["t", "E", "constraint_residual"],
               np.column_stack([led.t, led.E, led.constraint_residual]))
    header, rows = ["t"], []
    for v in system.sites:
        header += [f"{p}_x_{v}_{i + 1}" for i in range(system.site_dim(v)) for p in ("re", "im")]
    for t, st in zip(traj.times, lifted):
        rows.append(np.concatenate([[t]] + [_split(st.x[v]) for v in system.sites]))
    _write_csv(os.path.join(out, "boundary.csv"), header, rows)
    E = led.E
    summary = {"method": traj.method, "dt": traj.dt, "cells": int(sim["cells"]), "t_final": float(sim["t_final"]),
               "seed": seed, "outputs": int(traj.times.size), "E0": float(E[0]), "E_final": float(E[-1]),
               "max_relative_energy_drift": float(np.max(np.abs(E / E[0] - 1.0))) if E[0] > 0 else 0.0,
               "max_constraint_residual": float(np.max(led.constraint_residual)),
               "projected_by": float(traj.projected_by)}
    sys.stdout.write(dumps(summary))
    return EXIT_OK


def cmd_qual(args) -> int:
    system, _, _ = _load(args)
    rep = qual_report(system, args.property, trials=args.trials, seed=args.seed or 0)
    d = rep.to_dict()
    _emit(dumps(d), args.out, f"qual_{args.property}.json")
    bad = rep.static_verdict != "certified" or (rep.dynamic_verdict or {}).get("verdict") == "violated"
    return EXIT_CERT if args.strict and bad else EXIT_OK


def cmd_models(args) -> int:
    if args.action == "list":
        _emit(dumps(list_models()), args.out, "models.json")
        return EXIT_OK
    if not args.name:
        raise InputError("models dump needs a model name")
    params = None
    if args.params:
        try:
            params = json.loads(args.params)
        except json.JSONDecodeError as exc:
            raise InputError(f"--params: {exc}") from None
    preset = instantiate(args.name, params)
    _emit(dumps(system_to_dict(preset.system), digits=None), args.out, f"{args.name}.json")
    return EXIT_OK


# argument parsing

def _add_common(p, config=True):
    if config:
        p.add_argument("config", help="JSON configuration file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--strict", action="store_true", help="exit 1 when a certificate fails")
    p.add_argument("--seed", type=int, default=None, help="seed for random probes and initial data (default 0)")
    for name in TOL_FLAGS:
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypnet", description="Hyperbolic systems on metric graphs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate the standing assumptions")
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("classify", help="well-posedness certificates")
    _add_common(p)
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="also test the boundary form at this shift")
    p.add_argument("--mu", type=float, default=None, help="also test the adjoint form at this shift")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("resolvent", help="solve A_0 (u, x) = (f, g)")
    _add_common(p)
    p.add_argument("--f", action="append", metavar="EDGE=PATH", help="CSV of f on one edge (repeatable)")
    p.add_argument("--g", metavar="PATH", help="JSON object vertex -> vector g_v")
    p.add_argument("--cells", type=int, default=None, help="cells for edges without --f (default 2000)")
    p.set_defaults(func=cmd_resolvent)

    p = sub.add_parser("simulate", help="evolve random initial data and write CSV files")
    _add_common(p)
    p.add_argument("--cells", type=int, default=None)
    p.add_argument("--t-final", dest="t_final", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--method", choices=("rk4", "expm"), default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("qual", help="qualitative invariance report")
    _add_common(p)
    p.add_argument("--property", required=True, choices=sorted(PROPERTY_CONE))
    p.add_argument("--trials", type=int, default=0, help="dynamic probe trials (0 skips the probe)")
    p.set_defaults(func=cmd_qual)

    p = sub.add_parser("models", help="preset systems")
    p.add_argument("action", choices=("list", "dump"))
    p.add_argument("name", nargs="?")
    p.add_argument("--params", help="JSON object of preset parameters")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_models)
    return ap


INPUT_ERRORS = (ConfigParseError, InputError, InvalidParameter, GraphError, DomainViolation,
                QualPreconditionError, SingularBoundarySystem)


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
