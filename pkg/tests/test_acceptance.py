"""Acceptance criteria; each test prints one PASS/FAIL line with its failing clauses."""
import time

import numpy as np
import scipy.sparse.linalg as spla

from conftest import ACCEPTANCE_LINES
from hypnet.evolve import (adjoint_pairing_defect, assemble_adjoint_full, assemble_discrete_generator,
                           dissipativity_residual, simulate)
from hypnet.models import instantiate, second_sound_matrices, SecondSoundParams
from hypnet.qualinv import check_positive, check_real, dynamic_probe
from hypnet.randsys import random_graph, random_system
from hypnet.resolvent import SingularBoundarySystem, apply_A, roundtrip_error, solve_A0
from hypnet.state import inner_d, random_adjoint_state, random_domain_state, same_space, uniform_nodes
from hypnet.wellposed import basis_condition, build_Wv, classify, min_lambda

PRESETS = ["transport", "maxwell_two_intervals", "telegrapher_y", "second_sound", "wave_star", "dirac_network"]


def _verdict(n: int, title: str, clauses: dict, t0: float, budget: float):
    elapsed = time.perf_counter() - t0
    clauses = dict(clauses)
    clauses[f"runtime < {budget:g} s"] = elapsed < budget
    failed = [k for k, ok in clauses.items() if not ok]
    line = f"criterion {n}: {'PASS' if not failed else 'FAIL'} {title} ({elapsed:.2f} s)"
    if failed:
        line += " -- failed: " + "; ".join(failed)
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert not failed, line


def _orders(r):
    return [float(np.log2(a / b)) for a, b in zip(r[:-1], r[1:])]


def test_criterion_01_handshake():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    graphs = [random_graph(rng, 8, 14, 3) for _ in range(100)]
    ok = all(sum(g.k_v(v) for v in g.vertices) == 2 * g.k for g in graphs)
    _verdict(1, "handshake identity on 100 random graphs", {"sum k_v = 2k": ok}, t0, 1.0)


def test_criterion_02_maxwell():
    t0 = time.perf_counter()
    sys = instantiate("maxwell_two_intervals").system
    rep = classify(sys)
    b = basis_condition(sys)
    counts = [d["dim_Y_perp"] + d["dim_ran_Bstar"] + d["dim_ker_Bstar"] for d in b.per_vertex.values()]
    tr = simulate(sys, random_domain_state(sys, np.random.default_rng(2)), 4.0, "expm", n_cells=128, n_out=40)
    drift = float(np.max(np.abs(tr.ledger.E / tr.ledger.E[0] - 1)))
    _verdict(2, f"Maxwell two-interval (energy drift {drift:.1e})", {
        "unitary_group via basis route": (rep.verdict, rep.route) == ("unitary_group", "basis"),
        "counts 1+2+1 = 4 = k": counts == [1, 2, 1] and sum(counts) == sys.k == 4,
        "|E/E0 - 1| <= 1e-6": drift <= 1e-6,
    }, t0, 30.0)


def test_criterion_03_dirac():
    t0 = time.perf_counter()
    sys = instantiate("dirac_network").system
    b = basis_condition(sys)
    Z = np.array([[1, 0, -1, 0], [0, 1, 0, 1]], complex).T
    rep = classify(sys)
    tr = simulate(sys, random_domain_state(sys, np.random.default_rng(3)), 4.0, "expm", n_cells=128, n_out=40)
    drift = float(np.max(np.abs(tr.ledger.E / tr.ledger.E[0] - 1)))
    _verdict(3, f"Dirac network (energy drift {drift:.1e})", {
        "basis fails with dim_span 2 < 4": (b.holds, b.dim_span, b.k) == (False, 2, 4),
        "Z_v1 = Z_v2 = span{(1,0,-1,0),(0,1,0,1)}": all(same_space(build_Wv(sys, v).Z, Z, sys.tol.tol_sub)
                                                        for v in ("v1", "v2")),
        "unitary_group via adjoint route": (rep.verdict, rep.route) == ("unitary_group", "adjoint"),
        "lambda = mu = 0": rep.semigroup_lambda == 0.0 and rep.adjoint_route["adjoint_cone_mu_vertex_only"] == 0.0,
        "energy constant to 1e-6": drift <= 1e-6,
    }, t0, 30.0)


def test_criterion_04_second_sound():
    t0 = time.perf_counter()
    M, _, Q = second_sound_matrices(SecondSoundParams())
    ev = np.sort(np.linalg.eigvals(Q @ M).real)
    phi = (1 + np.sqrt(5)) / 2
    sys = instantiate("second_sound").system
    rep = classify(sys)
    lam = rep.semigroup_lambda
    tr = simulate(sys, random_domain_state(sys, np.random.default_rng(4)), 2.0, "expm", n_cells=64, n_out=40)
    E = tr.ledger.E
    bound_ok = lam is not None and bool(np.all(E <= E[0] * np.exp(2 * lam * tr.times) * (1 + 1e-3)))
    _verdict(4, f"second sound (verdict {rep.verdict}, lambda_v1 {min_lambda(sys, 'v1')})", {
        "eigenvalues {+-phi, +-(phi-1)} to 1e-10": np.allclose(ev, [-phi, 1 - phi, phi - 1, phi], atol=1e-10),
        "two positive and two negative eigenvalues": (ev > 0).sum() == 2 and (ev < 0).sum() == 2,
        "classify -> semigroup": rep.verdict == "semigroup",
        "finite min_lambda at v1": bool(np.isfinite(min_lambda(sys, "v1"))),
        "E(t) <= E(0) exp(2 lambda t)(1 + 1e-3) for the reported lambda": bound_ok,
    }, t0, 60.0)


def test_criterion_05_wave_star():
    t0 = time.perf_counter()
    sys = instantiate("wave_star", {"J": 3}).system
    total = sum(c.Y.shape[1] - c.Yd.shape[1] for c in sys.conditions.values())
    rep = classify(sys)
    _verdict(5, f"wave star J=3 (verdict {rep.verdict} via {rep.route})", {
        "sum (dim Y_v - dim Y_v^(d)) = k = 6": total == sys.k == 6,
        "reaches group via basis route": rep.route == "basis" and rep.verdict in ("group", "unitary_group"),
    }, t0, 5.0)


def test_criterion_06_transport():
    t0 = time.perf_counter()
    sys = instantiate("transport").system
    C = np.array(instantiate("transport").params.C)
    probe = dynamic_probe(sys, "positive", trials=20, seed=0)
    bad = instantiate("transport", {"C": [[-1.0, -0.5], [0.5, -1.0]]}).system
    _verdict(6, f"transport positivity (probe min {probe['min_value']:.1e})", {
        "C Metzler with diag <= 0": bool(np.all(np.diag(C) <= 0) and np.all(C - np.diag(np.diag(C)) >= 0)),
        "check_positive certified": check_positive(sys).static_verdict == "certified",
        "probe min >= -1e-8 over 20 states": probe["min_value"] >= -1e-8,
        "negative off-diagonal -> not_certified": check_positive(bad).static_verdict == "not_certified",
    }, t0, 60.0)


def test_criterion_07_resolvent():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    errs = []
    for _ in range(25):
        sys = random_system(rng)
        nodes = uniform_nodes(sys, 2000)
        f = {e.id: np.stack([np.sin((j + 1) * nodes[e.id] + rng.standard_normal())
                             + 1j * np.cos((j + 2) * nodes[e.id]) for j in range(e.k)], 1) for e in sys.graph.edges}
        g = {v: sys.conditions[v].P_d @ (rng.standard_normal(sys.site_dim(v))
                                         + 1j * rng.standard_normal(sys.site_dim(v))) for v in sys.sites}
        errs.append(roundtrip_error(sys, f, g, nodes))
    dirac = instantiate("dirac_network").system
    nodes = uniform_nodes(dirac, 2000)
    try:
        solve_A0(dirac, {e.id: np.ones((nodes[e.id].size, e.k)) for e in dirac.graph.edges}, None, nodes)
        raised = False
    except SingularBoundarySystem:
        raised = True
    _verdict(7, f"resolvent round trip (worst {max(errs):.1e})", {
        "25 random systems <= 1e-6": max(errs) <= 1e-6,
        "Dirac raises SingularBoundarySystem": raised,
    }, t0, 60.0)


def test_criterion_08_dissipation_identity():
    t0 = time.perf_counter()
    clauses, worst = {}, np.inf
    for name in PRESETS:
        sys = instantiate(name).system
        rng = np.random.default_rng(8)
        states = [random_domain_state(sys, rng) for _ in range(10)]
        # worst residual over the 10 states at each grid
        r = [max(dissipativity_residual(sys, s.sample(uniform_nodes(sys, n))) for s in states) for n in (32, 64, 128)]
        o = min(_orders(r))
        worst = min(worst, o)
        clauses[f"{name} order >= 1.9"] = o >= 1.9
    _verdict(8, f"dissipation identity (worst order {worst:.2f})", clauses, t0, 120.0)


def test_criterion_09_discrete_adjoint():
    t0 = time.perf_counter()
    clauses, info = {}, []
    ns = (32, 64, 128)
    for name in ("maxwell_two_intervals", "dirac_network"):
        sys = instantiate(name).system
        rng = np.random.default_rng(9)
        u, z = random_domain_state(sys, rng), random_adjoint_state(sys, rng)
        fine = uniform_nodes(sys, 16384)
        ref = inner_d(sys, apply_A(sys, u.sample(fine)), z.sample(fine))
        defects, consistency, sums = [], [], []
        for n in ns:
            gen = assemble_discrete_generator(sys, n)
            As = assemble_adjoint_full(sys, gen)
            uu, zz = u.sample(gen.nodes), z.sample(gen.nodes)
            defects.append(adjoint_pairing_defect(sys, gen, As, uu, zz))
            consistency.append(abs(gen.pair(uu, zz) - ref))
            if name == "dirac_network":
                red = spla.spsolve(gen.H.tocsc(), (gen.P.conj().T @ gen.WF @ As @ gen.P).tocsc())
                sums.append(float(abs(gen.A + red).max()))
        o = min(_orders(consistency))
        info.append(f"{name} order {o:.2f}")
        clauses[f"{name}: discrete pairing defect <= 1e-12 at every n"] = max(defects) <= 1e-12
        clauses[f"{name}: pairing converges to (u, A* v) at order >= 1.5"] = o >= 1.5
        if sums:
            clauses["dirac: |A_h + A*_h| <= 1e-10 at every n"] = max(sums) <= 1e-10
    _verdict(9, "discrete adjoint (" + ", ".join(info) + ")", clauses, t0, 120.0)


def test_criterion_10_qualitative_matrix():
    t0 = time.perf_counter()
    real_ok = ["transport", "maxwell_two_intervals", "telegrapher_y", "second_sound", "wave_star"]
    systems = {n: instantiate(n).system for n in PRESETS}
    real = {n: check_real(s).static_verdict for n, s in systems.items()}
    pos = {n: check_positive(s).static_verdict for n, s in systems.items()}
    certified = [(n, p) for n in PRESETS for p, verdicts in (("real", real), ("positive", pos))
                 if verdicts[n] == "certified"]
    violations = 0
    for seed in range(100):
        name, prop = certified[seed % len(certified)]
        violations += dynamic_probe(systems[name], prop, trials=3, seed=seed)["verdict"] == "violated"
    _verdict(10, f"qualitative matrix ({len(certified)} certified pairs, {violations} violations)", {
        "check_real certifies the five real presets": all(real[n] == "certified" for n in real_ok),
        "check_real rejects dirac": real["dirac_network"] == "not_certified",
        "check_positive rejects non-diagonal M_e": all(pos[n] == "not_certified" for n in PRESETS[1:]),
        "zero violations over 100 probes": violations == 0,
    }, t0, 300.0)
