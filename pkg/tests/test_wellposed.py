import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypnet.models import instantiate
from hypnet.randsys import random_system
from hypnet.resolvent import boundary_problem_matrix
from hypnet.state import same_space
from hypnet.wellposed import (NONPOSITIVE, NULL, basis_condition, boundary_vectors, build_Wv, classify,
                              cone_check, min_lambda, min_shift)


def _bisect_shift(A, G, hi=1e3, iters=80):
    """Oracle: smallest t with max eig(A - t G) <= 0 by bisection (inf if none below hi)."""
    ok = lambda t: np.linalg.eigvalsh((A - t * G + (A - t * G).conj().T) / 2)[-1] <= 1e-9
    if ok(0.0):
        return 0.0
    if not ok(hi):
        return np.inf
    lo = 0.0
    for _ in range(iters):
        mid = (lo + hi) / 2
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi


@given(st.integers(0, 2**31), st.integers(1, 5), st.booleans())
def test_min_shift_matches_bisection(seed, n, singular):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A = X + X.conj().T
    L = rng.standard_normal((n, n))
    G = L @ L.T + np.eye(n)
    if singular and n > 1:
        # G vanishes on e_0; make A strictly negative there and decoupled so a finite shift exists
        G[0, :] = G[:, 0] = 0.0
        A[0, :] = A[:, 0] = 0.0
        A[0, 0] = -1.0
    t, _ = min_shift(A, G)
    ref = _bisect_shift(A, G)
    assert (np.isinf(t) and np.isinf(ref)) or t == pytest.approx(ref, rel=1e-6, abs=1e-7)


def test_min_shift_infinite_on_kernel_of_weight():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    G = np.diag([0.0, 1.0])
    assert np.isinf(min_shift(A, G)[0])


def test_cone_check_modes():
    F = np.diag([1.0, -1.0, 0.0])
    e = np.eye(3)
    assert cone_check(F, e[:, 1:2], NONPOSITIVE).holds
    assert not cone_check(F, e[:, 1:2], NULL).holds
    assert cone_check(F, e[:, 2:3], NULL).holds
    assert not cone_check(F, e[:, :2], NONPOSITIVE).holds
    assert cone_check(F, np.zeros((3, 0)), NULL).holds


def test_maxwell_basis_counts():
    b = basis_condition(instantiate("maxwell_two_intervals").system)
    counts = [d["dim_Y_perp"] + d["dim_ran_Bstar"] + d["dim_ker_Bstar"] for d in b.per_vertex.values()]
    assert counts == [1, 2, 1] and b.holds and b.k == 4


def test_dirac_basis_fails_with_shared_Z():
    sys = instantiate("dirac_network").system
    b = basis_condition(sys)
    assert (b.holds, b.dim_span, b.k) == (False, 2, 4)
    Z = np.array([[1, 0, -1, 0], [0, 1, 0, 1]], complex).T
    for v in sys.sites:
        assert same_space(build_Wv(sys, v).Z, Z, sys.tol.tol_sub)


# frozen ranks computed with the SVD rank of the stacked extended vectors
@pytest.mark.parametrize("name,dim_span,k", [
    ("transport", 2, 2), ("maxwell_two_intervals", 4, 4), ("telegrapher_y", 5, 6),
    ("second_sound", 4, 4), ("wave_star", 4, 6), ("dirac_network", 2, 4)])
def test_basis_rank_frozen(name, dim_span, k):
    sys = instantiate(name).system
    b = basis_condition(sys)
    assert (b.dim_span, b.k) == (dim_span, k)
    assert boundary_problem_matrix(sys).rank(sys.tol.tol_rank) == b.dim_span


def test_wave_star_integer_identity():
    sys = instantiate("wave_star").system
    total = sum(c.Y.shape[1] - c.Yd.shape[1] for c in sys.conditions.values())
    assert total == sys.k == 6


@pytest.mark.parametrize("name,verdict,route", [
    ("maxwell_two_intervals", "unitary_group", "basis"),
    ("dirac_network", "unitary_group", "adjoint"),
    ("telegrapher_y", "unitary_group", "adjoint"),
    ("wave_star", "unitary_group", "adjoint"),
    ("transport", "semigroup", "basis"),
    ("second_sound", "inconclusive", "none"),
])
def test_classification_frozen(name, verdict, route):
    r = classify(instantiate(name).system)
    assert (r.verdict, r.route) == (verdict, route)


def test_second_sound_vertex_form_is_indefinite_on_free_trace():
    # on Y_v1 the flux form couples the free trace coordinate to the dynamic one only
    sys = instantiate("second_sound").system
    assert np.isinf(min_lambda(sys, "v1")) and min_lambda(sys, "v2") == 0.0


@settings(max_examples=15)
@given(st.integers(0, 2**31))
def test_basis_condition_equals_invertible_boundary_matrix(seed):
    sys = random_system(np.random.default_rng(seed))
    W, labels = boundary_vectors(sys)
    assert W.shape == (sys.k, len(labels))
    b = basis_condition(sys)
    assert b.holds and abs(np.linalg.det(W)) > 0
    if b.shortcut_holds is not None:
        assert b.shortcut_holds == b.holds
