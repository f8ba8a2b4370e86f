import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hypnet.models import instantiate
from hypnet.netgraph import build_graph
from hypnet.qualinv import (NONNEG, REALS, UNIT_BALL, WeightNotDiagonal, WeightNotIdentity, check_linf,
                            check_positive, check_real, componentwise_projection, cone_invariant, dynamic_probe,
                            minimizing_projector, real_span)
from hypnet.state import random_domain_state, uniform_nodes
from hypnet.system import HyperbolicSystem, edge_data, vertex_condition

finite = st.floats(-1e3, 1e3, allow_nan=False)
cvecs = st.tuples(arrays(float, 6, elements=finite), arrays(float, 6, elements=finite)).map(lambda p: p[0] + 1j * p[1])


@pytest.mark.parametrize("cone", [REALS, NONNEG, UNIT_BALL])
@given(z=cvecs, w=cvecs)
def test_projection_is_idempotent_and_nearest(cone, z, w):
    p = componentwise_projection(z, cone)
    assert np.allclose(componentwise_projection(p, cone), p)
    q = componentwise_projection(w, cone)        # any cone point
    assert np.linalg.norm(z - p) <= np.linalg.norm(z - q) + 1e-9


def test_real_span():
    assert real_span(np.array([[1.0], [1j]]) * (1 + 1j), 1e-9) is False
    assert real_span(np.array([[1.0 + 1j], [2.0 + 2j]]), 1e-9)


def test_cone_invariance_examples(rng):
    e = np.eye(3)
    assert cone_invariant(e[:, :2], NONNEG, rng, 200, 1e-10, False)[0]
    d = np.array([[1.0], [1.0], [0.0]]) / np.sqrt(2)
    assert not cone_invariant(d * [[1], [-1], [1]], NONNEG, rng, 200, 1e-10, False)[0]
    assert cone_invariant(d, UNIT_BALL, rng, 200, 1e-10, True)[0]


def _decaying_buffer():
    """Scalar transport into a buffer x' = -x at the inflow end."""
    g = build_graph(["a", "b"], [(0, "a", "b", 1.0, 1)])
    return HyperbolicSystem(g, {0: edge_data([[1.0]])},
                            {"a": vertex_condition(1), "b": vertex_condition(1, Yd=[1.0], C=[[-1.0]], Qv=1.0)})


REAL_OK = ["transport", "maxwell_two_intervals", "telegrapher_y", "second_sound", "wave_star"]


@pytest.mark.parametrize("name", REAL_OK)
def test_real_certified(name):
    assert check_real(instantiate(name).system).static_verdict == "certified"


def test_dirac_not_real():
    rep = check_real(instantiate("dirac_network").system)
    assert rep.static_verdict == "not_certified"
    assert {"B_v real", "M_e real", "N_e real"} <= set(rep.failed_conditions)


@pytest.mark.parametrize("name", ["maxwell_two_intervals", "telegrapher_y", "second_sound", "wave_star",
                                  "dirac_network"])
def test_positive_rejects_nondiagonal_M(name):
    rep = check_positive(instantiate(name).system, n_samples=100)
    assert rep.static_verdict == "not_certified"


def test_transport_positivity_follows_metzler_C():
    assert check_positive(instantiate("transport").system).static_verdict == "certified"
    bad = instantiate("transport", {"C": [[-1.0, -0.5], [0.5, -1.0]]}).system
    assert check_positive(bad).static_verdict == "not_certified"


def test_linf_buffer_certified_and_consistent():
    sys = _decaying_buffer()
    assert check_linf(sys).static_verdict == "certified"
    assert dynamic_probe(sys, "linf", trials=5, n_cells=32)["verdict"] == "consistent"
    assert check_positive(sys).static_verdict == "certified"


def test_linf_transport_fails_on_vertex_matrix():
    rep = check_linf(instantiate("transport").system)
    assert rep.failed_conditions == ["|B_v + C_v P_v^(d)|_inf <= 1, or B_v = 0 and -C_v row dominant"]


def test_probe_detects_sign_change():
    sys = instantiate("transport", {"C": [[-1.0, -3.0], [-3.0, -1.0]]}).system
    r = dynamic_probe(sys, "positive", trials=5)
    assert r["verdict"] == "violated" and r["min_value"] < -1e-3


def test_probe_detects_complex_drift():
    assert dynamic_probe(instantiate("dirac_network").system, "real", trials=3)["verdict"] == "violated"


def test_probe_is_deterministic():
    sys = instantiate("second_sound").system
    assert dynamic_probe(sys, "real", trials=2, seed=9) == dynamic_probe(sys, "real", trials=2, seed=9)


def test_minimizing_projector_preconditions(rng):
    sys = instantiate("maxwell_two_intervals").system
    st_ = random_domain_state(sys, rng).sample(uniform_nodes(sys, 8))
    minimizing_projector(sys, st_, REALS)
    with pytest.raises((WeightNotDiagonal, WeightNotIdentity)):
        minimizing_projector(sys, st_, UNIT_BALL)
