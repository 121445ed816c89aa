import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from utils.errors import DomainError, NoCrossing
from utils.gallery import g0, g1, g2, g3, g4, random_gadget
from utils.graph_model import ScatteringGraph, ToleranceConfig
from utils.smatrix import gamma, s_matrix
from utils.spectra import (ConfinedClass, RootClass, bound_state_catalog, census_for, circle_null_vectors_confined,
                           confined_root_check, confined_states, derivative_check, det_s_from_w, eigenbranches,
                           find_crossings, inside_roots_real, lemma3_check, normalization, root_census,
                           threshold_order, w_polynomial, WPolynomial)


def _two_leaf_gadget(coupling, tolerances=None):
    """One attachment vertex feeding two internal vertices joined by `coupling`"""
    hhat = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, coupling], [1.0, coupling, 0.0]])
    return ScatteringGraph(1, 2, hhat, tolerances or ToleranceConfig())


def _parallel(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return abs(abs(np.vdot(a, b)) - np.linalg.norm(a) * np.linalg.norm(b)) < 1e-9


@pytest.mark.parametrize("graph, coeffs", [
    (g0(), [-1.0]),
    (g1(3.0), [-1.0, 3.0]),
    (g2(), [1.0, 0.0, -1.0]),
    (g3(), [-1.0, 0.0, 1.0]),
    (g4(), [-1.0, 0.0, 0.0, 0.0, 1.0]),
])
def test_w_polynomial_gallery(graph, coeffs):
    w = w_polynomial(graph)
    assert w.degree == len(coeffs) - 1
    assert np.allclose(w.coeffs, coeffs, atol=1e-12)


def test_w_polynomial_matches_determinant(random_graphs, rng):
    for graph in random_graphs:
        w = w_polynomial(graph)
        assert w.degree <= 2 * graph.m + graph.n
        assert abs(w.coeffs[0] - (-1) ** (graph.m + graph.n)) <= 1e-10
        for z in rng.uniform(-1.5, 1.5, 20) + 1j * rng.uniform(-1.5, 1.5, 20):
            direct = linalg.det(gamma(graph, z))
            assert abs(w(z) - direct) <= 1e-8 * max(1.0, abs(direct))


def test_census_gallery():
    assert census_for(g0()).roots == []
    g2_census = census_for(g2())
    assert (g2_census.alpha1, g2_census.alpha2, g2_census.alpha3) == (0, 0, 2)
    assert sorted(r.value.real for r in g2_census.roots) == [-1.0, 1.0]

    g4_census = census_for(g4())
    assert (g4_census.alpha1, g4_census.alpha2, g4_census.alpha3) == (0, 1, 2)
    circle = g4_census.of_class(RootClass.ON_CIRCLE)
    assert sorted(round(r.value.imag) for r in circle) == [-1, 1]

    g1_census = census_for(g1(3.0))
    assert g1_census.alpha1 == 1
    assert g1_census.roots[0].value == pytest.approx(1.0 / 3.0)
    assert g1_census.roots[0].cls is RootClass.INSIDE_REAL


def test_census_multiplicities_sum_to_degree(random_graphs):
    for graph in random_graphs:
        w = w_polynomial(graph)
        census = root_census(w, graph.tolerances)
        assert sum(r.multiplicity for r in census.roots) == w.degree
        assert census.pairing_ok


def test_confined_states_g4():
    (state,) = confined_states(g4())
    assert state.lambda_c == pytest.approx(0.0, abs=1e-12)
    assert state.cls is ConfinedClass.C_LESS
    assert _parallel(state.beta, [1.0, -1.0])
    graph = g4()
    assert np.linalg.norm(graph.D @ state.beta - state.lambda_c * state.beta) <= 1e-12
    assert np.linalg.norm(graph.B.conj().T @ state.beta) <= 1e-12


def test_no_confined_states():
    assert confined_states(g2()) == []
    assert confined_states(g3()) == []


def test_catalog_g1_bound_state():
    catalog = bound_state_catalog(g1(3.0))
    assert (catalog.n_b, catalog.n_c, catalog.n_h) == (1, 0, 0)
    (state,) = catalog.unconfined
    assert state.x0 == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert state.energy == pytest.approx(10.0 / 3.0)
    assert state.norm_const == pytest.approx(math.sqrt(8.0 / 9.0), abs=1e-10)
    # direct sum along the path
    total = sum(abs(state.norm_const * state.alpha[0] * state.x0 ** (x - 1)) ** 2 for x in range(1, 200))
    assert total == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.norm(gamma(g1(3.0), state.x0) @ np.concatenate([state.alpha, state.beta])) <= 1e-12


def test_catalog_half_bound_states():
    g2_catalog = bound_state_catalog(g2())
    assert (g2_catalog.n_b, g2_catalog.n_c, g2_catalog.n_h) == (0, 0, 2)
    by_x0 = {round(h.x0): h for h in g2_catalog.half_bound}
    assert _parallel(by_x0[1].alpha, [1.0, 1.0])
    assert _parallel(by_x0[-1].alpha, [1.0, -1.0])

    g4_catalog = bound_state_catalog(g4())
    assert (g4_catalog.n_b, g4_catalog.n_c, g4_catalog.n_h) == (0, 1, 2)
    assert g4_catalog.bound_state_count == 2.0
    by_x0 = {round(h.x0): h for h in g4_catalog.half_bound}
    assert _parallel(np.concatenate([by_x0[1].alpha, by_x0[1].beta]), [2.0, 1.0, 1.0])
    assert _parallel(np.concatenate([by_x0[-1].alpha, by_x0[-1].beta]), [2.0, -1.0, -1.0])
    for h in g4_catalog.half_bound:
        assert np.linalg.norm(gamma(g4(), h.x0) @ np.concatenate([h.alpha, h.beta])) <= 1e-9


def test_catalog_g1_threshold():
    catalog = bound_state_catalog(g1(1.0))
    assert (catalog.n_b, catalog.n_h) == (0, 1)
    assert bound_state_catalog(g0()).bound_state_count == 0


def test_normalization_formula():
    alpha = np.array([0.6, 0.8j])
    beta = np.array([0.5])
    x0 = -0.4
    assert normalization(alpha, beta, x0) == pytest.approx((1.0 / 0.84 + 0.25) ** -0.5)


def test_unconfined_states_are_orthonormal(random_graphs):
    for graph in random_graphs:
        catalog = bound_state_catalog(graph)
        for state in catalog.unconfined:
            vec = np.concatenate([state.alpha, state.beta])
            assert np.linalg.norm(gamma(graph, state.x0) @ vec) <= 1e-9
            assert np.linalg.norm(state.alpha) > 0
            assert state.norm_const == pytest.approx(normalization(state.alpha, state.beta, state.x0), rel=1e-10)


def test_confined_greater_root_correspondence():
    graph = _two_leaf_gadget(3.0)
    catalog = bound_state_catalog(graph)
    assert catalog.dim_c_greater == 1
    assert catalog.n_b == 1
    census = census_for(graph)
    assert census.alpha1 == 2
    assert confined_root_check(graph, census) <= 1e-8
    assert lemma3_check(graph).passed


def test_confined_equal_double_root():
    graph = _two_leaf_gadget(2.0)
    report = lemma3_check(graph)
    assert report.dim_c_equal == 1
    assert report.alpha3 == 2
    assert report.n_b == 1
    assert report.identities == {"alpha1": True, "alpha2": True, "alpha3": True, "combined": True,
                                 "thresholds": True}
    assert report.thresholds == {"+1": (0, 0), "-1": (2, 2)}
    assert inside_roots_real(census_for(graph)) <= 1e-7


@pytest.mark.parametrize("energy, target", [(2.0, 1.0), (-2.0, -1.0)])
def test_isolated_loop_at_band_edge(energy, target):
    graph = ScatteringGraph(1, 1, np.array([[0.0, 0.0], [0.0, energy]]))
    census = census_for(graph)
    (root,) = census.roots
    assert (root.value, root.multiplicity, root.cls) == (complex(target), 2, RootClass.AT_PLUS_MINUS_ONE)
    assert census.alpha2 == 0
    report = lemma3_check(graph, census)
    assert report.passed
    assert (report.dim_c_equal, report.n_h) == (1, 0)


def test_threshold_order():
    # (z - 1)^2 (z + 2)
    w = WPolynomial(np.array([2.0, -3.0, 0.0, 1.0]), 3)
    assert threshold_order(w, 1.0, 1e-8) == 2
    assert threshold_order(w, -1.0, 1e-8) == 0
    assert threshold_order(w_polynomial(g4()), -1.0, 1e-8) == 1


@pytest.mark.parametrize("graph", [g0(), g1(3.0), g1(1.0), g2(), g3(), g4()])
def test_lemma3_gallery(graph):
    report = lemma3_check(graph)
    assert report.passed
    assert report.alpha_side == report.state_side


@settings(max_examples=25, deadline=None, derandomize=True)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 4), m=st.integers(0, 6),
       complex_weights=st.booleans())
def test_root_laws_random(seed, n, m, complex_weights):
    graph = random_gadget(np.random.default_rng(seed), n, m, complex_weights=complex_weights)
    census = census_for(graph)
    assert inside_roots_real(census, graph.tolerances) <= 1e-7
    assert circle_null_vectors_confined(graph, census) <= 1e-8
    assert lemma3_check(graph, census).passed


def test_circle_null_vectors_of_g4_are_confined():
    assert circle_null_vectors_confined(g4(), census_for(g4())) <= 1e-12


def test_det_s_closed_form(rng):
    for graph in (g1(3.0), g3(), random_gadget(rng, 2, 2)):
        w = w_polynomial(graph)
        for k in rng.uniform(-3.0, 3.0, 10):
            z = complex(math.cos(k), math.sin(k))
            assert det_s_from_w(w, z, graph.m, graph.n) == pytest.approx(s_matrix(graph, z).det_s, abs=1e-9)


def test_eigenbranches_g2():
    table = eigenbranches(g2(), 201, 0.1)
    assert table.branch_count == 2
    x = table.grid
    columns = [table.values[:, b] for b in range(2)]
    assert any(np.allclose(c, -1.0 + x, atol=1e-12) for c in columns)
    assert any(np.allclose(c, -1.0 - x, atol=1e-12) for c in columns)
    assert table.min_overlap >= 0.9


def test_eigenbranches_g0_constant():
    table = eigenbranches(g0(), 32)
    assert np.allclose(table.values[:, 0], -1.0)


def test_eigenbranches_reconstruct_gamma():
    graph = g4()
    table = eigenbranches(graph, 101)
    assert table.branch_count == 2
    for t in range(0, 101, 10):
        assert np.allclose(table.reconstruct(graph, t), gamma(graph, table.grid[t]), atol=1e-9)
    assert table.min_overlap >= 0.9


def test_eigenbranches_grid_too_small():
    with pytest.raises(DomainError):
        eigenbranches(g2(), 8)


@pytest.mark.parametrize("graph, x0, analytic", [
    (g1(3.0), 1.0 / 3.0, 3.0),
    (g2(), 1.0, 1.0),
    (g2(), -1.0, -1.0),
])
def test_derivative_check_gallery(graph, x0, analytic):
    report = derivative_check(graph, x0)
    assert report.analytic == pytest.approx(analytic, abs=1e-9)
    assert report.hellmann_feynman == pytest.approx(analytic, abs=1e-9)
    assert report.passed


def test_derivative_check_without_crossing():
    with pytest.raises(NoCrossing):
        derivative_check(g0(), 0.5)
    with pytest.raises(NoCrossing):
        derivative_check(g2(), 1.0, order=1)


def test_crossings_gallery():
    assert [round(c.x0) for c in find_crossings(g4())] == [-1, 1]
    assert find_crossings(g0()) == []


def test_derivative_checks_random(random_graphs):
    for graph in random_graphs:
        for crossing in find_crossings(graph):
            report = derivative_check(graph, crossing.x0, crossing.order)
            assert report.passed, (graph.name, crossing)


@settings(max_examples=50, deadline=None, derandomize=True)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 3), m=st.integers(0, 4))
def test_derivative_checks_at_every_crossing(seed, n, m):
    graph = random_gadget(np.random.default_rng(seed), n, m)
    for crossing in find_crossings(graph):
        report = derivative_check(graph, crossing.x0, crossing.order)
        assert report.passed, (seed, n, m, crossing)
        assert report.analytic == pytest.approx(report.hellmann_feynman, rel=1e-7, abs=1e-8)
