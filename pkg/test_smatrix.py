import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utils.errors import DomainError, GammaSingular, ResolventSingular, ValidationError, ZeroArgument
from utils.gallery import g0, g1, g2, g3, g4, random_gadget
from utils.graph_model import InternalSite, PathSite
from utils.smatrix import (Method, _deflation, circle_table, continuation_block, gamma, pole_scan, q_matrix, s_matrix,
                           s_matrix_qform, scattering_amplitude, verify_scattering_state)
from utils.spectra import census_for


def _circle_points(rng, count=50):
    return np.exp(1j * rng.uniform(-math.pi, math.pi, count))


def test_gallery_closed_forms_on_circle(gallery_case, rng):
    name, graph, expected = gallery_case
    for z in _circle_points(rng):
        try:
            sample = s_matrix(graph, z)
        except GammaSingular:
            continue
        assert np.allclose(sample.s, expected.s(z), atol=1e-9), name


def test_gallery_closed_forms_off_circle(gallery_case, rng):
    name, graph, expected = gallery_case
    for _ in range(20):
        z = rng.uniform(0.5, 2.0) * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        sample = s_matrix(graph, z)
        assert np.allclose(sample.s, expected.s(z), atol=1e-9), name


def test_gamma_definition():
    z = 0.3 + 0.2j
    graph = g3()
    expected = z * z * (np.diag([1.0, 1.0, 0.0]) - np.eye(3)) + z * graph.hhat - np.eye(3)
    assert np.allclose(gamma(graph, z), expected)


def test_q_matrix_errors():
    with pytest.raises(ZeroArgument):
        q_matrix(g3(), 0)
    # 1/z + z = 0 is the eigenvalue of D in g4
    with pytest.raises(ResolventSingular):
        q_matrix(g4(), 1j)


def test_confined_energy_is_regular_in_continuation_form():
    sample = s_matrix(g4(), 1j)
    assert np.allclose(sample.s, [[1.0]])
    assert sample.crosscheck is None


def test_half_bound_energy_is_singular():
    with pytest.raises(GammaSingular):
        s_matrix(g2(), 1.0)


def test_zero_argument():
    with pytest.raises(ZeroArgument):
        s_matrix(g0(), 0)


def test_lower_right_block(rng):
    graph = g4()
    for _ in range(10):
        z = rng.uniform(0.5, 1.5) * cmath.exp(1j * rng.uniform(-3.0, 3.0))
        block = continuation_block(graph, z)
        assert np.allclose(block[1:, 1:], -np.eye(2) / z ** 2, atol=1e-9)


def test_qform_agrees_with_continuation(rng):
    for graph in (g1(3.0), g3(), random_gadget(rng, 2, 3)):
        for z in _circle_points(rng, 10):
            cont = s_matrix(graph, z)
            qform = s_matrix_qform(graph, z)
            assert qform.method is Method.QFORM
            assert np.allclose(cont.s, qform.s, atol=1e-9)
            assert np.allclose(cont.psi, qform.psi, atol=1e-8)
            assert cont.crosscheck is not None and cont.crosscheck < 1e-9


def test_det_s_from_lu():
    z = cmath.exp(0.7j)
    sample = s_matrix(g2(), z)
    assert sample.det_s == pytest.approx(-1.0 / z ** 2)


@settings(max_examples=15, deadline=None, derandomize=True)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 4), m=st.integers(0, 5))
def test_unitarity_and_symmetries(seed, n, m):
    rng = np.random.default_rng(seed)
    graph = random_gadget(rng, n, m)
    for sample in circle_table(graph, 64):
        assert sample.unitarity_defect() <= 1e-10
        mirrored = s_matrix(graph, sample.z.conjugate(), crosscheck=False)
        assert np.allclose(sample.s.conj().T, mirrored.s, atol=1e-10)


def test_inverse_symmetry(random_graphs, rng):
    for graph in random_graphs:
        for _ in range(10):
            z = rng.uniform(0.5, 2.0) * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
            try:
                s = s_matrix(graph, z, crosscheck=False).s
                s_inv = s_matrix(graph, 1.0 / z, crosscheck=False).s
            except GammaSingular:
                continue
            if max(np.max(np.abs(s)), np.max(np.abs(s_inv))) > 1e3:
                continue
            assert np.allclose(s_inv @ s, np.eye(graph.n), atol=1e-9)


def test_scattering_amplitude_examples():
    assert scattering_amplitude(g0(), -math.pi / 2, 0, PathSite(1, 0)) == pytest.approx(2j)
    assert scattering_amplitude(g2(), -math.pi / 2, 0, PathSite(2, 1)) == pytest.approx(-1j)


def test_scattering_amplitude_internal_vertex():
    k = -1.1
    sample = s_matrix(g3(), cmath.exp(1j * k))
    assert scattering_amplitude(g3(), k, 1, InternalSite(0)) == pytest.approx(sample.psi[0, 1])


@pytest.mark.parametrize("k", [0.5, -math.pi, 0.0])
def test_momentum_domain(k):
    with pytest.raises(DomainError):
        scattering_amplitude(g0(), k, 0, PathSite(1, 0))


def test_bad_path_index():
    with pytest.raises(ValidationError):
        scattering_amplitude(g0(), -1.0, 1, PathSite(1, 0))


@pytest.mark.parametrize("graph, k, j, bound", [
    (g0(), -1.0, 0, 1e-12),
    (g4(), -2.0, 0, 1e-12),
    (g3(), -0.4, 0, 1e-12),
    (g3(), -2.9, 1, 1e-12),
])
def test_scattering_state_residual(graph, k, j, bound):
    assert verify_scattering_state(graph, k, j, 10) <= bound


def test_scattering_state_residual_random():
    graph = random_gadget(np.random.default_rng(7), 3, 4)
    assert verify_scattering_state(graph, -0.7, 1, 10) <= 1e-10


def test_residual_cut_must_be_three_or_more():
    with pytest.raises(DomainError):
        verify_scattering_state(g0(), -1.0, 0, 2)


def test_pole_scan_finds_bound_state_pole():
    graph = g1(3.0)
    peaks = pole_scan(graph, np.linspace(0.2, 0.5, 31), n_angles=256, threshold=100.0)
    assert any(abs(z - 1.0 / 3.0) < 0.02 for z, _ in peaks)
    candidates = [0j] + [r.value for r in census_for(graph).roots]
    for z, _ in peaks:
        assert min(abs(z - c) for c in candidates) < 0.05


def test_deflation_cache_keys_on_graph_object():
    graph = g4()
    s_matrix(graph, 0.5j, crosscheck=False)
    hits = _deflation.cache_info().hits
    s_matrix(graph, 0.7j, crosscheck=False)
    assert _deflation.cache_info().hits > hits
    misses = _deflation.cache_info().misses
    s_matrix(g4(), 0.5j, crosscheck=False)
    assert _deflation.cache_info().misses == misses + 1
    assert _deflation.cache_info().maxsize == 128
