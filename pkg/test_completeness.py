import pytest

from utils.errors import DomainError
from utils.gallery import g0, g1, g4
from utils.graph_model import InternalSite, PathSite
from utils.completeness import (completeness_defect, quadrature_convergence, scattering_overlap_integral,
                                window_vertices)
from utils.spectra import bound_state_catalog


def test_free_half_line_overlaps():
    graph = g0()
    assert scattering_overlap_integral(graph, PathSite(1, 0), PathSite(1, 0)) == pytest.approx(1.0, abs=1e-6)
    assert abs(scattering_overlap_integral(graph, PathSite(1, 0), PathSite(2, 0))) <= 1e-6


def test_bound_state_takes_its_share():
    # N_v² = 8/9 of the attachment vertex belongs to the bound state
    value = scattering_overlap_integral(g1(3.0), PathSite(1, 0), PathSite(1, 0))
    assert value == pytest.approx(1.0 / 9.0, abs=1e-6)


def test_overlap_rejects_vertices_outside_graph():
    with pytest.raises(DomainError):
        scattering_overlap_integral(g0(), PathSite(0, 0), PathSite(1, 0))


def test_window_order():
    labels = [v.label() for v in window_vertices(g4(), 2)]
    assert labels == ["(1,0)", "(2,0)", "w0", "w1"]
    with pytest.raises(DomainError):
        window_vertices(g0(), 1)


@pytest.mark.parametrize("graph", [g0(), g1(3.0)], ids=["g0", "g1_c3"])
def test_completeness_without_half_bound_states(graph):
    report = completeness_defect(graph, x_cut=6)
    assert report.max_deviation <= 1e-6
    assert report.passed
    assert report.hermiticity_defect <= 1e-10
    assert report.acceptance == 1e-6
    assert len(report.worst_pairs) == 5
    assert report.to_dict()["pass"] is True


def test_completeness_with_confined_and_half_bound_states():
    report = completeness_defect(g4(), x_cut=3)
    assert report.half_bound
    assert report.acceptance == 1e-4
    assert report.passed
    assert report.hermiticity_defect <= 1e-10


def test_confined_states_vanish_on_paths():
    catalog = bound_state_catalog(g4())
    (state,) = catalog.confined
    assert state.amplitude(g4(), PathSite(1, 0)) == 0
    assert abs(state.amplitude(g4(), InternalSite(0))) == pytest.approx(2 ** -0.5)


def test_quadrature_convergence_error_estimates():
    rows = quadrature_convergence(g0(), x_cut=3, targets=(1e-5, 1e-7))
    assert [r[0] for r in rows] == [1e-5, 1e-7]
    for target, deviation, estimate in rows:
        assert estimate <= target
        assert deviation <= 1e-4


def test_deviation_shrinks_as_quadrature_tightens():
    rows = quadrature_convergence(g1(3.0), x_cut=3, targets=(1e-4, 1e-6, 1e-8))
    deviations = [deviation for _, deviation, _ in rows]
    for previous, current in zip(deviations, deviations[1:]):
        assert current <= previous + 1e-12
    assert deviations[-1] <= 1e-6
