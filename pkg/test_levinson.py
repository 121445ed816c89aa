import cmath
import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import utils.levinson as levinson
from utils.errors import DomainError, RefinementExhausted
from utils.gallery import g1, g3, g4, random_gadget
from utils.graph_model import ScatteringGraph
from utils.levinson import levinson_check, phase_trace, winding_by_phase, winding_closed_form


def test_gallery_windings(gallery_case):
    name, graph, expected = gallery_case
    assert winding_by_phase(graph) == expected.winding, name
    assert winding_closed_form(graph) == expected.winding, name
    report = levinson_check(graph)
    assert report.passed, name
    assert report.rhs == expected.winding
    assert (report.n_b, report.n_c, report.n_h) == (expected.n_b, expected.n_c, expected.n_h)


@pytest.mark.parametrize("graph, value", [(g4(), 0), (g3(), 0), (g1(3.0), -2)])
def test_closed_form_values(graph, value):
    assert winding_closed_form(graph) == value


def test_report_dict_uses_pass_key():
    data = levinson_check(g1(3.0)).to_dict()
    assert data["pass"] is True
    assert "passed" not in data and "trace" not in data
    assert (data["winding_phase"], data["winding_closed_form"], data["rhs"]) == (-2, -2, -2)


def test_trace_is_anchored_and_closed():
    trace = phase_trace(g1(3.0))
    assert trace.points[0][1] == 0.0
    assert trace.points[-1][1] == pytest.approx(trace.total_phase)
    assert trace.total_phase == pytest.approx(-4.0 * math.pi, abs=0.05)
    assert trace.closed_form_deviation <= 1e-9
    assert trace.samples_used >= 256


def test_refinement_near_threshold_bound_state():
    # bound state at x0 = 1/1.05 makes the phase of det S turn quickly near k = 0
    trace = phase_trace(g1(1.05), initial_grid=64)
    assert trace.winding == -2
    assert trace.refinement_depth >= 1


def test_grid_too_small():
    with pytest.raises(DomainError):
        phase_trace(g3(), initial_grid=32)


def test_refinement_exhausted(monkeypatch):
    def wild_sample(graph, k, step, crosscheck=False):
        z = cmath.exp(1j * k)
        return SimpleNamespace(k=k, z=z, det_s=cmath.exp(1j * 1e7 * k))

    monkeypatch.setattr(levinson, "sample_on_circle", wild_sample)
    with pytest.raises(RefinementExhausted):
        phase_trace(g3(), initial_grid=64, max_refine=0)


@settings(max_examples=30, deadline=None, derandomize=True)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 4), m=st.integers(0, 6))
def test_levinson_random(seed, n, m):
    graph = random_gadget(np.random.default_rng(seed), n, m)
    report = levinson_check(graph)
    assert report.passed
    assert report.winding_phase == report.winding_closed_form == report.rhs
    if report.n_h == 0:
        assert report.winding_phase % 2 == 0


@pytest.mark.slow
def test_levinson_random_suite():
    rng = np.random.default_rng(500)
    for index in range(500):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(0, 7))
        graph = random_gadget(rng, n, m, name=f"suite_{index}")
        assert levinson_check(graph).passed, graph.name


def _narrow_resonance(a=-0.975, b=0.05, d=-1.9):
    """Half-bound state at -1 plus a pair of W roots just outside the circle near k = ±2.8"""
    return ScatteringGraph(1, 1, np.array([[a, b], [b, d]]), name="narrow_resonance")


def test_narrow_resonance_on_coarse_grid():
    graph = _narrow_resonance()
    report = levinson_check(graph, initial_grid=64)
    assert report.passed
    assert report.winding_phase == report.rhs == 1
    assert report.refinement_depth >= 3


def test_narrow_resonance_grid_independent():
    graph = _narrow_resonance()
    windings = {winding_by_phase(graph, initial_grid=grid) for grid in (64, 128, 256, 1024)}
    assert windings == {1}


def test_jittered_sample_keeps_unwrapped_momentum(monkeypatch):
    def jittering_sample(graph, k, step, crosscheck=False):
        return SimpleNamespace(z=cmath.exp(1j * (k + 0.5 * step)), det_s=1.0 + 0j)

    monkeypatch.setattr(levinson, "sample_on_circle", jittering_sample)
    walker = levinson._PhaseWalker(g3(), 4)
    k, phase = walker.phase_at(3.1, 0.2)
    assert k == pytest.approx(3.2)
    assert phase == 0.0
