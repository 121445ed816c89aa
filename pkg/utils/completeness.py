"""
Completeness check: scattering states over k in (-π, 0) plus every bound
state must resolve the identity on a finite window of vertices.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad_vec

from .errors import DomainError, GammaSingular, QuadratureStalled
from .graph_model import InternalSite, PathSite, ScatteringGraph, Vertex
from .smatrix import s_matrix, scattering_amplitudes
from .spectra import BoundStateCatalog, ConfinedClass, bound_state_catalog

logger = logging.getLogger(__name__)

NUDGE = 1e-7
WORST_PAIRS = 5


def window_vertices(graph: ScatteringGraph, x_cut: int) -> List[Vertex]:
    """Path sites x = 1..x_cut on every path, then the internal vertices"""
    if x_cut < 2:
        raise DomainError("x_cut must be at least 2", {"x_cut": x_cut})
    sites: List[Vertex] = [PathSite(x, j) for j in range(graph.n) for x in range(1, x_cut + 1)]
    sites.extend(InternalSite(i) for i in range(graph.m))
    return sites


class _Integrand:
    """Σ_j ⟨v|sc_j(k)⟩⟨sc_j(k)|w⟩ / 2π over the window, as a flat real vector"""

    def __init__(self, graph: ScatteringGraph, sites: Sequence[Vertex]):
        self.graph = graph
        self.sites = list(sites)
        self.size = len(self.sites)
        self.nudged: List[float] = []

    def _sample(self, k: float):
        try:
            return s_matrix(self.graph, cmath.exp(1j * k), crosscheck=False)
        except GammaSingular:
            shifted = k + NUDGE if k < -0.5 * math.pi else k - NUDGE
            self.nudged.append(k)
            logger.debug("Nudging singular energy k=%.9f to %.9f", k, shifted)
            return s_matrix(self.graph, cmath.exp(1j * shifted), crosscheck=False)

    def __call__(self, k: float) -> np.ndarray:
        amps = scattering_amplitudes(self.graph, self._sample(k), self.sites)
        block = amps @ amps.conj().T / (2.0 * math.pi)
        return np.concatenate([block.real.ravel(), block.imag.ravel()])

    def unpack(self, flat: np.ndarray) -> np.ndarray:
        half = self.size * self.size
        return (flat[:half] + 1j * flat[half:]).reshape(self.size, self.size)


def _confined_momenta(catalog: BoundStateCatalog) -> List[float]:
    """k in (-π, 0) with 2cos k equal to a C_< confined energy"""
    momenta = sorted({-math.acos(0.5 * c.lambda_c) for c in catalog.confined
                      if c.cls == ConfinedClass.C_LESS})
    return [k for k in momenta if -math.pi < k < 0.0]


@dataclass
class ScatteringIntegral:
    matrix: np.ndarray
    error_estimate: float
    panels: int
    evaluations: int
    nudged: List[float]


def integrate_scattering(
    graph: ScatteringGraph,
    sites: Sequence[Vertex],
    quad_target: Optional[float] = None,
    quad_limit: int = 2000,
    points: Optional[Sequence[float]] = None,
) -> ScatteringIntegral:
    """Adaptive Gauss-Kronrod integral of the scattering projector over (-π, 0)"""
    target = quad_target or graph.tolerances.quad_target
    integrand = _Integrand(graph, sites)
    result, error, info = quad_vec(
        integrand, -math.pi, 0.0,
        epsabs=target, epsrel=0.0, norm="max", limit=quad_limit,
        points=list(points) if points else None, full_output=True,
    )
    if info.status != 0:
        worst = int(np.argmax(info.errors)) if len(info.errors) else 0
        a, b = info.intervals[worst] if len(info.intervals) else (-math.pi, 0.0)
        raise QuadratureStalled(
            "Adaptive quadrature did not reach the requested accuracy",
            {"status": int(info.status), "error_estimate": float(error),
             "target": target, "k": 0.5 * (float(a) + float(b))},
        )
    return ScatteringIntegral(
        matrix=integrand.unpack(result),
        error_estimate=float(error),
        panels=len(info.intervals),
        evaluations=int(info.neval),
        nudged=sorted(set(integrand.nudged)),
    )


def scattering_overlap_integral(graph: ScatteringGraph, v: Vertex, w: Vertex,
                                quad_target: Optional[float] = None) -> complex:
    """∫ dk/2π Σ_j ⟨v|sc_j(k)⟩⟨sc_j(k)|w⟩ over (-π, 0)"""
    for vertex in (v, w):
        if isinstance(vertex, PathSite):
            if vertex.x < 1 or not 0 <= vertex.path < graph.n:
                raise DomainError("Vertex outside the graph", {"vertex": vertex.label()})
        else:
            graph.index_of(vertex)
    integral = integrate_scattering(graph, [v, w], quad_target)
    return complex(integral.matrix[0, 1] if v != w else integral.matrix[0, 0])


def bound_projector(graph: ScatteringGraph, sites: Sequence[Vertex],
                    catalog: BoundStateCatalog) -> np.ndarray:
    """Σ_b |φ_b⟩⟨φ_b| + Σ_c |ψ_c⟩⟨ψ_c| restricted to the window"""
    out = np.zeros((len(sites), len(sites)), dtype=complex)
    for state in list(catalog.unconfined) + list(catalog.confined):
        amps = np.array([state.amplitude(graph, s) for s in sites])
        out += np.outer(amps, amps.conj())
    return out


@dataclass
class CompletenessReport:
    window: List[str]
    max_deviation: float
    quad_panels: int
    quad_error_estimate: float
    excluded_energies: List[float]
    hermiticity_defect: float
    acceptance: float
    half_bound: bool
    passed: bool
    worst_pairs: List[Dict[str, Any]] = field(default_factory=list)
    quad_target: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "window": self.window,
            "max_deviation": self.max_deviation,
            "quad_panels": self.quad_panels,
            "quad_error_estimate": self.quad_error_estimate,
            "quad_target": self.quad_target,
            "excluded_energies": self.excluded_energies,
            "hermiticity_defect": self.hermiticity_defect,
            "acceptance": self.acceptance,
            "half_bound_endpoints": self.half_bound,
            "worst_pairs": self.worst_pairs,
            "pass": self.passed,
        }


def completeness_defect(
    graph: ScatteringGraph,
    x_cut: int = 6,
    quad_target: Optional[float] = None,
    quad_limit: int = 2000,
    acceptance: float = 1e-6,
    half_bound_acceptance: float = 1e-4,
    catalog: Optional[BoundStateCatalog] = None,
) -> CompletenessReport:
    """max |scattering + bound projectors - δ_vw| over the window"""
    sites = window_vertices(graph, x_cut)
    catalog = catalog or bound_state_catalog(graph)
    target = quad_target or graph.tolerances.quad_target
    excluded = _confined_momenta(catalog)

    try:
        integral = integrate_scattering(graph, sites, target, quad_limit, excluded)
    except QuadratureStalled as e:
        e.details["x_cut"] = x_cut
        raise

    lhs = integral.matrix + bound_projector(graph, sites, catalog)
    deviation = np.abs(lhs - np.eye(len(sites)))
    hermiticity = float(np.max(np.abs(lhs - lhs.conj().T)))
    if hermiticity > 1e-10:
        logger.warning("Completeness matrix is not Hermitian (%.3e)", hermiticity)

    order = np.argsort(deviation, axis=None)[::-1][:WORST_PAIRS]
    worst = []
    for flat in order:
        a, b = np.unravel_index(flat, deviation.shape)
        worst.append({"v": sites[a].label(), "w": sites[b].label(), "deviation": float(deviation[a, b])})

    half_bound = catalog.n_h > 0
    limit = half_bound_acceptance if half_bound else acceptance
    max_dev = float(np.max(deviation))
    return CompletenessReport(
        window=[s.label() for s in sites],
        max_deviation=max_dev,
        quad_panels=integral.panels,
        quad_error_estimate=integral.error_estimate,
        excluded_energies=sorted(set(excluded) | set(integral.nudged)),
        hermiticity_defect=hermiticity,
        acceptance=limit,
        half_bound=half_bound,
        passed=max_dev <= limit,
        worst_pairs=worst,
        quad_target=target,
    )


def quadrature_convergence(
    graph: ScatteringGraph,
    x_cut: int = 4,
    targets: Sequence[float] = (1e-5, 1e-6, 1e-7, 1e-8),
    quad_limit: int = 2000,
) -> List[Tuple[float, float, float]]:
    """(target, max_deviation, error estimate) for successively tighter targets"""
    catalog = bound_state_catalog(graph)
    rows = []
    for target in targets:
        report = completeness_defect(graph, x_cut, target, quad_limit, catalog=catalog)
        rows.append((target, report.max_deviation, report.quad_error_estimate))
    return rows
