"""
Winding number of det S around the unit circle, by phase tracking and by
counting roots of W, and the Levinson identity tying both to the bound
state counts.
"""

import cmath
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, NotInteger, RefinementExhausted
from .graph_model import ScatteringGraph
from .smatrix import sample_on_circle
from .spectra import (BoundStateCatalog, RootCensus, WPolynomial, bound_state_catalog, census_for, det_s_from_w,
                      w_polynomial)

logger = logging.getLogger(__name__)

STEP_LIMIT = 0.5 * math.pi
RESONANCE_SKIP = 10.0      # roots this close (in eps_snap) are on the circle and cancel in det S
RESONANCE_RANGE = 0.5


@dataclass
class PhaseTrace:
    winding: int
    total_phase: float
    residual: float
    samples_used: int
    refinement_depth: int
    closed_form_deviation: float
    points: List[Tuple[float, float]] = field(default_factory=list)   # (k, unwrapped phase)


def _wrap(delta: float) -> float:
    return (delta + math.pi) % (2.0 * math.pi) - math.pi


def _resonances(w: WPolynomial, eps_snap: float) -> List[Tuple[float, float]]:
    """(angle, distance from |z| = 1) for roots of W near but off the circle"""
    if w.degree == 0:
        return []
    out = []
    for root in P.polyroots(w.coeffs):
        distance = abs(abs(root) - 1.0)
        if RESONANCE_SKIP * eps_snap < distance < RESONANCE_RANGE:
            out.append((cmath.phase(root), distance))
    return out


class _PhaseWalker:
    """Accumulates arg det S(e^{ik}) interval by interval, bisecting large steps"""

    def __init__(self, graph: ScatteringGraph, max_refine: int):
        self.graph = graph
        self.max_refine = max_refine
        self.w = w_polynomial(graph)
        self.samples = 0
        self.depth = 0
        self.deviation = 0.0
        self.total = 0.0
        self.points: List[Tuple[float, float]] = []
        self.resonances = _resonances(self.w, graph.tolerances.eps_snap)

    def phase_at(self, k: float, step: float) -> Tuple[float, float]:
        sample = sample_on_circle(self.graph, k, step)
        self.samples += 1
        det_w = det_s_from_w(self.w, sample.z, self.graph.m, self.graph.n)
        if np.isfinite(det_w):
            self.deviation = max(self.deviation, abs(det_w - sample.det_s))
        # a jittered sample sits slightly right of k; keep k unwrapped across the seam
        offset = cmath.phase(sample.z * cmath.exp(-1j * k))
        return k + offset, cmath.phase(sample.det_s)

    def near_resonance(self, ka: float, kb: float) -> bool:
        """True while [ka, kb] is too coarse for a W root close to the circle"""
        length = kb - ka
        mid = 0.5 * (ka + kb)
        for angle, distance in self.resonances:
            if length > 0.5 * distance and abs(_wrap(angle - mid)) - 0.5 * length < 2.0 * distance:
                return True
        return False

    def walk(self, ka: float, pa: float, kb: float, pb: float, depth: int) -> None:
        delta = _wrap(pb - pa)
        # resonance-driven bisection stops at max_refine; phase jumps never do
        if abs(delta) < STEP_LIMIT and (depth >= self.max_refine or not self.near_resonance(ka, kb)):
            self.total += delta
            self.points.append((kb, self.total))
            return
        if depth >= self.max_refine:
            raise RefinementExhausted(
                "Phase of det S is not resolved after refinement",
                {"k_left": ka, "k_right": kb, "step": delta, "depth": depth},
            )
        self.depth = max(self.depth, depth + 1)
        km, pm = self.phase_at(0.5 * (ka + kb), 0.25 * (kb - ka))
        self.walk(ka, pa, km, pm, depth + 1)
        self.walk(km, pm, kb, pb, depth + 1)


def phase_trace(
    graph: ScatteringGraph,
    initial_grid: int = 256,
    max_refine: int = 12,
    rounding_residual: float = 0.01,
) -> PhaseTrace:
    """Unwrapped arg det S over k ∈ [-π, π) and the winding it implies"""
    if initial_grid < 64:
        raise DomainError("initial_grid must be at least 64", {"initial_grid": initial_grid})

    walker = _PhaseWalker(graph, max_refine)
    step = 2.0 * math.pi / initial_grid
    grid = [walker.phase_at(-math.pi + t * step, step) for t in range(initial_grid)]
    walker.points.append((grid[0][0], 0.0))

    closing = (grid[0][0] + 2.0 * math.pi, grid[0][1])
    for (ka, pa), (kb, pb) in zip(grid, grid[1:] + [closing]):
        walker.walk(ka, pa, kb, pb, 0)

    raw = walker.total / (2.0 * math.pi)
    winding = int(round(raw))
    residual = abs(raw - winding)
    if residual > rounding_residual:
        raise NotInteger(
            "Total phase change of det S is not a multiple of 2π",
            {"winding": raw, "residual": residual},
        )
    logger.debug("Phase winding %d from %d samples (depth %d)", winding, walker.samples, walker.depth)
    return PhaseTrace(
        winding=winding,
        total_phase=walker.total,
        residual=residual,
        samples_used=walker.samples,
        refinement_depth=walker.depth,
        closed_form_deviation=walker.deviation,
        points=walker.points,
    )


def winding_by_phase(graph: ScatteringGraph, initial_grid: int = 256, max_refine: int = 12,
                     rounding_residual: float = 0.01) -> int:
    return phase_trace(graph, initial_grid, max_refine, rounding_residual).winding


def winding_closed_form(graph: ScatteringGraph, census: Optional[RootCensus] = None) -> int:
    """2m - 2α₁ - 2α₂ - α₃"""
    census = census or census_for(graph)
    return 2 * graph.m - 2 * census.alpha1 - 2 * census.alpha2 - census.alpha3


@dataclass
class LevinsonReport:
    winding_phase: int
    winding_closed_form: int
    rhs: int
    passed: bool
    samples_used: int
    refinement_depth: int
    m: int
    n_b: int
    n_c: int
    n_h: int
    phase_residual: float
    closed_form_deviation: float
    trace: Optional[PhaseTrace] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        data = {k: v for k, v in asdict(self).items() if k != "trace"}
        data["pass"] = data.pop("passed")
        return data


def levinson_check(
    graph: ScatteringGraph,
    initial_grid: int = 256,
    max_refine: int = 12,
    rounding_residual: float = 0.01,
    census: Optional[RootCensus] = None,
    catalog: Optional[BoundStateCatalog] = None,
) -> LevinsonReport:
    """w(det S) = 2(m - n_b - n_c - n_h/2), checked with both winding pipelines"""
    census = census or census_for(graph)
    catalog = catalog or bound_state_catalog(graph, census)
    trace = phase_trace(graph, initial_grid, max_refine, rounding_residual)
    closed = winding_closed_form(graph, census)
    rhs = 2 * (graph.m - catalog.n_b - catalog.n_c) - catalog.n_h

    passed = trace.winding == closed == rhs
    if not passed:
        logger.warning(
            "Levinson mismatch on %s: phase=%d closed_form=%d rhs=%d",
            graph.name or "<graph>", trace.winding, closed, rhs,
        )
    report = LevinsonReport(
        winding_phase=trace.winding,
        winding_closed_form=closed,
        rhs=rhs,
        passed=passed,
        samples_used=trace.samples_used,
        refinement_depth=trace.refinement_depth,
        m=graph.m,
        n_b=catalog.n_b,
        n_c=catalog.n_c,
        n_h=catalog.n_h,
        phase_residual=trace.residual,
        closed_form_deviation=trace.closed_form_deviation,
        trace=trace,
    )
    return report
