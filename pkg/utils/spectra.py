"""
Spectral side of the gadget: W(z) = det γ(z), its root census, the
bound-state catalog (confined, unconfined, half-bound) and the smooth
eigenbranches of γ(x) on the real axis.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg, special

from .errors import DomainError, MatchingAmbiguous, NoCrossing, RankAmbiguous
from .graph_model import InternalSite, ScatteringGraph, ToleranceConfig, Vertex, projector_pn
from .smatrix import _deflation, gamma, gamma_derivative

logger = logging.getLogger(__name__)

DEFAULT_TRIM = 1e-10
EIGEN_CLUSTER = 1e-9
ZERO_BRANCH = 1e-8
POLISH_STEPS = 4


class RootClass(str, Enum):
    INSIDE_REAL = "InsideReal"
    ON_CIRCLE = "OnCircleConjugatePair"
    AT_PLUS_MINUS_ONE = "AtPlusMinusOne"
    OUTSIDE = "Outside"


class ConfinedClass(str, Enum):
    C_GREATER = "CGreater"
    C_LESS = "CLess"
    C_EQUAL = "CEqual"


@dataclass(frozen=True, eq=False)
class WPolynomial:
    """W(z) with coefficients in increasing powers of z"""
    coeffs: np.ndarray
    degree: int
    trim_threshold: float = DEFAULT_TRIM
    trimmed: int = 0

    def __call__(self, z):
        return P.polyval(z, self.coeffs)


@dataclass(frozen=True)
class RootEntry:
    value: complex
    multiplicity: int
    cls: RootClass


@dataclass(frozen=True, eq=False)
class RootCensus:
    roots: List[RootEntry]
    alpha1: int
    alpha2: int
    alpha3: int
    degree: int
    raw_roots: np.ndarray
    pairing_ok: bool = True
    absorbed: Tuple[int, ...] = ()     # raw roots assigned to z = ±1 by Taylor order

    def of_class(self, cls: RootClass) -> List[RootEntry]:
        return [r for r in self.roots if r.cls == cls]

    def raw_inside_max_imag(self, eps_snap: float) -> float:
        """Largest |Im z| among unsnapped roots strictly inside the disk"""
        inside = [r for i, r in enumerate(self.raw_roots)
                  if i not in self.absorbed and abs(r) < 1.0 - eps_snap]
        return max((abs(r.imag) for r in inside), default=0.0)


@dataclass(frozen=True, eq=False)
class ConfinedState:
    lambda_c: float
    beta: np.ndarray
    cls: ConfinedClass

    def amplitude(self, graph: ScatteringGraph, vertex: Vertex) -> complex:
        if isinstance(vertex, InternalSite):
            return complex(self.beta[vertex.index])
        return 0j


@dataclass(frozen=True, eq=False)
class UnconfinedState:
    x0: float
    energy: float
    alpha: np.ndarray
    beta: np.ndarray
    norm_const: float

    def amplitude(self, graph: ScatteringGraph, vertex: Vertex) -> complex:
        if isinstance(vertex, InternalSite):
            return complex(self.norm_const * self.beta[vertex.index])
        return complex(self.norm_const * self.alpha[vertex.path] * self.x0 ** (vertex.x - 1))


@dataclass(frozen=True, eq=False)
class HalfBoundState:
    x0: float
    alpha: np.ndarray
    beta: np.ndarray


@dataclass(eq=False)
class BoundStateCatalog:
    confined: List[ConfinedState] = field(default_factory=list)
    unconfined: List[UnconfinedState] = field(default_factory=list)
    half_bound: List[HalfBoundState] = field(default_factory=list)

    @property
    def n_c(self) -> int:
        return len(self.confined)

    @property
    def n_b(self) -> int:
        return len(self.unconfined)

    @property
    def n_h(self) -> int:
        return len(self.half_bound)

    def _dim(self, cls: ConfinedClass) -> int:
        return sum(1 for c in self.confined if c.cls == cls)

    @property
    def dim_c_greater(self) -> int:
        return self._dim(ConfinedClass.C_GREATER)

    @property
    def dim_c_less(self) -> int:
        return self._dim(ConfinedClass.C_LESS)

    @property
    def dim_c_equal(self) -> int:
        return self._dim(ConfinedClass.C_EQUAL)

    @property
    def bound_state_count(self) -> float:
        """Half-bound states count as one half"""
        return self.n_c + self.n_b + 0.5 * self.n_h


# ---------------------------------------------------------------- W(z)

def w_polynomial(graph: ScatteringGraph, trim_threshold: float = DEFAULT_TRIM) -> WPolynomial:
    """Coefficients of det γ(z) by evaluation at roots of unity + inverse DFT"""
    samples = 2 * graph.m + graph.n + 1
    nodes = np.exp(2j * np.pi * np.arange(samples) / samples)
    values = np.array([linalg.det(gamma(graph, z)) for z in nodes])
    coeffs = np.fft.fft(values) / samples

    scale = float(np.max(np.abs(coeffs)))
    keep = len(coeffs)
    while keep > 1 and abs(coeffs[keep - 1]) < trim_threshold * scale:
        keep -= 1
    coeffs = coeffs[:keep]

    expected = (-1) ** (graph.m + graph.n)
    if abs(coeffs[0] - expected) > 1e-10:
        logger.warning("W(0) = %s, expected %d", coeffs[0], expected)
    return WPolynomial(coeffs=coeffs, degree=keep - 1, trim_threshold=trim_threshold,
                       trimmed=samples - keep)


def _cluster(values: np.ndarray, radius: float) -> List[List[complex]]:
    """Single-linkage clusters of complex numbers"""
    parent = list(range(len(values)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if abs(values[i] - values[j]) <= radius:
                parent[find(i)] = find(j)

    groups: Dict[int, List[complex]] = {}
    for i, v in enumerate(values):
        groups.setdefault(find(i), []).append(complex(v))
    return list(groups.values())


def _classify(value: complex, eps_snap: float) -> Tuple[complex, RootClass]:
    for target in (1.0, -1.0):
        if abs(value - target) <= eps_snap:
            return complex(target), RootClass.AT_PLUS_MINUS_ONE
    radius = abs(value)
    if abs(radius - 1.0) <= eps_snap:
        return value / radius, RootClass.ON_CIRCLE
    if radius < 1.0:
        # non-real roots cannot lie strictly inside the disk
        return complex(value.real), RootClass.INSIDE_REAL
    return value, RootClass.OUTSIDE


def threshold_order(w: WPolynomial, target: float, eps: float) -> int:
    """Order of the zero of W at z = target, from its Taylor coefficients there"""
    coeffs = np.asarray(w.coeffs, dtype=complex)
    powers = np.arange(len(coeffs))
    order = 0
    for j in range(w.degree + 1):
        taylor = P.polyval(target, P.polyder(coeffs, j)) / math.factorial(j)
        scale = float(np.sum(special.comb(powers, j) * np.abs(coeffs)))
        if abs(taylor) > eps * scale:
            break
        order += 1
    return order


def root_census(w: WPolynomial, tol: Optional[ToleranceConfig] = None) -> RootCensus:
    """Roots of W with multiplicities, snapped and classified; α₁, α₂, α₃"""
    tol = tol or ToleranceConfig()
    if w.degree == 0:
        logger.debug("W is constant; empty census")
        return RootCensus([], 0, 0, 0, 0, np.zeros(0, dtype=complex))

    raw = P.polyroots(w.coeffs).astype(complex)
    entries: List[RootEntry] = []
    absorbed: List[int] = []
    # a k-fold zero splits by about eps^(1/k); collect it by its Taylor order instead
    window = math.sqrt(tol.eps_snap)
    for target in (1.0, -1.0):
        order = threshold_order(w, target, tol.eps_snap)
        if order == 0:
            continue
        free = [i for i in range(len(raw)) if i not in absorbed]
        nearest = sorted(free, key=lambda i: abs(raw[i] - target))[:order]
        taken = [i for i in nearest if abs(raw[i] - target) <= window]
        if len(taken) != order:
            logger.warning("W has a zero of order %d at %+g but only %d roots lie within %.1e",
                           order, target, len(taken), window)
        if taken:
            absorbed.extend(taken)
            entries.append(RootEntry(complex(target), len(taken), RootClass.AT_PLUS_MINUS_ONE))

    rest = np.array([r for i, r in enumerate(raw) if i not in absorbed], dtype=complex)
    for group in _cluster(rest, tol.eps_root_cluster):
        centroid = complex(np.mean(group))
        value, cls = _classify(centroid, tol.eps_snap)
        entries.append(RootEntry(value, len(group), cls))

    # split multiple roots may land in separate clusters that snap together
    merged: List[RootEntry] = []
    for entry in entries:
        for i, other in enumerate(merged):
            if other.cls == entry.cls and abs(other.value - entry.value) <= tol.eps_root_cluster:
                merged[i] = RootEntry(other.value, other.multiplicity + entry.multiplicity, other.cls)
                break
        else:
            merged.append(entry)
    merged.sort(key=lambda r: (abs(r.value), r.value.real, r.value.imag))

    alpha1 = sum(r.multiplicity for r in merged if r.cls == RootClass.INSIDE_REAL)
    on_circle = [r for r in merged if r.cls == RootClass.ON_CIRCLE]
    alpha3 = sum(r.multiplicity for r in merged if r.cls == RootClass.AT_PLUS_MINUS_ONE)

    pairing_ok = True
    for r in on_circle:
        partner = [o for o in on_circle
                   if abs(o.value - r.value.conjugate()) <= tol.eps_root_cluster
                   and o.multiplicity == r.multiplicity]
        if not partner:
            pairing_ok = False
            logger.warning("On-circle root %s has no conjugate partner", r.value)
    circle_count = sum(r.multiplicity for r in on_circle)
    if circle_count % 2:
        pairing_ok = False
        logger.warning("Odd number (%d) of on-circle roots", circle_count)

    return RootCensus(merged, alpha1, circle_count // 2, alpha3, w.degree, raw, pairing_ok, tuple(absorbed))


# ----------------------------------------------------------- bound states

def confined_states(graph: ScatteringGraph) -> List[ConfinedState]:
    """Orthonormal confined basis: Dβ = λβ and B†β = 0"""
    if graph.m == 0:
        return []
    tol = graph.tolerances
    lambdas, vecs = linalg.eigh(graph.D)
    b_dag = graph.B.conj().T
    b_scale = max(1.0, float(np.linalg.norm(graph.B, 2))) if graph.n else 1.0
    d_scale = max(1.0, float(np.max(np.abs(lambdas))))

    states: List[ConfinedState] = []
    start = 0
    while start < len(lambdas):
        stop = start + 1
        while stop < len(lambdas) and lambdas[stop] - lambdas[stop - 1] <= EIGEN_CLUSTER * d_scale:
            stop += 1
        basis = vecs[:, start:stop]
        lam = float(np.mean(lambdas[start:stop]))
        _, sing, vh = linalg.svd(b_dag @ basis)
        rank = int(np.sum(sing > tol.eps_rank * b_scale))
        kernel = vh[rank:].conj().T
        if kernel.shape[1]:
            cls = _confined_class(lam, tol.eps_snap)
            for col in range(kernel.shape[1]):
                beta = basis @ kernel[:, col]
                states.append(ConfinedState(lam, beta / np.linalg.norm(beta), cls))
        start = stop
    return states


def _confined_class(lam: float, eps_snap: float) -> ConfinedClass:
    if abs(abs(lam) - 2.0) <= eps_snap:
        return ConfinedClass.C_EQUAL
    if abs(lam) > 2.0:
        return ConfinedClass.C_GREATER
    return ConfinedClass.C_LESS


def _deflated_gamma(graph: ScatteringGraph, x: float) -> Tuple[np.ndarray, np.ndarray]:
    u, _ = _deflation(graph)
    g = u.conj().T @ gamma(graph, x) @ u
    return 0.5 * (g + g.conj().T), u


def _polish_root(graph: ScatteringGraph, x0: float, window: float) -> float:
    """Newton steps on the eigenbranch nearest zero, slope by Hellmann-Feynman"""
    x = x0
    for _ in range(POLISH_STEPS):
        g, u = _deflated_gamma(graph, x)
        evals, evecs = linalg.eigh(g)
        i = int(np.argmin(np.abs(evals)))
        if abs(evals[i]) > 1e-6 * max(1.0, float(np.max(np.abs(evals)))):
            # only a confined root lives here
            return x0
        v = u @ evecs[:, i]
        slope = float(np.real(v.conj() @ gamma_derivative(graph, x) @ v))
        if slope == 0.0:
            break
        step = evals[i] / slope
        x -= step
        if abs(step) < 1e-16:
            break
    if abs(x - x0) > window:
        logger.debug("Root polishing moved %.3e too far; keeping %.17g", abs(x - x0), x0)
        return x0
    return float(x)


def _null_space(graph: ScatteringGraph, x0: float, what: str) -> np.ndarray:
    """Orthonormal null space of the Hermitian γ(x0), with ambiguity detection"""
    tol = graph.tolerances
    g = gamma(graph, x0)
    g = 0.5 * (g + g.conj().T)
    evals, evecs = linalg.eigh(g)
    cutoff = tol.eps_rank * max(1.0, float(np.max(np.abs(evals))))
    mags = np.abs(evals)
    straddle = (mags > cutoff / 10.0) & (mags < cutoff * 10.0)
    if np.any(straddle):
        raise RankAmbiguous(
            f"Eigenvalues of γ({x0:.12g}) straddle the rank cutoff ({what})",
            {"x0": x0, "cutoff": cutoff, "values": sorted(float(v) for v in mags[straddle])},
        )
    return evecs[:, mags <= cutoff]


def _unconfined_part(graph: ScatteringGraph, null: np.ndarray, x0: float) -> np.ndarray:
    """Columns of the null space with attachment support (orthogonal to C)"""
    if null.shape[1] == 0:
        return null
    tol = graph.tolerances
    attach = null[: graph.n]
    _, sing, vh = linalg.svd(attach)
    cutoff = tol.eps_rank
    straddle = (sing > cutoff / 10.0) & (sing < cutoff * 10.0)
    if np.any(straddle):
        raise RankAmbiguous(
            f"Attachment amplitudes at x0={x0:.12g} straddle the rank cutoff",
            {"x0": x0, "values": [float(s) for s in sing[straddle]]},
        )
    rank = int(np.sum(sing > cutoff))
    return null @ vh[:rank].conj().T


def unconfined_states_at(graph: ScatteringGraph, x0: float) -> List[UnconfinedState]:
    """Orthonormal (lattice inner product) unconfined bound states at x0 in (-1, 1)"""
    vecs = _unconfined_part(graph, _null_space(graph, x0, "bound state"), x0)
    if vecs.shape[1] == 0:
        return []
    # lattice Gram matrix: attachment amplitudes repeat down the path as x0^(x-1)
    weight = np.ones(graph.size)
    weight[: graph.n] = 1.0 / (1.0 - x0 * x0)
    gram = vecs.conj().T @ (weight[:, None] * vecs)
    _, rotation = linalg.eigh(0.5 * (gram + gram.conj().T))
    vecs = vecs @ rotation

    states = []
    for col in range(vecs.shape[1]):
        alpha = vecs[: graph.n, col]
        beta = vecs[graph.n:, col]
        states.append(UnconfinedState(
            x0=x0,
            energy=x0 + 1.0 / x0,
            alpha=alpha,
            beta=beta,
            norm_const=normalization(alpha, beta, x0),
        ))
    return states


def normalization(alpha: np.ndarray, beta: np.ndarray, x0: float) -> float:
    """N_v = (‖α‖²/(1 - x0²) + ‖β‖²)^(-1/2)"""
    total = np.vdot(alpha, alpha).real / (1.0 - x0 * x0) + np.vdot(beta, beta).real
    return float(total ** -0.5)


def half_bound_states_at(graph: ScatteringGraph, x0: float) -> List[HalfBoundState]:
    vecs = _unconfined_part(graph, _null_space(graph, x0, "half-bound state"), x0)
    return [HalfBoundState(x0, vecs[: graph.n, c], vecs[graph.n:, c]) for c in range(vecs.shape[1])]


def census_for(graph: ScatteringGraph, trim_threshold: float = DEFAULT_TRIM) -> RootCensus:
    return root_census(w_polynomial(graph, trim_threshold), graph.tolerances)


def bound_state_catalog(graph: ScatteringGraph, census: Optional[RootCensus] = None) -> BoundStateCatalog:
    """All bound and half-bound states, located from the real roots of W"""
    census = census or census_for(graph)
    catalog = BoundStateCatalog(confined=confined_states(graph))
    window = 10.0 * graph.tolerances.eps_snap

    for root in census.of_class(RootClass.INSIDE_REAL):
        x0 = _polish_root(graph, root.value.real, window)
        catalog.unconfined.extend(unconfined_states_at(graph, x0))
    for root in census.of_class(RootClass.AT_PLUS_MINUS_ONE):
        catalog.half_bound.extend(half_bound_states_at(graph, root.value.real))

    logger.debug("Catalog: n_c=%d n_b=%d n_h=%d", catalog.n_c, catalog.n_b, catalog.n_h)
    return catalog


# ------------------------------------------------------- identity checks

@dataclass(frozen=True)
class RootCountReport:
    alpha1: int
    alpha2: int
    alpha3: int
    n_b: int
    n_h: int
    dim_c_greater: int
    dim_c_less: int
    dim_c_equal: int
    identities: Dict[str, bool]
    alpha_side: float
    state_side: float
    passed: bool
    thresholds: Dict[str, Tuple[int, int]] = field(default_factory=dict)


def threshold_multiplicities(census: RootCensus, catalog: BoundStateCatalog) -> Dict[str, Tuple[int, int]]:
    """(order of W at ±1, half-bound count + 2 dim C_= at that threshold) per threshold"""
    out = {}
    for target in (1.0, -1.0):
        found = sum(r.multiplicity for r in census.of_class(RootClass.AT_PLUS_MINUS_ONE)
                    if r.value.real == target)
        half = sum(1 for h in catalog.half_bound if round(h.x0) == target)
        equal = sum(1 for c in catalog.confined
                    if c.cls == ConfinedClass.C_EQUAL and math.copysign(1.0, c.lambda_c) == target)
        out[f"{target:+g}"] = (found, half + 2 * equal)
    return out


def lemma3_check(graph: ScatteringGraph, census: Optional[RootCensus] = None,
                 catalog: Optional[BoundStateCatalog] = None) -> RootCountReport:
    """α₁ = n_b + dim C_>, α₂ = dim C_<, α₃ = n_h + 2 dim C_="""
    census = census or census_for(graph)
    catalog = catalog or bound_state_catalog(graph, census)
    identities = {
        "alpha1": census.alpha1 == catalog.n_b + catalog.dim_c_greater,
        "alpha2": census.alpha2 == catalog.dim_c_less,
        "alpha3": census.alpha3 == catalog.n_h + 2 * catalog.dim_c_equal,
    }
    alpha_side = census.alpha1 + census.alpha2 + 0.5 * census.alpha3
    state_side = catalog.bound_state_count
    identities["combined"] = alpha_side == state_side
    thresholds = threshold_multiplicities(census, catalog)
    identities["thresholds"] = all(found == expected for found, expected in thresholds.values())
    return RootCountReport(
        alpha1=census.alpha1, alpha2=census.alpha2, alpha3=census.alpha3,
        n_b=catalog.n_b, n_h=catalog.n_h,
        dim_c_greater=catalog.dim_c_greater, dim_c_less=catalog.dim_c_less,
        dim_c_equal=catalog.dim_c_equal,
        identities=identities, alpha_side=alpha_side, state_side=state_side,
        passed=all(identities.values()),
        thresholds=thresholds,
    )


def confined_root_check(graph: ScatteringGraph, census: RootCensus,
                        confined: Optional[List[ConfinedState]] = None) -> float:
    """Distance from each C_> root z_c to the nearest inside-disk census root"""
    confined = confined if confined is not None else confined_states(graph)
    inside = [r.value for r in census.of_class(RootClass.INSIDE_REAL)]
    worst = 0.0
    for state in confined:
        if state.cls != ConfinedClass.C_GREATER:
            continue
        lam = state.lambda_c
        z_c = 0.5 * (lam - math.sqrt(lam * lam - 4.0))
        if abs(z_c) > 1.0:
            z_c = 1.0 / z_c
        worst = max(worst, min((abs(z_c - r) for r in inside), default=math.inf))
    return worst


def circle_null_vectors_confined(graph: ScatteringGraph, census: RootCensus) -> float:
    """Max ‖P̂_n v‖ over null vectors of γ(z) at non-real unit-circle roots"""
    worst = 0.0
    for root in census.of_class(RootClass.ON_CIRCLE):
        g = gamma(graph, root.value)
        _, sing, vh = linalg.svd(g)
        cutoff = graph.tolerances.eps_rank * max(1.0, float(sing[0]))
        null = vh[sing <= cutoff].conj().T
        if null.shape[1]:
            worst = max(worst, float(np.max(np.linalg.norm(null[: graph.n], axis=0))))
    return worst


# ---------------------------------------------------------- eigenbranches

@dataclass(eq=False)
class EigenbranchTable:
    grid: np.ndarray
    values: np.ndarray          # (len(grid), branches)
    vectors: np.ndarray         # (len(grid), m+n, branches), full-space vectors
    confined: List[ConfinedState]
    min_overlap: float

    @property
    def branch_count(self) -> int:
        return self.values.shape[1]

    def reconstruct(self, graph: ScatteringGraph, t: int) -> np.ndarray:
        """Σ e_i |v_i⟩⟨v_i| + Σ_c (xλ_c - x² - 1)|ψ_c⟩⟨ψ_c| at grid point t"""
        x = self.grid[t]
        v = self.vectors[t]
        out = (v * self.values[t]) @ v.conj().T
        for state in self.confined:
            psi = np.zeros(graph.size, dtype=complex)
            psi[graph.n:] = state.beta
            out = out + (x * state.lambda_c - x * x - 1.0) * np.outer(psi, psi.conj())
        return out


def _align_degenerate(evals: np.ndarray, evecs: np.ndarray, prev: np.ndarray, tol: float) -> np.ndarray:
    """Rotate inside each degenerate eigenspace towards the previous vectors"""
    out = evecs.copy()
    start = 0
    while start < len(evals):
        stop = start + 1
        while stop < len(evals) and evals[stop] - evals[stop - 1] <= tol:
            stop += 1
        if stop - start > 1:
            block = evecs[:, start:stop]
            proj = block.conj().T @ prev
            chosen = np.argsort(-np.linalg.norm(proj, axis=0))[: stop - start]
            left, _, right = linalg.svd(proj[:, chosen])
            out[:, start:stop] = block @ (left @ right)
        start = stop
    return out


def eigenbranches(graph: ScatteringGraph, grid_size: int = 201, delta: float = 0.1) -> EigenbranchTable:
    """Eigenvalues of the deflated γ(x) on [-1-δ, 1+δ], matched by overlap"""
    if grid_size < 16:
        raise DomainError("grid_size must be at least 16", {"grid_size": grid_size})
    grid = np.linspace(-1.0 - delta, 1.0 + delta, grid_size)
    u, _ = _deflation(graph)
    confined = confined_states(graph)
    r = u.shape[1]

    values = np.zeros((grid_size, r))
    vectors = np.zeros((grid_size, graph.size, r), dtype=complex)
    prev = None
    min_overlap = 1.0
    for t, x in enumerate(grid):
        g, _ = _deflated_gamma(graph, x)
        evals, evecs = linalg.eigh(g)
        if prev is not None:
            scale = max(1.0, float(np.max(np.abs(evals))))
            evecs = _align_degenerate(evals, evecs, prev, EIGEN_CLUSTER * scale)
            overlap = np.abs(prev.conj().T @ evecs)
            order = np.empty(r, dtype=int)
            work = overlap.copy()
            for _ in range(r):
                i, j = np.unravel_index(np.argmax(work), work.shape)
                if overlap[i, j] < 0.7:
                    raise MatchingAmbiguous(
                        "Eigenvector overlap below 0.7; refine the grid",
                        {"x": float(x), "overlap": float(overlap[i, j]), "grid_size": grid_size},
                    )
                order[i] = j
                min_overlap = min(min_overlap, float(overlap[i, j]))
                work[i, :] = -1.0
                work[:, j] = -1.0
            evals = evals[order]
            evecs = evecs[:, order]
            phases = np.sum(prev.conj() * evecs, axis=0)
            evecs = evecs * (np.abs(phases) / np.where(phases == 0, 1.0, phases))
        values[t] = evals
        vectors[t] = u @ evecs
        prev = evecs

    return EigenbranchTable(grid, values, vectors, confined, min_overlap)


@dataclass(frozen=True)
class BranchCrossing:
    x0: float
    order: int
    multiplicity: int


@dataclass(frozen=True)
class DerivativeReport:
    x0: float
    order: int
    analytic: float
    hellmann_feynman: float
    finite_difference: float
    sign_ok: bool
    passed: bool


def _zero_branches(graph: ScatteringGraph, x0: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    g, u = _deflated_gamma(graph, x0)
    evals, evecs = linalg.eigh(g)
    scale = max(1.0, float(np.max(np.abs(evals))))
    mask = np.abs(evals) <= ZERO_BRANCH * scale
    return evals, evecs[:, mask], u


def find_crossings(graph: ScatteringGraph, census: Optional[RootCensus] = None) -> List[BranchCrossing]:
    """Zeros of the deflated eigenbranches at real roots of W in [-1, 1]"""
    census = census or census_for(graph)
    window = 10.0 * graph.tolerances.eps_snap
    crossings = []
    for root in census.roots:
        if root.cls not in (RootClass.INSIDE_REAL, RootClass.AT_PLUS_MINUS_ONE):
            continue
        x0 = root.value.real
        if root.cls == RootClass.INSIDE_REAL:
            x0 = _polish_root(graph, x0, window)
        _, null, _ = _zero_branches(graph, x0)
        for order in range(null.shape[1]):
            crossings.append(BranchCrossing(x0, order, null.shape[1]))
    return crossings


def derivative_check(graph: ScatteringGraph, x0: float, order: int = 0, h: float = 1e-5) -> DerivativeReport:
    """de/dx at a zero crossing: closed form vs central finite difference"""
    _, null, u = _zero_branches(graph, x0)
    d = null.shape[1]
    if order >= d:
        raise NoCrossing("No eigenbranch vanishes here", {"x0": x0, "order": order, "zero_branches": d})

    # degenerate zeros: the analytic branches diagonalize dγ/dx on the null space
    basis = u @ null
    slope_matrix = basis.conj().T @ gamma_derivative(graph, x0) @ basis
    slopes, rot = linalg.eigh(0.5 * (slope_matrix + slope_matrix.conj().T))
    v = basis @ rot[:, order]
    p_weight = float(np.real(v.conj() @ projector_pn(graph) @ v))
    analytic = (1.0 / x0 - x0) + x0 * p_weight

    near_plus = _closest_to_zero(graph, x0 + h, d)
    near_minus = _closest_to_zero(graph, x0 - h, d)
    fd = (near_plus[order] - near_minus[d - 1 - order]) / (2.0 * h)

    sign_ok = True
    if abs(x0) < 1.0:
        sign_ok = analytic != 0.0 and math.copysign(1.0, analytic) == math.copysign(1.0, x0)
    agree = abs(analytic - fd) <= 1e-6 * (1.0 + abs(analytic))
    return DerivativeReport(
        x0=x0, order=order, analytic=analytic, hellmann_feynman=float(slopes[order]),
        finite_difference=float(fd), sign_ok=sign_ok,
        passed=agree and analytic != 0.0 and sign_ok,
    )


def _closest_to_zero(graph: ScatteringGraph, x: float, count: int) -> np.ndarray:
    g, _ = _deflated_gamma(graph, x)
    evals = linalg.eigvalsh(g)
    return np.sort(evals[np.argsort(np.abs(evals))[:count]])


def inside_roots_real(census: RootCensus, tol: Optional[ToleranceConfig] = None) -> float:
    """Largest imaginary part of an unsnapped root strictly inside the disk"""
    tol = tol or ToleranceConfig()
    return census.raw_inside_max_imag(tol.eps_snap)


def det_s_from_w(w: WPolynomial, z: complex, m: int, n: int) -> complex:
    """det S(z) = (-1)^n z^(2m) W(1/z) / W(z)"""
    z = complex(z)
    return complex((-1) ** n * z ** (2 * m) * w(1.0 / z) / w(z))
