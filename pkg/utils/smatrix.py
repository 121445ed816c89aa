"""
S-matrix evaluation.

The canonical path is the analytic continuation
    -γ(z)⁻¹ γ(1/z) = [[S(z), 0], [Ψ(z)/z, -1/z²]]
evaluated on the orthogonal complement of the confined subspace (which is
invariant under γ(z) for every z). The resolvent form -Q(z)⁻¹Q(1/z) is kept
as an independent cross-check.
"""

import cmath
import functools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .errors import DomainError, GammaSingular, ResolventSingular, ValidationError, ZeroArgument
from .graph_model import InternalSite, PathSite, ScatteringGraph, Vertex, lattice_residual

logger = logging.getLogger(__name__)

COND_LIMIT = 1e12
QFORM_COND_LIMIT = 1e10
FORM_AGREEMENT = 1e-9


class Method(str, Enum):
    CONTINUATION = "ContinuationForm"
    QFORM = "QForm"


@dataclass(frozen=True, eq=False)
class SMatrixSample:
    z: complex
    s: np.ndarray
    psi: np.ndarray
    det_s: complex
    method: Method
    k: Optional[float] = None
    crosscheck: Optional[float] = None
    block_check: Optional[float] = None

    @property
    def on_circle(self) -> bool:
        return self.k is not None

    def unitarity_defect(self) -> float:
        n = self.s.shape[0]
        return float(np.max(np.abs(self.s.conj().T @ self.s - np.eye(n))))


def gamma(graph: ScatteringGraph, z: complex) -> np.ndarray:
    """γ(z) = z²(P̂_n - 1) + zĤ - 1"""
    g = z * np.asarray(graph.hhat, dtype=complex)
    idx = np.arange(graph.size)
    g[idx[: graph.n], idx[: graph.n]] -= 1.0
    g[idx[graph.n:], idx[graph.n:]] -= z * z + 1.0
    return g


def gamma_derivative(graph: ScatteringGraph, x: float) -> np.ndarray:
    """dγ/dx = Ĥ - 2x(1 - P̂_n)"""
    g = np.array(graph.hhat, dtype=complex)
    idx = np.arange(graph.n, graph.size)
    g[idx, idx] -= 2.0 * x
    return g


def q_matrix(graph: ScatteringGraph, z: complex) -> np.ndarray:
    """Q(z) = 1 - z(A + B†(1/z + z - D)⁻¹B)"""
    if z == 0:
        raise ZeroArgument("Q(z) is undefined at z = 0")
    n = graph.n
    inner = np.array(graph.A, dtype=complex)
    if graph.m:
        energy = 1.0 / z + z
        d_eigs = np.linalg.eigvalsh(graph.D)
        margin = graph.tolerances.eps_rank * max(1.0, float(np.max(np.abs(d_eigs))))
        gap = float(np.min(np.abs(d_eigs - energy)))
        if gap <= margin:
            raise ResolventSingular(
                "1/z + z is an eigenvalue of D",
                {"z": [z.real, z.imag] if isinstance(z, complex) else [float(z), 0.0], "gap": gap},
            )
        resolvent_b = linalg.solve(energy * np.eye(graph.m) - graph.D, graph.B)
        inner = inner + graph.B.conj().T @ resolvent_b
    return np.eye(n) - z * inner


@functools.lru_cache(maxsize=128)
def _deflation(graph: ScatteringGraph) -> Tuple[np.ndarray, np.ndarray]:
    """(U, C): orthonormal bases of C⊥ and of the confined subspace C

    Cached per graph object (graphs hash by identity), so the last 128 graphs
    stay alive for the life of the process.
    """
    from .spectra import confined_states

    confined = confined_states(graph)
    if not confined:
        return np.eye(graph.size, dtype=complex), np.zeros((graph.size, 0), dtype=complex)
    c = np.zeros((graph.size, len(confined)), dtype=complex)
    for col, state in enumerate(confined):
        c[graph.n:, col] = state.beta
    u = linalg.null_space(c.conj().T)
    return u.astype(complex), c


def continuation_block(graph: ScatteringGraph, z: complex) -> np.ndarray:
    """-γ(z)⁻¹γ(1/z) on the full gadget space"""
    if z == 0:
        raise ZeroArgument("The continuation form is undefined at z = 0")
    u, c = _deflation(graph)
    g = u.conj().T @ gamma(graph, z) @ u
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise GammaSingular(
            "γ(z) is singular on the unconfined subspace",
            {"z": [complex(z).real, complex(z).imag], "cond": float(cond) if np.isfinite(cond) else None},
        )
    g_inv_z = u.conj().T @ gamma(graph, 1.0 / z) @ u
    block = -linalg.lu_solve(linalg.lu_factor(g), g_inv_z)
    full = u @ block @ u.conj().T
    if c.shape[1]:
        full -= (c @ c.conj().T) / (z * z)
    return full


def _circle_k(z: complex) -> Optional[float]:
    if abs(abs(z) - 1.0) <= 1e-14:
        return float(cmath.phase(z))
    return None


def s_matrix(graph: ScatteringGraph, z: complex, crosscheck: bool = True) -> SMatrixSample:
    """S(z) from the continuation form, with the Q-form cross-check where defined"""
    z = complex(z)
    n = graph.n
    full = continuation_block(graph, z)
    s = full[:n, :n]
    psi = z * full[n:, :n]

    block_check = None
    if graph.m:
        lower_right = full[n:, n:]
        block_check = float(np.max(np.abs(lower_right + np.eye(graph.m) / (z * z))))
        if block_check > FORM_AGREEMENT * max(1.0, 1.0 / abs(z) ** 2):
            logger.warning("Lower-right block deviates from -1/z² by %.3e at z=%s", block_check, z)

    qdev = None
    if crosscheck:
        qdev = _qform_deviation(graph, z, s)

    return SMatrixSample(
        z=z,
        s=s,
        psi=psi,
        det_s=complex(linalg.det(s)),
        method=Method.CONTINUATION,
        k=_circle_k(z),
        crosscheck=qdev,
        block_check=block_check,
    )


def _qform_deviation(graph: ScatteringGraph, z: complex, s: np.ndarray) -> Optional[float]:
    try:
        q = q_matrix(graph, z)
        q_inv = q_matrix(graph, 1.0 / z)
    except ResolventSingular:
        return None
    if np.linalg.cond(q) > QFORM_COND_LIMIT:
        return None
    s_q = -linalg.solve(q, q_inv)
    deviation = float(np.max(np.abs(s_q - s)))
    if deviation > FORM_AGREEMENT * (1.0 + float(np.max(np.abs(s)))):
        logger.warning("Q-form and continuation form disagree by %.3e at z=%s", deviation, z)
    return deviation


def s_matrix_qform(graph: ScatteringGraph, z: complex) -> SMatrixSample:
    """S(z) = -Q(z)⁻¹Q(1/z), Ψ from the resolvent of D"""
    z = complex(z)
    q = q_matrix(graph, z)
    q_inv = q_matrix(graph, 1.0 / z)
    s = -linalg.solve(q, q_inv)
    if graph.m:
        rhs = graph.B / z + z * (graph.B @ s)
        psi = linalg.solve((1.0 / z + z) * np.eye(graph.m) - graph.D, rhs)
    else:
        psi = np.zeros((0, graph.n), dtype=complex)
    return SMatrixSample(
        z=z, s=s, psi=psi, det_s=complex(linalg.det(s)), method=Method.QFORM, k=_circle_k(z)
    )


def sample_on_circle(graph: ScatteringGraph, k: float, step: float, crosscheck: bool = False) -> SMatrixSample:
    """S(e^{ik}), moving k by half a grid step if γ is singular there"""
    try:
        return s_matrix(graph, cmath.exp(1j * k), crosscheck)
    except GammaSingular:
        jittered = k + 0.5 * step
        logger.debug("Jittering singular energy k=%.6f to %.6f", k, jittered)
        return s_matrix(graph, cmath.exp(1j * jittered), crosscheck)


def _check_momentum(k: float) -> None:
    if not -math.pi < k < 0:
        raise DomainError("Incoming momentum must lie in (-π, 0)", {"k": k})


def _check_path(graph: ScatteringGraph, j: int) -> None:
    if not 0 <= j < graph.n:
        raise ValidationError("Path index out of range", {"path": j, "n": graph.n})


def scattering_amplitudes(graph: ScatteringGraph, sample: SMatrixSample, sites: Sequence[Vertex]) -> np.ndarray:
    """⟨v|sc_j⟩ for every site v (rows) and incoming path j (columns)"""
    z = sample.z
    out = np.zeros((len(sites), graph.n), dtype=complex)
    for row, site in enumerate(sites):
        if isinstance(site, InternalSite):
            out[row] = sample.psi[site.index]
        else:
            out[row] = z ** site.x * sample.s[site.path]
            out[row, site.path] += z ** (-site.x)
    return out


def scattering_amplitude(graph: ScatteringGraph, k: float, j: int, vertex: Vertex) -> complex:
    """⟨vertex|sc_j(k)⟩ for k in (-π, 0)"""
    _check_momentum(k)
    _check_path(graph, j)
    if isinstance(vertex, PathSite):
        _check_path(graph, vertex.path)
        if vertex.x < 1:
            raise ValidationError("Path sites start at x = 1", {"x": vertex.x})
    else:
        graph.index_of(vertex)
    sample = s_matrix(graph, cmath.exp(1j * k), crosscheck=False)
    return complex(scattering_amplitudes(graph, sample, [vertex])[0, j])


def verify_scattering_state(graph: ScatteringGraph, k: float, j: int, x_cut: int) -> float:
    """Eigenvalue-equation residual of sc_j(k) on a lattice cut at x_cut"""
    _check_momentum(k)
    _check_path(graph, j)
    if x_cut < 3:
        raise DomainError("x_cut must be at least 3", {"x_cut": x_cut})
    sample = s_matrix(graph, cmath.exp(1j * k), crosscheck=False)
    z = sample.z
    gadget = np.concatenate([z * sample.s[:, j], sample.psi[:, j]])
    gadget[j] += 1.0 / z

    def tail(x: int, jp: int) -> complex:
        return z ** x * sample.s[jp, j] + (z ** (-x) if jp == j else 0.0)

    return lattice_residual(graph, gadget, tail, 2.0 * math.cos(k), x_cut)


def circle_table(graph: ScatteringGraph, n_points: int) -> List[SMatrixSample]:
    """Samples on a uniform k-grid over [-π, π) for CSV output"""
    step = 2.0 * math.pi / n_points
    return [sample_on_circle(graph, -math.pi + t * step, step) for t in range(n_points)]


def pole_scan(
    graph: ScatteringGraph,
    radii: Iterable[float],
    n_angles: int = 256,
    threshold: float = 1e3,
) -> List[Tuple[complex, float]]:
    """
    Sample max|S_ij| on a polar grid and return local peaks above threshold.
    Points where γ is numerically singular count as infinite magnitude.
    """
    radii = np.asarray(list(radii), dtype=float)
    angles = -math.pi + 2.0 * math.pi * np.arange(n_angles) / n_angles
    mags = np.zeros((len(radii), n_angles))
    for a, r in enumerate(radii):
        for b, phi in enumerate(angles):
            try:
                mags[a, b] = float(np.max(np.abs(s_matrix(graph, r * cmath.exp(1j * phi), False).s)))
            except GammaSingular:
                mags[a, b] = np.inf

    peaks = []
    for a in range(len(radii)):
        for b in range(n_angles):
            value = mags[a, b]
            if value < threshold:
                continue
            neighbours = [mags[a, (b - 1) % n_angles], mags[a, (b + 1) % n_angles]]
            if a > 0:
                neighbours.append(mags[a - 1, b])
            if a + 1 < len(radii):
                neighbours.append(mags[a + 1, b])
            if all(value >= v for v in neighbours):
                peaks.append((radii[a] * cmath.exp(1j * angles[b]), value))
    return peaks
