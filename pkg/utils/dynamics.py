"""
Wave-packet scattering on a truncated lattice, evolved by exact
diagonalization and compared against |S_{j'j}|².
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .errors import DomainError, PacketNotCleared, TruncationTooSmall, ValidationError
from .graph_model import ScatteringGraph
from .smatrix import s_matrix, sample_on_circle

logger = logging.getLogger(__name__)

PACKET_WIDTHS = 6.0
AVERAGE_NODES = 241
EDGE_GAP = 1e-6


def site_index(graph: ScatteringGraph, L: int, x: int, path: int) -> int:
    """Row of path site (x, path) in the truncated Hamiltonian"""
    if x == 1:
        return path
    return graph.size + path * (L - 1) + (x - 2)


def truncate(graph: ScatteringGraph, L: int) -> np.ndarray:
    """Ĥ plus unit hopping along each path, cut after site x = L"""
    if L < 2:
        raise DomainError("Truncation length must be at least 2", {"L": L})
    size = graph.size + graph.n * (L - 1)
    h = np.zeros((size, size), dtype=complex)
    h[: graph.size, : graph.size] = graph.hhat
    for j in range(graph.n):
        for x in range(1, L):
            a, b = site_index(graph, L, x, j), site_index(graph, L, x + 1, j)
            h[a, b] = h[b, a] = 1.0
    return h


def _path_rows(graph: ScatteringGraph, L: int, path: int, start: int) -> np.ndarray:
    return np.array([site_index(graph, L, x, path) for x in range(start, L + 1)])


@dataclass
class WavePacketRun:
    k0: float
    sigma_x: float
    j_in: int
    L: int
    t: float
    x0: float
    buffer: int
    outgoing_probabilities: List[float] = field(default_factory=list)
    predicted: List[float] = field(default_factory=list)
    predicted_at_k0: List[float] = field(default_factory=list)
    leakage: float = 0.0
    max_deviation: float = 0.0
    norm_defect: float = 0.0
    energy_defect: float = 0.0
    snapshots: List[Tuple[float, np.ndarray]] = field(default_factory=list, repr=False)

    @property
    def sigma_k(self) -> float:
        return 1.0 / (2.0 * self.sigma_x)

    @property
    def group_velocity(self) -> float:
        return 2.0 * abs(math.sin(self.k0))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k0": self.k0,
            "sigma_x": self.sigma_x,
            "sigma_k": self.sigma_k,
            "path": self.j_in,
            "L": self.L,
            "t": self.t,
            "x0": self.x0,
            "buffer": self.buffer,
            "outgoing_probabilities": self.outgoing_probabilities,
            "predicted": self.predicted,
            "predicted_at_k0": self.predicted_at_k0,
            "leakage": self.leakage,
            "max_deviation": self.max_deviation,
            "norm_defect": self.norm_defect,
            "energy_defect": self.energy_defect,
        }


def initial_packet(graph: ScatteringGraph, L: int, k0: float, sigma_x: float, x0: float, j_in: int) -> np.ndarray:
    """Normalized Gaussian e^{-ik0 x} e^{-(x-x0)²/(4σ²)} on path j_in, moving inward"""
    psi = np.zeros(graph.size + graph.n * (L - 1), dtype=complex)
    xs = np.arange(1, L + 1)
    amps = np.exp(-1j * k0 * xs) * np.exp(-((xs - x0) ** 2) / (4.0 * sigma_x ** 2))
    psi[_path_rows(graph, L, j_in, 1)] = amps
    return psi / np.linalg.norm(psi)


def packet_averaged_probabilities(graph: ScatteringGraph, k0: float, sigma_x: float, j_in: int,
                                  nodes: int = AVERAGE_NODES) -> List[float]:
    """Σ_k w(k) |S_{j,j_in}(k)|² over the packet's Gaussian momentum weights, σ_k = 1/(2σ_x)"""
    sigma_k = 1.0 / (2.0 * sigma_x)
    lo = max(k0 - PACKET_WIDTHS * sigma_k, -math.pi + EDGE_GAP)
    hi = min(k0 + PACKET_WIDTHS * sigma_k, -EDGE_GAP)
    ks = np.linspace(lo, hi, nodes)
    weights = np.exp(-((ks - k0) ** 2) / (2.0 * sigma_k ** 2))
    weights /= np.sum(weights)
    step = (hi - lo) / (nodes - 1)
    out = np.zeros(graph.n)
    for k, weight in zip(ks, weights):
        s = sample_on_circle(graph, float(k), step).s
        out += weight * np.abs(s[:, j_in]) ** 2
    return [float(p) for p in out]


def _check_run(graph: ScatteringGraph, k0: float, sigma_x: float, j_in: int, L: int,
               x0: float, buffer: int, measure_fraction: float) -> None:
    if not -math.pi < k0 < 0.0:
        raise DomainError("Carrier momentum must lie in (-π, 0)", {"k0": k0})
    if not 0 <= j_in < graph.n:
        raise ValidationError("Path index out of range", {"path": j_in, "n": graph.n})
    if sigma_x <= 0:
        raise DomainError("Packet width must be positive", {"sigma_x": sigma_x})
    spread = PACKET_WIDTHS * sigma_x
    if x0 + spread > L or x0 - spread < buffer or measure_fraction * L + spread > L:
        raise TruncationTooSmall(
            "Packet does not fit the truncated paths",
            {"L": L, "x0": x0, "sigma_x": sigma_x, "buffer": buffer, "measure_fraction": measure_fraction},
        )
    sigma_k = PACKET_WIDTHS / (2.0 * sigma_x)
    if abs(k0) - sigma_k <= 0.0 or abs(k0) + sigma_k >= math.pi:
        logger.warning("Momentum support of the packet leaves (-π, 0) at k0=%.3f", k0)


def scatter_packet(
    graph: ScatteringGraph,
    k0: float,
    sigma_x: float = 10.0,
    j_in: int = 0,
    L: int = 400,
    x0: Optional[float] = None,
    t: Optional[float] = None,
    buffer: int = 20,
    measure_fraction: float = 0.7,
    leakage_threshold: float = 0.05,
    snapshot_times: Sequence[float] = (),
) -> WavePacketRun:
    """Send a packet down path j_in and measure what leaves on each path"""
    x0 = float(L) / 2.0 if x0 is None else float(x0)
    _check_run(graph, k0, sigma_x, j_in, L, x0, buffer, measure_fraction)
    v_g = 2.0 * abs(math.sin(k0))
    if t is None:
        t = (x0 + measure_fraction * L) / v_g

    h = truncate(graph, L)
    energies, modes = linalg.eigh(h)
    psi0 = initial_packet(graph, L, k0, sigma_x, x0, j_in)
    coeffs = modes.conj().T @ psi0

    def evolve(time: float) -> np.ndarray:
        return modes @ (np.exp(-1j * energies * time) * coeffs)

    psi = evolve(t)
    norm_defect = abs(float(np.linalg.norm(psi)) - 1.0)
    e_start = float(np.real(np.vdot(psi0, h @ psi0)))
    e_end = float(np.real(np.vdot(psi, h @ psi)))
    energy_defect = abs(e_end - e_start)
    if norm_defect > 1e-10 or energy_defect > 1e-10:
        logger.warning("Evolution drift: norm %.3e, energy %.3e", norm_defect, energy_defect)

    outgoing = []
    for j in range(graph.n):
        rows = _path_rows(graph, L, j, buffer + 1)
        outgoing.append(float(np.sum(np.abs(psi[rows]) ** 2)))
    leakage = max(0.0, 1.0 - sum(outgoing))

    s = s_matrix(graph, cmath.exp(1j * k0), crosscheck=False).s
    at_k0 = [float(abs(s[j, j_in]) ** 2) for j in range(graph.n)]
    predicted = packet_averaged_probabilities(graph, k0, sigma_x, j_in)

    run = WavePacketRun(
        k0=k0, sigma_x=sigma_x, j_in=j_in, L=L, t=t, x0=x0, buffer=buffer,
        outgoing_probabilities=outgoing,
        predicted=predicted,
        predicted_at_k0=at_k0,
        leakage=leakage,
        max_deviation=max(abs(a - b) for a, b in zip(outgoing, predicted)),
        norm_defect=norm_defect,
        energy_defect=energy_defect,
        snapshots=[(float(ts), np.abs(evolve(ts)) ** 2) for ts in snapshot_times],
    )
    if leakage > leakage_threshold:
        raise PacketNotCleared(
            "Packet has not cleared the scattering region at measurement time",
            {"leakage": leakage, "t": t, "threshold": leakage_threshold},
        )
    logger.debug("Packet k0=%.3f: outgoing=%s predicted=%s", k0, outgoing, predicted)
    return run


def snapshot_rows(graph: ScatteringGraph, run: WavePacketRun) -> List[List[Any]]:
    """(t, path, x, |ψ|²) rows for CSV; internal vertices use path -1"""
    rows = []
    for time, density in run.snapshots:
        for j in range(graph.n):
            for x in range(1, run.L + 1):
                rows.append([time, j, x, float(density[site_index(graph, run.L, x, j)])])
        for i in range(graph.m):
            rows.append([time, -1, i, float(density[graph.n + i])])
    return rows
