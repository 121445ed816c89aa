"""
Small gadgets with hand-derived S-matrices and bound-state counts, plus
the seeded random gadget generator used by the fuzz suite.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from .graph_model import ScatteringGraph, ToleranceConfig


def _graph(n: int, m: int, edges: Dict[tuple, complex], name: str,
           tolerances: Optional[ToleranceConfig] = None) -> ScatteringGraph:
    hhat = np.zeros((n + m, n + m), dtype=complex)
    for (i, j), value in edges.items():
        hhat[i, j] = value
        hhat[j, i] = np.conj(value)
    return ScatteringGraph(n, m, hhat, tolerances or ToleranceConfig(), name)


def g0() -> ScatteringGraph:
    """A single attachment vertex, no edges: S = -1"""
    return _graph(1, 0, {}, "g0")


def g1(c: float) -> ScatteringGraph:
    """Self-loop of weight c on the attachment vertex"""
    return _graph(1, 0, {(0, 0): c}, f"g1_c{c:g}")


def g2() -> ScatteringGraph:
    """Two attachment vertices joined by an edge: S = X/z"""
    return _graph(2, 0, {(0, 1): 1.0}, "g2")


def g3() -> ScatteringGraph:
    """Two attachment vertices through one internal vertex: S = X"""
    return _graph(2, 1, {(0, 2): 1.0, (1, 2): 1.0}, "g3")


def g4() -> ScatteringGraph:
    """One attachment vertex with two internal leaves: S = 1, one confined state"""
    return _graph(1, 2, {(0, 1): 1.0, (0, 2): 1.0}, "g4")


@dataclass(frozen=True)
class Expected:
    build: Callable[[], ScatteringGraph]
    s: Callable[[complex], np.ndarray]
    n_b: int
    n_c: int
    n_h: int
    winding: int


def _s_g1(c: float) -> Callable[[complex], np.ndarray]:
    return lambda z: np.array([[-(z - c) / (z * (1.0 - c * z))]])


X = np.array([[0.0, 1.0], [1.0, 0.0]])

EXPECTED: Dict[str, Expected] = {
    "g0": Expected(g0, lambda z: np.array([[-1.0 + 0j]]), 0, 0, 0, 0),
    "g1_c3": Expected(lambda: g1(3.0), _s_g1(3.0), 1, 0, 0, -2),
    "g1_c0.5": Expected(lambda: g1(0.5), _s_g1(0.5), 0, 0, 0, 0),
    "g1_c1": Expected(lambda: g1(1.0), _s_g1(1.0), 0, 0, 1, -1),
    "g2": Expected(g2, lambda z: X / z, 0, 0, 2, -2),
    "g3": Expected(g3, lambda z: X.astype(complex), 0, 0, 2, 0),
    "g4": Expected(g4, lambda z: np.array([[1.0 + 0j]]), 0, 1, 2, 0),
}


def random_gadget(
    rng: np.random.Generator,
    n: int,
    m: int,
    weight: float = 2.0,
    complex_weights: bool = True,
    tolerances: Optional[ToleranceConfig] = None,
    name: str = "",
) -> ScatteringGraph:
    """Dense Hermitian gadget, entries uniform in [-weight, weight]"""
    size = n + m
    hhat = rng.uniform(-weight, weight, (size, size)).astype(complex)
    if complex_weights:
        hhat += 1j * rng.uniform(-weight, weight, (size, size))
    hhat = np.triu(hhat, 1)
    hhat = hhat + hhat.conj().T + np.diag(rng.uniform(-weight, weight, size))
    return ScatteringGraph(n, m, hhat, tolerances or ToleranceConfig(), name or f"random_n{n}_m{m}")
