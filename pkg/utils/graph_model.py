"""
Gadget representation: the finite Hermitian graph Ĥ with n attachment
vertices (indices 0..n-1) and m internal vertices (indices n..n+m-1).
Also owns the tolerance configuration shared by all numerics.
"""

import json
import logging
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Dict, Mapping, Optional, Union

import numpy as np

from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToleranceConfig:
    eps_herm: float = 1e-12
    eps_rank: float = 1e-9
    eps_root_cluster: float = 1e-8
    eps_snap: float = 1e-8
    eps_unitary: float = 1e-10
    quad_target: float = 1e-8

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not np.isfinite(value) or value <= 0:
                raise ValidationError(
                    f"Tolerance {f.name} must be a positive finite number",
                    {"field": f.name, "value": value},
                )
        if self.eps_snap < self.eps_root_cluster:
            raise ValidationError(
                "eps_snap must not be smaller than eps_root_cluster",
                {"eps_snap": self.eps_snap, "eps_root_cluster": self.eps_root_cluster},
            )

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any], base: Optional["ToleranceConfig"] = None):
        """Build a config from `values` on top of `base` (or the defaults)"""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ValidationError(f"Unknown tolerance fields: {', '.join(unknown)}", {"fields": unknown})
        try:
            overrides = {k: float(v) for k, v in values.items()}
        except (TypeError, ValueError) as e:
            raise ValidationError(f"Tolerance values must be numbers: {e}")
        return replace(base or cls(), **overrides)

    def to_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class PathSite:
    """Site x on semi-infinite path `path`; x=1 is the attachment vertex."""
    x: int
    path: int

    def label(self) -> str:
        return f"({self.x},{self.path})"


@dataclass(frozen=True)
class InternalSite:
    """Internal vertex `index` in 0..m-1 (matrix index n+index)."""
    index: int

    def label(self) -> str:
        return f"w{self.index}"


Vertex = Union[PathSite, InternalSite]


@dataclass(frozen=True, eq=False)
class ScatteringGraph:
    n: int
    m: int
    hhat: np.ndarray
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("A gadget needs at least one attachment vertex", {"n": self.n})
        if self.m < 0:
            raise ValidationError("Internal vertex count must be non-negative", {"m": self.m})
        size = self.n + self.m
        hhat = np.array(self.hhat, dtype=complex)
        if hhat.shape != (size, size):
            raise ValidationError(
                f"Ĥ must be {size}x{size}", {"shape": list(hhat.shape)}
            )
        if not np.all(np.isfinite(hhat)):
            raise ValidationError("Ĥ has non-finite entries")
        scale = max(np.max(np.abs(hhat)), 1.0) if size else 1.0
        asym = np.max(np.abs(hhat - hhat.conj().T))
        if asym > self.tolerances.eps_herm * scale:
            raise ValidationError("Ĥ is not Hermitian", {"max_asymmetry": float(asym)})
        hhat.setflags(write=False)
        object.__setattr__(self, "hhat", hhat)

    @property
    def size(self) -> int:
        return self.n + self.m

    @property
    def A(self) -> np.ndarray:
        return self.hhat[: self.n, : self.n]

    @property
    def B(self) -> np.ndarray:
        return self.hhat[self.n:, : self.n]

    @property
    def D(self) -> np.ndarray:
        return self.hhat[self.n:, self.n:]

    def with_tolerances(self, tolerances: ToleranceConfig) -> "ScatteringGraph":
        return ScatteringGraph(self.n, self.m, self.hhat, tolerances, self.name)

    def index_of(self, vertex: Vertex) -> int:
        """Matrix index of a gadget vertex (attachment or internal)"""
        if isinstance(vertex, InternalSite):
            if not 0 <= vertex.index < self.m:
                raise ValidationError("Internal vertex out of range", {"index": vertex.index})
            return self.n + vertex.index
        if vertex.x != 1 or not 0 <= vertex.path < self.n:
            raise ValidationError("Not a gadget vertex", {"vertex": vertex.label()})
        return vertex.path

    def summary(self) -> Dict[str, Any]:
        return {"name": self.name, "n": self.n, "m": self.m}


def projector_pn(graph: ScatteringGraph) -> np.ndarray:
    """P̂_n: 1 on the attachment vertices, 0 on internal ones"""
    diag = np.zeros(graph.size)
    diag[: graph.n] = 1.0
    return np.diag(diag)


def lattice_residual(
    graph: ScatteringGraph,
    gadget: np.ndarray,
    tail: Callable[[int, int], complex],
    energy: complex,
    x_cut: int,
) -> float:
    """
    Max |(H - E)ψ| over the gadget rows and path rows x = 2..x_cut-1.

    `gadget` holds the m+n gadget amplitudes (attachment j is site (1, j)),
    `tail(x, j)` gives the amplitude at path site x >= 2.
    """
    gadget = np.asarray(gadget, dtype=complex)
    path_amps = np.zeros((x_cut + 1, graph.n), dtype=complex)
    path_amps[1] = gadget[: graph.n]
    for x in range(2, x_cut + 1):
        for j in range(graph.n):
            path_amps[x, j] = tail(x, j)

    rows = graph.hhat @ gadget - energy * gadget
    rows[: graph.n] += path_amps[2]
    worst = float(np.max(np.abs(rows))) if rows.size else 0.0

    if x_cut >= 3:
        inner = path_amps[1:x_cut - 1] + path_amps[3:x_cut + 1] - energy * path_amps[2:x_cut]
        worst = max(worst, float(np.max(np.abs(inner))))
    return worst


def graph_from_dict(data: Mapping[str, Any], base: Optional[ToleranceConfig] = None, name: str = "") -> ScatteringGraph:
    """Validate the JSON schema and apply Hermitian completion"""
    if not isinstance(data, Mapping):
        raise ParseError("Graph file must contain a JSON object")
    try:
        n = data["n"]
        m = data["m"]
        entries = data.get("entries", [])
    except KeyError as e:
        raise ParseError(f"Missing key {e} in graph file")
    if not isinstance(n, int) or not isinstance(m, int) or isinstance(n, bool) or isinstance(m, bool):
        raise ParseError("'n' and 'm' must be integers", {"n": n, "m": m})
    if not isinstance(entries, list):
        raise ParseError("'entries' must be a list")

    tolerances = base or ToleranceConfig()
    if "tolerances" in data:
        if not isinstance(data["tolerances"], Mapping):
            raise ParseError("'tolerances' must be an object")
        tolerances = ToleranceConfig.from_mapping(data["tolerances"], tolerances)

    if n < 1:
        raise ValidationError("A gadget needs at least one attachment vertex", {"n": n})
    if m < 0:
        raise ValidationError("Internal vertex count must be non-negative", {"m": m})

    size = n + m
    given: Dict[tuple, complex] = {}
    for k, entry in enumerate(entries):
        try:
            i, j = entry["i"], entry["j"]
            value = complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Malformed entry #{k}: {e}", {"entry": k})
        if not isinstance(i, int) or not isinstance(j, int):
            raise ParseError(f"Entry #{k} indices must be integers", {"entry": k})
        if not (0 <= i < size and 0 <= j < size):
            raise ValidationError(f"Entry #{k} index out of range", {"entry": k, "i": i, "j": j, "size": size})
        if (i, j) in given:
            raise ValidationError(f"Entry ({i},{j}) given twice", {"i": i, "j": j})
        given[(i, j)] = value

    scale = max([abs(v) for v in given.values()] + [1.0])
    hhat = np.zeros((size, size), dtype=complex)
    for (i, j), value in given.items():
        if i == j:
            if abs(value.imag) > tolerances.eps_herm * scale:
                raise ValidationError("Diagonal entries must be real", {"i": i, "im": value.imag})
            hhat[i, i] = value.real
            continue
        mirror = given.get((j, i))
        if mirror is not None and abs(value - mirror.conjugate()) > tolerances.eps_herm * scale:
            raise ValidationError(
                f"Entry ({j},{i}) must be the conjugate of ({i},{j})",
                {"i": i, "j": j},
            )
        if i < j or mirror is None:
            hhat[i, j] = value
            hhat[j, i] = value.conjugate()

    return ScatteringGraph(n, m, hhat, tolerances, name)


def load_graph(path: str, base: Optional[ToleranceConfig] = None) -> ScatteringGraph:
    """Load a gadget from the graph JSON schema"""
    if not os.path.exists(path):
        raise ParseError(f"Graph file not found: {path}", {"path": path})
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid JSON in {path}: {e}", {"path": path})
    except OSError as e:
        raise ParseError(f"Could not read {path}: {e}", {"path": path})

    name = os.path.splitext(os.path.basename(path))[0]
    graph = graph_from_dict(data, base, name)
    logger.debug("Loaded %s: n=%d m=%d", path, graph.n, graph.m)
    return graph


def graph_to_dict(graph: ScatteringGraph, include_tolerances: bool = False) -> Dict[str, Any]:
    """Upper triangle only; Python floats keep the exact double value"""
    entries = []
    for i in range(graph.size):
        for j in range(i, graph.size):
            value = graph.hhat[i, j]
            if value != 0:
                entries.append({"i": i, "j": j, "re": float(value.real), "im": float(value.imag)})
    data: Dict[str, Any] = {"n": graph.n, "m": graph.m, "entries": entries}
    if include_tolerances:
        data["tolerances"] = graph.tolerances.to_dict()
    return data


def save_graph(graph: ScatteringGraph, path: str, include_tolerances: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(graph_to_dict(graph, include_tolerances), f, indent=2)
