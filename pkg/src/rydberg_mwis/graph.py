"""Weighted graphs, the classical MWIS cost and an exhaustive MWIS solver.

Configurations are written as bitstrings whose ``i``-th character is the
occupation ``n_i`` of vertex ``i`` (``"1"`` = in the set = Rydberg atom).
When a configuration is packed into an integer basis index, bit ``i`` of the
index is ``n_i`` (vertex 0 is the least significant bit).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, InstanceError, ParameterError

MAX_BRUTE_FORCE_VERTICES = 24
_CHUNK = 1 << 18
COST_TOL = 1e-9


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with strictly positive vertex weights."""

    weights: tuple[float, ...]
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __init__(self, weights: Iterable[float], edges: Iterable[Sequence[int]] = ()):
        w = tuple(float(x) for x in weights)
        if any(not np.isfinite(x) or x <= 0 for x in w):
            raise ParameterError(f"vertex weights must be finite and > 0, got {w}")
        n = len(w)
        norm = set()
        for e in edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise InstanceError(f"self-loop on vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise InstanceError(f"edge ({i}, {j}) out of range for {n} vertices")
            pair = (min(i, j), max(i, j))
            if pair in norm:
                raise InstanceError(f"duplicate edge {pair}")
            norm.add(pair)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "edges", frozenset(norm))

    @property
    def n_vertices(self) -> int:
        return len(self.weights)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_vertices, self.n_vertices), dtype=bool)
        for i, j in self.edges:
            a[i, j] = a[j, i] = True
        return a

    def default_penalty(self) -> float:
        """Uniform edge penalty ``2 * max(w)`` (1.0 for the empty graph)."""
        return 2.0 * max(self.weights) if self.weights else 1.0

    def to_dict(self) -> dict:
        return {
            "n_vertices": self.n_vertices,
            "weights": list(self.weights),
            "edges": [list(e) for e in self.sorted_edges()],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "WeightedGraph":
        for key in ("n_vertices", "weights", "edges"):
            if key not in d:
                raise InstanceError(f"graph block is missing field '{key}'")
        if int(d["n_vertices"]) != len(d["weights"]):
            raise InstanceError(
                f"field 'weights' has {len(d['weights'])} entries but n_vertices={d['n_vertices']}"
            )
        return cls(d["weights"], d["edges"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class MwisResult:
    """All minimizers of the MWIS cost, as bitstrings in lexicographic order."""

    optimal_cost: float
    optima: tuple[str, ...]

    @property
    def optimal_weight(self) -> float:
        return -self.optimal_cost

    def to_dict(self) -> dict:
        return {"optimal_cost": self.optimal_cost, "optima": list(self.optima)}


def path_graph(weights: Sequence[float]) -> WeightedGraph:
    """Path ``0-1-...-(n-1)`` with the given weights."""
    return WeightedGraph(weights, [(i, i + 1) for i in range(len(weights) - 1)])


# -- configuration helpers ---------------------------------------------------


def as_bits(c, n: int | None = None) -> np.ndarray:
    """Coerce a bitstring, 0/1 sequence or array into an int8 vector."""
    if isinstance(c, str):
        if set(c) - {"0", "1"}:
            raise InstanceError(f"bitstring may only contain '0'/'1': {c!r}")
        bits = np.frombuffer(c.encode(), dtype=np.uint8) - ord("0")
        bits = bits.astype(np.int8)
    else:
        bits = np.asarray(c, dtype=np.int8).reshape(-1)
        if np.any((bits != 0) & (bits != 1)):
            raise InstanceError("configuration entries must be 0 or 1")
    if n is not None and bits.size != n:
        raise InstanceError(f"configuration has length {bits.size}, graph has {n} vertices")
    return bits


def to_bitstring(c) -> str:
    return "".join("1" if b else "0" for b in as_bits(c))


def index_to_bitstring(index: int, n: int) -> str:
    return "".join("1" if (index >> i) & 1 else "0" for i in range(n))


def bitstring_to_index(s: str) -> int:
    return sum(1 << i for i, ch in enumerate(s) if ch == "1")


def basis_bits(n: int, indices: np.ndarray | None = None) -> np.ndarray:
    """Occupation matrix of shape ``(len(indices), n)``; all ``2**n`` states by default."""
    if indices is None:
        indices = np.arange(1 << n, dtype=np.int64)
    return ((indices[:, None] >> np.arange(n)) & 1).astype(np.int8)


def selection(vertices: Iterable[int], n: int) -> str:
    """Bitstring selecting the given (0-indexed) vertices."""
    bits = np.zeros(n, dtype=np.int8)
    bits[list(vertices)] = 1
    return to_bitstring(bits)


# -- cost function -------------------------------------------------------------


def _check_penalty(g: WeightedGraph, u: float | None) -> float:
    if u is None:
        return g.default_penalty()
    u = float(u)
    if g.weights and not u > max(g.weights):
        raise ParameterError(f"penalty u={u} must exceed the largest weight {max(g.weights)}")
    return u


def mwis_cost(g: WeightedGraph, c, u: float | None = None) -> float:
    """Classical MWIS cost ``-sum w_i n_i + u * sum_(ij in E) n_i n_j``.

    ``u`` defaults to ``g.default_penalty()`` and must exceed every weight.
    """
    bits = as_bits(c, g.n_vertices)
    u = _check_penalty(g, u)
    reward = sum(w for w, b in zip(g.weights, bits) if b)
    violations = sum(1 for i, j in g.edges if bits[i] and bits[j])
    return -reward + u * violations


def cost_table(g: WeightedGraph, u: float | None = None) -> np.ndarray:
    """``mwis_cost`` of every basis index ``0 .. 2**n - 1``."""
    u = _check_penalty(g, u)
    n = g.n_vertices
    if n > MAX_BRUTE_FORCE_VERTICES:
        raise CapacityError(f"{n} vertices exceeds the enumeration bound {MAX_BRUTE_FORCE_VERTICES}")
    idx = np.arange(1 << n, dtype=np.int64)
    costs = -(basis_bits(n, idx) @ np.asarray(g.weights, dtype=float))
    for i, j in g.sorted_edges():
        costs += u * (((idx >> i) & (idx >> j)) & 1)
    return costs


def is_independent(g: WeightedGraph, c) -> bool:
    bits = as_bits(c, g.n_vertices)
    return not any(bits[i] and bits[j] for i, j in g.edges)


def brute_force_mwis(g: WeightedGraph, max_vertices: int = MAX_BRUTE_FORCE_VERTICES) -> MwisResult:
    """Exact MWIS by enumerating all ``2**n`` configurations.

    Returns every optimal independent set. Costs within ``COST_TOL`` (relative
    to the optimum's magnitude, floored at 1) are treated as ties.
    """
    n = g.n_vertices
    if n > max_vertices:
        raise CapacityError(f"{n} vertices exceeds the enumeration bound {max_vertices}")
    w = np.asarray(g.weights, dtype=float)
    edges = g.sorted_edges()
    total = 1 << n

    best = 0.0
    candidates: list[np.ndarray] = []
    cand_weights: list[np.ndarray] = []
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        ok = np.ones(idx.size, dtype=bool)
        for i, j in edges:
            ok &= ((idx >> i) & (idx >> j) & 1) == 0
        idx = idx[ok]
        if idx.size == 0:
            # the chunk's fixed high bits already violate an edge
            continue
        sums = basis_bits(n, idx) @ w if n else np.zeros(idx.size)
        chunk_best = sums.max()
        if chunk_best > best + COST_TOL * max(1.0, best):
            best = chunk_best
            candidates, cand_weights = [], []
        keep = sums >= best - COST_TOL * max(1.0, best)
        if keep.any():
            candidates.append(idx[keep])
            cand_weights.append(sums[keep])

    idx = np.concatenate(candidates)
    sums = np.concatenate(cand_weights)
    best = sums.max()
    idx = idx[sums >= best - COST_TOL * max(1.0, best)]
    optima = sorted(index_to_bitstring(int(k), n) for k in idx)
    return MwisResult(optimal_cost=-float(best) if best else 0.0, optima=tuple(optima))


def expectation_cost(counts: Mapping, g: WeightedGraph, u: float | None = None) -> float:
    """Count-weighted mean of ``mwis_cost`` over observed configurations."""
    u = _check_penalty(g, u)
    total = 0
    acc = 0.0
    for config, k in counts.items():
        if k < 0:
            raise InstanceError("counts must be non-negative")
        if k:
            acc += k * mwis_cost(g, config, u)
            total += k
    if total <= 0:
        raise InstanceError("expectation_cost needs at least one observed shot")
    return acc / total
