"""Atom layouts and the embedding of logical graphs onto them.

A layout turns into a unit-disk graph (UDG): two sites are joined when they
sit within ``edge_factor * unit_distance`` of each other.  The 5-vertex
non-UDG instance used throughout the package is embedded on a 3x3 grid with
four ancilla sites whose weights are fixed by :data:`DEFAULT_ANCILLA_RULE`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import CapacityError, EmbeddingError, InstanceError, ParameterError
from .graph import (
    MAX_BRUTE_FORCE_VERTICES,
    COST_TOL,
    WeightedGraph,
    basis_bits,
    brute_force_mwis,
    to_bitstring,
    as_bits,
)

MIN_SEPARATION_UM = 0.1
DEFAULT_EDGE_FACTOR = 1.5
# Nearest neighbours only: at a = 8 um the diagonal (11.3 um) is outside the
# 10.4 um blockade radius, so the 3x3 gadget is a square-lattice UDG.
GRID_EDGE_FACTOR = 1.25
GRID_SPACING_UM = 8.0
CHAIN_SPACING_UM = 7.0


@dataclass
class AtomLayout:
    """Planar atom positions (um) with a positive weight per site."""

    positions: np.ndarray
    site_weights: np.ndarray
    unit_distance: float
    edge_factor: float = DEFAULT_EDGE_FACTOR

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        self.site_weights = np.asarray(self.site_weights, dtype=float).reshape(-1)
        if self.positions.shape[0] != self.site_weights.size:
            raise InstanceError(
                f"{self.positions.shape[0]} positions but {self.site_weights.size} site weights"
            )
        if np.any(self.site_weights <= 0) or not np.all(np.isfinite(self.site_weights)):
            raise ParameterError("site weights must be finite and > 0")
        if not self.unit_distance > 0:
            raise ParameterError("unit_distance must be > 0")
        d = self.distances()
        n = self.n_sites
        if n > 1 and d[np.triu_indices(n, 1)].min() <= MIN_SEPARATION_UM:
            raise InstanceError(f"sites closer than {MIN_SEPARATION_UM} um")

    @property
    def n_sites(self) -> int:
        return self.site_weights.size

    @property
    def r_edge(self) -> float:
        return self.edge_factor * self.unit_distance

    def distances(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.sqrt((diff**2).sum(-1))

    @property
    def blockade_edges(self) -> list[tuple[int, int]]:
        d = self.distances()
        i, j = np.triu_indices(self.n_sites, 1)
        close = d[i, j] <= self.r_edge
        return [(int(a), int(b)) for a, b in zip(i[close], j[close])]

    def with_weights(self, site_weights) -> "AtomLayout":
        return AtomLayout(self.positions.copy(), site_weights, self.unit_distance, self.edge_factor)

    def to_dict(self) -> dict:
        return {
            "positions": self.positions.tolist(),
            "site_weights": self.site_weights.tolist(),
            "unit_distance": self.unit_distance,
            "edge_factor": self.edge_factor,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "AtomLayout":
        for key in ("positions", "unit_distance"):
            if key not in d:
                raise InstanceError(f"layout block is missing field '{key}'")
        weights = d.get("site_weights", d.get("weights"))
        if weights is None:
            raise InstanceError("layout block is missing field 'site_weights'")
        return cls(d["positions"], weights, float(d["unit_distance"]),
                   float(d.get("edge_factor", DEFAULT_EDGE_FACTOR)))


def chain_layout(weights: Sequence[float], spacing: float = CHAIN_SPACING_UM) -> AtomLayout:
    pos = [(i * spacing, 0.0) for i in range(len(weights))]
    return AtomLayout(pos, weights, spacing)


def grid_positions(rows: int, cols: int, spacing: float) -> np.ndarray:
    """Row-major grid: site ``k`` sits at ``(k % cols, k // cols) * spacing``."""
    return np.array([((k % cols) * spacing, (k // cols) * spacing) for k in range(rows * cols)])


def udg_from_layout(layout: AtomLayout) -> WeightedGraph:
    return WeightedGraph(layout.site_weights, layout.blockade_edges)


# -- ancilla rules -------------------------------------------------------------

# label -> (logical vertices whose weights are summed, multiplicative factor)
AncillaRule = Mapping[str, tuple[tuple[int, ...], float]]

DEFAULT_ANCILLA_RULE: AncillaRule = {
    "alpha": ((0, 2), 0.5),
    "beta": ((1, 3, 4), 0.5),
}


def apply_ancilla_rule(rule: AncillaRule, weights: Sequence[float]) -> dict[str, float]:
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ParameterError(f"logical weights must be > 0, got {tuple(w)}")
    return {label: factor * float(w[list(members)].sum()) for label, (members, factor) in rule.items()}


def ancilla_weights(w1, w2, w3, w4, w5) -> tuple[float, float]:
    """``(w_alpha, w_beta) = ((w1 + w3) / 2, (w2 + w4 + w5) / 2)``."""
    a = apply_ancilla_rule(DEFAULT_ANCILLA_RULE, (w1, w2, w3, w4, w5))
    return a["alpha"], a["beta"]


# K_{2,3}: {v1, v3} versus {v2, v4, v5} (0-indexed below). Its two maximal
# independent sets are {1, 3} and {2, 4, 5}; the v5 edges are the non-UDG ones.
K23_EDGES = ((0, 1), (0, 3), (0, 4), (1, 2), (2, 3), (2, 4))

# Site tags on the 3x3 grid (row-major, see grid_positions): logical vertex
# index or ancilla label.  Found by search_gadget_assignments() and frozen.
#
#     v2     v1     v4
#     v3     v5     alpha
#     beta   alpha  beta
GRID_ASSIGNMENT: tuple = (1, 0, 3, 2, 4, "alpha", "beta", "alpha", "beta")


@dataclass
class Embedding:
    """Layout plus the map from physical sites back to logical vertices.

    ``site_tags[k]`` is an ``int`` (logical vertex index) or an ancilla label
    from ``ancilla_rule``.
    """

    layout: AtomLayout
    site_tags: tuple
    logical_graph: WeightedGraph
    ancilla_rule: AncillaRule = field(default_factory=lambda: dict(DEFAULT_ANCILLA_RULE))

    def __post_init__(self):
        self.site_tags = tuple(self.site_tags)
        if len(self.site_tags) != self.layout.n_sites:
            raise InstanceError("one tag per layout site is required")
        logical = [t for t in self.site_tags if isinstance(t, (int, np.integer))]
        if sorted(logical) != list(range(self.logical_graph.n_vertices)):
            raise InstanceError("every logical vertex must map to exactly one site")
        for t in self.site_tags:
            if not isinstance(t, (int, np.integer)) and t not in self.ancilla_rule:
                raise InstanceError(f"site tag {t!r} is neither a vertex nor a known ancilla")

    @property
    def logical_of_site(self) -> list:
        return [int(t) if isinstance(t, (int, np.integer)) else None for t in self.site_tags]

    @property
    def logical_sites(self) -> np.ndarray:
        """Physical site index of each logical vertex, in vertex order."""
        where = {int(t): k for k, t in enumerate(self.site_tags) if isinstance(t, (int, np.integer))}
        return np.array([where[v] for v in range(self.logical_graph.n_vertices)], dtype=int)

    def expected_site_weights(self) -> np.ndarray:
        anc = apply_ancilla_rule(self.ancilla_rule, self.logical_graph.weights)
        return np.array([
            self.logical_graph.weights[t] if isinstance(t, (int, np.integer)) else anc[t]
            for t in self.site_tags
        ])

    def embedded_graph(self) -> WeightedGraph:
        return udg_from_layout(self.layout)

    def to_dict(self) -> dict:
        d = self.logical_graph.to_dict()
        d.update({
            "positions": self.layout.positions.tolist(),
            "site_weights": self.layout.site_weights.tolist(),
            "unit_distance": self.layout.unit_distance,
            "edge_factor": self.layout.edge_factor,
            "logical_of_site": self.logical_of_site,
            "ancilla_of_site": [None if isinstance(t, (int, np.integer)) else t for t in self.site_tags],
            "ancilla_rule": {k: [list(m), f] for k, (m, f) in self.ancilla_rule.items()},
        })
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Embedding":
        graph = WeightedGraph.from_dict(d)
        layout = AtomLayout.from_dict(d)
        if "logical_of_site" not in d:
            raise InstanceError("embedding block is missing field 'logical_of_site'")
        anc = d.get("ancilla_of_site") or [None] * len(d["logical_of_site"])
        tags = tuple(v if v is not None else (a or "ancilla") for v, a in zip(d["logical_of_site"], anc))
        rule = d.get("ancilla_rule")
        rule = ({k: (tuple(m), float(f)) for k, (m, f) in rule.items()}
                if rule else dict(DEFAULT_ANCILLA_RULE))
        return cls(layout, tags, graph, rule)


def embed(positions, site_tags, logical: WeightedGraph, unit_distance: float,
          rule: AncillaRule = DEFAULT_ANCILLA_RULE, edge_factor: float = DEFAULT_EDGE_FACTOR) -> Embedding:
    """Build an :class:`Embedding`, deriving ancilla weights from ``rule``."""
    anc = apply_ancilla_rule(rule, logical.weights)
    weights = [logical.weights[t] if isinstance(t, (int, np.integer)) else anc[t] for t in site_tags]
    layout = AtomLayout(positions, weights, unit_distance, edge_factor)
    return Embedding(layout, tuple(site_tags), logical, dict(rule))


def decode(e: Embedding, c) -> str:
    """Project an embedded configuration onto the logical vertices."""
    bits = as_bits(c, e.layout.n_sites)
    return to_bitstring(bits[e.logical_sites])


@dataclass
class ValidationReport:
    ok: bool
    embedded_optima: tuple[str, ...]
    decoded_optima: tuple[str, ...]
    logical_optima: tuple[str, ...]
    reason: str = ""


def validate_embedding(e: Embedding) -> tuple[bool, ValidationReport]:
    """Check that the embedded MWIS decodes exactly onto the logical MWIS.

    Every embedded optimum must decode to a logical optimum and every
    logical optimum must be reached by at least one embedded optimum.
    """
    n = e.layout.n_sites
    if n > MAX_BRUTE_FORCE_VERTICES:
        raise CapacityError(f"embedding with {n} sites exceeds the enumeration bound")
    emb = brute_force_mwis(e.embedded_graph())
    logical = brute_force_mwis(e.logical_graph)
    decoded = tuple(sorted({decode(e, s) for s in emb.optima}))
    bad = [s for s in decoded if s not in logical.optima]
    missing = [s for s in logical.optima if s not in decoded]
    reason = ""
    if bad:
        reason = f"embedded optima decode to non-optimal logical sets {bad}"
    elif missing:
        reason = f"logical optima {missing} are not reached by any embedded optimum"
    report = ValidationReport(not reason, emb.optima, decoded, logical.optima, reason)
    return report.ok, report


def k23_graph(weights: Sequence[float]) -> WeightedGraph:
    if len(weights) != 5:
        raise InstanceError("the 2D gadget instance has exactly 5 logical weights")
    return WeightedGraph(weights, K23_EDGES)


def grid_gadget_embedding(weights: Sequence[float], spacing: float = GRID_SPACING_UM,
                     rule: AncillaRule = DEFAULT_ANCILLA_RULE,
                     edge_factor: float = GRID_EDGE_FACTOR) -> Embedding:
    """The 5-vertex graph embedded on a 3x3 grid with four ancillas.

    Raises :class:`EmbeddingError` (carrying ``weights``) if the embedded MWIS
    does not decode onto the logical MWIS for this weighting.
    """
    logical = k23_graph(weights)
    e = embed(grid_positions(3, 3, spacing), GRID_ASSIGNMENT, logical, spacing, rule, edge_factor)
    ok, report = validate_embedding(e)
    if not ok:
        raise EmbeddingError(f"embedding invalid for weights {tuple(weights)}: {report.reason}",
                             weights=tuple(weights))
    return e


# -- gadget search -------------------------------------------------------------


def _independent_sets(graph: WeightedGraph) -> np.ndarray:
    n = graph.n_vertices
    idx = np.arange(1 << n, dtype=np.int64)
    ok = np.ones(idx.size, dtype=bool)
    for i, j in graph.edges:
        ok &= ((idx >> i) & (idx >> j) & 1) == 0
    return basis_bits(n, idx[ok]).astype(float)


def _decodes_correctly(indep: np.ndarray, site_w: np.ndarray, logical_sites: np.ndarray,
                       logical_indep: np.ndarray, logical_w: np.ndarray,
                       weight_ratio: float | None) -> bool:
    sums = indep @ site_w
    top = sums.max()
    opt = indep[sums >= top - COST_TOL * max(1.0, top)][:, logical_sites]
    lsums = logical_indep @ logical_w
    ltop = lsums.max()
    if weight_ratio is not None and abs(top - weight_ratio * ltop) > COST_TOL * max(1.0, top):
        return False
    lopt = logical_indep[lsums >= ltop - COST_TOL * max(1.0, ltop)]
    decoded = {tuple(r) for r in opt.astype(int)}
    wanted = {tuple(r) for r in lopt.astype(int)}
    return decoded == wanted


def search_gadget_assignments(weightings: Sequence[Sequence[float]],
                              labels=(0, 1, 2, 3, 4, "alpha", "alpha", "beta", "beta"),
                              rule: AncillaRule = DEFAULT_ANCILLA_RULE,
                              logical_edges=K23_EDGES, edge_factor: float = GRID_EDGE_FACTOR,
                              weight_ratio: float | None = 2.0, first_only: bool = True) -> list[tuple]:
    """Assignments of ``labels`` to the 3x3 grid valid for every weighting.

    An assignment is valid when the embedded MWIS decodes exactly onto the
    logical MWIS and, unless ``weight_ratio`` is None, the embedded optimal
    weight is ``weight_ratio`` times the logical one (each ancilla pair then
    carries exactly the weight of the logical side it accompanies).
    Candidates are visited in lexicographic order of the distinct label
    permutations (ancilla labels sort after vertex indices).
    """
    grid = WeightedGraph([1.0] * 9, AtomLayout(grid_positions(3, 3, 1.0), [1.0] * 9, 1.0, edge_factor).blockade_edges)
    indep = _independent_sets(grid)
    logical_indep = _independent_sets(WeightedGraph([1.0] * 5, logical_edges))
    prepared = []
    for w in weightings:
        anc = apply_ancilla_rule(rule, w)
        prepared.append((np.asarray(w, dtype=float), anc))

    key = {lab: (0, lab) if isinstance(lab, int) else (1, lab) for lab in labels}
    ordered = sorted(labels, key=lambda x: key[x])
    found = []
    seen = set()
    for perm in itertools.permutations(ordered):
        if perm in seen:
            continue
        seen.add(perm)
        lsites = np.array([perm.index(v) for v in range(5)])
        ok = True
        for w, anc in prepared:
            site_w = np.array([w[t] if isinstance(t, int) else anc[t] for t in perm])
            if not _decodes_correctly(indep, site_w, lsites, logical_indep, w, weight_ratio):
                ok = False
                break
        if ok:
            found.append(perm)
            if first_only:
                break
    return found


def random_weightings(n: int, seed: int = 0, low: float = 0.5, high: float = 2.5, size: int = 5) -> np.ndarray:
    return np.random.default_rng(seed).uniform(low, high, size=(n, size))
