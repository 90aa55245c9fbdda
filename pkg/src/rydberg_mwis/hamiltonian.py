"""Rydberg Hamiltonian for an atom layout under a global drive plus light-shifts.

All frequencies are ordinary frequencies in MHz (the ``/2pi`` values quoted
experimentally); the evolution code supplies the ``2*pi``.  Basis index bit
``i`` is the Rydberg occupation of site ``i``.

    H = sum_i (Omega/2 sigma^x_i - Delta_i n_i) + sum_{i<j} V_ij n_i n_j
    Delta_i = Delta + w_i * delta_ac,   V_ij = |C6| / r_ij**6
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedding import AtomLayout
from .errors import CapacityError, InstanceError, ParameterError
from .graph import basis_bits

# 80S_1/2 in Cs; C6 is negative as published, only |C6| enters V and r_B.
C6_GHZ_UM6 = -3376.0
C6_MHZ_UM6 = abs(C6_GHZ_UM6) * 1e3
OMEGA_MHZ = 2.70
MAX_DENSE_SITES = 14


def blockade_radius(c6_magnitude: float, omega: float) -> float:
    """Resonant blockade radius ``(|C6| / Omega) ** (1/6)`` in um."""
    if not (c6_magnitude > 0 and omega > 0):
        raise ParameterError("blockade_radius needs |C6| > 0 and Omega > 0")
    return (c6_magnitude / omega) ** (1.0 / 6.0)


def interaction(r, c6_magnitude: float = C6_MHZ_UM6):
    return c6_magnitude / np.asarray(r, dtype=float) ** 6


@dataclass(frozen=True)
class DriveSample:
    """Instantaneous drive: Rabi frequency, global detuning, unit light-shift (MHz)."""

    omega: float
    delta_global: float
    delta_ac_unit: float

    def __post_init__(self):
        if self.omega < 0:
            raise ParameterError("omega must be >= 0")
        if self.delta_ac_unit < 0:
            raise ParameterError("light-shift scale must be >= 0 (blue-detuned shift)")


@dataclass
class RydbergSystem:
    """Atoms at ``layout`` interacting through ``c6_magnitude / r**6``.

    With ``truncate_tails`` only pairs on the layout's blockade edges interact.
    """

    layout: AtomLayout
    c6_magnitude: float = C6_MHZ_UM6
    truncate_tails: bool = False
    c6_sign: int = -1
    v_matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.c6_magnitude > 0:
            raise ParameterError("c6_magnitude must be > 0")
        d = self.layout.distances()
        n = self.layout.n_sites
        v = np.zeros((n, n))
        off = ~np.eye(n, dtype=bool)
        v[off] = self.c6_magnitude / d[off] ** 6
        if self.truncate_tails:
            keep = np.zeros_like(v, dtype=bool)
            for i, j in self.layout.blockade_edges:
                keep[i, j] = keep[j, i] = True
            v = np.where(keep, v, 0.0)
        self.v_matrix = v

    @property
    def n_sites(self) -> int:
        return self.layout.n_sites

    @property
    def site_weights(self) -> np.ndarray:
        return self.layout.site_weights

    @classmethod
    def from_c6_ghz(cls, layout: AtomLayout, c6_ghz_um6: float = C6_GHZ_UM6, **kw) -> "RydbergSystem":
        return cls(layout, abs(c6_ghz_um6) * 1e3, c6_sign=-1 if c6_ghz_um6 < 0 else 1, **kw)

    def interaction_diagonal(self) -> np.ndarray:
        """``sum_{i<j} V_ij n_i n_j`` for every basis state."""
        bits = basis_bits(self.n_sites).astype(float)
        return 0.5 * np.einsum("ki,ij,kj->k", bits, self.v_matrix, bits)

    def min_edge_interaction(self) -> float:
        edges = self.layout.blockade_edges
        if not edges:
            return np.inf
        return min(self.v_matrix[i, j] for i, j in edges)


def local_detunings(d: DriveSample, site_weights) -> np.ndarray:
    """``Delta_i = Delta + w_i * delta_ac``."""
    return d.delta_global + np.asarray(site_weights, dtype=float) * d.delta_ac_unit


def build_hamiltonian(sys: RydbergSystem, d: DriveSample, max_sites: int = MAX_DENSE_SITES) -> np.ndarray:
    """Dense real-symmetric Hamiltonian (MHz) of shape ``(2**N, 2**N)``."""
    n = sys.n_sites
    if n > max_sites:
        raise CapacityError(f"{n} sites exceeds the dense bound of {max_sites}")
    dim = 1 << n
    bits = basis_bits(n).astype(float)
    diag = -bits @ local_detunings(d, sys.site_weights) + sys.interaction_diagonal()
    h = np.diag(diag)
    idx = np.arange(dim)
    for i in range(n):
        h[idx, idx ^ (1 << i)] += 0.5 * d.omega
    return h


def check_blockade_cap(sys: RydbergSystem, max_delta_ac_unit: float) -> tuple[bool, float]:
    """``max_i(w_i) * max_delta_ac_unit < min_edges V_ij``; returns ``(ok, margin)``."""
    if sys.n_sites < 2:
        raise InstanceError("blockade cap needs at least two sites")
    vmin = sys.min_edge_interaction()
    if not np.isfinite(vmin):
        return True, np.inf
    lhs = float(sys.site_weights.max()) * max_delta_ac_unit
    return lhs < vmin, vmin - lhs
