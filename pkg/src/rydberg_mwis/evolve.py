"""State-vector evolution under a scheduled Rydberg Hamiltonian, and readout.

Time is in us and frequencies in MHz, so the equation of motion is
``dpsi/dt = -2j*pi * H(t) psi``.  The default integrator ("split4") is a
fourth-order composition of symmetric splitting steps: the diagonal part is
exponentiated exactly and the drive is applied as exact single-site
rotations, so every step is unitary.  "rk4" (interaction-picture RK4) and
"adaptive" (DOP853) are available for cross-checks.  The Hamiltonian is
applied matrix-free as a diagonal plus the sparse sum of single-site flips.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .errors import InstanceError, IntegrationError, ParameterError
from .graph import WeightedGraph, basis_bits, cost_table, expectation_cost, index_to_bitstring
from .hamiltonian import RydbergSystem
from .schedule import Schedule

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
NORM_TOL = 1e-6


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float = 1e-3
    method: str = "split4"
    rtol: float = 1e-10
    snapshot_times: tuple = ()
    norm_tol: float = NORM_TOL

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError("dt must be > 0")
        if self.method not in ("split4", "rk4", "adaptive"):
            raise ParameterError(f"unknown integration method {self.method!r}")


@dataclass
class EvolutionResult:
    state: np.ndarray
    snapshot_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    snapshots: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=complex))
    n_steps: int = 0
    norm_drift: float = 0.0


class HamiltonianApplier:
    """``H(omega, delta, delta_ac) @ psi`` without forming the dense matrix."""

    def __init__(self, system: RydbergSystem):
        n = system.n_sites
        bits = basis_bits(n).astype(float)
        self.n_sites = n
        self.dim = 1 << n
        self.occupation = bits.sum(axis=1)
        self.weighted_occupation = bits @ system.site_weights
        self.interaction = system.interaction_diagonal()
        rows = np.repeat(np.arange(self.dim), n)
        cols = (np.arange(self.dim)[:, None] ^ (1 << np.arange(n))[None, :]).ravel()
        self.flips = sparse.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(self.dim, self.dim))

    def diagonal(self, delta: float, delta_ac: float) -> np.ndarray:
        return self.interaction - delta * self.occupation - delta_ac * self.weighted_occupation

    def apply(self, psi: np.ndarray, omega: float, delta: float, delta_ac: float) -> np.ndarray:
        out = self.diagonal(delta, delta_ac) * psi
        if omega:
            out += 0.5 * omega * (self.flips @ psi)
        return out

    def energy(self, psi, omega, delta, delta_ac) -> float:
        return float(np.vdot(psi, self.apply(psi, omega, delta, delta_ac)).real)


def ground_state(n_sites: int) -> np.ndarray:
    psi = np.zeros(1 << n_sites, dtype=complex)
    psi[0] = 1.0
    return psi


def evolve(system: RydbergSystem, schedule: Schedule, cfg: EvolutionConfig | None = None,
           initial: np.ndarray | None = None) -> EvolutionResult:
    """Integrate the Schrodinger equation over the whole schedule.

    Starts from all atoms in ``|g>`` unless ``initial`` is given.  Raises
    :class:`IntegrationError` when the norm drifts by more than
    ``cfg.norm_tol``; the state is never renormalised.
    """
    cfg = cfg or EvolutionConfig()
    h = HamiltonianApplier(system)
    psi = ground_state(system.n_sites) if initial is None else np.array(initial, dtype=complex)
    if psi.shape != (h.dim,):
        raise InstanceError(f"initial state has shape {psi.shape}, expected ({h.dim},)")
    if abs(np.linalg.norm(psi) - 1.0) > cfg.norm_tol:
        raise InstanceError("initial state is not normalised")

    total = schedule.total_duration
    snap_req = np.asarray(sorted(cfg.snapshot_times), dtype=float)
    if total <= 0:
        snaps = np.repeat(psi[None, :], snap_req.size, axis=0)
        return EvolutionResult(psi, snap_req, snaps, 0, 0.0)
    if cfg.dt > total / 100:
        raise ParameterError(f"dt={cfg.dt} is coarser than total_duration/100 = {total / 100}")

    integrator = {"split4": _evolve_split4, "rk4": _evolve_rk4, "adaptive": _evolve_adaptive}[cfg.method]
    result = integrator(h, schedule, psi, snap_req, cfg)
    drift = abs(np.linalg.norm(result.state) - 1.0)
    result.norm_drift = drift
    if drift > cfg.norm_tol:
        raise IntegrationError(f"norm drifted by {drift:.2e} (> {cfg.norm_tol:.0e}); reduce dt={cfg.dt}")
    return result


def _evolve_rk4(h: HamiltonianApplier, schedule: Schedule, psi: np.ndarray,
                snap_req: np.ndarray, cfg: EvolutionConfig) -> EvolutionResult:
    # RK4 in the interaction picture of the step-midpoint diagonal (RK4IP).
    # All diagonal parts commute, so exp(-2j pi D_mid dt/2) is exact and RK4
    # only integrates the drive term plus the small within-step change of the
    # diagonal; the large interaction/detuning energies never enter RK4.
    total = schedule.total_duration
    n_steps = int(math.ceil(total / cfg.dt - 1e-9))
    step = total / n_steps
    grid = np.linspace(0.0, total, 2 * n_steps + 1)
    omega, delta, dac = schedule.arrays(grid)
    snap_steps = np.clip(np.rint(snap_req / step).astype(int), 0, n_steps)
    snaps = np.empty((snap_req.size, h.dim), dtype=complex)
    f = -1j * TWO_PI * step

    for s in np.nonzero(snap_steps == 0)[0]:
        snaps[s] = psi
    for n in range(n_steps):
        k = 2 * n
        d0 = h.diagonal(delta[k], dac[k])
        dm = h.diagonal(delta[k + 1], dac[k + 1])
        d1 = h.diagonal(delta[k + 2], dac[k + 2])
        half = np.exp(0.5 * f * dm)

        def rest(y, om, diff):
            out = diff * y
            if om:
                out += 0.5 * om * (h.flips @ y)
            return f * out

        psi_i = half * psi
        k1 = half * rest(psi, omega[k], d0 - dm)
        k2 = rest(psi_i + 0.5 * k1, omega[k + 1], 0.0)
        k3 = rest(psi_i + 0.5 * k2, omega[k + 1], 0.0)
        k4 = rest(half * (psi_i + k3), omega[k + 2], d1 - dm)
        psi = half * (psi_i + (k1 + 2.0 * k2 + 2.0 * k3) / 6.0) + k4 / 6.0
        for s in np.nonzero(snap_steps == n + 1)[0]:
            snaps[s] = psi
    return EvolutionResult(psi, snap_steps * step, snaps, n_steps)


# Triple-jump weights composing three symmetric 2nd-order steps into 4th order.
_GAMMA1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_GAMMA2 = 1.0 - 2.0 * _GAMMA1
_TRIPLE_JUMP = np.array([_GAMMA1, _GAMMA2, _GAMMA1])


def _rotate_all(psi: np.ndarray, n: int, theta: float) -> np.ndarray:
    """Apply ``exp(-1j * theta * sum_i sigma^x_i)`` as n single-site rotations."""
    c, s = np.cos(theta), -1j * np.sin(theta)
    for i in range(n):
        v = psi.reshape(-1, 2, 1 << i)
        lo, hi = v[:, 0, :], v[:, 1, :]
        psi = np.stack((c * lo + s * hi, c * hi + s * lo), axis=1).reshape(-1)
    return psi


def _evolve_split4(h: HamiltonianApplier, schedule: Schedule, psi: np.ndarray,
                   snap_req: np.ndarray, cfg: EvolutionConfig) -> EvolutionResult:
    # Each sub-step is the exactly unitary Strang step
    #   exp(-i pi D(m) g dt) exp(-i pi Omega(m) g dt sum sigma^x) exp(-i pi D(m) g dt)
    # with the drive sampled at the sub-step midpoint m, so the norm is
    # conserved to rounding error independent of dt.
    total = schedule.total_duration
    n_steps = int(math.ceil(total / cfg.dt - 1e-9))
    step = total / n_steps
    starts = np.concatenate(([0.0], np.cumsum(_TRIPLE_JUMP)[:-1]))
    offsets = (starts + 0.5 * _TRIPLE_JUMP) * step
    mids = (np.arange(n_steps)[:, None] * step + offsets[None, :]).ravel()
    omega, delta, dac = schedule.arrays(np.clip(mids, 0.0, total))
    snap_steps = np.clip(np.rint(snap_req / step).astype(int), 0, n_steps)
    snaps = np.empty((snap_req.size, h.dim), dtype=complex)
    phase = -1j * np.pi * step

    for s in np.nonzero(snap_steps == 0)[0]:
        snaps[s] = psi
    for n in range(n_steps):
        for j, g in enumerate(_TRIPLE_JUMP):
            k = 3 * n + j
            half = np.exp(phase * g * h.diagonal(delta[k], dac[k]))
            psi = half * psi
            if omega[k]:
                psi = _rotate_all(psi, h.n_sites, np.pi * omega[k] * g * step)
            psi = half * psi
        for s in np.nonzero(snap_steps == n + 1)[0]:
            snaps[s] = psi
    return EvolutionResult(psi, snap_steps * step, snaps, n_steps)


def _evolve_adaptive(h: HamiltonianApplier, schedule: Schedule, psi: np.ndarray,
                     snap_req: np.ndarray, cfg: EvolutionConfig) -> EvolutionResult:
    total = schedule.total_duration

    def rhs(t, y):
        om, dg, dac = schedule.arrays(min(max(t, 0.0), total))
        return -1j * TWO_PI * h.apply(y, om[0], dg[0], dac[0])

    # the drive has kinks at the stage boundaries; integrate each stage separately
    edges = sorted({0.0, schedule.sweep_start, schedule.sweep_end, total})
    y = psi
    snaps = np.empty((snap_req.size, h.dim), dtype=complex)
    nfev = 0
    for t0, t1 in zip(edges[:-1], edges[1:]):
        if t1 <= t0:
            continue
        inside = np.nonzero((snap_req >= t0) & (snap_req <= t1))[0]
        t_eval = np.append(snap_req[inside], t1)
        sol = solve_ivp(rhs, (t0, t1), y, method="DOP853", rtol=cfg.rtol, atol=cfg.rtol * 1e-2,
                        t_eval=t_eval, max_step=cfg.dt * 50)
        if not sol.success:
            raise IntegrationError(sol.message)
        snaps[inside] = sol.y[:, :-1].T
        y = sol.y[:, -1]
        nfev += sol.nfev
    return EvolutionResult(y, snap_req, snaps, nfev)


# -- readout -------------------------------------------------------------------


def probabilities(psi: np.ndarray) -> np.ndarray:
    return np.abs(psi) ** 2


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def _check_dist(dist: np.ndarray) -> np.ndarray:
    dist = np.asarray(dist, dtype=float)
    if abs(dist.sum() - 1.0) > 1e-9:
        raise InstanceError(f"distribution sums to {dist.sum()!r}, not 1")
    if dist.size & (dist.size - 1):
        raise InstanceError("distribution length must be a power of two")
    return np.clip(dist, 0.0, None) / np.clip(dist, 0.0, None).sum()


def sample_indices(dist: np.ndarray, shots: int, seed) -> np.ndarray:
    """Per-shot basis indices, in acquisition order."""
    dist = _check_dist(dist)
    if shots <= 0:
        raise InstanceError("shots must be > 0")
    rng = np.random.default_rng(seed)
    return rng.choice(dist.size, size=shots, p=dist)


def counts_from_indices(indices: Sequence[int], n_sites: int) -> dict[str, int]:
    idx, k = np.unique(np.asarray(indices, dtype=np.int64), return_counts=True)
    return {index_to_bitstring(int(i), n_sites): int(c) for i, c in zip(idx, k)}


def sample(dist: np.ndarray, shots: int, seed) -> dict[str, int]:
    """Multinomial bitstring counts (``"1"`` = Rydberg = atom lost from its trap).

    Keys are ordered by basis index; the draw is fully determined by ``seed``.
    """
    dist = _check_dist(dist)
    if shots <= 0:
        raise InstanceError("shots must be > 0")
    n = int(dist.size).bit_length() - 1
    k = np.random.default_rng(seed).multinomial(shots, dist)
    return {index_to_bitstring(int(i), n): int(k[i]) for i in np.nonzero(k)[0]}


def apply_readout_noise(indices: np.ndarray, n_sites: int, loss_prob, seed) -> np.ndarray:
    """Flip ground-state bits to 1 with per-site probability ``loss_prob``.

    A lost ground-state atom looks exactly like a Rydberg atom, so loss only
    ever turns ``0`` into ``1``.
    """
    eps = np.broadcast_to(np.asarray(loss_prob, dtype=float), (n_sites,))
    if np.any(eps < 0) or np.any(eps >= 1):
        raise ParameterError("loss probabilities must lie in [0, 1)")
    indices = np.asarray(indices, dtype=np.int64)
    rng = np.random.default_rng(seed)
    lost = rng.random((indices.size, n_sites)) < eps
    masks = (lost.astype(np.int64) << np.arange(n_sites)).sum(axis=1)
    return indices | masks


def exact_expectation(dist: np.ndarray, graph: WeightedGraph, u: float | None = None) -> float:
    return float(np.dot(dist, cost_table(graph, u)))


# -- run records -----------------------------------------------------------------


@dataclass
class RunRecord:
    counts: dict
    shots: int
    estimated_cost: float
    params: dict
    seeds: dict
    penalty: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise InstanceError("counts do not add up to shots")

    def argmax(self) -> str:
        return max(self.counts.items(), key=lambda kv: (kv[1], kv[0]))[0]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunRecord":
        return cls(**{k: d[k] for k in ("counts", "shots", "estimated_cost", "params", "seeds", "penalty")},
                   metadata=d.get("metadata", {}))


def anneal(system: RydbergSystem, schedule: Schedule, cost_graph: WeightedGraph, shots: int, seed: int,
           cfg: EvolutionConfig | None = None, u: float | None = None) -> tuple[RunRecord, EvolutionResult]:
    """Schedule -> evolve -> sample -> ``<H_MWIS>`` on ``cost_graph``."""
    cfg = cfg or EvolutionConfig()
    u = cost_graph.default_penalty() if u is None else u
    res = evolve(system, schedule, cfg)
    counts = sample(probabilities(res.state), shots, seed)
    p = schedule.params
    rec = RunRecord(
        counts=counts,
        shots=int(shots),
        estimated_cost=expectation_cost(counts, cost_graph, u),
        params=p.to_config(),
        seeds={"sample": int(seed)},
        penalty=float(u),
        metadata={
            "dt_us": cfg.dt,
            "method": cfg.method,
            "truncate_tails": system.truncate_tails,
            "sweep_us": p.tau,
            "total_duration_us": schedule.total_duration,
            "norm_drift": res.norm_drift,
        },
    )
    return rec, res


def trajectory_csv(result: EvolutionResult, n_sites: int, floor: float = 1e-4) -> str:
    """Long-format CSV ``t_us, bitstring, probability`` for entries above ``floor``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t_us", "bitstring", "probability"])
    for t, psi in zip(result.snapshot_times, result.snapshots):
        p = probabilities(psi)
        for i in np.nonzero(p > floor)[0]:
            w.writerow([repr(float(t)), index_to_bitstring(int(i), n_sites), repr(float(p[i]))])
    return buf.getvalue()
