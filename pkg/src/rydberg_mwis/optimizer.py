"""Closed-loop, derivative-free tuning of the annealing ramp.

Each evaluation simulates the anneal, samples a finite number of shots and
scores the sampled ``<H_MWIS>`` of the classical cost (not the Rydberg
energy).  The search is a bounded Nelder-Mead simplex in coordinates scaled
to the unit box, restarted around the incumbent whenever the simplex
collapses, until the evaluation budget is spent.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError
from .evolve import EvolutionConfig, RunRecord, anneal
from .graph import WeightedGraph, mwis_cost
from .hamiltonian import RydbergSystem, check_blockade_cap
from .schedule import RampParams, Schedule

log = logging.getLogger(__name__)

TUNABLE = ("s", "tau", "delta_min", "delta_max")
DEFAULT_BOUNDS = {
    "s": (0.0, 1.0),
    "tau": (0.3, 3.0),
    "delta_min": (-12.0, -0.5),
    "delta_max": (0.5, 6.0),
}
DEFAULT_SHOTS = 250
VERIFY_SHOTS = 1000


def derive_seed(master_seed: int, *keys: int) -> int:
    """Deterministic child seed for ``(master_seed, *keys)``."""
    return int(np.random.SeedSequence([int(master_seed), *map(int, keys)]).generate_state(1)[0])


@dataclass
class OptProblem:
    system: RydbergSystem
    cost_graph: WeightedGraph
    initial: RampParams
    tunables: tuple = TUNABLE
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    shots: int = DEFAULT_SHOTS
    penalty: float | None = None
    master_seed: int = 0
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)

    def __post_init__(self):
        self.tunables = tuple(self.tunables)
        for name in self.tunables:
            if name not in TUNABLE:
                raise ParameterError(f"'{name}' is not a tunable ramp parameter")
            if name not in self.bounds:
                raise ParameterError(f"no bounds given for '{name}'")
            lo, hi = self.bounds[name]
            if not lo < hi:
                raise ParameterError(f"empty bounds for '{name}': {lo, hi}")
        checks = {"s": lambda lo, hi: lo >= 0 and hi <= 1, "tau": lambda lo, hi: lo > 0,
                  "delta_min": lambda lo, hi: hi < 0, "delta_max": lambda lo, hi: lo > 0}
        for name in self.tunables:
            if not checks[name](*self.bounds[name]):
                raise ParameterError(f"bounds for '{name}' violate the ramp invariants")
        if self.penalty is None:
            self.penalty = self.cost_graph.default_penalty()

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.bounds[k][0] for k in self.tunables], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.bounds[k][1] for k in self.tunables], dtype=float)

    def params_from(self, x: Sequence[float]) -> RampParams:
        return self.initial.replace(**{k: float(v) for k, v in zip(self.tunables, x)})

    def vector(self, p: RampParams) -> np.ndarray:
        return np.array([getattr(p, k) for k in self.tunables], dtype=float)

    def infeasible_cost(self, excess: float) -> float:
        return 10.0 * self.penalty * self.system.n_sites + excess

    def digest(self) -> str:
        blob = json.dumps({
            "positions": self.system.layout.positions.tolist(),
            "site_weights": self.system.site_weights.tolist(),
            "c6": self.system.c6_magnitude,
            "truncate_tails": self.system.truncate_tails,
            "graph": self.cost_graph.to_dict(),
            "initial": self.initial.to_config(),
            "tunables": list(self.tunables),
            "bounds": {k: list(self.bounds[k]) for k in self.tunables},
            "shots": self.shots,
            "penalty": self.penalty,
            "dt": self.evolution.dt,
        }, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Evaluation:
    index: int
    params: RampParams
    cost: float
    stderr: float
    seed: int
    feasible: bool = True
    record: RunRecord | None = None


@dataclass
class OptResult:
    best_params: RampParams
    best_cost: float
    history: list
    evaluations: int

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate([h.cost for h in self.history])

    def summary_csv(self, tunables: Sequence[str] = TUNABLE) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["evaluation", *tunables, "cost", "stderr", "seed", "feasible"])
        for h in self.history:
            w.writerow([h.index, *(repr(float(getattr(h.params, k))) for k in tunables),
                        repr(float(h.cost)), repr(float(h.stderr)), h.seed, int(h.feasible)])
        return buf.getvalue()


def _stderr(counts: dict, graph: WeightedGraph, u: float) -> float:
    costs = np.array([mwis_cost(graph, s, u) for s in counts])
    k = np.array(list(counts.values()), dtype=float)
    n = k.sum()
    if n < 2:
        return 0.0
    mean = (k * costs).sum() / n
    var = (k * (costs - mean) ** 2).sum() / (n - 1)
    return float(np.sqrt(var / n))


def run_evaluation(prob: OptProblem, params: RampParams, seed: int, index: int = 0,
                   shots: int | None = None) -> Evaluation:
    """One closed-loop measurement: anneal, sample, score.

    Ramps whose final light-shift would break the blockade cap are not
    simulated; they get ``10 * u * N`` plus the size of the violation.
    """
    for k in prob.tunables:
        lo, hi = prob.bounds[k]
        if not lo - 1e-12 <= getattr(params, k) <= hi + 1e-12:
            raise ParameterError(f"{k}={getattr(params, k)} outside bounds {lo, hi}")
    ok, margin = check_blockade_cap(prob.system, params.delta_max)
    if not ok:
        return Evaluation(index, params, prob.infeasible_cost(-margin), 0.0, seed, feasible=False)
    rec, _ = anneal(prob.system, Schedule(params), prob.cost_graph, shots or prob.shots, seed,
                    prob.evolution, prob.penalty)
    return Evaluation(index, params, rec.estimated_cost, _stderr(rec.counts, prob.cost_graph, prob.penalty),
                      seed, True, rec)


def evaluate(prob: OptProblem, params: RampParams, seed: int) -> float:
    return run_evaluation(prob, params, seed).cost


def nelder_mead(fun: Callable[[np.ndarray], tuple[float, float]], x0: np.ndarray, budget: int,
                step: float = 0.25, xtol: float = 1e-3) -> None:
    """Bounded Nelder-Mead on the unit box, driven purely by side effects of ``fun``.

    ``fun(x)`` returns ``(cost, stderr)``; a trial point only displaces the
    incumbent in the expansion test when it wins by more than its standard
    error.  The simplex is rebuilt around the best vertex when it collapses
    below ``xtol``; the loop ends when ``fun`` has been called ``budget`` times.
    """
    d = x0.size
    used = 0

    def f(x):
        nonlocal used
        used += 1
        return fun(np.clip(x, 0.0, 1.0))

    def fresh_simplex(center):
        pts = [center]
        for i in range(d):
            p = center.copy()
            p[i] = p[i] + step if p[i] + step <= 1.0 else p[i] - step
            pts.append(p)
        return pts

    x0 = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0)
    pts = fresh_simplex(x0)
    vals = []
    for p in pts:
        if used >= budget:
            return
        vals.append(f(p))

    while used < budget:
        order = sorted(range(d + 1), key=lambda i: vals[i][0])
        pts = [pts[i] for i in order]
        vals = [vals[i] for i in order]
        if max(np.abs(p - pts[0]).max() for p in pts[1:]) < xtol:
            pts = fresh_simplex(pts[0])
            new_vals = [vals[0]]
            for p in pts[1:]:
                if used >= budget:
                    return
                new_vals.append(f(p))
            vals = new_vals
            continue

        centroid = np.mean(pts[:-1], axis=0)
        worst = pts[-1]
        xr = np.clip(centroid + (centroid - worst), 0.0, 1.0)
        fr = f(xr)
        if fr[0] < vals[0][0] - fr[1]:
            if used >= budget:
                pts[-1], vals[-1] = xr, fr
                break
            xe = np.clip(centroid + 2.0 * (centroid - worst), 0.0, 1.0)
            fe = f(xe)
            pts[-1], vals[-1] = (xe, fe) if fe[0] < fr[0] else (xr, fr)
        elif fr[0] < vals[-2][0]:
            pts[-1], vals[-1] = xr, fr
        else:
            if used >= budget:
                break
            if fr[0] < vals[-1][0]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            if fc[0] < min(fr[0], vals[-1][0]):
                pts[-1], vals[-1] = xc, fc
            else:
                for i in range(1, d + 1):
                    if used >= budget:
                        return
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0])
                    vals[i] = f(pts[i])


def minimize_box(objective: Callable[[np.ndarray, int], tuple[float, float]], x0, lower, upper,
                 budget: int, step: float = 0.25) -> list[tuple[np.ndarray, float, float]]:
    """Run :func:`nelder_mead` on ``objective(x, k)`` in physical coordinates.

    Returns the evaluation history ``[(x, cost, stderr), ...]``.
    """
    lower, upper = np.asarray(lower, float), np.asarray(upper, float)
    span = upper - lower
    history = []

    def fun(z):
        x = lower + z * span
        cost, se = objective(x, len(history))
        history.append((x, cost, se))
        return cost, se

    nelder_mead(fun, (np.asarray(x0, float) - lower) / span, budget, step)
    return history


def optimize(prob: OptProblem, budget: int,
             on_evaluation: Callable[[Evaluation], None] | None = None) -> OptResult:
    """Closed-loop search over ``prob.tunables`` with at most ``budget`` evaluations.

    ``on_evaluation`` sees each :class:`Evaluation` with its run record
    attached; the record is dropped from the returned history to save memory.
    """
    if budget < 1:
        raise ParameterError("budget must be >= 1")
    evals: list[Evaluation] = []

    def objective(x, k):
        seed = derive_seed(prob.master_seed, k)
        ev = run_evaluation(prob, prob.params_from(x), seed, index=k)
        if on_evaluation is not None:
            on_evaluation(ev)
        ev.record = None
        evals.append(ev)
        log.info("eval %d cost %.4f (+/- %.4f)%s", k, ev.cost, ev.stderr, "" if ev.feasible else " infeasible")
        return ev.cost, ev.stderr

    x0 = np.clip(prob.vector(prob.initial), prob.lower, prob.upper)
    minimize_box(objective, x0, prob.lower, prob.upper, budget)
    best = min(evals, key=lambda e: (e.cost, e.index))
    return OptResult(best.params, best.cost, evals, len(evals))


def verify(prob: OptProblem, params: RampParams, shots: int = VERIFY_SHOTS) -> RunRecord:
    """Final high-statistics run with a seed reserved for verification."""
    rec, _ = anneal(prob.system, Schedule(params), prob.cost_graph, shots,
                    derive_seed(prob.master_seed, 1 << 30), prob.evolution, prob.penalty)
    return rec
