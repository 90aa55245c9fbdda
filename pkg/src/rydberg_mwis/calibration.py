"""Feedback calibration of per-site light-shift weights.

The optical system is abstracted as a plant: commanded spot weights pass
through per-site gains and a small crosstalk matrix, and each measured shift
carries relative noise.  Only relative weights matter, so measured and
target shifts are both normalised to unit mean before comparison.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, ParameterError

MAX_CROSSTALK = 0.2


@dataclass
class PlantModel:
    gains: np.ndarray
    crosstalk: np.ndarray | None = None
    measurement_noise_sigma: float = 0.005
    name: str = "plant"

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float)
        n = self.gains.size
        if np.any(self.gains <= 0):
            raise ParameterError("plant gains must be > 0")
        k = np.zeros((n, n)) if self.crosstalk is None else np.asarray(self.crosstalk, dtype=float)
        if k.shape != (n, n):
            raise ParameterError(f"crosstalk must be {n}x{n}")
        off = k[~np.eye(n, dtype=bool)]
        if off.size and np.abs(off).max() > MAX_CROSSTALK:
            raise ParameterError(f"|crosstalk| above {MAX_CROSSTALK} is outside the model's range")
        self.crosstalk = k
        if self.measurement_noise_sigma < 0:
            raise ParameterError("noise sigma must be >= 0")

    @property
    def n_sites(self) -> int:
        return self.gains.size

    def response(self, commanded) -> np.ndarray:
        """Noise-free shifts ``(I + K) @ (g * commanded)``."""
        return (np.eye(self.n_sites) + self.crosstalk) @ (self.gains * np.asarray(commanded, dtype=float))

    def to_dict(self) -> dict:
        return {"gains": self.gains.tolist(), "crosstalk": self.crosstalk.tolist(),
                "measurement_noise_sigma": self.measurement_noise_sigma, "name": self.name}

    @classmethod
    def from_dict(cls, d) -> "PlantModel":
        return cls(d["gains"], d.get("crosstalk"), float(d.get("measurement_noise_sigma", 0.005)),
                   d.get("name", "plant"))


def identity_plant(n: int, noise: float = 0.0) -> PlantModel:
    return PlantModel(np.ones(n), None, noise, name="identity")


def random_plant(n: int, seed, gain_spread: float = 0.3, crosstalk: float = 0.0,
                 noise: float = 0.005) -> PlantModel:
    """Gains uniform in ``1 +/- gain_spread``; off-diagonal crosstalk ``+/- crosstalk``."""
    rng = np.random.default_rng(seed)
    gains = rng.uniform(1.0 - gain_spread, 1.0 + gain_spread, n)
    k = crosstalk * rng.choice([-1.0, 1.0], size=(n, n))
    np.fill_diagonal(k, 0.0)
    return PlantModel(gains, k, noise, name=f"random(seed={seed}, spread={gain_spread}, crosstalk={crosstalk})")


def measure_shifts(plant: PlantModel, commanded, seed) -> np.ndarray:
    commanded = np.asarray(commanded, dtype=float)
    if np.any(commanded <= 0):
        raise ParameterError("commanded weights must be > 0")
    noise = np.random.default_rng(seed).normal(0.0, plant.measurement_noise_sigma, plant.n_sites)
    return plant.response(commanded) * (1.0 + noise)


def _unit_mean(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x / x.mean()


def rms_relative_error(measured, target) -> float:
    m, t = _unit_mean(measured), _unit_mean(target)
    return float(np.sqrt(np.mean(((m - t) / t) ** 2)))


def feedback_step(commanded, measured, target) -> np.ndarray:
    """Multiplicative update ``c_i <- c_i * t_i / m_i`` on unit-mean profiles."""
    measured = np.asarray(measured, dtype=float)
    if np.any(measured <= 0):
        raise CalibrationError("non-positive measured shift; plant sign fault")
    return np.asarray(commanded, dtype=float) * _unit_mean(target) / _unit_mean(measured)


@dataclass
class CalibrationHistory:
    commanded: list = field(default_factory=list)
    measured: list = field(default_factory=list)
    rms: list = field(default_factory=list)
    converged: bool = False

    def __len__(self):
        return len(self.rms)

    @property
    def final_weights(self) -> np.ndarray:
        return self.commanded[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "rms_error"])
        for k, r in enumerate(self.rms, start=1):
            w.writerow([k, repr(float(r))])
        return buf.getvalue()


def run_calibration(plant: PlantModel, target, max_iters: int = 20, tol: float = 0.02,
                    seed: int = 0, initial=None) -> CalibrationHistory:
    """Measure and update until the RMS relative error drops below ``tol``.

    Iteration ``k`` measures with the current command; the history therefore
    has one row per spectroscopy round.  Three consecutive RMS increases
    raise :class:`CalibrationError`.
    """
    if not tol > 0:
        raise ParameterError("tol must be > 0")
    target = np.asarray(target, dtype=float)
    commanded = target.copy() if initial is None else np.asarray(initial, dtype=float)
    hist = CalibrationHistory()
    rises = 0
    seeds = np.random.SeedSequence(seed).spawn(max_iters)
    for k in range(max_iters):
        measured = measure_shifts(plant, commanded, np.random.default_rng(seeds[k]))
        if not np.all(np.isfinite(measured)):
            raise CalibrationError(f"{plant.name}: non-finite measured shifts at iteration {k + 1}")
        err = rms_relative_error(measured, target)
        if hist.rms and err > hist.rms[-1]:
            rises += 1
            if rises >= 3:
                raise CalibrationError(f"calibration diverging for {plant.name}: rms {hist.rms + [err]}")
        else:
            rises = 0
        hist.commanded.append(commanded)
        hist.measured.append(measured)
        hist.rms.append(err)
        if err < tol:
            hist.converged = True
            break
        try:
            commanded = feedback_step(commanded, measured, target)
        except CalibrationError as exc:
            raise CalibrationError(f"{plant.name}: {exc}") from exc
    return hist
