"""Dual-stage annealing schedule.

The detuning follows a cubic sweep ``delta(t)`` from ``delta_min < 0`` to
``delta_max > 0`` over ``tau``.  While ``delta < 0`` it is applied as the
global laser detuning; once it turns positive the global detuning is parked
at resonance and ``delta`` drives the light-shift scale instead.  Omega is
ramped on (at fixed ``delta_min``) before the sweep and off (at fixed
light-shift) after it.

Cubic coefficients, with ``c = (delta_max - delta_min) / 2``::

    a = 8 s c / tau**3,   b = 2 c / tau - a tau**2 / 4
    delta(t) = delta_min + a t'**3 + b t' + c,   t' = t - tau / 2

so ``delta(0) = delta_min``, ``delta(tau) = delta_max`` and the midpoint is
the mean of the two.  ``s = 0`` is a linear ramp; larger ``s`` flattens the
sweep around its midpoint.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, InstanceError, ParameterError
from .hamiltonian import DriveSample

DEFAULT_T_RISE_US = 0.1
DEFAULT_T_FALL_US = 0.1

# config-file keys for each RampParams field
CONFIG_KEYS = {
    "s": "s",
    "tau": "tau_us",
    "delta_min": "delta_min_mhz",
    "delta_max": "delta_max_mhz",
    "omega_max": "omega_max_mhz",
    "t_rise": "t_rise_us",
    "t_fall": "t_fall_us",
}


@dataclass(frozen=True)
class RampParams:
    s: float
    tau: float
    delta_min: float
    delta_max: float
    omega_max: float = 2.70
    t_rise: float = DEFAULT_T_RISE_US
    t_fall: float = DEFAULT_T_FALL_US

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.0:
            raise ParameterError(f"shape parameter s={self.s} outside [0, 1]")
        # tau == 0 is accepted as a degenerate, sweep-free schedule
        if not self.tau >= 0:
            raise ParameterError(f"tau={self.tau} must be >= 0")
        if not self.delta_min < 0 < self.delta_max:
            raise ParameterError(
                f"need delta_min < 0 < delta_max, got ({self.delta_min}, {self.delta_max})"
            )
        if not self.omega_max > 0:
            raise ParameterError("omega_max must be > 0")
        if self.t_rise < 0 or self.t_fall < 0:
            raise ParameterError("t_rise and t_fall must be >= 0")

    def coefficients(self) -> tuple[float, float, float]:
        """``(a, b, c)`` of the centred cubic."""
        if self.tau <= 0:
            raise ParameterError("cubic coefficients need tau > 0")
        c = 0.5 * (self.delta_max - self.delta_min)
        a = 8.0 * self.s * c / self.tau**3
        b = 2.0 * c / self.tau - a * self.tau**2 / 4.0
        return a, b, c

    def replace(self, **changes) -> "RampParams":
        d = asdict(self)
        d.update(changes)
        return RampParams(**d)

    def to_config(self) -> dict:
        return {CONFIG_KEYS[k]: v for k, v in asdict(self).items()}

    @classmethod
    def from_config(cls, d: dict) -> "RampParams":
        kw = {}
        for field_name, key in CONFIG_KEYS.items():
            if key in d:
                kw[field_name] = float(d[key])
            elif field_name in ("s", "tau", "delta_min", "delta_max"):
                raise InstanceError(f"ramp block is missing field '{key}'")
        return cls(**kw)


def _cubic(p: RampParams, t):
    a, b, c = p.coefficients()
    tc = np.asarray(t, dtype=float) - 0.5 * p.tau
    return p.delta_min + a * tc**3 + b * tc + c


def cubic_delta(p: RampParams, t: float) -> float:
    """Swept detuning ``delta(t)`` in MHz for ``t`` in ``[0, tau]``."""
    if not 0.0 <= t <= p.tau:
        raise DomainError(f"t={t} outside the sweep [0, {p.tau}]")
    return float(_cubic(p, t))


def crossing_time(p: RampParams) -> float:
    """Time within the sweep where ``delta`` changes sign."""
    return float(brentq(lambda t: _cubic(p, t), 0.0, p.tau, xtol=1e-14))


def params_for_crossing(s: float, tau: float, t_cross: float, delta_max: float, **kw) -> RampParams:
    """Choose ``delta_min`` so the sweep crosses zero at ``t_cross``."""
    if not 0 < t_cross < tau:
        raise ParameterError("t_cross must lie strictly inside the sweep")

    def f(dmin):
        return _cubic(RampParams(s, tau, dmin, delta_max, **kw), t_cross)

    hi = -1e-12
    lo = -delta_max
    while f(lo) > 0:
        lo *= 2.0
    dmin = brentq(f, lo, hi, xtol=1e-14)
    return RampParams(s, tau, dmin, delta_max, **kw)


@dataclass(frozen=True)
class Schedule:
    """Piecewise drive built from :class:`RampParams`; immutable and pure."""

    params: RampParams

    @property
    def sweep_start(self) -> float:
        return self.params.t_rise

    @property
    def sweep_end(self) -> float:
        return self.params.t_rise + self.params.tau

    @property
    def total_duration(self) -> float:
        p = self.params
        return p.t_rise + p.tau + p.t_fall

    def arrays(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorised ``(omega, delta_global, delta_ac_unit)`` at times ``t``."""
        p = self.params
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0) or np.any(t > self.total_duration):
            raise DomainError(f"time outside the schedule [0, {self.total_duration}]")
        rise = t < self.sweep_start
        fall = t > self.sweep_end
        sweep = ~(rise | fall)

        omega = np.full_like(t, p.omega_max)
        if p.t_rise > 0:
            omega[rise] = p.omega_max * t[rise] / p.t_rise
        if p.t_fall > 0:
            omega[fall] = p.omega_max * (self.total_duration - t[fall]) / p.t_fall

        delta = np.zeros_like(t)
        if p.tau > 0:
            delta[sweep] = _cubic(p, t[sweep] - self.sweep_start)
        else:
            delta[sweep] = p.delta_max
        delta[rise] = p.delta_min
        delta[fall] = p.delta_max

        global_det = np.where(delta < 0, delta, 0.0)
        light_shift = np.where(delta < 0, 0.0, delta)
        return omega, global_det, light_shift

    def sample(self, t: float) -> DriveSample:
        om, dg, dac = self.arrays(t)
        return DriveSample(float(om[0]), float(dg[0]), float(dac[0]))

    def to_csv(self, n_points: int = 1001) -> str:
        t = np.linspace(0.0, self.total_duration, n_points)
        om, dg, dac = self.arrays(t)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_us", "omega_mhz", "delta_mhz", "delta_ac_mhz"])
        for row in zip(t, om, dg, dac):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


@dataclass(frozen=True)
class ConstantDrive:
    """Drive held fixed for ``duration``; same interface as :class:`Schedule`.

    Useful for Rabi-type checks where no ramp is wanted.
    """

    omega: float
    delta_global: float
    delta_ac_unit: float
    duration: float

    def __post_init__(self):
        DriveSample(self.omega, self.delta_global, self.delta_ac_unit)
        if not self.duration >= 0:
            raise ParameterError("duration must be >= 0")

    @property
    def sweep_start(self) -> float:
        return 0.0

    @property
    def sweep_end(self) -> float:
        return self.duration

    @property
    def total_duration(self) -> float:
        return self.duration

    def arrays(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0) or np.any(t > self.duration):
            raise DomainError(f"time outside [0, {self.duration}]")
        return (np.full_like(t, self.omega), np.full_like(t, self.delta_global),
                np.full_like(t, self.delta_ac_unit))

    def sample(self, t: float) -> DriveSample:
        om, dg, dac = self.arrays(t)
        return DriveSample(float(om[0]), float(dg[0]), float(dac[0]))


def split_schedule(p: RampParams) -> Schedule:
    return Schedule(p)


def sample_drive(sch: Schedule, t: float) -> DriveSample:
    return sch.sample(t)
