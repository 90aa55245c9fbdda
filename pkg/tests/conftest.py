"""Shared oracles and hypothesis settings.

The oracles here are deliberately naive re-implementations (itertools
enumeration, dense matrix exponentials) that share no code with the package.
"""

import sys
import itertools
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy.linalg import expm

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def oracle_cost(weights, edges, bits, u):
    """Classical cost by direct summation over vertices and edges."""
    total = 0.0
    for i, b in enumerate(bits):
        total -= weights[i] * b
    for i, j in edges:
        total += u * bits[i] * bits[j]
    return total


def oracle_mwis(weights, edges):
    """(best weight, sorted optima) over independent sets, via itertools."""
    n = len(weights)
    best, optima = 0.0, []
    for bits in itertools.product((0, 1), repeat=n):
        if any(bits[i] and bits[j] for i, j in edges):
            continue
        w = sum(weights[i] for i in range(n) if bits[i])
        if w > best + 1e-9 * max(1.0, abs(best)):
            best, optima = w, [bits]
        elif abs(w - best) <= 1e-9 * max(1.0, abs(best)):
            optima.append(bits)
    return best, sorted("".join(map(str, b)) for b in optima)


def oracle_hamiltonian(positions, weights, c6, omega, delta, delta_ac):
    """Dense H built from Kronecker products of single-site operators."""
    n = len(weights)
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    nr = np.array([[0.0, 0.0], [0.0, 1.0]])
    eye = np.eye(2)

    def site_op(op, i):
        # site 0 is the least significant bit, i.e. the rightmost factor
        out = np.array([[1.0]])
        for k in reversed(range(n)):
            out = np.kron(out, op if k == i else eye)
        return out

    h = np.zeros((2**n, 2**n))
    for i in range(n):
        h += 0.5 * omega * site_op(sx, i) - (delta + weights[i] * delta_ac) * site_op(nr, i)
    for i in range(n):
        for j in range(i + 1, n):
            r = np.linalg.norm(np.subtract(positions[i], positions[j]))
            h += c6 / r**6 * site_op(nr, i) @ site_op(nr, j)
    return h


def oracle_evolve(h_of_t, psi0, t_end, n_steps):
    """Piecewise-constant midpoint propagator with exact exponentials."""
    dt = t_end / n_steps
    psi = np.array(psi0, dtype=complex)
    for k in range(n_steps):
        psi = expm(-2j * np.pi * h_of_t((k + 0.5) * dt) * dt) @ psi
    return psi


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
