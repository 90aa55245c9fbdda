import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import curve_fit

from conftest import oracle_evolve, oracle_hamiltonian
from rydberg_mwis.embedding import AtomLayout, chain_layout
from rydberg_mwis.errors import InstanceError, IntegrationError, ParameterError
from rydberg_mwis.evolve import (EvolutionConfig, RunRecord, anneal, apply_readout_noise, counts_from_indices,
                                 evolve, exact_expectation, ground_state, probabilities, sample,
                                 sample_indices, total_variation, trajectory_csv, HamiltonianApplier)
from rydberg_mwis.experiment import build_experiment, load_fixture
from rydberg_mwis.graph import bitstring_to_index, expectation_cost, index_to_bitstring, path_graph
from rydberg_mwis.hamiltonian import OMEGA_MHZ, DriveSample, RydbergSystem, build_hamiltonian
from rydberg_mwis.schedule import ConstantDrive, RampParams, Schedule

OMEGA = OMEGA_MHZ


def single_atom():
    return RydbergSystem(AtomLayout([[0.0, 0.0]], [1.0], 7.0))


# -- two-level and two-atom physics --------------------------------------------------


def test_rabi_pi_pulse():
    t = 1.0 / (2.0 * OMEGA)
    psi = evolve(single_atom(), ConstantDrive(OMEGA, 0, 0, t)).state
    assert abs(probabilities(psi)[1] - 1.0) < 1e-4


@given(st.floats(0.05, 1.0))
def test_rabi_formula(t):
    psi = evolve(single_atom(), ConstantDrive(OMEGA, 0, 0, t), EvolutionConfig(dt=t / 200)).state
    assert probabilities(psi)[1] == pytest.approx(np.sin(np.pi * OMEGA * t) ** 2, abs=1e-4)


def test_blockaded_pair_enhancement():
    sys = RydbergSystem(AtomLayout([[0, 0], [7, 0]], [1, 1], 7.0))
    period = 1.0 / (np.sqrt(2) * OMEGA)
    times = np.linspace(0, period, 401)
    res = evolve(sys, ConstantDrive(OMEGA, 0, 0, period),
                 EvolutionConfig(dt=period / 2000, snapshot_times=tuple(times)))
    p = np.abs(res.snapshots) ** 2
    one = p[:, 1] + p[:, 2]
    (nu, amp), _ = curve_fit(lambda t, nu, a: a * np.sin(np.pi * nu * t) ** 2, res.snapshot_times, one,
                             p0=[np.sqrt(2) * OMEGA, 1.0])
    assert nu / (np.sqrt(2) * OMEGA) == pytest.approx(1.0, abs=0.02)
    assert p[:, 3].max() < 0.02


def test_diagonal_evolution_keeps_populations():
    rng = np.random.default_rng(1)
    sys = RydbergSystem(chain_layout([1.0, 2.0, 1.5]))
    psi0 = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi0 /= np.linalg.norm(psi0)
    drive = ConstantDrive(0.0, -3.0, 1.5, 1.0)
    res = evolve(sys, drive, EvolutionConfig(snapshot_times=(0.25, 0.5, 1.0)), initial=psi0)
    h = HamiltonianApplier(sys)
    e0 = h.energy(psi0, 0.0, -3.0, 1.5)
    for snap in res.snapshots:
        np.testing.assert_allclose(probabilities(snap), probabilities(psi0), atol=1e-12)
        assert h.energy(snap, 0.0, -3.0, 1.5) == pytest.approx(e0, rel=1e-6)


# -- against the dense oracle ---------------------------------------------------------


@pytest.mark.parametrize("method", ["split4", "rk4", "adaptive"])
def test_matches_expm_oracle(method):
    sys = RydbergSystem(AtomLayout([[0, 0], [7, 0], [16, 2]], [1.0, 2.0, 1.3], 7.0))
    sch = Schedule(RampParams(0.5, 0.6, -6.0, 4.0, t_rise=0.05, t_fall=0.05))

    def h_of_t(t):
        om, dg, dac = sch.arrays(t)
        return oracle_hamiltonian(sys.layout.positions, sys.site_weights, sys.c6_magnitude,
                                  om[0], dg[0], dac[0])

    ref = oracle_evolve(h_of_t, ground_state(3), sch.total_duration, 4000)
    psi = evolve(sys, sch, EvolutionConfig(dt=5e-4, method=method)).state
    assert abs(np.vdot(ref, psi)) ** 2 == pytest.approx(1.0, abs=1e-6)


def test_dense_and_matrix_free_agree():
    sys = RydbergSystem(chain_layout([1.0, 2.0, 1.0, 2.0]))
    d = DriveSample(2.0, -1.0, 0.7)
    h = HamiltonianApplier(sys)
    psi = np.random.default_rng(0).normal(size=16) + 0j
    np.testing.assert_allclose(h.apply(psi, d.omega, d.delta_global, d.delta_ac_unit),
                               build_hamiltonian(sys, d) @ psi, atol=1e-10)


# -- configuration and guards ----------------------------------------------------------


def test_dt_bound():
    with pytest.raises(ParameterError):
        evolve(single_atom(), ConstantDrive(OMEGA, 0, 0, 0.05), EvolutionConfig(dt=1e-3))
    with pytest.raises(ParameterError):
        EvolutionConfig(dt=0)
    with pytest.raises(ParameterError):
        EvolutionConfig(method="euler")


def test_norm_guard_raises():
    with pytest.raises(IntegrationError):
        evolve(single_atom(), ConstantDrive(OMEGA, 0, 0, 1.0), EvolutionConfig(norm_tol=1e-18))


def test_initial_state_checks():
    with pytest.raises(InstanceError):
        evolve(single_atom(), ConstantDrive(OMEGA, 0, 0, 1.0), initial=np.ones(4))
    with pytest.raises(InstanceError):
        evolve(single_atom(), ConstantDrive(OMEGA, 0, 0, 1.0), initial=np.ones(2))


def test_zero_duration_is_identity():
    res = evolve(single_atom(), ConstantDrive(OMEGA, 0, 0, 0.0))
    np.testing.assert_array_equal(res.state, ground_state(1))


def test_snapshot_times():
    res = evolve(single_atom(), ConstantDrive(OMEGA, 0, 0, 1.0), EvolutionConfig(snapshot_times=(0.0, 0.5, 1.0)))
    np.testing.assert_allclose(res.snapshot_times, [0.0, 0.5, 1.0])
    np.testing.assert_allclose(res.snapshots[-1], res.state)
    assert res.norm_drift < 1e-12


def test_adiabatic_limit_1d_uniform():
    exp = build_experiment(load_fixture("1d_uniform"))
    p = exp.ramp()
    target = bitstring_to_index("101010101")
    probs = []
    for k in (1, 2, 4):
        q = p.replace(tau=k * p.tau, t_rise=k * p.t_rise, t_fall=k * p.t_fall)
        probs.append(probabilities(evolve(exp.system(), Schedule(q)).state)[target])
    assert probs[0] < probs[1] < probs[2]


# -- readout ---------------------------------------------------------------------------


def test_probability_examples():
    np.testing.assert_array_equal(probabilities(np.array([0, 0, 1, 0], dtype=complex)), [0, 0, 1, 0])
    np.testing.assert_allclose(probabilities(np.full(4, 0.5 + 0j)), [0.25] * 4)


def test_sample_point_mass():
    assert sample(np.array([0.0, 0.0, 1.0, 0.0]), 100, seed=3) == {"01": 100}


def test_sample_fair_coin():
    k = sample(np.array([0.5, 0.5]), 10**6, seed=7)
    sigma = np.sqrt(10**6 * 0.25)
    assert abs(k["0"] - 5e5) < 5 * sigma and abs(k["1"] - 5e5) < 5 * sigma


def test_sample_errors_and_determinism():
    dist = np.full(8, 1 / 8)
    with pytest.raises(InstanceError):
        sample(dist, 0, 1)
    with pytest.raises(InstanceError):
        sample(np.array([0.5, 0.4]), 10, 1)
    assert sample(dist, 50, 11) == sample(dist, 50, 11)


@given(st.integers(1, 500), st.integers(0, 2**32 - 1))
def test_counts_sum_to_shots(shots, seed):
    dist = np.random.default_rng(seed).dirichlet(np.ones(16))
    assert sum(sample(dist, shots, seed).values()) == shots
    assert sum(counts_from_indices(sample_indices(dist, shots, seed), 4).values()) == shots


def test_readout_noise_identity_and_certain_loss():
    idx = np.arange(16)
    np.testing.assert_array_equal(apply_readout_noise(idx, 4, 0.0, 1), idx)
    noisy = apply_readout_noise(idx, 4, [1.0 - 1e-15, 0, 0, 0], 1)
    assert np.all(noisy & 1)
    with pytest.raises(ParameterError):
        apply_readout_noise(idx, 4, 1.0, 1)


def test_readout_noise_single_loss_rate():
    eps, shots = 0.05, 200_000
    target = bitstring_to_index("010101010")
    out = apply_readout_noise(np.full(shots, target), 9, eps, seed=5)
    # five empty sites; each single-loss string has probability eps (1 - eps)^4
    expected = eps * (1 - eps) ** 4
    zeros = [i for i, ch in enumerate("010101010") if ch == "0"]
    for i in zeros:
        frac = np.mean(out == (target | (1 << i)))
        assert frac == pytest.approx(expected, abs=5 * np.sqrt(expected / shots))
    assert np.mean(out == target) == pytest.approx((1 - eps) ** 5, abs=5e-3)


def test_total_variation():
    assert total_variation([1, 0], [0, 1]) == 1.0
    assert total_variation([0.5, 0.5], [0.5, 0.5]) == 0.0


# -- run records ---------------------------------------------------------------------


def test_anneal_record_self_consistent():
    exp = build_experiment(load_fixture("1d_weighted"))
    rec, res = anneal(exp.system(), Schedule(exp.ramp()), exp.cost_graph, 500, 42)
    assert sum(rec.counts.values()) == 500
    assert rec.estimated_cost == pytest.approx(expectation_cost(rec.counts, exp.cost_graph, rec.penalty))
    assert rec.argmax() == "010101010"
    back = RunRecord.from_dict(json.loads(rec.to_json()))
    assert back.to_json() == rec.to_json()
    assert rec.metadata["norm_drift"] < 1e-6


def test_record_rejects_inconsistent_counts():
    with pytest.raises(InstanceError):
        RunRecord({"0": 3}, 4, 0.0, {}, {}, 2.0)


def test_exact_expectation():
    g = path_graph([1.0, 2.0])
    dist = np.array([0.25, 0.25, 0.5, 0.0])
    assert exact_expectation(dist, g) == pytest.approx(0.25 * -1 + 0.5 * -2)


def test_trajectory_csv_long_format():
    res = evolve(single_atom(), ConstantDrive(OMEGA, 0, 0, 0.2), EvolutionConfig(snapshot_times=(0.0, 0.2)))
    rows = trajectory_csv(res, 1).strip().split("\n")
    assert rows[0] == "t_us,bitstring,probability"
    assert rows[1].startswith("0.0,0,1.0")
    assert len(rows) == 4
    assert index_to_bitstring(1, 1) == "1"
