import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import oracle_hamiltonian
from rydberg_mwis.embedding import AtomLayout, chain_layout, grid_positions, grid_gadget_embedding
from rydberg_mwis.errors import CapacityError, InstanceError, ParameterError
from rydberg_mwis.graph import brute_force_mwis, index_to_bitstring
from rydberg_mwis.hamiltonian import (C6_MHZ_UM6, OMEGA_MHZ, DriveSample, RydbergSystem,
                                      blockade_radius, build_hamiltonian, check_blockade_cap,
                                      interaction, local_detunings)
from rydberg_mwis.embedding import udg_from_layout


def test_blockade_radius_reference_values():
    assert blockade_radius(C6_MHZ_UM6, OMEGA_MHZ) == pytest.approx(10.4, abs=0.05)


def test_blockade_radius_trivial():
    assert blockade_radius(1, 1) == 1
    assert blockade_radius(64, 1) == pytest.approx(2)
    with pytest.raises(ParameterError):
        blockade_radius(0, 1)


def test_interaction_values():
    assert interaction(8.0) == pytest.approx(3.376e6 / 8**6)
    assert interaction(8.0) == pytest.approx(12.88, abs=0.005)
    assert interaction(14.0) / interaction(7.0) == 2.0**-6


def test_local_detunings():
    np.testing.assert_allclose(local_detunings(DriveSample(1, -10, 0), [1, 2, 3]), [-10, -10, -10])
    np.testing.assert_allclose(local_detunings(DriveSample(0, 0, 2), [1, 2]), [2, 4])
    w = [1.0, 2.0] * 4 + [1.0]
    np.testing.assert_allclose(local_detunings(DriveSample(0, 0, 3.0), w), 3.0 * np.array(w))


def test_drive_sample_signs():
    with pytest.raises(ParameterError):
        DriveSample(-1, 0, 0)
    with pytest.raises(ParameterError):
        DriveSample(1, 0, -0.1)


def _one(n_pos=((0.0, 0.0),), w=(1.0,)):
    return RydbergSystem(AtomLayout(list(n_pos), list(w), 7.0))


def test_single_site_matrices():
    np.testing.assert_array_equal(build_hamiltonian(_one(), DriveSample(2, 0, 0)), [[0, 1], [1, 0]])
    np.testing.assert_array_equal(build_hamiltonian(_one(), DriveSample(0, 5, 0)), [[0, 0], [0, -5]])


def test_pair_interaction_diagonal():
    sys = RydbergSystem(AtomLayout([[0, 0], [8, 0]], [1, 1], 8.0))
    h = build_hamiltonian(sys, DriveSample(0, 0, 0))
    np.testing.assert_allclose(h, np.diag([0, 0, 0, 3.376e6 / 8**6]))
    assert h[3, 3] == pytest.approx(12.88, abs=0.005)


@st.composite
def systems(draw):
    n = draw(st.integers(1, 5))
    xs = np.cumsum(draw(st.lists(st.floats(4.0, 15.0), min_size=n, max_size=n)))
    ys = draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n))
    w = draw(st.lists(st.floats(0.2, 3.0), min_size=n, max_size=n))
    return RydbergSystem(AtomLayout(np.column_stack([xs, ys]), w, 7.0))


drives = st.builds(DriveSample, st.floats(0, 5), st.floats(-10, 10), st.floats(0, 5))


@given(systems(), drives)
def test_matches_kronecker_oracle(sys, d):
    h = build_hamiltonian(sys, d)
    ref = oracle_hamiltonian(sys.layout.positions, sys.site_weights, sys.c6_magnitude, d.omega,
                             d.delta_global, d.delta_ac_unit)
    np.testing.assert_allclose(h, ref, rtol=1e-12, atol=1e-9)
    np.testing.assert_array_equal(h, h.T.conj())


@given(systems())
def test_v_matrix_invariants(sys):
    v = sys.v_matrix
    np.testing.assert_array_equal(v, v.T)
    assert np.all(np.diag(v) == 0)
    off = v[~np.eye(sys.n_sites, dtype=bool)]
    assert np.all(off > 0)
    np.testing.assert_allclose(off, sys.c6_magnitude / sys.layout.distances()[~np.eye(sys.n_sites, dtype=bool)] ** 6)


def test_truncated_tails_keep_edges_only():
    sys = RydbergSystem(chain_layout([1.0] * 4), truncate_tails=True)
    assert sys.v_matrix[0, 2] == 0 and sys.v_matrix[0, 1] > 0


def test_capacity():
    lay = AtomLayout(grid_positions(3, 5, 8.0), [1.0] * 15, 8.0)
    with pytest.raises(CapacityError):
        build_hamiltonian(RydbergSystem(lay), DriveSample(1, 0, 0))


def test_blockade_cap_examples():
    lay = AtomLayout(grid_positions(3, 3, 8.0), [2.0] + [1.0] * 8, 8.0, 1.25)
    sys = RydbergSystem(lay)
    ok, margin = check_blockade_cap(sys, 5.0)
    assert ok and margin == pytest.approx(12.88 - 10, abs=0.005)
    assert not check_blockade_cap(sys, 7.0)[0]
    pair = RydbergSystem(AtomLayout([[0, 0], [7, 0]], [2, 1], 7.0))
    assert check_blockade_cap(pair, 0.99 * interaction(7.0) / 2)[0]


def test_blockade_cap_edge_cases():
    far = RydbergSystem(AtomLayout([[0, 0], [50, 0]], [1, 1], 7.0))
    assert check_blockade_cap(far, 100.0) == (True, np.inf)
    with pytest.raises(InstanceError):
        check_blockade_cap(_one(), 1.0)


@pytest.mark.parametrize("weights", [(2, 1, 2, 1, 1), (1, 2, 1, 2, 2), (1.75, 1.25, 2.25, 1.5, 1.0)])
def test_classical_ground_state_is_mwis(weights):
    # Omega = 0, delta_i = w_i * delta below the cap, truncated tails: ground state = MWIS
    e = grid_gadget_embedding(weights)
    sys = RydbergSystem(e.layout, truncate_tails=True)
    delta = 0.5 * sys.min_edge_interaction() / sys.site_weights.max()
    diag = np.diag(build_hamiltonian(sys, DriveSample(0, 0, delta)))
    ground = index_to_bitstring(int(np.argmin(diag)), sys.n_sites)
    assert (ground,) == brute_force_mwis(udg_from_layout(e.layout)).optima


def test_one_d_classical_ground_state():
    w = [1.0, 2.0] * 4 + [1.0]
    sys = RydbergSystem(chain_layout(w), truncate_tails=True)
    diag = np.diag(build_hamiltonian(sys, DriveSample(0, 0, 5.0)))
    assert index_to_bitstring(int(np.argmin(diag)), 9) == "010101010"
