import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import oracle_mwis
from rydberg_mwis.embedding import (GRID_EDGE_FACTOR, GRID_ASSIGNMENT,
                                    AtomLayout, Embedding, ancilla_weights, chain_layout, decode, embed,
                                    grid_positions, grid_gadget_embedding, k23_graph,
                                    random_weightings, search_gadget_assignments, udg_from_layout,
                                    validate_embedding)
from rydberg_mwis.errors import CapacityError, EmbeddingError, InstanceError, ParameterError
from rydberg_mwis.graph import WeightedGraph, brute_force_mwis, selection

INSTANCES = [(2, 1, 2, 1, 1), (1, 2, 1, 2, 2), (1.75, 1.25, 2.25, 1.5, 1.0)]


def _oracle_edges(pos, r):
    return sorted((i, j) for i, j in itertools.combinations(range(len(pos)), 2)
                  if np.hypot(*(np.subtract(pos[i], pos[j]))) <= r)


# -- layouts ---------------------------------------------------------------------


def test_chain_is_path():
    g = udg_from_layout(chain_layout([1.0] * 9, 7.0))
    assert g.sorted_edges() == [(i, i + 1) for i in range(8)]


def test_far_pair_has_no_edge():
    assert udg_from_layout(AtomLayout([[0, 0], [21, 0]], [1, 1], 7.0)).edges == frozenset()


def test_grid_edges_by_factor():
    pos = grid_positions(3, 3, 8.0)
    king = udg_from_layout(AtomLayout(pos, [1] * 9, 8.0, 1.5))
    square = udg_from_layout(AtomLayout(pos, [1] * 9, 8.0, GRID_EDGE_FACTOR))
    # 1.5a = 12 um takes in the 11.3 um diagonals, 1.25a = 10 um does not
    assert len(king.edges) == 20
    assert len(square.edges) == 12
    assert king.sorted_edges() == _oracle_edges(pos, 12.0)


def test_layout_validation():
    with pytest.raises(InstanceError):
        AtomLayout([[0, 0], [0.05, 0]], [1, 1], 7.0)
    with pytest.raises(ParameterError):
        AtomLayout([[0, 0], [7, 0]], [1, -1], 7.0)
    with pytest.raises(InstanceError):
        AtomLayout([[0, 0], [7, 0]], [1], 7.0)
    with pytest.raises(InstanceError, match="unit_distance"):
        AtomLayout.from_dict({"positions": [[0, 0]], "site_weights": [1]})


@st.composite
def layouts(draw):
    # distinct 3 um cells plus sub-cell jitter keep every pair at least 1 um apart
    n = draw(st.integers(2, 8))
    cells = draw(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=n, max_size=n,
                          unique=True))
    jitter = draw(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=n, max_size=n))
    pts = 3.0 * np.array(cells, dtype=float) + np.array(jitter)
    return AtomLayout(pts, np.ones(n), 7.0)


@given(layouts())
def test_edges_match_distance_oracle(layout):
    assert udg_from_layout(layout).sorted_edges() == _oracle_edges(layout.positions, layout.r_edge)


@given(layouts(), st.floats(0, 2 * np.pi), st.floats(-50, 50), st.floats(-50, 50))
def test_udg_invariant_under_rigid_motion(layout, theta, dx, dy):
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    moved = AtomLayout(layout.positions @ rot.T + [dx, dy], layout.site_weights, layout.unit_distance)
    d = layout.distances()[np.triu_indices(layout.n_sites, 1)]
    # skip draws where a pair sits on the edge radius to rounding precision
    if np.min(np.abs(d - layout.r_edge)) < 1e-9:
        return
    assert udg_from_layout(moved).edges == udg_from_layout(layout).edges
    assert udg_from_layout(layout) == udg_from_layout(layout)


# -- ancillas --------------------------------------------------------------------


@pytest.mark.parametrize("w, expected", [((2, 1, 2, 1, 1), (2, 1.5)), ((1, 2, 1, 2, 2), (1, 3)),
                                         ((1, 1, 1, 1, 1), (1, 1.5))])
def test_ancilla_weights(w, expected):
    assert ancilla_weights(*w) == pytest.approx(expected)


def test_ancilla_weights_reject_non_positive():
    with pytest.raises(ParameterError):
        ancilla_weights(1, 0, 1, 1, 1)


# -- the 3x3 fixture ---------------------------------------------------------------


def test_fixture_embedded_cost_and_decode():
    e = grid_gadget_embedding([2, 1, 2, 1, 1])
    r = brute_force_mwis(e.embedded_graph())
    assert r.optimal_cost == -8.0
    assert {decode(e, s) for s in r.optima} == {selection([0, 2], 5)}


def test_fixture_inverted_instance():
    e = grid_gadget_embedding([1, 2, 1, 2, 2])
    r = brute_force_mwis(e.embedded_graph())
    assert {decode(e, s) for s in r.optima} == {selection([1, 3, 4], 5)}


def test_fixed_ancilla_values_also_valid():
    # w_alpha = 2, w_beta = 3 for (1, 2, 1, 2, 2) still decodes correctly
    logical = k23_graph([1, 2, 1, 2, 2])
    weights = [logical.weights[t] if isinstance(t, int) else {"alpha": 2.0, "beta": 3.0}[t]
               for t in GRID_ASSIGNMENT]
    layout = AtomLayout(grid_positions(3, 3, 8.0), weights, 8.0, GRID_EDGE_FACTOR)
    r = brute_force_mwis(udg_from_layout(layout))
    e = Embedding(layout, GRID_ASSIGNMENT, logical)
    assert {decode(e, s) for s in r.optima} == {"01011"}


@pytest.mark.parametrize("w", INSTANCES)
def test_validate_fixed_instances(w):
    ok, report = validate_embedding(grid_gadget_embedding(w))
    assert ok, report.reason
    _, logical = oracle_mwis(w, k23_graph(w).edges)
    assert list(report.logical_optima) == logical


def test_validation_fails_without_ancilla_weight():
    # heavy v3, v4: only the ancilla wire stops the embedded optimum from taking both
    w = (1, 1, 2.5, 2.5, 1)
    assert validate_embedding(grid_gadget_embedding(w))[0]
    eps = 1e-3
    rule = {"alpha": ((0, 2), eps), "beta": ((1, 3, 4), eps)}
    e = embed(grid_positions(3, 3, 8.0), GRID_ASSIGNMENT, k23_graph(w), 8.0,
              rule, GRID_EDGE_FACTOR)
    ok, report = validate_embedding(e)
    assert not ok and report.reason
    with pytest.raises(EmbeddingError) as info:
        grid_gadget_embedding(w, rule=rule)
    assert info.value.weights == w


def test_decode_shapes():
    e = grid_gadget_embedding([2, 1, 2, 1, 1])
    assert decode(e, "0" * 9) == "00000"
    with pytest.raises(InstanceError):
        decode(e, "0" * 8)


@given(st.integers(0, 511))
def test_decode_length(k):
    e = grid_gadget_embedding([2, 1, 2, 1, 1])
    assert len(decode(e, [(k >> i) & 1 for i in range(9)])) == 5


def test_embedding_round_trip():
    e = grid_gadget_embedding([1.75, 1.25, 2.25, 1.5, 1.0])
    back = Embedding.from_dict(e.to_dict())
    assert back.site_tags == e.site_tags
    np.testing.assert_array_equal(back.layout.positions, e.layout.positions)
    np.testing.assert_array_equal(back.expected_site_weights(), e.layout.site_weights)
    assert back.embedded_graph() == e.embedded_graph()


def test_embedding_requires_each_vertex_once():
    lay = AtomLayout(grid_positions(1, 2, 8.0), [1, 1], 8.0)
    with pytest.raises(InstanceError):
        Embedding(lay, (0, 0), WeightedGraph([1, 1]))


def test_capacity():
    n = 25
    lay = AtomLayout(grid_positions(5, 5, 8.0), [1.0] * n, 8.0)
    e = Embedding(lay, tuple(range(n)), WeightedGraph([1.0] * n))
    with pytest.raises(CapacityError):
        validate_embedding(e)


def test_frozen_assignment_is_first_search_hit():
    hits = search_gadget_assignments([INSTANCES[0], INSTANCES[1], INSTANCES[2]], first_only=True)
    assert hits and hits[0] == GRID_ASSIGNMENT


@given(st.lists(st.floats(0.5, 2.5), min_size=5, max_size=5))
def test_random_weighting_validates(w):
    e = grid_gadget_embedding(w)
    ok, report = validate_embedding(e)
    assert ok, report.reason
    # decoded embedded optima are a subset of the logical optima
    assert set(report.decoded_optima) <= set(report.logical_optima)


def test_random_weightings_shape():
    w = random_weightings(10, seed=3)
    assert w.shape == (10, 5) and w.min() >= 0.5 and w.max() <= 2.5
