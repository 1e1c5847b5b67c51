import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphblocks.graphs import GraphSpec, path_graph, prepare_state, ring_graph, star_graph
from graphblocks.oracle import DenseState
from graphblocks.stabilizer import StabilizerTableau, block_sites

from conftest import apply_gates_dense, apply_gates_tableau, random_gate_sequence


def test_zero_state_generators():
    t = StabilizerTableau.zero_state(3)
    assert t.generator_strings() == ["+ZII", "+IZI", "+IIZ"]
    t.check_invariants()


def test_zero_state_rejects_empty():
    with pytest.raises(ValueError):
        StabilizerTableau.zero_state(0)


def test_h_takes_zero_to_plus():
    t = StabilizerTableau.zero_state(1).apply_h(1)
    assert t.generator_strings() == ["+X"]


def test_h_flips_sign_of_y():
    # dense check: H Y H = -Y
    t = StabilizerTableau(1, _x=[1], _z=[1], _signs=0)  # generator Y
    t.apply_h(1)
    assert t.generator_strings() == ["-Y"]


def test_h_is_involution():
    t = StabilizerTableau.zero_state(4)
    snapshot = t.copy()
    t.apply_h(2).apply_h(2)
    assert t == snapshot


def test_h_out_of_range():
    with pytest.raises(ValueError):
        StabilizerTableau.zero_state(2).apply_h(3)


def test_cz_on_x_grows_z_tail():
    t = StabilizerTableau.zero_state(2).apply_h(1).apply_cz(1, 2)
    assert t.generator_strings()[0] == "+XZ"


def test_cz_leaves_z_alone():
    t = StabilizerTableau.zero_state(2).apply_cz(1, 2)
    assert t.generator_strings() == ["+ZI", "+IZ"]


def test_cz_is_involution():
    t = StabilizerTableau.zero_state(3).apply_h(1).apply_h(3)
    snapshot = t.copy()
    t.apply_cz(1, 3).apply_cz(1, 3)
    assert t == snapshot


def test_cz_rejects_equal_sites():
    with pytest.raises(ValueError):
        StabilizerTableau.zero_state(2).apply_cz(1, 1)


def test_block_window_wraps_periodically():
    t = StabilizerTableau.zero_state(6)
    t.apply_block(path_graph(3), start=5, boundary="periodic")
    # X content can only live on the wrapped window sites {5, 6, 1}
    x = t.x_bits
    touched = {q + 1 for q in range(6) if x[:, q].any()}
    assert touched == {1, 5, 6}
    # untouched sites stay exactly |0>
    for q in (2, 3, 4):
        assert t.entropy_bits(q, 1) == 0
    assert t.entropy_bits(5, 3) == 0  # window state is pure


def test_block_overflow_rejected_open():
    t = StabilizerTableau.zero_state(6)
    with pytest.raises(ValueError):
        t.apply_block(path_graph(3), start=5, boundary="open")


def test_block_wider_than_chain_rejected():
    t = StabilizerTableau.zero_state(3)
    with pytest.raises(ValueError):
        t.apply_block(star_graph(4), start=1, boundary="periodic")


def test_edgeless_block_leaves_product_state():
    g = GraphSpec.from_edges(3, [])
    t = StabilizerTableau.zero_state(5).apply_block(g, 2)
    for ln in range(1, 5):
        assert t.entropy_bits(1, ln) == 0


def test_star_block_gives_one_bit_across_interior_cut():
    t = StabilizerTableau.zero_state(4).apply_block(star_graph(4), 1)
    assert t.entropy_bits(1, 2) == 1
    dense = DenseState.zero_state(4)
    for q in range(1, 5):
        dense.apply_h(q)
    for u, v in star_graph(4).sorted_edges():
        dense.apply_cz(u, v)
    assert abs(dense.entropy([1, 2]) - 1.0) < 1e-9


def test_entropy_of_edge_graph_pair():
    t = prepare_state(GraphSpec.from_edges(2, [(1, 2)]))
    assert t.entropy_bits(1, 1) == 1


def test_entropy_product_state_zero():
    t = StabilizerTableau.zero_state(8)
    for start in (1, 3, 8):
        assert t.entropy_bits(start, 4) == 0


def test_entropy_ring5_two_site_region():
    t = prepare_state(ring_graph(5))
    assert t.entropy_bits(1, 2) == 2


def test_entropy_region_validation():
    t = StabilizerTableau.zero_state(4)
    with pytest.raises(ValueError):
        t.entropy_bits(1, 0)
    with pytest.raises(ValueError):
        t.entropy_bits(1, 4)


def test_entropy_units():
    t = prepare_state(ring_graph(5))
    bits = t.entropy_contiguous(1, 2, log_base=2)
    nats = t.entropy_contiguous(1, 2, log_base="e")
    assert bits == 2.0
    assert abs(nats - 2 * math.log(2)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=8), st.data())
def test_invariants_after_random_circuits(n, data):
    seed = data.draw(st.integers(min_value=0, max_value=2**32 - 1))
    rng = np.random.default_rng(seed)
    t = StabilizerTableau.zero_state(n)
    apply_gates_tableau(t, random_gate_sequence(rng, n, 30))
    t.check_invariants()
    # complement duality and bounds for every contiguous region
    for start in range(1, n + 1):
        for length in range(1, n):
            s = t.entropy_bits(start, length)
            comp_start = (start - 1 + length) % n + 1
            assert s == t.entropy_bits(comp_start, n - length)
            assert 0 <= s <= min(length, n - length)


def test_entropy_matches_dense_on_random_circuits(rng):
    for _ in range(25):
        n = int(rng.integers(2, 9))
        gates = random_gate_sequence(rng, n, 30)
        t = apply_gates_tableau(StabilizerTableau.zero_state(n), gates)
        d = apply_gates_dense(DenseState.zero_state(n), gates)
        for start in (1, (n + 1) // 2):
            for length in range(1, n):
                sites = [(start - 1 + k) % n + 1 for k in range(length)]
                assert abs(t.entropy_bits(start, length) - d.entropy(sites)) < 1e-9


def test_observable_contract_matrices():
    t = StabilizerTableau.zero_state(3).apply_h(2).apply_cz(2, 3)
    x, z = t.x_bits, t.z_bits
    assert x.shape == (3, 3) and z.shape == (3, 3)
    assert x[1, 1] == 1 and z[1, 2] == 1  # generator 2 became X2 Z3
    assert list(t.signs) == [1, 1, 1]


def test_block_sites_helper():
    assert block_sites(3, 5, 6, "periodic") == [5, 6, 1]
    assert block_sites(3, 4, 6, "open") == [4, 5, 6]
    with pytest.raises(ValueError):
        block_sites(3, 5, 6, "open")
    with pytest.raises(ValueError):
        block_sites(3, 1, 6, "twisted")
