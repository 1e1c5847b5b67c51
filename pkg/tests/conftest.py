import numpy as np
import pytest

from graphblocks.oracle import DenseState
from graphblocks.stabilizer import StabilizerTableau


def random_gate_sequence(rng: np.random.Generator, n: int, count: int) -> list[tuple]:
    gates: list[tuple] = []
    for _ in range(count):
        if n >= 2 and rng.random() < 0.5:
            q1, q2 = rng.choice(np.arange(1, n + 1), size=2, replace=False)
            gates.append(("CZ", int(q1), int(q2)))
        else:
            gates.append(("H", int(rng.integers(1, n + 1))))
    return gates


def apply_gates_tableau(state: StabilizerTableau, gates: list[tuple]) -> StabilizerTableau:
    for gate in gates:
        if gate[0] == "H":
            state.apply_h(gate[1])
        else:
            state.apply_cz(gate[1], gate[2])
    return state


def apply_gates_dense(state: DenseState, gates: list[tuple]) -> DenseState:
    for gate in gates:
        state.apply_gate(gate)
    return state


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
