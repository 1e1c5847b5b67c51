"""Dense-statevector reference implementation for small systems.

Verification harness only: states up to 10 qubits, operator algebra up
to 8. Site q is tensor axis q-1 of the statevector reshaped to (2,)*N,
so site 1 is the most significant bit of the flat index.
"""
from __future__ import annotations

import math

import numpy as np

from .pauli import PauliString

MAX_STATE_QUBITS = 10
MAX_OPERATOR_QUBITS = 8

H_MATRIX = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


class DenseState:
    """Complex statevector on n <= 10 qubits."""

    def __init__(self, n: int, amplitudes: np.ndarray | None = None):
        if not 1 <= n <= MAX_STATE_QUBITS:
            raise ValueError(f"dense states support 1..{MAX_STATE_QUBITS} qubits, got {n}")
        self.n = n
        if amplitudes is None:
            amplitudes = np.zeros(2 ** n, dtype=np.complex128)
            amplitudes[0] = 1.0
        self.amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2 ** n,):
            raise ValueError("amplitude vector has wrong length")

    @classmethod
    def zero_state(cls, n: int) -> "DenseState":
        return cls(n)

    def copy(self) -> "DenseState":
        return DenseState(self.n, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def apply_h(self, q: int) -> "DenseState":
        self._check(q)
        a = self.amplitudes.reshape(2 ** (q - 1), 2, -1)
        self.amplitudes = np.einsum("ab,xby->xay", H_MATRIX, a).reshape(-1)
        return self

    def apply_cz(self, q1: int, q2: int) -> "DenseState":
        if q1 == q2:
            raise ValueError("CZ needs two distinct sites")
        self._check(q1)
        self._check(q2)
        self.amplitudes = self.amplitudes * _cz_phase(self.n, q1, q2)
        return self

    def apply_gate(self, gate: tuple) -> "DenseState":
        if gate[0] == "H":
            return self.apply_h(gate[1])
        if gate[0] == "CZ":
            return self.apply_cz(gate[1], gate[2])
        raise ValueError(f"unknown gate {gate!r}")

    def entropy(self, sites: list[int], log_base: int | float | str = 2) -> float:
        """Von Neumann entropy of the reduced state on ``sites``."""
        if not sites or len(sites) >= self.n:
            raise ValueError("region must be a proper nonempty subset")
        axes = [q - 1 for q in sites]
        rest = [a for a in range(self.n) if a not in axes]
        psi = self.amplitudes.reshape((2,) * self.n).transpose(axes + rest)
        mat = psi.reshape(2 ** len(axes), -1)
        s = np.linalg.svd(mat, compute_uv=False)
        p = s ** 2
        p = p[p > 1e-14]
        bits = float(-(p * np.log2(p)).sum())
        if log_base == 2:
            return bits
        if log_base in ("e", math.e):
            return bits * math.log(2.0)
        raise ValueError(f"log_base must be 2 or 'e', got {log_base!r}")

    def _check(self, q: int) -> None:
        if not 1 <= q <= self.n:
            raise ValueError(f"site {q} out of range 1..{self.n}")


def _cz_phase(n: int, q1: int, q2: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    b1 = (idx >> (n - q1)) & 1
    b2 = (idx >> (n - q2)) & 1
    return np.where(b1 & b2 == 1, -1.0, 1.0)


def dense_apply(state: DenseState, gate: tuple) -> DenseState:
    """Exact unitary action of H(q) or CZ(q1, q2)."""
    return state.copy().apply_gate(gate)


def dense_entropy(state: DenseState, sites: list[int],
                  log_base: int | float | str = 2) -> float:
    return state.entropy(sites, log_base)


# -- operator algebra -----------------------------------------------------

def pauli_matrix(p: PauliString) -> np.ndarray:
    """Dense matrix of a signed Pauli string (site 1 leftmost factor)."""
    if p.n > MAX_OPERATOR_QUBITS:
        raise ValueError(f"dense operators support up to {MAX_OPERATOR_QUBITS} qubits")
    out = np.array([[p.sign]], dtype=np.complex128)
    for letter in p.letters():
        out = np.kron(out, PAULI[letter])
    return out


def conjugate_operator(op: np.ndarray, gate: tuple, n: int) -> np.ndarray:
    """g W g for the self-adjoint gates used here."""
    if gate[0] == "H":
        q = gate[1]
        dim = 2 ** n
        w = op.reshape(2 ** (q - 1), 2, -1)
        op = np.einsum("ab,xby->xay", H_MATRIX, w).reshape(dim, dim)
        w = op.reshape(dim, 2 ** (q - 1), 2, -1)
        return np.einsum("ab,xyaz->xybz", H_MATRIX, w).reshape(dim, dim)
    if gate[0] == "CZ":
        d = _cz_phase(n, gate[1], gate[2])
        return d[:, None] * op * d[None, :]
    raise ValueError(f"unknown gate {gate!r}")


def dense_otoc(w0: PauliString, conjugation_gates: list[tuple], x: int) -> float:
    """OTOC against the probe Y_x after conjugating w0 through the gates.

    Evaluates (1 - Tr[W V W V] / 2^N) / 2 on the explicit matrices; for
    Pauli inputs the result is exactly 0 or 1.
    """
    n = w0.n
    if n > MAX_OPERATOR_QUBITS:
        raise ValueError(f"dense OTOC supports up to {MAX_OPERATOR_QUBITS} qubits")
    w = pauli_matrix(w0)
    for gate in conjugation_gates:
        w = conjugate_operator(w, gate, n)
    return otoc_of_operator(w, x, n)


def otoc_of_operator(w: np.ndarray, x: int, n: int) -> float:
    """(1 - 2^-N Tr[W Y_x W Y_x]) / 2 for an explicit operator W."""
    v = pauli_matrix(PauliString.single(n, x, "Y"))
    m = w @ v
    trace = np.einsum("ij,ji->", m, m)
    return float(0.5 * (1.0 - trace.real / 2 ** n))
