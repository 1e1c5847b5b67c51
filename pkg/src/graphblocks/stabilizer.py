"""Exact N-qubit stabilizer states under H/CZ circuits.

The tableau keeps one generator per qubit in binary symplectic form.
Storage is column-major and bit-packed: for each qubit q there is one
python integer whose bit i is the X (resp. Z) component of generator i
at q, plus one packed sign integer (bit i set means generator i carries
a -1 phase; H/CZ circuits never produce imaginary phases).

Column packing makes a gate a handful of word operations regardless of
N, and hands the entropy routine its column vectors for free.
"""
from __future__ import annotations

import math
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .f2 import rank_int_vectors

if TYPE_CHECKING:  # pragma: no cover
    from .graphs import GraphSpec

LN2 = math.log(2.0)


class StabilizerTableau:
    """Pure stabilizer state on ``n`` qubits, sites labeled 1..n."""

    __slots__ = ("n", "_x", "_z", "_signs")

    def __init__(self, n: int, _x: list[int] | None = None,
                 _z: list[int] | None = None, _signs: int = 0):
        if n < 1:
            raise ValueError(f"need at least one qubit, got n={n}")
        self.n = n
        self._x = [0] * n if _x is None else _x
        self._z = _z if _z is not None else [(1 << q) for q in range(n)]
        self._signs = _signs

    @classmethod
    def zero_state(cls, n: int) -> "StabilizerTableau":
        """|0...0> : generator i is Z on qubit i with sign +1."""
        return cls(n)

    def copy(self) -> "StabilizerTableau":
        return StabilizerTableau(self.n, list(self._x), list(self._z), self._signs)

    # -- gates ---------------------------------------------------------

    def _check_site(self, q: int) -> None:
        if not 1 <= q <= self.n:
            raise ValueError(f"site {q} out of range 1..{self.n}")

    def apply_h(self, q: int) -> "StabilizerTableau":
        """Hadamard on site q: swaps X/Z columns, Y picks up a sign."""
        self._check_site(q)
        i = q - 1
        x, z = self._x[i], self._z[i]
        self._signs ^= x & z
        self._x[i], self._z[i] = z, x
        return self

    def apply_cz(self, q1: int, q2: int) -> "StabilizerTableau":
        """Controlled-Z between sites q1 and q2."""
        if q1 == q2:
            raise ValueError("CZ needs two distinct sites")
        self._check_site(q1)
        self._check_site(q2)
        a, b = q1 - 1, q2 - 1
        xa, xb = self._x[a], self._x[b]
        self._signs ^= xa & xb & (self._z[a] ^ self._z[b])
        self._z[a] ^= xb
        self._z[b] ^= xa
        return self

    def apply_block(self, block: "GraphSpec", start: int,
                    boundary: str = "periodic") -> "StabilizerTableau":
        """Apply the graph-state preparation unitary of ``block``.

        Vertex k of the block acts on chain site start+k-1 (mod N when
        periodic). The H layer precedes the CZ layer, matching
        U|0..0> = prod(CZ) |+..+>.
        """
        sites = block_sites(block.n_vertices, start, self.n, boundary)
        for s in sites:
            self.apply_h(s)
        for u, v in block.sorted_edges():
            self.apply_cz(sites[u - 1], sites[v - 1])
        return self

    # -- entropy -------------------------------------------------------

    def entropy_bits(self, start: int, length: int) -> int:
        """Entanglement entropy, in bits, of the contiguous region of
        ``length`` sites beginning at ``start`` (wrapping mod N).

        Computed as rank_F2 of the generator matrix restricted to the
        columns of one side of the cut, minus that side's size; the
        count of independent stabilizers supported inside the region
        fixes S_A = n_A - log2 |S_A|.
        """
        n = self.n
        if not 1 <= length < n:
            raise ValueError(f"region must be a proper nonempty subset, got length={length}")
        self._check_site(start)
        inside = [(start - 1 + k) % n for k in range(length)]
        # S_A = rank(G|_S) - |S| holds with S either the region or its
        # complement (purity); restrict to the smaller side.
        if length <= n - length:
            restrict = inside
        else:
            in_set = set(inside)
            restrict = [q for q in range(n) if q not in in_set]
        vectors = []
        x, z = self._x, self._z
        for q in restrict:
            vectors.append(x[q])
            vectors.append(z[q])
        return rank_int_vectors(vectors) - len(restrict)

    def entropy_contiguous(self, start: int, length: int,
                           log_base: int | float | str = 2) -> float:
        """Entropy of a contiguous (possibly wrapped) region.

        ``log_base`` 2 gives bits, "e" (or math.e) gives nats.
        """
        bits = self.entropy_bits(start, length)
        if log_base == 2:
            return float(bits)
        if log_base in ("e", math.e):
            return bits * LN2
        raise ValueError(f"log_base must be 2 or 'e', got {log_base!r}")

    # -- observable contract / diagnostics ------------------------------

    @property
    def x_bits(self) -> np.ndarray:
        """N x N binary matrix; [i, q] is the X component of generator i at qubit q."""
        return _columns_to_matrix(self._x, self.n)

    @property
    def z_bits(self) -> np.ndarray:
        return _columns_to_matrix(self._z, self.n)

    @property
    def signs(self) -> np.ndarray:
        """Per-generator phases as +1/-1."""
        bits = _int_to_bitarray(self._signs, self.n)
        return np.where(bits == 1, -1, 1).astype(np.int8)

    def generator_strings(self) -> list[str]:
        """Human-readable generators, e.g. '+XZI'."""
        xm, zm, sg = self.x_bits, self.z_bits, self.signs
        letters = np.array(["I", "X", "Z", "Y"])
        out = []
        for i in range(self.n):
            body = "".join(letters[xm[i] + 2 * zm[i]])
            out.append(("+" if sg[i] == 1 else "-") + body)
        return out

    def check_invariants(self) -> None:
        """Raise AssertionError unless rows are independent and commute."""
        rows = []
        for i in range(self.n):
            r = 0
            for q in range(self.n):
                r |= ((self._x[q] >> i) & 1) << q
                r |= ((self._z[q] >> i) & 1) << (q + self.n)
            rows.append(r)
        assert rank_int_vectors(rows) == self.n, "generators dependent over F2"
        xm = self.x_bits.astype(np.int64)
        zm = self.z_bits.astype(np.int64)
        sympl = (xm @ zm.T + zm @ xm.T) % 2
        assert not sympl.any(), "generators do not all commute"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StabilizerTableau):
            return NotImplemented
        return (self.n == other.n and self._x == other._x
                and self._z == other._z and self._signs == other._signs)

    def __repr__(self) -> str:
        return f"StabilizerTableau(n={self.n})"


def block_sites(width: int, start: int, n: int, boundary: str) -> list[int]:
    """Chain sites covered by a width-``width`` window starting at ``start``."""
    if width > n:
        raise ValueError(f"block of width {width} does not fit on {n} sites")
    if not 1 <= start <= n:
        raise ValueError(f"start site {start} out of range 1..{n}")
    if boundary == "periodic":
        return [(start - 1 + k) % n + 1 for k in range(width)]
    if boundary == "open":
        if start + width - 1 > n:
            raise ValueError(
                f"window [{start}, {start + width - 1}] overflows open chain of {n} sites")
        return list(range(start, start + width))
    raise ValueError(f"boundary must be 'periodic' or 'open', got {boundary!r}")


def _int_to_bitarray(value: int, nbits: int) -> np.ndarray:
    nbytes = (nbits + 7) // 8
    raw = np.frombuffer(value.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:nbits]


def _columns_to_matrix(cols: Iterable[int], n: int) -> np.ndarray:
    mat = np.empty((n, n), dtype=np.uint8)
    for q, c in enumerate(cols):
        mat[:, q] = _int_to_bitarray(c, n)
    return mat
