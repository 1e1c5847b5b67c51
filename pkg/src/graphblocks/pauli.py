"""Signed Pauli strings and their Heisenberg evolution under H/CZ circuits.

A string is stored as two bit-packed integers over sites plus a sign.
Conjugating by a whole block applies the block's gates in reverse
canonical order (CZ layer first, then H layer), which is the adjoint
ordering required for operator evolution; every gate here is its own
inverse so only the order matters.
"""
from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .stabilizer import block_sites, _int_to_bitarray

if TYPE_CHECKING:  # pragma: no cover
    from .graphs import GraphSpec


class PauliString:
    """Signed N-site Pauli operator; letter at site q from (x, z) bits."""

    __slots__ = ("n", "x", "z", "sign")

    def __init__(self, n: int, x: int = 0, z: int = 0, sign: int = 1):
        if n < 1:
            raise ValueError(f"need at least one site, got n={n}")
        if sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign}")
        self.n = n
        self.x = x
        self.z = z
        self.sign = sign

    @classmethod
    def single(cls, n: int, site: int, letter: str) -> "PauliString":
        """One non-identity letter at ``site`` (1-indexed)."""
        if not 1 <= site <= n:
            raise ValueError(f"site {site} out of range 1..{n}")
        bit = 1 << (site - 1)
        table = {"I": (0, 0), "X": (bit, 0), "Z": (0, bit), "Y": (bit, bit)}
        if letter not in table:
            raise ValueError(f"letter must be one of I, X, Y, Z, got {letter!r}")
        x, z = table[letter]
        return cls(n, x, z)

    def copy(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, self.sign)

    def _check_site(self, q: int) -> None:
        if not 1 <= q <= self.n:
            raise ValueError(f"site {q} out of range 1..{self.n}")

    # -- conjugation (self-adjoint gates: g W g) ------------------------

    def conjugate_h(self, q: int) -> "PauliString":
        self._check_site(q)
        bit = 1 << (q - 1)
        xb, zb = self.x & bit, self.z & bit
        if xb and zb:
            self.sign = -self.sign
        self.x = (self.x & ~bit) | (bit if zb else 0)
        self.z = (self.z & ~bit) | (bit if xb else 0)
        return self

    def conjugate_cz(self, q1: int, q2: int) -> "PauliString":
        if q1 == q2:
            raise ValueError("CZ needs two distinct sites")
        self._check_site(q1)
        self._check_site(q2)
        b1, b2 = 1 << (q1 - 1), 1 << (q2 - 1)
        x1, x2 = self.x & b1, self.x & b2
        if x1 and x2 and (bool(self.z & b1) ^ bool(self.z & b2)):
            self.sign = -self.sign
        if x2:
            self.z ^= b1
        if x1:
            self.z ^= b2
        return self

    def conjugate_block(self, block: "GraphSpec", start: int,
                        boundary: str = "periodic") -> "PauliString":
        """Conjugate by the block unitary: CZ layer first, then H layer."""
        sites = block_sites(block.n_vertices, start, self.n, boundary)
        for u, v in block.sorted_edges():
            self.conjugate_cz(sites[u - 1], sites[v - 1])
        for s in sites:
            self.conjugate_h(s)
        return self

    # -- observables -----------------------------------------------------

    def otoc_indicator(self, x_site: int) -> int:
        """1 iff the string anticommutes with Y at ``x_site``.

        Letter X or Z there anticommutes with Y; identity and Y commute,
        so the indicator is the XOR of the two component bits.
        """
        self._check_site(x_site)
        bit = 1 << (x_site - 1)
        return 1 if bool(self.x & bit) ^ bool(self.z & bit) else 0

    def anticommutation_mask(self) -> int:
        """Bit-packed OTOC indicator against Y probes on every site."""
        return self.x ^ self.z

    def support_mask(self) -> int:
        """Bit-packed mask of sites carrying a non-identity letter."""
        return self.x | self.z

    @property
    def x_bits(self) -> np.ndarray:
        return _int_to_bitarray(self.x, self.n)

    @property
    def z_bits(self) -> np.ndarray:
        return _int_to_bitarray(self.z, self.n)

    def letters(self) -> str:
        lut = np.array(["I", "X", "Z", "Y"])
        return "".join(lut[self.x_bits + 2 * self.z_bits])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (self.n, self.x, self.z, self.sign) == (other.n, other.x, other.z, other.sign)

    def __repr__(self) -> str:
        return f"PauliString({'+' if self.sign == 1 else '-'}{self.letters()})"
