"""Linear algebra over F2 on bit-packed data."""
from __future__ import annotations

import numpy as np


def rank_int_vectors(vectors: list[int]) -> int:
    """Rank over F2 of a collection of bit-packed vectors (python ints).

    Online row reduction with a pivot table keyed by the most significant
    set bit. Cost is O(k * rank) word-XORs for k vectors.
    """
    pivots: dict[int, int] = {}
    rank = 0
    for v in vectors:
        while v:
            b = v.bit_length() - 1
            p = pivots.get(b)
            if p is None:
                pivots[b] = v
                rank += 1
                break
            v ^= p
    return rank


def rank_binary_matrix(mat: np.ndarray) -> int:
    """Rank over F2 of a dense 0/1 matrix (any integer dtype)."""
    if mat.size == 0:
        return 0
    rows = [int.from_bytes(np.packbits(row.astype(np.uint8), bitorder="little").tobytes(), "little")
            for row in np.atleast_2d(mat)]
    return rank_int_vectors(rows)
