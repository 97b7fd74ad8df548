"""QUBO instances and the exhaustive oracle solver.

Energy convention: E(x) = x^T Q x with Q stored symmetric, so each unordered
pair (i, j) contributes (Q_ij + Q_ji) x_i x_j and the diagonal holds the
linear terms. Builders write half of a pair coefficient into each mirror
entry.

Bit vectors are encoded as integers with x_0 as the most significant bit,
so "lowest integer encoding" and "lexicographically lowest tuple" agree.
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from app.exceptions import ContractViolation, ProblemTooLarge

BitVector = np.ndarray

EXACT_LIMIT = 22
_EXACT_CHUNK = 1 << 16


@dataclass(frozen=True)
class QuboMatrix:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 1:
            raise ContractViolation(f"QUBO matrix must be square with n >= 1, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ContractViolation("QUBO matrix has non-finite entries")
        if not np.array_equal(c, c.T):
            raise ContractViolation("QUBO matrix must be symmetric")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_any(cls, matrix) -> "QuboMatrix":
        """Symmetrize an arbitrary square matrix without changing x^T M x."""
        m = np.asarray(matrix, dtype=np.float64)
        return cls(0.5 * (m + m.T))

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    def pair_coefficient(self, i: int, j: int) -> float:
        return float(self.coeffs[i, j] + self.coeffs[j, i])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def scaled(self, factor: float) -> "QuboMatrix":
        return QuboMatrix(self.coeffs * factor)

    def permuted(self, perm: Sequence[int]) -> "QuboMatrix":
        p = np.asarray(perm)
        return QuboMatrix(self.coeffs[np.ix_(p, p)])


def as_bits(x: Union[Sequence[int], np.ndarray], n: int) -> np.ndarray:
    bits = np.asarray(x, dtype=np.int8).reshape(-1)
    if bits.shape[0] != n:
        raise ContractViolation(f"bit vector length {bits.shape[0]} does not match QUBO size {n}")
    if np.any((bits != 0) & (bits != 1)):
        raise ContractViolation("bit vector entries must be 0 or 1")
    return bits


def energy(q: QuboMatrix, x: Union[Sequence[int], np.ndarray]) -> float:
    bits = as_bits(x, q.n).astype(np.float64)
    return float(bits @ q.coeffs @ bits)


def bits_to_int(x: Union[Sequence[int], np.ndarray]) -> int:
    value = 0
    for b in np.asarray(x).reshape(-1):
        value = (value << 1) | int(b)
    return value


def int_to_bits(code: int, n: int) -> np.ndarray:
    return np.array([(code >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.int8)


def _enumerate_energies(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.shape[0]
    total = 1 << n
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    energies = np.empty(total, dtype=np.float64)

    for start in range(0, total, _EXACT_CHUNK):
        codes = np.arange(start, min(start + _EXACT_CHUNK, total), dtype=np.int64)
        X = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        energies[start:start + len(codes)] = np.einsum("bi,ij,bj->b", X, coeffs, X)

    return energies


def solve_exact(q: QuboMatrix) -> BitVector:
    """Global minimizer by enumerating all 2^n assignments.

    Near-equal energies (within 1e-9 relative) count as ties and resolve to
    the lowest integer encoding.
    """
    if q.n > EXACT_LIMIT:
        raise ProblemTooLarge(q.n, EXACT_LIMIT)

    energies = _enumerate_energies(q.coeffs)
    e_min = float(energies.min())
    tol = 1e-9 * max(1.0, abs(e_min))
    code = int(np.argmax(energies <= e_min + tol))
    return int_to_bits(code, q.n)


def minimum_energy_set(q: QuboMatrix, tol: float = 1e-9) -> list:
    """All minimizers (as bit tuples), lowest encoding first."""
    if q.n > EXACT_LIMIT:
        raise ProblemTooLarge(q.n, EXACT_LIMIT)

    energies = _enumerate_energies(q.coeffs)
    e_min = float(energies.min())
    codes = np.flatnonzero(energies <= e_min + tol * max(1.0, abs(e_min)))
    return [tuple(int(b) for b in int_to_bits(int(c), q.n)) for c in codes]
