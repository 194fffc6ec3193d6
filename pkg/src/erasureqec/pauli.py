"""Symplectic Pauli operators (phases dropped)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    pass


_LETTER = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {v: k for k, v in _LETTER.items()}


@dataclass(frozen=True, eq=False)
class PauliOp:
    """An n-qubit Pauli stored as X and Z bit-vectors."""

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.uint8) & 1
        z = np.asarray(self.z, dtype=np.uint8) & 1
        if x.ndim != 1 or x.shape != z.shape:
            raise DimensionError(f"x/z bit-vectors must be equal-length 1-d, got {x.shape} and {z.shape}")
        x.flags.writeable = False
        z.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def identity(cls, n: int) -> "PauliOp":
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def from_sparse(cls, n: int, terms: dict[int, str]) -> "PauliOp":
        """Build from ``{qubit: letter}``, e.g. ``{0: "X", 2: "Z"}``."""
        x = np.zeros(n, np.uint8)
        z = np.zeros(n, np.uint8)
        for q, letter in terms.items():
            x[q], z[q] = _BITS[letter.upper()]
        return cls(x, z)

    @classmethod
    def from_string(cls, s: str) -> "PauliOp":
        """Dense label such as ``"XIZY"`` (qubit 0 first)."""
        return cls.from_sparse(len(s), {i: c for i, c in enumerate(s)})

    def letter(self, q: int) -> str:
        return _LETTER[(int(self.x[q]), int(self.z[q]))]

    def __str__(self) -> str:
        return "".join(self.letter(q) for q in range(self.n))

    def __repr__(self) -> str:
        return f"PauliOp({str(self)!r})"

    def __mul__(self, other: "PauliOp") -> "PauliOp":
        _check_dims(self, other)
        return PauliOp(self.x ^ other.x, self.z ^ other.z)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliOp):
            return NotImplemented
        return self.n == other.n and bool(np.all(self.x == other.x) and np.all(self.z == other.z))

    def __hash__(self) -> int:
        return hash((self.x.tobytes(), self.z.tobytes()))

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    @property
    def support(self) -> list[int]:
        return [int(q) for q in np.flatnonzero(self.x | self.z)]

    def sparse_label(self, one_based: bool = False) -> str:
        off = 1 if one_based else 0
        return " ".join(f"{self.letter(q)}{q + off}" for q in self.support)


def _check_dims(a: PauliOp, b: PauliOp) -> None:
    if a.n != b.n:
        raise DimensionError(f"qubit counts differ: {a.n} vs {b.n}")


def pauli_commutes(a: PauliOp, b: PauliOp) -> bool:
    """True iff the symplectic inner product of ``a`` and ``b`` vanishes."""
    _check_dims(a, b)
    return (int(np.dot(a.x, b.z)) + int(np.dot(a.z, b.x))) % 2 == 0
