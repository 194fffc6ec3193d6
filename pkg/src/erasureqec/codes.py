"""Stabilizer codes: the four-qubit example code and rotated surface codes.

Text format (one operator per line, qubits 1-based)::

    n 4
    S X1 X3
    S Z1 Z2 Z3 Z4
    S X2 X4
    LX X1 X2
    LZ Z1 Z3
    d 2

Lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .pauli import DimensionError, PauliOp, pauli_commutes


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class StabilizerCode:
    n: int
    stabilizers: tuple[PauliOp, ...]
    logical_x: tuple[PauliOp, ...]
    logical_z: tuple[PauliOp, ...]
    distance: int
    name: str = ""
    # Per-stabilizer CX order for syndrome extraction: 4 slots, -1 = idle.
    cx_schedule: tuple[tuple[int, ...], ...] = field(default=(), compare=False)

    @property
    def k(self) -> int:
        return len(self.logical_x)

    def stabilizer_type(self, i: int) -> str:
        """'X', 'Z' or 'mixed' for stabilizer ``i``."""
        s = self.stabilizers[i]
        if not s.z.any():
            return "X"
        if not s.x.any():
            return "Z"
        return "mixed"

    def to_text(self) -> str:
        lines = [f"n {self.n}"]
        lines += [f"S {s.sparse_label(one_based=True)}" for s in self.stabilizers]
        lines += [f"LX {op.sparse_label(one_based=True)}" for op in self.logical_x]
        lines += [f"LZ {op.sparse_label(one_based=True)}" for op in self.logical_z]
        lines.append(f"d {self.distance}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "StabilizerCode":
        n = distance = None
        ops: dict[str, list[PauliOp]] = {"S": [], "LX": [], "LZ": []}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, *rest = line.split()
            if head == "n":
                n = int(rest[0])
            elif head == "d":
                distance = int(rest[0])
            elif head in ops:
                if n is None:
                    raise ValueError("'n' line must come first")
                ops[head].append(PauliOp.from_sparse(n, {int(t[1:]) - 1: t[0] for t in rest}))
            else:
                raise ValueError(f"unknown line: {raw!r}")
        if n is None or distance is None:
            raise ValueError("code text needs both 'n' and 'd' lines")
        return cls(n, tuple(ops["S"]), tuple(ops["LX"]), tuple(ops["LZ"]), distance)


def build_d2_surface_code() -> StabilizerCode:
    """The n=4 distance-2 example: stabilizers X1X3, Z1Z2Z3Z4, X2X4 in that order."""
    n = 4
    stabs = (
        PauliOp.from_sparse(n, {0: "X", 2: "X"}),
        PauliOp.from_sparse(n, {0: "Z", 1: "Z", 2: "Z", 3: "Z"}),
        PauliOp.from_sparse(n, {1: "X", 3: "X"}),
    )
    lx = (PauliOp.from_sparse(n, {0: "X", 1: "X"}),)
    lz = (PauliOp.from_sparse(n, {0: "Z", 2: "Z"}),)
    # Z ancilla visits d1..d4 in order. Each X ancilla touches both of its
    # qubits on the same side of the Z ancilla's visits (a1 after, a3 before),
    # otherwise the two measurements would not commute.
    schedule = ((-1, 0, -1, 2), (0, 1, 2, 3), (1, -1, 3, -1))
    return StabilizerCode(n, stabs, lx, lz, 2, "d2", schedule)


def build_rotated_surface_code(d: int) -> StabilizerCode:
    """Rotated surface code on a d x d grid, qubit index ``r * d + c``.

    Plaquette (r, c) has top-left corner at data (r, c), for r, c in -1..d-1.
    Bulk plaquettes alternate X/Z in a checkerboard; weight-2 X checks sit on
    the top/bottom edges and weight-2 Z checks on the left/right edges.
    Stabilizers are ordered X-type first, then Z-type, each row-major.
    """
    if not isinstance(d, (int, np.integer)) or d < 3 or d % 2 == 0:
        raise ValueError(f"rotated surface code needs odd d >= 3, got {d!r}")
    n = d * d

    def corners(r, c):
        # NW, NE, SW, SE
        out = []
        for dr, dc in ((0, 0), (0, 1), (1, 0), (1, 1)):
            rr, cc = r + dr, c + dc
            out.append(rr * d + cc if 0 <= rr < d and 0 <= cc < d else -1)
        return out

    xs, zs = [], []
    for r in range(-1, d):
        for c in range(-1, d):
            kind = "X" if (r + c) % 2 == 0 else "Z"
            bulk = 0 <= r < d - 1 and 0 <= c < d - 1
            if not bulk:
                on_tb = r in (-1, d - 1) and 0 <= c < d - 1
                on_lr = c in (-1, d - 1) and 0 <= r < d - 1
                if not ((kind == "X" and on_tb) or (kind == "Z" and on_lr)):
                    continue
            nw, ne, sw, se = corners(r, c)
            if kind == "X":
                # Z-shaped order: hook errors end up horizontal, across logical X.
                xs.append((nw, ne, sw, se))
            else:
                # N-shaped order: hook errors end up vertical, across logical Z.
                zs.append((nw, sw, ne, se))

    stabs = []
    for kind, group in (("X", xs), ("Z", zs)):
        for slots in group:
            stabs.append(PauliOp.from_sparse(n, {q: kind for q in slots if q >= 0}))
    lx = (PauliOp.from_sparse(n, {r * d: "X" for r in range(d)}),)
    lz = (PauliOp.from_sparse(n, {c: "Z" for c in range(d)}),)
    return StabilizerCode(n, tuple(stabs), lx, lz, d, f"rotated-d{d}", tuple(xs + zs))


def syndrome_of(code: StabilizerCode, error: PauliOp) -> np.ndarray:
    """Bit i is set iff ``error`` anticommutes with stabilizer i."""
    if error.n != code.n:
        raise DimensionError(f"error acts on {error.n} qubits, code has {code.n}")
    return np.array([0 if pauli_commutes(s, error) else 1 for s in code.stabilizers], dtype=np.uint8)


def logical_class(code: StabilizerCode, pauli: PauliOp) -> tuple[str, ...]:
    """Logical coset label ('I', 'X', 'Y' or 'Z') per logical qubit."""
    if syndrome_of(code, pauli).any():
        raise PreconditionError("operator has nonzero syndrome; not a logical class member")
    labels = []
    for lx, lz in zip(code.logical_x, code.logical_z):
        has_x = not pauli_commutes(pauli, lz)
        has_z = not pauli_commutes(pauli, lx)
        labels.append({(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}[(has_x, has_z)])
    return tuple(labels)


def stabilizer_group(code: StabilizerCode):
    """Yield every element of the stabilizer group (2**len(stabilizers) items)."""
    for bits in itertools.product((0, 1), repeat=len(code.stabilizers)):
        x = np.zeros(code.n, np.uint8)
        z = np.zeros(code.n, np.uint8)
        for b, s in zip(bits, code.stabilizers):
            if b:
                x ^= s.x
                z ^= s.z
        yield PauliOp(x, z)


def all_paulis_on(n: int, qubits) -> "itertools.product":
    """Yield every Pauli supported on ``qubits`` (4**len(qubits) items)."""
    qubits = list(qubits)
    for letters in itertools.product("IXYZ", repeat=len(qubits)):
        yield PauliOp.from_sparse(n, dict(zip(qubits, letters)))


def min_logical_weight(code: StabilizerCode, max_weight: int | None = None) -> int | None:
    """Smallest weight of an undetected nontrivial logical, by enumeration.

    Returns None if nothing is found up to ``max_weight``.
    """
    max_weight = code.n if max_weight is None else max_weight
    for w in range(1, max_weight + 1):
        for qubits in itertools.combinations(range(code.n), w):
            for letters in itertools.product("XYZ", repeat=w):
                op = PauliOp.from_sparse(code.n, dict(zip(qubits, letters)))
                if not syndrome_of(code, op).any() and set(logical_class(code, op)) != {"I"}:
                    return w
    return None
