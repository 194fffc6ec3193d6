"""Brute-force maximum-likelihood decoding over logical cosets (small codes only)."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np

from ..channels import Conversion, conversion_channel
from ..codes import StabilizerCode
from ..pauli import PauliOp

MAX_QUBITS = 16
TIE_ORDER = ("I", "X", "Z", "Y")


@dataclass(frozen=True)
class MLResult:
    coset: str
    probabilities: dict[str, float]
    correction: PauliOp


@functools.lru_cache(maxsize=16)
def _group(code: StabilizerCode) -> tuple[np.ndarray, np.ndarray]:
    m = len(code.stabilizers)
    sx = np.array([s.x for s in code.stabilizers], dtype=np.uint8)
    sz = np.array([s.z for s in code.stabilizers], dtype=np.uint8)
    bits = np.array(list(itertools.product((0, 1), repeat=m)), dtype=np.uint8).reshape(-1, m)
    return (bits @ sx) & 1, (bits @ sz) & 1


def _solve_gf2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """One solution of a v = b over GF(2); raises if inconsistent."""
    a = a.copy() % 2
    b = b.copy() % 2
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        hit = np.flatnonzero(a[r:, c])
        if not len(hit):
            continue
        p = r + hit[0]
        a[[r, p]] = a[[p, r]]
        b[[r, p]] = b[[p, r]]
        for i in range(rows):
            if i != r and a[i, c]:
                a[i] ^= a[r]
                b[i] ^= b[r]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    if np.any(b[r:]):
        raise ValueError("syndrome is inconsistent with the stabilizers")
    v = np.zeros(cols, dtype=np.uint8)
    for i, c in enumerate(pivots):
        v[c] = b[i]
    return v


def pure_error(code: StabilizerCode, syndrome) -> PauliOp:
    n = code.n
    a = np.array([np.concatenate([s.z, s.x]) for s in code.stabilizers], dtype=np.uint8)
    v = _solve_gf2(a, np.asarray(syndrome, dtype=np.uint8))
    return PauliOp(v[:n], v[n:])


def _logical_reps(code: StabilizerCode) -> dict[str, PauliOp]:
    if code.k != 1:
        raise ValueError("ML oracle supports one logical qubit")
    lx, lz = code.logical_x[0], code.logical_z[0]
    return {"I": PauliOp.identity(code.n), "X": lx, "Z": lz, "Y": lx * lz}


def ml_decode_bruteforce(code: StabilizerCode, p, erasure=(), syndrome=None,
                         conversion: Conversion = Conversion.MIXED) -> MLResult:
    """Most likely logical coset given the syndrome and the erased qubits.

    Non-erased qubit q suffers depolarizing noise with probability ``p[q]``
    (a scalar applies to every qubit). Erased qubits carry the conversion
    channel. Coset probabilities sum the prior of every error in the coset;
    ties go to I, then X, Z, Y.
    """
    n = code.n
    if n > MAX_QUBITS:
        raise ValueError(f"brute-force ML refuses codes with n > {MAX_QUBITS} (got {n})")
    p = np.broadcast_to(np.asarray(p, dtype=float), (n,))
    table = np.stack([1 - p, p / 3, p / 3, p / 3], axis=1)
    conv = conversion_channel(conversion).as_array()
    for q in erasure:
        table[q] = conv
    syndrome = np.zeros(len(code.stabilizers), np.uint8) if syndrome is None else np.asarray(syndrome, np.uint8)
    rep = pure_error(code, syndrome)
    gx, gz = _group(code)
    rows = np.arange(n)
    probs = {}
    for label, lop in _logical_reps(code).items():
        base = rep * lop
        ex = gx ^ base.x
        ez = gz ^ base.z
        idx = ex + 3 * ez - 2 * (ex & ez)
        probs[label] = float(np.prod(table[rows, idx], axis=1).sum())
    total = sum(probs.values())
    if total > 0:
        probs = {k: v / total for k, v in probs.items()}
    best_p = max(probs.values())
    best = next(k for k in TIE_ORDER if probs[k] >= best_p * (1 - 1e-12))
    return MLResult(best, probs, rep * _logical_reps(code)[best])
