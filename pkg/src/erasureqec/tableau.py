"""Stabilizer-tableau reference simulator (Aaronson-Gottesman), used as an oracle.

Slow and exact: it tracks the full state rather than a Pauli frame, so it is
an independent check on :mod:`erasureqec.frame`.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np

from .circuit import Circuit, Detector, ErasureCheck, Gate, MeasureFlip, NoiseSite, Observable, PauliError, UnsupportedInstruction


class Tableau:
    """2n x (2n+1) tableau: rows 0..n-1 destabilizers, n..2n-1 stabilizers."""

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=bool)
        for i in range(n):
            self.x[i, i] = True
            self.z[n + i, i] = True

    def h(self, q):
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def cx(self, c, t):
        self.r ^= self.x[:, c] & self.z[:, t] & ~(self.x[:, t] ^ self.z[:, c])
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    def pauli(self, q, letter):
        if letter in ("X", "Y"):
            self.r ^= self.z[:, q]
        if letter in ("Z", "Y"):
            self.r ^= self.x[:, q]

    @staticmethod
    def _g(x1, z1, x2, z2):
        # exponent of i picked up when multiplying single-qubit Paulis
        x1 = x1.astype(int); z1 = z1.astype(int); x2 = x2.astype(int); z2 = z2.astype(int)
        return np.where(
            (x1 == 0) & (z1 == 0), 0,
            np.where((x1 == 1) & (z1 == 1), z2 - x2,
                     np.where(x1 == 1, z2 * (2 * x2 - 1), x2 * (1 - 2 * z2))))

    def _rowmult(self, h, i):
        """Row h <- row i * row h."""
        total = 2 * int(self.r[h]) + 2 * int(self.r[i]) + int(np.sum(self._g(self.x[i], self.z[i], self.x[h], self.z[h])))
        self.r[h] = (total % 4) == 2
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def measure(self, q, choose: Callable[[], int]) -> tuple[int, bool]:
        """Z-measure qubit q. Returns (outcome, was_random)."""
        n = self.n
        hits = np.flatnonzero(self.x[n:, q])
        if len(hits):
            p = n + hits[0]
            for i in range(2 * n):
                if i != p and self.x[i, q]:
                    self._rowmult(i, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p].copy(), self.z[p].copy(), self.r[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, q] = True
            outcome = int(choose()) & 1
            self.r[p] = bool(outcome)
            return outcome, True
        # deterministic: accumulate in a scratch row
        sx = np.zeros(n, dtype=bool)
        sz = np.zeros(n, dtype=bool)
        sr = 0
        for i in np.flatnonzero(self.x[:n, q]):
            row = n + i
            total = 2 * sr + 2 * int(self.r[row]) + int(np.sum(self._g(self.x[row], self.z[row], sx, sz)))
            sr = 1 if (total % 4) == 2 else 0
            sx ^= self.x[row]
            sz ^= self.z[row]
        return sr, False


def _inject(tab: Tableau, errors: Sequence[tuple[int, str]]):
    for q, letter in errors:
        tab.pauli(q, letter)


def run_tableau(circuit: Circuit, errors: Mapping[int, Sequence[tuple[int, str]]] | None = None,
                choices: Sequence[int] | None = None) -> tuple[np.ndarray, int]:
    """Simulate and return (measurement outcomes, number of random events).

    ``errors`` maps an instruction position to Paulis applied just before it.
    ``choices`` supplies outcomes for random measurements and resets in the
    order they occur (default all 0).
    """
    errors = errors or {}
    tab = Tableau(circuit.num_qubits)
    outcomes = []
    k = [0]

    def choose():
        v = choices[k[0]] if choices is not None and k[0] < len(choices) else 0
        k[0] += 1
        return v

    for pos, ins in enumerate(circuit.instructions):
        _inject(tab, errors.get(pos, ()))
        if isinstance(ins, Gate):
            t = ins.targets
            if ins.name == "CX":
                for c, tq in zip(t[::2], t[1::2]):
                    tab.cx(c, tq)
            elif ins.name == "H":
                for q in t:
                    tab.h(q)
            elif ins.name == "R":
                for q in t:
                    out, _ = tab.measure(q, choose)
                    if out:
                        tab.pauli(q, "X")
            elif ins.name == "M":
                for q in t:
                    outcomes.append(tab.measure(q, choose)[0])
        elif isinstance(ins, PauliError):
            tab.pauli(ins.qubit, ins.pauli)
        elif isinstance(ins, (NoiseSite, ErasureCheck, MeasureFlip, Detector, Observable)):
            pass  # stochastic sites are realised only through ``errors``
        else:
            raise UnsupportedInstruction(repr(ins))
    _inject(tab, errors.get(len(circuit.instructions), ()))
    return np.array(outcomes, dtype=np.uint8), k[0]


def _parities(circuit: Circuit, outcomes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    det = np.array([int(np.sum(outcomes[list(d.measurements)])) & 1 for d in circuit.detectors], dtype=np.uint8)
    obs = np.array([int(np.sum(outcomes[list(o.measurements)])) & 1 for o in circuit.observables], dtype=np.uint8)
    return det, obs


def tableau_reference_sim(circuit: Circuit, errors: Mapping[int, Sequence[tuple[int, str]]] | None = None
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Detector and observable flips caused by a fixed error assignment.

    Both the noisy and the noiseless run resolve random outcomes to 0; for
    deterministic detectors the difference does not depend on that choice.
    Injected ``PAULI`` instructions count as errors (the reference omits them).
    """
    noisy, _ = run_tableau(circuit, errors)
    clean_circuit = Circuit(circuit.num_qubits, [i for i in circuit.instructions if not isinstance(i, PauliError)])
    clean, _ = run_tableau(clean_circuit)
    d1, o1 = _parities(circuit, noisy)
    d0, o0 = _parities(clean_circuit, clean)
    return d1 ^ d0, o1 ^ o0


def random_outcome_basis(circuit: Circuit) -> tuple[np.ndarray, np.ndarray]:
    """Affine description of the noiseless measurement record.

    Every outcome vector equals ``base ^ (c @ diffs)`` for some choice vector
    c, so a parity of measurements is deterministic iff it annihilates every
    row of ``diffs``.
    """
    base, n_random = run_tableau(circuit)
    diffs = []
    for k in range(n_random):
        choices = [0] * n_random
        choices[k] = 1
        out, _ = run_tableau(circuit, choices=choices)
        diffs.append(out ^ base)
    return base, np.array(diffs, dtype=np.uint8).reshape(n_random, len(base))
