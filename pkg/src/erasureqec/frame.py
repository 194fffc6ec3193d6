"""Pauli-frame sampling with heralded-erasure tracking.

Frames are stored as boolean arrays of shape ``(num_qubits, block)``, one
column per shot. Shots are generated in fixed blocks of :data:`BLOCK`; block
``b`` of seed ``s`` draws from a Philox stream keyed on ``(s, b)``, so the
shot stream is independent of how blocks are distributed across workers.

Erased qubits carry a mark. While marked, a qubit measures at random and
every CX it takes part in hits the partner with a uniformly random Pauli.
An erasure check heralds a marked qubit with probability ``1 - f_neg`` and
applies the conversion channel either way; a missed erasure stays marked.
A false flag on a good qubit applies the conversion channel (one-way reset)
or marks it erased (unitary reset).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .channels import Conversion, Reset
from .circuit import (
    Circuit,
    Detector,
    ErasureCheck,
    Gate,
    MeasureFlip,
    NoiseSite,
    Observable,
    PauliError,
    UnsupportedInstruction,
)

BLOCK = 4096
_PAULI_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


@dataclass(frozen=True)
class ShotRecord:
    detectors: np.ndarray
    erasure_flags: frozenset[int]
    observable: np.ndarray

    def to_json(self, shot: int) -> str:
        return json.dumps({
            "shot": shot,
            "detectors": "".join("1" if b else "0" for b in self.detectors),
            "flags": sorted(self.erasure_flags),
            "obs": "".join("1" if b else "0" for b in self.observable),
        }, separators=(", ", ": "))


@dataclass
class SampleBatch:
    """Shot-major arrays: detectors (S, D), flags (S, C), observables (S, K)."""

    detectors: np.ndarray
    flags: np.ndarray
    observables: np.ndarray
    check_ids: np.ndarray

    def __len__(self) -> int:
        return self.detectors.shape[0]

    def records(self) -> list[ShotRecord]:
        out = []
        for s in range(len(self)):
            flagged = frozenset(int(c) for c in self.check_ids[self.flags[s]])
            out.append(ShotRecord(self.detectors[s].copy(), flagged, self.observables[s].copy()))
        return out


def _split_pairs(targets):
    """Split CX pairs into chunks with no repeated qubit, keeping order."""
    chunks, cur, used = [], [], set()
    for c, t in zip(targets[::2], targets[1::2]):
        if c in used or t in used:
            chunks.append(cur)
            cur, used = [], set()
        cur.append((c, t))
        used.update((c, t))
    if cur:
        chunks.append(cur)
    return [(np.array([c for c, _ in ch]), np.array([t for _, t in ch])) for ch in chunks]


def _parity_table(circuit: Circuit, kind) -> list[tuple[int, ...]]:
    items = circuit.detectors if kind is Detector else circuit.observables
    return [tuple(i.measurements) for i in items]


def _xor_rows(meas: np.ndarray, groups: list[tuple[int, ...]]) -> np.ndarray:
    out = np.zeros((len(groups), meas.shape[1]), dtype=bool)
    by_len: dict[int, list[int]] = {}
    for i, g in enumerate(groups):
        by_len.setdefault(len(g), []).append(i)
    for n, rows in by_len.items():
        if n == 0:
            continue
        idx = np.array([groups[r] for r in rows])
        out[rows] = np.bitwise_xor.reduce(meas[idx], axis=1)
    return out


class FrameSampler:
    """Compiled sampler for one circuit."""

    def __init__(self, circuit: Circuit, force_checks: Iterable[int] = ()):
        self.circuit = circuit
        self.check_ids = np.array(circuit.check_ids, dtype=np.int64)
        row_of = {c: i for i, c in enumerate(circuit.check_ids)}
        forced = set(force_checks)
        unknown = forced - set(row_of)
        if unknown:
            raise ValueError(f"forced check ids not in circuit: {sorted(unknown)}")
        self._dets = _parity_table(circuit, Detector)
        self._obs = _parity_table(circuit, Observable)
        self._ops = self._compile(row_of, forced)

    def _compile(self, row_of, forced):
        ops = []
        group: list = []

        def flush():
            if not group:
                return
            kind = type(group[0])
            qs = np.array([g.qubit for g in group])
            if kind is NoiseSite:
                e = np.array([g.e for g in group])
                p = np.array([g.p for g in group])
                bias = np.array([g.bias for g in group], dtype=float)
                bias /= bias.sum(axis=1, keepdims=True)
                c1 = bias[:, 0]
                c2 = bias[:, 0] + bias[:, 1]
                if e.any() or p.any():
                    ops.append(("N", qs, e[:, None], (e + p)[:, None], c1[:, None], c2[:, None]))
            elif kind is ErasureCheck:
                ops.append((
                    "C", qs,
                    np.array([row_of[g.check_id] for g in group]),
                    np.array([g.f_pos for g in group])[:, None],
                    np.array([1.0 - g.f_neg for g in group])[:, None],
                    np.array([g.conversion is Conversion.MIXED for g in group])[:, None],
                    np.array([g.reset is Reset.UNITARY for g in group])[:, None],
                    np.array([g.check_id in forced for g in group])[:, None],
                ))
            elif kind is MeasureFlip:
                q = np.array([g.q for g in group])
                if q.any():
                    ops.append(("F", qs, q[:, None]))
            group.clear()

        for ins in self.circuit.instructions:
            if isinstance(ins, (NoiseSite, ErasureCheck, MeasureFlip)):
                if group and type(group[0]) is not type(ins):
                    flush()
                # a qubit may appear only once per vectorized group
                if any(g.qubit == ins.qubit for g in group):
                    flush()
                group.append(ins)
                continue
            flush()
            if isinstance(ins, Gate):
                t = ins.targets
                if ins.name == "CX":
                    for cs, ts in _split_pairs(t):
                        ops.append(("CX", cs, ts))
                else:
                    for chunk in _split_unique(t):
                        ops.append((ins.name, chunk))
            elif isinstance(ins, PauliError):
                xb, zb = _PAULI_BITS[ins.pauli]
                ops.append(("P", ins.qubit, bool(xb), bool(zb)))
            elif isinstance(ins, (Detector, Observable)):
                pass
            else:
                raise UnsupportedInstruction(repr(ins))
        flush()
        return ops

    def sample_block(self, rng: np.random.Generator, size: int):
        nq = self.circuit.num_qubits
        x = np.zeros((nq, size), dtype=bool)
        z = np.zeros((nq, size), dtype=bool)
        erased = np.zeros((nq, size), dtype=bool)
        meas = np.zeros((self.circuit.num_measurements, size), dtype=bool)
        flags = np.zeros((len(self.check_ids), size), dtype=bool)
        m = 0

        def coin(shape):
            return rng.random(shape) < 0.5

        for op in self._ops:
            kind = op[0]
            if kind == "CX":
                _, cs, ts = op
                x[ts] ^= x[cs]
                z[cs] ^= z[ts]
                ec = erased[cs]
                if ec.any():
                    x[ts] ^= ec & coin(ec.shape)
                    z[ts] ^= ec & coin(ec.shape)
                et = erased[ts]
                if et.any():
                    x[cs] ^= et & coin(et.shape)
                    z[cs] ^= et & coin(et.shape)
            elif kind == "H":
                qs = op[1]
                x[qs], z[qs] = z[qs], x[qs].copy()
            elif kind == "R":
                qs = op[1]
                x[qs] = False
                z[qs] = False
                erased[qs] = False
            elif kind == "M":
                qs = op[1]
                out = x[qs].copy()
                er = erased[qs]
                if er.any():
                    out ^= er & coin(er.shape)
                meas[m:m + len(qs)] = out
                m += len(qs)
            elif kind == "N":
                _, qs, e, ep, c1, c2 = op
                u = rng.random((len(qs), size))
                er = u < e
                pa = ~er & (u < ep)
                erased[qs] |= er
                if pa.any():
                    v = rng.random((len(qs), size))
                    x[qs] ^= pa & (v < c2)
                    z[qs] ^= pa & (v >= c1)
            elif kind == "C":
                _, qs, rows, f_pos, p_herald, mixed, unitary, force = op
                E = erased[qs] | force
                u = rng.random((len(qs), size))
                hit = u < p_herald
                herald = (E & hit) | force
                missed = E & ~herald
                false_pos = ~E & (u < f_pos)
                flags[rows] = herald | false_pos
                convert = herald | missed | (false_pos & ~unitary)
                if convert.any():
                    r = coin((2, len(qs), size))
                    x[qs] ^= convert & mixed & r[0]
                    z[qs] ^= convert & r[1]
                erased[qs] = missed | (false_pos & unitary)
            elif kind == "F":
                _, qs, q = op
                x[qs] ^= rng.random((len(qs), size)) < q
            elif kind == "P":
                _, q, xb, zb = op
                if xb:
                    x[q] ^= True
                if zb:
                    z[q] ^= True

        dets = _xor_rows(meas, self._dets)
        obs = _xor_rows(meas, self._obs)
        return dets.T.copy(), flags.T.copy(), obs.T.copy()

    def sample(self, n_shots: int, seed: int, first_block: int = 0) -> SampleBatch:
        if n_shots < 1:
            raise ValueError("n_shots must be >= 1")
        n_blocks = -(-n_shots // BLOCK)
        parts = [self.sample_block(block_rng(seed, first_block + b), BLOCK) for b in range(n_blocks)]
        dets, flags, obs = (np.concatenate(a)[:n_shots] for a in zip(*parts))
        return SampleBatch(dets, flags, obs, self.check_ids)


def _split_unique(targets):
    chunks, cur = [], []
    for q in targets:
        if q in cur:
            chunks.append(np.array(cur))
            cur = []
        cur.append(q)
    if cur:
        chunks.append(np.array(cur))
    return chunks


def block_rng(seed: int, block: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in 64 bits")
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(block)))


def sample_shots(circuit: Circuit, n_shots: int, seed: int, force_checks: Iterable[int] = ()) -> list[ShotRecord]:
    return FrameSampler(circuit, force_checks).sample(n_shots, seed).records()


# --------------------------------------------------------------------------- fault propagation

@dataclass(frozen=True)
class Fault:
    position: int
    qubit: int
    pauli: str


def propagate_faults(circuit: Circuit, faults: list[Fault]) -> tuple[np.ndarray, np.ndarray]:
    """Detector and observable flips caused by each single fault in isolation.

    A fault at ``position`` acts just before instruction ``position``.
    Returns boolean arrays of shape (F, D) and (F, K). Noise instructions and
    erasure marks are ignored; injected ``PAULI`` instructions are not.
    """
    nf = len(faults)
    nq = circuit.num_qubits
    x = np.zeros((nq, nf), dtype=bool)
    z = np.zeros((nq, nf), dtype=bool)
    meas = np.zeros((circuit.num_measurements, nf), dtype=bool)
    at: dict[int, list[int]] = {}
    for i, f in enumerate(faults):
        at.setdefault(f.position, []).append(i)
    m = 0
    for pos, ins in enumerate(circuit.instructions):
        for i in at.get(pos, ()):
            xb, zb = _PAULI_BITS[faults[i].pauli]
            x[faults[i].qubit, i] ^= bool(xb)
            z[faults[i].qubit, i] ^= bool(zb)
        if isinstance(ins, Gate):
            t = ins.targets
            if ins.name == "CX":
                for c, tq in zip(t[::2], t[1::2]):
                    x[tq] ^= x[c]
                    z[c] ^= z[tq]
            elif ins.name == "H":
                for q in t:
                    x[q], z[q] = z[q].copy(), x[q].copy()
            elif ins.name == "R":
                x[list(t)] = False
                z[list(t)] = False
            elif ins.name == "M":
                meas[m:m + len(t)] = x[list(t)]
                m += len(t)
        elif isinstance(ins, PauliError):
            pass  # fixed injections belong to the reference, not to a fault
    return _xor_rows(meas, _parity_table(circuit, Detector)).T, _xor_rows(meas, _parity_table(circuit, Observable)).T
