"""Exhaustive small-instance checks run by ``erasureqec verify``."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, Detector, Gate, Observable, PauliError
from .codes import (
    StabilizerCode,
    build_d2_surface_code,
    build_rotated_surface_code,
    logical_class,
    syndrome_of,
)
from .decoders import build_decoding_graph, decode_batch
from .decoders.ml import ml_decode_bruteforce
from .frame import Fault, FrameSampler, propagate_faults
from .circuit import build_code_capacity_circuit
from .pauli import PauliOp
from .tableau import random_outcome_basis, run_tableau, tableau_reference_sim

# Single-qubit error -> (a1 a2 a3) on the four-qubit code, ancillas ordered X1X3, Z1Z2Z3Z4, X2X4.
D2_EXPECTED = {
    "Z": {1: "100", 2: "001", 3: "100", 4: "001"},
    "X": {1: "010", 2: "010", 3: "010", 4: "010"},
    "Y": {1: "110", 2: "011", 3: "110", 4: "011"},
}


@dataclass
class SuiteResult:
    name: str
    passed: bool
    cases: int
    failures: int
    lines: list[str] = field(default_factory=list)

    def summary(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.cases - self.failures}/{self.cases}"


def _decode(graph, decoder, dets, flags, check_ids):
    # indirection so the negative-control fixture can swap the decoder
    return decode_batch(graph, decoder, dets, flags, check_ids)


# --------------------------------------------------------------------------- d=2 table

def d2_syndrome_table() -> SuiteResult:
    code = build_d2_surface_code()
    lines = ["error  a1a2a3"]
    bad = 0
    for letter in "XYZ":
        for q in range(4):
            syn = "".join(str(b) for b in syndrome_of(code, PauliOp.from_sparse(4, {q: letter})))
            ok = syn == D2_EXPECTED[letter][q + 1]
            bad += not ok
            lines.append(f"{letter}{q + 1}     {syn}" + ("" if ok else f"  (expected {D2_EXPECTED[letter][q + 1]})"))
    return SuiteResult("d2_syndrome_table", bad == 0, 12, bad, lines)


# --------------------------------------------------------------------------- erasure decoding helpers

class _ErasureBench:
    """Code-capacity graphs for both bases, with one propagated row per (qubit, Pauli)."""

    def __init__(self, code: StabilizerCode):
        self.code = code
        self.parts = []
        for basis in ("Z", "X"):
            circuit = build_code_capacity_circuit(code, 0.5, 0.0, basis)
            graph = build_decoding_graph(circuit, basis)
            check_pos = {ins.check_id: pos for pos, ins in enumerate(circuit.instructions)
                         if hasattr(ins, "check_id")}
            faults = [Fault(check_pos[q] + 1, q, letter) for q in range(code.n) for letter in "XYZ"]
            dflip, oflip = propagate_faults(circuit, faults)
            check_ids = np.array(circuit.check_ids, dtype=np.int64)
            self.parts.append((graph, dflip.reshape(code.n, 3, -1), oflip[:, 0].reshape(code.n, 3), check_ids))

    def failures(self, erasure_sets, assignments, decoder="peel") -> np.ndarray:
        """Per case: 1 if either basis mispredicts its observable. ``assignments`` hold 0..3 per qubit."""
        n = self.code.n
        cases = len(erasure_sets)
        fail = np.zeros(cases, dtype=bool)
        for graph, drows, orows, check_ids in self.parts:
            dets = np.zeros((cases, drows.shape[2]), dtype=bool)
            obs = np.zeros(cases, dtype=bool)
            flags = np.zeros((cases, n), dtype=bool)
            for i, (s, a) in enumerate(zip(erasure_sets, assignments)):
                flags[i, list(s)] = True
                for q, letter in zip(s, a):
                    if letter:
                        dets[i] ^= drows[q, letter - 1]
                        obs[i] ^= orows[q, letter - 1]
            pred, status = _decode(graph, decoder, dets.astype(np.uint8), flags, check_ids)
            fail |= ((pred & 1).astype(bool) != obs) | (status == 2)
        return fail


def _cases(sets):
    es, asg = [], []
    for s in sets:
        for a in itertools.product(range(4), repeat=len(s)):
            es.append(s)
            asg.append(a)
    return es, asg


# --------------------------------------------------------------------------- suites

def erasure_d_minus_1() -> SuiteResult:
    """Every erasure set of size 1..2 on d=3 with every Pauli on it, plus single erasures on d=2."""
    bench = _ErasureBench(build_rotated_surface_code(3))
    sets = [s for k in (1, 2) for s in itertools.combinations(range(9), k)]
    es, asg = _cases(sets)
    fail = bench.failures(es, asg)
    lines = [f"d=3: {len(sets)} erasure sets, {len(es)} Pauli assignments, {int(fail.sum())} logical failures"]
    code2 = build_d2_surface_code()
    bad2 = 0
    for q in range(code2.n):
        for letter in "IXYZ":
            err = PauliOp.from_sparse(code2.n, {q: letter})
            res = ml_decode_bruteforce(code2, 0.0, [q], syndrome_of(code2, err))
            residual = err * res.correction
            bad2 += bool(syndrome_of(code2, residual).any()) or logical_class(code2, residual) != ("I",)
    lines.append(f"d=2: 16 single-erasure cases, {bad2} logical failures")
    total = int(fail.sum()) + bad2
    return SuiteResult("erasure_d_minus_1", total == 0, len(es) + 16, total, lines)


def erasure_failure_fraction_ml(code: StabilizerCode, erasure) -> float:
    """ML probability that a uniformly random Pauli on ``erasure`` ends in an X or Y logical coset.

    Conditional on the syndrome the coset distribution is the same for every
    syndrome, so the zero-syndrome computation is exact.
    """
    probs = ml_decode_bruteforce(code, 0.0, list(erasure)).probabilities
    return probs["X"] + probs["Y"]


def peel_vs_ml() -> SuiteResult:
    """For every erasure set on d=3: peeling's failure fraction over X patterns equals the ML failure probability."""
    code = build_rotated_surface_code(3)
    bench = _ErasureBench(code)
    graph, drows, orows, check_ids = bench.parts[0]
    mismatches = 0
    lines = []
    n_sets = 0
    for k in range(code.n + 1):
        for s in itertools.combinations(range(code.n), k):
            n_sets += 1
            pats = list(itertools.product((0, 1), repeat=k))
            dets = np.zeros((len(pats), drows.shape[2]), dtype=bool)
            obs = np.zeros(len(pats), dtype=bool)
            flags = np.zeros((len(pats), code.n), dtype=bool)
            flags[:, list(s)] = True
            for i, pat in enumerate(pats):
                for q, b in zip(s, pat):
                    if b:
                        dets[i] ^= drows[q, 0]
                        obs[i] ^= orows[q, 0]
            pred, status = _decode(graph, "peel", dets.astype(np.uint8), flags, check_ids)
            peel_frac = float(np.mean(((pred & 1).astype(bool) != obs) | (status == 2)))
            ml_frac = erasure_failure_fraction_ml(code, s)
            if abs(peel_frac - ml_frac) > 1e-9:
                mismatches += 1
                if len(lines) < 10:
                    lines.append(f"set {s}: peel {peel_frac:.3f} vs ML {ml_frac:.3f}")
    lines.insert(0, f"{n_sets} erasure sets compared, {mismatches} mismatches")
    return SuiteResult("peel_vs_ml", mismatches == 0, n_sets, mismatches, lines)


def random_circuit(rng: np.random.Generator, n_qubits: int = 4, n_ops: int = 20,
                   n_paulis: int = 3, n_detectors: int = 4) -> Circuit:
    """Random Clifford circuit (H, CX, R, M) with injected Paulis and deterministic detectors."""
    ins = [Gate("R", tuple(range(n_qubits)))]
    n_meas = 0
    for _ in range(n_ops):
        kind = rng.choice(["H", "CX", "CX", "M", "R", "P"], p=[0.2, 0.2, 0.2, 0.2, 0.05, 0.15])
        if kind == "CX":
            c, t = rng.choice(n_qubits, size=2, replace=False)
            ins.append(Gate("CX", (int(c), int(t))))
        elif kind == "P":
            ins.append(PauliError(int(rng.integers(n_qubits)), str(rng.choice(list("XYZ")))))
        else:
            ins.append(Gate(str(kind), (int(rng.integers(n_qubits)),)))
            n_meas += kind == "M"
    ins.append(Gate("M", tuple(range(n_qubits))))
    n_meas += n_qubits
    # at least n_paulis injections somewhere
    for _ in range(n_paulis):
        pos = int(rng.integers(1, len(ins)))
        ins.insert(pos, PauliError(int(rng.integers(n_qubits)), str(rng.choice(list("XYZ")))))
    bare = Circuit(n_qubits, ins)
    _, diffs = random_outcome_basis(bare)
    # deterministic parities = null space of diffs (over GF(2))
    null = _null_space(diffs, n_meas)
    dets = []
    for _ in range(n_detectors):
        if not len(null):
            break
        coeffs = rng.integers(0, 2, size=len(null))
        if not coeffs.any():
            coeffs[rng.integers(len(null))] = 1
        v = (coeffs @ null) & 1
        if v.any():
            dets.append(Detector(tuple(int(i) for i in np.flatnonzero(v))))
    obs = []
    if len(null):
        v = null[int(rng.integers(len(null)))]
        if v.any():
            obs.append(Observable(tuple(int(i) for i in np.flatnonzero(v)), 0))
    return Circuit(n_qubits, ins + dets + obs)


def _null_space(a: np.ndarray, n: int) -> np.ndarray:
    """Basis of {v : a v = 0} over GF(2)."""
    a = (a.reshape(-1, n) % 2).astype(np.uint8)
    pivots = []
    r = 0
    for c in range(n):
        hit = np.flatnonzero(a[r:, c]) if r < len(a) else []
        if not len(hit):
            continue
        p = r + hit[0]
        a[[r, p]] = a[[p, r]]
        for i in range(len(a)):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(n, dtype=np.uint8)
        v[f] = 1
        for i, c in enumerate(pivots):
            v[c] = a[i, f]
        basis.append(v)
    return np.array(basis, dtype=np.uint8).reshape(-1, n)


def frame_vs_tableau(n_circuits: int = 200, seed: int = 12345) -> SuiteResult:
    """Injected Paulis and random single faults give identical flips in the frame sampler and the tableau."""
    rng = np.random.default_rng(seed)
    bad = 0
    lines = []
    for i in range(n_circuits):
        circuit = random_circuit(rng, n_qubits=int(rng.integers(2, 6)), n_ops=int(rng.integers(5, 30)))
        ref_d, ref_o = tableau_reference_sim(circuit)
        batch = FrameSampler(circuit).sample(1, seed=i)
        ok = np.array_equal(batch.detectors[0], ref_d) and np.array_equal(batch.observables[0], ref_o)
        # a single extra fault, frame propagation vs tableau
        pos = int(rng.integers(0, len(circuit.instructions) + 1))
        fault = Fault(pos, int(rng.integers(circuit.num_qubits)), str(rng.choice(list("XYZ"))))
        fd, fo = propagate_faults(circuit, [fault])
        td, to = tableau_reference_sim(circuit, {pos: [(fault.qubit, fault.pauli)]})
        ok &= np.array_equal(fd[0], td ^ ref_d) and np.array_equal(fo[0], to ^ ref_o)
        if not ok:
            bad += 1
            if len(lines) < 5:
                lines.append(f"circuit {i} disagrees:\n{circuit.to_text()}")
    lines.insert(0, f"{n_circuits} random circuits, {bad} disagreements")
    return SuiteResult("frame_vs_tableau", bad == 0, n_circuits, bad, lines)


SUITES = {
    "d2_syndrome_table": d2_syndrome_table,
    "erasure_d_minus_1": erasure_d_minus_1,
    "peel_vs_ml": peel_vs_ml,
    "frame_vs_tableau": frame_vs_tableau,
}


def run_all() -> list[SuiteResult]:
    return [fn() for fn in SUITES.values()]


__all__ = ["SUITES", "SuiteResult", "run_all", "random_circuit", "run_tableau", "erasure_failure_fraction_ml"]
