"""Circuit IR for memory experiments with erasure checks, plus builders.

Text format, one instruction per line::

    R 0 1 2             reset to |0>
    H 4                 Hadamard
    CX 0 4 1 4          CNOT on (control, target) pairs, applied left to right
    M 4 5               Z measurement, appends to the measurement record
    NOISE 3 e=0.01 p=0.002 bias=0,0,1
    CHECK 3 id=7 f_pos=0 f_neg=0 conversion=mixed reset=oneway
    MFLIP 4 q=0.01      X flip before the next measurement of qubit 4
    PAULI 0 X           deterministic injected Pauli
    DETECTOR 3 11 basis=Z
    OBSERVABLE 20 21 22 index=0

``NOISE`` marks the qubit erased with probability ``e``, otherwise applies a
Pauli with probability ``p`` split across X/Y/Z by ``bias``. Measurement
indices in ``DETECTOR``/``OBSERVABLE`` are absolute positions in the record.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .channels import Conversion, DualRailParams, Reset, conversion_channel
from .codes import StabilizerCode

GATES = ("CX", "H", "R", "M")
UNIFORM = (1 / 3, 1 / 3, 1 / 3)
DEPHASING = (0.0, 0.0, 1.0)


class CircuitError(ValueError):
    pass


class UnsupportedInstruction(CircuitError):
    pass


@dataclass(frozen=True)
class Gate:
    name: str
    targets: tuple[int, ...]


@dataclass(frozen=True)
class NoiseSite:
    qubit: int
    e: float
    p: float
    bias: tuple[float, float, float] = UNIFORM


@dataclass(frozen=True)
class ErasureCheck:
    qubit: int
    f_pos: float
    f_neg: float
    conversion: Conversion
    reset: Reset
    check_id: int


@dataclass(frozen=True)
class MeasureFlip:
    qubit: int
    q: float


@dataclass(frozen=True)
class PauliError:
    qubit: int
    pauli: str


@dataclass(frozen=True)
class Detector:
    measurements: tuple[int, ...]
    basis: str | None = None


@dataclass(frozen=True)
class Observable:
    measurements: tuple[int, ...]
    index: int = 0


Instruction = Union[Gate, NoiseSite, ErasureCheck, MeasureFlip, PauliError, Detector, Observable]


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    instructions: tuple[Instruction, ...]
    num_measurements: int = field(init=False)
    num_detectors: int = field(init=False)
    num_observables: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        n_meas = n_det = 0
        obs = set()
        ids = set()
        for ins in self.instructions:
            if isinstance(ins, Gate):
                if ins.name not in GATES:
                    raise UnsupportedInstruction(f"gate {ins.name!r} is not supported")
                if ins.name == "CX" and len(ins.targets) % 2:
                    raise CircuitError("CX needs an even number of targets")
                self._check_qubits(ins.targets)
                if ins.name == "M":
                    n_meas += len(ins.targets)
            elif isinstance(ins, (Detector, Observable)):
                if any(m < 0 or m >= n_meas for m in ins.measurements):
                    raise CircuitError(f"{ins} references a measurement that has not happened yet")
                if isinstance(ins, Detector):
                    n_det += 1
                else:
                    obs.add(ins.index)
            elif isinstance(ins, (NoiseSite, ErasureCheck, MeasureFlip, PauliError)):
                self._check_qubits((ins.qubit,))
                if isinstance(ins, ErasureCheck):
                    if ins.check_id in ids:
                        raise CircuitError(f"duplicate check_id {ins.check_id}")
                    ids.add(ins.check_id)
                if isinstance(ins, NoiseSite) and not (0 <= ins.e and 0 <= ins.p and ins.e + ins.p <= 1 + 1e-12):
                    raise CircuitError(f"invalid noise rates at {ins}")
            else:
                raise UnsupportedInstruction(f"unknown instruction {ins!r}")
        if obs and obs != set(range(len(obs))):
            raise CircuitError("observable indices must be 0..k-1")
        object.__setattr__(self, "num_measurements", n_meas)
        object.__setattr__(self, "num_detectors", n_det)
        object.__setattr__(self, "num_observables", len(obs))

    def _check_qubits(self, qs):
        for q in qs:
            if not 0 <= q < self.num_qubits:
                raise CircuitError(f"qubit {q} out of range for {self.num_qubits} qubits")

    @property
    def check_ids(self) -> list[int]:
        return [i.check_id for i in self.instructions if isinstance(i, ErasureCheck)]

    @property
    def detectors(self) -> list[Detector]:
        return [i for i in self.instructions if isinstance(i, Detector)]

    @property
    def observables(self) -> list[Observable]:
        return sorted((i for i in self.instructions if isinstance(i, Observable)), key=lambda o: o.index)

    def checks(self) -> list[ErasureCheck]:
        return [i for i in self.instructions if isinstance(i, ErasureCheck)]

    def to_text(self) -> str:
        return "".join(_format(ins) + "\n" for ins in self.instructions)

    @classmethod
    def from_text(cls, text: str, num_qubits: int | None = None) -> "Circuit":
        instructions = []
        top = -1
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            ins = _parse(line)
            instructions.append(ins)
            if isinstance(ins, Gate):
                top = max([top, *ins.targets])
            elif hasattr(ins, "qubit"):
                top = max(top, ins.qubit)
        return cls(num_qubits if num_qubits is not None else top + 1, instructions)


def _num(v: float) -> str:
    return repr(float(v))


def _format(ins: Instruction) -> str:
    if isinstance(ins, Gate):
        return " ".join([ins.name, *map(str, ins.targets)])
    if isinstance(ins, NoiseSite):
        return f"NOISE {ins.qubit} e={_num(ins.e)} p={_num(ins.p)} bias={','.join(map(_num, ins.bias))}"
    if isinstance(ins, ErasureCheck):
        return (f"CHECK {ins.qubit} id={ins.check_id} f_pos={_num(ins.f_pos)} f_neg={_num(ins.f_neg)} "
                f"conversion={ins.conversion.value} reset={ins.reset.value}")
    if isinstance(ins, MeasureFlip):
        return f"MFLIP {ins.qubit} q={_num(ins.q)}"
    if isinstance(ins, PauliError):
        return f"PAULI {ins.qubit} {ins.pauli}"
    if isinstance(ins, Detector):
        tail = f" basis={ins.basis}" if ins.basis else ""
        return "DETECTOR " + " ".join(map(str, ins.measurements)) + tail
    if isinstance(ins, Observable):
        return "OBSERVABLE " + " ".join(map(str, ins.measurements)) + f" index={ins.index}"
    raise UnsupportedInstruction(repr(ins))


def _parse(line: str) -> Instruction:
    head, *rest = line.split()
    args = [t for t in rest if "=" not in t]
    kw = dict(t.split("=", 1) for t in rest if "=" in t)
    if head in GATES:
        return Gate(head, tuple(int(a) for a in args))
    if head == "NOISE":
        bias = tuple(float(b) for b in kw.get("bias", "").split(",")) if "bias" in kw else UNIFORM
        return NoiseSite(int(args[0]), float(kw["e"]), float(kw["p"]), bias)
    if head == "CHECK":
        return ErasureCheck(int(args[0]), float(kw["f_pos"]), float(kw["f_neg"]),
                            Conversion(kw["conversion"]), Reset(kw["reset"]), int(kw["id"]))
    if head == "MFLIP":
        return MeasureFlip(int(args[0]), float(kw["q"]))
    if head == "PAULI":
        return PauliError(int(args[0]), args[1].upper())
    if head == "DETECTOR":
        return Detector(tuple(int(a) for a in args), kw.get("basis"))
    if head == "OBSERVABLE":
        return Observable(tuple(int(a) for a in args), int(kw.get("index", 0)))
    raise UnsupportedInstruction(f"unknown instruction {head!r}")


# --------------------------------------------------------------------------- schedules

class ScheduleKind(str, enum.Enum):
    EVERY_GATE = "every_gate"
    EVERY_ROUND = "every_round"
    EVERY_N = "every_n"
    END_ONLY = "end_only"


@dataclass(frozen=True)
class Schedule:
    variant: ScheduleKind = ScheduleKind.EVERY_GATE
    n: int = 1

    def __post_init__(self):
        object.__setattr__(self, "variant", ScheduleKind(self.variant))
        if self.variant is ScheduleKind.EVERY_N and self.n < 1:
            raise CircuitError("EveryN schedule needs n >= 1")

    @classmethod
    def parse(cls, text: str) -> "Schedule":
        """``every_gate``, ``every_round``, ``end_only`` or ``every_n:K``."""
        kind, _, n = text.strip().partition(":")
        return cls(ScheduleKind(kind), int(n) if n else 1)

    def __str__(self) -> str:
        return f"every_n:{self.n}" if self.variant is ScheduleKind.EVERY_N else self.variant.value


# --------------------------------------------------------------------------- builders

class _Builder:
    """Accumulates instructions and hands out measurement / check indices."""

    def __init__(self, code: StabilizerCode, basis: str, measure_types: Sequence[str]):
        if basis not in ("X", "Z"):
            raise CircuitError(f"basis must be 'X' or 'Z', got {basis!r}")
        self.code = code
        self.basis = basis
        self.stabs = [i for i in range(len(code.stabilizers)) if code.stabilizer_type(i) in measure_types]
        if any(code.stabilizer_type(i) == "mixed" for i in self.stabs):
            raise CircuitError("only CSS stabilizers are supported by the extraction builder")
        self.data = list(range(code.n))
        self.anc = list(range(code.n, code.n + len(self.stabs)))
        self.out: list[Instruction] = []
        self.n_meas = 0
        self.next_check = 0

    @property
    def num_qubits(self) -> int:
        return self.code.n + len(self.stabs)

    @property
    def all_qubits(self) -> list[int]:
        return self.data + self.anc

    def gate(self, name, targets):
        if targets:
            self.out.append(Gate(name, tuple(targets)))

    def measure(self, qubits) -> list[int]:
        self.gate("M", qubits)
        idx = list(range(self.n_meas, self.n_meas + len(qubits)))
        self.n_meas += len(qubits)
        return idx

    def check(self, q, f_pos=0.0, f_neg=0.0, conversion=Conversion.MIXED, reset=Reset.ONE_WAY):
        self.out.append(ErasureCheck(q, f_pos, f_neg, Conversion(conversion), Reset(reset), self.next_check))
        self.next_check += 1

    def init_data(self):
        self.gate("R", self.data)
        if self.basis == "X":
            self.gate("H", self.data)

    def extraction_round(self, after_cx=None, flip_q=0.0) -> list[int]:
        """Reset ancillas, CX ladder in 4 layers, measure. Returns measurement indices."""
        x_anc = [a for a, s in zip(self.anc, self.stabs) if self.code.stabilizer_type(s) == "X"]
        self.gate("R", self.anc)
        self.gate("H", x_anc)
        for layer in range(4):
            pairs = []
            for a, s in zip(self.anc, self.stabs):
                q = self.code.cx_schedule[s][layer]
                if q < 0:
                    continue
                pairs += [a, q] if self.code.stabilizer_type(s) == "X" else [q, a]
            self.gate("CX", pairs)
            if after_cx is not None:
                after_cx(layer)
        self.gate("H", x_anc)
        if flip_q > 0:
            self.out.extend(MeasureFlip(a, flip_q) for a in self.anc)
        return self.measure(self.anc)

    def detectors(self, prev, cur):
        for s, m0, m1 in zip(self.stabs, prev, cur):
            self.out.append(Detector((m0, m1), self.code.stabilizer_type(s)))

    def finish(self):
        if self.basis == "X":
            self.gate("H", self.data)
        meas = self.measure(self.data)
        logicals = self.code.logical_z if self.basis == "Z" else self.code.logical_x
        for k, op in enumerate(logicals):
            self.out.append(Observable(tuple(meas[q] for q in op.support), k))
        return Circuit(self.num_qubits, self.out)


def _check_rates(**rates):
    for k, v in rates.items():
        if not 0.0 <= v <= 1.0:
            raise CircuitError(f"{k}={v} outside [0, 1]")


def build_code_capacity_circuit(code: StabilizerCode, e: float, p: float, basis: str = "Z",
                                bias: tuple[float, float, float] = UNIFORM) -> Circuit:
    """One noise layer on the data between two perfect syndrome rounds.

    Check ids equal data-qubit indices; detector i compares stabilizer i
    across the two rounds.
    """
    _check_rates(e=e, p=p)
    if e + p > 1:
        raise CircuitError("e + p must not exceed 1")
    b = _Builder(code, basis, ("X", "Z"))
    b.init_data()
    m0 = b.extraction_round()
    for q in b.data:
        b.out.append(NoiseSite(q, e, p, bias))
    for q in b.data:
        b.check(q)
    m1 = b.extraction_round()
    b.detectors(m0, m1)
    return b.finish()


def build_phenomenological_circuit(code: StabilizerCode, rounds: int, e: float, p: float, q: float,
                                   basis: str = "Z", f_neg: float = 0.0,
                                   conversion: Conversion = Conversion.MIXED,
                                   bias: tuple[float, float, float] = UNIFORM) -> Circuit:
    """Noisy data + flipped measurements for ``rounds`` rounds, then a perfect round."""
    if rounds < 1:
        raise CircuitError("rounds must be >= 1")
    _check_rates(e=e, p=p, q=q, f_neg=f_neg)
    if e + p > 1:
        raise CircuitError("e + p must not exceed 1")
    b = _Builder(code, basis, ("X", "Z"))
    b.init_data()
    prev = b.extraction_round()
    for _ in range(rounds):
        for dq in b.data:
            b.out.append(NoiseSite(dq, e, p, bias))
        for dq in b.data:
            b.check(dq, f_neg=f_neg, conversion=conversion)
        cur = b.extraction_round(flip_q=q)
        b.detectors(prev, cur)
        prev = cur
    cur = b.extraction_round()
    b.detectors(prev, cur)
    return b.finish()


def twirled_step_noise(dual_rail: DualRailParams) -> tuple[float, tuple[float, float, float]]:
    """Pauli rate and bias of one step when decays are converted without a herald."""
    conv = conversion_channel(dual_rail.conversion).as_array()
    g, phi = dual_rail.gamma, dual_rail.phi
    probs = g * conv + (1 - g) * (1 - phi) * np.array([1.0, 0, 0, 0])
    probs[3] += (1 - g) * phi
    p = float(1 - probs[0])
    if p == 0:
        return 0.0, UNIFORM
    return p, tuple(float(x) for x in probs[1:] / p)


def build_memory_circuit(code: StabilizerCode, rounds: int, dual_rail: DualRailParams,
                         schedule: Schedule = Schedule(), basis: str = "Z",
                         measure_types: Sequence[str] = ("X", "Z"), q: float = 0.0,
                         herald: bool = True) -> Circuit:
    """Circuit-level memory experiment with dual-rail noise after every CX layer.

    Every qubit (data and ancilla, busy or idle) takes one dual-rail step after
    each CX layer: decay with probability ``gamma`` and dephasing with
    probability ``phi``. Erasure checks on all qubits are inserted per
    ``schedule``. Single-qubit gates, resets and measurements are ideal apart
    from optional measurement flips ``q``. A perfect round before and after
    the noisy rounds fixes the detector reference. With ``herald=False`` the
    decay is replaced by its unheralded twirl and no checks are placed.
    """
    if rounds < 1:
        raise CircuitError("rounds must be >= 1")
    _check_rates(q=q)
    b = _Builder(code, basis, measure_types)
    layer_count = [0]
    total_layers = 4 * rounds
    twirl_p, twirl_bias = twirled_step_noise(dual_rail)

    def after_cx(layer):
        layer_count[0] += 1
        k = layer_count[0]
        for qb in b.all_qubits:
            if herald:
                b.out.append(NoiseSite(qb, dual_rail.gamma, dual_rail.phi, DEPHASING))
            else:
                b.out.append(NoiseSite(qb, 0.0, twirl_p, twirl_bias))
        if not herald:
            return
        v = schedule.variant
        place = (
            v is ScheduleKind.EVERY_GATE
            or (v is ScheduleKind.EVERY_ROUND and layer == 3)
            or (v is ScheduleKind.EVERY_N and k % schedule.n == 0)
            or (v is ScheduleKind.END_ONLY and k == total_layers)
        )
        if place:
            for qb in b.all_qubits:
                b.check(qb, dual_rail.f_pos, dual_rail.f_neg, dual_rail.conversion, dual_rail.reset)

    b.init_data()
    prev = b.extraction_round()
    for _ in range(rounds):
        cur = b.extraction_round(after_cx=after_cx, flip_q=q)
        b.detectors(prev, cur)
        prev = cur
    cur = b.extraction_round()
    b.detectors(prev, cur)
    return b.finish()
