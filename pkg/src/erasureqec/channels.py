"""Dense-channel calculus for the dual-rail inner code.

Everything here is exact linear algebra on 2- or 4-dimensional Hilbert
spaces. The main entry point for the outer-code simulation is
:func:`dual_rail_step`, which turns per-step physical parameters into an
:class:`EffectiveChannel`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

CPTP_TOL = 1e-10
PROB_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
X2 = np.array([[0, 1], [1, 0]], dtype=complex)
Y2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z2 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X2, Y2, Z2)


class ChannelError(ValueError):
    pass


class Conversion(str, enum.Enum):
    MIXED = "mixed"
    BIASED = "biased"


class Reset(str, enum.Enum):
    ONE_WAY = "oneway"
    UNITARY = "unitary"


@dataclass(frozen=True)
class DenseChannel:
    dim: int
    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise ChannelError("channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (self.dim, self.dim):
                raise ChannelError(f"Kraus operator shape {k.shape} does not match dim {self.dim}")
        object.__setattr__(self, "kraus_ops", ops)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus_ops)

    def superoperator(self) -> np.ndarray:
        """Column-stacking superoperator S with vec(E(rho)) = S vec(rho)."""
        return sum(np.kron(k.conj(), k) for k in self.kraus_ops)


@dataclass(frozen=True)
class PauliChannel:
    p_i: float
    p_x: float
    p_y: float
    p_z: float

    def __post_init__(self):
        probs = self.as_array()
        if np.any(probs < -PROB_TOL) or np.any(probs > 1 + PROB_TOL):
            raise ChannelError(f"Pauli probabilities out of range: {probs}")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ChannelError(f"Pauli probabilities sum to {probs.sum()!r}, not 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_i, self.p_x, self.p_y, self.p_z], dtype=float)

    def to_dense(self) -> DenseChannel:
        return DenseChannel(2, tuple(math.sqrt(max(p, 0.0)) * P for p, P in zip(self.as_array(), PAULIS)))


@dataclass(frozen=True)
class DualRailParams:
    gamma: float = 0.0
    phi: float = 0.0
    f_pos: float = 0.0
    f_neg: float = 0.0
    conversion: Conversion = Conversion.MIXED
    reset: Reset = Reset.ONE_WAY

    def __post_init__(self):
        for name in ("gamma", "phi", "f_pos", "f_neg"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ChannelError(f"{name}={v} outside [0, 1]")
        object.__setattr__(self, "conversion", Conversion(self.conversion))
        object.__setattr__(self, "reset", Reset(self.reset))

    @classmethod
    def from_t1(cls, t1: float, dt: float, **kwargs) -> "DualRailParams":
        """Per-step decay probability from a T1 time and a step duration."""
        if t1 <= 0 or dt < 0:
            raise ChannelError("need t1 > 0 and dt >= 0")
        return cls(gamma=1.0 - math.exp(-dt / t1), **kwargs)


@dataclass(frozen=True)
class EffectiveChannel:
    """Per-step outer-code noise seen by the decoder.

    ``e`` is the probability that the check fires, ``pauli`` the residual
    channel given no herald and no leak, ``leak`` the probability the qubit
    ends the step outside the computational subspace without a flag.
    """

    e: float
    pauli: PauliChannel
    leak: float

    def to_json_dict(self) -> dict:
        return {
            "e": self.e,
            "leak": self.leak,
            "p_i": self.pauli.p_i,
            "p_x": self.pauli.p_x,
            "p_y": self.pauli.p_y,
            "p_z": self.pauli.p_z,
        }


def identity_channel(dim: int = 2) -> DenseChannel:
    return DenseChannel(dim, (np.eye(dim, dtype=complex),))


def amplitude_damping_channel(gamma: float) -> DenseChannel:
    if not 0.0 <= gamma <= 1.0:
        raise ChannelError(f"gamma={gamma} outside [0, 1]")
    k0 = np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex)
    return DenseChannel(2, (k0, k1))


def dephasing_channel(phi: float) -> DenseChannel:
    if not 0.0 <= phi <= 1.0:
        raise ChannelError(f"phi={phi} outside [0, 1]")
    return DenseChannel(2, (math.sqrt(1 - phi) * I2, math.sqrt(phi) * Z2))


def validate_cptp(ch: DenseChannel, tol: float = CPTP_TOL) -> bool:
    total = sum(k.conj().T @ k for k in ch.kraus_ops)
    return bool(np.allclose(total, np.eye(ch.dim), atol=tol, rtol=0))


def compose(ch1: DenseChannel, ch2: DenseChannel) -> DenseChannel:
    """Apply ``ch1`` first, then ``ch2``."""
    if ch1.dim != ch2.dim:
        raise ChannelError(f"dimension mismatch: {ch1.dim} vs {ch2.dim}")
    return DenseChannel(ch1.dim, tuple(b @ a for a in ch1.kraus_ops for b in ch2.kraus_ops))


def pauli_twirl(ch: DenseChannel) -> PauliChannel:
    """Diagonal of the chi matrix: p_j = sum_k |tr(P_j K_k)|^2 / 4."""
    if ch.dim != 2:
        raise ChannelError("Pauli twirl is defined here for single-qubit channels only")
    if not validate_cptp(ch):
        raise ChannelError("channel is not trace preserving")
    probs = np.array([sum(abs(np.trace(P @ k)) ** 2 for k in ch.kraus_ops) / 4 for P in PAULIS])
    probs = np.clip(probs.real, 0.0, None)
    probs /= probs.sum()
    return PauliChannel(*map(float, probs))


def twirled_damping_closed_form(gamma: float) -> PauliChannel:
    s = math.sqrt(1 - gamma)
    p_x = gamma / 4
    p_z = (2 - gamma - 2 * s) / 4
    return PauliChannel(1 - 2 * p_x - p_z, p_x, p_x, p_z)


def conversion_channel(mode: Conversion | str) -> PauliChannel:
    """Residual Pauli channel left after resetting a flagged qubit."""
    mode = Conversion(mode)
    if mode is Conversion.MIXED:
        return PauliChannel(0.25, 0.25, 0.25, 0.25)
    return PauliChannel(0.5, 0.0, 0.0, 0.5)


def dual_rail_step(params: DualRailParams) -> EffectiveChannel:
    """One time step of a dual-rail qubit followed by an erasure check.

    Both rails damp with the same probability, so the no-decay branch carries
    no back-action and decay to |00> happens with probability ``gamma`` for
    every logical state. Dephasing then acts as a logical Z with probability
    ``phi``. The check heralds a true erasure with probability ``1 - f_neg``
    and falsely flags a good qubit with probability ``f_pos``. Under the
    unitary reset protocol a false flag swaps the good qubit out of the
    computational subspace, which counts towards ``leak``.
    """
    g, f_pos, f_neg = params.gamma, params.f_pos, params.f_neg
    herald = g * (1 - f_neg) + (1 - g) * f_pos
    leak = g * f_neg
    if params.reset is Reset.UNITARY:
        leak += (1 - g) * f_pos
    pauli = PauliChannel(1 - params.phi, 0.0, 0.0, params.phi)
    return EffectiveChannel(e=herald, pauli=pauli, leak=leak)


# --- dual-rail density-matrix model (two modes, basis |00>,|01>,|10>,|11>) ---

def dual_rail_kraus(gamma: float, phi: float = 0.0) -> DenseChannel:
    """Per-rail amplitude damping on both modes, then relative dephasing."""
    damp = amplitude_damping_channel(gamma)
    both = DenseChannel(4, tuple(np.kron(a, b) for a in damp.kraus_ops for b in damp.kraus_ops))
    # Logical Z in the single-excitation subspace: |10> -> |10>, |01> -> -|01>.
    zl = np.diag([1, -1, 1, 1]).astype(complex)
    deph = DenseChannel(4, (math.sqrt(1 - phi) * np.eye(4, dtype=complex), math.sqrt(phi) * zl))
    return compose(both, deph)


def dual_rail_state(alpha: complex, beta: complex) -> np.ndarray:
    """Density matrix of alpha|10> + beta|01> (|0>_L = |10>)."""
    v = np.zeros(4, dtype=complex)
    v[2], v[1] = alpha, beta
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def erased_population(rho4: np.ndarray) -> float:
    """Population outside the single-excitation subspace."""
    return float((rho4[0, 0] + rho4[3, 3]).real)


def haar_average_jump_probability(gamma: float, n_states: int = 2000, seed: int = 0) -> float:
    """Mean decay-jump probability of a bare transmon over Haar-random pure states."""
    rng = np.random.default_rng(seed)
    k1 = amplitude_damping_channel(gamma).kraus_ops[1]
    v = rng.normal(size=(n_states, 2)) + 1j * rng.normal(size=(n_states, 2))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    jumped = v @ k1.T
    return float(np.mean(np.sum(np.abs(jumped) ** 2, axis=1)))


def dual_rail_to_bare_ratio(gamma: float, n_states: int = 2000, seed: int = 0) -> float:
    """Dual-rail herald rate over the Haar-averaged bare-transmon jump rate."""
    herald = dual_rail_step(DualRailParams(gamma=gamma)).e
    return herald / haar_average_jump_probability(gamma, n_states, seed)
