"""Logical-error estimation, threshold crossings, scaling fits and the error hierarchy."""

from __future__ import annotations

import functools
import hashlib
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import stats

from .channels import Conversion, DualRailParams, Reset
from .circuit import (
    Circuit,
    Schedule,
    build_code_capacity_circuit,
    build_memory_circuit,
    build_phenomenological_circuit,
    twirled_step_noise,
)
from .codes import StabilizerCode, build_d2_surface_code, build_rotated_surface_code
from .decoders import build_decoding_graph, decode_batch
from .frame import BLOCK, FrameSampler, block_rng

log = logging.getLogger(__name__)

KINDS = ("code_capacity", "phenomenological", "memory")
CSV_HEADER = ("d", "e", "p", "q", "f_pos", "f_neg", "conversion", "reset", "schedule",
              "decoder", "shots", "failures", "p_l", "ci_lo", "ci_hi", "seed")


class InsufficientStatistics(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentPoint:
    """One grid point. ``rounds=0`` means ``rounds = d``."""

    kind: str = "code_capacity"
    d: int = 3
    e: float = 0.0
    p: float = 0.0
    q: float = 0.0
    gamma: float = 0.0
    phi: float = 0.0
    f_pos: float = 0.0
    f_neg: float = 0.0
    conversion: str = "mixed"
    reset: str = "oneway"
    schedule: str = "every_gate"
    herald: bool = True
    rounds: int = 0
    basis: str = "Z"
    measure: str = "XZ"
    code: str = "rotated"
    decoder: str = "uf"
    series: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.code == "rotated" and (self.d < 3 or self.d % 2 == 0):
            raise ValueError(f"rotated code distance must be odd >= 3, got {self.d}")
        if self.code not in ("rotated", "d2"):
            raise ValueError(f"unknown code {self.code!r}")
        if self.decoder not in ("peel", "uf"):
            raise ValueError(f"unknown decoder {self.decoder!r}")
        Conversion(self.conversion)
        Reset(self.reset)
        Schedule.parse(self.schedule)

    @property
    def num_rounds(self) -> int:
        return self.rounds or self.d

    def key(self) -> str:
        return "|".join(f"{k}={v!r}" for k, v in sorted(asdict(self).items()))

    def sort_key(self):
        return (self.series, self.kind, self.code, self.d, self.gamma, self.e, self.p, self.q, self.phi,
                self.f_pos, self.f_neg, self.conversion, self.reset, self.schedule, not self.herald,
                self.rounds, self.basis, self.measure, self.decoder)

    def structural(self) -> "ExperimentPoint":
        return replace(self, decoder="uf", series="")


def point_seed(base_seed: int, point: ExperimentPoint) -> int:
    digest = hashlib.sha256(f"{base_seed}|{point.structural().key()}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def make_code(point: ExperimentPoint) -> StabilizerCode:
    return build_d2_surface_code() if point.code == "d2" else build_rotated_surface_code(point.d)


def build_circuit(point: ExperimentPoint) -> Circuit:
    code = make_code(point)
    if point.kind == "code_capacity":
        return build_code_capacity_circuit(code, point.e, point.p, point.basis)
    if point.kind == "phenomenological":
        return build_phenomenological_circuit(code, point.num_rounds, point.e, point.p, point.q,
                                              point.basis, f_neg=point.f_neg,
                                              conversion=Conversion(point.conversion))
    dual = DualRailParams(point.gamma, point.phi, point.f_pos, point.f_neg,
                          Conversion(point.conversion), Reset(point.reset))
    return build_memory_circuit(code, point.num_rounds, dual, Schedule.parse(point.schedule), point.basis,
                                tuple(point.measure), point.q, point.herald)


@functools.lru_cache(maxsize=8)
def _compiled(point: ExperimentPoint):
    circuit = build_circuit(point)
    return circuit, FrameSampler(circuit), build_decoding_graph(circuit, point.basis)


@dataclass(frozen=True)
class EstimateRow:
    point: ExperimentPoint
    shots: int
    failures: int
    p_l: float
    ci_lo: float
    ci_hi: float
    seed: int
    fallbacks: int = 0

    @property
    def sigma(self) -> float:
        return math.sqrt(max(self.p_l * (1 - self.p_l), 1e-300) / self.shots)

    def csv_fields(self) -> tuple:
        pt = self.point
        if pt.kind == "memory":
            if pt.herald:
                e, p = pt.gamma, pt.phi
            else:
                e, p = 0.0, twirled_step_noise(DualRailParams(pt.gamma, pt.phi, conversion=pt.conversion))[0]
        else:
            e, p = pt.e, pt.p
        return (pt.d, e, p, pt.q, pt.f_pos, pt.f_neg, pt.conversion, pt.reset, pt.schedule, pt.decoder,
                self.shots, self.failures, self.p_l, self.ci_lo, self.ci_hi, self.seed)


def wilson_interval(failures: int, shots: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(failures), int(shots)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def _row(point, shots, failures, seed, fallbacks=0) -> EstimateRow:
    lo, hi = wilson_interval(failures, shots)
    p_l = failures / shots
    return EstimateRow(point, shots, failures, p_l, min(lo, p_l), max(hi, p_l), seed, fallbacks)


def estimate_logical_error(point: ExperimentPoint, shots: int, seed: int, observable: int = 0) -> EstimateRow:
    """Sample, decode and count shots whose predicted observable is wrong."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    _, sampler, graph = _compiled(point.structural())
    failures = fallbacks = 0
    remaining = shots
    block = 0
    while remaining > 0:
        take = min(BLOCK, remaining)
        dets, flags, obs = sampler.sample_block(block_rng(seed, block), BLOCK)
        dets, flags, obs = dets[:take], flags[:take], obs[:take]
        pred, status = decode_batch(graph, point.decoder, dets, flags, sampler.check_ids)
        failures += int(np.count_nonzero(((pred >> observable) & 1) != obs[:, observable]))
        fallbacks += int(np.count_nonzero(status == 1))
        if np.any(status == 2):
            raise RuntimeError("decoder produced no valid correction")
        remaining -= take
        block += 1
    return _row(point, shots, failures, seed, fallbacks)


def _run_one(args):
    point, shots, seed = args
    return estimate_logical_error(point, shots, seed)


def run_points(points, shots: int, base_seed: int, workers: int = 1) -> list[EstimateRow]:
    """Estimate every point; output order is sorted by coordinates, not by completion."""
    jobs = sorted({p for p in points}, key=ExperimentPoint.sort_key)
    args = [(p, shots, point_seed(base_seed, p)) for p in jobs]
    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, args))
    else:
        rows = []
        for a in args:
            log.debug("running %s", a[0].key())
            rows.append(_run_one(a))
    return rows


# --------------------------------------------------------------------------- thresholds

@dataclass(frozen=True)
class ThresholdReport:
    found: bool
    crossing: float | None
    ci_lo: float | None
    ci_hi: float | None
    pair_crossings: dict[str, float] = field(default_factory=dict)
    distances: tuple[int, ...] = ()

    def to_json_dict(self) -> dict:
        return asdict(self) | {"distances": list(self.distances)}


def _rate(row: EstimateRow, rate: str) -> float:
    return float(getattr(row.point, rate))


def _log_pl(failures, shots):
    return np.log((np.asarray(failures, dtype=float) + 0.5) / (np.asarray(shots, dtype=float) + 1.0))


def _pair_crossing(rates, lo_curve, hi_curve):
    """First rate where the larger-distance curve rises above the smaller one."""
    diff = hi_curve - lo_curve
    for i in range(len(rates) - 1):
        a, b = diff[i], diff[i + 1]
        if a == 0:
            return float(rates[i])
        if a < 0 < b or (a < 0 and b == 0):
            return float(rates[i] + (rates[i + 1] - rates[i]) * (-a) / (b - a))
    if len(rates) and diff[-1] == 0:
        return float(rates[-1])
    return None


def _crossings(rates, curves, ds):
    out = {}
    for i, j in itertools.combinations(range(len(ds)), 2):
        c = _pair_crossing(rates, curves[i], curves[j])
        if c is not None:
            out[f"{ds[i]}-{ds[j]}"] = c
    return out


def find_threshold(rows, rate: str = "e", n_boot: int = 1000, seed: int = 0,
                   log_values: bool = True) -> ThresholdReport:
    """Mean pairwise crossing of log p_L curves with a parametric bootstrap 95% CI.

    Rows are grouped by distance; only rates present for every distance are used.
    """
    by_d: dict[int, dict[float, EstimateRow]] = {}
    for r in rows:
        by_d.setdefault(r.point.d, {})[_rate(r, rate)] = r
    ds = sorted(by_d)
    if len(ds) < 2:
        raise ValueError("threshold needs rows for at least two distances")
    rates = sorted(set.intersection(*(set(v) for v in by_d.values())))
    fails = np.array([[by_d[d][x].failures for x in rates] for d in ds])
    shots = np.array([[by_d[d][x].shots for x in rates] for d in ds])
    if log_values:
        curves = _log_pl(fails, shots)
    else:
        curves = fails / shots
    pairs = _crossings(rates, curves, ds)
    if not pairs:
        return ThresholdReport(False, None, None, None, {}, tuple(ds))
    crossing = float(np.mean(list(pairs.values())))
    rng = np.random.default_rng(seed)
    boots = []
    p_hat = fails / shots
    for _ in range(n_boot):
        f = rng.binomial(shots, p_hat)
        c = _crossings(rates, _log_pl(f, shots) if log_values else f / shots, ds)
        if c:
            boots.append(np.mean(list(c.values())))
    if boots:
        lo, hi = (float(v) for v in np.percentile(boots, [2.5, 97.5]))
    else:
        lo = hi = crossing
    return ThresholdReport(True, crossing, lo, hi, pairs, tuple(ds))


# --------------------------------------------------------------------------- scaling

@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    r2: float
    fit_range: tuple[float, float]
    n_points: int
    d: int | None = None

    def to_json_dict(self) -> dict:
        return asdict(self) | {"fit_range": list(self.fit_range)}


def fit_scaling_exponent(rows, rate: str = "e", threshold: float | None = None,
                         min_failures: int = 10) -> ScalingFit:
    """Least squares of log p_L on log rate. Uses points with enough failures below threshold/2."""
    usable = [r for r in rows if r.failures >= min_failures and _rate(r, rate) > 0
              and (threshold is None or _rate(r, rate) <= threshold / 2)]
    ds = {r.point.d for r in rows}
    if len(ds) > 1:
        raise ValueError("scaling fit expects rows at a single distance")
    if len(usable) < 3:
        raise InsufficientStatistics(
            f"need >= 3 points with >= {min_failures} failures"
            + (f" at rate <= {threshold / 2:g}" if threshold else "")
            + f"; have {len(usable)} of {len(rows)}")
    x = np.log([_rate(r, rate) for r in usable])
    y = np.log([r.p_l for r in usable])
    res = stats.linregress(x, y)
    rates = [_rate(r, rate) for r in usable]
    return ScalingFit(float(res.slope), float(res.intercept), float(res.rvalue ** 2),
                      (min(rates), max(rates)), len(usable), ds.pop() if ds else None)


# --------------------------------------------------------------------------- hierarchy

@dataclass(frozen=True)
class HierarchyResult:
    missed: EstimateRow
    pauli: EstimateRow
    heralded: EstimateRow

    def separations(self) -> tuple[float, float]:
        """(missed - pauli, pauli - heralded) in units of the combined standard error."""
        def z(a, b):
            s = math.sqrt(a.sigma ** 2 + b.sigma ** 2)
            return (a.p_l - b.p_l) / s if s > 0 else 0.0
        return z(self.missed, self.pauli), z(self.pauli, self.heralded)

    def ordered(self, n_sigma: float = 3.0) -> bool:
        a, b = self.separations()
        return a >= n_sigma and b >= n_sigma


def hierarchy_points(d: int, r: float, rounds: int = 0, decoder: str = "uf") -> tuple[ExperimentPoint, ...]:
    """Phenomenological experiments where rate-r events are missed erasures, Pauli errors, or heralded erasures."""
    base = ExperimentPoint(kind="phenomenological", d=d, rounds=rounds, decoder=decoder)
    return (
        replace(base, e=r, f_neg=1.0, series="missed"),
        replace(base, p=r, series="pauli"),
        replace(base, e=r, f_neg=0.0, series="heralded"),
    )


def hierarchy_experiment(d: int, r: float, shots: int, seed: int, rounds: int = 0,
                         decoder: str = "uf") -> HierarchyResult:
    rows = [estimate_logical_error(pt, shots, point_seed(seed, pt)) for pt in hierarchy_points(d, r, rounds, decoder)]
    return HierarchyResult(*rows)


def hierarchy_d2_exhaustive(p: float = 0.01) -> dict[str, dict[str, int]]:
    """Single-event outcomes on the four-qubit code, decoded by the ML oracle.

    erasure: flagged qubit with each possible residual Pauli.
    pauli: one unflagged X, Y or Z.
    missed: an unflagged lost qubit (any Pauli) whose stabilizer readouts are
    random, so every outcome pattern on the checks touching it is enumerated.

    Each case lands in one bucket: corrected (residual is a stabilizer),
    undetected (observed syndrome trivial but the error is not a stabilizer)
    or miscorrected (anything else).
    """
    from .codes import logical_class, syndrome_of
    from .decoders.ml import ml_decode_bruteforce
    from .pauli import PauliOp

    code = build_d2_surface_code()
    counts = {k: {"corrected": 0, "undetected": 0, "miscorrected": 0} for k in ("erasure", "pauli", "missed")}

    def is_stabilizer(op):
        return not syndrome_of(code, op).any() and logical_class(code, op) == ("I",)

    def judge(kind, err, erasure, observed):
        res = ml_decode_bruteforce(code, p, erasure, observed)
        if is_stabilizer(err * res.correction):
            counts[kind]["corrected"] += 1
        elif not np.any(observed) and not is_stabilizer(err):
            counts[kind]["undetected"] += 1
        else:
            counts[kind]["miscorrected"] += 1

    for q in range(code.n):
        touching = [i for i, s in enumerate(code.stabilizers) if s.x[q] or s.z[q]]
        for letter in "IXYZ":
            err = PauliOp.from_sparse(code.n, {q: letter})
            syn = syndrome_of(code, err)
            judge("erasure", err, [q], syn)
            if letter != "I":
                judge("pauli", err, [], syn)
            for bits in itertools.product((0, 1), repeat=len(touching)):
                observed = syn.copy()
                observed[touching] = bits
                judge("missed", err, [], observed)
    return counts
