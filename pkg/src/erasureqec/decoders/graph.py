"""Decoding graphs extracted from circuits."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..channels import Reset, conversion_channel
from ..circuit import Circuit, Detector, ErasureCheck, Gate, MeasureFlip, NoiseSite
from ..frame import Fault, propagate_faults


class HypergraphError(ValueError):
    """A single fault flips three or more detectors of the decoded basis."""


def edge_weight(p: float) -> float:
    if p <= 0:
        return float("inf")
    if p >= 0.5:
        return 0.0
    return float(np.log((1 - p) / p))


@dataclass(frozen=True)
class DecodingGraph:
    """Detectors of one basis plus a boundary vertex (index ``num_detectors``).

    ``detector_ids`` maps graph vertices back to circuit detector indices.
    ``check_edges[c]`` lists the edges heralded when check ``c`` flags.
    """

    num_detectors: int
    detector_ids: np.ndarray
    eu: np.ndarray
    ev: np.ndarray
    probs: np.ndarray
    weights: np.ndarray
    obs_mask: np.ndarray
    sources: tuple[tuple[Fault, ...], ...]
    check_edges: dict[int, tuple[int, ...]]
    adj_ptr: np.ndarray = field(repr=False)
    adj_edge: np.ndarray = field(repr=False)
    undetectable_logical_faults: int = 0

    @property
    def boundary(self) -> int:
        return self.num_detectors

    @property
    def num_vertices(self) -> int:
        return self.num_detectors + 1

    @property
    def num_edges(self) -> int:
        return len(self.eu)

    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.eu.tolist(), self.ev.tolist()))

    def syndrome(self, detectors: np.ndarray) -> np.ndarray:
        """Restrict a full detector vector to this graph's vertices."""
        return np.asarray(detectors, dtype=np.uint8)[self.detector_ids]

    def erasure_from_flags(self, flagged_checks) -> np.ndarray:
        out = set()
        for c in flagged_checks:
            out.update(self.check_edges.get(int(c), ()))
        return np.array(sorted(out), dtype=np.int64)

    def check_csr(self, check_ids) -> tuple[np.ndarray, np.ndarray]:
        """CSR of heralded edges for checks in the given (row) order."""
        ptr = [0]
        idx: list[int] = []
        for c in check_ids:
            idx.extend(self.check_edges.get(int(c), ()))
            ptr.append(len(idx))
        return np.array(ptr, dtype=np.int64), np.array(idx, dtype=np.int64)


def _csr(nv, eu, ev):
    inc: list[list[int]] = [[] for _ in range(nv)]
    for e, (u, v) in enumerate(zip(eu, ev)):
        inc[u].append(e)
        inc[v].append(e)
    ptr = np.zeros(nv + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(i) for i in inc])
    flat = np.array([e for i in inc for e in i], dtype=np.int64)
    return ptr, flat


def _make(nd, det_ids, eu, ev, probs, obs, sources, check_edges, undetectable=0) -> DecodingGraph:
    eu = np.asarray(eu, dtype=np.int64)
    ev = np.asarray(ev, dtype=np.int64)
    probs = np.asarray(probs, dtype=float)
    ptr, flat = _csr(nd + 1, eu, ev)
    return DecodingGraph(
        nd, np.asarray(det_ids, dtype=np.int64), eu, ev, probs,
        np.array([edge_weight(p) for p in probs], dtype=float),
        np.asarray(obs, dtype=np.int64), tuple(sources),
        {c: tuple(sorted(v)) for c, v in check_edges.items()}, ptr, flat, undetectable,
    )


def enumerate_faults(circuit: Circuit) -> list[tuple[Fault, float, int | None]]:
    """Elementary faults as (fault, prior probability, heralding check id or None).

    Pauli noise contributes X/Y/Z faults at its site. Erasures contribute the
    conversion Paulis at the check that would herald them, with prior equal to
    the erasure probability accumulated on that qubit since its last check or
    reset (plus the false-positive rate under one-way reset). While a qubit
    may be erased without a flag, its CX partners get unheralded uniform
    Paulis and its measurements flip with half that probability.
    """
    pending = np.zeros(circuit.num_qubits)
    out = []
    for pos, ins in enumerate(circuit.instructions):
        if isinstance(ins, NoiseSite):
            if ins.p > 0:
                bias = np.asarray(ins.bias, dtype=float) / sum(ins.bias)
                for letter, w in zip("XYZ", bias):
                    if w > 0:
                        out.append((Fault(pos, ins.qubit, letter), ins.p * w, None))
            pending[ins.qubit] = 1 - (1 - pending[ins.qubit]) * (1 - ins.e)
        elif isinstance(ins, ErasureCheck):
            conv = conversion_channel(ins.conversion).as_array()
            p_er = pending[ins.qubit]
            if ins.reset is Reset.ONE_WAY:
                p_er = p_er + (1 - p_er) * ins.f_pos
            # conversion acts after the check, i.e. before the next instruction
            for letter, w in zip("XYZ", conv[1:]):
                if w > 0:
                    out.append((Fault(pos + 1, ins.qubit, letter), p_er * w, ins.check_id))
            pending[ins.qubit] = pending[ins.qubit] * ins.f_neg
        elif isinstance(ins, MeasureFlip):
            if ins.q > 0:
                out.append((Fault(pos, ins.qubit, "X"), ins.q, None))
        elif isinstance(ins, Gate) and ins.name == "R":
            pending[list(ins.targets)] = 0
        elif isinstance(ins, Gate) and ins.name == "CX":
            # an unflagged erased qubit scrambles its CX partner
            t = ins.targets
            for a, b in zip(t[::2], t[1::2]):
                for src, dst in ((a, b), (b, a)):
                    if pending[src] > 0:
                        for letter in "XYZ":
                            out.append((Fault(pos + 1, dst, letter), pending[src] / 4, None))
        elif isinstance(ins, Gate) and ins.name == "M":
            for q in ins.targets:
                if pending[q] > 0:
                    out.append((Fault(pos, q, "X"), pending[q] / 2, None))
    return out


def build_decoding_graph(circuit: Circuit, basis: str | None = "Z") -> DecodingGraph:
    """Graph over detectors tagged with ``basis`` (all detectors if None).

    Faults with identical (endpoints, observable) merge with
    p = p1(1-p2) + p2(1-p1). Zero-prior faults are skipped. Faults that flip no decoded detector are dropped;
    the ones among them that flip an observable are counted in
    ``undetectable_logical_faults``.
    """
    dets = circuit.detectors
    det_ids = [i for i, d in enumerate(dets) if basis is None or d.basis == basis]
    local = {g: i for i, g in enumerate(det_ids)}
    nd = len(det_ids)
    faults = enumerate_faults(circuit)
    if faults:
        dflip, oflip = propagate_faults(circuit, [f for f, _, _ in faults])
    else:
        dflip = np.zeros((0, len(dets)), bool)
        oflip = np.zeros((0, circuit.num_observables), bool)
    key_to_edge: dict[tuple[int, int, int], int] = {}
    eu, ev, probs, obs, sources = [], [], [], [], []
    check_edges: dict[int, set[int]] = {c: set() for c in circuit.check_ids}
    undetectable = 0
    for (fault, prior, check), drow, orow in zip(faults, dflip, oflip):
        if prior <= 0:
            continue
        hit = [local[g] for g in np.flatnonzero(drow) if g in local]
        mask = int(sum(1 << int(k) for k in np.flatnonzero(orow)))
        if not hit:
            if mask:
                undetectable += 1
            continue
        if len(hit) > 2:
            raise HypergraphError(f"{fault} flips {len(hit)} detectors of basis {basis}")
        u, v = (hit[0], nd) if len(hit) == 1 else (min(hit), max(hit))
        key = (u, v, mask)
        e = key_to_edge.get(key)
        if e is None:
            e = key_to_edge[key] = len(eu)
            eu.append(u)
            ev.append(v)
            probs.append(prior)
            obs.append(mask)
            sources.append([fault])
        else:
            probs[e] = probs[e] * (1 - prior) + prior * (1 - probs[e])
            sources[e].append(fault)
        if check is not None:
            check_edges[check].add(e)
    return _make(nd, det_ids, eu, ev, probs, obs, [tuple(s) for s in sources], check_edges, undetectable)


def reweight_for_erasure(graph: DecodingGraph, erasure) -> DecodingGraph:
    """Copy of ``graph`` with erased edges at probability 1/2 (weight 0)."""
    erasure = np.asarray(list(erasure), dtype=np.int64)
    if len(erasure) and (erasure.min() < 0 or erasure.max() >= graph.num_edges):
        raise IndexError("erasure references a nonexistent edge")
    probs = graph.probs.copy()
    weights = graph.weights.copy()
    probs[erasure] = 0.5
    weights[erasure] = 0.0
    return replace(graph, probs=probs, weights=weights)


def graph_from_edges(num_detectors: int, edges, probs=None, obs=None) -> DecodingGraph:
    """Build a graph directly from (u, v) pairs; ``v == num_detectors`` is the boundary."""
    edges = list(edges)
    probs = [0.1] * len(edges) if probs is None else list(probs)
    obs = [0] * len(edges) if obs is None else list(obs)
    return _make(num_detectors, np.arange(num_detectors), [u for u, _ in edges], [v for _, v in edges],
                 probs, obs, [() for _ in edges], {})
