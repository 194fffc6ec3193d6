"""Erasure-aware decoders: peeling, union-find and a brute-force ML oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .graph import (
    DecodingGraph,
    HypergraphError,
    build_decoding_graph,
    edge_weight,
    graph_from_edges,
    reweight_for_erasure,
)
from .ml import MLResult, ml_decode_bruteforce


class NotCoveredError(ValueError):
    """Peeling cannot explain the syndrome inside the erased region."""


class DecodeFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class Correction:
    edges: np.ndarray
    observable_mask: int

    @property
    def observable_bits(self) -> tuple[int, ...]:
        return tuple((self.observable_mask >> k) & 1 for k in range(max(1, self.observable_mask.bit_length())))


def _prepare(graph: DecodingGraph, erasure, syndrome):
    syn = np.zeros(graph.num_vertices, dtype=np.uint8)
    s = np.asarray(syndrome, dtype=np.uint8).ravel()
    if s.shape[0] != graph.num_detectors:
        raise ValueError(f"syndrome has {s.shape[0]} bits, graph has {graph.num_detectors} detectors")
    syn[:-1] = s & 1
    erased = np.zeros(graph.num_edges, dtype=np.bool_)
    idx = np.asarray(list(erasure), dtype=np.int64)
    if len(idx):
        if idx.min() < 0 or idx.max() >= graph.num_edges:
            raise IndexError("erasure references a nonexistent edge")
        erased[idx] = True
    return syn, erased


def _correction(graph: DecodingGraph, sel: np.ndarray) -> Correction:
    edges = np.flatnonzero(sel)
    mask = 0
    for e in edges:
        mask ^= int(graph.obs_mask[e])
    return Correction(edges, mask)


def peel_decode(graph: DecodingGraph, erasure, syndrome) -> Correction:
    """Peeling decoder for syndromes fully supported on the erased subgraph."""
    syn, erased = _prepare(graph, erasure, syndrome)
    sel = np.zeros(graph.num_edges, dtype=np.bool_)
    st = _kernels.peel_core(graph.num_vertices, graph.boundary, graph.eu, graph.ev,
                            graph.adj_ptr, graph.adj_edge, erased, syn, sel)
    if st != _kernels.OK:
        raise NotCoveredError("syndrome is not covered by the erased subgraph")
    return _correction(graph, sel)


def union_find_decode(graph: DecodingGraph, erasure, syndrome) -> Correction:
    """Union-find decoder; erased edges seed the clusters at zero cost."""
    syn, erased = _prepare(graph, erasure, syndrome)
    sel = np.zeros(graph.num_edges, dtype=np.bool_)
    st = _kernels.uf_core(graph.num_vertices, graph.boundary, graph.eu, graph.ev,
                          graph.adj_ptr, graph.adj_edge, erased, syn, sel)
    if st != _kernels.OK:
        raise DecodeFailure("no valid correction: a cluster with odd parity cannot reach the boundary")
    return _correction(graph, sel)


def correction_is_valid(graph: DecodingGraph, correction: Correction, syndrome) -> bool:
    """Edge-boundary parity of the correction equals the syndrome."""
    parity = np.zeros(graph.num_vertices, dtype=np.uint8)
    for e in correction.edges:
        parity[graph.eu[e]] ^= 1
        parity[graph.ev[e]] ^= 1
    return bool(np.array_equal(parity[:-1], np.asarray(syndrome, dtype=np.uint8) & 1))


DECODERS = {"peel": 0, "uf": 1}


def decode_batch(graph: DecodingGraph, decoder: str, detectors: np.ndarray, flags: np.ndarray,
                 check_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decode shot-major detector/flag arrays. Returns (predicted masks, status).

    Status 0 = ok, 1 = peeling fell back to union-find, 2 = no valid correction.
    """
    mode = DECODERS[decoder]
    dets = np.ascontiguousarray(np.asarray(detectors, dtype=np.uint8)[:, graph.detector_ids])
    chk_ptr, chk_edge = graph.check_csr(check_ids)
    shots, rows = np.nonzero(flags)
    flag_ptr = np.zeros(len(dets) + 1, dtype=np.int64)
    np.add.at(flag_ptr, shots + 1, 1)
    flag_ptr = np.cumsum(flag_ptr)
    return _kernels.decode_batch(mode, graph.num_vertices, graph.boundary, graph.eu, graph.ev,
                                 graph.adj_ptr, graph.adj_edge, graph.obs_mask, chk_ptr, chk_edge,
                                 dets, flag_ptr, rows.astype(np.int64))


__all__ = [
    "Correction", "DecodeFailure", "DecodingGraph", "HypergraphError", "MLResult", "NotCoveredError",
    "build_decoding_graph", "correction_is_valid", "decode_batch", "edge_weight", "graph_from_edges",
    "ml_decode_bruteforce", "peel_decode", "reweight_for_erasure", "union_find_decode",
]
