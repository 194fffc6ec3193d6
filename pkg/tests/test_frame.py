import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from erasureqec.channels import DualRailParams, dual_rail_step
from erasureqec.circuit import (
    Circuit,
    Detector,
    NoiseSite,
    PauliError,
    build_code_capacity_circuit,
    build_memory_circuit,
    build_phenomenological_circuit,
)
from erasureqec.codes import build_d2_surface_code, build_rotated_surface_code, syndrome_of
from erasureqec.frame import BLOCK, Fault, FrameSampler, block_rng, propagate_faults, sample_shots
from erasureqec.pauli import PauliOp
from erasureqec.tableau import tableau_reference_sim
from erasureqec.verify import random_circuit

D3 = build_rotated_surface_code(3)


def inject_after_noise(circuit, qubit, letter):
    """Insert a PAULI right after the last NOISE instruction."""
    ins = list(circuit.instructions)
    pos = max(i for i, x in enumerate(ins) if isinstance(x, NoiseSite)) + 1
    ins.insert(pos, PauliError(qubit, letter))
    return Circuit(circuit.num_qubits, ins)


def test_noiseless_is_silent():
    for c in (build_code_capacity_circuit(D3, 0, 0),
              build_phenomenological_circuit(D3, 3, 0, 0, 0),
              build_memory_circuit(D3, 2, DualRailParams())):
        b = FrameSampler(c).sample(500, seed=1)
        assert not b.detectors.any() and not b.flags.any() and not b.observables.any()


def test_d2_injected_x_gives_010():
    c = inject_after_noise(build_code_capacity_circuit(build_d2_surface_code(), 0, 0), 0, "X")
    b = FrameSampler(c).sample(10, seed=0)
    assert {"".join(map(str, row.astype(int))) for row in b.detectors} == {"010"}
    ref_d, _ = tableau_reference_sim(c)
    assert "".join(map(str, ref_d)) == "010"


def test_determinism_and_blocks():
    c = build_code_capacity_circuit(D3, 0.1, 0.05)
    s = FrameSampler(c)
    a = s.sample(5000, seed=42)
    b = s.sample(5000, seed=42)
    assert np.array_equal(a.detectors, b.detectors) and np.array_equal(a.flags, b.flags)
    assert not np.array_equal(a.detectors, s.sample(5000, seed=43).detectors)
    d0, f0, o0 = s.sample_block(block_rng(42, 0), BLOCK)
    assert np.array_equal(a.detectors[:BLOCK], d0)
    # shot stream does not depend on the requested total
    assert np.array_equal(s.sample(100, seed=42).detectors, a.detectors[:100])
    recs1 = [r.to_json(i) for i, r in enumerate(sample_shots(c, 50, 9))]
    recs2 = [r.to_json(i) for i, r in enumerate(sample_shots(c, 50, 9))]
    assert recs1 == recs2


def test_block_rng_seed_range():
    with pytest.raises(ValueError):
        block_rng(-1, 0)
    with pytest.raises(ValueError):
        FrameSampler(build_code_capacity_circuit(D3, 0, 0)).sample(0, 1)


def test_jsonl_record_format():
    c = build_code_capacity_circuit(build_d2_surface_code(), 0.5, 0)
    rec = sample_shots(c, 3, 5)[0]
    d = json.loads(rec.to_json(0))
    assert list(d) == ["shot", "detectors", "flags", "obs"]
    assert len(d["detectors"]) == 3 and set(d["detectors"]) <= {"0", "1"}
    assert d["flags"] == sorted(d["flags"])


def test_flag_fraction_matches_binomial():
    b = FrameSampler(build_code_capacity_circuit(D3, 0.1, 0.0)).sample(100_000, seed=3)
    frac = b.flags.any(axis=1).mean()
    assert abs(frac - (1 - 0.9 ** 9)) < 0.01


@pytest.mark.parametrize("f_pos,f_neg", [(0.0, 0.0), (0.01, 0.1), (0.05, 0.5)])
def test_herald_marginal_matches_channel(f_pos, f_neg):
    dr = DualRailParams(gamma=0.02, f_pos=f_pos, f_neg=f_neg)
    c = build_memory_circuit(D3, 1, dr)
    s = FrameSampler(c)
    b = s.sample(100_000, seed=11)
    first_layer = [i for i, ch in enumerate(c.checks())][:17]  # checks right after the first noisy CX layer
    rates = b.flags[:, first_layer].mean(axis=0)
    e = dual_rail_step(dr).e
    sigma = np.sqrt(e * (1 - e) / 100_000)
    assert np.all(np.abs(rates - e) < 3 * sigma + 1e-12) or abs(rates.mean() - e) < 3 * sigma / np.sqrt(17)


def _pauli_from_detectors(code, det_row, q):
    # with only qubit q touched, the X-stabilizer detectors reveal Z and the Z-stabilizer detectors reveal X
    for letter in "IXYZ":
        if np.array_equal(syndrome_of(code, PauliOp.from_sparse(code.n, {q: letter})), det_row):
            return letter
    raise AssertionError("syndrome not produced by a single-qubit Pauli")


@pytest.mark.parametrize("conversion,expected", [("mixed", [0.25] * 4), ("biased", [0.5, 0, 0, 0.5])])
def test_flagged_site_carries_conversion_channel(conversion, expected):
    code = D3
    c = build_phenomenological_circuit(code, 1, 0.02, 0.0, 0.0, conversion=conversion)
    b = FrameSampler(c).sample(200_000, seed=5)
    one = b.flags.sum(axis=1) == 1
    counts = dict.fromkeys("IXYZ", 0)
    for det, fl in zip(b.detectors[one], b.flags[one]):
        q = int(np.flatnonzero(fl)[0])
        counts[_pauli_from_detectors(code, det[:8].astype(np.uint8), q)] += 1
    obs = np.array([counts[k] for k in "IXYZ"])
    exp = np.array(expected) * obs.sum()
    keep = exp > 0
    assert obs[~keep].sum() == 0
    assert stats.chisquare(obs[keep], exp[keep]).pvalue > 0.01


def _tiny(lines):
    return Circuit.from_text("\n".join(lines))


def test_erased_qubit_measures_randomly_and_scrambles_partner():
    c = _tiny(["R 0 1", "NOISE 0 e=1.0 p=0.0", "CX 0 1", "M 1", "M 0", "DETECTOR 0", "DETECTOR 1"])
    d = FrameSampler(c).sample(40_000, seed=2).detectors.mean(axis=0)
    assert abs(d[0] - 0.5) < 0.015 and abs(d[1] - 0.5) < 0.015


def test_missed_erasure_persists_and_check_clears():
    missed = _tiny(["R 0", "NOISE 0 e=1.0 p=0.0", "CHECK 0 id=0 f_pos=0 f_neg=1 conversion=biased reset=oneway",
                    "M 0", "DETECTOR 0"])
    b = FrameSampler(missed).sample(20_000, seed=4)
    assert not b.flags.any() and abs(b.detectors.mean() - 0.5) < 0.02
    caught = _tiny(["R 0", "NOISE 0 e=1.0 p=0.0", "CHECK 0 id=0 f_pos=0 f_neg=0 conversion=biased reset=oneway",
                    "M 0", "DETECTOR 0"])
    b = FrameSampler(caught).sample(20_000, seed=4)
    assert b.flags.all() and not b.detectors.any()  # biased conversion is Z-only: invisible to M


def test_false_positive_reset_semantics():
    oneway = _tiny(["R 0", "CHECK 0 id=0 f_pos=1 f_neg=0 conversion=biased reset=oneway", "M 0", "DETECTOR 0"])
    b = FrameSampler(oneway).sample(10_000, seed=1)
    assert b.flags.all() and not b.detectors.any()
    unitary = _tiny(["R 0", "CHECK 0 id=0 f_pos=1 f_neg=0 conversion=biased reset=unitary", "M 0", "DETECTOR 0"])
    b = FrameSampler(unitary).sample(10_000, seed=1)
    assert b.flags.all() and abs(b.detectors.mean() - 0.5) < 0.03


def test_forced_check():
    c = build_memory_circuit(build_d2_surface_code(), 1, DualRailParams(gamma=0.001), measure_types=("Z",))
    b = FrameSampler(c, force_checks=[7]).sample(300, seed=0)
    row = c.check_ids.index(7)
    assert b.flags[:, row].all()
    with pytest.raises(ValueError):
        FrameSampler(c, force_checks=[99])


# --------------------------------------------------------------------------- tableau oracle

def test_tableau_trivial_cases():
    c = build_phenomenological_circuit(D3, 3, 0, 0, 0)
    d, o = tableau_reference_sim(c)
    assert not d.any() and not o.any()
    pos = next(i for i, x in enumerate(c.instructions) if isinstance(x, NoiseSite))
    stab = D3.stabilizers[5]
    errs = {pos: [(q, stab.letter(q)) for q in stab.support]}
    d, o = tableau_reference_sim(c, errs)
    assert not d.any() and not o.any()


def test_tableau_x_before_round_one():
    c = build_phenomenological_circuit(D3, 3, 0, 0, 0)
    pos = next(i for i, x in enumerate(c.instructions) if isinstance(x, NoiseSite))
    d, _ = tableau_reference_sim(c, {pos: [(4, "X")]})
    expected = syndrome_of(D3, PauliOp.from_sparse(9, {4: "X"}))
    assert d[:8].tolist() == expected.tolist()
    assert expected[4:].sum() == 2  # two adjacent Z checks
    assert not d[8:].any()


def test_propagate_faults_matches_tableau_on_builders():
    rng = np.random.default_rng(0)
    for c in (build_phenomenological_circuit(D3, 2, 0.1, 0.1, 0.1),
              build_memory_circuit(build_d2_surface_code(), 2, DualRailParams(gamma=0.01))):
        faults = [Fault(int(rng.integers(len(c.instructions))), int(rng.integers(c.num_qubits)),
                        str(rng.choice(list("XYZ")))) for _ in range(40)]
        fd, fo = propagate_faults(c, faults)
        for f, drow, orow in zip(faults, fd, fo):
            td, to = tableau_reference_sim(c, {f.position: [(f.qubit, f.pauli)]})
            assert np.array_equal(drow, td.astype(bool)) and np.array_equal(orow, to.astype(bool))


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_frame_matches_tableau_on_random_circuits(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, n_qubits=int(rng.integers(2, 6)), n_ops=int(rng.integers(5, 30)))
    ref_d, ref_o = tableau_reference_sim(c)
    b = FrameSampler(c).sample(2, seed=seed)
    assert np.array_equal(b.detectors[0], ref_d.astype(bool))
    assert np.array_equal(b.observables[0], ref_o.astype(bool))


def test_random_corpus_is_not_vacuous():
    rng = np.random.default_rng(1)
    circuits = [random_circuit(rng, n_qubits=4, n_ops=20) for _ in range(50)]
    assert np.mean([c.num_detectors for c in circuits]) > 2
    flips = [tableau_reference_sim(c)[0].any() for c in circuits]
    assert 0.2 < np.mean(flips) < 1.0
