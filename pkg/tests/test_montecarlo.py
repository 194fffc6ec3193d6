import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from erasureqec.codes import build_rotated_surface_code
from erasureqec.montecarlo import (
    CSV_HEADER,
    EstimateRow,
    ExperimentPoint,
    InsufficientStatistics,
    _row,
    estimate_logical_error,
    find_threshold,
    fit_scaling_exponent,
    hierarchy_d2_exhaustive,
    hierarchy_experiment,
    point_seed,
    run_points,
    wilson_interval,
)
from erasureqec.verify import erasure_failure_fraction_ml


def synth(rate_name, values, d, fn, shots=10**12):
    rows = []
    for r in values:
        pt = ExperimentPoint(d=d, **{rate_name: r})
        rows.append(_row(pt, shots, int(round(min(fn(r), 1.0) * shots)), 0))
    return rows


def test_zero_noise_never_fails():
    row = estimate_logical_error(ExperimentPoint(d=3), 5000, seed=1)
    assert row.failures == 0 and row.p_l == 0.0
    assert row.ci_lo == 0.0 and 0 < row.ci_hi < 1e-3


def test_plateau_matches_exhaustive_ml():
    code = build_rotated_surface_code(3)
    exact = sum(erasure_failure_fraction_ml(code, s)
                for k in range(10) for s in itertools.combinations(range(9), k)) * 0.5 ** 9
    row = estimate_logical_error(ExperimentPoint(d=3, e=0.5, decoder="peel"), 100_000, seed=3)
    assert row.ci_hi - row.ci_lo < 0.01
    assert abs(row.p_l - exact) < 4 * row.sigma
    assert row.ci_lo <= row.p_l <= row.ci_hi


def test_estimates_are_deterministic():
    pt = ExperimentPoint(d=3, e=0.2, p=0.02)
    assert estimate_logical_error(pt, 3000, 9) == estimate_logical_error(pt, 3000, 9)


def test_seeds_are_paired_across_decoders():
    a = ExperimentPoint(d=5, e=0.3, decoder="peel", series="x")
    b = ExperimentPoint(d=5, e=0.3, decoder="uf", series="y")
    assert point_seed(7, a) == point_seed(7, b)
    assert point_seed(7, a) != point_seed(8, a)
    assert point_seed(7, a) != point_seed(7, ExperimentPoint(d=5, e=0.31))


def test_worker_count_does_not_change_rows():
    pts = [ExperimentPoint(d=d, e=e) for d in (3, 5) for e in (0.3, 0.45)]
    assert run_points(pts, 2000, 11, workers=1) == run_points(list(reversed(pts)), 2000, 11, workers=2)


def test_row_invariants_and_csv():
    row = estimate_logical_error(ExperimentPoint(d=3, p=0.05), 4000, 2)
    assert 0 <= row.failures <= row.shots
    assert row.ci_lo <= row.p_l <= row.ci_hi
    assert len(row.csv_fields()) == len(CSV_HEADER)
    assert CSV_HEADER[:3] == ("d", "e", "p") and CSV_HEADER[-1] == "seed"


def test_invalid_points():
    with pytest.raises(ValueError):
        ExperimentPoint(d=4)
    with pytest.raises(ValueError):
        ExperimentPoint(kind="bogus")
    with pytest.raises(ValueError):
        estimate_logical_error(ExperimentPoint(), 0, 0)


def test_synthetic_crossing_is_exact():
    rates = [0.05, 0.06, 0.07, 0.08, 0.09, 0.1, 0.12]
    rows = [r for d in (3, 5, 7) for r in synth("e", rates, d, lambda x, d=d: (x / 0.1) ** d)]
    rep = find_threshold(rows, "e", n_boot=200)
    assert rep.found and rep.crossing == pytest.approx(0.1, abs=1e-12)
    assert set(rep.pair_crossings.values()) == {0.1}
    assert set(rep.pair_crossings) == {"3-5", "3-7", "5-7"}


def test_no_crossing_is_reported_not_raised():
    rates = [0.01, 0.02, 0.03]
    rows = [r for d in (3, 5) for r in synth("e", rates, d, lambda x, d=d: x ** d)]
    rep = find_threshold(rows, "e", n_boot=10)
    assert not rep.found and rep.crossing is None
    with pytest.raises(ValueError):
        find_threshold(rows[:3], "e")


def test_synthetic_power_law_slope():
    rows = synth("p", [0.01, 0.02, 0.03, 0.04], 3, lambda x: x ** 2)
    fit = fit_scaling_exponent(rows, "p", threshold=0.1)
    assert abs(fit.slope - 2.0) < 1e-9
    assert fit.r2 == pytest.approx(1.0) and fit.n_points == 4


def test_scaling_refuses_thin_data():
    # only two rates sit below threshold / 2
    rows = synth("p", [0.01, 0.02, 0.2, 0.3], 3, lambda x: x ** 2)
    with pytest.raises(InsufficientStatistics):
        fit_scaling_exponent(rows, "p", threshold=0.1)
    few = [_row(ExperimentPoint(d=3, p=x), 100, 2, 0) for x in (0.01, 0.02, 0.03)]
    with pytest.raises(InsufficientStatistics, match=">= 10 failures"):
        fit_scaling_exponent(few, "p")


def test_wilson_coverage():
    rng = np.random.default_rng(5)
    for p, n in [(0.1, 200), (0.02, 1000), (0.5, 50)]:
        k = rng.binomial(n, p, size=1000)
        hits = sum(lo <= p <= hi for lo, hi in (wilson_interval(int(x), n) for x in k))
        assert hits / 1000 >= 0.93


@settings(max_examples=50)
@given(st.integers(1, 10**6), st.data())
def test_wilson_brackets_estimate(n, data):
    k = data.draw(st.integers(0, n))
    lo, hi = wilson_interval(k, n)
    row = _row(ExperimentPoint(), n, k, 0)
    assert 0 <= lo <= hi <= 1
    assert row.ci_lo <= row.p_l <= row.ci_hi


def test_threshold_stable_under_shot_doubling():
    rates = [0.40, 0.44, 0.48, 0.52, 0.56, 0.60]
    pts = [ExperimentPoint(d=d, e=e, decoder="peel") for d in (5, 9) for e in rates]
    a = find_threshold(run_points(pts, 10_000, 1), "e", n_boot=300, seed=1)
    b = find_threshold(run_points(pts, 20_000, 2), "e", n_boot=300, seed=1)
    assert a.found and b.found
    half = max(a.ci_hi - a.ci_lo, b.ci_hi - b.ci_lo)
    assert abs(a.crossing - b.crossing) <= half


@pytest.mark.parametrize("d,gamma", [(3, 0.02), (3, 0.05), (5, 0.03)])
def test_heralding_helps(d, gamma):
    shots, seed = 4000, 77
    her = estimate_logical_error(ExperimentPoint(kind="memory", d=d, gamma=gamma), shots, seed)
    unh = estimate_logical_error(ExperimentPoint(kind="memory", d=d, gamma=gamma, herald=False), shots, seed)
    assert her.p_l <= unh.p_l + 3 * math.hypot(her.sigma, unh.sigma)


def test_basis_symmetry():
    z = estimate_logical_error(ExperimentPoint(d=5, e=0.2, p=0.05, basis="Z"), 40_000, 3)
    x = estimate_logical_error(ExperimentPoint(d=5, e=0.2, p=0.05, basis="X"), 40_000, 4)
    assert abs(z.p_l - x.p_l) < 4 * math.hypot(z.sigma, x.sigma)


def test_hierarchy_at_zero_rate():
    res = hierarchy_experiment(3, 0.0, 2000, 1)
    assert res.missed.failures == res.pauli.failures == res.heralded.failures == 0


def test_d2_single_event_classification():
    c = hierarchy_d2_exhaustive()
    assert c["erasure"]["undetected"] == c["erasure"]["miscorrected"] == 0
    assert c["erasure"]["corrected"] == 16
    assert c["pauli"]["miscorrected"] > 0 and c["pauli"]["undetected"] == 0
    assert c["missed"]["undetected"] > 0
    # frozen from the exhaustive enumeration
    assert c == {"erasure": {"corrected": 16, "undetected": 0, "miscorrected": 0},
                 "pauli": {"corrected": 6, "undetected": 0, "miscorrected": 6},
                 "missed": {"corrected": 10, "undetected": 12, "miscorrected": 42}}
