"""Acceptance criteria, run at full size. Each test prints one PASS/FAIL line."""

import json
import math

import numpy as np
import pytest

from erasureqec import cli, verify
from erasureqec.channels import amplitude_damping_channel, pauli_twirl
from erasureqec.config import bundled_configs

CFG = bundled_configs()

pytestmark = pytest.mark.slow


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return _report


def cli_json(capsys, *argv):
    code = cli.main([str(a) for a in argv] + ["-q"])
    out, _ = capsys.readouterr()
    return code, json.loads(out) if out.strip().startswith("{") else out


def test_1_erasure_threshold(capsys, report):
    code, rep = cli_json(capsys, "threshold", "--config", CFG["erasure_threshold"])
    s = rep["series"][""]
    ok = code == 0 and s["found"] and abs(s["crossing"] - 0.50) <= 0.02
    report(1, ok, f"pure-erasure peeling crossing {s['crossing']:.4f} "
                  f"[{s['ci_lo']:.4f}, {s['ci_hi']:.4f}], target 0.50 +- 0.02")


def test_2_depolarizing_threshold(capsys, report):
    code, rep = cli_json(capsys, "threshold", "--config", CFG["pauli_threshold"])
    s = rep["series"][""]
    ok = code == 0 and s["found"] and 0.12 <= s["crossing"] < 0.19
    report(2, ok, f"depolarizing UF crossing {s['crossing']:.4f} "
                  f"[{s['ci_lo']:.4f}, {s['ci_hi']:.4f}], target in [0.12, 0.19)")


def test_3_d_minus_1_erasures(report):
    res = verify.erasure_d_minus_1()
    report(3, res.passed, res.summary())


def test_4_scaling_exponents(capsys, report):
    code, rep = cli_json(capsys, "scaling", "--config", CFG["scaling_d3"])
    parts, ok = [], code == 0
    for name, target in (("erasure", lambda d: d), ("pauli", lambda d: math.ceil(d / 2))):
        for d, fit in rep["series"][name]["fits"].items():
            slope = fit.get("slope")
            good = slope is not None and fit["n_points"] >= 3 and abs(slope - target(int(d))) <= 0.5
            ok &= good
            parts.append(f"{name} d={d} slope {slope:.3f} (want {target(int(d))} +- 0.5)" if slope is not None
                         else f"{name} d={d} {fit['error']}")
    report(4, ok, "; ".join(parts))


def test_5_hierarchy(capsys, report):
    code, rep = cli_json(capsys, "hierarchy", "--config", CFG["hierarchy"])
    h = rep["distances"]["3"]
    pl, sep = h["p_l"], h["separation_sigma"]
    ok = code == 0 and pl["missed"] > pl["pauli"] > pl["heralded"] and min(sep) >= 3
    report(5, ok, f"d=3 r={rep['rate']}: missed {pl['missed']:.3g} > pauli {pl['pauli']:.3g} > "
                  f"heralded {pl['heralded']:.3g}, gaps {sep[0]:.1f} and {sep[1]:.1f} sigma")


def test_6_oracle_equivalences(report):
    frame = verify.frame_vs_tableau(n_circuits=1000)
    peel = verify.peel_vs_ml()
    worst = 0.0
    for g in np.linspace(0, 1, 201):
        closed = np.array([0, g / 4, g / 4, (2 - g - 2 * math.sqrt(1 - g)) / 4])
        closed[0] = 1 - closed[1:].sum()
        worst = max(worst, float(np.max(np.abs(pauli_twirl(amplitude_damping_channel(g)).as_array() - closed))))
    ok = frame.passed and peel.passed and worst <= 1e-12
    report(6, ok, f"{frame.summary()}; {peel.summary()}; twirl max deviation {worst:.1e}")


def test_7_heralding_benefit(capsys, report):
    code, rep = cli_json(capsys, "threshold", "--config", CFG["heralding"])
    her, unh = rep["series"]["heralded"], rep["series"]["unheralded"]
    ratio = rep.get("ratio")
    ok = code == 0 and her["found"] and unh["found"] and ratio is not None and ratio >= 1.3
    report(7, ok, f"d=3/5 crossing heralded {her['crossing']} vs unheralded {unh['crossing']}, ratio {ratio}")


# command that consumes each bundled config, with a reduced shot count
DETERMINISM_RUNS = {
    "erasure_threshold": ("threshold", 2000),
    "pauli_threshold": ("threshold", 2000),
    "scaling_d3": ("scaling", 5000),
    "hierarchy": ("hierarchy", 5000),
    "fig3_d2": ("sample", 2000),
    "heralding": ("threshold", 1000),
}


def _outputs(capsys, tmp_path, name, workers):
    cmd, shots = DETERMINISM_RUNS[name]
    out = tmp_path / f"{name}-w{workers}"
    target = out / "shots.jsonl" if cmd == "sample" else out
    code = cli.main([cmd, "--config", str(CFG[name]), "--shots", str(shots), "--workers", str(workers),
                     "--out", str(target), "-q"])
    stdout, _ = capsys.readouterr()
    files = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    return code, stdout, files


def test_8_determinism(capsys, tmp_path, report):
    assert set(DETERMINISM_RUNS) == set(CFG), "every bundled config needs a determinism run"
    bad = []
    for name in sorted(CFG):
        a = _outputs(capsys, tmp_path / "a", name, 1)
        b = _outputs(capsys, tmp_path / "b", name, 2)
        c = _outputs(capsys, tmp_path / "c", name, 1)
        if not (a == b == c) or not a[2]:
            bad.append(name)
    report(8, not bad, f"{len(CFG)} bundled configs byte-identical at workers 1 and 2"
                       if not bad else f"outputs differ for {', '.join(bad)}")
