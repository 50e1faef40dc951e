"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` (lines are printed even without ``-s``).
"""

import math
import time

import numpy as np
import pytest

from conftest import half_open
from halodiff.cli import main
from halodiff.kernels import (
    BeamState,
    GratingGeometry,
    bruteforce_bar_terms,
    form_factor,
    grating_function,
    molecular_bar_amplitude,
    molecular_bar_terms,
    point_bar_amplitude,
)
from halodiff.numerics import integrate_radial
from halodiff.pattern import bar_intensities, compare_suppression, find_peaks, sample_pattern
from halodiff.wavefunction import ParametrizedAnalytic, Tabulated, ZeroRangeExponential, marginal_density

# Odd-order ratios |t_mol/t_PP|^2 (single bar, reduced units) at orders 1, 3, 5,
# N = 30, s = d/2, zero-range He2 at -1.3 mK. Frozen from the fast path, which
# agrees with the brute-force oracle to ~1e-14.
FROZEN_BAR_RATIOS = {
    100.0: (0.98493, 0.88073, 0.73201),
    25.0: (0.79540, 0.35417, 0.16542),
}


@pytest.fixture
def report(capsys):
    def emit(criterion, description, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] {criterion} {description}: {detail} ... {'PASS' if ok else 'FAIL'}")

    return emit


def bar_ratio(species, geometry, beam, k2):
    t_mol = molecular_bar_amplitude(species, geometry, beam, k2)
    t_pp = point_bar_amplitude(k2, geometry, beam, species.total_mass)
    return t_mol.intensity / t_pp.intensity


def test_c1_form_factor_closed_form(he2, report):
    start = time.perf_counter()
    wf = he2.wavefunction
    kappa = wf.kappa
    q = np.geomspace(1e-3 * kappa, 1e3 * kappa, 200)
    quad = np.array([form_factor(wf, wf, v) for v in q])
    exact = 2 * kappa / q * np.arctan(q / (2 * kappa))
    worst = float(np.max(np.abs(quad / exact - 1)))
    elapsed = time.perf_counter() - start
    ok = round(kappa, 4) == 0.1036 and worst <= 1e-8 and elapsed < 5
    report("C1", "form factor vs (2k/q)atan(q/2k)", ok, f"max rel dev {worst:.2e} (<= 1e-8), {elapsed:.1f} s (< 5 s)")
    assert ok


def test_c2_point_particle_recovery(he2, beam, report):
    start = time.perf_counter()
    g = GratingGeometry(100.0, 50.0, 30)
    orders = (1, 3, 5, 7, 9)
    deviations = []
    for factor in (4, 16, 64, 1000):
        sp = he2.with_wavefunction(he2.wavefunction.scaled(1.0 / factor))
        worst = 0.0
        for n in orders:
            k2 = g.peak_position(n)
            t_mol = molecular_bar_amplitude(sp, g, beam, k2).value
            t_pp = point_bar_amplitude(k2, g, beam, sp.total_mass).value
            worst = max(worst, abs(t_mol - t_pp) / abs(t_pp))
        deviations.append(worst)
    elapsed = time.perf_counter() - start
    monotone = all(b < a for a, b in zip(deviations, deviations[1:]))
    ok = monotone and deviations[-1] < 1e-3 and elapsed < 30
    detail = "max rel dev " + ", ".join(f"{v:.2e}" for v in deviations) + f" for kappa x 4,16,64,1e3 (decreasing, last < 1e-3), {elapsed:.1f} s (< 30 s)"
    report("C2", "point-particle recovery", ok, detail)
    assert ok


@pytest.mark.slow
def test_c3_oracle_equivalence(he2, report):
    start = time.perf_counter()
    worst, count = 0.0, 0
    for d in (100.0, 50.0, 25.0):
        g = half_open(d)
        k2 = [g.peak_position(n) for n in (1, 2, 3, 4)]
        brute = bruteforce_bar_terms(he2, g, k2)
        for k, b in zip(k2, brute):
            fast = molecular_bar_terms(he2, g, k).total
            worst = max(worst, abs(b - fast) / abs(fast))
            count += 1
    elapsed = time.perf_counter() - start
    ok = count == 12 and worst <= 1e-4 and elapsed < 600
    report("C3", "fast vs brute-force 3-D quadrature", ok, f"{count} points, max rel diff {worst:.2e} (<= 1e-4), {elapsed:.0f} s (< 600 s)")
    assert ok


def test_c4_little_difference_at_d100(he2, beam, report):
    start = time.perf_counter()
    g = half_open(100.0)
    ratios = [bar_ratio(he2, g, beam, g.peak_position(n)) for n in (1, 3, 5)]
    elapsed = time.perf_counter() - start
    frozen = all(abs(r - f) <= 5e-5 for r, f in zip(ratios, FROZEN_BAR_RATIOS[100.0]))
    within = all(abs(r - 1) <= 0.10 for r in ratios)
    ok = within and frozen and elapsed < 60
    detail = (
        "ratios " + ", ".join(f"{r:.5f}" for r in ratios)
        + f" at orders 1,3,5 (each within 10% of 1: {within}; frozen values reproduced: {frozen}), {elapsed:.1f} s (< 60 s)"
    )
    report("C4", "d=100 nm odd orders close to point particle", ok, detail)
    assert frozen, "regression values changed"
    assert within, f"odd-order ratios {ratios} not all within 10% of 1"


def test_c5_even_order_reappearance(he2, beam, report):
    start = time.perf_counter()
    exact_zeros = all(
        point_bar_amplitude(half_open(d).peak_position(2 * n), half_open(d), beam, he2.total_mass).value == 0
        for d in (100.0, 50.0, 25.0)
        for n in (1, 2, 3, 4)
    )
    locations, intensities = {}, {}
    for d in (50.0, 25.0):
        g = half_open(d)
        p = sample_pattern(he2, g, beam, g.peak_position(2) * 1.01, 21)
        second = find_peaks(p, 2)[2]
        locations[d], intensities[d] = second.location_k2, second.intensity_mol
    elapsed = time.perf_counter() - start
    ok = (
        exact_zeros
        and all(v > 0 for v in intensities.values())
        and abs(locations[50.0] - 0.2513) <= 5e-5
        and abs(locations[25.0] * 100 - 50) <= 1.0
        and elapsed < 60
    )
    detail = (
        f"t_PP(4 pi n/d) == 0: {exact_zeros}; order 2 at d=50: {locations[50.0]:.4f}/nm, I_mol {intensities[50.0]:.3e}; "
        f"d=25: {locations[25.0] * 100:.2f}/(100 nm), I_mol {intensities[25.0]:.3e}; {elapsed:.1f} s (< 60 s)"
    )
    report("C5", "even-order reappearance", ok, detail)
    assert ok


def test_c6_odd_order_suppression(he2, beam, report):
    start = time.perf_counter()
    g = half_open(25.0)
    ratios = [bar_ratio(he2, g, beam, g.peak_position(n)) for n in (1, 3, 5)]
    p = sample_pattern(he2, g, beam, g.peak_position(5) * 1.001, 11)
    summary = compare_suppression(find_peaks(p, 5))
    elapsed = time.perf_counter() - start
    frozen = all(abs(r - f) <= 5e-5 for r, f in zip(ratios, FROZEN_BAR_RATIOS[25.0]))
    ok = ratios[0] < 1 and ratios[1] < 1 and summary.non_increasing and frozen and elapsed < 60
    detail = "ratios " + ", ".join(f"{r:.5f}" for r in ratios) + f" (orders 1,3 below 1, non-increasing: {summary.non_increasing}, frozen: {frozen}), {elapsed:.1f} s (< 60 s)"
    report("C6", "odd-order suppression at d=25 nm", ok, detail)
    assert ok


def test_c7_structural_invariants(he2, report):
    start = time.perf_counter()
    checks = {}
    N = 30
    g = GratingGeometry(50.0, 25.0, N)
    peaks = grating_function(np.array([g.peak_position(n) for n in range(-6, 7)]), g)
    checks["H = +-N at orders"] = bool(np.allclose(np.abs(peaks), N, rtol=1e-12, atol=0))
    samples = np.random.default_rng(2024).uniform(-5, 5, 100_000)
    checks["|H| <= N on 1e5 samples"] = bool(np.all(np.abs(grating_function(samples, g)) <= N))

    wf = he2.wavefunction
    q = np.geomspace(1e-3, 1e3, 60) * wf.kappa
    f_plus = np.array([form_factor(wf, wf, v) for v in q])
    f_minus = np.array([form_factor(wf, wf, -v) for v in q])
    checks["F even"] = bool(np.array_equal(f_plus, f_minus))
    checks["0 < F <= 1"] = bool(np.all((f_plus > 0) & (f_plus <= 1)))

    r = np.linspace(0.05, 30.0, 3000)
    models = [
        wf,
        ParametrizedAnalytic(((1.0, 0.1036), (-1.0, 2.0))),
        Tabulated(tuple(r), tuple(np.sqrt(0.3 / (2 * np.pi)) * np.exp(-0.3 * r) / r)),
    ]
    norm_dev = max(abs(m.norm() - 1) for m in models)
    checks["wave function norm 1e-8"] = norm_dev <= 1e-8
    marg_dev = max(abs(2 * integrate_radial(lambda x, m=m: marginal_density(m, x), 2 * m.decay_rate).value - 1) for m in models)
    checks["marginal norm 1e-6"] = marg_dev <= 1e-6

    worst = 0.0
    for k2 in (0.05, g.peak_position(1), g.peak_position(3)):
        ratio = []
        for K in (126.05, 252.1):
            b = BeamState(K)
            ratio.append(
                molecular_bar_amplitude(he2, g, b, k2, "literal").ratio(point_bar_amplitude(k2, g, b, he2.total_mass, "literal"))
            )
        worst = max(worst, abs(ratio[0] - ratio[1]) / abs(ratio[0]))
    checks["speed invariance 1e-12"] = worst <= 1e-12
    elapsed = time.perf_counter() - start
    ok = all(checks.values()) and elapsed < 60
    failed = [k for k, v in checks.items() if not v]
    detail = f"{len(checks) - len(failed)}/{len(checks)} invariants hold" + (f" (failed: {failed})" if failed else "")
    detail += f", norm dev {norm_dev:.1e}, marginal dev {marg_dev:.1e}, speed dev {worst:.1e}, {elapsed:.1f} s (< 60 s)"
    report("C7", "structural invariants", ok, detail)
    assert ok


def test_c8_determinism(tmp_path, report):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        "[grating]\nd_nm = 50.0\ns_nm = 25.0\nN = 30\n\n[beam]\nspeed_m_per_s = 1000.0\n\n"
        "[sampling]\nk2_max = 0.4\nnum_samples = 101\n"
    )
    outputs = []
    for name in ("first.csv", "second.csv"):
        out = tmp_path / name
        assert main(["pattern", "--config", str(cfg), "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    ok = outputs[0] == outputs[1]
    report("C8", "pattern determinism", ok, f"two runs, {len(outputs[0])} bytes each, byte-identical: {ok}")
    assert ok
