import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import constants

from halodiff.numerics import DomainError, integrate, integrate_radial
from halodiff.units import HELIUM4_MASS_U, millikelvin_to_microev
from halodiff.wavefunction import (
    DimerSpecies,
    ParametrizedAnalytic,
    Tabulated,
    ZeroRangeExponential,
    helium_dimer,
    kappa_from_binding_energy,
    marginal_density,
    mean_internuclear_distance,
    probability_density,
)

KAPPA_HE2 = 0.1036


def zero_range_table(kappa, r_max_factor=40.0, n=4000):
    r = np.linspace(1e-3 / kappa, r_max_factor / kappa, n)
    phi = math.sqrt(kappa / (2 * math.pi)) * np.exp(-kappa * r) / r
    return Tabulated(tuple(r), tuple(phi))


MODELS = {
    "zero-range": ZeroRangeExponential(KAPPA_HE2),
    "analytic": ParametrizedAnalytic(((1.0, 0.1036), (-1.0, 2.0))),
    "tabulated": zero_range_table(0.3),
}


def test_kappa_from_quoted_binding_energy():
    energy_j = 1.3e-3 * constants.k
    mu_kg = HELIUM4_MASS_U / 2 * constants.physical_constants["atomic mass constant"][0]
    by_hand = math.sqrt(2 * mu_kg * energy_j) / constants.hbar * 1e-9
    kappa = kappa_from_binding_energy(millikelvin_to_microev(-1.3), HELIUM4_MASS_U / 2)
    assert kappa == pytest.approx(by_hand, rel=1e-12)
    assert round(kappa, 4) == KAPPA_HE2


def test_kappa_scaling_and_limits():
    mu = HELIUM4_MASS_U / 2
    base = kappa_from_binding_energy(-0.1, mu)
    assert kappa_from_binding_energy(-0.4, mu) == pytest.approx(2 * base, rel=1e-14)
    assert kappa_from_binding_energy(-0.1, 1e-12) < 1e-6 * base
    with pytest.raises(DomainError):
        kappa_from_binding_energy(0.0, mu)


def test_zero_range_density_formula():
    wf = ZeroRangeExponential(0.1)
    expected = (0.1 / (2 * math.pi)) * math.exp(-1.0) / 25.0
    assert probability_density(wf, 5.0) == pytest.approx(expected, rel=1e-15)
    with pytest.raises(DomainError):
        probability_density(wf, 0.0)


def test_tabulated_density_at_node():
    wf = zero_range_table(0.2)
    i = 137
    r = wf.r_grid[i]
    assert probability_density(wf, r) == pytest.approx((wf.scale * wf.values[i]) ** 2, rel=1e-12)


@pytest.mark.parametrize("name", MODELS)
def test_normalization(name):
    assert MODELS[name].norm() == pytest.approx(1.0, abs=1e-8)


def test_analytic_normalization_closed_form():
    wf = MODELS["analytic"]
    exact = 4 * math.pi * wf.scale**2 * sum(
        wi * wj / (ai + aj) for wi, ai in wf.coefficients for wj, aj in wf.coefficients
    )
    assert exact == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(0.1, 3.0), st.floats(0.05, 5.0)),
        min_size=1,
        max_size=3,
    )
)
def test_analytic_normalization_property(pairs):
    wf = ParametrizedAnalytic(tuple(pairs))
    assert wf.norm() == pytest.approx(1.0, abs=1e-8)
    assert mean_internuclear_distance(wf) > 0


def test_zero_range_marginal_matches_quadrature():
    wf = MODELS["zero-range"]
    x = np.geomspace(1e-3 / wf.kappa, 10 / wf.kappa, 25)
    closed = marginal_density(wf, x)
    numeric = marginal_density(wf, x, method="quadrature")
    assert np.allclose(closed, wf.kappa * np.array([float(mpmath.e1(2 * wf.kappa * v)) for v in x]), rtol=1e-12)
    assert np.max(np.abs(numeric / closed - 1)) < 1e-8


def test_analytic_marginal_matches_quadrature():
    wf = MODELS["analytic"]
    x = np.geomspace(1e-3, 80.0, 15)
    assert np.allclose(marginal_density(wf, x), marginal_density(wf, x, method="quadrature"), rtol=1e-8, atol=0)


@pytest.mark.parametrize("name", MODELS)
def test_marginal_integrates_to_one(name):
    wf = MODELS[name]

    def rho(x):
        return marginal_density(wf, x)

    half = integrate_radial(rho, 2 * wf.decay_rate)
    assert 2 * half.value == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("name", MODELS)
def test_marginal_even_and_decaying(name):
    wf = MODELS[name]
    x = np.array([0.01, 0.5, 3.0, 17.0])
    assert np.array_equal(marginal_density(wf, x), marginal_density(wf, -x))
    far = marginal_density(wf, 60 / wf.decay_rate)
    assert 0 <= far < 1e-20


def test_zero_range_mean_distance():
    for kappa in (0.05, KAPPA_HE2, 1.7):
        assert mean_internuclear_distance(ZeroRangeExponential(kappa)) == pytest.approx(1 / (2 * kappa), rel=1e-10)
    he = helium_dimer().wavefunction
    assert mean_internuclear_distance(he) == pytest.approx(4.83, abs=0.01)


@pytest.mark.parametrize("name", MODELS)
@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_scale_transform(name, lam):
    wf = MODELS[name]
    scaled = wf.scaled(lam)
    assert scaled.norm() == pytest.approx(1.0, abs=1e-8)
    assert mean_internuclear_distance(scaled) == pytest.approx(lam * mean_internuclear_distance(wf), rel=1e-7)
    r = np.array([0.7, 3.0, 11.0])
    assert np.allclose(scaled.value(lam * r), lam**-1.5 * wf.value(r), rtol=1e-6)


def test_tabulated_tail_fit_recovers_kappa():
    wf = zero_range_table(0.25, r_max_factor=20)
    assert wf.kappa_fit == pytest.approx(0.25, rel=1e-6)
    assert wf.scale == pytest.approx(1.0, abs=1e-6)
    r = np.array([100.0, 150.0])
    exact = ZeroRangeExponential(0.25).value(r)
    assert np.allclose(wf.value(r), exact, rtol=1e-5)


def test_tabulated_from_file(tmp_path):
    kappa = 0.2
    r = np.linspace(0.01, 150.0, 3000)
    phi = 3.0 * np.exp(-kappa * r) / r  # unnormalised on purpose
    path = tmp_path / "he2.dat"
    np.savetxt(path, np.column_stack([r, phi]), header="r_nm phi_value")
    wf = Tabulated.from_file(path)
    assert wf.scale == pytest.approx(math.sqrt(kappa / (2 * math.pi)) / 3.0, rel=1e-6)
    assert wf.norm() == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("r, phi", [
    ((1.0, 0.5) + tuple(range(2, 14)), (1.0,) * 14),
    (tuple(range(1, 5)), (1.0,) * 4),
])
def test_tabulated_rejects_bad_tables(r, phi):
    with pytest.raises(ValueError):
        Tabulated(r, phi)


def test_species_invariants():
    wf = ZeroRangeExponential(0.1)
    sp = DimerSpecies(4.0, 7.0, -0.2, wf)
    assert sp.total_mass == 11.0
    assert sp.reduced_mass == pytest.approx(28 / 11)
    assert sp.mass_ratio == pytest.approx(1.75)
    with pytest.raises(ValueError):
        DimerSpecies(4.0, 0.0, -0.2, wf)
    with pytest.raises(ValueError):
        DimerSpecies(4.0, 4.0, 0.1, wf)


def test_helium_dimer_defaults():
    he = helium_dimer()
    assert he.mass_1 == he.mass_2 == HELIUM4_MASS_U
    assert he.binding_energy == pytest.approx(-0.112, abs=1e-3)
    assert isinstance(he.wavefunction, ZeroRangeExponential)
