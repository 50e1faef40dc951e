"""Unit conventions: lengths in nm, wave numbers in 1/nm, masses in u, energies in micro-eV."""

from scipy import constants as _c

HBAR = _c.hbar
AMU = _c.physical_constants["atomic mass constant"][0]
K_B = _c.k
MICRO_EV = 1e-6 * _c.e
NM = 1e-9

#: Atomic mass of helium-4 in u.
HELIUM4_MASS_U = 4.00260325413


def millikelvin_to_microev(temperature_mk: float) -> float:
    """Energy ``k_B * T`` for T given in mK, in micro-eV (sign preserved)."""
    return temperature_mk * 1e-3 * K_B / MICRO_EV


def microev_to_millikelvin(energy_uev: float) -> float:
    return energy_uev * MICRO_EV / (1e-3 * K_B)


def wavenumber_from_speed(mass_u: float, speed_m_per_s: float) -> float:
    """de Broglie wave number ``M v / hbar`` in 1/nm."""
    return mass_u * AMU * speed_m_per_s / HBAR * NM


def speed_from_wavenumber(mass_u: float, wavenumber_per_nm: float) -> float:
    return wavenumber_per_nm / NM * HBAR / (mass_u * AMU)


def kinetic_energy_microev(mass_u: float, wavenumber_per_nm: float) -> float:
    """``(hbar K)^2 / 2M`` in micro-eV."""
    momentum = HBAR * wavenumber_per_nm / NM
    return momentum**2 / (2.0 * mass_u * AMU) / MICRO_EV
