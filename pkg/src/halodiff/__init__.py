"""Elastic grating diffraction of weakly bound two-particle systems."""

__version__ = "0.1.0"

from .kernels import (
    BeamState,
    ComplexAmplitude,
    GratingGeometry,
    coherent_amplitude,
    form_factor,
    grating_function,
    molecular_bar_amplitude,
    molecular_bar_amplitude_bruteforce,
    point_bar_amplitude,
    regime_check,
)
from .pattern import compare_suppression, find_peaks, sample_pattern
from .wavefunction import (
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
