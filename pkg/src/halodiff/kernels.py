"""Scattering amplitudes of a point particle and of a two-particle bound state
at an N-bar transmission grating (normal incidence, small angles, k3 = 0 slice).

Conventions: lengths in nm, wave numbers in 1/nm, hbar = 1. Amplitudes come in
two modes. ``"reduced"`` drops the common factor ``2K / ((2 pi)^2 M)`` so
molecule and point particle share it exactly; ``"literal"`` keeps it with
``M`` in u.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .numerics import (
    QuadratureSpec,
    graded_points,
    integrate_oscillatory,
    integrate_radial,
)
from .wavefunction import (
    FOUR_PI,
    DimerSpecies,
    RadialWaveFunction,
    marginal_density,
    mean_internuclear_distance,
)
from .units import kinetic_energy_microev, wavenumber_from_speed

MODES = ("reduced", "literal")
REGIME_FACTOR = 100.0
MAX_MASS_RATIO = 4.0
SMALL_ANGLE_LIMIT = 0.1
_EPS = np.finfo(float).eps


class ModeMismatchError(ValueError):
    pass


class ResourceLimitError(RuntimeError):
    """A brute-force grid would exceed its evaluation budget."""


class SmallAngleWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GratingGeometry:
    period_d: float
    slit_s: float
    bar_count_N: int

    def __post_init__(self):
        if not 0 < self.slit_s < self.period_d:
            raise ValueError(
                f"grating needs 0 < slit_s < period_d (got s={self.slit_s}, d={self.period_d})"
            )
        if int(self.bar_count_N) != self.bar_count_N or self.bar_count_N < 1:
            raise ValueError(f"bar_count_N must be a positive integer, got {self.bar_count_N}")

    @property
    def bar_width(self) -> float:
        return self.period_d - self.slit_s

    def peak_position(self, order: int) -> float:
        return 2.0 * math.pi * order / self.period_d


@dataclass(frozen=True)
class BeamState:
    incident_wavenumber_K: float

    def __post_init__(self):
        if not self.incident_wavenumber_K > 0:
            raise ValueError("incident wave number must be positive")

    @classmethod
    def from_speed(cls, mass_u: float, speed_m_per_s: float) -> "BeamState":
        return cls(wavenumber_from_speed(mass_u, speed_m_per_s))


@dataclass(frozen=True)
class ComplexAmplitude:
    value: complex
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    def _check(self, other: "ComplexAmplitude"):
        if other.mode != self.mode:
            raise ModeMismatchError(f"cannot combine {self.mode} and {other.mode} amplitudes")

    def __add__(self, other: "ComplexAmplitude") -> "ComplexAmplitude":
        self._check(other)
        return ComplexAmplitude(self.value + other.value, self.mode)

    def __sub__(self, other: "ComplexAmplitude") -> "ComplexAmplitude":
        self._check(other)
        return ComplexAmplitude(self.value - other.value, self.mode)

    def scale(self, factor: float) -> "ComplexAmplitude":
        return ComplexAmplitude(self.value * factor, self.mode)

    def ratio(self, other: "ComplexAmplitude") -> complex:
        self._check(other)
        return self.value / other.value

    @property
    def intensity(self) -> float:
        return abs(self.value) ** 2


def prefactor(beam: BeamState, mass: float, mode: str) -> float:
    if mode == "reduced":
        return 1.0
    if mode == "literal":
        return 2.0 * beam.incident_wavenumber_K / ((2.0 * math.pi) ** 2 * mass)
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _sin_over_k(k, half_width):
    """``sin(k * half_width) / k`` with exact zeros at the sine's nodes and the
    limit ``half_width`` at k = 0."""
    k = np.abs(np.asarray(k, dtype=float))
    phase = k * half_width
    n = np.rint(phase / math.pi)
    on_node = np.abs(phase - n * math.pi) <= 4.0 * _EPS * np.maximum(phase, 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(k > 0, np.sin(phase) / np.where(k > 0, k, 1.0), half_width)
    return np.where(on_node & (k > 0), 0.0, out)


def grating_function(k2, geometry: GratingGeometry):
    """``sin(N k2 d / 2) / sin(k2 d / 2)``; the removable singularities at
    ``k2 d / 2 = n pi`` take their limits ``(-1)**(n (N - 1)) N``."""
    N = int(geometry.bar_count_N)
    x = np.asarray(k2, dtype=float) * geometry.period_d / 2.0
    n = np.rint(x / math.pi)
    eps = x - n * math.pi
    sign = np.where((n * (N - 1)) % 2 == 0, 1.0, -1.0)
    den = np.sin(eps)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(den != 0.0, np.sin(N * eps) / np.where(den != 0.0, den, 1.0), float(N))
    out = np.clip(sign * ratio, -N, N)
    return float(out) if out.ndim == 0 else out


def point_bar_coefficient(k2, geometry: GratingGeometry):
    """Real factor ``sin(k2 (d - s) / 2) / k2`` of the point-particle bar amplitude."""
    out = _sin_over_k(k2, geometry.bar_width / 2.0)
    return float(out) if out.ndim == 0 else out


def point_bar_amplitude(
    k2: float, geometry: GratingGeometry, beam: BeamState, mass: float, mode: str = "reduced"
) -> ComplexAmplitude:
    """Single reflecting bar, point particle: ``-i c sin(k2 (d-s)/2) / k2``."""
    c = prefactor(beam, mass, mode)
    return ComplexAmplitude(complex(0.0, -c * point_bar_coefficient(k2, geometry)), mode)


def form_factor(
    wf_a: RadialWaveFunction,
    wf_b: RadialWaveFunction,
    q: float,
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """``int 4 pi r^2 phi_a phi_b sinc(q r) dr``; even in ``q``."""
    q = abs(float(q))
    decay = wf_a.decay_rate + wf_b.decay_rate
    points = tuple(wf_a.breakpoints) + tuple(wf_b.breakpoints)
    if q == 0.0:
        def overlap(r):
            return FOUR_PI * wf_a.reduced(r) * wf_b.reduced(r)

        return integrate_radial(overlap, decay, spec, points).value

    def envelope(r):
        return FOUR_PI * wf_a.reduced(r) * wf_b.reduced(r) / (q * r)

    upper = spec.cutoff(decay)
    seeds = list(graded_points(0.0, min(1.0 / decay, math.pi / q), 50)) + list(points)
    return integrate_oscillatory(envelope, q, (0.0, upper), spec, "sin", seeds).value


class MolecularBarTerms(NamedTuple):
    """Pieces of the molecular single-bar amplitude in units of ``i * prefactor``.

    ``form_factor_1/2`` are F(m1 k2/M), F(m2 k2/M); ``sine_integral_1/2`` are
    ``int_0^{d-s} rho(x) sin[k2((d-s)/2 - m_j x/M)] dx / k2`` with the
    partner mass ``m_2`` for index 1 and ``m_1`` for index 2.
    """

    form_factor_1: float
    form_factor_2: float
    sine_integral_1: float
    sine_integral_2: float
    point_coefficient: float

    @property
    def first(self) -> float:
        return -self.point_coefficient * (self.form_factor_1 + self.form_factor_2)

    @property
    def second(self) -> float:
        return self.sine_integral_1 + self.sine_integral_2

    @property
    def total(self) -> float:
        return self.first + self.second


def _bar_sine_integral(wf, rho, mass_fraction, k, bar, spec):
    # int_0^b rho(x) sin(k (b/2 - f x)) dx / k, split as
    # sin(kb/2)/k * int rho cos(a x) - cos(kb/2) * int rho sin(a x) / k, a = f k.
    a = mass_fraction * k
    scale = 0.5 / wf.decay_rate
    upper = min(bar, spec.cutoff(2.0 * wf.decay_rate))
    seeds = list(graded_points(0.0, min(scale, bar), 60))
    seeds += list(np.arange(1.0, upper / scale) * scale)
    cos_part = integrate_oscillatory(rho, a, (0.0, bar), spec, "cos", seeds).value
    if k == 0.0:
        def moment(x):
            return rho(x) * x

        sin_part = mass_fraction * integrate_oscillatory(moment, 0.0, (0.0, bar), spec, "cos", seeds).value
    else:
        sin_part = integrate_oscillatory(rho, a, (0.0, bar), spec, "sin", seeds).value / k
    return float(_sin_over_k(k, bar / 2.0)) * cos_part - math.cos(k * bar / 2.0) * sin_part


def molecular_bar_terms(
    species: DimerSpecies,
    geometry: GratingGeometry,
    k2: float,
    spec: QuadratureSpec = QuadratureSpec(),
) -> MolecularBarTerms:
    # Everything below is even in k2, so work with |k2|.
    k = abs(float(k2))
    wf = species.wavefunction
    M = species.total_mass
    f1, f2 = species.mass_1 / M, species.mass_2 / M
    bar = geometry.bar_width

    def rho(x):
        return marginal_density(wf, x, spec)

    ff1 = form_factor(wf, wf, f1 * k, spec)
    si1 = _bar_sine_integral(wf, rho, f2, k, bar, spec)
    if f1 == f2:
        ff2, si2 = ff1, si1
    else:
        ff2 = form_factor(wf, wf, f2 * k, spec)
        si2 = _bar_sine_integral(wf, rho, f1, k, bar, spec)
    return MolecularBarTerms(ff1, ff2, si1, si2, float(point_bar_coefficient(k, geometry)))


def _small_angle_advisory(k2: float, beam: BeamState):
    if abs(k2) > SMALL_ANGLE_LIMIT * beam.incident_wavenumber_K:
        warnings.warn(
            f"|k2| = {abs(k2):.4g}/nm is not small against K = {beam.incident_wavenumber_K:.4g}/nm",
            SmallAngleWarning,
            stacklevel=3,
        )


def molecular_bar_amplitude(
    species: DimerSpecies,
    geometry: GratingGeometry,
    beam: BeamState,
    k2: float,
    mode: str = "reduced",
    spec: QuadratureSpec = QuadratureSpec(),
) -> ComplexAmplitude:
    """Single-bar elastic amplitude of the bound pair, reduced to radial and
    marginal-density integrals (fast path)."""
    _small_angle_advisory(k2, beam)
    c = prefactor(beam, species.total_mass, mode)
    terms = molecular_bar_terms(species, geometry, k2, spec)
    return ComplexAmplitude(complex(0.0, c * terms.total), mode)


@dataclass(frozen=True)
class BruteForceGrid:
    """Tensor-product Gauss-Legendre grid controls for the 3-D oracle.

    Each Cartesian axis is split into dyadic panels toward the origin
    (``graded_levels`` of them below the density scale) followed by uniform
    panels out to the tail cutoff; ``order`` nodes per panel.
    """

    order: int = 10
    graded_levels: int = 36
    panel_width: float = 1.0  # in units of the density decay length
    max_evaluations: int = 4_000_000_000
    tail_spec: QuadratureSpec = QuadratureSpec(absolute_tolerance=1e-12)


def _gauss_panels(edges, order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes[None, :]
    w = 0.5 * (hi - lo) * weights[None, :]
    return x.ravel(), w.ravel()


def _axis_edges(start, stop, length, width, levels, breaks=()):
    graded = graded_points(start, length, levels)
    uniform = start + np.arange(1.0, (stop - start) / width) * width
    edges = np.concatenate([[start], graded, uniform, [stop], np.asarray(breaks, dtype=float)])
    edges = np.unique(edges[(edges >= start) & (edges <= stop)])
    return edges


def bruteforce_bar_terms(
    species: DimerSpecies,
    geometry: GratingGeometry,
    k2_values: Sequence[float],
    grid: BruteForceGrid = BruteForceGrid(),
) -> list[complex]:
    """Molecular single-bar amplitudes in units of ``i * prefactor`` from direct
    3-D tensor-product quadrature over ``(x1, x2, x3)``.

    No rotational reduction is used: the planar integral over ``x1, x3`` is
    summed on a Cartesian grid for every ``x2`` node, then combined with the
    exponential and sine kernels. Only the reflection symmetry of the density
    in ``x1`` and ``x3`` is used, to restrict those axes to half-lines.
    """
    wf = species.wavefunction
    M = species.total_mass
    f1, f2 = species.mass_1 / M, species.mass_2 / M
    bar = geometry.bar_width
    ks = np.abs(np.asarray(k2_values, dtype=float))
    length = 0.5 / wf.decay_rate
    reach = grid.tail_spec.cutoff(2.0 * wf.decay_rate)
    width = grid.panel_width * length

    t_edges = _axis_edges(0.0, reach, length, width, grid.graded_levels)
    xt, wt = _gauss_panels(t_edges, grid.order)

    k_max = float(ks.max()) if ks.size else 0.0
    x2_width = width if k_max == 0 else min(width, 0.5 * math.pi / k_max)
    pos_edges = _axis_edges(0.0, max(reach, bar), length, x2_width, grid.graded_levels, [bar])
    x2_pos, w2_pos = _gauss_panels(pos_edges, grid.order)
    x2 = np.concatenate([-x2_pos[::-1], x2_pos])
    w2 = np.concatenate([w2_pos[::-1], w2_pos])

    evaluations = xt.size**2 * x2.size
    if evaluations > grid.max_evaluations:
        raise ResourceLimitError(
            f"brute-force grid needs {evaluations:.3g} density evaluations "
            f"(budget {grid.max_evaluations:.3g})"
        )

    plane_r2 = xt[:, None] ** 2 + xt[None, :] ** 2
    plane_w = 4.0 * wt[:, None] * wt[None, :]
    planar = np.empty_like(x2)
    for i, x in enumerate(x2):
        planar[i] = np.sum(plane_w * wf.density(np.sqrt(plane_r2 + x * x)))

    in_bar = (x2 > 0) & (x2 < bar)
    xb, wb = x2[in_bar], w2[in_bar] * planar[in_bar]
    out = []
    for k in ks:
        ft = np.sum(w2 * planar * (np.exp(1j * f1 * k * x2) + np.exp(1j * f2 * k * x2)))
        # sin(k y)/k written as y * sinc so k = 0 needs no special case
        y1 = bar / 2.0 - f2 * xb
        y2 = bar / 2.0 - f1 * xb
        kern = y1 * np.sinc(k * y1 / math.pi) + y2 * np.sinc(k * y2 / math.pi)
        second = np.sum(wb * kern)
        first = -float(point_bar_coefficient(k, geometry)) * ft
        out.append(complex(first + second))
    return out


def molecular_bar_amplitude_bruteforce(
    species: DimerSpecies,
    geometry: GratingGeometry,
    beam: BeamState,
    k2: float,
    mode: str = "reduced",
    grid: BruteForceGrid = BruteForceGrid(),
) -> ComplexAmplitude:
    c = prefactor(beam, species.total_mass, mode)
    (value,) = bruteforce_bar_terms(species, geometry, [k2], grid)
    return ComplexAmplitude(1j * c * value, mode)


def coherent_amplitude(
    species: DimerSpecies,
    geometry: GratingGeometry,
    beam: BeamState,
    k2: float,
    mode: str = "reduced",
    particle: str = "molecule",
    spec: QuadratureSpec = QuadratureSpec(),
) -> ComplexAmplitude:
    """Grating amplitude on the ``k3 = 0`` slice: single-bar amplitude times H.

    ``particle="point"`` gives the comparison amplitude of a point particle of
    the same total mass.
    """
    if particle == "molecule":
        bar = molecular_bar_amplitude(species, geometry, beam, k2, mode, spec)
    elif particle == "point":
        bar = point_bar_amplitude(k2, geometry, beam, species.total_mass, mode)
    else:
        raise ValueError(f"particle must be 'molecule' or 'point', got {particle!r}")
    return bar.scale(grating_function(k2, geometry))


class RegimeWarning(NamedTuple):
    code: str
    message: str


def regime_check(
    species: DimerSpecies, geometry: GratingGeometry, beam: BeamState
) -> list[RegimeWarning]:
    """Advisory checks of the conditions under which the amplitudes hold.

    "Much greater than" is read as a factor of ``REGIME_FACTOR``. Never raises.
    """
    out = []
    K = beam.incident_wavenumber_K
    s, bar = geometry.slit_s, geometry.bar_width
    if K * s < REGIME_FACTOR:
        out.append(RegimeWarning("diffraction-slit", f"K*s = {K * s:.4g} < {REGIME_FACTOR:g}"))
    if K * bar < REGIME_FACTOR:
        out.append(RegimeWarning("diffraction-bar", f"K*(d-s) = {K * bar:.4g} < {REGIME_FACTOR:g}"))
    kinetic = kinetic_energy_microev(species.total_mass, K)
    if kinetic <= REGIME_FACTOR * abs(species.binding_energy):
        out.append(
            RegimeWarning(
                "incident-energy",
                f"kinetic energy {kinetic:.4g} ueV is not >> |E_b| = {abs(species.binding_energy):.4g} ueV",
            )
        )
    if species.mass_ratio > MAX_MASS_RATIO:
        out.append(
            RegimeWarning("mass-ratio", f"mass ratio {species.mass_ratio:.3g} exceeds {MAX_MASS_RATIO:g}")
        )
    size = mean_internuclear_distance(species.wavefunction)
    if s < 2.0 * size:
        out.append(
            RegimeWarning(
                "incoherent",
                f"slit width {s:g} nm is below twice the mean bond length ({size:.3g} nm); "
                "multi-bar (incoherent) terms are not negligible",
            )
        )
    return out
