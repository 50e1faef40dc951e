"""Normalised s-state bound-state models of the dimer and their derived densities.

Every model is stored through its reduced radial function ``u(r) = r * phi(r)``,
which stays finite at the origin even when ``phi`` itself diverges, so the
integrals below never evaluate ``|phi(0)|**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .numerics import (
    DomainError,
    QuadratureSpec,
    exponential_integral_e1,
    graded_points,
    integrate,
    integrate_radial,
)
from .units import AMU, HBAR, HELIUM4_MASS_U, MICRO_EV, NM, millikelvin_to_microev

FOUR_PI = 4.0 * math.pi
NORMALIZATION_TOLERANCE = 1e-8
_TAIL_FIT_ROWS = 10


class RadialWaveFunction:
    """Common interface of the s-state models.

    Subclasses provide :meth:`reduced` (``r * phi(r)``), :attr:`decay_rate`
    (asymptotic exponential rate of ``phi``) and :meth:`scaled`.
    """

    decay_rate: float
    breakpoints: tuple[float, ...] = ()

    def reduced(self, r):
        raise NotImplementedError

    def scaled(self, factor: float) -> "RadialWaveFunction":
        """Model for ``phi_lambda(r) = lambda**-1.5 * phi(r / lambda)``."""
        raise NotImplementedError

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return self.reduced(r) / r

    def density(self, r):
        u = self.reduced(r)
        return u * u / (np.asarray(r, dtype=float) ** 2)

    def analytic_marginal(self, x):
        """Closed-form marginal density, or ``None`` when only quadrature is available."""
        return None

    def norm(self, spec: QuadratureSpec = QuadratureSpec()) -> float:
        """``int 4 pi r^2 |phi|^2 dr`` by quadrature."""

        def integrand(r):
            u = self.reduced(r)
            return FOUR_PI * u * u

        return integrate_radial(integrand, 2.0 * self.decay_rate, spec, self.breakpoints).value


def _raw_norm(reduced, decay_rate, breakpoints=()) -> float:
    def integrand(r):
        u = reduced(r)
        return FOUR_PI * u * u

    return integrate_radial(integrand, 2.0 * decay_rate, QuadratureSpec(), breakpoints).value


@dataclass(frozen=True)
class ZeroRangeExponential(RadialWaveFunction):
    """Halo form ``phi(r) = sqrt(kappa / 2 pi) exp(-kappa r) / r``."""

    kappa: float
    scale: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")

    @property
    def decay_rate(self) -> float:
        return self.kappa

    def reduced(self, r):
        return math.sqrt(self.kappa / (2.0 * math.pi)) * np.exp(-self.kappa * np.asarray(r, dtype=float))

    def scaled(self, factor: float) -> "ZeroRangeExponential":
        return ZeroRangeExponential(self.kappa / factor)

    def analytic_marginal(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        with np.errstate(divide="ignore"):
            safe = np.where(x > 0, x, 1.0)
            out = np.where(x > 0, self.kappa * exponential_integral_e1(2.0 * self.kappa * safe), np.inf)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ParametrizedAnalytic(RadialWaveFunction):
    """Sum of exponentials over r: ``phi(r) = c * sum_i w_i exp(-a_i r) / r``.

    ``coefficients`` holds ``(w_i, a_i)`` pairs; ``c`` (stored as ``scale``) is
    fixed at construction so that the state is normalised.
    """

    coefficients: tuple[tuple[float, float], ...]
    scale: float = field(default=1.0, init=False)

    def __post_init__(self):
        coeffs = tuple((float(w), float(a)) for w, a in self.coefficients)
        if not coeffs:
            raise ValueError("at least one (weight, decay_rate) pair is required")
        if any(not a > 0 for _, a in coeffs):
            raise DomainError("all decay rates must be positive")
        object.__setattr__(self, "coefficients", coeffs)
        raw = _raw_norm(self._raw_reduced, min(a for _, a in coeffs))
        if not raw > 0:
            raise ValueError("wave function has zero norm")
        object.__setattr__(self, "scale", 1.0 / math.sqrt(raw))

    def _raw_reduced(self, r):
        r = np.asarray(r, dtype=float)
        return sum(w * np.exp(-a * r) for w, a in self.coefficients)

    @property
    def decay_rate(self) -> float:
        return min(a for _, a in self.coefficients)

    def reduced(self, r):
        return self.scale * self._raw_reduced(r)

    def scaled(self, factor: float) -> "ParametrizedAnalytic":
        w_factor = self.scale / math.sqrt(factor)
        return ParametrizedAnalytic(tuple((w * w_factor, a / factor) for w, a in self.coefficients))

    def analytic_marginal(self, x):
        # 2 pi c^2 sum_ij w_i w_j E1((a_i + a_j)|x|)
        x = np.abs(np.asarray(x, dtype=float))
        safe = np.where(x > 0, x, 1.0)
        total = np.zeros_like(x)
        for wi, ai in self.coefficients:
            for wj, aj in self.coefficients:
                total = total + wi * wj * exponential_integral_e1((ai + aj) * safe)
        out = np.where(x > 0, 2.0 * math.pi * self.scale**2 * total, np.inf)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class Tabulated(RadialWaveFunction):
    """Tabulated ``phi`` on an ascending radial grid (nm).

    ``r * phi`` is interpolated by a natural cubic spline; beyond the last
    node it continues as ``A exp(-kappa_fit r)`` with ``kappa_fit`` from a
    log-linear fit to the last rows and ``A`` matching the final node.
    """

    r_grid: tuple[float, ...]
    values: tuple[float, ...]
    scale: float = field(default=1.0, init=False)
    kappa_fit: float = field(default=0.0, init=False)

    def __post_init__(self):
        r = np.asarray(self.r_grid, dtype=float)
        phi = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != phi.shape:
            raise ValueError("r_grid and values must be 1-D and of equal length")
        if r.size < _TAIL_FIT_ROWS + 2:
            raise ValueError(f"need at least {_TAIL_FIT_ROWS + 2} table rows")
        if not (r[0] > 0 and np.all(np.diff(r) > 0)):
            raise ValueError("r_grid must be positive and strictly ascending")
        u = r * phi
        tail_r, tail_u = r[-_TAIL_FIT_ROWS:], u[-_TAIL_FIT_ROWS:]
        if np.any(tail_u <= 0):
            raise ValueError("tail rows must be positive for the exponential fit")
        slope = np.polyfit(tail_r, np.log(tail_u), 1)[0]
        if not slope < 0:
            raise ValueError("tabulated tail does not decay")
        object.__setattr__(self, "r_grid", tuple(r))
        object.__setattr__(self, "values", tuple(phi))
        object.__setattr__(self, "kappa_fit", float(-slope))
        object.__setattr__(self, "_spline", CubicSpline(r, u, bc_type="natural"))
        object.__setattr__(self, "_r_max", float(r[-1]))
        object.__setattr__(self, "_u_max", float(u[-1]))
        raw = _raw_norm(self._raw_reduced, self.kappa_fit, self.breakpoints)
        object.__setattr__(self, "scale", 1.0 / math.sqrt(raw))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return self.r_grid

    @property
    def decay_rate(self) -> float:
        return self.kappa_fit

    def _raw_reduced(self, r):
        r = np.asarray(r, dtype=float)
        inside = r <= self._r_max
        out = np.empty_like(r)
        out[inside] = self._spline(r[inside])
        out[~inside] = self._u_max * np.exp(-self.kappa_fit * (r[~inside] - self._r_max))
        return out

    def reduced(self, r):
        return self.scale * self._raw_reduced(r)

    def scaled(self, factor: float) -> "Tabulated":
        r = np.asarray(self.r_grid) * factor
        phi = np.asarray(self.values) * self.scale * factor**-1.5
        return Tabulated(tuple(r), tuple(phi))

    @classmethod
    def from_file(cls, path: str | Path) -> "Tabulated":
        """Read a two-column ``r_nm  phi_value`` table; ``#`` starts a comment."""
        data = np.loadtxt(path, comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns, found {data.shape[1]}")
        return cls(tuple(data[:, 0]), tuple(data[:, 1]))


@dataclass(frozen=True)
class DimerSpecies:
    """Two constituents (masses in u) bound in the state ``wavefunction``."""

    mass_1: float
    mass_2: float
    binding_energy: float  # micro-eV, negative
    wavefunction: RadialWaveFunction

    def __post_init__(self):
        if not (self.mass_1 > 0 and self.mass_2 > 0):
            raise ValueError("constituent masses must be positive")
        if not self.binding_energy < 0:
            raise ValueError("binding_energy must be negative for a bound state")

    @property
    def total_mass(self) -> float:
        return self.mass_1 + self.mass_2

    @property
    def reduced_mass(self) -> float:
        return self.mass_1 * self.mass_2 / self.total_mass

    @property
    def mass_ratio(self) -> float:
        return max(self.mass_1, self.mass_2) / min(self.mass_1, self.mass_2)

    def with_wavefunction(self, wavefunction: RadialWaveFunction) -> "DimerSpecies":
        return DimerSpecies(self.mass_1, self.mass_2, self.binding_energy, wavefunction)


def kappa_from_binding_energy(binding_energy: float, reduced_mass: float) -> float:
    """Zero-range decay constant ``sqrt(2 mu |E|) / hbar`` in 1/nm.

    ``binding_energy`` in micro-eV (must be negative), ``reduced_mass`` in u.
    """
    if not binding_energy < 0:
        raise DomainError(f"binding energy must be negative, got {binding_energy}")
    if reduced_mass < 0:
        raise DomainError("reduced mass must be non-negative")
    return math.sqrt(2.0 * reduced_mass * AMU * abs(binding_energy) * MICRO_EV) / HBAR * NM


def helium_dimer(binding_energy_mk: float = -1.3, wavefunction: RadialWaveFunction | None = None) -> DimerSpecies:
    """4He2 with the zero-range halo model unless another state is supplied."""
    energy = millikelvin_to_microev(binding_energy_mk)
    m = HELIUM4_MASS_U
    if wavefunction is None:
        wavefunction = ZeroRangeExponential(kappa_from_binding_energy(energy, m / 2.0))
    return DimerSpecies(m, m, energy, wavefunction)


def probability_density(wf: RadialWaveFunction, r):
    """``|phi(r)|**2`` in 1/nm^3; ``r`` must be positive."""
    arr = np.asarray(r, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("probability density is evaluated only at r > 0")
    out = wf.density(arr)
    return float(out) if np.ndim(out) == 0 else out


def _marginal_by_quadrature(wf: RadialWaveFunction, x: float, spec: QuadratureSpec) -> float:
    x = abs(x)
    if x == 0.0:
        return math.inf if wf.reduced(np.array([0.0]))[0] != 0 else 0.0
    u0 = float(wf.reduced(np.array([x]))[0])
    if u0 == 0.0:
        return 0.0
    # measured against the integrand at the lower limit so tolerances act relatively
    peak = 2.0 * math.pi * u0 * u0 / x
    upper = x + spec.cutoff(2.0 * wf.decay_rate)

    def integrand(r):
        u = wf.reduced(r)
        return 2.0 * math.pi * u * u / r / peak

    seeds = list(graded_points(x, x, 30)) + list(wf.breakpoints)
    seeds += list(x + np.arange(1.0, (upper - x) * wf.decay_rate) / wf.decay_rate)
    return peak * integrate(integrand, x, upper, spec, seeds).value


def marginal_density(wf: RadialWaveFunction, x2, spec: QuadratureSpec = QuadratureSpec(), method: str = "auto"):
    """Density along the grating axis, ``2 pi int_|x2|^inf r |phi(r)|^2 dr`` (1/nm).

    ``method="auto"`` uses a closed form where the model has one and
    quadrature otherwise; ``method="quadrature"`` forces the latter.
    """
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        closed = wf.analytic_marginal(x2)
        if closed is not None:
            return closed
    arr = np.asarray(x2, dtype=float)
    out = np.array([_marginal_by_quadrature(wf, float(v), spec) for v in arr.ravel()]).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def mean_internuclear_distance(wf: RadialWaveFunction, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """``<r> = int 4 pi r^3 |phi|^2 dr`` in nm."""

    def integrand(r):
        u = wf.reduced(r)
        return FOUR_PI * r * u * u

    return integrate_radial(integrand, 2.0 * wf.decay_rate, spec, wf.breakpoints).value
