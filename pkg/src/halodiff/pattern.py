"""Sampled grating patterns, peak reports and molecule/point comparisons."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .kernels import (
    BeamState,
    GratingGeometry,
    grating_function,
    molecular_bar_terms,
    point_bar_coefficient,
)
from .numerics import QuadratureError, QuadratureSpec
from .wavefunction import DimerSpecies

NORMALIZATIONS = ("unit-zeroth-order", "raw-reduced")
PP_ZERO_THRESHOLD = 1e-300


class PatternError(RuntimeError):
    """Sampling aborted; ``completed`` holds the k2 values finished before the failure."""

    def __init__(self, message: str, completed: np.ndarray, failed_k2: float):
        super().__init__(message)
        self.completed = completed
        self.failed_k2 = failed_k2


@dataclass(frozen=True, eq=False)
class DiffractionPattern:
    k2: np.ndarray
    intensity_mol: np.ndarray
    intensity_pp: np.ndarray
    h_sq: np.ndarray
    normalization: str
    geometry: GratingGeometry
    species: DimerSpecies
    beam: BeamState
    zeroth_order_raw: tuple[float, float] = field(default=(1.0, 1.0))

    @property
    def k2_per_100nm(self) -> np.ndarray:
        return self.k2 * 100.0

    @property
    def k2_max(self) -> float:
        return float(self.k2[-1])

    def index_of(self, k2: float) -> int:
        i = int(np.argmin(np.abs(self.k2 - k2)))
        step = np.max(np.diff(self.k2)) if self.k2.size > 1 else 0.0
        if abs(self.k2[i] - k2) > step:
            raise KeyError(f"k2 = {k2} is not on the sampled grid")
        return i


def sampling_grid(geometry: GratingGeometry, k2_max: float, num_samples: int, symmetric: bool = False) -> np.ndarray:
    """Uniform grid on ``[0, k2_max]`` merged with the grating orders ``2 pi n / d``
    and the point-particle zeros ``2 pi m / (d - s)``; mirrored when ``symmetric``."""
    if not k2_max > 0:
        raise ValueError("k2_max must be positive")
    if num_samples < 2:
        raise ValueError("num_samples must be >= 2")
    uniform = np.linspace(0.0, k2_max, num_samples)
    orders = np.arange(0, math.floor(k2_max * geometry.period_d / (2 * math.pi)) + 1)
    peaks = np.array([geometry.peak_position(int(n)) for n in orders])
    zeros = 2.0 * math.pi * np.arange(1, math.floor(k2_max * geometry.bar_width / (2 * math.pi)) + 1) / geometry.bar_width
    analytic = np.concatenate([peaks, zeros])
    analytic = analytic[analytic <= k2_max]
    # uniform points within rounding of an analytic one are dropped in its favour
    close = np.min(np.abs(uniform[:, None] - analytic[None, :]), axis=1) <= 1e-9 * k2_max
    grid = np.unique(np.concatenate([uniform[~close], analytic]))
    if symmetric:
        grid = np.concatenate([-grid[:0:-1], grid])
    return grid


def _evaluate_point(args):
    species, geometry, k2, spec = args
    terms = molecular_bar_terms(species, geometry, k2, spec)
    return terms.total, float(point_bar_coefficient(k2, geometry))


def bar_intensities(
    species: DimerSpecies,
    geometry: GratingGeometry,
    k2_values: Sequence[float],
    threads: int = 1,
    spec: QuadratureSpec = QuadratureSpec(),
) -> tuple[np.ndarray, np.ndarray]:
    """Reduced-mode single-bar intensities ``|t_mol|^2`` and ``|t_pp|^2``."""
    k2_values = np.asarray(k2_values, dtype=float)
    jobs = [(species, geometry, float(k), spec) for k in k2_values]
    mol = np.empty(k2_values.size)
    pp = np.empty(k2_values.size)
    done = 0
    try:
        if threads > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                results = pool.map(_evaluate_point, jobs, chunksize=max(1, len(jobs) // (4 * threads)))
                for i, (t_mol, t_pp) in enumerate(results):
                    mol[i], pp[i] = t_mol**2, t_pp**2
                    done = i + 1
        else:
            for i, job in enumerate(jobs):
                t_mol, t_pp = _evaluate_point(job)
                mol[i], pp[i] = t_mol**2, t_pp**2
                done = i + 1
    except QuadratureError as exc:
        failed = float(k2_values[done])
        raise PatternError(
            f"quadrature failed at k2 = {failed!r} after {done} of {k2_values.size} points: {exc}",
            k2_values[:done],
            failed,
        ) from exc
    return mol, pp


def normalize(pattern: DiffractionPattern, normalization: str) -> DiffractionPattern:
    """Re-express a pattern in another convention; idempotent."""
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    # back to raw first, using the stored zeroth-order values
    if pattern.normalization == "unit-zeroth-order":
        raw_mol = pattern.intensity_mol * pattern.zeroth_order_raw[0]
        raw_pp = pattern.intensity_pp * pattern.zeroth_order_raw[1]
    else:
        raw_mol, raw_pp = pattern.intensity_mol, pattern.intensity_pp
    i0 = pattern.index_of(0.0)
    zeroth = (float(raw_mol[i0]), float(raw_pp[i0]))
    if normalization == "unit-zeroth-order":
        return replace(
            pattern,
            intensity_mol=raw_mol / zeroth[0],
            intensity_pp=raw_pp / zeroth[1],
            normalization=normalization,
            zeroth_order_raw=zeroth,
        )
    return replace(pattern, intensity_mol=raw_mol, intensity_pp=raw_pp, normalization=normalization, zeroth_order_raw=zeroth)


def sample_pattern(
    species: DimerSpecies,
    geometry: GratingGeometry,
    beam: BeamState,
    k2_max: float,
    num_samples: int,
    normalization: str = "unit-zeroth-order",
    threads: int = 1,
    symmetric: bool = False,
    spec: QuadratureSpec = QuadratureSpec(),
) -> DiffractionPattern:
    """Grating intensities ``|t_bar H|^2`` for molecule and point particle."""
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    k2 = sampling_grid(geometry, k2_max, num_samples, symmetric)
    h = np.asarray(grating_function(k2, geometry))
    bar_mol, bar_pp = bar_intensities(species, geometry, k2, threads, spec)
    h_sq = h * h
    raw = DiffractionPattern(
        k2=k2,
        intensity_mol=bar_mol * h_sq,
        intensity_pp=bar_pp * h_sq,
        h_sq=h_sq,
        normalization="raw-reduced",
        geometry=geometry,
        species=species,
        beam=beam,
    )
    return normalize(raw, normalization)


@dataclass(frozen=True)
class PeakReport:
    order: int
    location_k2: float
    intensity_mol: float
    intensity_pp: float
    ratio_mol_over_pp: float | None  # None when the point-particle peak vanishes

    @property
    def pp_zero(self) -> bool:
        return self.ratio_mol_over_pp is None

    @property
    def location_per_100nm(self) -> float:
        return self.location_k2 * 100.0


def find_peaks(pattern: DiffractionPattern, max_order: int) -> list[PeakReport]:
    """Reports at the analytic order positions ``2 pi n / d``, n = 0..max_order.

    Orders beyond the sampled range are dropped with a warning.
    """
    geometry = pattern.geometry
    reports = []
    for n in range(0, max_order + 1):
        k2 = geometry.peak_position(n)
        if k2 > pattern.k2_max * (1 + 1e-12):
            warnings.warn(
                f"orders above {n - 1} lie beyond k2_max = {pattern.k2_max:g}/nm; list truncated",
                stacklevel=2,
            )
            break
        i = pattern.index_of(k2)
        i_mol, i_pp = float(pattern.intensity_mol[i]), float(pattern.intensity_pp[i])
        ratio = None if i_pp < PP_ZERO_THRESHOLD else i_mol / i_pp
        reports.append(PeakReport(n, float(pattern.k2[i]), i_mol, i_pp, ratio))
    return reports


def local_maximum_near(pattern: DiffractionPattern, k2: float, half_window: float, curve: str = "mol") -> float:
    """Grid-search location of the largest sample within ``k2 +- half_window``."""
    values = pattern.intensity_mol if curve == "mol" else pattern.intensity_pp
    mask = np.abs(pattern.k2 - k2) <= half_window
    idx = np.flatnonzero(mask)
    return float(pattern.k2[idx[np.argmax(values[idx])]])


@dataclass(frozen=True)
class SuppressionSummary:
    odd_orders: tuple[int, ...]
    odd_ratios: tuple[float, ...]
    non_increasing: bool
    even_reappearance: dict


def compare_suppression(reports: Sequence[PeakReport], tolerance: float = 0.0) -> SuppressionSummary:
    """Odd-order ratio sequence with a monotonicity verdict, plus the molecular
    intensities at orders where the point-particle peak is absent.

    The sequence counts as non-increasing when no step rises by more than
    ``tolerance``.
    """
    odd = [r for r in reports if r.order % 2 == 1 and r.ratio_mol_over_pp is not None]
    if len(odd) < 2:
        raise ValueError("insufficient orders: need at least two odd-order peaks")
    odd.sort(key=lambda r: r.order)
    ratios = tuple(r.ratio_mol_over_pp for r in odd)
    verdict = all(b <= a + tolerance for a, b in zip(ratios, ratios[1:]))
    reappear = {r.order: r.intensity_mol for r in reports if r.pp_zero and r.order > 0}
    return SuppressionSummary(tuple(r.order for r in odd), ratios, verdict, reappear)
