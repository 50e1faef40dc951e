"""Run configuration: TOML files (or the JSON echo written next to results)."""

from __future__ import annotations

import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .kernels import BeamState, GratingGeometry
from .pattern import NORMALIZATIONS
from .units import HELIUM4_MASS_U, millikelvin_to_microev
from .wavefunction import (
    DimerSpecies,
    ParametrizedAnalytic,
    Tabulated,
    ZeroRangeExponential,
    kappa_from_binding_energy,
)

WAVEFUNCTIONS = ("zero-range", "analytic", "tabulated")
FORMATS = ("csv", "json")
AXIS_UNITS = ("per-nm", "per-100nm")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class SpeciesBlock:
    mass_1_u: float = HELIUM4_MASS_U
    mass_2_u: float = HELIUM4_MASS_U
    binding_energy_mK: float | None = None
    binding_energy_ueV: float | None = None
    wavefunction: str = "zero-range"
    kappa_per_nm: float | None = None
    coefficients: list | None = None
    table: str | None = None


@dataclass
class GratingBlock:
    d_nm: float = 100.0
    s_nm: float = 50.0
    N: int = 30


@dataclass
class BeamBlock:
    speed_m_per_s: float | None = None
    wavenumber_per_nm: float | None = None


@dataclass
class SamplingBlock:
    k2_max: float = 0.5
    num_samples: int = 1001
    normalization: str = "unit-zeroth-order"
    max_order: int | None = None
    q_max: float | None = None


@dataclass
class OutputBlock:
    format: str = "csv"
    path: str | None = None
    axis_unit: str = "per-nm"


@dataclass
class OracleBlock:
    k2: list | None = None
    orders: list | None = None


@dataclass
class RunConfig:
    species: SpeciesBlock = field(default_factory=SpeciesBlock)
    grating: GratingBlock = field(default_factory=GratingBlock)
    beam: BeamBlock = field(default_factory=BeamBlock)
    sampling: SamplingBlock = field(default_factory=SamplingBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    oracle: OracleBlock = field(default_factory=OracleBlock)

    def to_dict(self) -> dict[str, Any]:
        def prune(d):
            return {k: v for k, v in d.items() if v is not None}

        return {name: prune(block) for name, block in asdict(self).items()}

    # -- derived physics objects -------------------------------------------
    def binding_energy_uev(self) -> float:
        sp = self.species
        if sp.binding_energy_ueV is not None:
            return float(sp.binding_energy_ueV)
        return millikelvin_to_microev(sp.binding_energy_mK)

    def build_species(self) -> DimerSpecies:
        sp = self.species
        energy = self.binding_energy_uev()
        reduced = sp.mass_1_u * sp.mass_2_u / (sp.mass_1_u + sp.mass_2_u)
        if sp.wavefunction == "zero-range":
            kappa = sp.kappa_per_nm or kappa_from_binding_energy(energy, reduced)
            wf = ZeroRangeExponential(kappa)
        elif sp.wavefunction == "analytic":
            wf = ParametrizedAnalytic(tuple(tuple(c) for c in sp.coefficients))
        else:
            wf = Tabulated.from_file(sp.table)
        return DimerSpecies(sp.mass_1_u, sp.mass_2_u, energy, wf)

    def build_geometry(self) -> GratingGeometry:
        g = self.grating
        return GratingGeometry(float(g.d_nm), float(g.s_nm), int(g.N))

    def build_beam(self, total_mass_u: float) -> BeamState:
        if self.beam.wavenumber_per_nm is not None:
            return BeamState(float(self.beam.wavenumber_per_nm))
        return BeamState.from_speed(total_mass_u, float(self.beam.speed_m_per_s))


_BLOCKS = {
    "species": SpeciesBlock,
    "grating": GratingBlock,
    "beam": BeamBlock,
    "sampling": SamplingBlock,
    "output": OutputBlock,
    "oracle": OracleBlock,
}


def _positive(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        raise ConfigError(f"{where}: must be a positive number (got {value!r})")


def from_mapping(data: dict, base_dir: Path | None = None) -> RunConfig:
    """Build and validate a :class:`RunConfig` from parsed TOML/JSON."""
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a table of blocks")
    unknown = set(data) - set(_BLOCKS)
    if unknown:
        raise ConfigError(f"unknown block(s): {', '.join(sorted(unknown))}")
    blocks = {}
    for name, cls in _BLOCKS.items():
        raw = data.get(name, {})
        if not isinstance(raw, dict):
            raise ConfigError(f"{name}: expected a table")
        allowed = set(cls.__dataclass_fields__)
        extra = set(raw) - allowed
        if extra:
            raise ConfigError(f"{name}: unknown key(s) {', '.join(sorted(extra))}")
        blocks[name] = cls(**raw)
    if "beam" not in data:
        raise ConfigError("beam: block is required (speed_m_per_s or wavenumber_per_nm)")
    cfg = RunConfig(**blocks)
    _validate(cfg, base_dir)
    return cfg


def _validate(cfg: RunConfig, base_dir: Path | None):
    sp = cfg.species
    _positive(sp.mass_1_u, "species.mass_1_u")
    _positive(sp.mass_2_u, "species.mass_2_u")
    if sp.binding_energy_mK is None and sp.binding_energy_ueV is None:
        sp.binding_energy_mK = -1.3
    if sp.binding_energy_mK is not None and sp.binding_energy_ueV is not None:
        raise ConfigError("species: give exactly one of binding_energy_mK, binding_energy_ueV")
    energy = sp.binding_energy_mK if sp.binding_energy_mK is not None else sp.binding_energy_ueV
    if not isinstance(energy, (int, float)) or not energy < 0:
        raise ConfigError(f"species.binding_energy: must be negative (got {energy!r})")
    if sp.wavefunction not in WAVEFUNCTIONS:
        raise ConfigError(f"species.wavefunction: must be one of {WAVEFUNCTIONS}")
    if sp.kappa_per_nm is not None:
        _positive(sp.kappa_per_nm, "species.kappa_per_nm")
    if sp.wavefunction == "analytic":
        coeffs = sp.coefficients
        if not coeffs or any(not isinstance(c, (list, tuple)) or len(c) != 2 for c in coeffs):
            raise ConfigError("species.coefficients: need a list of [weight, decay_rate] pairs")
        for i, (_, rate) in enumerate(coeffs):
            _positive(rate, f"species.coefficients[{i}] decay rate")
    if sp.wavefunction == "tabulated":
        if not sp.table:
            raise ConfigError("species.table: path required for a tabulated wave function")
        path = Path(sp.table)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        if not path.is_file():
            raise ConfigError(f"species.table: file not found: {path}")
        sp.table = str(path.resolve())

    g = cfg.grating
    _positive(g.d_nm, "grating.d_nm")
    _positive(g.s_nm, "grating.s_nm")
    if not g.s_nm < g.d_nm:
        raise ConfigError(f"grating: slit width s_nm must be smaller than the period d_nm (s={g.s_nm}, d={g.d_nm})")
    if isinstance(g.N, bool) or not isinstance(g.N, int) or g.N < 1:
        raise ConfigError(f"grating.N: must be a positive integer (got {g.N!r})")

    b = cfg.beam
    given = [k for k in ("speed_m_per_s", "wavenumber_per_nm") if getattr(b, k) is not None]
    if len(given) != 1:
        raise ConfigError("beam: give exactly one of speed_m_per_s, wavenumber_per_nm")
    _positive(getattr(b, given[0]), f"beam.{given[0]}")

    s = cfg.sampling
    _positive(s.k2_max, "sampling.k2_max")
    if isinstance(s.num_samples, bool) or not isinstance(s.num_samples, int) or s.num_samples < 2:
        raise ConfigError(f"sampling.num_samples: must be an integer >= 2 (got {s.num_samples!r})")
    if s.normalization not in NORMALIZATIONS:
        raise ConfigError(f"sampling.normalization: must be one of {NORMALIZATIONS}")
    if s.max_order is not None and (not isinstance(s.max_order, int) or s.max_order < 0):
        raise ConfigError("sampling.max_order: must be a non-negative integer")
    if s.q_max is not None:
        _positive(s.q_max, "sampling.q_max")

    o = cfg.output
    if o.format not in FORMATS:
        raise ConfigError(f"output.format: must be one of {FORMATS}")
    if o.axis_unit not in AXIS_UNITS:
        raise ConfigError(f"output.axis_unit: must be one of {AXIS_UNITS}")


def load_config(path: str | Path) -> RunConfig:
    """Read a TOML config, or a JSON file holding a config (or a result
    sidecar whose ``config`` entry echoes one)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        if path.suffix == ".json":
            data = json.loads(text)
            if isinstance(data, dict) and "config" in data:
                data = data["config"]
        else:
            data = tomllib.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return from_mapping(data, path.parent)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
