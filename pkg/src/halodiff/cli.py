"""Command-line front end.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure,
4 oracle mismatch.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .kernels import ResourceLimitError, bruteforce_bar_terms, form_factor, molecular_bar_terms, regime_check
from .numerics import QuadratureError
from .pattern import PatternError, bar_intensities, compare_suppression, find_peaks, sample_pattern

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ORACLE = 0, 2, 3, 4
MAX_ORACLE_POINTS = 32
ORACLE_TOLERANCE = 1e-3
PATTERN_HEADER = "k2_per_nm,k2_per_100nm,I_mol,I_pp,H_sq"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _csv(header: str, columns) -> str:
    rows = [header]
    for row in zip(*columns):
        rows.append(",".join(_fmt(float(v)) for v in row))
    return "\n".join(rows) + "\n"


def _write(text: str, path: Path | None):
    """Atomic write; stdout when ``path`` is None."""
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _out_path(args, cfg: RunConfig) -> Path | None:
    target = args.out or cfg.output.path
    return Path(target) if target else None


def _setup(args):
    cfg = load_config(args.config)
    if args.format:
        cfg.output.format = args.format
    species = cfg.build_species()
    geometry = cfg.build_geometry()
    beam = cfg.build_beam(species.total_mass)
    return cfg, species, geometry, beam


def _warnings_json(species, geometry, beam):
    return [{"code": w.code, "message": w.message} for w in regime_check(species, geometry, beam)]


def _peak_dicts(reports):
    return [
        {
            "order": r.order,
            "location_k2_per_nm": r.location_k2,
            "location_k2_per_100nm": r.location_per_100nm,
            "intensity_mol": r.intensity_mol,
            "intensity_pp": r.intensity_pp,
            "ratio_mol_over_pp": r.ratio_mol_over_pp,
            "pp_zero": r.pp_zero,
        }
        for r in reports
    ]


def _pattern_and_peaks(args, cfg, species, geometry, beam):
    s = cfg.sampling
    pattern = sample_pattern(species, geometry, beam, s.k2_max, s.num_samples, s.normalization, threads=args.threads)
    max_order = s.max_order
    if max_order is None:
        max_order = int(np.floor(s.k2_max * geometry.period_d / (2 * np.pi)))
    reports = find_peaks(pattern, max_order)
    try:
        summary = compare_suppression(reports)
        suppression = {
            "odd_orders": list(summary.odd_orders),
            "odd_ratios": list(summary.odd_ratios),
            "non_increasing": summary.non_increasing,
            "even_reappearance": {str(k): v for k, v in summary.even_reappearance.items()},
        }
    except ValueError:
        suppression = None
    return pattern, reports, suppression


def cmd_pattern(args) -> int:
    cfg, species, geometry, beam = _setup(args)
    pattern, reports, suppression = _pattern_and_peaks(args, cfg, species, geometry, beam)
    sidecar = {
        "version": __version__,
        "config": cfg.to_dict(),
        "regime_warnings": _warnings_json(species, geometry, beam),
        "normalization": pattern.normalization,
        "peaks": _peak_dicts(reports),
        "suppression": suppression,
    }
    out = _out_path(args, cfg)
    if cfg.output.format == "json":
        sidecar["samples"] = {
            "k2_per_nm": pattern.k2.tolist(),
            "k2_per_100nm": pattern.k2_per_100nm.tolist(),
            "I_mol": pattern.intensity_mol.tolist(),
            "I_pp": pattern.intensity_pp.tolist(),
            "H_sq": pattern.h_sq.tolist(),
        }
        _write(json.dumps(sidecar, indent=2) + "\n", out)
        return EXIT_OK
    text = _csv(
        PATTERN_HEADER,
        [pattern.k2, pattern.k2_per_100nm, pattern.intensity_mol, pattern.intensity_pp, pattern.h_sq],
    )
    _write(text, out)
    if out is not None:
        _write(json.dumps(sidecar, indent=2) + "\n", out.with_suffix(".json"))
    return EXIT_OK


def cmd_peaks(args) -> int:
    cfg, species, geometry, beam = _setup(args)
    _, reports, suppression = _pattern_and_peaks(args, cfg, species, geometry, beam)
    out = _out_path(args, cfg)
    if cfg.output.format == "json":
        doc = {"version": __version__, "peaks": _peak_dicts(reports), "suppression": suppression}
        _write(json.dumps(doc, indent=2) + "\n", out)
        return EXIT_OK
    lines = ["order,location_k2_per_nm,location_k2_per_100nm,I_mol,I_pp,ratio_mol_over_pp"]
    for r in reports:
        ratio = "pp-zero" if r.pp_zero else _fmt(r.ratio_mol_over_pp)
        lines.append(
            f"{r.order},{_fmt(r.location_k2)},{_fmt(r.location_per_100nm)},"
            f"{_fmt(r.intensity_mol)},{_fmt(r.intensity_pp)},{ratio}"
        )
    _write("\n".join(lines) + "\n", out)
    return EXIT_OK


def _axis(cfg, values, name):
    if cfg.output.axis_unit == "per-100nm":
        return f"{name}_per_100nm", values * 100.0
    return f"{name}_per_nm", values


def cmd_bar(args) -> int:
    cfg, species, geometry, beam = _setup(args)
    k2 = np.linspace(0.0, cfg.sampling.k2_max, cfg.sampling.num_samples)
    mol, pp = bar_intensities(species, geometry, k2, threads=args.threads)
    label, axis = _axis(cfg, k2, "k2")
    out = _out_path(args, cfg)
    if cfg.output.format == "json":
        doc = {"version": __version__, label: axis.tolist(), "T_mol_sq": mol.tolist(), "T_pp_sq": pp.tolist()}
        _write(json.dumps(doc, indent=2) + "\n", out)
    else:
        _write(_csv(f"{label},T_mol_sq,T_pp_sq", [axis, mol, pp]), out)
    return EXIT_OK


def cmd_formfactor(args) -> int:
    cfg, species, _, _ = _setup(args)
    q_max = cfg.sampling.q_max or cfg.sampling.k2_max
    q = np.linspace(0.0, q_max, cfg.sampling.num_samples)
    wf = species.wavefunction
    values = np.array([form_factor(wf, wf, float(v)) for v in q])
    label, axis = _axis(cfg, q, "q")
    out = _out_path(args, cfg)
    if cfg.output.format == "json":
        _write(json.dumps({"version": __version__, label: axis.tolist(), "F": values.tolist()}, indent=2) + "\n", out)
    else:
        _write(_csv(f"{label},F", [axis, values]), out)
    return EXIT_OK


def cmd_check(args) -> int:
    cfg, species, geometry, beam = _setup(args)
    found = regime_check(species, geometry, beam)
    buf = io.StringIO()
    if not found:
        buf.write("no regime warnings\n")
    for w in found:
        buf.write(f"warning [{w.code}]: {w.message}\n")
    _write(buf.getvalue(), _out_path(args, cfg))
    return EXIT_OK


def _oracle_points(args, cfg, geometry) -> list[float]:
    if args.k2:
        return [float(v) for v in args.k2.split(",") if v.strip()]
    if args.orders:
        return [geometry.peak_position(int(n)) for n in args.orders.split(",") if n.strip()]
    if cfg.oracle.k2:
        return [float(v) for v in cfg.oracle.k2]
    orders = cfg.oracle.orders or [1, 2, 3]
    return [geometry.peak_position(int(n)) for n in orders]


def cmd_oracle(args) -> int:
    """Amplitudes are tabulated in units of ``i * prefactor`` (fast path is real there)."""
    cfg, species, geometry, beam = _setup(args)
    points = _oracle_points(args, cfg, geometry)
    if not points:
        raise ConfigError("oracle: no k2 points given")
    if len(points) > MAX_ORACLE_POINTS:
        raise ConfigError(f"oracle: at most {MAX_ORACLE_POINTS} k2 points allowed (got {len(points)})")
    brute = bruteforce_bar_terms(species, geometry, points)
    fast = [molecular_bar_terms(species, geometry, k).total for k in points]
    rel = [abs(b - f) / max(abs(f), 1e-300) for f, b in zip(fast, brute)]
    text = _csv(
        "k2_per_nm,fast,brute_re,brute_im,rel_diff",
        [points, fast, [b.real for b in brute], [b.imag for b in brute], rel],
    )
    _write(text, _out_path(args, cfg))
    worst = max(rel)
    if worst > ORACLE_TOLERANCE:
        print(f"oracle mismatch: max relative difference {worst:.3e} > {ORACLE_TOLERANCE:g}", file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


COMMANDS = {
    "pattern": (cmd_pattern, "sampled grating pattern (CSV + JSON sidecar)"),
    "bar": (cmd_bar, "single-bar intensities |t_mol|^2 and |t_pp|^2"),
    "formfactor": (cmd_formfactor, "molecular form factor F(q)"),
    "peaks": (cmd_peaks, "per-order peak comparison"),
    "check": (cmd_check, "diffraction-regime warnings"),
    "oracle": (cmd_oracle, "fast amplitude vs brute-force 3-D quadrature"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="halodiff", description="Grating diffraction of weakly bound dimers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML run configuration (or JSON echo)")
        p.add_argument("--out", help="output path (default: output.path, else stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--threads", type=int, default=1, help="worker processes for k2 sampling")
        if name == "oracle":
            p.add_argument("--k2", help="comma-separated k2 values in 1/nm")
            p.add_argument("--orders", help="comma-separated diffraction orders")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    handler = COMMANDS[args.command][0]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # constructors of the physics types reject inconsistent inputs
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, PatternError, ResourceLimitError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
