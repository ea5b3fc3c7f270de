"""Command-line front end.

    nfalias <af|spectrum|bandlimit|afr|eye|asod> --config scenario.yaml --out DIR

Exit status: 0 on success, 2 for configuration errors, 3 for numerical or
resource failures.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .afr import (COMPARE_RTOL, LEVEL_RTOL, BandLimitField, OperatingDomain, afr_contour,
                  asod_check, max_safe_spacing)
from .ambiguity import af_grid, write_af_csv
from .closedform import UCA_VALIDITY_RATIO, eye_geometry, k_finite_ula, k_uca, to_ula_frame
from .config import ConfigError, ScenarioConfig, load_config
from .errors import NfAliasError, ParameterError
from .field import SINGULAR_DISTANCE, MatchedSignalContext
from .geometry import ULA, UCA, sample_grid
from .io import write_csv, write_json, write_manifest
from .spectral import (band_limit_upper_bound, matched_spectrum, soft_band_limit_numeric,
                       strict_band_limit)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
COMMANDS = ("af", "spectrum", "bandlimit", "afr", "eye", "asod")


def _tolerances(cfg: ScenarioConfig) -> dict:
    t = cfg.tolerances
    return {"singular_distance": SINGULAR_DISTANCE, "level_rtol": LEVEL_RTOL,
            "compare_rtol": COMPARE_RTOL, "strict_eps": t.strict_eps, "artifact": t.artifact,
            "db_floor": t.db_floor, "quad_step": t.quad_step}


def _resolution(cfg, args):
    return args.resolution if args.resolution is not None else cfg.resolution


def _required(value, name):
    if value is None:
        raise ConfigError(f"'{name}' is required for this command")
    return value


def cmd_af(cfg: ScenarioConfig, args, out: Path):
    curve = cfg.curve()
    grid = sample_grid(curve, cfg.spacing(), cfg.array.alignment)
    x = cfg.point(_required(cfg.source, "source"))
    region, res = cfg.region_tuple(), _resolution(cfg, args)
    floor = cfg.tolerances.db_floor
    result = af_grid(curve, grid, x, region, res, workers=args.workers)
    write_af_csv(result, out / "af_grid.csv", floor)
    meta = result.metadata()
    meta["grid"] = grid.describe()
    write_json(out / "af_grid.json", meta)
    files = ["af_grid.csv", "af_grid.json"]
    if args.continuous:
        step = cfg.tolerances.quad_step
        ref = af_grid(curve, grid, x, region, res, continuous=True, step=step, workers=args.workers)
        write_af_csv(ref, out / "af_continuous.csv", floor)
        write_json(out / "af_continuous.json", ref.metadata())
        files += ["af_continuous.csv", "af_continuous.json"]
    return files


def _context(cfg):
    curve = cfg.curve()
    return MatchedSignalContext(curve, cfg.point(_required(cfg.tested, "tested")),
                                cfg.point(_required(cfg.source, "source")))


def cmd_spectrum(cfg: ScenarioConfig, args, out: Path):
    ctx = _context(cfg)
    spacing = cfg.spacing() if (cfg.array.spacing or cfg.array.angular_divisions) else None
    if cfg.spectrum is not None:
        s = cfg.spectrum
        omega = np.linspace(s.omega_min, s.omega_max, s.count)
    else:
        top = 2.0 * (2 * math.pi / spacing) if spacing else band_limit_upper_bound(ctx.curve)
        omega = np.linspace(-top, top, 2048)
    spec = matched_spectrum(ctx, omega)
    db = spec.abs_db(cfg.tolerances.db_floor)
    write_csv(out / "spectrum.csv", ["omega", "re", "im", "abs_db"],
              ((float(w), float(v.real), float(v.imag), float(d)) for w, v, d in zip(spec.omega, spec.values, db)))
    k = soft_band_limit_numeric(ctx)
    strict = strict_band_limit(spec, cfg.tolerances.strict_eps)
    write_json(out / "spectrum.json", {
        "context": spec.context, "quadrature_step": spec.step,
        "strict_band_limit": strict,
        # support reaches the edge of the frequency grid: widen the grid to resolve it
        "strict_band_limit_saturated": strict >= float(np.max(np.abs(spec.omega))),
        "strict_eps": cfg.tolerances.strict_eps, "soft_band_limit": k.to_dict(),
        "nyquist": None if spacing is None else 2 * math.pi / spacing,
        "parseval_ratio": spec.parseval_ratio()})
    return ["spectrum.csv", "spectrum.json"]


def cmd_bandlimit(cfg: ScenarioConfig, args, out: Path):
    ctx = _context(cfg)
    curve = ctx.curve
    num = soft_band_limit_numeric(ctx)
    closed = None
    if curve.kind == ULA:
        xt, x = to_ula_frame(curve, ctx.x_tested), to_ula_frame(curve, ctx.x_true)
        closed = k_finite_ula(curve.length, xt, x).to_dict()
    elif curve.kind == UCA:
        closed = k_uca(ctx.x_tested, ctx.x_true, curve.half_aperture, curve.radius).to_dict()
        closed["validity_threshold"] = UCA_VALIDITY_RATIO
    payload = {"context": ctx.describe(), "numeric": num.to_dict(), "closed_form": closed,
               "units": "rad per parametric unit"}
    if closed is not None:
        kc = closed["K"]
        payload["relative_deviation"] = abs(kc - num.K) / num.K if num.K > 0 else abs(kc)
    else:
        payload["relative_deviation"] = None
    write_json(out / "bandlimit.json", payload)
    return ["bandlimit.json"]


def _field(cfg):
    return BandLimitField.for_curve(cfg.curve(), cfg.band_limit.method)


def cmd_afr(cfg: ScenarioConfig, args, out: Path):
    x = cfg.point(_required(cfg.source, "source"))
    c = afr_contour(_field(cfg), x, cfg.spacing(), cfg.region_tuple(), _resolution(cfg, args))
    write_csv(out / "afr_contour.csv", ["polyline_id", "vertex_index", "x", "y"], c.rows())
    write_json(out / "afr_contour.json", c.to_geojson())
    return ["afr_contour.csv", "afr_contour.json"]


def cmd_eye(cfg: ScenarioConfig, args, out: Path):
    if cfg.eye is not None:
        delta = cfg.eye.delta * cfg.scale
    else:
        if cfg.array is None or cfg.array.kind != "ula":
            raise ConfigError("'eye.delta' or a ula array with a spacing is required")
        delta = cfg.spacing()
    write_json(out / "eye.json", eye_geometry(delta).to_dict())
    return ["eye.json"]


def _domain(cfg):
    d = _required(cfg.domain, "domain")
    s = cfg.scale
    if d.shape == "points":
        return OperatingDomain.points([cfg.point(p) for p in d.points])
    h = d.sampling * s
    if d.shape == "disc":
        return OperatingDomain.disc(cfg.point(d.center), d.radius * s, h)
    if d.shape == "rectangle":
        return OperatingDomain.rectangle(d.x[0] * s, d.x[1] * s, d.y[0] * s, d.y[1] * s, h)
    return OperatingDomain.polygon([cfg.point(p) for p in d.vertices], h)


def cmd_asod(cfg: ScenarioConfig, args, out: Path):
    K = _field(cfg)
    dom = _domain(cfg)
    v = asod_check(K, dom, cfg.spacing())
    dstar = max_safe_spacing(K, dom)
    payload = v.to_dict()
    payload.update({"max_safe_spacing": dstar, "unbounded": math.isinf(dstar),
                    "domain": dom.describe(), "band_limit": K.name})
    write_json(out / "asod.json", payload)
    return ["asod.json"]


HANDLERS = {"af": cmd_af, "spectrum": cmd_spectrum, "bandlimit": cmd_bandlimit,
            "afr": cmd_afr, "eye": cmd_eye, "asod": cmd_asod}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nfalias", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"nfalias {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name, help=HANDLERS[name].__doc__)
        s.add_argument("--config", required=True, help="scenario YAML file")
        s.add_argument("--out", help="output directory (default: output.directory or .)")
        s.add_argument("--workers", type=int, default=1, help="worker processes")
        s.add_argument("--resolution", type=int, help="grid nodes per axis (overrides config)")
        s.add_argument("--continuous", action="store_true", help="also emit the continuous AF grid")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.operation is not None and cfg.operation != args.command:
            raise ConfigError(f"{args.config}: config declares operation '{cfg.operation}' "
                              f"but '{args.command}' was requested")
        if args.workers < 1 or (args.resolution is not None and args.resolution < 2):
            raise ConfigError("--workers must be >= 1 and --resolution >= 2")
        out = Path(args.out or cfg.output.directory or ".")
        out.mkdir(parents=True, exist_ok=True)
        files = HANDLERS[args.command](cfg, args, out)
        write_manifest(out, args.config, args.command, _tolerances(cfg), files + ["manifest.json"])
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NfAliasError, ArithmeticError, MemoryError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
