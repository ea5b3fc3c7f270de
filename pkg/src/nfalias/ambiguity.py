"""Continuous and discrete ambiguity functions.

A(xt, x)   = integral of g over the parametric domain
A_S(xt, x) = spacing * sum of g over the grid samples
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ResourceError, SingularityError
from .field import (SINGULAR_DISTANCE, MatchedSignalContext, energy, matched_terms)
from .geometry import K_C, ParametricCurve, ParametricGrid, distance_to_curve, max_speed

CHUNK_NODES = 4096
MAX_QUAD_SAMPLES = 2 ** 24
_TERMS_PER_BLOCK = 2 ** 20


def compensated_sum(terms: np.ndarray) -> np.ndarray:
    """Neumaier-compensated sum over the last axis, in index order.

    Complex input is summed componentwise. The loop runs over the summed
    axis so every leading entry sees exactly the same operation sequence.
    """
    terms = np.asarray(terms)
    if np.iscomplexobj(terms):
        return compensated_sum(terms.real) + 1j * compensated_sum(terms.imag)
    s = np.zeros(terms.shape[:-1])
    c = np.zeros(terms.shape[:-1])
    for k in range(terms.shape[-1]):
        xk = terms[..., k]
        t = s + xk
        c += np.where(np.abs(s) >= np.abs(xk), (s - t) + xk, (xk - t) + s)
        s = t
    return s + c


def pair_band_bound(curve: ParametricCurve, xt, x) -> np.ndarray:
    """Rigorous per-pair upper bound on the local frequency.

    Uses |u(a) - u(b)| <= 2 |a - b| / max(|a|, |b|) on top of the
    Cauchy-Schwarz bound 2 k_c max_speed.
    """
    xt = np.asarray(xt, dtype=float)
    x = np.asarray(x, dtype=float)
    s = max_speed(curve)
    sep = np.hypot(*np.moveaxis(xt - x, -1, 0))
    far = np.maximum(distance_to_curve(curve, xt), distance_to_curve(curve, x))
    return K_C * s * np.minimum(2.0, 2.0 * sep / far)


def quadrature_step(curve: ParametricCurve, step=None, xt=None, x=None) -> float:
    """Step for the continuous AF.

    None gives the default pi / (8 * 2 k_c max_speed). "pair" uses the
    per-pair bound for the given locations, further limited so the
    amplitude, which varies on the scale of the distance to the array, is
    resolved. A float is used as is.
    """
    if step is None:
        return math.pi / (8.0 * 2.0 * K_C * max_speed(curve))
    if isinstance(step, str):
        if step != "pair":
            raise ParameterError(f"unknown step rule {step!r}")
        bound = float(np.max(pair_band_bound(curve, xt, x)))
        near = float(np.min(np.concatenate([np.ravel(distance_to_curve(curve, xt)),
                                            np.ravel(distance_to_curve(curve, x))])))
        h = min(math.pi / (8.0 * bound) if bound > 0 else math.inf, near / (4.0 * max_speed(curve)))
        return min(h, curve.length / 64.0)
    step = float(step)
    if not step > 0:
        raise ParameterError("quadrature step must be positive")
    return step


def richardson_weights(curve: ParametricCurve, h: float, max_samples=MAX_QUAD_SAMPLES):
    """Nodes and weights of the trapezoid rule at step <= h combined with
    the rule at twice the step (one Richardson extrapolation)."""
    n = int(math.ceil(curve.length / h))
    n += n % 2
    n = max(n, 2)
    if n + 1 > max_samples:
        raise ResourceError(f"quadrature needs {n + 1} samples (limit {max_samples})", n + 1)
    rho = np.linspace(curve.rho_min, curve.rho_max, n + 1)
    hh = curve.length / n
    w = np.full(n + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return rho, w * (hh / 3.0)


def _continuous_many(curve, xts, x, ets, ex, h):
    rho, w = richardson_weights(curve, h)
    out = np.empty(len(xts), dtype=complex)
    per = max(1, _TERMS_PER_BLOCK // rho.size)
    for s in range(0, len(xts), per):
        block = slice(s, s + per)
        for r0 in range(0, rho.size, _TERMS_PER_BLOCK):
            r = slice(r0, r0 + _TERMS_PER_BLOCK)
            g = matched_terms(curve, rho[r], xts[block], x, ets[block], ex)
            part = g @ w[r]
            out[block] = part if r0 == 0 else out[block] + part
    return out


def af_continuous(ctx: MatchedSignalContext, step=None) -> complex:
    """Continuous-space AF by trapezoid quadrature plus one Richardson step."""
    h = quadrature_step(ctx.curve, step, ctx.x_tested, ctx.x_true)
    val = _continuous_many(ctx.curve, ctx.x_tested[None, :], ctx.x_true,
                           np.array([ctx.energy_tested]), ctx.energy_true, h)
    return complex(val[0])


def _check_grid(ctx_curve, grid):
    if grid.curve != ctx_curve:
        raise ParameterError("grid belongs to a different curve")


def _discrete_many(grid: ParametricGrid, xts, x, ets, ex):
    out = np.empty(len(xts), dtype=complex)
    per = max(1, _TERMS_PER_BLOCK // grid.size)
    for s in range(0, len(xts), per):
        block = slice(s, s + per)
        g = matched_terms(grid.curve, grid.samples, xts[block], x, ets[block], ex)
        out[block] = grid.spacing * compensated_sum(g)
    return out


def af_discrete(ctx: MatchedSignalContext, grid: ParametricGrid) -> complex:
    """Discrete-space AF: spacing times the compensated sum of g over the grid."""
    _check_grid(ctx.curve, grid)
    val = _discrete_many(grid, ctx.x_tested[None, :], ctx.x_true,
                         np.array([ctx.energy_tested]), ctx.energy_true)
    return complex(val[0])


def af_points(curve: ParametricCurve, x, points, grid: ParametricGrid = None,
              continuous=False, step=None):
    """AF at many tested locations for one true location.

    Returns (A_S or None, A or None) arrays over the leading axes of
    `points`. Every point must be clear of the curve.
    """
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 2)
    x = np.asarray(x, dtype=float)
    ex = energy(curve, x)
    ets = np.atleast_1d(energy(curve, flat))
    disc = cont = None
    if grid is not None:
        _check_grid(curve, grid)
        disc = _discrete_many(grid, flat, x, ets, ex).reshape(pts.shape[:-1])
    if continuous:
        h = quadrature_step(curve, step, flat, x)
        cont = _continuous_many(curve, flat, x, ets, ex, h).reshape(pts.shape[:-1])
    return disc, cont


# -- grids -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AfGridResult:
    """AF sampled on a rectangular grid of tested locations.

    `values` has shape (ny, nx): row j holds y = ys[j].
    """

    region: tuple
    resolution: tuple
    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    masked: np.ndarray = field(repr=False)
    kind: str
    x_true: tuple
    curve: dict
    spacing: float = None
    step: float = None

    def metadata(self) -> dict:
        return {"region": list(self.region), "resolution": list(self.resolution),
                "kind": self.kind, "x_true": list(self.x_true), "curve": self.curve,
                "spacing": self.spacing, "quadrature_step": self.step,
                "masked_nodes": int(self.masked.sum()),
                "max_abs": float(np.max(np.abs(self.values[~self.masked]), initial=0.0))}

    def rows(self):
        """(x, y, re, im, abs, masked) per node, x fastest."""
        for j, yv in enumerate(self.ys):
            for i, xv in enumerate(self.xs):
                v = self.values[j, i]
                yield float(xv), float(yv), float(v.real), float(v.imag), float(abs(v)), bool(self.masked[j, i])


def _grid_nodes(region, resolution):
    xmin, xmax, ymin, ymax = (float(v) for v in region)
    if not (xmin < xmax and ymin < ymax):
        raise ParameterError(f"empty region {region}")
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    nx, ny = int(nx), int(ny)
    if nx < 2 or ny < 2:
        raise ParameterError("resolution must be at least 2 per axis")
    return np.linspace(xmin, xmax, nx), np.linspace(ymin, ymax, ny)


def _af_chunk(args):
    curve, grid, nodes, x, ex, h = args
    ets = np.atleast_1d(energy(curve, nodes))
    if grid is not None:
        return _discrete_many(grid, nodes, x, ets, ex)
    return _continuous_many(curve, nodes, x, ets, ex, h)


def af_grid(curve: ParametricCurve, grid, x, region, resolution, continuous=False,
            step=None, workers=1, alignment="centered") -> AfGridResult:
    """Evaluate A_S (or A with continuous=True) over a rectangular region.

    `grid` is a ParametricGrid or a spacing. Nodes closer than the
    singularity guard to the curve are masked and hold zero. Output does
    not depend on `workers`: nodes are always split into the same chunks.
    """
    from .geometry import sample_grid

    if not isinstance(grid, ParametricGrid):
        grid = sample_grid(curve, float(grid), alignment)
    _check_grid(curve, grid)
    x = np.asarray(x, dtype=float).reshape(2)
    if float(distance_to_curve(curve, x)) < SINGULAR_DISTANCE:
        raise SingularityError("true location lies on the array")
    xs, ys = _grid_nodes(region, resolution)
    nodes = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    masked = distance_to_curve(curve, nodes) < SINGULAR_DISTANCE
    live = nodes[~masked]
    ex = energy(curve, x)
    h = quadrature_step(curve, step, live, x) if continuous and live.size else None
    tasks = [(curve, None if continuous else grid, live[s:s + CHUNK_NODES], x, ex, h)
             for s in range(0, len(live), CHUNK_NODES)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_af_chunk, tasks))
    else:
        parts = [_af_chunk(t) for t in tasks]
    vals = np.zeros(len(nodes), dtype=complex)
    if parts:
        vals[~masked] = np.concatenate(parts)
    shape = (len(ys), len(xs))
    return AfGridResult(tuple(float(v) for v in region), (len(xs), len(ys)), xs, ys,
                        vals.reshape(shape), masked.reshape(shape),
                        "continuous" if continuous else "discrete", tuple(x.tolist()),
                        curve.describe(), grid.spacing, h)


def write_af_csv(result: AfGridResult, path, db_floor=None):
    """CSV with columns x_t,y_t,re,im,abs,masked (plus abs_db on request)."""
    from .io import write_csv

    header = ["x_t", "y_t", "re", "im", "abs", "masked"]
    rows = result.rows()
    if db_floor is not None:
        header.append("abs_db")
        rows = (r + (to_db(r[4], db_floor),) for r in rows)
    write_csv(path, header, rows)


def write_af_json(result: AfGridResult, path, extra=None):
    meta = result.metadata()
    if extra:
        meta.update(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def to_db(value, floor=-120.0):
    """20 log10 |value| clipped below at `floor`."""
    a = abs(value)
    return max(floor, 20.0 * math.log10(a)) if a > 0 else floor
