"""Matched-signal spectrum, aliasing decomposition and band limits.

The discrete AF folds the spectrum G of the matched signal:

    A_S = sum_p G(2 pi p / spacing) exp(j 2 pi p rho_0 / spacing)

for a grid rho_0 + i * spacing, with A = G(0) the p = 0 term. Grid samples
lying exactly on a domain end carry full weight in A_S but half weight in
the folded sum; that difference is reported as a separate boundary term.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .ambiguity import MAX_QUAD_SAMPLES, richardson_weights
from .errors import ParameterError, ResourceError
from .field import (MatchedSignalContext, local_frequency_slope, local_frequency_values,
                    matched_terms)
from .geometry import K_C, ParametricCurve, ParametricGrid, distance_to_curve, max_speed

SCAN_MIN = 4096
SCAN_PER_WAVELENGTH = 8
SCAN_CAP = 2 ** 20
MAX_CANDIDATES = 64
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def band_limit_upper_bound(curve: ParametricCurve) -> float:
    """2 k_c max_speed: no local frequency can exceed it."""
    return 2.0 * K_C * max_speed(curve)


# -- spectrum ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectrumSamples:
    omega: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    context: dict
    step: float
    signal_energy: float

    def parseval_ratio(self) -> float:
        """(1/2pi) integral |G|^2 d omega over the grid, divided by integral |g|^2."""
        return float(np.trapezoid(np.abs(self.values) ** 2, self.omega) / (2 * math.pi) / self.signal_energy)

    def abs_db(self, floor=-120.0) -> np.ndarray:
        a = np.abs(self.values)
        with np.errstate(divide="ignore"):
            return np.maximum(20.0 * np.log10(a), floor)


def spectrum_step(curve: ParametricCurve, omega_max: float) -> float:
    return math.pi / (8.0 * (band_limit_upper_bound(curve) + abs(omega_max)))


def _fourier_sums(weighted, rho, omega):
    """sum_k weighted_k exp(-j omega_i rho_k) for each omega_i.

    Uniform omega grids reuse a one-step phase multiplier inside blocks of
    32 frequencies; each block restarts from directly evaluated exponentials.
    """
    omega = np.asarray(omega, dtype=float)
    out = np.empty(omega.size, dtype=complex)
    d = np.diff(omega)
    uniform = omega.size > 2 and np.allclose(d, d[0], rtol=1e-12, atol=0.0)
    if not uniform:
        for i, w in enumerate(omega):
            out[i] = weighted @ np.exp(-1j * w * rho)
        return out
    mult = np.exp(-1j * d[0] * rho)
    for b in range(0, omega.size, 32):
        e = np.exp(-1j * omega[b] * rho)
        for i in range(b, min(b + 32, omega.size)):
            out[i] = weighted @ e
            e *= mult
    return out


def matched_spectrum(ctx: MatchedSignalContext, omega, step=None,
                     max_samples=MAX_QUAD_SAMPLES) -> SpectrumSamples:
    """G(omega_i) = integral g(rho) exp(-j omega_i rho) d rho.

    Quadrature: trapezoid at step <= pi / (8 (2 k_c max_speed + max|omega|))
    with one Richardson extrapolation.
    """
    omega = np.asarray(omega, dtype=float).ravel()
    if omega.size == 0 or not np.all(np.isfinite(omega)):
        raise ParameterError("frequency grid must be finite and non-empty")
    if omega.size > 1 and np.any(np.diff(omega) <= 0):
        raise ParameterError("frequency grid must be strictly increasing")
    h = spectrum_step(ctx.curve, float(np.max(np.abs(omega)))) if step is None else float(step)
    rho, w = richardson_weights(ctx.curve, h, max_samples)
    g = matched_terms(ctx.curve, rho, ctx.x_tested, ctx.x_true, ctx.energy_tested, ctx.energy_true)
    vals = _fourier_sums(w * g, rho, omega)
    e = float(w @ np.abs(g) ** 2)
    return SpectrumSamples(omega, vals, ctx.describe(), float(rho[1] - rho[0]), e)


def strict_band_limit(spectrum: SpectrumSamples, eps: float) -> float:
    """Largest |omega| on the grid with |G| > eps * max|G| (0 if none)."""
    if not 0 < eps < 1:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    a = np.abs(spectrum.values)
    hit = a > eps * a.max()
    return float(np.max(np.abs(spectrum.omega[hit]))) if np.any(hit) else 0.0


# -- aliasing decomposition --------------------------------------------------

@dataclass(frozen=True)
class AliasDecomposition:
    continuous: complex
    aliasing: complex
    boundary: complex
    reconstructed: complex
    p_max: int
    p_required: int
    coverage: float

    @property
    def sufficient(self) -> bool:
        return self.p_max >= self.p_required


def required_repetitions(curve: ParametricCurve, spacing: float) -> int:
    return int(math.ceil(spacing * band_limit_upper_bound(curve) / (2 * math.pi))) + 2


def aliased_decomposition(ctx: MatchedSignalContext, grid: ParametricGrid,
                          p_max: Optional[int] = None, step=None) -> AliasDecomposition:
    """Split A_S into A = G(0), the folded repetitions and a boundary term."""
    if grid.curve != ctx.curve:
        raise ParameterError("grid belongs to a different curve")
    curve, dlt = ctx.curve, grid.spacing
    need = required_repetitions(curve, dlt)
    p_max = need if p_max is None else int(p_max)
    if p_max < 0:
        raise ParameterError("p_max must be non-negative")
    coverage = 2 * math.pi * p_max / dlt / band_limit_upper_bound(curve)
    if p_max < need:
        warnings.warn(f"p_max={p_max} below the {need} repetitions needed "
                      f"(band coverage {coverage:.3f})", RuntimeWarning, stacklevel=2)
    p = np.arange(-p_max, p_max + 1)
    omega = 2 * math.pi * p / dlt
    G = matched_spectrum(ctx, omega, step).values
    # grid offset: samples sit at rho_0 + i * spacing
    phase = np.exp(1j * omega * grid.origin)
    terms = G * phase
    cont = complex(G[p_max])
    alias = complex(np.sum(terms[p != 0]))
    bnd = _boundary_term(ctx, grid)
    return AliasDecomposition(cont, alias, bnd, cont + alias + bnd, p_max, need, coverage)


def _boundary_term(ctx, grid):
    curve, dlt = ctx.curve, grid.spacing
    tol = 1e-9
    total = 0j
    for b in (curve.rho_min, curve.rho_max):
        k = (b - grid.origin) / dlt
        if abs(k - round(k)) > tol:
            continue
        on_grid = bool(np.any(np.abs(grid.samples - b) <= tol * dlt))
        gb = matched_terms(curve, np.array(b), ctx.x_tested, ctx.x_true,
                           ctx.energy_tested, ctx.energy_true)
        total += dlt * ((1.0 if on_grid else 0.0) - 0.5) * complex(gb)
    return total


# -- numeric soft band limit -------------------------------------------------

@dataclass(frozen=True)
class BandLimitResult:
    K: float
    rho_bar: float
    method: str = "numeric"
    regime: Optional[str] = None

    def to_dict(self) -> dict:
        return {"K": self.K, "rho_bar": self.rho_bar, "method": self.method, "regime": self.regime}


def golden_section_max(f, a, b, tol):
    """Maximize f on each bracket [a_i, b_i] by golden-section search.

    `f` maps an array of abscissae to an array of values; all brackets are
    refined together. Returns (argmax, max) arrays.
    """
    a = np.array(a, dtype=float, ndmin=1)
    b = np.array(b, dtype=float, ndmin=1)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while np.any(b - a > tol):
        left = fc >= fd
        # keep [a, d] where f(c) wins, else [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        nc = np.where(left, b - _GOLDEN * (b - a), d)
        nd = np.where(left, c, a + _GOLDEN * (b - a))
        fnew = f(np.where(left, nc, nd))
        fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        c, d = nc, nd
        # freeze converged brackets
        done = b - a <= tol
        if np.all(done):
            break
    xm = np.where(fc >= fd, c, d)
    return xm, np.maximum(fc, fd)


def scan_size(curve: ParametricCurve, clearance: float = math.inf) -> int:
    """Dense-scan sample count: at least 4096 and 8 per wavelength of arc,
    and fine enough to resolve peaks of width ~clearance, capped at 2^20."""
    arc = curve.length * max_speed(curve)
    n = max(SCAN_MIN, SCAN_PER_WAVELENGTH * arc)
    if math.isfinite(clearance) and clearance > 0:
        n = max(n, 16.0 * arc / clearance)
    return int(min(SCAN_CAP, math.ceil(n))) + 1


@functools.lru_cache(maxsize=8)
def _scan_arrays(curve: ParametricCurve, n: int):
    rho = np.linspace(curve.rho_min, curve.rho_max, n)
    nu, nud = curve._eval(rho), curve._velocity(rho)
    for arr in (rho, nu, nud):
        arr.setflags(write=False)
    return rho, nu, nud


def soft_band_limit_pair(curve: ParametricCurve, xt, x, density: float = 1.0) -> BandLimitResult:
    """max |local frequency| over the domain for one pair (no clearance check)."""
    xt = np.asarray(xt, dtype=float).reshape(2)
    x = np.asarray(x, dtype=float).reshape(2)
    if np.array_equal(xt, x):
        return BandLimitResult(0.0, float(0.5 * (curve.rho_min + curve.rho_max)))
    clear = float(min(distance_to_curve(curve, xt), distance_to_curve(curve, x)))
    n = scan_size(curve, clear)
    n = int(min(SCAN_CAP * 2, (n - 1) * density)) + 1 if density != 1.0 else n
    rho, nu, nud = _scan_arrays(curve, n)
    f = np.abs(local_frequency_values(curve, rho, xt, x, nu, nud))
    fmax = float(f.max())
    if fmax == 0.0:
        return BandLimitResult(0.0, float(rho[0]))
    # local maxima of the scan, ends included
    left = np.concatenate([[True], f[1:] >= f[:-1]])
    right = np.concatenate([f[:-1] >= f[1:], [True]])
    idx = np.flatnonzero(left & right)
    idx = idx[np.argsort(-f[idx], kind="stable")][:MAX_CANDIDATES]
    lo = rho[np.maximum(idx - 1, 0)]
    hi = rho[np.minimum(idx + 1, n - 1)]

    def g(r):
        return np.abs(local_frequency_values(curve, r, xt, x))

    tol = 1e-10 * curve.length
    rm, fm = golden_section_max(g, lo, hi, tol)
    rm, fm = _polish(curve, xt, x, lo, hi, rm, fm)
    # brackets touching a domain end may peak exactly there
    cands = np.concatenate([rm, rho[idx]])
    vals = np.concatenate([fm, f[idx]])
    k = int(np.argmax(vals))
    return BandLimitResult(float(vals[k]), float(cands[k]))


def _polish(curve, xt, x, lo, hi, rm, fm):
    """Sharpen flat interior maxima with a root of the analytic slope.

    Near-saturated peaks are so flat that comparisons of |xi'| lose the
    maximizer to rounding; the slope of |xi'| still changes sign cleanly.
    """
    def slope(r):
        r = np.asarray(r, dtype=float)
        return float(np.sign(local_frequency_values(curve, r, xt, x)) * local_frequency_slope(curve, r, xt, x))

    rm, fm = rm.copy(), fm.copy()
    for i in range(rm.size):
        a, b = lo[i], hi[i]
        sa, sb = slope(a), slope(b)
        if not (sa > 0 > sb):
            continue
        r = brentq(slope, a, b, xtol=1e-15 * max(1.0, abs(a), abs(b)), maxiter=200)
        f = float(abs(local_frequency_values(curve, np.asarray(r), xt, x)))
        if f >= fm[i] * (1 - 1e-13):
            rm[i], fm[i] = r, f
    return rm, fm


def soft_band_limit_numeric(ctx: MatchedSignalContext, density: float = 1.0) -> BandLimitResult:
    """Numeric soft band limit K = max |xi'(rho)| by dense scan plus
    golden-section refinement of every local-maximum candidate."""
    return soft_band_limit_pair(ctx.curve, ctx.x_tested, ctx.x_true, density)


def numeric_band_limit_values(curve: ParametricCurve, xt, x) -> np.ndarray:
    """Numeric K for broadcastable arrays of tested and true locations."""
    xt, x = np.broadcast_arrays(np.asarray(xt, dtype=float), np.asarray(x, dtype=float))
    out = np.empty(xt.shape[:-1])
    for i in np.ndindex(out.shape):
        out[i] = soft_band_limit_pair(curve, xt[i], x[i]).K
    return out


def require_spectrum_budget(curve: ParametricCurve, omega_max: float, max_samples=MAX_QUAD_SAMPLES) -> int:
    """Sample count matched_spectrum would need; raises ResourceError if too many."""
    n = int(math.ceil(curve.length / spectrum_step(curve, omega_max)))
    n += n % 2
    if n + 1 > max_samples:
        raise ResourceError(f"spectrum needs {n + 1} samples (limit {max_samples})", n + 1)
    return n + 1
