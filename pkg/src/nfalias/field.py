"""Steering signal, energy normalization and the matched signal.

The matched signal of a tested location xt against a true location x is
g(rho) = alpha(rho) exp(-j xi(rho)) with

    alpha = 1 / (sqrt(E(xt) E(x)) |nu - xt| |nu - x|)
    xi    = k_c (|nu - x| - |nu - xt|)

and its local frequency is the analytic derivative of xi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import ParameterError, SingularityError
from .geometry import (CUSTOM, K_C, UCA, ULA, ParametricCurve, PhysicalConfig,
                       closest_parameter, distance_to_curve)

SINGULAR_DISTANCE = 1e-6
MEASURES = ("parametric", "arc")


def _as_points(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1:] != (2,):
        raise ParameterError(f"locations need a trailing axis of size 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ParameterError("locations must be finite")
    return p


def check_clearance(curve: ParametricCurve, points, what="location"):
    """Raise SingularityError when any point lies within the guard distance."""
    d = distance_to_curve(curve, points)
    if np.any(d < SINGULAR_DISTANCE):
        raise SingularityError(f"{what} lies within {SINGULAR_DISTANCE} wavelengths of the array")
    return d


# -- energy ----------------------------------------------------------------

def energy(curve: ParametricCurve, x, measure: str = "parametric", method: str = "auto"):
    """Energy E(x) = integral of |nu(rho) - x|^-2 over the curve.

    `measure="parametric"` integrates in d rho, which normalizes the
    parametric autocorrelation to one; `measure="arc"` integrates in arc
    length. `method="auto"` uses the exact antiderivative for ULA and UCA
    curves and adaptive quadrature otherwise; `"quadrature"` always
    integrates numerically (relative tolerance 1e-9).
    """
    x = _as_points(x)
    if measure not in MEASURES:
        raise ParameterError(f"unknown measure {measure!r}")
    check_clearance(curve, x)
    if method == "auto" and curve.kind != CUSTOM:
        return _energy_exact(curve, x, measure)
    if method not in ("auto", "quadrature"):
        raise ParameterError(f"unknown method {method!r}")
    flat = x.reshape(-1, 2)
    out = np.array([_energy_quad(curve, p, measure) for p in flat])
    return out.reshape(x.shape[:-1]) if x.ndim > 1 else float(out[0])


def _energy_quad(curve, p, measure):
    def f(r):
        nu = curve._eval(np.array(r))
        val = 1.0 / float(np.sum((nu - p) ** 2))
        if measure == "arc":
            val *= float(np.hypot(*curve._velocity(np.array(r))))
        return val

    # resolve the peak of width ~distance around the closest point
    c = float(closest_parameter(curve, p))
    d = float(distance_to_curve(curve, p)) / max(float(np.hypot(*curve._velocity(np.array(c)))), 1e-300)
    brk = [c] + [c + s * d * 10.0 ** k for k in range(0, 12, 2) for s in (-1, 1)]
    if curve.kind == CUSTOM:
        brk += list(curve.params[0][1:-1])
    brk = sorted(b for b in brk if curve.rho_min < b < curve.rho_max)
    val, _ = quad(f, curve.rho_min, curve.rho_max, points=brk or None,
                  epsabs=0.0, epsrel=1e-10, limit=2000)
    return val


def _energy_exact(curve, p, measure):
    if curve.kind == ULA:
        rel = p - curve.center
        d = curve.direction
        t = rel @ d
        h = np.abs(rel[..., 0] * d[1] - rel[..., 1] * d[0])
        a = curve.rho_max - t
        b = curve.rho_min - t
        with np.errstate(divide="ignore", invalid="ignore"):
            # atan(a/h) - atan(b/h) folded into one atan2 on the correct branch
            e = np.arctan2(h * (a - b), h * h + a * b) / h
            e = np.where(h > 1e-12 * max(1.0, curve.length), e, (a - b) / (a * b))
    else:
        R = curve.radius
        r2 = np.sum(p * p, axis=-1)
        phi = np.arctan2(p[..., 1], p[..., 0])
        s = np.abs(R * R - r2)
        c = (R + np.sqrt(r2)) / np.abs(R - np.sqrt(r2))

        def prim(t):
            m = np.round(t / (2 * math.pi))
            tw = t - 2 * math.pi * m
            return (2.0 / s) * np.arctan(c * np.tan(tw / 2.0)) + m * (2 * math.pi / s)

        e = prim(curve.rho_max - phi) - prim(curve.rho_min - phi)
        if measure == "arc":
            e = e * R
    return float(e) if np.ndim(e) == 0 else e


# -- context -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MatchedSignalContext:
    """A (tested, true) location pair on a given array, with cached energies."""

    curve: ParametricCurve
    x_tested: np.ndarray
    x_true: np.ndarray
    measure: str = "parametric"
    config: PhysicalConfig = PhysicalConfig()
    energy_tested: float = field(init=False)
    energy_true: float = field(init=False)

    def __post_init__(self):
        xt = _as_points(self.x_tested).reshape(2).copy()
        x = _as_points(self.x_true).reshape(2).copy()
        check_clearance(self.curve, xt, "tested location")
        check_clearance(self.curve, x, "true location")
        xt.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "x_tested", xt)
        object.__setattr__(self, "x_true", x)
        object.__setattr__(self, "energy_tested", energy(self.curve, xt, self.measure))
        object.__setattr__(self, "energy_true", energy(self.curve, x, self.measure))

    def swapped(self) -> "MatchedSignalContext":
        return MatchedSignalContext(self.curve, self.x_true, self.x_tested, self.measure, self.config)

    def describe(self) -> dict:
        return {"curve": self.curve.describe(), "x_tested": self.x_tested.tolist(),
                "x_true": self.x_true.tolist(), "measure": self.measure}


def steering_signal(curve: ParametricCurve, x, rho, e=None, measure="parametric"):
    """Energy-normalized steering signal a exp(-j k_c |nu - x|)."""
    rho = curve.check_domain(rho)
    x = _as_points(x).reshape(2)
    e = energy(curve, x, measure) if e is None else e
    d = np.hypot(*np.moveaxis(curve._eval(rho) - x, -1, 0))
    return np.exp(-1j * K_C * d) / (math.sqrt(e) * d)


def steering(ctx: MatchedSignalContext, rho, location: str = "true"):
    """Steering signal of the true (default) or tested location."""
    if location == "true":
        x, e = ctx.x_true, ctx.energy_true
    elif location == "tested":
        x, e = ctx.x_tested, ctx.energy_tested
    else:
        raise ParameterError(f"location must be 'true' or 'tested', got {location!r}")
    return steering_signal(ctx.curve, x, rho, e)


def _distances(curve, rho, xt, x):
    nu = curve._eval(rho)
    dx = np.hypot(*np.moveaxis(nu - x, -1, 0))
    dt = np.hypot(*np.moveaxis(nu - xt, -1, 0))
    return dx, dt


def matched_amplitude(ctx: MatchedSignalContext, rho):
    rho = ctx.curve.check_domain(rho)
    dx, dt = _distances(ctx.curve, rho, ctx.x_tested, ctx.x_true)
    return 1.0 / (math.sqrt(ctx.energy_tested * ctx.energy_true) * (dx * dt))


def matched_phase(ctx: MatchedSignalContext, rho):
    rho = ctx.curve.check_domain(rho)
    dx, dt = _distances(ctx.curve, rho, ctx.x_tested, ctx.x_true)
    return K_C * (dx - dt)


def matched_signal(ctx: MatchedSignalContext, rho):
    rho = ctx.curve.check_domain(rho)
    return matched_terms(ctx.curve, rho, ctx.x_tested, ctx.x_true,
                         ctx.energy_tested, ctx.energy_true)


def matched_terms(curve, rho, xt, x, et, ex):
    """Matched signal for one or many tested locations.

    `xt` may have shape (2,) or (m, 2); the result then has shape
    rho.shape or (m,) + rho.shape. No domain or clearance checks.
    """
    xt = np.asarray(xt, dtype=float)
    nu = curve._eval(rho)
    dx = np.hypot(*np.moveaxis(nu - x, -1, 0))
    if xt.ndim == 2:
        nu = nu[None, ...]
        xt = xt.reshape((xt.shape[0],) + (1,) * np.ndim(rho) + (2,))
        et = np.asarray(et, dtype=float).reshape((-1,) + (1,) * np.ndim(rho))
    dt = np.hypot(*np.moveaxis(nu - xt, -1, 0))
    # symmetric in (dx, dt) so swapping the locations conjugates exactly
    amp = 1.0 / (np.sqrt(et * ex) * (dx * dt))
    xi = K_C * (dx - dt)
    return amp * np.cos(xi) - 1j * (amp * np.sin(xi))


def local_frequency(ctx: MatchedSignalContext, rho):
    """Analytic d xi / d rho."""
    rho = ctx.curve.check_domain(rho)
    return local_frequency_values(ctx.curve, rho, ctx.x_tested, ctx.x_true)


def local_frequency_values(curve, rho, xt, x, nu=None, nudot=None):
    """k_c [u(nu - x) - u(nu - xt)] . nu' without domain checks.

    Precomputed curve points and velocities may be passed for speed.
    """
    nu = curve._eval(rho) if nu is None else nu
    nudot = curve._velocity(rho) if nudot is None else nudot
    ex = nu - x
    et = nu - xt
    dx = np.hypot(ex[..., 0], ex[..., 1])
    dt = np.hypot(et[..., 0], et[..., 1])
    px = (ex[..., 0] * nudot[..., 0] + ex[..., 1] * nudot[..., 1]) / dx
    pt = (et[..., 0] * nudot[..., 0] + et[..., 1] * nudot[..., 1]) / dt
    return K_C * (px - pt)


def local_frequency_slope(curve, rho, xt, x):
    """Analytic second derivative of the matched phase, without domain checks."""
    nu, nud, nudd = curve._eval(rho), curve._velocity(rho), curve._acceleration(rho)
    speed2 = np.sum(nud * nud, axis=-1)

    def term(p):
        e = nu - p
        d = np.hypot(e[..., 0], e[..., 1])
        proj = np.sum(e * nud, axis=-1) / d
        return (speed2 - proj * proj) / d + np.sum(e * nudd, axis=-1) / d

    return K_C * (term(x) - term(xt))
