"""Closed-form band limits for linear and circular arrays.

ULA results live in the array frame: the array lies on the x axis centred
at the origin. They depend on the heights only through |y|, so locations
below the axis are handled by reflection. UCA results assume an infinite
radius and are expressed per radian of arc.

With u = (yt / y)^(2/3), v = (xt - x) / y and w = v / (u^2 - 1), the
maximizer of the local frequency on an infinite ULA is y * beta + x with

    beta = sign(w) u sqrt(1/(u+1) + w^2) - w

and the band limit is K = k_c |(u - 1) beta + v| / (u sqrt(beta^2 + 1)).
The code evaluates the algebraically equivalent rationalized forms

    beta = (v^2 + u^2 (u - 1)) / (sign(v) (u sqrt(D) + |v|))
    K    = k_c (sqrt(D) + |v|) / ((u + 1) sqrt(beta^2 + 1))

with D = v^2 + (u - 1)^2 (u + 1), which stay accurate as u -> 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, ParameterError
from .geometry import K_C, ULA, ParametricCurve

U_ONE_TOL = 1e-9
UCA_VALIDITY_RATIO = 0.01
INTERIOR, SECONDARY, EDGE = "interior", "secondary", "edge"


def _sign(a):
    return np.where(a >= 0, 1.0, -1.0)


def to_ula_frame(curve: ParametricCurve, points) -> np.ndarray:
    """Coordinates (along-axis, perpendicular) relative to a ULA's centre."""
    if curve.kind != ULA:
        raise ParameterError("array frame only defined for ULA curves")
    p = np.asarray(points, dtype=float) - curve.center
    d = curve.direction
    return np.stack([p @ d, p[..., 1] * d[0] - p[..., 0] * d[1]], axis=-1)


# -- ULA ---------------------------------------------------------------------

@dataclass(frozen=True)
class UlaReducedCoords:
    u: float
    v: float
    w: float  # nan when |u - 1| <= tol

    @property
    def w_defined(self) -> bool:
        return not math.isnan(self.w)


def _heights(xt, x):
    xt, x = np.broadcast_arrays(np.asarray(xt, dtype=float), np.asarray(x, dtype=float))
    y, yt = np.abs(x[..., 1]), np.abs(xt[..., 1])
    return xt, x, y, yt


def _reduced(xt, x, y, yt):
    u = np.cbrt((yt / y) ** 2)
    v = (xt[..., 0] - x[..., 0]) / y
    near = np.abs(u - 1.0) <= U_ONE_TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(near, np.nan, v / (u * u - 1.0))
    return u, v, w, near


def reduced_coords(xt, x) -> UlaReducedCoords:
    """(u, v, w) for one pair; heights must be positive."""
    xt, x, y, yt = _heights(xt, x)
    if not (x[1] > 0 and xt[1] > 0):
        raise DomainError("reduced coordinates need positive heights")
    u, v, w, _ = _reduced(xt, x, y, yt)
    return UlaReducedCoords(float(u), float(v), float(w))


def _infinite(u, v, near):
    s = _sign(v)
    av = np.abs(v)
    sqd = np.sqrt(v * v + (u - 1.0) ** 2 * (u + 1.0))
    den = u * sqd + av
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = (v * v + u * u * (u - 1.0)) / (s * den)
    beta = np.where(den == 0, 0.0, beta)
    K = K_C * (sqd + av) / ((u + 1.0) * np.sqrt(beta * beta + 1.0))
    # exact corollary forms on the two special lines
    vert = (v == 0) & ~near
    beta = np.where(vert, u / np.sqrt(u + 1.0), beta)
    K = np.where(vert, K_C * np.abs(u - 1.0) / np.sqrt(1.0 + u + u * u), K)
    beta = np.where(near, v / 2.0, beta)
    K = np.where(near, K_C * av / np.sqrt(v * v / 4.0 + 1.0), K)
    return beta, K, sqd


def _check_heights(y, yt):
    if np.any(y == 0) or np.any(yt == 0) or np.any(~np.isfinite(y)) or np.any(~np.isfinite(yt)):
        raise DomainError("locations on the array axis have no ULA band limit")


def k_inf_ula_values(xt, x) -> np.ndarray:
    """Infinite-ULA band limit for broadcastable arrays of locations."""
    xt, x, y, yt = _heights(xt, x)
    _check_heights(y, yt)
    u, v, _, near = _reduced(xt, x, y, yt)
    return _infinite(u, v, near)[1]


@dataclass(frozen=True)
class UlaBandLimit:
    K: float
    beta: float
    beta_s: float
    regime: str
    rho_bar: float
    coords: UlaReducedCoords
    B_plus: Optional[float] = None
    B_minus: Optional[float] = None
    K_s: Optional[float] = None
    method: str = "closed-form"

    def to_dict(self) -> dict:
        c = self.coords
        return {"K": self.K, "beta": self.beta, "beta_s": self.beta_s, "regime": self.regime,
                "rho_bar": self.rho_bar, "u": c.u, "v": c.v, "w": None if math.isnan(c.w) else c.w,
                "B_plus": self.B_plus, "B_minus": self.B_minus, "K_s": self.K_s,
                "method": self.method}


def k_inf_ula(xt, x) -> UlaBandLimit:
    """Band limit of the infinite ULA (array frame) for one pair."""
    r = _finite_core(xt, x, math.inf)
    return _record(r, 0)


def _secondary(u, v, near):
    s = _sign(v)
    av = np.abs(v)
    sqd = np.sqrt(v * v + (u - 1.0) ** 2 * (u + 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        bs = -s * (u * sqd + av) / (u * u - 1.0)
        bs = np.where(v == 0, -u / np.sqrt(u + 1.0), bs)
        bs = np.where(near, np.nan, bs)
        # rationalized: |(u - 1) beta_s + v| = u (u - 1)^2 / (sqrt(D) + |v|)
        ks = K_C * (u - 1.0) ** 2 / ((sqd + av) * np.sqrt(bs * bs + 1.0))
    return bs, ks


def _edge_terms(xt, x, L, sw):
    """|B_q| for q = +1, -1 with edges at q sign(w) L / 2."""
    out = []
    for q in (1.0, -1.0):
        e = q * sw * L / 2.0
        ct = (xt[..., 0] - e) / np.hypot(xt[..., 0] - e, xt[..., 1])
        cx = (x[..., 0] - e) / np.hypot(x[..., 0] - e, x[..., 1])
        out.append(K_C * np.abs(ct - cx))
    return out


def _finite_core(xt, x, L):
    xt, x, y, yt = _heights(xt, x)
    _check_heights(y, yt)
    u, v, w, near = _reduced(xt, x, y, yt)
    beta, K, _ = _infinite(u, v, near)
    res = {"u": u, "v": v, "w": w, "beta": beta, "K_inf": K}
    bs, ks = _secondary(u, v, near)
    res["beta_s"], res["K_s"] = bs, ks
    rho_i = y * beta + x[..., 0]
    if math.isinf(L):
        res.update(K=K, regime=np.full(K.shape, INTERIOR), rho_bar=rho_i,
                   B_plus=np.full(K.shape, np.nan), B_minus=np.full(K.shape, np.nan))
        return res
    # sign(w) with sign(0) = +1; at u = 1 the sign(v) limit is used
    sw = np.where(near, _sign(v), _sign(v) * _sign(u * u - 1.0))
    sw = np.where(v == 0, 1.0, sw)
    bp, bm = _edge_terms(np.stack([xt[..., 0], yt], -1), np.stack([x[..., 0], y], -1), L, sw)
    r1 = np.abs(rho_i) <= L / 2.0
    with np.errstate(invalid="ignore"):
        rho_s = y * bs + x[..., 0]
        r2 = ~r1 & (np.abs(rho_s) <= L / 2.0)
    r3 = ~r1 & ~r2
    k2 = np.fmax(bp, ks)
    k3 = np.maximum(bp, bm)
    Kf = np.where(r1, K, np.where(r2, k2, k3))
    regime = np.where(r1, INTERIOR, np.where(r2, SECONDARY, EDGE))
    edge_p, edge_m = sw * L / 2.0, -sw * L / 2.0
    rho_bar = np.where(r1, rho_i, np.where(r2, np.where(ks >= bp, rho_s, edge_p),
                                           np.where(bp >= bm, edge_p, edge_m)))
    res.update(K=Kf, regime=regime, rho_bar=rho_bar, B_plus=bp, B_minus=bm)
    return res


def _record(r, idx):
    def f(key):
        return float(np.asarray(r[key]).reshape(-1)[idx])

    coords = UlaReducedCoords(f("u"), f("v"), f("w"))
    fin = not math.isnan(f("B_plus"))
    return UlaBandLimit(f("K"), f("beta"), f("beta_s"), str(np.asarray(r["regime"]).reshape(-1)[idx]),
                        f("rho_bar"), coords,
                        f("B_plus") if fin else None, f("B_minus") if fin else None,
                        f("K_s") if not math.isnan(f("K_s")) else None)


def k_finite_ula(L, xt, x) -> UlaBandLimit:
    """Band limit of a ULA of length L (array frame) for one pair."""
    if not L > 0:
        raise ParameterError("array length must be positive")
    return _record(_finite_core(xt, x, float(L)), 0)


def k_finite_ula_values(L, xt, x) -> np.ndarray:
    """Finite-ULA band limit for broadcastable arrays of locations."""
    if not L > 0:
        raise ParameterError("array length must be positive")
    return _finite_core(xt, x, float(L))["K"]


# -- eye ---------------------------------------------------------------------

@dataclass(frozen=True)
class EyeGeometry:
    """Aliasing-free region of the infinite ULA for x = [0, 1].

    `width` is the horizontal offset |xt - x| at which the boundary crosses
    the line yt = 1 (the eye spans [-width, width] there); `h_plus` and
    `h_minus` are the upper and lower crossings of the vertical axis.
    """

    delta: float
    width: float
    h_plus: float
    h_minus: float
    degenerate: bool
    unbounded: bool

    def to_dict(self) -> dict:
        return {"delta": self.delta, "w_eye": self.width, "h_plus": self.h_plus,
                "h_minus": self.h_minus, "degenerate": self.degenerate, "unbounded": self.unbounded}


def eye_geometry(delta: float) -> EyeGeometry:
    """Eye apertures for spacing delta (in wavelengths)."""
    if not delta > 0:
        raise ParameterError(f"spacing must be positive, got {delta}")
    if delta <= 0.5:
        return EyeGeometry(delta, math.inf, math.inf, 0.0, False, True)
    width = 2.0 / math.sqrt(4.0 * delta * delta - 1.0)
    if delta <= 1.0:
        return EyeGeometry(delta, width, math.inf, 0.0, True, False)
    d2 = delta * delta
    root = math.sqrt(12.0 * d2 - 3.0)
    hp = ((2.0 * d2 + 1.0 + root) / (2.0 * (d2 - 1.0))) ** 1.5
    hm = ((2.0 * d2 + 1.0 - root) / (2.0 * (d2 - 1.0))) ** 1.5
    return EyeGeometry(delta, width, hp, hm, False, False)


@dataclass(frozen=True)
class EyeTransform:
    """Maps the unit eye onto the AFR of x: p -> scale * p + shift."""

    scale: float
    shift: tuple
    eye: EyeGeometry

    def to_afr(self, p):
        return self.scale * np.asarray(p, dtype=float) + np.asarray(self.shift)

    def to_eye(self, q):
        return (np.asarray(q, dtype=float) - np.asarray(self.shift)) / self.scale


def afr_ula_from_eye(x, spacing: float) -> EyeTransform:
    x = np.asarray(x, dtype=float).reshape(2)
    if not x[1] > 0:
        raise DomainError("true location must lie above the array")
    return EyeTransform(float(x[1]), (float(x[0]), 0.0), eye_geometry(spacing))


# -- UCA ---------------------------------------------------------------------

def visual_aperture(theta, psi):
    """Largest |sin(rho - theta)| over rho in [-psi, psi]."""
    if not 0 < psi <= math.pi:
        raise ParameterError(f"half aperture must lie in (0, pi], got {psi}")
    theta = np.asarray(theta, dtype=float)
    # some theta + (2n+1) pi/2 in [-psi, psi]: distance to the nearest such point
    t = np.mod(theta + math.pi / 2.0 + math.pi / 2.0, math.pi) - math.pi / 2.0
    full = np.abs(t) <= psi
    edge = np.maximum(np.abs(np.sin(psi + theta)), np.abs(np.sin(psi - theta)))
    out = np.where(full, 1.0, edge)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class UcaBandLimit:
    K: float
    omega: float
    separation: float
    theta: float
    psi: float
    validity_ratio: Optional[float] = None
    method: str = "closed-form"

    @property
    def valid(self) -> Optional[bool]:
        return None if self.validity_ratio is None else self.validity_ratio <= UCA_VALIDITY_RATIO

    def to_dict(self) -> dict:
        return {"K": self.K, "omega": self.omega, "separation": self.separation,
                "theta": self.theta, "psi": self.psi, "validity_ratio": self.validity_ratio,
                "valid": self.valid, "method": self.method}


def k_uca_values(xt, x, psi) -> np.ndarray:
    d = np.asarray(x, dtype=float) - np.asarray(xt, dtype=float)
    R = np.hypot(d[..., 0], d[..., 1])
    th = np.arctan2(d[..., 1], d[..., 0])
    return K_C * R * np.asarray(visual_aperture(th, psi))


def k_uca(xt, x, psi, radius: Optional[float] = None) -> UcaBandLimit:
    """Infinite-radius UCA band limit k_c R Omega(theta), per radian of arc.

    With a finite `radius` the ratio max(|x|, |xt|) / radius is reported;
    the infinite-radius model is considered valid up to 0.01.
    """
    xt = np.asarray(xt, dtype=float).reshape(2)
    x = np.asarray(x, dtype=float).reshape(2)
    d = x - xt
    R = float(np.hypot(*d))
    th = float(math.atan2(d[1], d[0]))
    om = visual_aperture(th, psi)
    ratio = None
    if radius is not None:
        ratio = float(max(np.hypot(*x), np.hypot(*xt)) / radius)
    return UcaBandLimit(K_C * R * om, om, R, th, float(psi), ratio)


@dataclass(frozen=True)
class UcaBoundary:
    """AFR front around x: tested points x - r(theta) [cos theta, sin theta]."""

    theta: np.ndarray
    radius: np.ndarray
    points: np.ndarray
    unbounded: np.ndarray


def afr_uca_boundary(x, spacing: float, psi: float, theta) -> UcaBoundary:
    """Front radius 1 / (spacing * Omega(theta)) with theta = angle(x - xt)."""
    if not spacing > 0:
        raise ParameterError("spacing must be positive")
    theta = np.asarray(theta, dtype=float)
    om = np.asarray(visual_aperture(theta, psi), dtype=float)
    with np.errstate(divide="ignore"):
        r = np.where(om > 0, 1.0 / (spacing * om), np.inf)
    x = np.asarray(x, dtype=float).reshape(2)
    pts = x - r[..., None] * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    return UcaBoundary(theta, r, pts, ~np.isfinite(r))
