"""Array topologies as parametric curves and their uniform sampling.

Lengths are expressed in carrier wavelengths (lambda_c = 1, k_c = 2 pi).
ULA parameters are lengths; UCA parameters are angles in radians.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize_scalar

from .errors import DomainError, ParameterError

K_C = 2.0 * math.pi
DOMAIN_TOL = 1e-12
COINCIDENCE_TOL = 1e-9

ULA = "ula"
UCA = "uca"
CUSTOM = "custom"
ALIGNMENTS = ("centered", "start", "midpoint")


@dataclass(frozen=True)
class PhysicalConfig:
    """Carrier description; computations only ever use the wavelength."""

    wavelength: float = 1.0
    frequency: Optional[float] = None

    def __post_init__(self):
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            raise ParameterError(f"wavelength must be positive, got {self.wavelength}")

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    def to_wavelengths(self, length):
        return np.asarray(length, dtype=float) / self.wavelength


@dataclass(frozen=True)
class ParametricCurve:
    """A bijection from a parametric interval onto a planar array curve.

    Build instances with :meth:`ula`, :meth:`uca` or :meth:`custom`.
    """

    kind: str
    rho_min: float
    rho_max: float
    params: Tuple = ()

    def __post_init__(self):
        if not self.rho_min < self.rho_max:
            raise ParameterError("empty parametric domain")

    @classmethod
    def ula(cls, length: float, center=(0.0, 0.0), orientation: float = 0.0):
        """Linear array of the given length, centred at `center`.

        `orientation` is the angle of the array axis in radians.
        """
        if not (length > 0 and math.isfinite(length)):
            raise ParameterError(f"ULA length must be positive, got {length}")
        cx, cy = (float(c) for c in center)
        return cls(ULA, -length / 2.0, length / 2.0, (float(length), cx, cy, float(orientation)))

    @classmethod
    def uca(cls, radius: float, half_aperture: float = math.pi):
        """Circular arc R [cos rho, sin rho] for rho in [-psi, psi]."""
        if not (radius > 0 and math.isfinite(radius)):
            raise ParameterError(f"UCA radius must be positive, got {radius}")
        if not 0 < half_aperture <= math.pi:
            raise ParameterError(f"half aperture must lie in (0, pi], got {half_aperture}")
        return cls(UCA, -half_aperture, half_aperture, (float(radius), float(half_aperture)))

    @classmethod
    def custom(cls, breakpoints: Sequence[float], x_coeffs, y_coeffs):
        """Piecewise polynomial curve.

        Piece k covers [breakpoints[k], breakpoints[k+1]] and uses the
        coefficient lists x_coeffs[k], y_coeffs[k] in increasing powers of rho.
        """
        b = tuple(float(v) for v in breakpoints)
        if len(b) < 2 or any(b1 <= b0 for b0, b1 in zip(b, b[1:])):
            raise ParameterError("breakpoints must be strictly increasing, at least two")
        if len(x_coeffs) != len(b) - 1 or len(y_coeffs) != len(b) - 1:
            raise ParameterError("need one coefficient list per piece and coordinate")
        xs = tuple(tuple(float(c) for c in cs) for cs in x_coeffs)
        ys = tuple(tuple(float(c) for c in cs) for cs in y_coeffs)
        if any(len(c) == 0 for c in xs + ys):
            raise ParameterError("empty coefficient list")
        return cls(CUSTOM, b[0], b[-1], (b, xs, ys))

    # -- descriptors -------------------------------------------------------
    @property
    def length(self) -> float:
        """Length of the parametric domain."""
        return self.rho_max - self.rho_min

    @property
    def radius(self) -> float:
        self._require(UCA)
        return self.params[0]

    @property
    def half_aperture(self) -> float:
        self._require(UCA)
        return self.params[1]

    @property
    def direction(self) -> np.ndarray:
        self._require(ULA)
        phi = self.params[3]
        return np.array([math.cos(phi), math.sin(phi)])

    @property
    def center(self) -> np.ndarray:
        if self.kind == UCA:
            return np.zeros(2)
        self._require(ULA)
        return np.array(self.params[1:3])

    @property
    def is_closed(self) -> bool:
        """True when the two domain ends map to the same point."""
        a, b = self._eval(np.array([self.rho_min, self.rho_max]))
        return bool(np.hypot(*(a - b)) < COINCIDENCE_TOL)

    def describe(self) -> dict:
        if self.kind == ULA:
            L, cx, cy, phi = self.params
            return {"kind": ULA, "length": L, "center": [cx, cy], "orientation": phi}
        if self.kind == UCA:
            return {"kind": UCA, "radius": self.params[0], "half_aperture": self.params[1]}
        b, xs, ys = self.params
        return {"kind": CUSTOM, "breakpoints": list(b),
                "x_coeffs": [list(c) for c in xs], "y_coeffs": [list(c) for c in ys]}

    def _require(self, kind):
        if self.kind != kind:
            raise ParameterError(f"operation requires a {kind} curve, got {self.kind}")

    # -- vectorized evaluation (no domain check) ---------------------------
    def _pieces(self, rho):
        b = self.params[0]
        return np.clip(np.searchsorted(b, rho, side="right") - 1, 0, len(b) - 2)

    def _eval(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind == ULA:
            d = self.direction
            return self.center + rho[..., None] * d
        if self.kind == UCA:
            R = self.params[0]
            return R * np.stack([np.cos(rho), np.sin(rho)], axis=-1)
        return self._eval_custom(rho, 0)

    def _velocity(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind == ULA:
            return np.broadcast_to(self.direction, rho.shape + (2,)).copy()
        if self.kind == UCA:
            R = self.params[0]
            return R * np.stack([-np.sin(rho), np.cos(rho)], axis=-1)
        return self._eval_custom(rho, 1)

    def _acceleration(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.kind == ULA:
            return np.zeros(rho.shape + (2,))
        if self.kind == UCA:
            return -self._eval(rho)
        return self._eval_custom(rho, 2)

    def _eval_custom(self, rho, order):
        _, xs, ys = self.params
        idx = self._pieces(rho)
        out = np.empty(rho.shape + (2,))
        for k, (cx, cy) in enumerate(zip(xs, ys)):
            sel = idx == k
            if not np.any(sel):
                continue
            px, py = Polynomial(cx), Polynomial(cy)
            if order:
                px, py = px.deriv(order), py.deriv(order)
            out[sel, 0] = px(rho[sel])
            out[sel, 1] = py(rho[sel])
        return out

    def check_domain(self, rho):
        rho = np.asarray(rho, dtype=float)
        tol = DOMAIN_TOL * max(1.0, self.length)
        if np.any(~np.isfinite(rho)) or np.any(rho < self.rho_min - tol) or np.any(rho > self.rho_max + tol):
            raise DomainError(f"rho outside [{self.rho_min}, {self.rho_max}]")
        return rho


def map_point(curve: ParametricCurve, rho):
    """Curve point nu(rho); accepts scalars or arrays (trailing axis of size 2)."""
    return curve._eval(curve.check_domain(rho))


def derivative(curve: ParametricCurve, rho):
    """Analytic derivative d nu / d rho."""
    return curve._velocity(curve.check_domain(rho))


def max_speed(curve: ParametricCurve) -> float:
    """Supremum of the parametric speed over the domain."""
    if curve.kind == ULA:
        return 1.0
    if curve.kind == UCA:
        return curve.radius
    # speed^2 is a polynomial on each piece, so its maximum sits at an
    # endpoint or at a real root of its derivative
    b, xs, ys = curve.params
    best = 0.0
    for k, (cx, cy) in enumerate(zip(xs, ys)):
        dx, dy = Polynomial(cx).deriv(), Polynomial(cy).deriv()
        s2 = dx * dx + dy * dy
        cands = [b[k], b[k + 1]]
        for r in s2.deriv().roots():
            if abs(r.imag) < 1e-12 and b[k] <= r.real <= b[k + 1]:
                cands.append(r.real)
        best = max(best, float(np.max(s2(np.array(cands)))))
    return math.sqrt(best)


def closest_parameter(curve: ParametricCurve, point) -> np.ndarray:
    """Parameter of the curve point nearest to each given point."""
    p = np.asarray(point, dtype=float)
    if curve.kind == ULA:
        t = (p - curve.center) @ curve.direction
        return np.clip(t, curve.rho_min, curve.rho_max)
    if curve.kind == UCA:
        psi = curve.half_aperture
        ang = np.arctan2(p[..., 1], p[..., 0])
        if psi >= math.pi:
            return ang
        # outside the arc the nearest point is the closer endpoint
        inside = np.abs(ang) <= psi
        return np.where(inside, ang, np.where(ang > 0, psi, -psi))
    flat = p.reshape(-1, 2)
    out = np.array([_closest_custom(curve, q) for q in flat])
    return out.reshape(p.shape[:-1])


def _closest_custom(curve, q):
    rho = np.linspace(curve.rho_min, curve.rho_max, 4097)
    d2 = np.sum((curve._eval(rho) - q) ** 2, axis=-1)
    i = int(np.argmin(d2))
    lo, hi = rho[max(i - 1, 0)], rho[min(i + 1, rho.size - 1)]
    res = minimize_scalar(lambda r: float(np.sum((curve._eval(np.array(r)) - q) ** 2)),
                          bounds=(lo, hi), method="bounded", options={"xatol": 1e-13 * curve.length})
    return res.x if res.fun < d2[i] else rho[i]


def distance_to_curve(curve: ParametricCurve, point):
    """Euclidean distance from each point to the curve."""
    p = np.asarray(point, dtype=float)
    rho = closest_parameter(curve, p)
    return np.hypot(*np.moveaxis(curve._eval(rho) - p, -1, 0))


@dataclass(frozen=True, eq=False)
class ParametricGrid:
    """Uniform samples rho_i of a curve's parametric domain."""

    curve: ParametricCurve
    spacing: float
    samples: np.ndarray = field(repr=False)
    alignment: str = "centered"

    @property
    def size(self) -> int:
        return int(self.samples.size)

    @property
    def points(self) -> np.ndarray:
        return self.curve._eval(self.samples)

    @property
    def origin(self) -> float:
        """First sample; the grid is origin + i * spacing."""
        return float(self.samples[0])

    def describe(self) -> dict:
        return {"spacing": self.spacing, "alignment": self.alignment, "count": self.size,
                "first": float(self.samples[0]), "last": float(self.samples[-1])}


def sample_grid(curve: ParametricCurve, spacing: float, alignment: str = "centered") -> ParametricGrid:
    """Uniform parametric sampling built from integer multiples of the spacing.

    `start` begins at rho_min. `centered` is symmetric about the domain
    midpoint and includes both ends when the length is a multiple of the
    spacing. `midpoint` places one sample at the centre of each of the
    floor(length / spacing) cells. On a closed curve the last sample is
    dropped when it lands on the first one.
    """
    if alignment not in ALIGNMENTS:
        raise ParameterError(f"unknown alignment {alignment!r}")
    if not (spacing > 0 and math.isfinite(spacing)):
        raise ParameterError(f"spacing must be positive, got {spacing}")
    span = curve.length
    if spacing > span * (1 + 1e-12):
        raise ParameterError(f"spacing {spacing} exceeds domain length {span}")
    # tolerate lengths that are multiples of the spacing up to rounding
    n = int(math.floor(span / spacing + 1e-9))
    if alignment == "start":
        i = np.arange(n + 1)
        rho = curve.rho_min + i * spacing
    elif alignment == "centered":
        i = np.arange(n + 1) - n / 2.0
        rho = 0.5 * (curve.rho_min + curve.rho_max) + i * spacing
    else:
        i = np.arange(n) - (n - 1) / 2.0
        rho = 0.5 * (curve.rho_min + curve.rho_max) + i * spacing
    rho = np.clip(rho, curve.rho_min, curve.rho_max)
    if rho.size > 1 and curve.is_closed:
        ends = curve._eval(rho[[0, -1]])
        if np.hypot(*(ends[0] - ends[1])) < COINCIDENCE_TOL:
            rho = rho[:-1]
    rho.setflags(write=False)
    return ParametricGrid(curve, float(spacing), rho, alignment)


class SpacingCheck(NamedTuple):
    ok: bool
    max_gap: float


def adjacent_gaps(grid: ParametricGrid) -> np.ndarray:
    """Euclidean distances between physically adjacent antennas."""
    pts = grid.points
    gaps = np.hypot(*np.diff(pts, axis=0).T)
    if grid.curve.is_closed and grid.size > 2:
        gaps = np.append(gaps, np.hypot(*(pts[0] - pts[-1])))
    return gaps


def half_wavelength_check(grid: ParametricGrid) -> SpacingCheck:
    """Whether every adjacent antenna gap is at most half a wavelength."""
    if grid.size < 2:
        raise ParameterError("need at least two samples")
    gap = float(np.max(adjacent_gaps(grid)))
    return SpacingCheck(gap <= 0.5 * (1 + 1e-12), gap)
