"""Aliasing-free regions and aliasing-safe operating domains.

A tested location xt is aliasing free for x when K(xt, x) <= 2 pi / spacing,
with K and the spacing in the same parametric units. K functions take
broadcastable arrays of tested and true locations (trailing axis 2) and
return an array of band limits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import ConvexHull, cKDTree
from scipy.spatial.distance import pdist
from skimage.measure import find_contours, points_in_poly

from . import closedform as cf
from .errors import DomainError, ParameterError
from .field import SINGULAR_DISTANCE
from .geometry import ULA, ParametricCurve, distance_to_curve
from .spectral import numeric_band_limit_values

LEVEL_RTOL = 0.01
COMPARE_RTOL = 1e-12
SAMPLES_PER_DIAMETER = 16
AXIS_GUARD = 1e-6


@dataclass(frozen=True)
class BandLimitField:
    """A named, vectorized K(xt, x).

    `symmetric` declares K(xt, x) = K(x, xt), which lets pair scans skip
    half the work. Locations where K is undefined evaluate to nan.
    """

    fn: Callable
    name: str
    symmetric: bool = True
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, xt, x):
        return self.fn(xt, x)

    @classmethod
    def infinite_ula(cls):
        return cls(_guard_axis(cf.k_inf_ula_values), "closed-form:ula-infinite")

    @classmethod
    def finite_ula(cls, length):
        L = float(length)
        return cls(_guard_axis(lambda xt, x: cf.k_finite_ula_values(L, xt, x)),
                   "closed-form:ula-finite", params={"length": L})

    @classmethod
    def uca(cls, half_aperture=math.pi):
        psi = float(half_aperture)
        return cls(lambda xt, x: cf.k_uca_values(xt, x, psi), "closed-form:uca",
                   params={"half_aperture": psi})

    @classmethod
    def numeric(cls, curve: ParametricCurve):
        def fn(xt, x):
            xt, x = np.broadcast_arrays(np.asarray(xt, dtype=float), np.asarray(x, dtype=float))
            bad = (distance_to_curve(curve, xt) < SINGULAR_DISTANCE) | (distance_to_curve(curve, x) < SINGULAR_DISTANCE)
            out = np.full(xt.shape[:-1], np.nan)
            ok = ~bad
            if np.any(ok):
                out[ok] = numeric_band_limit_values(curve, xt[ok], x[ok])
            return out

        return cls(fn, "numeric", params={"curve": curve.describe()})

    @classmethod
    def for_curve(cls, curve: ParametricCurve, method="closed-form"):
        """Closed-form field for ULA/UCA curves (ULA in its own frame), or numeric."""
        if method == "numeric" or curve.kind not in (ULA, "uca"):
            return cls.numeric(curve)
        if curve.kind == ULA:
            base = cls.finite_ula(curve.length)
            return cls(lambda xt, x: base(cf.to_ula_frame(curve, xt), cf.to_ula_frame(curve, x)),
                       base.name, params=dict(base.params, frame=curve.describe()))
        return cls.uca(curve.half_aperture)


def _guard_axis(fn):
    def wrapped(xt, x):
        xt, x = np.broadcast_arrays(np.asarray(xt, dtype=float), np.asarray(x, dtype=float))
        bad = (np.abs(xt[..., 1]) < AXIS_GUARD) | (np.abs(x[..., 1]) < AXIS_GUARD)
        if not np.any(bad):
            return fn(xt, x)
        safe_t = np.where(bad[..., None], 1.0, xt)
        safe_x = np.where(bad[..., None], 1.0, x)
        return np.where(bad, np.nan, fn(safe_t, safe_x))
    return wrapped


def _level(spacing):
    if not (spacing > 0 and math.isfinite(spacing)):
        raise ParameterError(f"spacing must be positive, got {spacing}")
    return 2.0 * math.pi / spacing


def is_aliasing_free(K_fn, xt, x, spacing) -> bool:
    """K(xt, x) <= 2 pi / spacing (with a relative slack of 1e-12)."""
    k = float(np.asarray(K_fn(np.asarray(xt, dtype=float), np.asarray(x, dtype=float))))
    if math.isnan(k):
        raise DomainError("band limit undefined at this location")
    return k <= _level(spacing) * (1 + COMPARE_RTOL)


# -- contours ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AfrContour:
    x: tuple
    spacing: float
    level: float
    polylines: list = field(repr=False)
    method: str
    resolution: tuple
    region: tuple
    status: str  # crossing | all-free | all-aliased
    max_level_error: float = 0.0

    @property
    def closed(self):
        return [bool(len(p) > 2 and np.allclose(p[0], p[-1])) for p in self.polylines]

    def rows(self):
        for i, poly in enumerate(self.polylines):
            for j, (px, py) in enumerate(poly):
                yield i, j, float(px), float(py)

    def to_geojson(self) -> dict:
        feats = []
        for i, (poly, closed) in enumerate(zip(self.polylines, self.closed)):
            feats.append({"type": "Feature",
                          "geometry": {"type": "LineString", "coordinates": poly.tolist()},
                          "properties": {"polyline_id": i, "closed": closed}})
        return {"type": "FeatureCollection", "features": feats,
                "properties": {"x": list(self.x), "spacing": self.spacing, "level": self.level,
                               "method": self.method, "resolution": list(self.resolution),
                               "region": list(self.region), "status": self.status,
                               "max_level_error": self.max_level_error}}


def _node_axes(region, resolution):
    xmin, xmax, ymin, ymax = (float(v) for v in region)
    if not (xmin < xmax and ymin < ymax) or not all(map(math.isfinite, (xmin, xmax, ymin, ymax))):
        raise ParameterError(f"invalid region {region}")
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    nx, ny = int(nx), int(ny)
    if nx < 16 or ny < 16:
        raise ParameterError("contour resolution must be at least 16 x 16")
    return np.linspace(xmin, xmax, nx), np.linspace(ymin, ymax, ny)


def band_limit_grid(K_fn, x, region, resolution):
    """K(node, x) on the region grid; returns (xs, ys, K with shape (ny, nx))."""
    xs, ys = _node_axes(region, resolution)
    nodes = np.stack(np.meshgrid(xs, ys), axis=-1)
    return xs, ys, np.asarray(K_fn(nodes, np.asarray(x, dtype=float)), dtype=float)


def afr_contour(K_fn, x, spacing, region, resolution, method=None) -> AfrContour:
    """Level set K(., x) = 2 pi / spacing over a rectangular region.

    Marching squares gives the polylines; every vertex is then moved onto
    the level set by root finding along its grid edge.
    """
    level = _level(spacing)
    x = np.asarray(x, dtype=float).reshape(2)
    xs, ys, Kg = band_limit_grid(K_fn, x, region, resolution)
    valid = np.isfinite(Kg)
    method = method or getattr(K_fn, "name", "custom")
    res = (len(xs), len(ys))
    base = (tuple(x.tolist()), float(spacing), level)
    reg = tuple(float(v) for v in region)
    kv = Kg[valid]
    if kv.size == 0 or np.all(kv <= level):
        return AfrContour(*base, [], method, res, reg, "all-free")
    if np.all(kv > level):
        return AfrContour(*base, [], method, res, reg, "all-aliased")
    raw = find_contours(np.where(valid, Kg, 0.0), level, mask=valid)
    dx, dy = xs[1] - xs[0], ys[1] - ys[0]
    polys = []
    worst = 0.0
    for c in raw:
        pts = np.empty((len(c), 2))
        for k, (r, q) in enumerate(c):
            pts[k] = _refine_vertex(K_fn, x, level, xs, ys, Kg, r, q, dx, dy)
        kk = np.asarray(K_fn(pts, x), dtype=float)
        worst = max(worst, float(np.max(np.abs(kk - level)) / level))
        polys.append(pts)
    return AfrContour(*base, polys, method, res, reg, "crossing", worst)


def _refine_vertex(K_fn, x, level, xs, ys, Kg, r, q, dx, dy):
    px, py = xs[0] + q * dx, ys[0] + r * dy
    ri, qi = int(round(r)), int(round(q))
    if abs(r - ri) < 1e-9:
        q0 = int(math.floor(q))
        q1 = min(q0 + 1, len(xs) - 1)
        a, b = np.array([xs[q0], ys[ri]]), np.array([xs[q1], ys[ri]])
        fa, fb = Kg[ri, q0] - level, Kg[ri, q1] - level
    else:
        r0 = int(math.floor(r))
        r1 = min(r0 + 1, len(ys) - 1)
        a, b = np.array([xs[qi], ys[r0]]), np.array([xs[qi], ys[r1]])
        fa, fb = Kg[r0, qi] - level, Kg[r1, qi] - level
    if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0 or np.array_equal(a, b):
        return px, py
    if fa == 0:
        return tuple(a)
    if fb == 0:
        return tuple(b)

    def f(t):
        return float(np.asarray(K_fn(a + t * (b - a), x))) - level

    t = brentq(f, 0.0, 1.0, xtol=1e-12)
    p = a + t * (b - a)
    return float(p[0]), float(p[1])


# -- operating domains -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OperatingDomain:
    """A set of candidate source locations, sampled on a lattice plus its boundary."""

    shape: str
    params: dict
    samples: np.ndarray = field(repr=False)
    spacing: Optional[float]
    diameter: float

    @property
    def size(self) -> int:
        return len(self.samples)

    @property
    def confidence(self) -> str:
        """'nominal' when the lattice has at least 16 samples per diameter."""
        if self.spacing is None:
            return "given"
        if self.diameter == 0:
            return "nominal"
        return "nominal" if self.spacing <= self.diameter / SAMPLES_PER_DIAMETER else "low"

    def describe(self) -> dict:
        return {"shape": self.shape, "params": self.params, "samples": self.size,
                "spacing": self.spacing, "diameter": self.diameter, "confidence": self.confidence}

    @classmethod
    def points(cls, pts):
        pts = np.array(pts, dtype=float).reshape(-1, 2)
        if len(pts) == 0:
            raise ParameterError("a domain needs at least one point")
        return cls("points", {}, pts, None, _diameter(pts))

    @classmethod
    def disc(cls, center, radius, spacing):
        c = np.asarray(center, dtype=float).reshape(2)
        _check_spacing(spacing)
        if not radius > 0:
            raise ParameterError("disc radius must be positive")
        lat = _lattice(c[0] - radius, c[0] + radius, c[1] - radius, c[1] + radius, spacing)
        lat = lat[np.hypot(*(lat - c).T) <= radius * (1 + 1e-12)]
        nb = max(8, 2 * int(math.ceil(math.pi * radius / spacing)))
        ang = 2 * math.pi * np.arange(nb) / nb
        ring = c + radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        pts = _merge(ring, lat, spacing)
        return cls("disc", {"center": c.tolist(), "radius": float(radius)}, pts, float(spacing), 2.0 * radius)

    @classmethod
    def rectangle(cls, xmin, xmax, ymin, ymax, spacing):
        if not (xmin < xmax and ymin < ymax):
            raise ParameterError("empty rectangle")
        verts = [(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)]
        dom = cls.polygon(verts, spacing)
        return cls("rectangle", {"x": [xmin, xmax], "y": [ymin, ymax]}, dom.samples, dom.spacing, dom.diameter)

    @classmethod
    def polygon(cls, vertices, spacing):
        v = np.asarray(vertices, dtype=float).reshape(-1, 2)
        if len(v) < 3:
            raise ParameterError("a polygon needs at least three vertices")
        _check_spacing(spacing)
        lo, hi = v.min(axis=0), v.max(axis=0)
        lat = _lattice(lo[0], hi[0], lo[1], hi[1], spacing)
        lat = lat[points_in_poly(lat, v)] if len(lat) else lat
        edges = []
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            n = max(1, int(math.ceil(np.hypot(*(b - a)) / spacing)))
            t = np.arange(n)[:, None] / n
            edges.append(a + t * (b - a))
        pts = _merge(np.concatenate(edges), lat, spacing)
        return cls("polygon", {"vertices": v.tolist()}, pts, float(spacing), _diameter(v))


def _check_spacing(spacing):
    if not (spacing > 0 and math.isfinite(spacing)):
        raise ParameterError("sampling spacing must be positive")


def _lattice(xmin, xmax, ymin, ymax, h):
    gx = xmin + h * np.arange(int(math.floor((xmax - xmin) / h + 1e-9)) + 1)
    gy = ymin + h * np.arange(int(math.floor((ymax - ymin) / h + 1e-9)) + 1)
    return np.stack(np.meshgrid(gx, gy), axis=-1).reshape(-1, 2)


def _merge(boundary, interior, h):
    """Boundary samples plus interior lattice points not crowding them."""
    if len(interior):
        d, _ = cKDTree(boundary).query(interior)
        interior = interior[d > 1e-6 * h]
    return np.concatenate([boundary, interior])


def _diameter(pts):
    if len(pts) < 2:
        return 0.0
    try:
        hull = pts[ConvexHull(pts).vertices]
    except Exception:  # collinear or degenerate sets
        hull = pts
    return float(pdist(hull).max())


# -- pair scans --------------------------------------------------------------

_PAIR_BLOCK = 1 << 18


def max_pair_band_limit(K_fn, domain: OperatingDomain):
    """(K_max, i, j) over ordered sample pairs; (0, 0, 0) for one sample."""
    pts = domain.samples
    n = len(pts)
    if n < 2:
        return 0.0, 0, 0
    sym = getattr(K_fn, "symmetric", False)
    if sym:
        ii, jj = np.triu_indices(n, 1)
    else:
        ii, jj = np.nonzero(~np.eye(n, dtype=bool))
    best, bi, bj = -1.0, 0, 0
    for s in range(0, len(ii), _PAIR_BLOCK):
        a, b = ii[s:s + _PAIR_BLOCK], jj[s:s + _PAIR_BLOCK]
        k = np.asarray(K_fn(pts[a], pts[b]), dtype=float)
        if np.any(np.isnan(k)):
            raise DomainError("band limit undefined for some domain samples")
        m = int(np.argmax(k))
        if k[m] > best:
            best, bi, bj = float(k[m]), int(a[m]), int(b[m])
    return best, bi, bj


@dataclass(frozen=True)
class AsodVerdict:
    ok: bool
    K_max: float
    level: float
    worst_pair: tuple  # (tested, true)
    samples: int
    confidence: str
    spacing: float

    def to_dict(self) -> dict:
        return {"verdict": self.ok, "K_max": self.K_max, "level": self.level,
                "worst_pair": {"tested": list(self.worst_pair[0]), "true": list(self.worst_pair[1])},
                "samples": self.samples, "confidence": self.confidence, "spacing": self.spacing}


def asod_check(K_fn, domain: OperatingDomain, spacing) -> AsodVerdict:
    """Whether every sampled pair of the domain is aliasing free."""
    level = _level(spacing)
    k, i, j = max_pair_band_limit(K_fn, domain)
    pts = domain.samples
    ok = k <= level * (1 + COMPARE_RTOL)
    return AsodVerdict(bool(ok), max(k, 0.0), level, (tuple(pts[i].tolist()), tuple(pts[j].tolist())),
                       domain.size, domain.confidence, float(spacing))


def max_safe_spacing(K_fn, domain: OperatingDomain) -> float:
    """Largest spacing for which the sampled domain is aliasing safe (inf if unbounded)."""
    k, _, _ = max_pair_band_limit(K_fn, domain)
    return math.inf if k <= 0 else 2.0 * math.pi / k


@dataclass(frozen=True)
class InclusionReport:
    pairs: int
    violations: int
    max_excess: float
    violating: np.ndarray = field(repr=False)
    equal: bool

    def to_dict(self) -> dict:
        return {"pairs": self.pairs, "violations": self.violations, "max_excess": self.max_excess,
                "equal": self.equal, "violating_indices": self.violating.tolist()}


def inclusion_audit(K_fn_1, K_fn_2, xt, x, rtol=1e-9) -> InclusionReport:
    """Check K2 >= K1 at every sample pair (the larger array sees more)."""
    xt = np.asarray(xt, dtype=float)
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(K_fn_1(xt, x), dtype=float).ravel()
    k2 = np.asarray(K_fn_2(xt, x), dtype=float).ravel()
    slack = rtol * np.maximum(np.abs(k1), np.abs(k2))
    bad = k2 < k1 - slack
    excess = np.where(bad, k1 - k2, 0.0)
    return InclusionReport(int(k1.size), int(bad.sum()), float(excess.max(initial=0.0)),
                           np.flatnonzero(bad), bool(np.array_equal(k1, k2)))
