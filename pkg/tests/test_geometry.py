import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfalias import DomainError, ParameterError, ParametricCurve, PhysicalConfig
from nfalias.geometry import (adjacent_gaps, closest_parameter, derivative, distance_to_curve,
                              half_wavelength_check, map_point, max_speed, sample_grid)


def test_map_known_points():
    assert np.allclose(map_point(ParametricCurve.ula(10.0), 0.0), [0.0, 0.0])
    assert np.allclose(map_point(ParametricCurve.uca(1.0), 0.0), [1.0, 0.0])
    assert np.allclose(map_point(ParametricCurve.uca(2.0), math.pi / 2), [0.0, 2.0], atol=1e-15)


def test_derivative_known_values():
    assert np.allclose(derivative(ParametricCurve.ula(10.0), 3.3), [1.0, 0.0])
    assert np.allclose(derivative(ParametricCurve.uca(1.0), 0.0), [0.0, 1.0])
    assert np.allclose(derivative(ParametricCurve.uca(3.0), math.pi), [0.0, -3.0], atol=1e-14)


def test_rotated_shifted_ula():
    c = ParametricCurve.ula(4.0, center=(1.0, 2.0), orientation=math.pi / 2)
    assert np.allclose(map_point(c, 2.0), [1.0, 4.0])
    assert np.allclose(derivative(c, 0.0), [0.0, 1.0], atol=1e-15)


def test_out_of_domain_rejected():
    with pytest.raises(DomainError):
        map_point(ParametricCurve.ula(2.0), 1.5)
    with pytest.raises(DomainError):
        derivative(ParametricCurve.uca(1.0, 0.5), np.array([0.0, 0.6]))
    with pytest.raises(DomainError):
        map_point(ParametricCurve.ula(2.0), math.nan)


def test_constructor_validation():
    with pytest.raises(ParameterError):
        ParametricCurve.ula(0.0)
    with pytest.raises(ParameterError):
        ParametricCurve.uca(1.0, 4.0)
    with pytest.raises(ParameterError):
        ParametricCurve.custom([0.0, 0.0], [[0.0]], [[0.0]])
    with pytest.raises(ParameterError):
        PhysicalConfig(wavelength=-1.0)


def test_physical_config_wavenumber():
    assert PhysicalConfig().wavenumber == pytest.approx(2 * math.pi)
    assert PhysicalConfig(wavelength=0.01).to_wavelengths(1.0) == pytest.approx(100.0)


def _curves():
    return [ParametricCurve.ula(1000.0, center=(3.0, -1.0), orientation=0.3),
            ParametricCurve.uca(7.0),
            ParametricCurve.uca(1e4, 0.3 * math.pi),
            ParametricCurve.custom([0.0, 1.0, 2.0], [[0.0, 1.0], [0.0, 1.0]],
                                   [[0.0, 0.0, 1.0], [1.0, -2.0, 2.0]])]


@pytest.mark.parametrize("curve", _curves(), ids=lambda c: c.kind)
def test_derivative_matches_finite_differences(curve, rng):
    h = 1e-6 * curve.length
    rho = rng.uniform(curve.rho_min + 2 * h, curve.rho_max - 2 * h, 100)
    fd = (map_point(curve, rho + h) - map_point(curve, rho - h)) / (2 * h)
    an = derivative(curve, rho)
    err = np.hypot(*(fd - an).T) / np.hypot(*an.T)
    assert err.max() <= 1e-6


@pytest.mark.parametrize("curve", _curves(), ids=lambda c: c.kind)
def test_map_is_injective(curve, rng):
    rho = np.sort(rng.uniform(curve.rho_min, curve.rho_max, 400))
    p = map_point(curve, rho)
    d = np.hypot(*(p[:, None, :] - p[None, :, :]).T)
    iu = np.triu_indices(len(rho), 1)
    assert d[iu].min() > 1e-12


def test_uca_full_circle_endpoints_coincide():
    c = ParametricCurve.uca(5.0)
    assert c.is_closed
    assert not ParametricCurve.uca(5.0, 3.0).is_closed
    assert not ParametricCurve.ula(5.0).is_closed


def test_max_speed():
    assert max_speed(ParametricCurve.ula(3.0)) == 1.0
    assert max_speed(ParametricCurve.uca(1e4)) == 1e4
    parabola = ParametricCurve.custom([0.0, 1.0], [[0.0, 1.0]], [[0.0, 0.0, 1.0]])
    rho = np.linspace(0, 1, 100001)
    dense = np.sqrt(1 + 4 * rho ** 2).max()
    assert max_speed(parabola) == pytest.approx(math.sqrt(5), rel=1e-14)
    assert max_speed(parabola) == pytest.approx(dense, rel=1e-12)


def test_max_speed_interior_maximum():
    # speed^2 = 1 + (1 - 4 (rho - 1/2)^2)^2 peaks inside the domain
    c = ParametricCurve.custom([0.0, 1.0], [[0.0, 1.0]], [[0.0, 0.0, 2.0, -4.0 / 3.0]])
    rho = np.linspace(0, 1, 200001)
    v = derivative(c, rho)
    assert max_speed(c) == pytest.approx(np.hypot(*v.T).max(), rel=1e-9)


def test_toy_grid_count_and_origin():
    g = sample_grid(ParametricCurve.ula(1000.0), 10.0, "centered")
    assert g.size == 101
    assert 0.0 in g.samples
    assert g.samples[0] == -500.0 and g.samples[-1] == 500.0


def test_start_grid_on_unit_domain():
    c = ParametricCurve.custom([0.0, 1.0], [[0.0, 1.0]], [[0.0]])
    assert sample_grid(c, 0.5, "start").samples.tolist() == [0.0, 0.5, 1.0]


def test_midpoint_grid_places_cell_centres():
    g = sample_grid(ParametricCurve.ula(1000.0), 10.0, "midpoint")
    assert g.size == 100
    assert g.samples[0] == -495.0 and g.samples[-1] == 495.0


def test_uca_start_grid_drops_duplicate_endpoint():
    c = ParametricCurve.uca(1.0)
    d = 2 * math.pi / 200
    # direct enumeration gives 201 parameters, the last landing on the first antenna
    raw = -math.pi + d * np.arange(int(math.floor(2 * math.pi / d + 1e-9)) + 1)
    assert raw.size == 201
    g = sample_grid(c, d, "start")
    assert g.size == 200
    assert np.allclose(g.samples, raw[:200])


def test_grid_uses_integer_multiples(rng):
    c = ParametricCurve.ula(997.3)
    d = 0.7
    g = sample_grid(c, d, "start")
    expected = c.rho_min + np.arange(g.size) * d
    assert np.array_equal(g.samples, np.clip(expected, c.rho_min, c.rho_max))
    # consecutive differences deviate from the spacing only by rounding
    assert np.abs(np.diff(g.samples) - d).max() <= 4 * np.finfo(float).eps * 500


def test_grid_is_read_only():
    g = sample_grid(ParametricCurve.ula(10.0), 1.0)
    with pytest.raises(ValueError):
        g.samples[0] = 3.0


def test_grid_validation():
    c = ParametricCurve.ula(10.0)
    with pytest.raises(ParameterError):
        sample_grid(c, 0.0)
    with pytest.raises(ParameterError):
        sample_grid(c, 11.0)
    with pytest.raises(ParameterError):
        sample_grid(c, 1.0, "left")


def test_half_wavelength_check():
    c = ParametricCurve.ula(100.0)
    ok = half_wavelength_check(sample_grid(c, 0.5))
    assert ok.ok and ok.max_gap == pytest.approx(0.5)
    bad = half_wavelength_check(sample_grid(ParametricCurve.ula(1000.0), 10.0))
    assert not bad.ok and bad.max_gap == pytest.approx(10.0)


def test_uca_chord_gap():
    g = sample_grid(ParametricCurve.uca(1e4), 2 * math.pi / 2000, "start")
    res = half_wavelength_check(g)
    assert not res.ok
    assert res.max_gap == pytest.approx(2e4 * math.sin(math.pi / 2000), rel=1e-9)
    assert res.max_gap == pytest.approx(31.4159, abs=1e-3)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(range(4)), st.floats(0.01, 0.5), st.sampled_from(["start", "centered", "midpoint"]))
def test_adjacent_gap_bounded_by_speed(which, frac, alignment):
    curve = _curves()[which]
    d = frac * curve.length / 8
    g = sample_grid(curve, d, alignment)
    consecutive = np.hypot(*np.diff(g.points, axis=0).T)
    assert consecutive.max() <= d * max_speed(curve) * (1 + 1e-12)


def test_closed_curve_wrap_gap_is_reported():
    # 2 pi is not a multiple of the spacing, so the seam gap exceeds it
    g = sample_grid(ParametricCurve.uca(7.0), 0.0736, "midpoint")
    gaps = adjacent_gaps(g)
    assert gaps.size == g.size
    assert gaps[-1] > 0.0736 * 7.0
    assert half_wavelength_check(g).max_gap == gaps.max()


def test_closest_point_and_distance():
    c = ParametricCurve.ula(10.0)
    assert closest_parameter(c, [2.0, 3.0]) == pytest.approx(2.0)
    assert distance_to_curve(c, [8.0, 0.0]) == pytest.approx(3.0)
    u = ParametricCurve.uca(2.0, math.pi / 4)
    assert distance_to_curve(u, [0.0, 0.0]) == pytest.approx(2.0)
    assert closest_parameter(u, [-1.0, 0.1]) == pytest.approx(math.pi / 4)
    p = ParametricCurve.custom([0.0, 1.0], [[0.0, 1.0]], [[0.0, 0.0, 1.0]])
    assert distance_to_curve(p, [0.5, 0.25]) == pytest.approx(0.0, abs=1e-10)


def test_curves_are_hashable_values():
    assert ParametricCurve.ula(10.0) == ParametricCurve.ula(10.0)
    assert len({ParametricCurve.ula(10.0), ParametricCurve.ula(10.0), ParametricCurve.uca(1.0)}) == 2
