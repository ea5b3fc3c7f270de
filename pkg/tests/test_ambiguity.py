import csv
import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from nfalias import MatchedSignalContext, ParametricCurve, ParametricGrid, ResourceError, sample_grid
from nfalias.ambiguity import (af_continuous, af_discrete, af_grid, af_points, compensated_sum,
                               pair_band_bound, quadrature_step, richardson_weights, to_db,
                               write_af_csv, write_af_json)
from nfalias.field import matched_signal
from nfalias.geometry import K_C
from nfalias.spectral import soft_band_limit_pair

TOY = ParametricCurve.ula(1000.0)
X = np.array([0.0, 600.0])


def _ctx(xt, x=X, curve=TOY):
    return MatchedSignalContext(curve, np.asarray(xt, dtype=float), np.asarray(x, dtype=float))


def test_compensated_sum_matches_fsum(rng):
    terms = rng.standard_normal((3, 5000)) * 10.0 ** rng.integers(-8, 8, (3, 5000))
    out = compensated_sum(terms)
    for row, v in zip(terms, out):
        assert v == math.fsum(row)
    z = terms[0] + 1j * terms[1]
    assert compensated_sum(z) == complex(math.fsum(z.real), math.fsum(z.imag))


def test_richardson_weights_are_simpson():
    rho, w = richardson_weights(ParametricCurve.ula(2.0), 0.25)
    assert rho.size == 9
    assert np.allclose(w * 3 / 0.25, [1, 4, 2, 4, 2, 4, 2, 4, 1])
    # Simpson error bound (b - a) h^4 max|f(4)| / 180 = 4.3e-5
    assert abs(w @ np.cos(rho) - 2 * math.sin(1.0)) <= 2 * 0.25 ** 4 / 180


def test_quadrature_step_rules():
    h = quadrature_step(TOY)
    assert h == pytest.approx(math.pi / (8 * 2 * K_C))
    assert quadrature_step(TOY, 0.1) == 0.1
    with pytest.raises(ValueError):
        quadrature_step(TOY, "coarse")
    with pytest.raises(ValueError):
        quadrature_step(TOY, -1.0)
    pair = quadrature_step(TOY, "pair", np.array([0.0, 700.0]), X)
    assert h < pair <= TOY.length / 64


def test_pair_band_bound_dominates_numeric(rng):
    for _ in range(50):
        xt = np.array([rng.uniform(-800, 800), rng.uniform(1, 900)])
        x = np.array([rng.uniform(-800, 800), rng.uniform(1, 900)])
        k = soft_band_limit_pair(TOY, xt, x).K
        assert k <= float(pair_band_bound(TOY, xt, x)) * (1 + 1e-12)


def test_autocorrelation_is_one():
    for x in ([0.0, 600.0], [300.0, 5.0], [-900.0, 40.0]):
        assert af_continuous(_ctx(x, x)) == pytest.approx(1.0, abs=1e-6)
    uca = ParametricCurve.uca(20.0)
    assert af_continuous(_ctx([3.0, -4.0], [3.0, -4.0], uca)) == pytest.approx(1.0, abs=1e-6)


def test_continuous_af_bounded(rng):
    for _ in range(100):
        xt = np.array([rng.uniform(-800, 800), rng.uniform(1, 900)])
        x = np.array([rng.uniform(-800, 800), rng.uniform(1, 900)])
        assert abs(af_continuous(_ctx(xt, x))) <= 1 + 1e-6


def test_toy_continuous_af_against_refined_oracles():
    ctx = _ctx([0.0, 700.0])
    a = af_continuous(ctx)
    fine = af_continuous(ctx, quadrature_step(TOY) / 4)
    assert abs(a - fine) <= 1e-4
    re, _ = quad(lambda r: matched_signal(ctx, r).real, -500, 500, limit=5000, epsabs=1e-12)
    im, _ = quad(lambda r: matched_signal(ctx, r).imag, -500, 500, limit=5000, epsabs=1e-12)
    assert abs(a - complex(re, im)) <= 1e-4


def test_discrete_autocorrelation_close_to_one():
    grid = sample_grid(ParametricCurve.ula(100.0), 0.5)
    for x in ([0.0, 10.0], [20.0, 3.0]):
        ctx = _ctx(x, x, grid.curve)
        assert abs(af_discrete(ctx, grid) - af_continuous(ctx)) <= 2e-2


def test_toy_no_visible_artifact():
    grid = sample_grid(TOY, 10.0, "midpoint")
    ctx = _ctx([0.0, 700.0])
    assert abs(af_discrete(ctx, grid) - af_continuous(ctx)) < 0.05


def test_duplicated_half_weight_grid_is_equivalent():
    grid = sample_grid(TOY, 10.0)
    dup = ParametricGrid(TOY, 5.0, np.repeat(grid.samples, 2), grid.alignment)
    ctx = _ctx([30.0, 650.0])
    assert af_discrete(ctx, dup) == pytest.approx(af_discrete(ctx, grid), rel=1e-14)


def test_grid_from_other_curve_rejected():
    with pytest.raises(ValueError):
        af_discrete(_ctx([0.0, 700.0]), sample_grid(ParametricCurve.ula(100.0), 1.0))


def test_discrete_af_is_hermitian(rng):
    grid = sample_grid(TOY, 10.0)
    for _ in range(20):
        xt = np.array([rng.uniform(-800, 800), rng.uniform(1, 900)])
        x = np.array([rng.uniform(-800, 800), rng.uniform(1, 900)])
        assert af_discrete(_ctx(xt, x), grid) == np.conj(af_discrete(_ctx(x, xt), grid))


def test_main_lobe_dominates_at_half_wavelength(rng):
    curve = ParametricCurve.ula(100.0)
    grid = sample_grid(curve, 0.5)
    x = np.array([5.0, 20.0])
    peak = abs(af_discrete(_ctx(x, x, curve), grid))
    pts = np.stack([rng.uniform(-60, 60, 300), rng.uniform(0.5, 60, 300)], axis=-1)
    a_s, _ = af_points(curve, x, pts, grid)
    assert np.all(peak >= np.abs(a_s) - 5e-2)


def test_af_points_matches_single_evaluations():
    grid = sample_grid(TOY, 10.0)
    pts = np.array([[0.0, 700.0], [-40.0, 500.0], [10.0, 601.0]])
    a_s, a = af_points(TOY, X, pts, grid, continuous=True)
    for p, vs, v in zip(pts, a_s, a):
        assert vs == af_discrete(_ctx(p), grid)
        assert v == pytest.approx(af_continuous(_ctx(p)), abs=1e-12)


def test_af_grid_peak_at_true_location():
    grid = sample_grid(TOY, 10.0, "midpoint")
    res = af_grid(TOY, grid, X, (-100, 100, 500, 700), 41)
    j, i = np.unravel_index(np.argmax(np.abs(res.values)), res.values.shape)
    assert (res.xs[i], res.ys[j]) == (0.0, 600.0)
    assert res.kind == "discrete" and res.values.shape == (41, 41)


def test_large_grid_matches_pointwise_evaluation(rng):
    grid = sample_grid(TOY, 10.0)
    assert grid.size == 101
    res = af_grid(TOY, grid, X, (-400, 400, 200, 1000), 400)
    assert res.values.shape == (400, 400)
    for _ in range(25):
        j, i = rng.integers(0, 400, 2)
        assert res.values[j, i] == af_discrete(_ctx([res.xs[i], res.ys[j]]), grid)


def test_grid_masks_nodes_on_the_array():
    res = af_grid(ParametricCurve.ula(10.0), 1.0, [0.0, 3.0], (-4, 4, -2, 2), 5)
    assert res.masked[2].all() and res.masked.sum() == 5
    assert np.all(res.values[res.masked] == 0)
    with pytest.raises(ValueError):
        af_grid(ParametricCurve.ula(10.0), 1.0, [1.0, 0.0], (-4, 4, 1, 2), 5)


def test_grid_is_reproducible_and_worker_independent():
    grid = sample_grid(TOY, 10.0)
    kw = dict(region=(-200, 200, 300, 900), resolution=(70, 90))
    a = af_grid(TOY, grid, X, **kw)
    b = af_grid(TOY, grid, X, **kw)
    c = af_grid(TOY, grid, X, workers=2, **kw)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.values, c.values)


def test_continuous_grid_uses_quadrature():
    res = af_grid(TOY, 10.0, X, (-10, 10, 590, 610), 3, continuous=True)
    assert res.kind == "continuous"
    assert res.values[1, 1] == pytest.approx(1.0, abs=1e-6)
    assert res.step == pytest.approx(quadrature_step(TOY))


def test_quadrature_budget_enforced():
    huge = ParametricCurve.uca(1e7)
    with pytest.raises(ResourceError) as err:
        af_continuous(_ctx([0.0, 0.0], [1.0, 0.0], huge))
    assert err.value.required > 2 ** 24


def test_writers(tmp_path):
    res = af_grid(TOY, 10.0, X, (-10, 10, 590, 610), 3)
    write_af_csv(res, tmp_path / "g.csv", -120.0)
    write_af_json(res, tmp_path / "g.json", {"note": "x"})
    raw = (tmp_path / "g.csv").read_bytes()
    assert b"\r" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == ["x_t", "y_t", "re", "im", "abs", "masked", "abs_db"]
    assert len(rows) == 10
    assert float(rows[5][4]) == pytest.approx(abs(res.values[1, 1]))
    meta = json.loads((tmp_path / "g.json").read_text())
    assert meta["note"] == "x" and meta["resolution"] == [3, 3]


def test_to_db_floor():
    assert to_db(0.0) == -120.0
    assert to_db(1e-9, -100.0) == -100.0
    assert to_db(0.1) == pytest.approx(-20.0)
