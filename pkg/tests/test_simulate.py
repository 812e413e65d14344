import math

import numpy as np
import pytest

from rkfda import make_grid
from rkfda.kernels import BrownianBridgeKernel, BrownianKernel, OrnsteinUhlenbeckKernel
from rkfda.simulate import (
    HillsideTrend,
    LinearTrend,
    PeakTrend,
    RandomSlopeTrend,
    SmoothedBrownian,
    SumTrend,
    builtin_catalog,
    gen_model_dataset,
    gen_process,
    parse_catalog,
    standard_grid,
    trend_eval,
    trend_realize,
)


def test_peak_trend_values():
    assert trend_eval(PeakTrend(1, 1), 0.5) == pytest.approx(0.5)
    assert trend_eval(PeakTrend(1, 1), 1.0) == pytest.approx(0.0)
    assert trend_eval(PeakTrend(2, 1), 0.25) == pytest.approx(math.sqrt(2) / 4)


def test_peak_trend_validation():
    with pytest.raises(ValueError):
        PeakTrend(0, 1)
    with pytest.raises(ValueError):
        PeakTrend(2, 3)  # shift above 2^(level-1)
    PeakTrend(2, 1.25)  # fractional shifts are allowed


def test_hillside_values():
    h = HillsideTrend(t0=0.5, slope=4.0)
    assert trend_eval(h, 0.75) == pytest.approx(1.0)
    assert trend_eval(h, 0.4) == 0.0


def test_random_slope_needs_rng():
    with pytest.raises(ValueError):
        trend_eval(RandomSlopeTrend(sd=5.0), 0.5)
    rng = np.random.default_rng(0)
    t = np.array([0.0, 0.5, 1.0])
    values = trend_realize(RandomSlopeTrend(sd=5.0), t, rng)
    # one slope draw, linear in t
    assert values[2] == pytest.approx(2 * values[1])


def test_sum_trend():
    s = SumTrend(terms=(LinearTrend(2.0), HillsideTrend(0.5, 2.0)))
    assert trend_eval(s, 1.0) == pytest.approx(2.0 + 1.0)


def test_peak_derivatives_quadrature_orthonormal():
    # slopes of the triangular bumps form an orthonormal step-function family
    g = make_grid(1000, 0, 1)
    specs = [PeakTrend(1, 1), PeakTrend(2, 1), PeakTrend(2, 2), PeakTrend(3, 2)]
    derivs = [np.diff(trend_eval(s, g.points)) / g.spacing for s in specs]
    inner = np.array([[(a * b).sum() * g.spacing for b in derivs] for a in derivs])
    np.testing.assert_allclose(inner, np.eye(4), atol=0.02)


def test_brownian_variance_at_one():
    grid = standard_grid(50)
    rng = np.random.default_rng(1)
    draws = np.stack([gen_process(BrownianKernel(), grid, rng) for _ in range(20000)])
    assert draws[:, -1].var() == pytest.approx(1.0, abs=0.03)


def test_bridge_pins_to_zero():
    grid = make_grid(20, 0, 1)
    rng = np.random.default_rng(2)
    for _ in range(50):
        path = gen_process(BrownianBridgeKernel(), grid, rng)
        assert path[0] == 0.0
        assert path[-1] == 0.0


def test_bridge_covariance():
    grid = make_grid(4, 0, 1)
    rng = np.random.default_rng(3)
    draws = np.stack([gen_process(BrownianBridgeKernel(), grid, rng) for _ in range(20000)])
    c = np.cov(draws.T, bias=True)
    want = np.minimum.outer(grid.points, grid.points) - np.outer(grid.points, grid.points)
    np.testing.assert_allclose(c, want, atol=0.02)


def test_ou_stationary_covariance():
    grid = make_grid(3, 0, 1)
    rng = np.random.default_rng(4)
    draws = np.stack([gen_process(OrnsteinUhlenbeckKernel(), grid, rng) for _ in range(20000)])
    cov01 = np.cov(draws[:, 0], draws[:, 2], bias=True)[0, 1]
    assert cov01 == pytest.approx(math.exp(-1.0), abs=0.03)
    assert draws[:, 1].var() == pytest.approx(1.0, abs=0.03)


def test_smoothed_brownian_is_smoother():
    grid = standard_grid(100)
    rng = np.random.default_rng(5)
    rough = np.stack([gen_process(BrownianKernel(), grid, rng) for _ in range(200)])
    smooth = np.stack([gen_process(SmoothedBrownian(0.10), grid, rng) for _ in range(200)])
    rough_wiggle = np.mean(np.square(np.diff(rough, axis=1)))
    smooth_wiggle = np.mean(np.square(np.diff(smooth, axis=1)))
    assert smooth_wiggle < rough_wiggle / 10


def test_g2_class_means():
    model = builtin_catalog()["G2"]
    grid = standard_grid(50)
    ds = gen_model_dataset(model, 20000, grid, 6)
    m0 = ds.class_curves(0)[:, -1].mean()
    m1 = ds.class_curves(1)[:, -1].mean()
    assert m0 == pytest.approx(1.0, abs=0.03)
    assert m1 == pytest.approx(0.0, abs=0.03)


def test_logistic_link_calibration():
    # near x(t_65) = 0 the class-1 probability is one half
    model = builtin_catalog()["L1-B"]
    grid = standard_grid(100)
    ds = gen_model_dataset(model, 20000, grid, 7)
    col = grid.index_of(0.65)
    sel = np.abs(ds.curves[:, col]) < 0.05
    assert sel.sum() > 400
    assert ds.labels[sel].mean() == pytest.approx(0.5, abs=0.07)


def test_mixture_component_frequencies():
    # the bridge component of the class-0 mixture is pinned at t = 1
    model = builtin_catalog()["M7"]
    grid = standard_grid(100)
    ds = gen_model_dataset(model, 10_000, grid, 8)
    class0 = ds.class_curves(0)
    frac_bridge = np.mean(np.abs(class0[:, -1]) < 1e-12)
    assert frac_bridge == pytest.approx(0.5, abs=0.02)


def test_generation_is_deterministic():
    model = builtin_catalog()["M8"]
    grid = standard_grid(40)
    a = gen_model_dataset(model, 64, grid, 9)
    b = gen_model_dataset(model, 64, grid, 9)
    np.testing.assert_array_equal(a.curves, b.curves)
    np.testing.assert_array_equal(a.labels, b.labels)
    c = gen_model_dataset(model, 64, grid, 10)
    assert not np.array_equal(a.curves, c.curves)


def test_curve_streams_do_not_depend_on_sample_size():
    # curve i is keyed by (seed, class, i): a longer sample extends, not reshuffles
    model = builtin_catalog()["G2b"]
    grid = standard_grid(30)
    small = gen_model_dataset(model, 16, grid, 11)
    big = gen_model_dataset(model, 32, grid, 11)
    np.testing.assert_array_equal(small.curves, big.curves[:16])
    np.testing.assert_array_equal(small.labels, big.labels[:16])


def test_shifted_ou_and_smoothed_models_generate_and_select():
    # end-to-end smoke over the non-Brownian marginals
    from rkfda import SelectionConfig, greedy_select

    grid = standard_grid(50)
    for model_id in ("L1-OUt", "L1-sB", "L4-ssB"):
        ds = gen_model_dataset(builtin_catalog()[model_id], 120, grid, 13)
        assert 0 < ds.labels.mean() < 1
        result = greedy_select(ds, SelectionConfig(d_max=3, rel_tol=0.0))
        assert len(result) == 3
    # the OUt marginal actually carries the linear shift
    shifted = gen_model_dataset(builtin_catalog()["L1-OUt"], 4000, grid, 14)
    assert shifted.curves[:, -1].mean() == pytest.approx(1.0, abs=0.1)


def test_catalog_contents():
    cat = builtin_catalog()
    for model_id in ("TOY", "G2", "G8", "L1-OU", "L1-OUt", "L4-ssB", "M10"):
        assert model_id in cat
    logistic = [k for k in cat if k.startswith("L")]
    assert len({k.split("-")[0] for k in logistic}) >= 10
    assert {k.split("-")[1] for k in logistic} == {"B", "OU", "OUt", "sB", "ssB"}
    assert cat["G8"].class0.components[0].trend.terms[0].shift == 1.25
    assert cat["TOY"].relevant == (0.25, 0.375, 0.5, 0.75, 1.0)


def test_parse_catalog_rejects_garbage():
    from rkfda.core import DatasetFormatError

    with pytest.raises(DatasetFormatError):
        parse_catalog("[X]\ntype = gaussian\nclass0 = W\nclass1 = B\n")
    with pytest.raises(DatasetFormatError):
        parse_catalog("[X]\ntype = logistic\nprocess = B\nlink = 10*Y65\n")
    with pytest.raises(DatasetFormatError):
        parse_catalog("[X]\ntype = warp\nclass0 = B\nclass1 = B\n")


def test_unknown_model_id_is_rejected():
    with pytest.raises(KeyError):
        _ = builtin_catalog()["G999"]
