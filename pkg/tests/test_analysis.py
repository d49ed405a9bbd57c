import numpy as np
import pytest

from groupsample import (
    EuclideanModel,
    HeisenbergModel,
    Grid,
    GridFunction,
    convolve,
    oscillation,
    osc_conv_check,
    vector_field_apply,
    apply_multiindex,
    sublaplacian_matrix,
    sublaplacian_spectrum,
    random_bandlimited,
    oscillation_scaling_check,
    ball_volume,
)
from groupsample.analysis import homogeneity_degree, projector_dilation_angle


def _gauss(grid, center, width):
    pts = grid.points()
    e = np.zeros(grid.shape)
    for d in range(grid.dim):
        e += (pts[..., d] - center[d]) ** 2
    return GridFunction(grid, np.exp(-e / (2 * width**2)))


def test_convolve_matches_direct_sum():
    grid = Grid.regular(EuclideanModel(1), [-8.0], [8.0], (128,))
    f = _gauss(grid, [0.5], 0.6)
    g = _gauss(grid, [-0.3], 0.8)
    c = convolve(f, g)
    # direct quadrature oracle at a few nodes
    x = grid.points().reshape(-1)
    w = grid.spacings[0]
    for i in (20, 64, 100):
        direct = w * np.sum(f.values.real * np.interp(x[i] - x, x, g.values.real))
        assert c.values.reshape(-1)[i].real == pytest.approx(direct, abs=1e-10)


def test_convolve_commutes_euclidean():
    grid = Grid.regular(EuclideanModel(1), [-8.0], [8.0], (128,))
    f = _gauss(grid, [0.7], 0.5)
    g = _gauss(grid, [-1.0], 0.9)
    assert np.allclose(convolve(f, g).values, convolve(g, f).values, atol=1e-10)


def test_oscillation_linear_function():
    grid = Grid.regular(EuclideanModel(1), [-4.0], [4.0], (512,))
    f = GridFunction.from_callable(grid, lambda x: 3.0 * x)
    osc = oscillation(f, 0.25)
    mask = np.abs(grid.points().reshape(-1)) < 3.0
    vals = osc.values.reshape(-1).real[mask]
    # sup over |y| <= r of |f(x) - f(x - y)| = 3 r for linear f
    assert np.all(vals <= 3 * 0.25 + 1e-9)
    assert vals.max() == pytest.approx(0.75, rel=0.05)


def test_oscillation_constant_vanishes():
    grid = Grid.regular(EuclideanModel(1), [-2.0], [2.0], (64,))
    f = GridFunction(grid, np.full(grid.shape, 2.5))
    # interior only: shifts past the box edge fall onto the zero padding
    mask = np.abs(grid.points().reshape(grid.shape)) < 1.5
    assert oscillation(f, 0.3).norm_sup(mask) == pytest.approx(0.0, abs=1e-12)


def test_osc_conv_inequality_euclidean():
    grid = Grid.regular(EuclideanModel(1), [-8.0], [8.0], (256,))
    f = _gauss(grid, [0.0], 0.7)
    g = _gauss(grid, [0.5], 0.9)
    rep = osc_conv_check(f, g, 0.4, seed=3)
    assert rep["max_violation"] < 1e-6


def test_vector_fields_heisenberg_polynomials():
    grid = Grid.regular(HeisenbergModel(), [-2.0] * 3, [2.0] * 3, (33,) * 3)
    # f = t: X f = -y/2, Y f = x/2, T f = 1
    f = GridFunction.from_callable(grid, lambda x, y, t: t)
    pts = grid.points()
    m = np.s_[4:-4, 4:-4, 4:-4]
    xf = vector_field_apply(0, f).values.real
    yf = vector_field_apply(1, f).values.real
    tf = vector_field_apply(2, f).values.real
    assert np.allclose(xf[m], -pts[..., 1][m] / 2, atol=1e-9)
    assert np.allclose(yf[m], pts[..., 0][m] / 2, atol=1e-9)
    assert np.allclose(tf[m], 1.0, atol=1e-9)


def test_homogeneity_degrees():
    model = HeisenbergModel()
    assert homogeneity_degree(model, (1, 0, 0)) == 1
    assert homogeneity_degree(model, (0, 0, 1)) == 2
    assert homogeneity_degree(model, (1, 1, 1)) == 4


def test_apply_multiindex_matches_composition():
    grid = Grid.regular(HeisenbergModel(), [-2.0] * 3, [2.0] * 3, (17,) * 3)
    f = _gauss(grid, [0.0, 0.0, 0.0], 0.8)
    a = apply_multiindex((1, 1, 0), f)
    b = vector_field_apply(1, vector_field_apply(0, f))
    assert np.allclose(a.values, b.values, atol=1e-12)


def test_sublaplacian_symmetric():
    grid = Grid.regular(HeisenbergModel(), [-2.0] * 3, [2.0] * 3, (9,) * 3)
    L = sublaplacian_matrix(grid)
    assert abs(L - L.T).max() < 1e-12


def test_spectrum_bernstein_and_cache(h1_grid, h1_proj, cache_dir):
    omega = h1_proj.omega
    assert np.all(h1_proj.eigenvalues <= omega + 1e-12)
    assert np.all(h1_proj.eigenvalues >= 0)
    L = sublaplacian_matrix(h1_grid)
    v = h1_proj.eigenvectors[0].reshape(-1)
    lam = h1_proj.eigenvalues[0]
    assert np.linalg.norm(L @ v - lam * v) < 1e-8 * np.linalg.norm(v)
    # second call must come from the cache with identical content
    again = sublaplacian_spectrum(h1_grid, omega, cache_dir=cache_dir)
    assert np.allclose(again.eigenvalues, h1_proj.eigenvalues)


def test_projection_idempotent(h1_proj):
    f = random_bandlimited(h1_proj, seed=4)
    pf = h1_proj.project(f)
    assert (pf - f).norm_l2() < 1e-10 * f.norm_l2()


def test_ball_volume_closed_forms():
    assert ball_volume(EuclideanModel(1), 2.0) == pytest.approx(4.0)
    assert ball_volume(EuclideanModel(2), 1.0) == pytest.approx(np.pi)
    v1 = ball_volume(HeisenbergModel(), 1.0)
    v2 = ball_volume(HeisenbergModel(), 2.0)
    assert v2 / v1 == pytest.approx(16.0)
    # Koranyi unit ball: slice thickness sqrt(1 - rho^4)/2 integrates to pi^2/8
    assert v1 == pytest.approx(np.pi**2 / 8.0, rel=2e-2)


def test_scaling_check_rejects_large_radius(h1_proj):
    with pytest.raises(ValueError):
        oscillation_scaling_check(h1_proj, (0.5, 2.0), 100.0)


def test_dilation_angle_small(h1_proj, cache_dir):
    angle = projector_dilation_angle(h1_proj, 2.0**-0.25, cache_dir=cache_dir)
    assert angle <= 5e-2
