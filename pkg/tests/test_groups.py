import numpy as np
import pytest

from groupsample import (
    EuclideanModel,
    AffineModel,
    HeisenbergModel,
    model_from_id,
)

MODELS = [EuclideanModel(1), EuclideanModel(2), AffineModel(), HeisenbergModel()]


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.model_id)
def test_group_axioms(model):
    rng = np.random.default_rng(7)
    g = model.random_points(64, rng=rng)
    h = model.random_points(64, rng=rng)
    k = model.random_points(64, rng=rng)
    e = model.identity()
    assert np.allclose(model.mul(g, e[None, :]), g)
    assert np.allclose(model.mul(e[None, :], g), g)
    assert np.allclose(model.mul(g, model.inv(g)), e, atol=1e-12)
    lhs = model.mul(model.mul(g, h), k)
    rhs = model.mul(g, model.mul(h, k))
    assert np.allclose(lhs, rhs, atol=1e-9)


@pytest.mark.parametrize(
    "model",
    [EuclideanModel(1), EuclideanModel(2), HeisenbergModel()],
    ids=lambda m: m.model_id,
)
def test_norm_symmetric_positive(model):
    rng = np.random.default_rng(3)
    g = model.random_points(64, rng=rng)
    n = model.norm(g)
    assert np.all(n >= 0)
    assert np.allclose(model.norm(model.inv(g)), n, rtol=1e-10)
    assert model.norm(model.identity()) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    "model,q",
    [(EuclideanModel(1), 1), (EuclideanModel(3), 3), (HeisenbergModel(), 4)],
    ids=["r1", "r3", "heis1"],
)
def test_gauge_homogeneity(model, q):
    rng = np.random.default_rng(5)
    g = model.random_points(32, rng=rng)
    for t in (0.5, 2.0, 3.7):
        assert np.allclose(model.norm(model.dilate(t, g)), t * model.norm(g), rtol=1e-10)
    assert model.homogeneous_dimension == q


def test_heisenberg_group_law():
    model = HeisenbergModel()
    a = np.array([1.0, 2.0, 0.5])
    b = np.array([-0.5, 1.0, 0.25])
    c = model.mul(a, b)
    # central coordinate picks up the symplectic twist
    assert c[0] == pytest.approx(0.5)
    assert c[1] == pytest.approx(3.0)
    assert c[2] == pytest.approx(0.5 + 0.25 + (1.0 * 1.0 - 2.0 * (-0.5)) / 2.0)


def test_heisenberg_koranyi_norm():
    model = HeisenbergModel()
    g = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    n = model.norm(g)
    assert n[0] == pytest.approx(1.0)
    assert n[1] == pytest.approx(16.0**0.25)


def test_heisenberg_triangle_constant():
    model = HeisenbergModel()
    c = model.triangle_constant
    emp = model.estimate_triangle_constant(n_pairs=20000, seed=1)
    assert emp <= c + 1e-9


def test_affine_haar_weight():
    model = AffineModel()
    g = np.array([[2.0, 1.0], [0.5, -3.0]])
    w = model.haar_weight(g)
    assert np.allclose(w, [0.25, 4.0])


def test_model_from_id():
    assert isinstance(model_from_id("r1"), EuclideanModel)
    assert model_from_id("rn:3").dim == 3
    assert isinstance(model_from_id("affine"), AffineModel)
    assert isinstance(model_from_id("heis1"), HeisenbergModel)
    with pytest.raises(ValueError):
        model_from_id("nope")
