import numpy as np
import pytest

from groupsample import (
    EuclideanModel,
    AffineModel,
    HeisenbergModel,
    PointSet,
    greedy_separated_dense,
    verify_separated,
    verify_dense,
    build_partition,
    quasilattice_semidirect,
    tiling_check,
    dilate_set,
)
from groupsample.pointsets import hyperbolic_lattice


def test_greedy_separated_dense_certified():
    model = EuclideanModel(2)
    ps = greedy_separated_dense(model, [0.0, 0.0], [4.0, 4.0], 0.5)
    # maximality gives B_r-density, greedy picking gives r-separation;
    # ball-disjointness certificates use half the separation
    assert verify_separated(ps, 0.24).passed
    assert verify_dense(ps, 0.5, shape=64).passed


def test_verify_separated_detects_collision():
    model = EuclideanModel(1)
    ps = PointSet(model, np.array([[0.0], [0.05], [1.0]]), [0.0], [2.0])
    cert = verify_separated(ps, 0.1)
    assert not cert.passed
    assert cert.witness is not None


def test_verify_dense_detects_hole():
    model = EuclideanModel(1)
    ps = PointSet(model, np.array([[0.0], [4.0]]), [0.0], [4.5])
    cert = verify_dense(ps, 0.5, shape=128)
    assert not cert.passed


def test_verify_dense_rejects_nonpositive_radius():
    model = EuclideanModel(1)
    ps = PointSet(model, np.array([[0.0]]), [0.0], [1.0])
    with pytest.raises(ValueError):
        verify_dense(ps, 0.0)


def test_partition_invariants_euclidean():
    model = EuclideanModel(1)
    pts = np.arange(0.25, 8.0, 0.5)[:, None]
    ps = PointSet(model, pts, [0.0], [8.0])
    part = build_partition(ps, 0.1, 0.5, shape=512)
    inv = part.check_invariants()
    assert inv == {"covered": True, "inside_u": True, "w_contained": True}
    # cells partition the region measure exactly
    assert np.sum(part.cell_measures()) == pytest.approx(8.0)


def test_partition_requires_valid_radii():
    model = EuclideanModel(1)
    ps = PointSet(model, np.array([[0.5]]), [0.0], [1.0])
    with pytest.raises(ValueError):
        build_partition(ps, 0.5, 0.1)


def test_partition_uncovered_region_raises():
    model = EuclideanModel(1)
    ps = PointSet(model, np.array([[0.5]]), [0.0], [4.0])
    with pytest.raises(ValueError):
        build_partition(ps, 0.1, 0.4, shape=64)


@pytest.mark.parametrize(
    "model,base,ells",
    [
        (EuclideanModel(2), (-2, 2), (-2, 2)),
        (AffineModel(), (-4, 4), (-2, 2)),
        (HeisenbergModel(), (-2, 2), (-9, 9)),
    ],
    ids=["rn2", "affine", "heis1"],
)
def test_quasilattice_exact_tiling(model, base, ells):
    ps, (c_lo, c_hi) = quasilattice_semidirect(model, base, ells)
    cert = tiling_check(ps, c_lo, c_hi, shape=33, margin=0.0)
    assert cert.passed
    assert cert.detail["min_count"] == 1
    assert cert.detail["max_count"] == 1


def test_quasilattice_heisenberg_narrow_center_raises():
    with pytest.raises(ValueError):
        quasilattice_semidirect(HeisenbergModel(), (-3, 3), (-1, 1))


def test_heisenberg_integer_lattice_is_subgroup():
    model = HeisenbergModel()
    ps, _ = quasilattice_semidirect(model, (-1, 1), (-8, 8))
    pts = ps.points
    rng = np.random.default_rng(0)
    i = rng.integers(0, len(pts), size=50)
    j = rng.integers(0, len(pts), size=50)
    prod = model.mul(pts[i], pts[j])
    assert np.allclose(prod[:, :2], np.round(prod[:, :2]))
    assert np.allclose(2 * prod[:, 2], np.round(2 * prod[:, 2]))


def test_hyperbolic_lattice_refinement_nests_scales():
    model = AffineModel()
    coarse = hyperbolic_lattice(model, 1.0, 1.0, (-2, 2), 8.0)
    fine = hyperbolic_lattice(model, 0.5, 0.5, (-4, 4), 8.0)
    assert len(fine) > len(coarse)
    a_coarse = np.unique(coarse.points[:, 0])
    a_fine = np.unique(fine.points[:, 0])
    assert np.all(np.isin(np.round(np.log(a_coarse), 9), np.round(np.log(a_fine), 9)))


def test_dilate_set_heisenberg():
    model = HeisenbergModel()
    ps = PointSet(model, np.array([[1.0, 2.0, 0.5]]), [-4.0] * 3, [4.0] * 3)
    out = dilate_set(ps, 2.0)
    assert np.allclose(out.points[0], [2.0, 4.0, 2.0])


def test_csv_roundtrip(tmp_path):
    model = EuclideanModel(2)
    ps = greedy_separated_dense(model, [0.0, 0.0], [2.0, 2.0], 0.5)
    path = tmp_path / "pts.csv"
    ps.to_csv(path)
    back = PointSet.from_csv(path, model, lo=[0.0, 0.0], hi=[2.0, 2.0])
    assert np.allclose(np.sort(back.points, axis=0), np.sort(ps.points, axis=0))
