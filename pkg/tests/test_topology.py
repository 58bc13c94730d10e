import numpy as np
import pytest

from epsode import (FieldVanishesError, NonConvergentError, PlanarRegion,
                    ProductRegion, accumulated_angle, contract,
                    product_degree, winding_number)


def complex_square(P):
    return np.stack([P[:, 0] ** 2 - P[:, 1] ** 2, 2 * P[:, 0] * P[:, 1]],
                    axis=1)


def complex_cube(P):
    x, y = P[:, 0], P[:, 1]
    return np.stack([x ** 3 - 3 * x * y ** 2, 3 * x ** 2 * y - y ** 3], axis=1)


def test_region_validation():
    with pytest.raises(ValueError, match="oriented"):
        PlanarRegion.polygon([(0, 0), (0, 1), (1, 1), (1, 0)])  # clockwise
    star = [(np.cos(4 * np.pi * k / 5), np.sin(4 * np.pi * k / 5))
            for k in range(5)]  # pentagram: positive area, self-crossing
    with pytest.raises(ValueError, match="self-intersect"):
        PlanarRegion.polygon(star)
    PlanarRegion.circle(0, 0, 1, 64)  # fine


def test_identity_degree_one(disk):
    rep = winding_number(lambda p: p, disk)
    assert rep.degree == 1 and not rep.refined


def test_constant_degree_zero(disk):
    rep = winding_number(lambda p: np.array([1.0, 0.0]), disk)
    assert rep.degree == 0


def test_complex_square_degree_two(disk):
    # brute-force oracle: dense angle accumulation at 1e5 samples
    us = np.arange(100_000) / 100_000.0
    pts = disk.boundary_points(us=us)
    oracle = accumulated_angle(complex_square(pts)) / (2 * np.pi)
    assert round(oracle) == 2
    rep = winding_number(complex_square, disk, vectorized=True)
    assert rep.degree == 2
    assert rep.residue <= 0.1


def test_negated_identity_degree(disk):
    rep = winding_number(lambda P: -P, disk, vectorized=True)
    assert rep.degree == 1  # planar antipodal map is a rotation


def test_cube_degree_three(disk):
    assert winding_number(complex_cube, disk, vectorized=True).degree == 3


def test_field_vanishing_detected(disk):
    # radial field with a sign flip: vanishes at (0, +-1)
    def F(P):
        return P * P[:, :1]

    with pytest.raises(FieldVanishesError) as err:
        winding_number(F, disk, vectorized=True)
    assert abs(err.value.point[0]) <= 1e-4


def test_refinement_cap():
    disk = PlanarRegion.circle(0, 0, 1, 8)
    with pytest.raises(NonConvergentError):
        winding_number(complex_square, disk, n0=4, vectorized=True,
                       max_samples=6)


def test_doubling_cap_does_not_change_result(disk):
    a = winding_number(complex_square, disk, n0=8, vectorized=True,
                       max_samples=2 ** 20)
    b = winding_number(complex_square, disk, n0=8, vectorized=True,
                       max_samples=2 ** 21)
    assert a.degree == b.degree == 2
    assert a.refined  # n0=8 forces refinement for degree 2


def test_reparametrization_invariance():
    # the same square described as a polygon and as a curve
    poly = PlanarRegion.polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)])

    def sq_curve(u):
        return poly.boundary_points(us=u)

    curve = PlanarRegion.from_curve(sq_curve, star_center=(0.0, 0.0))
    d1 = winding_number(complex_square, poly, vectorized=True).degree
    d2 = winding_number(complex_square, curve, vectorized=True).degree
    assert d1 == d2 == 2


def test_orientation_reversal_negates_angle(disk):
    pts = disk.boundary_points(256)
    vals = complex_square(pts)
    total = accumulated_angle(vals)
    assert accumulated_angle(vals[::-1]) == pytest.approx(-total, abs=1e-12)


def test_homotopy_invariance_between_nonvanishing_fields(disk):
    # |z^2| = 1 on the boundary, shift by 0.3 keeps the homotopy nonvanishing
    def F(lam):
        return lambda P: complex_square(P) + lam * np.array([0.3, 0.0])

    degs = {winding_number(F(lam), disk, vectorized=True).degree
            for lam in np.linspace(0, 1, 7)}
    assert degs == {2}


def test_product_degrees():
    d1 = PlanarRegion.circle(0, 0, 1, 128)
    d2 = PlanarRegion.circle(0, 0, 2, 128)
    prod = ProductRegion([d1, d2])
    rep = product_degree([lambda p: p, lambda p: p], prod)
    assert rep.degree == 1
    rep = product_degree([complex_square, lambda P: np.tile([1.0, 0.0], (len(P), 1))],
                         prod, vectorized=True)
    assert rep.degree == 0
    single = ProductRegion([d1])
    assert product_degree([complex_square], single, vectorized=True).degree \
        == winding_number(complex_square, d1, vectorized=True).degree


def test_contract_identity_and_scaling():
    disk = PlanarRegion.circle(0, 0, 1, 64)
    same = contract(disk, 0.0)
    assert np.allclose(same.boundary_points(16), disk.boundary_points(16))
    half = contract(disk, 0.5)
    assert np.allclose(np.linalg.norm(half.boundary_points(32), axis=1), 0.5)
    grown = contract(disk, -0.1)
    assert np.allclose(np.linalg.norm(grown.boundary_points(32), axis=1), 1.1)


def test_contract_polygon_and_errors():
    sq = PlanarRegion.polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)])
    small = contract(sq, 0.5)
    assert np.allclose(np.abs(small.vertices), 0.5)
    no_center = PlanarRegion.from_curve(
        lambda u: np.stack([np.cos(2 * np.pi * u), np.sin(2 * np.pi * u)],
                           axis=-1))
    with pytest.raises(ValueError, match="star center"):
        contract(no_center, 0.2)
    with pytest.raises(ValueError, match="delta"):
        contract(sq, 1.0)


def test_membership_and_distance(disk):
    assert disk.contains([0.2, 0.3])
    assert not disk.contains([1.2, 0.0])
    d = disk.distance_to_boundary(np.array([[0.0, 0.0], [0.5, 0.0]]))
    assert d[0] == pytest.approx(1.0, abs=1e-4)
    assert d[1] == pytest.approx(0.5, abs=1e-4)
    w = disk.winding_around(np.array([[0.0, 0.0], [2.0, 0.0]]))
    assert list(w) == [1, 0]


def test_product_region_membership():
    prod = ProductRegion([PlanarRegion.circle(0, 0, 1, 64),
                          PlanarRegion.circle(0, 0, 2, 64)])
    assert prod.k == 4
    assert prod.contains([0.1, 0.1, 1.0, 1.0])
    assert not prod.contains([0.1, 0.1, 2.5, 0.0])
    d = prod.distance_to_boundary(np.array([[0.0, 0.0, 0.0, 0.0]]))
    assert d[0] == pytest.approx(1.0, abs=5e-3)  # 64-gon apothem offset
