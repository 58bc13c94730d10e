"""Rotation numbers of planar fields over region boundaries."""

import numpy as np

from epsode import (FieldVanishesError, PlanarRegion, ProductRegion,
                    contract, product_degree, winding_number)

disk = PlanarRegion.circle(0.0, 0.0, 1.0, 512)

print("identity:", winding_number(lambda p: p, disk).degree)
print("constant:", winding_number(lambda p: np.array([1.0, 0.0]), disk).degree)


def complex_square(P):
    return np.stack([P[:, 0] ** 2 - P[:, 1] ** 2,
                     2 * P[:, 0] * P[:, 1]], axis=1)


rep = winding_number(complex_square, disk, vectorized=True)
print(f"z^2: degree {rep.degree} from {rep.samples_used} samples "
      f"(min |F| = {rep.min_field_norm:.3f})")

# vanishing fields are reported with a witness instead of a bogus integer
try:
    winding_number(lambda P: P * P[:, :1], disk, vectorized=True)
except FieldVanishesError as err:
    print("vanishing detected:", err)

# product regions multiply the factor degrees
prod = ProductRegion([disk, PlanarRegion.circle(0, 0, 2.0, 256)])
rep = product_degree([complex_square, lambda p: p], prod, vectorized=True)
print("product degree (z^2 x identity):", rep.degree)

# radial contraction about the star center
half = contract(disk, 0.5)
print("contracted radius:",
      np.linalg.norm(half.boundary_points(4), axis=1))
grown = contract(disk, -0.1)
print("expanded radius:",
      np.linalg.norm(grown.boundary_points(4), axis=1))
