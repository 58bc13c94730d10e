"""Planar Jordan regions and winding numbers of boundary vector fields.

Regions are given by a parametrised closed curve or a positively oriented
polygon.  The winding number of a nonvanishing field along the boundary is
accumulated from atan2 increments with adaptive refinement; radial
contractions about a star center realise the delta-contraction of a region,
and products of planar regions cover even-dimensional product systems.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PlanarRegion", "ProductRegion", "DegreeReport",
    "FieldVanishesError", "NonConvergentError",
    "winding_number", "product_degree", "contract", "accumulated_angle",
]


class FieldVanishesError(RuntimeError):
    """The field norm dropped below the vanish tolerance on the boundary."""

    def __init__(self, point, norm, u=None):
        self.point = np.asarray(point, dtype=float)
        self.norm = float(norm)
        self.u = u
        super().__init__(f"field vanishes on the boundary near {self.point} "
                         f"(|F| = {self.norm:.3e})")


class NonConvergentError(RuntimeError):
    """Refinement hit the sample cap without meeting the angle criteria."""


def _shoelace(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_intersect(p, q):
    """Pairwise proper-intersection test between two segment batches."""

    def orient(a, b, c):
        return ((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
                - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))

    a1, a2 = p
    b1, b2 = q
    d1 = orient(a1, a2, b1)
    d2 = orient(a1, a2, b2)
    d3 = orient(b1, b2, a1)
    d4 = orient(b1, b2, a2)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


class PlanarRegion:
    """Bounded planar Jordan region with a discretisable boundary.

    The boundary must be simple (checked pairwise at the validation
    resolution, a heuristic rather than a certification) and positively
    oriented.  ``star_center`` enables radial contraction.
    """

    def __init__(self, curve=None, vertices=None, star_center=None, n_hint=512):
        if (curve is None) == (vertices is None):
            raise ValueError("provide exactly one of curve or vertices")
        self.curve = curve
        self.vertices = None if vertices is None else np.asarray(vertices, float)
        self.star_center = None if star_center is None \
            else np.asarray(star_center, dtype=float)
        self.n_hint = int(n_hint)
        self._validate()

    # -- constructors ------------------------------------------------------

    @classmethod
    def circle(cls, cx=0.0, cy=0.0, r=1.0, n=512):
        c = np.array([cx, cy], dtype=float)

        def fn(u):
            u = np.asarray(u, dtype=float)
            ang = 2 * np.pi * u
            return np.stack([cx + r * np.cos(ang), cy + r * np.sin(ang)], axis=-1)

        return cls(curve=fn, star_center=c, n_hint=n)

    @classmethod
    def polygon(cls, vertices, star_center=None, n_hint=None):
        vertices = np.asarray(vertices, dtype=float)
        if n_hint is None:
            n_hint = max(512, 8 * len(vertices))
        if star_center is None:
            star_center = vertices.mean(axis=0)
        return cls(vertices=vertices, star_center=star_center, n_hint=n_hint)

    @classmethod
    def from_curve(cls, fn, star_center=None, n_hint=512, vectorized=True):
        if not vectorized:
            scalar_fn = fn

            def fn(u):
                u = np.atleast_1d(np.asarray(u, dtype=float))
                return np.array([scalar_fn(v) for v in u])

        return cls(curve=fn, star_center=star_center, n_hint=n_hint)

    # -- geometry ----------------------------------------------------------

    def boundary_points(self, n=None, us=None):
        """Points on the boundary at parameters ``us`` (or n uniform)."""
        if us is None:
            us = np.arange(n if n is not None else self.n_hint) / \
                float(n if n is not None else self.n_hint)
        us = np.asarray(us, dtype=float) % 1.0
        if self.curve is not None:
            return np.atleast_2d(self.curve(us))
        verts = self.vertices
        m = len(verts)
        nxt = np.roll(verts, -1, axis=0)
        lens = np.linalg.norm(nxt - verts, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(lens)])
        d = us * cum[-1]
        idx = np.clip(np.searchsorted(cum, d, side="right") - 1, 0, m - 1)
        frac = (d - cum[idx]) / lens[idx]
        return verts[idx] + frac[:, None] * (nxt[idx] - verts[idx])

    def _validate(self):
        res = min(self.n_hint, 256)
        pts = self.boundary_points(res)
        if _shoelace(pts) <= 0:
            raise ValueError("boundary must be positively oriented "
                             "(counterclockwise, shoelace area > 0)")
        nxt = np.roll(pts, -1, axis=0)
        i, j = np.triu_indices(res, k=2)
        keep = ~((i == 0) & (j == res - 1))
        i, j = i[keep], j[keep]
        bad = _segments_intersect((pts[i], nxt[i]), (pts[j], nxt[j]))
        if np.any(bad):
            raise ValueError("boundary self-intersects at the working resolution")

    def winding_around(self, points):
        """Winding number of the boundary around each query point."""
        pts = self.boundary_points(self.n_hint)
        P = np.atleast_2d(np.asarray(points, dtype=float))
        diff = pts[None, :, :] - P[:, None, :]
        ang = np.arctan2(diff[:, :, 1], diff[:, :, 0])
        inc = np.diff(np.concatenate([ang, ang[:, :1]], axis=1), axis=1)
        inc = (inc + np.pi) % (2 * np.pi) - np.pi
        w = inc.sum(axis=1) / (2 * np.pi)
        return np.rint(w).astype(int)

    def contains(self, point):
        return bool(self.winding_around(np.asarray(point)[None, :])[0] == 1)

    def distance_to_boundary(self, points):
        """Distance from each query point to the sampled boundary."""
        pts = self.boundary_points(self.n_hint)
        nxt = np.roll(pts, -1, axis=0)
        P = np.atleast_2d(np.asarray(points, dtype=float))
        d = nxt - pts
        L2 = np.maximum(np.sum(d * d, axis=1), 1e-300)
        w = P[:, None, :] - pts[None, :, :]
        t = np.clip(np.einsum("mnd,nd->mn", w, d) / L2[None, :], 0.0, 1.0)
        proj = pts[None, :, :] + t[:, :, None] * d[None, :, :]
        dist = np.linalg.norm(P[:, None, :] - proj, axis=2)
        return dist.min(axis=1)


class ProductRegion:
    """Cartesian product of planar regions (total dimension 2p)."""

    def __init__(self, factors):
        factors = list(factors)
        if not factors:
            raise ValueError("need at least one factor")
        self.factors = factors

    @property
    def k(self):
        return 2 * len(self.factors)

    def contains(self, point):
        point = np.asarray(point, dtype=float)
        return all(f.contains(point[2 * i:2 * i + 2])
                   for i, f in enumerate(self.factors))

    def distance_to_boundary(self, points):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        per = np.stack([f.distance_to_boundary(P[:, 2 * i:2 * i + 2])
                        for i, f in enumerate(self.factors)])
        return per.min(axis=0)


@dataclass
class DegreeReport:
    degree: int
    min_field_norm: float
    samples_used: int
    refined: bool
    raw_angle: float = 0.0
    residue: float = 0.0


def accumulated_angle(values):
    """Total wrapped atan2 increment along a closed loop of field values."""
    values = np.asarray(values, dtype=float)
    ang = np.arctan2(values[:, 1], values[:, 0])
    inc = np.diff(np.concatenate([ang, ang[:1]]))
    inc = (inc + np.pi) % (2 * np.pi) - np.pi
    return float(inc.sum())


def winding_number(F, region, n0=None, vectorized=False, vanish_tol=1e-9,
                   max_samples=2 ** 20, residue_tol=0.1):
    """Winding number of the planar field F along the region boundary.

    Sampling is refined until every consecutive angle increment is below
    pi/2 (so no winding can be skipped for the sampled field) and the total
    angle is within ``residue_tol`` radians of an integer multiple of 2 pi.
    Refinement bisects offending boundary intervals; a residue failure
    doubles the whole grid.  Raises :class:`FieldVanishesError` when a
    sample norm falls below ``vanish_tol`` and :class:`NonConvergentError`
    at the sample cap.
    """
    if vectorized:
        F_many = F
    else:
        def F_many(P):
            return np.array([F(p) for p in P])

    def evaluate(us):
        pts = region.boundary_points(us=us)
        vals = np.atleast_2d(np.asarray(F_many(pts), dtype=float))
        norms = np.linalg.norm(vals, axis=1)
        j = int(np.argmin(norms))
        if norms[j] < vanish_tol:
            raise FieldVanishesError(pts[j], norms[j], us[j])
        return vals, norms

    n_start = int(n0 if n0 is not None else
                  getattr(region, "n_hint", 512) or 512)
    us = np.arange(n_start) / float(n_start)
    vals, norms = evaluate(us)
    angles = np.arctan2(vals[:, 1], vals[:, 0])
    min_norm = float(norms.min())
    refined = False

    while True:
        inc = np.diff(np.concatenate([angles, angles[:1]]))
        inc = (inc + np.pi) % (2 * np.pi) - np.pi
        bad = np.nonzero(np.abs(inc) >= np.pi / 2)[0]
        if bad.size == 0:
            total = float(inc.sum())
            deg = total / (2 * np.pi)
            residue = abs(total - 2 * np.pi * np.rint(deg))
            if residue <= residue_tol:
                return DegreeReport(int(np.rint(deg)), min_norm, len(us),
                                    refined, total, residue)
            new_us = (us + np.diff(np.concatenate([us, [us[0] + 1.0]])) / 2) % 1.0
        else:
            nxt_u = np.concatenate([us, [us[0] + 1.0]])
            new_us = ((nxt_u[bad] + nxt_u[bad + 1]) / 2) % 1.0
        if len(us) + len(new_us) > max_samples:
            raise NonConvergentError(
                f"no convergence with {len(us)} boundary samples "
                f"(cap {max_samples})")
        refined = True
        new_vals, new_norms = evaluate(new_us)
        min_norm = min(min_norm, float(new_norms.min()))
        us = np.concatenate([us, new_us])
        order = np.argsort(us, kind="stable")
        us = us[order]
        angles = np.concatenate([angles, np.arctan2(new_vals[:, 1],
                                                    new_vals[:, 0])])[order]


def product_degree(Fs, product_region, **kwargs):
    """Degree of a product map over a product region.

    The Brouwer degree of (F1 x ... x Fp) over U1 x ... x Up is the product
    of the planar degrees.
    """
    Fs = list(Fs)
    if len(Fs) != len(product_region.factors):
        raise ValueError("one field per factor required")
    reports = [winding_number(F, region, **kwargs)
               for F, region in zip(Fs, product_region.factors)]
    degree = 1
    for r in reports:
        degree *= r.degree
    return DegreeReport(
        degree,
        min(r.min_field_norm for r in reports),
        max(r.samples_used for r in reports),
        any(r.refined for r in reports),
    )


def contract(region, delta):
    """Radial delta-contraction about the star center (expansion for
    negative delta)."""
    if not -1.0 < delta < 1.0:
        raise ValueError("delta must lie in (-1, 1)")
    if region.star_center is None:
        raise ValueError("region has no star center")
    c = region.star_center
    scale = 1.0 - delta
    if region.curve is not None:
        fn = region.curve

        def scaled(u):
            return c + scale * (fn(u) - c)

        return PlanarRegion(curve=scaled, star_center=c, n_hint=region.n_hint)
    verts = c + scale * (region.vertices - c)
    return PlanarRegion(vertices=verts, star_center=c, n_hint=region.n_hint)
