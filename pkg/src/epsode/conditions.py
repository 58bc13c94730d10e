"""Checks for the periodic-orbit existence conditions.

Each check returns a report with a verdict (holds / fails / inconclusive),
the worst-case witness and the margins, so results read as evidence at the
grid resolution used rather than proof.  Covered: boundary periodicity of
the unperturbed flow (A0), nonvanishing period defect (A1), the rotation
number of the defect field (A2), the weighted cycle integral driving the
planar persistence condition (A3_1), homotopy invariance of the defect
degree, and the resonance map of a harmonically forced linear center.
"""

from dataclasses import dataclass, field

import numpy as np

from . import expressions as ex
from .solver import (DEFAULT_CONFIG, IntegrationError, gauss_legendre_panels,
                     integrate)
from .topology import (DegreeReport, FieldVanishesError, NonConvergentError,
                       PlanarRegion, winding_number)
from .variational import DefectField, cycle_residual, defect_profile

__all__ = [
    "HypothesisReport", "check_A0", "check_A1", "check_A2",
    "MelnikovProfile", "melnikov_profile", "defect_normal_profile",
    "DegreeComparisonReport", "compare_defect_degrees",
    "ResonanceZero", "ResonanceMap", "resonance_H", "resonance_initial_point",
]


@dataclass
class HypothesisReport:
    condition: str
    verdict: str  # holds | fails | inconclusive
    margin: float
    witness: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)

    def summary(self):
        if self.verdict == "holds":
            return f"{self.condition} holds (margin {self.margin:.6g})"
        w = ", ".join(f"{k}={v}" for k, v in self.witness.items())
        return f"{self.condition} {self.verdict} ({w})"


def _boundary_samples(region, n):
    """Boundary sample points for planar or product regions.

    For products, each factor boundary is paired with a coarse closure grid
    of the remaining factors (their boundaries at low resolution plus star
    centers), since the topological boundary of a product mixes factor
    boundaries with closures.
    """
    if isinstance(region, PlanarRegion):
        return region.boundary_points(n)
    factors = region.factors
    p = len(factors)
    per = max(16, n // max(1, p * 9))
    pieces = []
    for i, f in enumerate(factors):
        b = f.boundary_points(per)
        others = []
        for j, g in enumerate(factors):
            if j == i:
                continue
            closure = g.boundary_points(8)
            if g.star_center is not None:
                closure = np.vstack([closure, g.star_center])
            others.append((j, closure))
        combos = [b]
        idx = [i]
        for j, closure in others:
            combos = [np.repeat(c, len(closure), axis=0) for c in combos]
            combos.append(np.tile(closure, (len(combos[0]) // len(closure), 1)))
            idx.append(j)
        block = np.empty((len(combos[0]), 2 * p))
        for j, c in zip(idx, combos):
            block[:, 2 * j:2 * j + 2] = c
        pieces.append(block)
    return np.vstack(pieces)


def check_A0(sys, region, n_samples=512, a0_tol=1e-7, cfg=DEFAULT_CONFIG):
    """Boundary periodicity: Omega(T, 0, xi) = xi on the region boundary."""
    if n_samples < 16:
        raise ValueError("n_samples must be at least 16")
    pts = _boundary_samples(region, n_samples)
    n, k = pts.shape
    if k != sys.k:
        raise ValueError(f"region dimension {k} does not match system k={sys.k}")

    def rhs(t, z):
        return sys.psi_many(t, z.reshape(n, k)).ravel()

    try:
        end = integrate(rhs, 0.0, sys.T, pts.ravel(), cfg).endpoint.reshape(n, k)
    except IntegrationError as err:
        return HypothesisReport(
            "A0", "inconclusive", np.inf,
            witness={"error": str(err)},
            grids={"n_samples": n}, tolerances={"a0_tol": a0_tol})
    rel = np.linalg.norm(end - pts, axis=1) / (1.0 + np.linalg.norm(pts, axis=1))
    worst = int(np.argmax(rel))
    verdict = "holds" if rel[worst] <= a0_tol else "fails"
    return HypothesisReport(
        "A0", verdict, float(rel[worst]),
        witness={"point": pts[worst], "residual": float(rel[worst])},
        grids={"n_samples": n}, tolerances={"a0_tol": a0_tol},
        data={"points": pts, "residuals": rel})


def check_A1(sys, region, s_grid=None, boundary_samples=512, a1_tol=1e-6,
             cfg=DEFAULT_CONFIG):
    """Nonvanishing period defect over the (anchor, boundary) grid."""
    if s_grid is None:
        s_grid = np.linspace(0.0, sys.T, 65)
    s_grid = np.asarray(s_grid, dtype=float)
    pts = _boundary_samples(region, boundary_samples)
    try:
        prof = defect_profile(sys, pts, s_grid, cfg)
    except IntegrationError as err:
        return HypothesisReport(
            "A1", "inconclusive", np.inf, witness={"error": str(err)},
            grids={"s_points": len(s_grid), "boundary_samples": len(pts)},
            tolerances={"a1_tol": a1_tol})
    norms = np.linalg.norm(prof, axis=2)
    si, pi = np.unravel_index(np.argmin(norms), norms.shape)
    mn = float(norms[si, pi])
    verdict = "holds" if mn >= a1_tol else "fails"
    return HypothesisReport(
        "A1", verdict, mn,
        witness={"s": float(s_grid[si]), "point": pts[pi], "norm": mn},
        grids={"s_points": len(s_grid), "boundary_samples": len(pts)},
        tolerances={"a1_tol": a1_tol},
        data={"s_grid": s_grid, "min_norm_per_s": norms.min(axis=1)})


def check_A2(sys, region, boundary_samples=512, vanish_tol=1e-9,
             cfg=DEFAULT_CONFIG):
    """Rotation number of the defect field at anchor 0 over the region.

    Since eta(0, 0, .) = 0 this is the rotation of eta(T, 0, .).  For a
    product region the field is sliced into coordinate pairs with the other
    factors pinned at their star centers, which is exact when the system
    decouples into planar blocks (the only case the product generalisation
    covers).  Returns ``(HypothesisReport, DegreeReport or None)``.
    """
    fld = DefectField(sys, 0.0, cfg)
    grids = {"boundary_samples": boundary_samples}
    tols = {"vanish_tol": vanish_tol}
    try:
        if isinstance(region, PlanarRegion):
            report = winding_number(fld.eval_many, region, n0=boundary_samples,
                                    vectorized=True, vanish_tol=vanish_tol)
        else:
            degree = 1
            min_norm = np.inf
            samples = 0
            refined = False
            centers = np.concatenate([f.star_center for f in region.factors])
            for i, factor in enumerate(region.factors):
                def slice_field(P, i=i):
                    full = np.tile(centers, (len(P), 1))
                    full[:, 2 * i:2 * i + 2] = P
                    return fld.eval_many(full)[:, 2 * i:2 * i + 2]

                rep = winding_number(slice_field, factor, n0=boundary_samples,
                                     vectorized=True, vanish_tol=vanish_tol)
                degree *= rep.degree
                min_norm = min(min_norm, rep.min_field_norm)
                samples = max(samples, rep.samples_used)
                refined = refined or rep.refined
            report = DegreeReport(degree, min_norm, samples, refined)
    except FieldVanishesError as err:
        return HypothesisReport(
            "A2", "inconclusive", 0.0,
            witness={"point": err.point, "norm": err.norm,
                     "reason": "defect field vanishes on the boundary"},
            grids=grids, tolerances=tols), None
    except NonConvergentError as err:
        return HypothesisReport(
            "A2", "inconclusive", 0.0, witness={"reason": str(err)},
            grids=grids, tolerances=tols), None
    verdict = "holds" if report.degree != 0 else "fails"
    hyp = HypothesisReport(
        "A2", verdict, float(abs(report.degree)),
        witness={"degree": report.degree,
                 "min_field_norm": report.min_field_norm},
        grids={**grids, "samples_used": report.samples_used},
        tolerances=tols)
    return hyp, report


# ---------------------------------------------------------------------------
# Cycle integral (planar persistence condition)
# ---------------------------------------------------------------------------

@dataclass
class MelnikovProfile:
    thetas: np.ndarray
    values: np.ndarray
    min_abs: float
    weight_range: tuple
    panels: int
    order: int

    def argmax_abs(self):
        return float(self.thetas[int(np.argmax(np.abs(self.values)))])

    def nonvanishing(self, tol=0.0):
        return self.min_abs > tol


def _perp(v):
    """Counterclockwise quarter turn (u, v) -> (-v, u), row-wise."""
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def melnikov_profile(sys, cycle, theta_grid=None, panels=64, order=8,
                     cycle_tol=1e-6, cfg=DEFAULT_CONFIG):
    """Weighted cycle integral M(theta) of the forcing against the cycle
    normal.

    M(theta) = int_0^T exp(-int_0^t div psi dtau) <phi(t - theta, x0(t)),
    perp(x0'(t))> dt on the fixed composite Gauss-Legendre grid; the cycle
    velocity is psi(t, x0(t)) exactly, never a difference quotient.
    """
    if sys.k != 2:
        raise ValueError("the cycle integral is defined for planar systems")
    res = cycle_residual(cycle, sys.T)
    if res > cycle_tol:
        raise ValueError(f"input trajectory is not {sys.T}-periodic "
                         f"(residual {res:.3e})")
    if theta_grid is None:
        theta_grid = np.linspace(0.0, sys.T, 65)
    thetas = np.asarray(theta_grid, dtype=float)

    nodes, weights = gauss_legendre_panels(0.0, sys.T, panels, order)
    xq = cycle.eval(nodes)
    vq = sys.psi_many(nodes, xq)
    perp = _perp(vq)

    # integrated divergence along the cycle as a 1-D ODE on the dense output
    logw = integrate(lambda t, u: np.array([-sys.psi_div(t, cycle.eval(t))]),
                     0.0, sys.T, [0.0], cfg)
    wq = np.exp(logw.eval(nodes)[:, 0])

    values = np.empty(len(thetas))
    for i, th in enumerate(thetas):
        fq = sys.phi_many(nodes - th, xq)
        values[i] = float(np.dot(weights, wq * np.einsum("nd,nd->n", fq, perp)))
    return MelnikovProfile(thetas, values, float(np.min(np.abs(values))),
                           (float(wq.min()), float(wq.max())), panels, order)


def defect_normal_profile(sys, cycle, s_grid=None, theta_grid=None,
                          cfg=DEFAULT_CONFIG):
    """Projection <defect(s, x0(theta)), perp(x0'(theta))> on a grid.

    Diagnostic companion to :func:`melnikov_profile`: both quantities are
    exposed so their vanishing sets can be inspected side by side instead
    of assumed to coincide.
    """
    if s_grid is None:
        s_grid = np.linspace(0.0, sys.T, 17)
    if theta_grid is None:
        theta_grid = np.linspace(0.0, sys.T, 33)
    s_grid = np.asarray(s_grid, dtype=float)
    thetas = np.asarray(theta_grid, dtype=float)
    pts = cycle.eval(np.mod(thetas, sys.T))
    vel = sys.psi_many(thetas, pts)
    normals = _perp(vel)
    prof = defect_profile(sys, pts, s_grid, cfg)
    proj = np.einsum("snd,nd->sn", prof, normals)
    return s_grid, thetas, proj


# ---------------------------------------------------------------------------
# Homotopy invariance of the defect degree
# ---------------------------------------------------------------------------

@dataclass
class DegreeComparisonReport:
    verdict: str  # holds | fails | inconclusive
    degree_1: int = None
    degree_2: int = None
    min_defect: float = np.inf
    witness: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)


def _profile_pair(sys1, sys2, Xi, s_grid, cfg):
    """Defect profiles of two forcings sharing one unperturbed field,
    from a single coupled batch run."""
    Xi = np.atleast_2d(np.asarray(Xi, dtype=float))
    n, k = Xi.shape
    dim = k + k * k + 2 * k
    sys = sys1

    def rhs(t, z):
        Z = z.reshape(n, dim)
        X = Z[:, :k]
        Y = Z[:, k:k + k * k].reshape(n, k, k)
        W = Z[:, k + k * k:].reshape(n, 2, k)
        J = sys.psi_jac_many(t, X)
        dX = sys.psi_many(t, X)
        dY = np.einsum("nij,njl->nil", J, Y).reshape(n, k * k)
        dW1 = sys1.phi_many(t, X) + np.einsum("nij,nj->ni", J, W[:, 0])
        dW2 = sys2.phi_many(t, X) + np.einsum("nij,nj->ni", J, W[:, 1])
        return np.concatenate([dX, dY, dW1, dW2], axis=1).ravel()

    z0 = np.concatenate([Xi, np.tile(np.eye(k).ravel(), (n, 1)),
                         np.zeros((n, 2 * k))], axis=1).ravel()
    from .solver import integrate_checkpoints
    vals, end = integrate_checkpoints(rhs, 0.0, sys.T, z0, s_grid, cfg)
    endZ = end.reshape(n, dim)
    YT = endZ[:, k:k + k * k].reshape(n, k, k)
    wT = endZ[:, k + k * k:].reshape(n, 2, k)
    YT_minus_I = YT - np.eye(k)[None, :, :]
    out = np.empty((2, len(s_grid), n, k))
    for si in range(len(s_grid)):
        Z = vals[si].reshape(n, dim)
        Ys = Z[:, k:k + k * k].reshape(n, k, k)
        ws = Z[:, k + k * k:].reshape(n, 2, k)
        for m in range(2):
            corr = np.linalg.solve(Ys, ws[:, m, :, None])[:, :, 0]
            out[m, si] = wT[:, m] - np.einsum("nij,nj->ni", YT_minus_I, corr)
    return out[0], out[1]


def compare_defect_degrees(sys1, sys2, region, lambda_grid=None, s_grid=None,
                     boundary_samples=512, a1_tol=1e-6, cfg=DEFAULT_CONFIG):
    """Compare defect-field degrees of two forcings over one region.

    The defect is affine in the forcing, so the defect of the convex
    combination lam*phi1 + (1-lam)*phi2 is the same combination of the two
    endpoint defects; no additional integration is needed along the
    homotopy.  If the combined defect drops below ``a1_tol`` somewhere on
    the (lambda, s, boundary) grid the comparison is inconclusive and the
    witness is reported.
    """
    if sys1.k != sys2.k or abs(sys1.T - sys2.T) > 1e-12:
        raise ValueError("systems must share dimension and period")
    rng = np.random.default_rng(7)
    for _ in range(5):
        t = rng.uniform(0, sys1.T)
        x = rng.uniform(-1.5, 1.5, sys1.k)
        a, b = sys1.psi(t, x), sys2.psi(t, x)
        if np.max(np.abs(a - b)) > 1e-9 * (1 + np.max(np.abs(a))):
            raise ValueError("systems must share the unperturbed field")

    if lambda_grid is None:
        lambda_grid = np.linspace(0.0, 1.0, 11)
    if s_grid is None:
        s_grid = np.linspace(0.0, sys1.T, 65)
    lambdas = np.asarray(lambda_grid, dtype=float)
    s_grid = np.asarray(s_grid, dtype=float)
    if not np.any(s_grid == 0.0):
        s_grid = np.concatenate([[0.0], s_grid])
    pts = _boundary_samples(region, boundary_samples)
    D1, D2 = _profile_pair(sys1, sys2, pts, s_grid, cfg)

    grids = {"lambda_points": len(lambdas), "s_points": len(s_grid),
             "boundary_samples": len(pts)}
    min_defect = np.inf
    witness = {}
    for lam in lambdas:
        D = lam * D1 + (1.0 - lam) * D2
        norms = np.linalg.norm(D, axis=2)
        si, pi = np.unravel_index(np.argmin(norms), norms.shape)
        if norms[si, pi] < min_defect:
            min_defect = float(norms[si, pi])
            witness = {"lambda": float(lam), "s": float(s_grid[si]),
                       "point": pts[pi], "norm": float(norms[si, pi])}
    if min_defect < a1_tol:
        return DegreeComparisonReport("inconclusive", min_defect=min_defect,
                              witness=witness, grids=grids)

    s0 = int(np.nonzero(s_grid == 0.0)[0][0])
    degrees = []
    for sysi, Di in ((sys1, D1), (sys2, D2)):
        fldi = DefectField(sysi, 0.0, cfg)
        fldi.preseed(pts, Di[s0])
        if isinstance(region, PlanarRegion):
            rep = winding_number(fldi.eval_many, region, n0=len(pts),
                                 vectorized=True)
        else:
            raise ValueError("degree comparison implemented for planar regions")
        degrees.append(rep.degree)
    verdict = "holds" if degrees[0] == degrees[1] else "fails"
    return DegreeComparisonReport(verdict, degrees[0], degrees[1], min_defect,
                          witness, grids)


# ---------------------------------------------------------------------------
# Resonance map of the harmonically forced linear center
# ---------------------------------------------------------------------------

@dataclass
class ResonanceZero:
    a: float
    theta: float
    residual: float
    det: float
    iterations: int


@dataclass
class ResonanceMap:
    evaluate: callable
    evaluate_many: callable
    zeros: list
    degenerate: bool
    a_range: tuple
    theta_range: tuple

    def box(self, zero, half=0.2):
        """Axis-aligned box region around a zero in the (a, theta) plane."""
        a, th = zero.a, zero.theta
        verts = [(a - half, th - half), (a + half, th - half),
                 (a + half, th + half), (a - half, th + half)]
        return PlanarRegion.polygon(verts)


def resonance_initial_point(a, theta):
    """Initial state of the circle orbit indexed by amplitude and phase."""
    return np.array([-a * np.cos(theta), a * np.sin(theta)])


def _fd_jacobian_2d(H, p, rel=1e-5):
    J = np.empty((2, 2))
    for j in range(2):
        h = rel * (1.0 + abs(p[j]))
        pp, pm = p.copy(), p.copy()
        pp[j] += h
        pm[j] -= h
        J[:, j] = (H(pp) - H(pm)) / (2 * h)
    return J


def resonance_H(g, a_range, theta_range, grid=(12, 12), panels=64, order=8,
                zero_tol=1e-10, dedupe_tol=1e-6, max_iter=40):
    """Resonance map H(a, theta) for the forced linear center.

    ``g`` is a forcing expression in ``t`` and the slots ``x1`` (position
    u) and ``x2`` (velocity v); the components of H are the quadratures of
    sin(tau) and cos(tau) against g(tau + theta, a cos tau, -a sin tau)
    over one period.  Zeros are located by damped Newton from a seed grid;
    each zero carries the central-difference Jacobian determinant.
    """
    expr = ex.parse(g) if isinstance(g, str) else g
    f = ex.compile_expr(expr, arrays=True)
    rng = np.random.default_rng(3)
    for _ in range(5):  # the period is fixed at 2 pi for this construction
        t = rng.uniform(0, 2 * np.pi)
        u, v = rng.uniform(-2, 2, 2)
        a, b = f(t, (u, v)), f(t + 2 * np.pi, (u, v))
        if abs(a - b) > 1e-9 * (1 + abs(a)):
            raise ValueError("forcing expression is not 2 pi periodic in t")
    nodes, weights = gauss_legendre_panels(0.0, 2 * np.pi, panels, order)
    s_nodes = np.sin(nodes)
    c_nodes = np.cos(nodes)

    def H_many(A, TH):
        A = np.asarray(A, dtype=float)[:, None]
        TH = np.asarray(TH, dtype=float)[:, None]
        u = A * c_nodes[None, :]
        v = -A * s_nodes[None, :]
        tt = nodes[None, :] + TH
        fv = np.broadcast_to(f(tt, (u, v)), tt.shape)
        return np.stack([(fv * s_nodes[None, :]) @ weights,
                         (fv * c_nodes[None, :]) @ weights], axis=1)

    def H(p):
        p = np.asarray(p, dtype=float)
        return H_many(p[0:1], p[1:2])[0]

    a_lo, a_hi = a_range
    th_lo, th_hi = theta_range
    As = np.linspace(a_lo, a_hi, grid[0])
    Ths = np.linspace(th_lo, th_hi, grid[1])
    AA, TT = np.meshgrid(As, Ths, indexing="ij")
    Hgrid = H_many(AA.ravel(), TT.ravel())
    scale = float(np.max(np.linalg.norm(Hgrid, axis=1)))
    if scale < 1e-10:
        return ResonanceMap(H, H_many, [], True, tuple(a_range),
                            tuple(theta_range))

    tol = zero_tol * max(1.0, scale)
    zeros = []
    for seed in np.column_stack([AA.ravel(), TT.ravel()]):
        p = seed.copy()
        ok = False
        for it in range(max_iter):
            val = H(p)
            r = np.linalg.norm(val)
            if r <= tol:
                ok = True
                break
            try:
                d = np.linalg.solve(_fd_jacobian_2d(H, p), -val)
            except np.linalg.LinAlgError:
                break
            alpha = 1.0
            accepted = False
            for _ in range(30):
                cand = p + alpha * d
                if np.linalg.norm(H(cand)) < r:
                    p = cand
                    accepted = True
                    break
                alpha /= 2
            if not accepted:
                break
        if not ok:
            continue
        if not (a_lo - 1e-9 <= p[0] <= a_hi + 1e-9
                and th_lo - 1e-9 <= p[1] <= th_hi + 1e-9):
            continue
        if any(abs(z.a - p[0]) <= dedupe_tol and abs(z.theta - p[1]) <= dedupe_tol
               for z in zeros):
            continue
        det = float(np.linalg.det(_fd_jacobian_2d(H, p)))
        zeros.append(ResonanceZero(float(p[0]), float(p[1]),
                                   float(np.linalg.norm(H(p))), det, it))
    zeros.sort(key=lambda z: (z.a, z.theta))
    return ResonanceMap(H, H_many, zeros, False, tuple(a_range),
                        tuple(theta_range))
