"""Periodic orbits of the full system by period-map shooting.

Newton iteration on P(xi) = x(T; 0, xi) - xi with the flow Jacobian from
the coupled variational run of the full field.  A sweep over decreasing
eps values supports warm starts, records per-eps failures, and fits the
convergence rate of the orbit's distance to the reference boundary.
"""

from dataclasses import dataclass, field

import numpy as np

from .solver import DEFAULT_CONFIG, integrate
from .topology import PlanarRegion

__all__ = [
    "NewtonStalledError", "SingularJacobianError", "PeriodicOrbitResult",
    "shoot", "MembershipReport", "pullback_membership", "orbit_amplitude",
    "equilibrium_candidates", "SweepResult", "eps_sweep",
]


class NewtonStalledError(RuntimeError):
    def __init__(self, history):
        self.history = list(history)
        tail = ", ".join(f"{r:.3e}" for r in self.history[-6:])
        super().__init__(f"shooting Newton stalled (residuals ... {tail})")


class SingularJacobianError(RuntimeError):
    pass


@dataclass
class PeriodicOrbitResult:
    eps: float
    seed: np.ndarray
    xi_star: np.ndarray
    residual: float
    iterations: int
    converged: bool
    multipliers: np.ndarray
    jacobian_singular: bool
    orbit: object = None
    in_region: bool = None
    membership_margin: float = None
    boundary_distance: float = None
    residual_history: list = field(default_factory=list)
    failure: str = None


def _period_map(sys, eps, xi, cfg, with_jacobian=True):
    k = sys.k
    fld = sys.field(eps)
    if not with_jacobian:
        end = integrate(fld, 0.0, sys.T, xi, cfg).endpoint
        return end - xi, None
    jac = sys.field_jac(eps)

    def rhs(t, z):
        x = z[:k]
        V = z[k:].reshape(k, k)
        return np.concatenate([fld(t, x), (jac(t, x) @ V).ravel()])

    z0 = np.concatenate([xi, np.eye(k).ravel()])
    end = integrate(rhs, 0.0, sys.T, z0, cfg).endpoint
    return end[:k] - xi, end[k:].reshape(k, k)


def shoot(sys, eps, seed, cfg=DEFAULT_CONFIG, region=None, shoot_tol=1e-9,
          max_iter=25, max_halvings=40, stall_window=3, stall_factor=0.98,
          singular_tol=1e-8):
    """Damped Newton on the period map from the given seed.

    At eps = 0 with a seed on a cycle the period-map Jacobian is singular
    (unit multiplier); that case is reported through
    ``jacobian_singular``, not raised.  A singular Jacobian away from
    eps = 0 raises :class:`SingularJacobianError`; lack of progress raises
    :class:`NewtonStalledError` with the residual history.
    """
    xi = np.atleast_1d(np.asarray(seed, dtype=float)).copy()
    history = []
    iterations = 0
    for it in range(max_iter + 1):
        P, M = _period_map(sys, eps, xi, cfg)
        res = float(np.linalg.norm(P))
        history.append(res)
        iterations = it
        if res <= shoot_tol:
            break
        sv = np.linalg.svd(M - np.eye(sys.k), compute_uv=False)
        singular = sv[-1] <= singular_tol * (1.0 + sv[0])
        if singular:
            if eps == 0:
                return _finish(sys, eps, seed, xi, res, iterations, False,
                               M, True, history, region, cfg, shoot_tol)
            raise SingularJacobianError(
                f"period-map Jacobian singular at eps={eps} "
                f"(smallest singular value {sv[-1]:.3e})")
        if it == max_iter:
            raise NewtonStalledError(history)
        if len(history) > stall_window and \
                history[-1] > stall_factor * history[-1 - stall_window]:
            raise NewtonStalledError(history)
        direction = np.linalg.solve(M - np.eye(sys.k), -P)
        alpha = 1.0
        accepted = False
        for _ in range(max_halvings):
            cand = xi + alpha * direction
            Pc, _ = _period_map(sys, eps, cand, cfg, with_jacobian=False)
            if float(np.linalg.norm(Pc)) < res:
                xi = cand
                accepted = True
                break
            alpha /= 2.0
        if not accepted:
            raise NewtonStalledError(history)
    sv = np.linalg.svd(M - np.eye(sys.k), compute_uv=False)
    singular = bool(sv[-1] <= singular_tol * (1.0 + sv[0]))
    return _finish(sys, eps, seed, xi, res, iterations, True, M, singular,
                   history, region, cfg, shoot_tol)


def _finish(sys, eps, seed, xi, res, iterations, converged, M, singular,
            history, region, cfg, shoot_tol):
    orbit = integrate(sys.field(eps), 0.0, sys.T, xi, cfg) if converged else None
    result = PeriodicOrbitResult(
        eps=float(eps), seed=np.asarray(seed, dtype=float),
        xi_star=xi.copy(), residual=res, iterations=iterations,
        converged=converged, multipliers=np.linalg.eigvals(M),
        jacobian_singular=singular, orbit=orbit,
        residual_history=history)
    if region is not None and converged:
        mem = pullback_membership(sys, orbit, region, cfg=cfg)
        result.in_region = mem.in_region
        result.membership_margin = mem.margin
        result.boundary_distance = float(
            region.distance_to_boundary(xi[None, :])[0])
    return result


@dataclass
class MembershipReport:
    in_region: bool
    margin: float
    witness_time: float = None


def _pullback_to_zero(sys, times, states, cfg):
    """Omega(0, t_i, states_i) for all i via one descending backward sweep.

    Rows are injected into a growing batch as the sweep passes their start
    times, so the whole set costs one pass over [max(times), 0].
    """
    times = np.asarray(times, dtype=float)
    states = np.atleast_2d(np.asarray(states, dtype=float))
    k = states.shape[1]
    out = np.empty_like(states)
    order = np.argsort(-times, kind="stable")
    uniq = np.unique(times)[::-1]
    batch_rows = []
    batch = np.zeros((0, k))
    t_cur = float(uniq[0])
    for t_next in list(uniq):
        if t_next < t_cur and batch.shape[0]:
            n = batch.shape[0]

            def rhs(t, z, n=n):
                return sys.psi_many(t, z.reshape(n, k)).ravel()

            batch = integrate(rhs, t_cur, t_next, batch.ravel(),
                              cfg).endpoint.reshape(n, k)
        t_cur = t_next
        joining = order[times[order] == t_next]
        if joining.size:
            batch = np.vstack([batch, states[joining]])
            batch_rows.extend(joining.tolist())
    if t_cur > 0.0 and batch.shape[0]:
        n = batch.shape[0]

        def rhs(t, z, n=n):
            return sys.psi_many(t, z.reshape(n, k)).ravel()

        batch = integrate(rhs, t_cur, 0.0, batch.ravel(),
                          cfg).endpoint.reshape(n, k)
    out[batch_rows] = batch
    return out


def pullback_membership(sys, orbit, region, n_time=256, cfg=DEFAULT_CONFIG):
    """Whether the flow pullback Omega(0, t, x(t)) stays inside the region.

    The pullback is computed by backward flow at each grid time; interior
    membership is the boundary winding-number test and the margin is the
    smallest distance from the pullbacks to the boundary.
    """
    times = np.linspace(0.0, sys.T, n_time)
    xs = orbit.eval(times)
    pulls = _pullback_to_zero(sys, times, xs, cfg)
    if isinstance(region, PlanarRegion):
        inside = region.winding_around(pulls) == 1
    else:
        inside = np.array([region.contains(p) for p in pulls])
    if np.all(inside):
        margin = float(region.distance_to_boundary(pulls).min())
        return MembershipReport(True, margin)
    bad = int(np.argmin(inside))
    return MembershipReport(False, 0.0, float(times[bad]))


def orbit_amplitude(orbit, n=512):
    """max over the period of |x(t)|."""
    times = np.linspace(orbit.t0, orbit.t1, n)
    return float(np.max(np.linalg.norm(orbit.eval(times), axis=1)))


def equilibrium_candidates(sys, eps, region=None, n_grid=3, tol=1e-12,
                           max_iter=60):
    """Equilibria of the full autonomous field (each is T-periodic for
    every T); used as shooting seeds when the period map stalls.

    Only meaningful for autonomous systems; returns an empty list
    otherwise.
    """
    if not sys.autonomous:
        return []
    fld = sys.field(eps)
    jac = sys.field_jac(eps)
    seeds = []
    if region is not None:
        if isinstance(region, PlanarRegion):
            pts = region.boundary_points(64)
            lo, hi = pts.min(axis=0), pts.max(axis=0)
            axes = [np.linspace(lo[j], hi[j], n_grid) for j in range(2)]
            grid = np.meshgrid(*axes, indexing="ij")
            seeds.extend(np.column_stack([g.ravel() for g in grid]))
            if region.star_center is not None:
                seeds.append(region.star_center)
        else:
            centers = np.concatenate([f.star_center for f in region.factors])
            seeds.append(centers)
    else:
        seeds.append(np.zeros(sys.k))
    found = []
    for seed in seeds:
        x = np.asarray(seed, dtype=float).copy()
        for _ in range(max_iter):
            v = fld(0.0, x)
            r = float(np.linalg.norm(v))
            if r <= tol:
                break
            try:
                d = np.linalg.solve(jac(0.0, x), -v)
            except np.linalg.LinAlgError:
                r = np.inf
                break
            alpha = 1.0
            moved = False
            for _ in range(30):
                cand = x + alpha * d
                if float(np.linalg.norm(fld(0.0, cand))) < r:
                    x = cand
                    moved = True
                    break
                alpha /= 2.0
            if not moved:
                r = np.inf
                break
        if r <= tol:
            if region is not None and not region.contains(x):
                continue
            if not any(np.linalg.norm(x - y) <= 1e-8 for y in found):
                found.append(x)
    return found


@dataclass
class SweepResult:
    results: list
    slope: float = None
    seeds_used: list = field(default_factory=list)

    def converged(self):
        return [r for r in self.results if r.converged]


def eps_sweep(sys, region, eps_list, seed_strategy="continuation", seed=None,
              cycle=None, melnikov=None, cfg=DEFAULT_CONFIG, shoot_tol=1e-9,
              threads=1):
    """Shoot for periodic orbits over a list of eps values.

    Seeds: an explicit ``seed``; otherwise, with a cycle and its weighted
    integral profile, the cycle point where |M(theta)| peaks; otherwise the
    region star center.  When the period map stalls or degenerates, the
    sweep falls back to equilibria of the full field (for autonomous
    systems) and to the star center before recording a failure.  The rate
    fit regresses log distance-to-boundary of the found orbits on log eps.
    Fixed-seed sweeps may run eps values in a thread pool; warm-started
    sweeps are sequential by definition.
    """
    if seed is not None:
        current = np.atleast_1d(np.asarray(seed, dtype=float))
    elif cycle is not None and melnikov is not None:
        current = cycle.eval(melnikov.argmax_abs())
    elif cycle is not None:
        current = cycle.eval(0.0)
    elif region is not None and getattr(region, "star_center", None) is not None:
        current = region.star_center
    else:
        current = np.zeros(sys.k)

    def attempt_eps(eps, start):
        attempts = [np.asarray(start, dtype=float)]
        attempts.extend(equilibrium_candidates(sys, eps, region))
        if region is not None and getattr(region, "star_center", None) is not None:
            attempts.append(region.star_center)
        last_error = None
        for attempt in attempts:
            try:
                outcome = shoot(sys, eps, attempt, cfg=cfg, region=region,
                                shoot_tol=shoot_tol)
            except (NewtonStalledError, SingularJacobianError,
                    np.linalg.LinAlgError) as err:
                last_error = err
                continue
            if outcome.converged:
                return outcome, np.asarray(attempt, dtype=float)
            last_error = RuntimeError("did not converge")
        failed = PeriodicOrbitResult(
            eps=float(eps), seed=np.asarray(attempts[0], dtype=float),
            xi_star=np.full(sys.k, np.nan), residual=np.inf,
            iterations=0, converged=False,
            multipliers=np.full(sys.k, np.nan, dtype=complex),
            jacobian_singular=False, failure=str(last_error))
        return failed, np.asarray(attempts[0], dtype=float)

    results = []
    seeds_used = []
    if seed_strategy == "fixed" and threads > 1 and len(eps_list) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(lambda e: attempt_eps(e, current), eps_list))
        for outcome, used in pairs:
            results.append(outcome)
            seeds_used.append(used)
    else:
        for eps in eps_list:
            outcome, used = attempt_eps(eps, current)
            results.append(outcome)
            seeds_used.append(used)
            if seed_strategy == "continuation" and outcome.converged:
                current = outcome.xi_star

    slope = None
    pts = [(r.eps, r.boundary_distance) for r in results
           if r.converged and r.boundary_distance and r.boundary_distance > 0]
    if len(pts) >= 2:
        le = np.log([p[0] for p in pts])
        ld = np.log([p[1] for p in pts])
        slope = float(np.polyfit(le, ld, 1)[0])
    return SweepResult(results, slope, seeds_used)
