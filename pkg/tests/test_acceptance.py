"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Derived constants are reproduced by their stated independent oracles before
being asserted against the implementation.
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from epsode import (PlanarRegion, accumulated_angle, check_A0, check_A1,
                    check_A2, eps_sweep, eta, averaged_field, flow_omega,
                    gauss_legendre_panels, melnikov_profile, monodromy,
                    orbit_amplitude, product_degree, ProductRegion,
                    resonance_H, resonance_initial_point, shoot,
                    system_from_expressions, compare_defect_degrees,
                    verify_cauchy, winding_number, floquet_condition_A3)
from epsode.cli import run as cli_run
from epsode.expressions import differentiate, evaluate, parse, to_string

TWO_PI = 2 * np.pi
E1_PSI = ("-x2 + x1*(1 - x1^2 - x2^2)", "x1 + x2*(1 - x1^2 - x2^2)")


class Criterion:
    def __init__(self, number, title, budget):
        self.number = number
        self.title = title
        self.budget = budget
        self.failures = []
        self.t0 = time.perf_counter()

    def check(self, ok, what):
        if not ok:
            self.failures.append(what)

    def finish(self):
        elapsed = time.perf_counter() - self.t0
        status = "PASS" if not self.failures else "FAIL"
        print(f"ACCEPTANCE {self.number} [{self.title}]: {status} "
              f"({elapsed:.1f}s / budget {self.budget:.0f}s)"
              + ("" if not self.failures else " :: " + "; ".join(self.failures)))
        assert elapsed <= self.budget, \
            f"criterion {self.number} exceeded its runtime budget"
        assert not self.failures, "; ".join(self.failures)


def test_criterion_1_melnikov_constant(e1, e1_cycle):
    crit = Criterion(1, "cycle integral constant", 2.0)
    # oracle first: adaptive quadrature of the closed-form integrand
    oracle, _ = quad(lambda t: np.exp(2 * t) * (-np.cos(t)), 0.0, TWO_PI,
                     limit=200)
    closed = -(2.0 / 5.0) * (np.exp(4 * np.pi) - 1.0)
    crit.check(abs(oracle - closed) / abs(closed) <= 1e-10,
               "quadrature oracle disagrees with the closed form")
    prof = melnikov_profile(e1, e1_cycle, np.linspace(0.0, TWO_PI, 65))
    rel = np.max(np.abs(prof.values - closed)) / abs(closed)
    crit.check(rel <= 1e-6, f"M relative error {rel:.3e} > 1e-6")
    spread = np.max(np.abs(prof.values - prof.values[0])) / abs(prof.values[0])
    crit.check(spread <= 1e-8, f"theta dependence {spread:.3e} > 1e-8")
    crit.finish()


def test_criterion_2_existence_loop_on_e1(e1, disk, e1_cycle):
    crit = Criterion(2, "existence loop on the cycle testbed", 30.0)
    a0 = check_A0(e1, disk)
    crit.check(a0.verdict == "holds" and a0.margin <= 1e-7,
               f"A0 {a0.verdict} margin {a0.margin:.3e}")
    a1 = check_A1(e1, disk)
    crit.check(a1.verdict == "holds" and a1.margin > 0,
               f"A1 {a1.verdict} min {a1.margin:.3e}")
    a2_lo, deg_lo = check_A2(e1, disk, boundary_samples=512)
    a2_hi, deg_hi = check_A2(e1, disk, boundary_samples=1024)
    stable = (a2_lo.verdict == "holds" and a2_hi.verdict == "holds"
              and deg_lo.degree == deg_hi.degree and deg_lo.degree != 0)
    crit.check(stable,
               f"A2 degree not a stable nonzero integer "
               f"({a2_lo.verdict}/{a2_hi.verdict}: the defect field "
               f"vanishes on the boundary)")
    prof = melnikov_profile(e1, e1_cycle, np.linspace(0.0, TWO_PI, 65))
    sw = eps_sweep(e1, disk, [1e-2, 5e-3, 2.5e-3], cycle=e1_cycle,
                   melnikov=prof)
    conv = [r for r in sw.results if r.converged]
    crit.check(len(conv) == 3, f"only {len(conv)}/3 eps values converged")
    crit.check(all(r.residual <= 1e-9 for r in conv), "residual > 1e-9")
    crit.check(all(r.in_region for r in conv), "orbit not in the admissible set")
    crit.check(sw.slope is not None and 0.7 <= sw.slope <= 1.3,
               f"distance-to-cycle slope {sw.slope} outside [0.7, 1.3]")
    crit.finish()


def test_criterion_3_resonance_example(e2):
    crit = Criterion(3, "forced-center resonance example", 30.0)
    a0_oracle = brentq(lambda a: a ** 3 - 4 * a - 4, 2.0, 3.0, xtol=1e-14)
    crit.check(abs(a0_oracle - 2.3829) <= 1e-3,
               "bisection oracle far from the documented value")
    rm = resonance_H("(1 - x1^2)*x2 + cos(t)", (0.5, 3.5), (0.0, TWO_PI),
                     grid=(12, 12))
    crit.check(len(rm.zeros) == 1, f"{len(rm.zeros)} zeros found, expected 1")
    z = rm.zeros[0]
    crit.check(abs(z.theta - np.pi / 2) <= 1e-6,
               f"theta0 off by {abs(z.theta - np.pi / 2):.2e}")
    crit.check(abs(z.a - 2.3829) <= 1e-3, f"a0 = {z.a}")
    crit.check(abs(z.a - a0_oracle) <= 1e-8, "a0 disagrees with the oracle")
    det_expected = -np.pi ** 2 * (3 * z.a ** 2 / 4 - 1.0)
    crit.check(abs(z.det - det_expected) <= 1e-4,
               f"det H' = {z.det} vs {det_expected}")
    rep = winding_number(lambda P: rm.evaluate_many(P[:, 0], P[:, 1]),
                         rm.box(z, 0.2), n0=256, vectorized=True)
    crit.check(abs(rep.degree) == 1 and rep.degree == int(np.sign(z.det)),
               f"box degree {rep.degree} vs sign(det) {int(np.sign(z.det))}")
    res = shoot(e2, 1e-3, resonance_initial_point(z.a, z.theta))
    crit.check(res.converged and res.residual <= 1e-9,
               f"shoot residual {res.residual:.2e}")
    amp = orbit_amplitude(res.orbit)
    crit.check(abs(amp - z.a) <= 0.05, f"orbit amplitude {amp} vs a0 {z.a}")
    crit.finish()


def test_criterion_4_static_flow_reduction(e3):
    crit = Criterion(4, "static-flow averaging consistency", 5.0)
    av = averaged_field(e3, r=2.0)
    nodes, weights = gauss_legendre_panels(0.0, TWO_PI, 64, 8)
    worst = 0.0
    for xi in av.samples:
        f0 = float(np.dot(weights,
                          [e3.phi(t, xi)[0] for t in nodes])) / TWO_PI
        worst = max(worst, abs(av(xi)[0] - f0))
    crit.check(worst <= 1e-6, f"averaged field vs direct average: {worst:.2e}")
    worst = 0.0
    for n in (1, 3):
        for xi in (1.3, -0.4):
            sol = eta(e3, 0.0, [xi], eval_times=[-n * TWO_PI])
            worst = max(worst, abs(sol.values[0][0] - xi * n * TWO_PI))
    crit.check(worst <= 1e-9, f"backward response vs closed form: {worst:.2e}")
    crit.finish()


def test_criterion_5_first_order_rate(e3):
    crit = Criterion(5, "first-order approximation rate", 20.0)
    verdicts = verify_cauchy(e3, [1.0], 1.0, [0.01, 0.005], gamma_tol=0.1)
    crit.check(all(v.passed for v in verdicts),
               "sup error above gamma tolerance 0.1")
    ratio = verdicts[0].sup_error / verdicts[1].sup_error
    crit.check(1.6 <= ratio <= 2.4, f"error ratio {ratio:.3f} not in [1.6, 2.4]")
    crit.finish()


def _complex_power_forcing(z, n, w):
    zr, zi = z
    powers = {
        1: ("x1", "x2"),
        2: ("(x1^2 - x2^2)", "(2*x1*x2)"),
        3: ("(x1^3 - 3*x1*x2^2)", "(3*x1^2*x2 - x2^3)"),
    }[n]
    re = f"{zr}*{powers[0]} - {zi}*{powers[1]} + {w}*cos(t)"
    im = f"{zi}*{powers[0]} + {zr}*{powers[1]}"
    return (re, im)


def test_criterion_6_homotopy_invariance(disk):
    crit = Criterion(6, "homotopy invariance of the defect degree", 20.0)
    # documented random family: scaled complex-power fields z * (x1 + i x2)^n
    # with both coefficients in the right half plane, plus a zero-average
    # time term; convex combinations stay nonvanishing on the circle because
    # the segment between the coefficients misses the origin
    for trial in range(20):
        rng = np.random.default_rng(1000 + trial)
        n = int(rng.integers(1, 4))
        pair = []
        for m in range(2):
            mod = rng.uniform(0.5, 2.0)
            ang = rng.uniform(-1.2, 1.2)
            w = round(rng.uniform(-1.0, 1.0), 3)
            zc = (round(mod * np.cos(ang), 6), round(mod * np.sin(ang), 6))
            pair.append(system_from_expressions(
                f"trial{trial}-{m}", 2, TWO_PI,
                _complex_power_forcing(zc, n, w), ("0", "0")))
        rep = compare_defect_degrees(pair[0], pair[1], disk, boundary_samples=64,
                               s_grid=np.linspace(0.0, TWO_PI, 5))
        crit.check(rep.verdict == "holds",
                   f"trial {trial}: verdict {rep.verdict}")
        crit.check(rep.degree_1 == rep.degree_2 == n,
                   f"trial {trial}: degrees {rep.degree_1}, {rep.degree_2} "
                   f"vs expected {n}")
    s1 = system_from_expressions("c1", 2, TWO_PI, ("1", "0"), ("0", "0"))
    s2 = system_from_expressions("c2", 2, TWO_PI, ("-x1", "-x2"), ("0", "0"))
    rep = compare_defect_degrees(s1, s2, disk, boundary_samples=64,
                           s_grid=np.linspace(0.0, TWO_PI, 5))
    crit.check(rep.verdict == "inconclusive",
               f"counter-pair verdict {rep.verdict}")
    crit.check(abs(rep.witness.get("lambda", -1) - 0.5) <= 1e-12,
               f"vanishing-homotopy witness {rep.witness}")
    crit.finish()


def test_criterion_7_floquet_multipliers(e1, e1_cycle):
    crit = Criterion(7, "Floquet multipliers and Liouville identity", 5.0)
    rep = monodromy(lambda t: e1.psi_jac(t, e1_cycle.eval(t)), TWO_PI)
    mus = sorted(rep.multipliers, key=lambda m: -abs(m))
    crit.check(abs(mus[0] - 1.0) <= 1e-6, f"|mu1 - 1| = {abs(mus[0] - 1):.2e}")
    crit.check(abs(mus[1] - np.exp(-4 * np.pi)) <= 1e-7,
               f"|mu2 - e^-4pi| = {abs(mus[1] - np.exp(-4 * np.pi)):.2e}")
    liou = [rep.liouville_rel_err]
    liou.append(monodromy(lambda t: np.array([[1.0]]), 1.0).liouville_rel_err)
    liou.append(monodromy(lambda t: np.zeros((2, 2)), TWO_PI).liouville_rel_err)
    a3 = floquet_condition_A3(e1, e1_cycle,
                              theta_grid=np.linspace(0.0, TWO_PI, 9))
    liou.append(a3.max_liouville_rel_err)
    crit.check(max(liou) <= 1e-6,
               f"worst Liouville relative error {max(liou):.2e}")
    crit.finish()


def test_criterion_8_infrastructure(e1, e2, disk, tmp_path):
    crit = Criterion(8, "infrastructure properties", 60.0)

    # flow semigroup and inversion
    rng = np.random.default_rng(77)
    worst = 0.0
    for sysd in (e1, e2):
        for _ in range(4):
            xi = rng.uniform(-1.2, 1.2, 2)
            scale = 1e-8 * (1 + np.linalg.norm(xi))
            mid = flow_omega(sysd, 1.2, 0.0, xi)
            err1 = np.linalg.norm(flow_omega(sysd, 2.9, 1.2, mid)
                                  - flow_omega(sysd, 2.9, 0.0, xi)) / scale
            err2 = np.linalg.norm(flow_omega(sysd, 0.0, 2.9,
                                             flow_omega(sysd, 2.9, 0.0, xi))
                                  - xi) / scale
            worst = max(worst, err1, err2)
    crit.check(worst <= 1.0, f"flow identities off by {worst:.2f}x tolerance")

    # response affinity in the forcing
    phis = (("1", "0"), ("sin(t)*x2", "x1"))
    vals = []
    for phi in phis:
        sysd = system_from_expressions("aff", 2, TWO_PI, phi, E1_PSI)
        vals.append(eta(sysd, 0.5, [0.8, 0.1], [0.0, TWO_PI]).values)
    lam = 0.3
    mix = tuple(f"{lam}*({a}) + {1 - lam}*({b})"
                for a, b in zip(phis[0], phis[1]))
    sys_mix = system_from_expressions("affmix", 2, TWO_PI, mix, E1_PSI)
    vmix = eta(sys_mix, 0.5, [0.8, 0.1], [0.0, TWO_PI]).values
    aff_err = np.max(np.abs(vmix - (lam * vals[0] + (1 - lam) * vals[1])))
    crit.check(aff_err <= 1e-9, f"affinity error {aff_err:.2e}")

    # degree axioms at test scale
    def zsq(P):
        return np.stack([P[:, 0] ** 2 - P[:, 1] ** 2,
                         2 * P[:, 0] * P[:, 1]], axis=1)

    degs = {winding_number(
        lambda P, lam=lam: zsq(P) + lam * np.array([0.3, 0.0]),
        disk, vectorized=True).degree for lam in np.linspace(0, 1, 5)}
    crit.check(degs == {2}, f"homotopy invariance broken: degrees {degs}")
    pts = disk.boundary_points(256)
    total = accumulated_angle(zsq(pts))
    crit.check(abs(accumulated_angle(zsq(pts)[::-1]) + total) <= 1e-12,
               "orientation reversal does not negate the angle sum")
    prod = ProductRegion([PlanarRegion.circle(0, 0, 1, 128),
                          PlanarRegion.circle(0, 0, 1, 128)])
    dprod = product_degree([zsq, lambda P: P], prod, vectorized=True).degree
    crit.check(dprod == 2, f"product degree {dprod} != 2")

    poly = PlanarRegion.polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)])
    curve = PlanarRegion.from_curve(lambda u: poly.boundary_points(us=u),
                                    star_center=(0.0, 0.0))
    crit.check(winding_number(zsq, poly, vectorized=True).degree
               == winding_number(zsq, curve, vectorized=True).degree,
               "degree changed under boundary re-parametrization")

    # parser round-trip and derivative-vs-finite-difference at 500 samples
    def random_expr(rg, depth=0):
        atoms = ["t", "x1", "x2", str(round(rg.uniform(-2, 2), 3))]
        if depth >= 3 or rg.uniform() < 0.3:
            return rg.choice(atoms)
        op = rg.choice(["+", "-", "*", "f", "p"])
        a = random_expr(rg, depth + 1)
        b = random_expr(rg, depth + 1)
        if op == "f":
            fn = rg.choice(["sin", "cos", "exp"])
            return f"exp(0.3*({a}))" if fn == "exp" else f"{fn}({a})"
        if op == "p":
            return f"({a})^{rg.integers(2, 4)}"
        return f"({a}) {op} ({b})"

    rg = np.random.default_rng(42)
    checked = 0
    worst_fd = 0.0
    while checked < 500:
        e = parse(random_expr(rg))
        e2_ = parse(to_string(e))
        var = rg.choice(["t", "x1", "x2"])
        d = differentiate(e, var)
        t = rg.uniform(-2, 2)
        x = rg.uniform(-2, 2, 2)
        base = evaluate(e, t, x)
        if evaluate(e2_, t, x) != pytest.approx(base, rel=1e-14, abs=1e-14):
            crit.check(False, f"round trip broke for {to_string(e)}")
            break
        h = 1e-6 * (1 + abs({"t": t, "x1": x[0], "x2": x[1]}[var]))

        def at(delta):
            tt, xx = t, x.copy()
            if var == "t":
                tt = t + delta
            else:
                xx[int(var[1]) - 1] += delta
            return evaluate(e, tt, xx)

        exact = evaluate(d, t, x)
        fd = (at(h) - at(-h)) / (2 * h)
        tol = 1e-6 * (1 + abs(base) + abs(exact))
        worst_fd = max(worst_fd, abs(exact - fd) / tol)
        checked += 1
    crit.check(worst_fd <= 1.0,
               f"derivative vs finite differences off by {worst_fd:.2f}x")

    # byte-identical CSV reruns through the command line
    cfg = tmp_path / "e1.cfg"
    cfg.write_text("[system]\nbuiltin = e1-circle\n\n"
                   "[cycle]\nseed = (1, 0)\n")
    f1, f2 = tmp_path / "m1.csv", tmp_path / "m2.csv"
    rc1 = cli_run(["melnikov", "--config", str(cfg), "--out", str(f1)])
    rc2 = cli_run(["melnikov", "--config", str(cfg), "--out", str(f2)])
    crit.check(rc1 == 0 and rc2 == 0, "melnikov command failed")
    crit.check(f1.read_bytes() == f2.read_bytes(),
               "CSV reruns are not byte-identical")
    crit.finish()
