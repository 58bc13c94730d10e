"""Command-line front end.

Subcommands: describe, check (A0|A1|A2|A3), melnikov, degree, resonance,
average, verify-cauchy, find-periodic, sweep.  Configuration is a
sectioned key-value text file; ``--set section.key=value`` overrides
individual entries.  CSV output starts with comment lines recording the
tool version, the config hash and the seed, so identical configurations
give byte-identical files.  Exit codes: 0 holds/converged, 2 fails,
3 inconclusive, 1 usage or configuration error.
"""

import argparse
import ast
import configparser
import hashlib
import io
import re
import sys

import numpy as np

from . import __version__
from .averaging import NoConvergenceError, averaged_field, verify_cauchy
from .conditions import (check_A0, check_A1, check_A2, melnikov_profile,
                         resonance_H)
from .expressions import ParseError, compile_expr, parse as parse_expr
from .solver import IntegrationError, IntegratorConfig, integrate
from .svgplot import write_svg
from .systems import builtin_system, system_from_expressions
from .topology import (FieldVanishesError, NonConvergentError, PlanarRegion,
                       winding_number)
from .periodic import (NewtonStalledError, SingularJacobianError, eps_sweep,
                       shoot)
from .variational import cycle_residual, floquet_condition_A3

__all__ = ["run", "main", "ConfigError", "DEFAULT_SEED"]

DEFAULT_SEED = 12345

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILS = 2
EXIT_INCONCLUSIVE = 3


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "system": {"builtin", "k", "T"},  # plus phiN / psiN / param.NAME
    "region": {"shape", "star_center"},
    "integrator": {"rel_tol", "abs_tol", "max_step", "max_steps"},
    "grids": {"s_points", "theta_points", "boundary_samples", "a0_samples",
              "membership_points", "quad_panels", "quad_order"},
    "tolerances": {"a0_tol", "a1_tol", "a3_tol", "vanish_tol", "shoot_tol",
                   "phi_tol", "gamma_tol", "cycle_tol"},
    "cycle": {"seed"},
    "run": {"seed", "threads"},
    "shoot": {"eps", "seed"},
    "sweep": {"eps", "strategy", "seed"},
    "average": {"radius", "n_max", "samples"},
    "verify": {"xi0", "d", "eps"},
    "resonance": {"g", "a_range", "theta_range", "grid"},
    "field": set(),  # fN entries
}

_DYNAMIC_KEY = {
    "system": re.compile(r"^(phi[1-9][0-9]*|psi[1-9][0-9]*|param\.\w+)$"),
    "field": re.compile(r"^f[1-9][0-9]*$"),
}


def _check_keys(cfg):
    for section in cfg:
        if section == "DEFAULT":
            continue
        if section not in _SECTIONS:
            raise ConfigError(
                f"unknown config section [{section}]; valid sections: "
                + ", ".join(sorted(_SECTIONS)))
        allowed = _SECTIONS[section]
        dyn = _DYNAMIC_KEY.get(section)
        for key in cfg[section]:
            if key in allowed or (dyn and dyn.match(key)):
                continue
            valid = sorted(allowed) + ([dyn.pattern] if dyn else [])
            raise ConfigError(
                f"unknown key {key!r} in section [{section}]; valid keys: "
                + ", ".join(valid))


def parse_config(path, overrides=()):
    """Read the sectioned key-value config, applying overrides."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config file {path!r}: {err}") from err
    except configparser.Error as err:
        raise ConfigError(f"malformed config file {path!r}: {err}") from err
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(
                f"bad --set {item!r}; expected section.key=value")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, value)
    cfg = {s: dict(cp[s]) for s in cp.sections()}
    _check_keys(cfg)
    return cfg


def config_hash(cfg):
    canon = "\n".join(f"{s}.{k}={v}" for s in sorted(cfg)
                      for k, v in sorted(cfg[s].items()))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


# -- value coercion ---------------------------------------------------------

def _unquote(text):
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    return text


def _as_float(cfg, section, key, default=None):
    raw = cfg.get(section, {}).get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing {section}.{key}")
        return default
    try:
        return float(_unquote(raw))
    except ValueError as err:
        raise ConfigError(f"{section}.{key}: not a number: {raw!r}") from err


def _as_int(cfg, section, key, default=None):
    raw = cfg.get(section, {}).get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing {section}.{key}")
        return default
    try:
        return int(_unquote(raw))
    except ValueError as err:
        raise ConfigError(f"{section}.{key}: not an integer: {raw!r}") from err


def _as_floats(cfg, section, key, default=None):
    raw = cfg.get(section, {}).get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"missing {section}.{key}")
        return default
    raw = _unquote(raw).strip().strip("()[]")
    try:
        return [float(p) for p in raw.split(",") if p.strip()]
    except ValueError as err:
        raise ConfigError(f"{section}.{key}: not a number list: {raw!r}") from err


def _as_point(cfg, section, key, default=None):
    vals = _as_floats(cfg, section, key, default)
    return np.asarray(vals, dtype=float)


# -- builders ---------------------------------------------------------------

def build_system(cfg):
    sec = cfg.get("system", {})
    if "builtin" in sec:
        params = {k.split(".", 1)[1]: float(_unquote(v))
                  for k, v in sec.items() if k.startswith("param.")}
        try:
            return builtin_system(_unquote(sec["builtin"]), params or None)
        except KeyError as err:
            raise ConfigError(str(err)) from err
    if "k" not in sec:
        raise ConfigError("section [system] needs either builtin or an "
                          "inline definition (k, T, phiN, psiN)")
    k = _as_int(cfg, "system", "k")
    T = _as_float(cfg, "system", "T")
    phi = [_unquote(sec.get(f"phi{i + 1}", "")) for i in range(k)]
    psi = [_unquote(sec.get(f"psi{i + 1}", "")) for i in range(k)]
    if any(not c for c in phi) or any(not c for c in psi):
        raise ConfigError(f"inline system needs phi1..phi{k} and psi1..psi{k}")
    params = {kk.split(".", 1)[1]: float(_unquote(v))
              for kk, v in sec.items() if kk.startswith("param.")}
    try:
        return system_from_expressions("config-system", k, T, phi, psi, params)
    except (ParseError, ValueError) as err:
        raise ConfigError(f"bad system definition: {err}") from err


_SHAPE_RE = re.compile(r"^\s*(circle|polygon)\s*\((.*)\)\s*$", re.S)


def build_region(cfg):
    sec = cfg.get("region", {})
    if "shape" not in sec:
        raise ConfigError("missing region.shape "
                          "(circle(cx, cy, r, n) or polygon([...]))")
    m = _SHAPE_RE.match(_unquote(sec["shape"]))
    if not m:
        raise ConfigError(f"bad region.shape {sec['shape']!r}; expected "
                          "circle(cx, cy, r, n) or polygon([(x, y), ...])")
    kind, args = m.group(1), m.group(2)
    try:
        if kind == "circle":
            vals = ast.literal_eval(f"({args},)")
            cx, cy, r = (float(v) for v in vals[:3])
            n = int(vals[3]) if len(vals) > 3 else 512
            region = PlanarRegion.circle(cx, cy, r, n)
        else:
            verts = ast.literal_eval(args)
            region = PlanarRegion.polygon(verts)
    except (ValueError, SyntaxError) as err:
        raise ConfigError(f"bad region.shape {sec['shape']!r}: {err}") from err
    if "star_center" in sec:
        region.star_center = _as_point(cfg, "region", "star_center")
    return region


def build_integrator(cfg):
    return IntegratorConfig(
        rel_tol=_as_float(cfg, "integrator", "rel_tol", 1e-10),
        abs_tol=_as_float(cfg, "integrator", "abs_tol", 1e-12),
        max_step=_as_float(cfg, "integrator", "max_step", np.inf),
        max_steps=_as_int(cfg, "integrator", "max_steps", 1_000_000),
    )


def build_cycle(cfg, sys, icfg):
    seed = _as_point(cfg, "cycle", "seed", None)
    cycle = integrate(sys.psi, 0.0, sys.T, seed, icfg)
    tol = _as_float(cfg, "tolerances", "cycle_tol", 1e-6)
    res = cycle_residual(cycle, sys.T)
    if res > tol:
        raise ConfigError(
            f"cycle.seed does not close up: residual {res:.3e} > {tol:g}")
    return cycle


# -- output helpers ---------------------------------------------------------

def _fmt_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Output:
    def __init__(self, args, cfg, command):
        self.out_path = args.out
        self.plot_path = args.plot
        self.header = [
            f"# epsode {__version__}",
            f"# command {command}",
            f"# config {config_hash(cfg)}",
            f"# seed {_as_int(cfg, 'run', 'seed', DEFAULT_SEED)}",
        ]

    def write_csv(self, columns, rows):
        buf = io.StringIO()
        for line in self.header:
            buf.write(line + "\n")
        buf.write(",".join(columns) + "\n")
        for row in rows:
            buf.write(",".join(_fmt_value(v) for v in row) + "\n")
        data = buf.getvalue()
        if self.out_path:
            with open(self.out_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(data)
        else:
            sys.stdout.write(data)

    def write_plot(self, series, title, xlabel, ylabel):
        if self.plot_path:
            write_svg(self.plot_path, series, title, xlabel, ylabel)


def _verdict_exit(report):
    return {"holds": EXIT_OK, "fails": EXIT_FAILS,
            "inconclusive": EXIT_INCONCLUSIVE}[report.verdict]


# -- commands ---------------------------------------------------------------

def _cmd_describe(args, cfg):
    sys_def = build_system(cfg)
    for line in sys_def.describe_lines():
        print(line)
    if sys_def.phi_exprs is not None:
        jac = sys_def.psi_exprs.jacobian_exprs()
        from .expressions import to_string
        for i, row in enumerate(jac):
            print(f"dpsi{i + 1}/dx = (" + ", ".join(to_string(e) for e in row)
                  + ")")
    note = getattr(sys_def, "note", None)
    if note:
        print(f"note: {note}")
    if "region" in cfg:
        region = build_region(cfg)
        kind = "circle/curve" if region.curve is not None else "polygon"
        print(f"region: {kind}, star_center={region.star_center}, "
              f"n_hint={region.n_hint}")
    return EXIT_OK


def _cmd_check(args, cfg):
    sys_def = build_system(cfg)
    icfg = build_integrator(cfg)
    out = Output(args, cfg, f"check {args.condition}")
    cond = args.condition.upper()
    if cond == "A3":
        cycle = build_cycle(cfg, sys_def, icfg)
        n_theta = _as_int(cfg, "grids", "theta_points", 65)
        rep = floquet_condition_A3(
            sys_def, cycle, np.linspace(0.0, sys_def.T, n_theta),
            cycle_tol=_as_float(cfg, "tolerances", "cycle_tol", 1e-6),
            cfg=icfg)
        rows = [(r.theta, r.dist_to_one, r.gap, r.simple) for r in rep.rows]
        out.write_csv(("theta", "dist_to_one", "gap", "simple"), rows)
        out.write_plot([([r.theta for r in rep.rows],
                         [r.gap for r in rep.rows], "gap")],
                       "Floquet simplicity gap", "theta", "|mu_j - 1|")
        worst = min(rep.rows, key=lambda r: r.gap)
        if rep.holds:
            print(f"A3 holds (unit multiplier simple for all theta; "
                  f"min gap {worst.gap:.6g})")
            return EXIT_OK
        print(f"A3 fails (theta={worst.theta:.6g}: dist to 1 "
              f"{worst.dist_to_one:.3g}, gap {worst.gap:.3g})")
        return EXIT_FAILS

    region = build_region(cfg)
    if cond == "A0":
        rep = check_A0(sys_def, region,
                       n_samples=_as_int(cfg, "grids", "a0_samples", 512),
                       a0_tol=_as_float(cfg, "tolerances", "a0_tol", 1e-7),
                       cfg=icfg)
        pts = rep.data.get("points", np.zeros((0, sys_def.k)))
        res = rep.data.get("residuals", np.zeros(0))
        rows = [(i, *pts[i], float(res[i])) for i in range(len(pts))]
        out.write_csv(("index",) + tuple(f"x{j + 1}" for j in range(sys_def.k))
                      + ("residual",), rows)
        out.write_plot([(np.arange(len(res)), res, "residual")],
                       "Period-map residual on the boundary", "sample",
                       "relative residual")
    elif cond == "A1":
        s_points = _as_int(cfg, "grids", "s_points", 65)
        s_grid = np.linspace(0.0, sys_def.T, s_points)
        rep = check_A1(sys_def, region, s_grid=s_grid,
                       boundary_samples=_as_int(cfg, "grids",
                                                "boundary_samples", 512),
                       a1_tol=_as_float(cfg, "tolerances", "a1_tol", 1e-6),
                       cfg=icfg)
        per_s = rep.data.get("min_norm_per_s", np.full(len(s_grid), rep.margin))
        out.write_csv(("s", "min_defect_norm"),
                      list(zip(map(float, s_grid), map(float, per_s))))
        out.write_plot([(s_grid, per_s, "min defect")],
                       "Smallest defect norm per anchor", "s", "min |defect|")
    elif cond == "A2":
        n_boundary = _as_int(cfg, "grids", "boundary_samples", 512)
        rep, deg = check_A2(sys_def, region, boundary_samples=n_boundary,
                            vanish_tol=_as_float(cfg, "tolerances",
                                                 "vanish_tol", 1e-9),
                            cfg=icfg)
        if isinstance(region, PlanarRegion):
            from .variational import eta_defect_field
            pts = region.boundary_points(n_boundary)
            vals = eta_defect_field(sys_def, 0.0, icfg).eval_many(pts)
            norms = np.linalg.norm(vals, axis=1)
            out.write_csv(("x1", "x2", "F1", "F2", "norm"),
                          [(p[0], p[1], v[0], v[1], float(n))
                           for p, v, n in zip(pts, vals, norms)])
            out.write_plot([(np.arange(len(norms)), norms, "|defect|")],
                           "Defect field norm on the boundary", "sample",
                           "|F|")
        else:
            out.write_csv(("quantity", "value"),
                          [("degree", rep.witness.get("degree", ""))])
    else:
        raise ConfigError(f"unknown condition {args.condition!r}")
    print(rep.summary())
    return _verdict_exit(rep)


def _cmd_melnikov(args, cfg):
    sys_def = build_system(cfg)
    icfg = build_integrator(cfg)
    cycle = build_cycle(cfg, sys_def, icfg)
    n_theta = _as_int(cfg, "grids", "theta_points", 65)
    prof = melnikov_profile(
        sys_def, cycle, np.linspace(0.0, sys_def.T, n_theta),
        panels=_as_int(cfg, "grids", "quad_panels", 64),
        order=_as_int(cfg, "grids", "quad_order", 8),
        cycle_tol=_as_float(cfg, "tolerances", "cycle_tol", 1e-6), cfg=icfg)
    out = Output(args, cfg, "melnikov")
    out.write_csv(("theta", "M"),
                  list(zip(prof.thetas, prof.values)))
    out.write_plot([(prof.thetas, prof.values, "M(theta)")],
                   "Cycle integral profile", "theta", "M")
    rel_tol = _as_float(cfg, "tolerances", "a3_tol", 1e-8)
    scale = max(1.0, float(np.max(np.abs(prof.values))))
    if prof.min_abs > rel_tol * scale:
        print(f"A3_1 holds (min |M| = {prof.min_abs:.6g}, "
              f"weight range {prof.weight_range[0]:.3g}.."
              f"{prof.weight_range[1]:.3g})")
        return EXIT_OK
    print(f"A3_1 fails (min |M| = {prof.min_abs:.6g})")
    return EXIT_FAILS


def _cmd_degree(args, cfg):
    region = build_region(cfg)
    sec = cfg.get("field", {})
    comps = [sec.get("f1"), sec.get("f2")]
    if not all(comps):
        raise ConfigError("section [field] needs f1 and f2 expressions")
    try:
        fns = [compile_expr(parse_expr(_unquote(c)), arrays=True)
               for c in comps]
    except ParseError as err:
        raise ConfigError(f"bad field expression: {err}") from err

    def F(P):
        cols = [np.broadcast_to(f(0.0, (P[:, 0], P[:, 1])), (len(P),))
                for f in fns]
        return np.column_stack(cols)

    out = Output(args, cfg, "degree")
    try:
        rep = winding_number(
            F, region,
            n0=_as_int(cfg, "grids", "boundary_samples", 512),
            vectorized=True,
            vanish_tol=_as_float(cfg, "tolerances", "vanish_tol", 1e-9))
    except FieldVanishesError as err:
        out.write_csv(("quantity", "value"), [("degree", ""), ("note", str(err))])
        print(f"degree inconclusive ({err})")
        return EXIT_INCONCLUSIVE
    except NonConvergentError as err:
        out.write_csv(("quantity", "value"), [("degree", ""), ("note", str(err))])
        print(f"degree inconclusive ({err})")
        return EXIT_INCONCLUSIVE
    pts = region.boundary_points(min(rep.samples_used, 1024))
    vals = F(pts)
    out.write_csv(("x1", "x2", "F1", "F2"),
                  [(p[0], p[1], v[0], v[1]) for p, v in zip(pts, vals)])
    out.write_plot([(np.arange(len(vals)),
                     np.arctan2(vals[:, 1], vals[:, 0]), "angle")],
                   "Boundary field angle", "sample", "atan2(F2, F1)")
    print(f"degree {rep.degree} (min |F| = {rep.min_field_norm:.6g}, "
          f"{rep.samples_used} samples)")
    return EXIT_OK if rep.degree != 0 else EXIT_FAILS


def _cmd_resonance(args, cfg):
    sec = cfg.get("resonance", {})
    if "g" not in sec:
        raise ConfigError("section [resonance] needs the forcing expression g")
    a_range = tuple(_as_floats(cfg, "resonance", "a_range", [0.5, 3.5]))
    theta_range = tuple(_as_floats(cfg, "resonance", "theta_range",
                                   [0.0, 2 * np.pi]))
    gr = [int(v) for v in _as_floats(cfg, "resonance", "grid", [12, 12])]
    try:
        rm = resonance_H(_unquote(sec["g"]), a_range, theta_range,
                         grid=tuple(gr),
                         panels=_as_int(cfg, "grids", "quad_panels", 64),
                         order=_as_int(cfg, "grids", "quad_order", 8))
    except ParseError as err:
        raise ConfigError(f"bad forcing expression: {err}") from err
    out = Output(args, cfg, "resonance")
    rows = []
    for z in rm.zeros:
        try:
            box = rm.box(z)
            local = winding_number(
                lambda P: rm.evaluate_many(P[:, 0], P[:, 1]),
                box, n0=256, vectorized=True).degree
        except (FieldVanishesError, NonConvergentError):
            local = 0
        rows.append((z.a, z.theta, z.residual, z.det, local))
    out.write_csv(("a", "theta", "residual", "detH", "local_degree"), rows)
    if rm.degenerate:
        print("resonance map degenerate (H vanishes identically on the grid)")
        return EXIT_INCONCLUSIVE
    good = [z for z in rm.zeros if z.det != 0]
    if good:
        z = good[0]
        print(f"resonance zeros: {len(rm.zeros)} "
              f"(first at a={z.a:.6g}, theta={z.theta:.6g}, det {z.det:.6g})")
        return EXIT_OK
    print("no resonance zeros found in the given ranges")
    return EXIT_FAILS


def _cmd_average(args, cfg):
    sys_def = build_system(cfg)
    icfg = build_integrator(cfg)
    out = Output(args, cfg, "average")
    try:
        av = averaged_field(
            sys_def,
            r=_as_float(cfg, "average", "radius", 2.0),
            n_max=_as_int(cfg, "average", "n_max", 256),
            phi_tol=_as_float(cfg, "tolerances", "phi_tol", 1e-7),
            n_samples=_as_int(cfg, "average", "samples", 17),
            seed=_as_int(cfg, "run", "seed", DEFAULT_SEED),
            cfg=icfg)
    except (NoConvergenceError, IntegrationError) as err:
        out.write_csv(("note",), [(str(err),)])
        print(f"averaged field inconclusive ({err})")
        return EXIT_INCONCLUSIVE
    vals = av.eval_many(av.samples)
    cols = (tuple(f"xi{j + 1}" for j in range(sys_def.k))
            + tuple(f"Phi{j + 1}" for j in range(sys_def.k))
            + ("cauchy_estimate",))
    rows = [tuple(s) + tuple(v) + (e,)
            for s, v, e in zip(av.samples, vals, av.estimates)]
    out.write_csv(cols, rows)
    out.write_plot([(np.arange(len(vals)), np.linalg.norm(vals, axis=1),
                     "|Phi|")], "Averaged field at validation samples",
                   "sample", "|Phi|")
    print(f"averaged field converged (n_used={av.n_used}, evaluator "
          f"n={av.n_eval}, worst Cauchy estimate "
          f"{max(h for _, h in av.history[-1:]):.3g})")
    return EXIT_OK


def _cmd_verify_cauchy(args, cfg):
    sys_def = build_system(cfg)
    icfg = build_integrator(cfg)
    xi0 = _as_point(cfg, "verify", "xi0", None)
    d = _as_float(cfg, "verify", "d")
    eps_list = _as_floats(cfg, "verify", "eps")
    gamma = _as_float(cfg, "tolerances", "gamma_tol", 0.1)
    out = Output(args, cfg, "verify-cauchy")
    try:
        verdicts = verify_cauchy(
            sys_def, xi0, d, eps_list, gamma_tol=gamma, cfg=icfg,
            avg_radius=_as_float(cfg, "average", "radius", 0.0) or None,
            n_max=_as_int(cfg, "average", "n_max", 256),
            phi_tol=_as_float(cfg, "tolerances", "phi_tol", 1e-7),
            threads=args.threads)
    except (NoConvergenceError, IntegrationError, ValueError) as err:
        out.write_csv(("note",), [(str(err),)])
        print(f"verify-cauchy inconclusive ({err})")
        return EXIT_INCONCLUSIVE
    k = sys_def.k
    rows = []
    series = []
    for v in verdicts:
        stride = max(1, len(v.times) // 256)
        for i in range(0, len(v.times), stride):
            rows.append((v.eps, float(v.times[i]))
                        + tuple(v.x_values[i]) + tuple(v.approx_values[i])
                        + (float(v.errors[i]),))
        series.append((v.times, v.errors, f"eps={v.eps:g}"))
    cols = (("eps", "t") + tuple(f"x{j + 1}" for j in range(k))
            + tuple(f"approx{j + 1}" for j in range(k)) + ("error",))
    out.write_csv(cols, rows)
    out.write_plot(series, "Averaging error over the slow horizon",
                   "t", "|x_eps - prediction|")
    for v in verdicts:
        print(v.summary())
    n_pass = sum(v.passed for v in verdicts)
    print(f"verify-cauchy: {n_pass}/{len(verdicts)} pass at gamma "
          f"{gamma:g}")
    return EXIT_OK if n_pass == len(verdicts) else EXIT_FAILS


def _cmd_find_periodic(args, cfg):
    sys_def = build_system(cfg)
    icfg = build_integrator(cfg)
    eps = _as_float(cfg, "shoot", "eps")
    seed = _as_point(cfg, "shoot", "seed", None)
    region = build_region(cfg) if "region" in cfg else None
    out = Output(args, cfg, "find-periodic")
    try:
        res = shoot(sys_def, eps, seed, cfg=icfg, region=region,
                    shoot_tol=_as_float(cfg, "tolerances", "shoot_tol", 1e-9))
    except (NewtonStalledError, SingularJacobianError) as err:
        out.write_csv(("note",), [(str(err),)])
        print(f"find-periodic failed ({err})")
        return EXIT_FAILS
    rows = [_orbit_row(sys_def, res)]
    out.write_csv(_orbit_columns(sys_def), rows)
    if res.orbit is not None and sys_def.k == 2:
        ts = np.linspace(0.0, sys_def.T, 256)
        pts = res.orbit.eval(ts)
        out.write_plot([(pts[:, 0], pts[:, 1], "orbit")],
                       "Periodic orbit", "x1", "x2")
    print(f"find-periodic converged: xi*={res.xi_star} residual "
          f"{res.residual:.3g} ({res.iterations} iterations)")
    return EXIT_OK if res.converged else EXIT_FAILS


def _orbit_columns(sys_def):
    k = sys_def.k
    mu_cols = sum(((f"mu{j + 1}_re", f"mu{j + 1}_im") for j in range(k)), ())
    return (("eps", "converged") + tuple(f"xi{j + 1}" for j in range(k))
            + ("residual",) + mu_cols + ("in_region", "dist_to_boundary"))


def _orbit_row(sys_def, r):
    mus = sorted(r.multipliers, key=lambda m: -abs(m))
    mu_vals = sum(((float(m.real), float(m.imag)) for m in mus), ())
    return ((r.eps, r.converged) + tuple(r.xi_star) + (r.residual,)
            + mu_vals
            + ("" if r.in_region is None else r.in_region,
               "" if r.boundary_distance is None else r.boundary_distance))


def _cmd_sweep(args, cfg):
    sys_def = build_system(cfg)
    icfg = build_integrator(cfg)
    region = build_region(cfg) if "region" in cfg else None
    eps_list = _as_floats(cfg, "sweep", "eps")
    seed = _as_point(cfg, "sweep", "seed", np.array([])) \
        if "seed" in cfg.get("sweep", {}) else None
    cycle = None
    prof = None
    if "cycle" in cfg:
        cycle = build_cycle(cfg, sys_def, icfg)
        if sys_def.k == 2:
            prof = melnikov_profile(
                sys_def, cycle,
                np.linspace(0.0, sys_def.T,
                            _as_int(cfg, "grids", "theta_points", 65)),
                cycle_tol=_as_float(cfg, "tolerances", "cycle_tol", 1e-6),
                cfg=icfg)
    sw = eps_sweep(sys_def, region, eps_list,
                   seed_strategy=cfg.get("sweep", {}).get("strategy",
                                                          "continuation"),
                   seed=seed, cycle=cycle, melnikov=prof, cfg=icfg,
                   shoot_tol=_as_float(cfg, "tolerances", "shoot_tol", 1e-9),
                   threads=args.threads)
    out = Output(args, cfg, "sweep")
    out.write_csv(_orbit_columns(sys_def),
                  [_orbit_row(sys_def, r) for r in sw.results])
    conv = sw.converged()
    if conv and region is not None:
        out.write_plot([([r.eps for r in conv],
                         [r.boundary_distance for r in conv], "distance")],
                       "Orbit distance to the reference boundary", "eps",
                       "distance")
    slope_txt = "n/a" if sw.slope is None else f"{sw.slope:.3f}"
    print(f"sweep: {len(conv)}/{len(sw.results)} converged, "
          f"distance slope {slope_txt}")
    return EXIT_OK if len(conv) == len(sw.results) else EXIT_FAILS


_COMMANDS = {
    "describe": _cmd_describe,
    "check": _cmd_check,
    "melnikov": _cmd_melnikov,
    "degree": _cmd_degree,
    "resonance": _cmd_resonance,
    "average": _cmd_average,
    "verify-cauchy": _cmd_verify_cauchy,
    "find-periodic": _cmd_find_periodic,
    "sweep": _cmd_sweep,
}


def _build_parser():
    p = argparse.ArgumentParser(
        prog="epsode",
        description="numerical checks for periodic orbits and averaging of "
                    "periodically forced systems with a small parameter")
    sub = p.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        if name == "check":
            sp.add_argument("condition", choices=["A0", "A1", "A2", "A3"])
        sp.add_argument("--config", required=True)
        sp.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="SECTION.KEY=VALUE")
        sp.add_argument("--out", default=None)
        sp.add_argument("--plot", default=None)
        sp.add_argument("--threads", type=int, default=1)
    return p


def run(argv):
    """Entry point; returns the process exit code."""
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code == 0 else EXIT_USAGE
    try:
        cfg = parse_config(args.config, args.overrides)
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
