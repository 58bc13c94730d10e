"""Adaptive integration with dense output and the unperturbed flow map."""

import numpy as np

from epsode import IntegratorConfig, builtin_system, flow_omega, integrate

e1 = builtin_system("e1-circle")

# dense-output trajectory of the unperturbed field through (1, 0)
cycle = integrate(e1.psi, 0.0, 2 * np.pi, [1.0, 0.0])
print(f"steps taken: {len(cycle.ts) - 1}")
print(f"return after one period: {cycle.endpoint}  (started at [1, 0])")

# interpolation between steps
mid = cycle.eval(np.pi)
print(f"state at t = pi: {mid}   exact: [-1, 0]")

# backward integration is direct negative stepping
back = integrate(e1.psi, 2 * np.pi, 0.0, cycle.endpoint)
print(f"backward return: {back.endpoint}")

# flow maps compose: Omega(3, 1, Omega(1, 0, xi)) = Omega(3, 0, xi)
xi = np.array([0.4, 0.1])
a = flow_omega(e1, 3.0, 1.0, flow_omega(e1, 1.0, 0.0, xi))
b = flow_omega(e1, 3.0, 0.0, xi)
print(f"semigroup defect: {np.linalg.norm(a - b):.2e}")

# tolerances are configurable; tightening changes little
loose = integrate(e1.psi, 0.0, 1.0, xi,
                  IntegratorConfig(rel_tol=1e-6, abs_tol=1e-9)).endpoint
tight = integrate(e1.psi, 0.0, 1.0, xi).endpoint
print(f"loose vs tight endpoints differ by {np.linalg.norm(loose - tight):.2e}")
