"""Defining vector fields from expression strings with exact derivatives."""

import numpy as np

from epsode import (builtin_system, differentiate, evaluate, parse,
                    system_from_expressions, to_string)

# the expression language: t, x1..xk, parameters, ^ (right-assoc), functions
e = parse("-x2 + x1*(1 - x1^2 - x2^2)")
print("expression:", to_string(e))
print("value on the unit circle:", evaluate(e, 0.0, [1.0, 0.0]))

d = differentiate(e, "x2")
print("d/dx2:", to_string(d), "->", evaluate(d, 0.0, [1.0, 0.0]))

# systems built from expressions get exact Jacobians and divergences
e1 = builtin_system("e1-circle")
for line in e1.describe_lines():
    print(line)
for ang in (0.0, 1.0, 2.0):
    x = [np.cos(ang), np.sin(ang)]
    print(f"div psi at angle {ang}: {e1.psi_div(0.0, x):+.12f}  (cycle value -2)")

# parameters are bound at construction time
forced = system_from_expressions(
    "forced", 1, 2 * np.pi, ("-k0*x1 + cos(t)",), ("0",), {"k0": 2.5})
print("parameterised forcing at x = 1:", forced.phi(0.0, [1.0]))
