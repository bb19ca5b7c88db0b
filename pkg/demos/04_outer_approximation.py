"""Outer approximation on min -2 log x + x over the positive integers.

Each round adds the tangent of -2 log at the current point and re-solves
the piecewise-linear master problem. Starting from x = 4 the anchors are
4, 1 and 2, and the optimum is x = 2.
"""

import math

from dagmip.solver import solve_integer_log_program

trace = solve_integer_log_program(c=1.0, start=4)
for x, y in zip(trace.iterates, trace.cut_values):
    print(f"x = {x}: master value of the log term {y:.6f}, true value {-2 * math.log(x):.6f}")
for cut in sorted(trace.cuts, key=lambda c: -c.anchor):
    print(f"cut at {cut.anchor:g}: y >= {cut.slope:+.3f} x {cut.intercept:+.6f}")
print(f"optimum x = {trace.x}, value {trace.value:.6f} (2 - 2 log 2 = {2 - 2 * math.log(2):.6f})")
