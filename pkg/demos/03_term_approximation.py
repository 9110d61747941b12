# The two reformulation strategies for concave terms, side by side:
# a least-squares quadratic (model size unchanged, visible bias) and an
# incremental piecewise-linear encoding (exact at breakpoints, adds
# fill variables and ordering binaries).

import numpy as np

from gdpkit import build_pwl, encode_pwl_incremental, fit_quadratic
from gdpkit.transforms import FlatModel

f = lambda x: np.asarray(x, dtype=float) ** 0.7

# -- quadratic fit ------------------------------------------------------
fit = fit_quadratic(f, 1.0, 10.0, 1000)
print(f"quadratic fit of x^0.7 on [1, 10]:")
print(f"  q(x) = {fit.a:+.6f} x^2 {fit.b:+.6f} x {fit.c:+.6f}")
print(f"  max |q - f| = {fit.max_abs_error:.5f}   rms = {fit.rms_error:.5f}")
print(f"  normal-equation residual = {fit.normal_residual:.2e}")

# -- piecewise tables ---------------------------------------------------
print("\npiecewise tables for x^0.7 on [0, 1]:")
for segments in (11, 31, 101):
    table = build_pwl(f, 0.0, 1.0, segments)
    print(f"  {segments:3d} segments -> max grid error "
          f"{table.max_grid_error(f):.6f}")

# More segments always help; the error falls roughly with the square of
# the segment count away from the steep left edge.

# -- the incremental encoding ------------------------------------------
host = FlatModel(sense="min")
x = host.add_variable("x", 0.0, 1.0)
out = host.add_variable("fx", 0.0, 1.0)
table = build_pwl(f, 0.0, 1.0, 101)
enc = encode_pwl_incremental(table, x, out, host, "seg")
print(f"\nencoding a 101-segment table adds {len(enc.deltas)} fill "
      f"variables, {len(enc.binaries)} ordering binaries and "
      f"{len(enc.rows)} rows")

# Filling order in action: two full segments plus half of the third puts
# x at 2.5 segment widths and the output on the interpolant.
deltas = np.zeros(101)
deltas[:2] = 1.0
deltas[2] = 0.5
x_val = table.breakpoints[0] + float(np.diff(table.breakpoints) @ deltas)
out_val = table.values[0] + float(np.diff(table.values) @ deltas)
print(f"fill (1, 1, 0.5, 0, ...): x = {x_val:.6f}, "
      f"output = {out_val:.6f}, interpolant = "
      f"{float(table.interpolate(x_val)):.6f}")
