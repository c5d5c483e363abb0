"""The tau function and the nested Weyl disks.

tau(x, lam) is the product of det B- / det B+ over the atoms in (0, x)
times exp(2i int (Im q12_ac - lam Im w12_ac)); it equals det U(x, lam)
and controls the disk radius through

    r(c, lam) = |tau(c, lam)| / (2 |Im lam| ||psi||_c^2).
"""

import cmath

import numpy as np

from weyl_canon import (
    builtin_example,
    fundamental_matrix,
    norm_quadrature,
    radius_identity_residual,
    solution_norm_sq,
    tau_profile,
    trace_disks,
    weyl_set,
)

problem, record = builtin_example("constant_w")
lam = 1j

# -- tau equals det U and the closed form ---------------------------------------

xs = [0.5, 1.0, 2.0, 3.0]
fm = fundamental_matrix(problem, lam, 3.0, grid=xs)
print("x      tau(x, i)            det U(x, i)          exp(2i lam x)")
for x, sample in zip(xs, tau_profile(problem, lam, xs)):
    det_u = np.linalg.det(fm.at(x))
    print(f"{x:4.1f}  {sample.value:.12f}  {det_u:.12f}  "
          f"{cmath.exp(2j * lam * x):.12f}")

# -- norms two ways ---------------------------------------------------------------

c = 2.0
by_quadrature = norm_quadrature(problem, fm.column(1), c).value
by_lagrange = solution_norm_sq(fm, c, 1, method="lagrange")
closed = record.eval("psi_norm_sq", c, lam)
print(f"\n||psi||_2^2: quadrature {by_quadrature:.12f}, "
      f"Lagrange {by_lagrange:.12f}, closed form {closed:.12f}")

# -- the Weyl disk at one truncation point ------------------------------------------

disk = weyl_set(fm, c, by_quadrature)
print(f"\nWeyl disk at c={c}: center {disk.center:.8f}, radius {disk.radius:.3e}")
print("radius identity residual:",
      radius_identity_residual(problem, lam, c, fm=fm))

# -- the whole nested family ----------------------------------------------------------

trace = trace_disks(problem, lam)
print("\nc        radius          center")
for point in trace.points[:10]:
    print(f"{point.c:7.3f}  {point.wset.radius:.6e}  {point.wset.center:.10f}")
print("...")
print("the disks shrink toward m0 = 2i, the unique L^2 direction;")
print("the trace stops once det U leaves the double-precision envelope"
      f" (truncated at c={trace.truncated_at}).")
