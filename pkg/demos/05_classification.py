"""Endpoint classification and deficiency indices.

The truncated Weyl sets shrink as c grows; their limit trend, combined
with the convergence class of the column norms and the definiteness
dimension, yields the deficiency indices (n+, n-).  The catalog's
first example is the classic case with n+ != n-: tau -> 0 in the upper
half-plane makes every solution square-integrable there, while the
lower half-plane keeps only one.
"""

import math

from weyl_canon import (
    CoefficientMeasure,
    Problem,
    all_solutions_l2,
    builtin_example,
    default_c_grid,
    deficiency_indices,
    definiteness,
    detect_limit,
    trace_disks,
)


def show(problem, lam, label):
    report = deficiency_indices(problem, lam)
    print(f"{label}:")
    print(f"  (n+, n-) = ({report.n_plus}, {report.n_minus})   "
          f"definite={report.definite} dim L0={report.dim_null_space}")
    print(f"  verdict at lam:      {report.verdict}")
    print(f"  verdict at conj lam: {report.verdict_conjugate}")
    print(f"  |tau| trends: {report.tau_trend} / {report.tau_trend_conjugate}")


p, _ = builtin_example("lesch_malamud", a=1.0)
show(p, 1j, "lesch_malamud(a=1), lam=i")
print("  all solutions L2 at +i:", all_solutions_l2(p, 1j),
      " at -i:", all_solutions_l2(p, -1j))

print()
p, _ = builtin_example("constant_w")
show(p, 1j, "constant_w, lam=i  (tau -> 0 yet n+ = n-)")

print()
p0, _ = builtin_example("lesch_malamud", a=0.0)
d = definiteness(p0)
print("lesch_malamud(a=0) is indefinite: dim L0 =", d.dim_null_space)
print("  null direction ~ (1, -i)/sqrt(2):", d.null_vector)
show(p0, 1j, "lesch_malamud(a=0), lam=i")

# -- half planes --------------------------------------------------------------

print()
half_plane = Problem(math.inf, math.pi / 2, CoefficientMeasure(),
                     CoefficientMeasure(d22="1/((1+x)^2)"))
trace = trace_disks(half_plane, 1j)
print("psi in the null direction of w: every Weyl set is a half plane")
print("  branches:", {pt.wset.branch for pt in trace.points})
print("  limit:", detect_limit(trace))
show(half_plane, 1j, "half-plane problem with integrable phi")

# -- a regular finite endpoint: genuine limit circle ---------------------------

print()
regular = Problem(2.0, 0.0, CoefficientMeasure(),
                  CoefficientMeasure(d11="1", d22="1"))
show(regular, 1j, "regular endpoint b=2 (limit circle, n=2)")
# the default 24-point grid stops just short of the limit-circle
# stabilization threshold; a denser grid resolves the verdict
fine = default_c_grid(regular, count=32)
print("  with 32 grid points:", detect_limit(trace_disks(regular, 1j, fine)))
