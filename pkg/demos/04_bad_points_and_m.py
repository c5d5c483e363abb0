"""Bad points: where B- or B+ degenerates and what happens to m.

At a bad point one of the jump matrices is singular.  If B- is singular
the forward transfer still exists but has rank 1: the whole fundamental
matrix collapses onto one direction and every boundary condition at
every c > 1 returns the same m.  If B+ is singular the forward solution
is not unique, but the backward route through eta still pins m down.
"""

import numpy as np

from weyl_canon import (
    BadPointError,
    builtin_example,
    eta_solution,
    fundamental_matrix,
    m_alt,
    m_from_boundary,
)

np.set_printoptions(precision=6, suppress=True)

# -- B- singular: rank-1 collapse, m = 1+i from the boundary route ----------------

minus_problem, _ = builtin_example("bad_point_minus")
fm = fundamental_matrix(minus_problem, 2j, 2.0)
u = fm.at(2.0)
print("U(2, 2i) after the rank-1 transfer:")
print(u)
print("first column = -(1+i) * second column:",
      np.allclose(u[:, 0], -(1 + 1j) * u[:, 1]))
print("m(beta) for several boundary angles:")
for beta in (0.0, 0.5, 1.2, 2.4):
    print(f"  beta={beta:3.1f}: m = {m_from_boundary(fm, 2.0, beta):.12f}")

# -- B+ singular: forward blocked, backward eta still works ------------------------

plus_problem, _ = builtin_example("bad_point_plus")
try:
    fundamental_matrix(plus_problem, 2j, 2.0)
except BadPointError as exc:
    print("\nforward propagation refused:", exc)

eta0 = eta_solution(plus_problem, 2j, 2.0, 0.8)
print("backward solution eta(0) for beta=0.8:", eta0)
print("m from the backward route, several beta:")
for beta in (0.0, 0.8, 1.7, 2.9):
    print(f"  beta={beta:3.1f}: m = {m_alt(plus_problem, 2j, 2.0, beta):.12f}")

# -- away from the bad lambda both routes agree --------------------------------------

lam = 1j
fm_regular = fundamental_matrix(minus_problem, lam, 2.0)
beta = 0.9
print(f"\nat lam={lam} (no bad point) the two routes coincide:")
print("  boundary route:", m_from_boundary(fm_regular, 2.0, beta))
print("  backward route:", m_alt(minus_problem, lam, 2.0, beta))
