"""Propagate balanced solutions of J u' + q u = lam w u across atoms.

Between atoms the system is a smooth linear ODE; at an atom the
one-sided limits are tied by B+ u+ = B- u- with
B+- = J +- (Delta_q - lam Delta_w)/2, and the solution value at the
atom is the balanced average (u- + u+)/2.
"""

import numpy as np

from weyl_canon import (
    bad_points,
    builtin_example,
    evolve_ac,
    fundamental_matrix,
    jump_matrices,
)

np.set_printoptions(precision=6, suppress=True)

# -- smooth evolution versus a closed form -------------------------------------

problem, record = builtin_example("lesch_malamud", a=1.0)
lam = 1j
u1 = evolve_ac(problem, lam, 0.0, 1.0, np.array([1.0, 0.0]))
exact = record.eval("U", 1.0, lam)[:, 0]
print("adaptive evolution vs closed form at x=1:")
print("  numeric:", u1)
print("  exact:  ", exact)
print("  rel err:", np.linalg.norm(u1 - exact) / np.linalg.norm(exact))

# -- jump matrices at an atom ----------------------------------------------------

dq = np.array([[0, 2j], [-2j, 2]], dtype=complex)
dw = np.array([[2, 0], [0, 0]], dtype=complex)
for lam_probe in (1j, 2j):
    jp = jump_matrices(dq, dw, lam_probe, position=1.0)
    print(f"\nlam={lam_probe}: det B- = {jp.det_minus}, det B+ = {jp.det_plus}")
    if not jp.plus_singular:
        print("  forward transfer B+^-1 B-:\n", jp.transfer_matrix())

# -- bad-point scan ----------------------------------------------------------------

atom_problem, _ = builtin_example("bad_point_minus")
print("\nbad-point scan at lam=2i:", bad_points(atom_problem, 2j))
print("bad-point scan at lam=i: ", bad_points(atom_problem, 1j))

# -- a full fundamental matrix -------------------------------------------------------

fm = fundamental_matrix(atom_problem, 1j, 3.0, grid=[0.5, 2.0, 3.0])
print("\nU(3, i) for the atom problem (constant pieces, one jump):")
print(fm.at(3.0))
crossing = fm.crossings[0]
print("balanced value at the atom:\n", crossing.balanced)
print("jump consistency ||B+ U+ - B- U-|| =",
      np.linalg.norm(crossing.jump.b_plus @ crossing.right
                     - crossing.jump.b_minus @ crossing.left))
