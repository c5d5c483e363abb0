"""Build, validate and serialize measure-coefficient problems.

A problem lives on (0, b) with a boundary angle alpha and two 2x2
matrix measures: q (Hermitian) and w (positive semi-definite).  Each
measure is an expression-defined density plus a finite list of point
masses (atoms).
"""

import json

from weyl_canon import (
    CoefficientMeasure,
    Problem,
    SLProblem,
    ValidationError,
    eval_expr,
    parse_expr,
    parse_problem,
    sl_to_canonical,
)

# -- the expression language -------------------------------------------------

expr = parse_expr("1+1/(x^2+1)")
print("density 1+1/(x^2+1) at x=1:", eval_expr(expr, 1.0))
print("imaginary unit:            ", eval_expr(parse_expr("exp(i*pi)"), 0.0))
print("piecewise via step():      ",
      [eval_expr(parse_expr("2+3*step(x-1)"), x) for x in (0.5, 1.0, 1.5)])

# -- a problem from JSON -------------------------------------------------------

document = {
    "b": "inf",
    "alpha": 0.0,
    "q": {"atoms": [{"x": 1.0, "m": [[0, 0], [0, 2], [0, -2], [2, 0]]}]},
    "w": {"atoms": [{"x": 1.0, "m": [[2, 0], [0, 0], [0, 0], [0, 0]]}]},
}
problem = parse_problem(json.dumps(document))
print("\nparsed problem:", problem)
print("q atom at x=1:\n", problem.delta_q(1.0))

# validation rejects inadmissible data with a pointed message
bad = {"b": 1, "alpha": 0, "q": {},
       "w": {"atoms": [{"x": 0.5, "m": [[-1, 0], [0, 0], [0, 0], [0, 0]]}]}}
try:
    parse_problem(bad)
except ValidationError as exc:
    print("\nrejected as expected:", exc)

# round trip: serialize and parse back
again = parse_problem(problem.to_json())
print("\nround trip preserves atoms:", again.atom_positions)

# -- Sturm-Liouville embedding ---------------------------------------------------

sl = SLProblem(b=4.0, p="1", s="0", v="x/10", r="1", v_atoms=[(1.0, 2.0)])
canonical = sl_to_canonical(sl)
print("\nSL data -(py')' + vy = lam r y maps to the canonical system with")
print("q density at x=2:\n", canonical.q.density(2.0))
print("w density at x=2:\n", canonical.w.density(2.0))

# hand-built problems work the same way
direct = Problem(8.0, 0.3,
                 CoefficientMeasure(d12="0.2"),
                 CoefficientMeasure(d11="1", d22="1/((1+x)^2)"))
print("\ndirect construction:", direct)
