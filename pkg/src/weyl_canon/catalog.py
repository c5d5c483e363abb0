"""Built-in example problems with closed-form reference data.

Each catalog entry couples a validated Problem with a ClosedFormRecord:
exact callables for whichever of U(x, lam), tau(x, lam) and the
truncated psi-norm are known in closed form, plus the expected
classification data.  The records are the ground truth that the
numerical propagation, Weyl geometry and classification layers are
tested against.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownExampleError, UnknownQuantityError
from .measures import CoefficientMeasure, Problem
from .propagation import jump_matrices

__all__ = ["ClosedFormRecord", "builtin_example", "catalog_names", "parse_example_spec"]


@dataclass(frozen=True)
class ClosedFormRecord:
    """Closed forms and expected classification data for one example.

    ``fundamental(x, lam)``, ``tau(x, lam)`` and ``psi_norm_sq(c, lam)``
    are exact; each is defined exactly where the underlying formula is,
    and is None when no closed form is available.  ``expected`` holds
    classification facts (deficiency indices, definiteness, special
    m-values) keyed by name.
    """

    name: str
    params: dict = field(default_factory=dict)
    fundamental: object = None
    tau: object = None
    psi_norm_sq: object = None
    extras: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)

    def quantities(self):
        names = [n for n, f in (("U", self.fundamental), ("tau", self.tau),
                                ("psi_norm_sq", self.psi_norm_sq)) if f is not None]
        return tuple(names) + tuple(self.extras)

    def eval(self, quantity, *args):
        """Evaluate a closed form; raises UnknownQuantityError when this
        record does not provide it."""
        table = {"U": self.fundamental, "tau": self.tau,
                 "psi_norm_sq": self.psi_norm_sq, **self.extras}
        fn = table.get(quantity)
        if fn is None:
            raise UnknownQuantityError(
                f"example {self.name!r} has no closed form for {quantity!r}; "
                f"available: {sorted(self.quantities())}")
        return fn(*args)


def _rotation_like(lam, t):
    """e^{i lam x}-free rotation block [[cos, sin], [-sin, cos]](lam t)."""
    cz = cmath.cos(t)
    sz = cmath.sin(t)
    return np.array([[cz, sz], [-sz, cz]], dtype=complex)


def _lesch_malamud(a: float):
    a = float(a)
    if a < 0:
        raise UnknownExampleError(f"lesch_malamud requires a >= 0, got {a}")
    density = f"1+{a!r}/(x^2+1)" if a != 0 else "1"
    problem = Problem(
        b=math.inf, alpha=0.0,
        q=CoefficientMeasure(),
        w=CoefficientMeasure(d11=density, d12="-i", d22=density),
    )

    def warp(x):
        return x + a * math.atan(x)

    def fundamental(x, lam):
        return cmath.exp(1j * lam * x) * _rotation_like(lam, lam * warp(x))

    def tau(x, lam):
        return cmath.exp(2j * lam * x)

    # ||psi(., lam)||_c^2 from the Lagrange identity applied to the closed
    # form: psi(x) = e^{i lam x} (sin(lam t), cos(lam t)) gives
    # integrand e^{-2vx} (t'(x) cosh(2vt) - sinh(2vt)) with v = Im lam;
    # no elementary antiderivative for a > 0, so only a = 0 is exposed.
    def psi_norm_sq_a0(c, lam):
        v = complex(lam).imag
        if v == 0:
            return float(c)
        return (1.0 - math.exp(-4.0 * v * c)) / (4.0 * v)

    expected = {
        "definite": a > 0,
        "dim_null_space": 0 if a > 0 else 1,
        "null_vector": None if a > 0 else np.array([1.0, -1.0j]) / math.sqrt(2.0),
        # upper half-plane is the L^2-rich side: tau -> 0 there
        "n_plus": 2 if a > 0 else 1,
        "n_minus": 1 if a > 0 else 0,
        "tau_trend_upper": "toZero",
    }
    record = ClosedFormRecord(
        name="lesch_malamud", params={"a": a},
        fundamental=fundamental, tau=tau,
        psi_norm_sq=psi_norm_sq_a0 if a == 0 else None,
        extras={"t": warp},
        expected=expected,
    )
    return problem, record


def _constant_w():
    problem = Problem(
        b=math.inf, alpha=0.0,
        q=CoefficientMeasure(),
        w=CoefficientMeasure(d11="4", d12="-i", d22="1"),
    )

    def fundamental(x, lam):
        z = 2.0 * lam * x
        cz, sz = cmath.cos(z), cmath.sin(z)
        return cmath.exp(1j * lam * x) * np.array(
            [[cz, 0.5 * sz], [-2.0 * sz, cz]], dtype=complex)

    def tau(x, lam):
        return cmath.exp(2j * lam * x)

    def psi_norm_sq(c, lam):
        v = complex(lam).imag
        if v == 0:
            raise UnknownQuantityError("psi norm closed form needs Im lam != 0")
        return (math.exp(2.0 * c * v) - math.exp(-6.0 * c * v)) / (8.0 * v)

    expected = {
        "definite": True,
        "dim_null_space": 0,
        "n_plus": 1,
        "n_minus": 1,
        # chi_m has finite norm exactly for m = 2i sign(Im lam)
        "m_limit": lambda lam: 2j if complex(lam).imag > 0 else -2j,
        "w_eigenvalues": ((5.0 - math.sqrt(13.0)) / 2.0,
                          (5.0 + math.sqrt(13.0)) / 2.0),
    }
    return problem, ClosedFormRecord(
        name="constant_w", fundamental=fundamental, tau=tau,
        psi_norm_sq=psi_norm_sq, expected=expected)


def _bad_point(sign: int):
    """The two atom-only problems with a Dirac measure at x = 1.

    sign=-1: q12 = +2i, B-(1, 2i) singular (forward propagation keeps
    working, with a rank-1 transfer).  sign=+1: q12 = -2i, B+(1, 2i)
    singular (forward fails, backward works).  Both have m = 1+i.
    """
    q12 = 2j if sign < 0 else -2j
    dq = np.array([[0.0, q12], [np.conj(q12), 2.0]], dtype=complex)
    dw = np.array([[2.0, 0.0], [0.0, 0.0]], dtype=complex)
    problem = Problem(
        b=math.inf, alpha=0.0,
        q=CoefficientMeasure(atoms=[(1.0, dq)]),
        w=CoefficientMeasure(atoms=[(1.0, dw)]),
    )

    def fundamental(x, lam):
        if x < 1.0:
            return np.eye(2, dtype=complex)
        if x == 1.0:
            jp = jump_matrices(dq, dw, lam)
            return 0.5 * (np.eye(2, dtype=complex) + jp.transfer_matrix())
        return jump_matrices(dq, dw, lam).transfer_matrix()

    def tau(x, lam):
        if x <= 1.0:
            return 1.0 + 0.0j
        jp = jump_matrices(dq, dw, lam)
        return jp.det_minus / jp.det_plus

    name = "bad_point_minus" if sign < 0 else "bad_point_plus"
    expected = {
        "definite": False,
        "dim_null_space": 1,
        "bad_lambda": 2j if sign < 0 else 2j,
        "m_at_bad_lambda": 1.0 + 1.0j,
        "singular_side_at_2i": "minus" if sign < 0 else "plus",
    }
    return problem, ClosedFormRecord(
        name=name, fundamental=fundamental, tau=tau, expected=expected)


def _free_identity():
    problem = Problem(
        b=math.inf, alpha=0.0,
        q=CoefficientMeasure(),
        w=CoefficientMeasure(d11="1", d22="1"),
    )

    def fundamental(x, lam):
        return _rotation_like(lam, lam * x)

    def tau(x, lam):
        return 1.0 + 0.0j

    def psi_norm_sq(c, lam):
        v = complex(lam).imag
        if v == 0:
            return float(c)
        return math.sinh(2.0 * c * v) / (2.0 * v)

    expected = {
        "definite": True,
        "dim_null_space": 0,
        "n_plus": 1,
        "n_minus": 1,
        "m_limit": lambda lam: 1j if complex(lam).imag > 0 else -1j,
    }
    return problem, ClosedFormRecord(
        name="free_identity", fundamental=fundamental, tau=tau,
        psi_norm_sq=psi_norm_sq, expected=expected)


_CATALOG = {
    "lesch_malamud": _lesch_malamud,
    "constant_w": _constant_w,
    "bad_point_minus": lambda: _bad_point(-1),
    "bad_point_plus": lambda: _bad_point(+1),
    "free_identity": _free_identity,
}


def catalog_names():
    return tuple(sorted(_CATALOG))


def builtin_example(name: str, **params):
    """Return (Problem, ClosedFormRecord) for a catalog entry.

    ``lesch_malamud`` takes the parameter ``a`` (default 1.0); the other
    entries take no parameters.
    """
    if name not in _CATALOG:
        raise UnknownExampleError(
            f"unknown example {name!r}; catalog: {', '.join(catalog_names())}")
    factory = _CATALOG[name]
    if name == "lesch_malamud":
        params = dict(params)
        a = params.pop("a", 1.0)
        if params:
            _reject(name, params)
        return factory(a)
    if params:
        _reject(name, params)
    return factory()


def _reject(name, params):
    raise UnknownExampleError(f"example {name!r} takes no parameters {params}")


_SPEC_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z_0-9]*)\s*(?:\(\s*(.*?)\s*\))?\s*$")


def parse_example_spec(spec: str):
    """Parse CLI-style specs like ``lesch_malamud(a=0.5)`` or
    ``constant_w`` into (name, params)."""
    m = _SPEC_RE.match(spec)
    if not m:
        raise UnknownExampleError(f"cannot parse example spec {spec!r}")
    name, arglist = m.group(1), m.group(2)
    params = {}
    if arglist:
        for part in arglist.split(","):
            if "=" in part:
                key, value = part.split("=", 1)
                params[key.strip()] = float(value)
            else:
                params["a"] = float(part)
    return name, params
