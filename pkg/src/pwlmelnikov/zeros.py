"""Zeros of Mbar on (0, 1) and instance-wise upper bounds.

Scanning is done in lambda = sqrt(1-h), where

    M*(lambda) = lambda*f(lambda) + (1-lambda^2)*g(lambda^2)*phi0(lambda/sqrt(1-lambda^2))

is smooth on the open interval. The bound certificate uses

    theta = (lambda f)' u - lambda f u' + u0^2,   u = (1-lambda^2) g(lambda^2),  u0 = g(lambda^2),

the numerator of d/dlambda (M*/u); between consecutive zeros of u, M* has at
most one more zero than theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np
from scipy.optimize import minimize_scalar

from .melnikov import ClosedForm, FloatClosedForm
from .ring import Poly, SymScalar

__all__ = [
    "ZeroReport",
    "BoundCertificate",
    "GridTooCoarseError",
    "SturmError",
    "count_zeros",
    "theta_poly",
    "upper_bound_certificate",
    "zmax_table",
    "sturm_count",
    "sign_variation_bound",
    "LAMBDA_EDGE",
]

LAMBDA_EDGE = 1e-6
STURM_DPS = 60


class GridTooCoarseError(RuntimeError):
    """More than one zero in a single grid cell."""


class SturmError(ArithmeticError):
    """Sturm sequence could not be built reliably."""


@dataclass
class ZeroReport:
    zeros: list
    count: int
    suspected_multiple: list
    scan: dict

    def to_json(self) -> dict:
        return {"zeros": self.zeros, "count": self.count,
                "suspected_multiple": self.suspected_multiple, "scan": self.scan}

    @property
    def h_values(self):
        return [z["h"] for z in self.zeros]

    @property
    def lambda_values(self):
        return [z["lambda"] for z in self.zeros]


def _as_float_cf(cf) -> FloatClosedForm:
    if isinstance(cf, FloatClosedForm):
        return cf
    if isinstance(cf, ClosedForm):
        return FloatClosedForm.from_exact(cf)
    raise TypeError("expected ClosedForm or FloatClosedForm")


def scan_grid(lam_lo: float, lam_hi: float, grid: int) -> np.ndarray:
    """Uniform lambda grid plus geometric (ratio 1/2) refinement toward 0 and 1."""
    pts = [np.linspace(lam_lo, lam_hi, grid)]
    k = np.arange(1, 64)
    geo = 0.5 ** k
    geo = geo[geo >= LAMBDA_EDGE * 0.5]
    pts.append(geo)
    pts.append(1.0 - geo)
    x = np.unique(np.concatenate(pts))
    return x[(x >= lam_lo) & (x <= lam_hi)]


def _bisect(fn, a, b, fa, tol, maxiter=200):
    for _ in range(maxiter):
        if b - a <= tol:
            break
        m = 0.5 * (a + b)
        fm = fn(m)
        if fm == 0.0:
            return m, m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return a, b


def _mp_evaluator(cf: ClosedForm, dps: int):
    """Scalar lambda -> float(Mbar) evaluated in mpmath at ``dps`` digits."""
    with mpmath.workdps(dps):
        f = _to_field(cf.f, False)
        g = _to_field(cf.g, False)

    def fn(x):
        with mpmath.workdps(dps):
            lam = mpmath.mpf(float(x))
            w = lam * lam
            val = lam * _peval(f, lam)
            if g:
                val += _peval(g, w) * (lam + (1 - w) * mpmath.atanh(lam)) / 2
            return float(val)

    return fn


def count_zeros(cf, h_min: Optional[float] = None, h_max: Optional[float] = None,
                grid: int = 4096, tol: float = 1e-12, *, multiple_tol: float = 1e-9,
                cell_probe: int = 4, dps: Optional[int] = None) -> ZeroReport:
    """Count sign changes of Mbar in (h_min, h_max), scanning in lambda.

    By default the whole open annulus is scanned down to lambda = 1e-6 and
    1 - lambda = 1e-6. Bracket widths are in lambda. Local minima of |Mbar|
    below ``multiple_tol`` times the scan scale that do not change sign are
    reported as suspected multiple zeros and not counted.

    With ``dps`` set (exact ``ClosedForm`` only) Mbar is evaluated in mpmath
    at that precision; ladder constructions need it because their f and g
    parts cancel to many digits near the endpoints.
    """
    if grid < 100:
        raise ValueError("grid must be at least 100")
    lam_hi = 1.0 - LAMBDA_EDGE if h_min is None else math.sqrt(1.0 - h_min)
    lam_lo = LAMBDA_EDGE if h_max is None else math.sqrt(1.0 - h_max)
    if h_min is not None and h_max is not None and not 0.0 < h_min < h_max < 1.0:
        raise ValueError("need 0 < h_min < h_max < 1")
    lam = scan_grid(lam_lo, lam_hi, grid)
    if dps is None:
        fcf = _as_float_cf(cf)

        def fn(x):
            return float(fcf(x))

        def fvec(x):
            return fcf(x)
    else:
        if not isinstance(cf, ClosedForm):
            raise TypeError("dps evaluation needs an exact ClosedForm")
        fn = _mp_evaluator(cf, dps)

        def fvec(x):
            return np.array([fn(v) for v in x])

    vals = fvec(lam)

    scale = float(np.max(np.abs(vals))) if len(vals) else 0.0
    zeros = []
    if scale > 0.0:
        s = np.sign(vals)
        # exact grid zeros: treat as a sign change across neighbours
        nz = np.nonzero(s)[0]
        for i0, i1 in zip(nz[:-1], nz[1:]):
            if s[i0] == s[i1]:
                continue
            a, b = lam[i0], lam[i1]
            if cell_probe and b - a > 0:
                probe = np.linspace(a, b, cell_probe + 2)
                ps = np.sign(fvec(probe))
                ps = ps[ps != 0]
                if np.count_nonzero(np.diff(ps)) > 1:
                    raise GridTooCoarseError(
                        f"several zeros in lambda cell [{a:.6g}, {b:.6g}]; raise grid")
            lo, hi = _bisect(fn, a, b, vals[i0], tol)
            r = 0.5 * (lo + hi)
            zeros.append({"h": (1.0 - r) * (1.0 + r), "lambda": r, "bracket": (lo, hi),
                          "residual": abs(fn(r))})
    suspected = []
    if scale > 0.0 and len(vals) > 2:
        av = np.abs(vals)
        loc = np.nonzero((av[1:-1] <= av[:-2]) & (av[1:-1] <= av[2:])
                         & (np.sign(vals[:-2]) == np.sign(vals[2:])) & (np.sign(vals[:-2]) != 0))[0] + 1
        for i in loc:
            if av[i] > 1e-3 * scale:
                continue
            res = minimize_scalar(lambda x: abs(fn(x)), bounds=(lam[i - 1], lam[i + 1]),
                                  method="bounded", options={"xatol": 1e-14})
            if abs(res.fun) <= multiple_tol * scale and np.sign(fn(res.x)) in (0, np.sign(vals[i])):
                r = float(res.x)
                suspected.append((1.0 - r) * (1.0 + r))
    zeros.sort(key=lambda z: z["h"])
    return ZeroReport(zeros=zeros, count=len(zeros), suspected_multiple=sorted(suspected),
                      scan={"grid_points": int(len(lam)), "h_min": (1 - lam_hi) * (1 + lam_hi),
                            "h_max": (1 - lam_lo) * (1 + lam_lo), "tol": tol})


# ---------------------------------------------------------------------------
# theta polynomial and bound certificate

def _lambda(*coeffs) -> Poly:
    return Poly("lambda", tuple(SymScalar.coerce(c) for c in coeffs))


def theta_poly(cf: ClosedForm) -> Poly:
    """Exact theta = (l f)' u - l f u' + u0^2 as a polynomial in lambda."""
    lf = cf.f.shift(1)
    u0 = cf.g.w_to_lambda()
    u = u0 * _lambda(1, 0, -1)
    theta = lf.derivative() * u - lf * u.derivative() + u0 * u0
    if theta.degree > 2 * cf.n:
        raise AssertionError(f"deg theta = {theta.degree} exceeds 2n = {2 * cf.n}")
    return theta


def _is_exact(p: Poly) -> bool:
    return p.is_rational()


def _to_field(p: Poly, exact: bool):
    """Coefficients lowest-first as Fractions (exact) or mpf (current precision)."""
    if exact:
        return [c.q for c in p.coeffs]
    out = []
    for c in p.coeffs:
        out.append(mpmath.mpf(c.q.numerator) / c.q.denominator
                   + mpmath.pi * (mpmath.mpf(c.pi.numerator) / c.pi.denominator)
                   + mpmath.log(2) * (mpmath.mpf(c.ln2.numerator) / c.ln2.denominator))
    return out


def _trim(c, eps):
    c = list(c)
    while c and abs(c[-1]) <= eps:
        c.pop()
    return c


def _peval(c, x):
    acc = 0 * x
    for a in reversed(c):
        acc = acc * x + a
    return acc


def _prem(a, b, eps):
    """Remainder of a / b (lowest-first coefficient lists)."""
    a = list(a)
    db = len(b) - 1
    lead = b[-1]
    while len(a) - 1 >= db and a:
        q = a[-1] / lead
        shift = len(a) - 1 - db
        for i, bc in enumerate(b):
            a[shift + i] = a[shift + i] - q * bc
        a.pop()
        a = _trim(a, eps)
    return a


def _deflate_root(c, x0, eps):
    """Divide out all factors (lambda - x0) that the coefficients show exactly (or to eps)."""
    k = 0
    while len(c) > 1 and abs(_peval(c, x0)) <= eps:
        # synthetic division
        n = len(c) - 1
        q = [0 * c[0]] * n
        acc = c[-1]
        for i in range(n - 1, -1, -1):
            q[i] = acc
            acc = c[i] + acc * x0
        c = q
        k += 1
    return c, k


def sturm_count(coeffs: Sequence, a=0, b=1, *, exact: bool = True, eps=None) -> int:
    """Number of distinct real roots in the open interval (a, b).

    ``coeffs`` are lowest-first Fractions (``exact``) or mpf numbers. Roots at
    the endpoints are divided out first.
    """
    if eps is None:
        eps = 0 if exact else mpmath.mpf(10) ** (-(mpmath.mp.dps * 2 // 3))
    c = _trim(coeffs, 0 if exact else eps * max([abs(x) for x in coeffs] + [1]))
    if not c:
        raise SturmError("zero polynomial has infinitely many roots")
    scale = max(abs(x) for x in c)
    tol = 0 if exact else eps * scale
    c = [x / scale for x in c] if not exact else c
    for x0 in (a, b):
        c, _ = _deflate_root(c, x0, tol if not exact else 0)
        if not exact:
            m = max(abs(x) for x in c)
            c = [x / m for x in c]
    if len(c) <= 1:
        return 0
    d = [c[i] * i for i in range(1, len(c))]
    seq = [c, d]
    while len(seq[-1]) > 1:
        r = _prem(seq[-2], seq[-1], tol)
        r = [-x for x in r]
        if not r:
            break
        if not exact:
            m = max(abs(x) for x in r)
            if m <= tol:
                break
            r = [x / m for x in r]
        seq.append(r)

    def variations(x):
        signs = []
        for p in seq:
            v = _peval(p, x)
            if v != 0 and (exact or abs(v) > tol):
                signs.append(v > 0)
        return sum(1 for s0, s1 in zip(signs, signs[1:]) if s0 != s1)

    return variations(a) - variations(b)


def sign_variation_bound(coeffs: Sequence) -> int:
    """Descartes' bound on the positive roots: sign changes of the coefficients."""
    s = [x > 0 for x in coeffs if x != 0]
    return sum(1 for u, v in zip(s, s[1:]) if u != v)


def roots_in_unit_interval(p: Poly) -> int:
    """Distinct roots of a lambda polynomial in (0, 1)."""
    if p.is_zero():
        raise SturmError("zero polynomial")
    if _is_exact(p):
        return sturm_count(_to_field(p, True), Fraction(0), Fraction(1), exact=True)
    with mpmath.workdps(STURM_DPS):
        return sturm_count(_to_field(p, False), mpmath.mpf(0), mpmath.mpf(1), exact=False)


@dataclass
class BoundCertificate:
    u: Poly
    u0: Poly
    theta: Poly
    zeros_u_in_I: int
    zeros_theta_in_I: int
    bound: int

    def to_json(self) -> dict:
        return {"u": self.u.to_json(), "u0": self.u0.to_json(), "theta": self.theta.to_json(),
                "zeros_u_in_I": self.zeros_u_in_I, "zeros_theta_in_I": self.zeros_theta_in_I,
                "bound": self.bound}


def upper_bound_certificate(cf: ClosedForm) -> BoundCertificate:
    """Upper bound on the zeros of Mbar in (0, 1) for this particular closed form."""
    u0 = cf.g.w_to_lambda()
    u = u0 * _lambda(1, 0, -1)
    theta = theta_poly(cf)
    if cf.g.is_zero():
        # Mbar = lambda f(lambda): count the roots of f directly
        zf = 0 if cf.f.is_zero() else roots_in_unit_interval(cf.f)
        bound = zf
        zu, zt = 0, 0
    else:
        zu = roots_in_unit_interval(u)
        zt = 0 if theta.is_zero() else roots_in_unit_interval(theta)
        bound = zu + zt + 1
    n = cf.n
    if bound > 2 * n + (n + 1) // 2:
        raise AssertionError(f"certificate bound {bound} exceeds 2n + [(n+1)/2]")
    return BoundCertificate(u, u0, theta, zu, zt, bound)


def zmax_table(n: int) -> dict:
    """Known lower and upper bounds on the number of zeros for degree n."""
    if n < 1:
        raise ValueError("n must be positive")
    lower = n + (n + 1) // 2
    upper = lower if n <= 4 else 2 * n + (n + 1) // 2
    return {"lower": lower, "upper": upper}
