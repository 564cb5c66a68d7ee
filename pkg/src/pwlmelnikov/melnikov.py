"""Closed form of the first-order Melnikov function and a quadrature oracle.

Throughout, h in (0, 1) is the level of L_h with H+ = h/2 on the right arc,
i.e. the halved argument of the general Melnikov function: everything here
is Mbar(h) = M(h/2). The closed form is

    Mbar(h) = sqrt(1-h) * f(sqrt(1-h)) + g(1-h) * I10(h),

    I10(h) = int_0^sqrt(1-h) sqrt(h + y^2) dy
           = (sqrt(1-h) + h*log(1 + sqrt(1-h)) - h*log(h)/2) / 2,

with deg f <= n and deg g <= (n-1)//2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np
from scipy import integrate

from .model import PerturbationSpec, left_moments, reduce_plus
from .ring import Poly, SymScalar, poly_eval

__all__ = [
    "MomentDecomposition",
    "ClosedForm",
    "QuadratureError",
    "phi0_eval",
    "i10_eval",
    "i10_from_lambda",
    "moment",
    "closed_form",
    "closed_form_basis",
    "FloatClosedForm",
    "float_closed_form",
    "eval_melnikov",
    "eval_melnikov_lambda",
    "quadrature_oracle",
    "sample_table",
]


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested accuracy."""

    def __init__(self, message, estimate):
        super().__init__(f"{message} (error estimate {estimate:.3e})")
        self.estimate = estimate


@dataclass(frozen=True)
class MomentDecomposition:
    """I_rk(h) = sqrt(1-h) * sqrt_part(h) + i10_coeff * h**i10_power * I10(h).

    I_rk(h) = int_0^sqrt(1-h) (h + y^2)^(r/2) y^(2k) dy.
    """

    r: int
    k: int
    sqrt_part: Poly
    i10_coeff: Fraction
    i10_power: int


@dataclass(frozen=True)
class ClosedForm:
    """The pair (f, g) with Mbar(h) = l*f(l) + g(1-h)*I10(h), l = sqrt(1-h).

    ``f`` is a polynomial in lambda, ``g`` a polynomial in w = 1 - h.
    ``h`` is the halved level (H+ = h/2 on the right arc).
    """

    n: int
    f: Poly
    g: Poly

    def __post_init__(self):
        if self.f.var != "lambda" or self.g.var != "w":
            raise ValueError("ClosedForm needs f in lambda and g in w")

    def to_json(self) -> dict:
        return {"n": self.n, "f": self.f.to_json(), "g": self.g.to_json()}

    @classmethod
    def from_json(cls, obj) -> "ClosedForm":
        return cls(int(obj["n"]), Poly.from_json(obj["f"]), Poly.from_json(obj["g"]))

    def __add__(self, other: "ClosedForm") -> "ClosedForm":
        return ClosedForm(max(self.n, other.n), self.f + other.f, self.g + other.g)

    def scaled(self, c) -> "ClosedForm":
        return ClosedForm(self.n, self.f * c, self.g * c)


def phi0_eval(u):
    """int_0^u sqrt(1 + x^2) dx."""
    u = np.asarray(u, dtype=float)
    out = 0.5 * (u * np.sqrt(1.0 + u * u) + np.arcsinh(u))
    return float(out) if out.ndim == 0 else out


def i10_from_lambda(lam):
    """I10 as a function of lambda = sqrt(1-h).

    Uses h*log(1+l) - h*log(h)/2 = h*atanh(l), which is free of the
    cancellation the log form suffers as l -> 0.
    """
    lam = np.asarray(lam, dtype=float)
    h = (1.0 - lam) * (1.0 + lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 0.5 * (lam + np.where(lam < 1.0, h * np.arctanh(np.minimum(lam, 1.0)), 0.0))
    return float(out) if out.ndim == 0 else out


def i10_eval(h):
    """Closed form of I10(h) for 0 < h <= 1."""
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0) or np.any(h > 1):
        raise ValueError("i10_eval needs 0 < h <= 1 (log h is singular at 0)")
    lam = np.sqrt(1.0 - h)
    small = h < 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        near_loop = h * (np.log1p(lam) - 0.5 * np.log(h))
        near_center = h * np.arctanh(np.minimum(lam, 1.0 - 1e-300))
    out = 0.5 * (lam + np.where(small, near_loop, near_center))
    return float(out) if out.ndim == 0 else out


def _h_poly(*coeffs) -> Poly:
    return Poly("h", tuple(SymScalar(Fraction(c)) for c in coeffs))


@lru_cache(maxsize=None)
def _one_minus_h_pow(m: int) -> Poly:
    p = _h_poly(1)
    for _ in range(m):
        p = p * _h_poly(1, -1)
    return p


@lru_cache(maxsize=None)
def moment(r: int, k: int) -> MomentDecomposition:
    """Exact decomposition of I_rk into a sqrt(1-h) polynomial part and an I10 part."""
    if r < 0 or k < 0:
        raise ValueError("moment indices must be non-negative")
    if r % 2 == 0:
        l = r // 2
        part = Poly.zero("h")
        for m in range(l + 1):
            term = _one_minus_h_pow(m + k).shift(l - m) * Fraction(comb(l, m), 2 * m + 2 * k + 1)
            part = part + term
        return MomentDecomposition(r, k, part, Fraction(0), 0)
    if r == 1 and k == 0:
        return MomentDecomposition(1, 0, Poly.zero("h"), Fraction(1), 0)
    if r == 1:
        # I_1k = (1-h)^(k-1/2)/(2(k+1)) - (2k-1)h/(2(k+1)) * I_1,k-1
        prev = moment(1, k - 1)
        c = Fraction(-(2 * k - 1), 2 * (k + 1))
        part = _one_minus_h_pow(k - 1) * Fraction(1, 2 * (k + 1)) + prev.sqrt_part.shift(1) * c
        return MomentDecomposition(1, k, part, prev.i10_coeff * c, prev.i10_power + 1)
    # I_2l+1,k = (1-h)^(k+1/2)/(2(l+k+1)) + (2l+1)h/(2(l+k+1)) * I_2l-1,k
    l = (r - 1) // 2
    prev = moment(r - 2, k)
    c = Fraction(2 * l + 1, 2 * (l + k + 1))
    part = _one_minus_h_pow(k) * Fraction(1, 2 * (l + k + 1)) + prev.sqrt_part.shift(1) * c
    return MomentDecomposition(r, k, part, prev.i10_coeff * c, prev.i10_power + 1)


def _h_to_lambda(p: Poly) -> Poly:
    return p.h_to_w().w_to_lambda()


def closed_form(spec: PerturbationSpec) -> ClosedForm:
    """Exact (f, g) of the Melnikov function for ``spec``.

    Mbar = M+ + M-, with M+ = -(I0 + I1) over the right arc and M- from the
    left half circle.
    """
    n = spec.n
    sqrt_h = Poly.zero("h")   # coefficient of sqrt(1-h) in I0 + I1, as a poly in h
    i10_h = Poly.zero("h")    # coefficient of I10 in I0, as a poly in h

    # I1: integral of p+(0, y) across the section
    for k in range(n // 2 + 1):
        a = spec.a_plus.get((0, 2 * k))
        if a:
            sqrt_h = sqrt_h + _one_minus_h_pow(k) * (2 * a / (2 * k + 1))

    # I0 = 2 sum p+_{i,2k} int_0^sqrt(1-h) (1 - sqrt(h+y^2))^(i+1) y^2k dy
    for (i, j), p in reduce_plus(spec).items():
        if j % 2:
            continue
        k = j // 2
        for r in range(i + 2):
            c = 2 * p * comb(i + 1, r) * (-1) ** r
            mom = moment(r, k)
            sqrt_h = sqrt_h + mom.sqrt_part * c
            if mom.i10_coeff:
                i10_h = i10_h + _h_poly(1).shift(mom.i10_power) * (c * mom.i10_coeff)

    f = -_h_to_lambda(sqrt_h)
    e = left_moments(spec)
    f = f - Poly("lambda", tuple(e))
    g = -i10_h.h_to_w()
    return ClosedForm(n, f, g)


@lru_cache(maxsize=None)
def closed_form_basis(n: int):
    """Closed forms of the unit specs, in ``PerturbationSpec.coordinates`` order."""
    tmp = PerturbationSpec(n)
    return tuple(closed_form(PerturbationSpec.unit(n, s, k)) for s, k in tmp.coordinates())


@lru_cache(maxsize=None)
def _basis_matrices(n: int):
    basis = closed_form_basis(n)
    F = np.zeros((len(basis), n + 1))
    G = np.zeros((len(basis), (n - 1) // 2 + 1))
    for r, cf in enumerate(basis):
        a = cf.f.approx_coeffs()
        F[r, :len(a)] = a
        b = cf.g.approx_coeffs()
        G[r, :len(b)] = b
    return F, G


@dataclass(frozen=True)
class FloatClosedForm:
    """(f, g) with float coefficients, lowest degree first. For sweeps over float specs."""

    n: int
    f: np.ndarray
    g: np.ndarray

    @classmethod
    def from_exact(cls, cf: ClosedForm) -> "FloatClosedForm":
        f = np.zeros(cf.n + 1)
        a = cf.f.approx_coeffs()
        f[:len(a)] = a
        g = np.zeros((cf.n - 1) // 2 + 1)
        b = cf.g.approx_coeffs()
        g[:len(b)] = b
        return cls(cf.n, f, g)

    def g_is_zero(self) -> bool:
        return not np.any(self.g)

    def __call__(self, lam):
        """Mbar at h = 1 - lam**2."""
        lam = np.asarray(lam, dtype=float)
        out = lam * np.polyval(self.f[::-1], lam)
        if not self.g_is_zero():
            out = out + np.polyval(self.g[::-1], lam * lam) * i10_from_lambda(lam)
        return out


def float_closed_form(n: int, vector) -> FloatClosedForm:
    """Closed form of a float coefficient vector (``coordinates`` order) via the unit basis."""
    v = np.asarray(vector, dtype=float)
    F, G = _basis_matrices(n)
    if v.shape != (F.shape[0],):
        raise ValueError(f"expected {F.shape[0]} coefficients for n={n}, got {v.shape}")
    return FloatClosedForm(n, v @ F, v @ G)


def eval_melnikov_lambda(cf: ClosedForm, lam):
    """Mbar at h = 1 - lam**2, evaluated directly in lambda."""
    lam = np.asarray(lam, dtype=float)
    w = lam * lam
    out = lam * poly_eval(cf.f, lam)
    if not cf.g.is_zero():
        out = out + poly_eval(cf.g, w) * i10_from_lambda(lam)
    return float(out) if np.ndim(out) == 0 else out


def eval_melnikov(cf: ClosedForm, h):
    """Mbar(h) from the closed form, 0 < h < 1."""
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0) or np.any(h >= 1):
        raise ValueError("eval_melnikov needs 0 < h < 1")
    lam = np.sqrt(1.0 - h)
    out = lam * poly_eval(cf.f, lam)
    if not cf.g.is_zero():
        out = out + poly_eval(cf.g, 1.0 - h) * i10_eval(h)
    return float(out) if np.ndim(out) == 0 else out


def _poly_fn(terms):
    """Fast scalar evaluator for sum c x^i y^j."""
    if not terms:
        return lambda x, y: 0.0
    deg = max(i + j for i, j, _ in terms)

    def fn(x, y):
        xp = [1.0] * (deg + 1)
        yp = [1.0] * (deg + 1)
        for d in range(1, deg + 1):
            xp[d] = xp[d - 1] * x
            yp[d] = yp[d - 1] * y
        return sum(c * xp[i] * yp[j] for i, j, c in terms)

    return fn


def _oracle_float(spec, h, epsabs, epsrel):
    lam = math.sqrt(1.0 - h)
    p_r, q_r = _poly_fn(spec.terms("a_plus")), _poly_fn(spec.terms("b_plus"))
    p_l, q_l = _poly_fn(spec.terms("a_minus")), _poly_fn(spec.terms("b_minus"))

    def right(y):
        s = math.sqrt(h + y * y)
        x = (1.0 - h - y * y) / (1.0 + s)   # = 1 - s without cancellation
        return q_r(x, y) * (-y / s) - p_r(x, y)

    def left(theta):
        c, s = math.cos(theta), math.sin(theta)
        x, y = lam * c, lam * s
        return -lam * (q_l(x, y) * s + p_l(x, y) * c)

    total, err = 0.0, 0.0
    for fn, a, b, pts in ((right, -lam, lam, [0.0]),
                          (left, 0.5 * math.pi, 1.5 * math.pi, [math.pi])):
        val, est = integrate.quad(fn, a, b, epsabs=epsabs, epsrel=epsrel,
                                  limit=200, points=pts)
        if est > 100 * max(epsabs, epsrel * abs(val)):
            raise QuadratureError("quadrature did not converge", est)
        total += val
        err += est
    return total


def _oracle_mp(spec, h, dps):
    import mpmath as mp

    with mp.workdps(dps):
        h = mp.mpf(h)
        lam = mp.sqrt(1 - h)

        def poly(slot, x, y):
            return mp.fsum(mp.mpf(v.numerator) / v.denominator * x ** i * y ** j
                           for (i, j), v in getattr(spec, slot).items())

        def right(y):
            s = mp.sqrt(h + y * y)
            x = (1 - h - y * y) / (1 + s)
            return poly("b_plus", x, y) * (-y / s) - poly("a_plus", x, y)

        def left(theta):
            c, s = mp.cos(theta), mp.sin(theta)
            x, y = lam * c, lam * s
            return -lam * (poly("b_minus", x, y) * s + poly("a_minus", x, y) * c)

        val = mp.quad(right, [-lam, 0, lam]) + mp.quad(left, [mp.pi / 2, mp.pi, 3 * mp.pi / 2])
        return float(val)


def quadrature_oracle(spec: PerturbationSpec, h: float, *, epsabs: float = 1e-13,
                      epsrel: float = 1e-13, dps: int | None = None) -> float:
    """Mbar(h) by direct line integration of q dx - p dy around L_h.

    The right arc is x = 1 - sqrt(h + y^2) from A to A1; the left arc is the
    half circle of radius sqrt(1-h) from A1 back to A. With ``dps`` set the
    integrals are done in mpmath at that many digits instead of by QUADPACK.
    """
    if not 0.0 < h < 1.0:
        raise ValueError("quadrature_oracle needs 0 < h < 1")
    if spec.is_zero():
        return 0.0
    if dps is not None:
        return _oracle_mp(spec, h, dps)
    return _oracle_float(spec, float(h), epsabs, epsrel)


def sample_table(spec: PerturbationSpec, hs, *, oracle: bool = True) -> str:
    """CSV with columns h, melnikov_closed_form, melnikov_oracle, abs_diff."""
    cf = closed_form(spec)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "melnikov_closed_form", "melnikov_oracle", "abs_diff"])
    for h in hs:
        m = eval_melnikov(cf, h)
        if oracle:
            o = quadrature_oracle(spec, h)
            w.writerow([repr(float(h)), repr(m), repr(o), repr(abs(m - o))])
        else:
            w.writerow([repr(float(h)), repr(m), "", ""])
    return buf.getvalue()
