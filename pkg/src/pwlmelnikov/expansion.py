"""Expansions of Mbar near the homoclinic loop (h -> 0) and the center (h -> 1).

Both are read off the closed form (f, g); nothing is re-integrated.

Near the loop::

    Mbar(h) = (sum_{i=1}^{(n+1)//2} bstar_i h^i) log h + sum_j b_j h^j

Near the center, with l = sqrt(1-h)::

    Mbar(h) = l * [sum_{i<=n} c_i l^i + sum_{j>=1} c_{n+j} l^(2*(n//2 + j))]
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List

import numpy as np

from .melnikov import ClosedForm
from .ring import LN2, ZERO, SymScalar, format_rational, scalar_approx

__all__ = [
    "HomoclinicExpansion",
    "HopfExpansion",
    "binomial",
    "sqrt_one_minus_series",
    "phi0_taylor",
    "expand_homoclinic",
    "expand_hopf",
    "hopf_exponent",
]

DEFAULT_ORDER = 6


def binomial(alpha: Fraction, k: int) -> Fraction:
    """Generalized binomial coefficient C(alpha, k)."""
    out = Fraction(1)
    for i in range(k):
        out = out * (alpha - i) / (i + 1)
    return out


def power_series(alpha: Fraction, order: int) -> List[Fraction]:
    """Coefficients of (1 - x)^alpha up to x^order."""
    return [binomial(alpha, k) * (-1) ** k for k in range(order + 1)]


def sqrt_one_minus_series(order: int) -> List[Fraction]:
    """Taylor coefficients of sqrt(1 - h)."""
    return power_series(Fraction(1, 2), order)


def phi0_taylor(m: int) -> List[Fraction]:
    """Odd Taylor coefficients s_0..s_m of int_0^u sqrt(1+x^2) dx = sum s_i u^(2i+1)."""
    return [binomial(Fraction(1, 2), i) / (2 * i + 1) for i in range(m + 1)]


def _mul(a, b, order):
    out = [ZERO] * (order + 1)
    for i, x in enumerate(a[:order + 1]):
        if not x:
            continue
        for j, y in enumerate(b[:order + 1 - i]):
            if y:
                out[i + j] = out[i + j] + x * y
    return out


def _log1p_series(x, order):
    """log(1 + x(h)) for a rational series x with x(0) = 0."""
    out = [Fraction(0)] * (order + 1)
    power = [Fraction(1)] + [Fraction(0)] * order
    for m in range(1, order + 1):
        power = [sum(power[i] * x[k - i] for i in range(k + 1)) for k in range(order + 1)]
        sign = 1 if m % 2 else -1
        out = [o + sign * p / m for o, p in zip(out, power)]
    return out


def gamma_series(order: int) -> List[SymScalar]:
    """Taylor coefficients of the analytic part of I10 at h = 0.

    I10 = -h log(h)/4 + gamma(h), gamma = (sqrt(1-h) + h log(1 + sqrt(1-h)))/2.
    """
    mu = sqrt_one_minus_series(order)
    half_delta = [Fraction(0)] + [m / 2 for m in mu[1:]]
    # log(1 + sqrt(1-h)) = log 2 + log(1 + (sqrt(1-h) - 1)/2)
    log_part = _log1p_series(half_delta, order)
    out = []
    for k in range(order + 1):
        v = SymScalar(mu[k] / 2)
        if k >= 1:
            v = v + SymScalar(log_part[k - 1] / 2)
        if k == 1:
            v = v + LN2 * Fraction(1, 2)
        out.append(v)
    return out


@dataclass(frozen=True)
class HomoclinicExpansion:
    """Mbar(h) = (sum bstar[i-1] h^i) log h + sum b[j] h^j + o(h^order)."""

    n: int
    bstar: tuple
    b: tuple
    order: int

    def value(self, h):
        h = np.asarray(h, dtype=float)
        logh = np.log(h)
        out = 0.0 * h
        for i, c in enumerate(self.bstar, start=1):
            out = out + scalar_approx(c) * h ** i * logh
        for j, c in enumerate(self.b):
            out = out + scalar_approx(c) * h ** j
        return float(out) if out.ndim == 0 else out

    def records(self):
        recs = [{"power": format_rational(Fraction(i)), "log_power": 1, "coeff": c.to_json()}
                for i, c in enumerate(self.bstar, start=1)]
        recs += [{"power": format_rational(Fraction(j)), "log_power": 0, "coeff": c.to_json()}
                 for j, c in enumerate(self.b)]
        return recs


def hopf_exponent(n: int, index: int) -> Fraction:
    """Exponent of (1-h) carried by c_index, including the sqrt(1-h) prefactor."""
    if index <= n:
        return Fraction(index + 1, 2)
    return Fraction(n // 2 + (index - n)) + Fraction(1, 2)


@dataclass(frozen=True)
class HopfExpansion:
    """c_0..c_{n+order}; c_i multiplies (1-h)^hopf_exponent(n, i)."""

    n: int
    c: tuple
    order: int

    def exponent(self, index: int) -> Fraction:
        return hopf_exponent(self.n, index)

    def value(self, h):
        w = 1.0 - np.asarray(h, dtype=float)
        out = 0.0 * w
        for i, c in enumerate(self.c):
            e = self.exponent(i)
            out = out + scalar_approx(c) * w ** float(e)
        return float(out) if out.ndim == 0 else out

    def records(self):
        return [{"power": format_rational(self.exponent(i)), "log_power": 0,
                 "coeff": c.to_json()} for i, c in enumerate(self.c)]


def _h_series_of_lambda_power(m: int, order: int) -> List[Fraction]:
    # lambda^m = (1-h)^(m/2)
    return power_series(Fraction(m, 2), order)


def expand_homoclinic(cf: ClosedForm, J: int = DEFAULT_ORDER) -> HomoclinicExpansion:
    """Expansion of Mbar at h = 0 to order h^J (log coefficients are exact and complete)."""
    if J < 0:
        raise ValueError("order must be non-negative")
    n = cf.n
    g_h = cf.g.w_to_h()
    nstar = (n + 1) // 2
    bstar = [ZERO] * nstar
    for k, c in enumerate(g_h.coeffs):
        # -h/4 * g(1-h) * log h
        if k + 1 > nstar:
            raise AssertionError("log polynomial exceeds its degree bound")
        bstar[k] = bstar[k] + c * Fraction(-1, 4)

    b = [ZERO] * (J + 1)
    for k, c in enumerate(cf.f.coeffs):
        if not c:
            continue
        for j, s in enumerate(_h_series_of_lambda_power(k + 1, J)):
            if s:
                b[j] = b[j] + c * s
    gamma = gamma_series(J)
    gh = list(g_h.coeffs) + [ZERO] * (J + 1)
    for j, v in enumerate(_mul(gh, gamma, J)):
        b[j] = b[j] + v
    return HomoclinicExpansion(n, tuple(bstar), tuple(b), J)


def phi3_series(order: int) -> List[Fraction]:
    """Coefficients of phi3(w) where I10 = sqrt(w) * phi3(w), w = 1-h."""
    s = phi0_taylor(order)
    out = [Fraction(0)] * (order + 1)
    for i in range(order + 1):
        # s_i w^i (1-w)^(1/2-i)
        tail = power_series(Fraction(1, 2) - i, order - i)
        for k, v in enumerate(tail):
            out[i + k] += s[i] * v
    return out


def expand_hopf(cf: ClosedForm, J: int = DEFAULT_ORDER) -> HopfExpansion:
    """Coefficients c_0..c_{n+J} of the expansion at h = 1."""
    if J < 0:
        raise ValueError("order must be non-negative")
    n = cf.n
    half = n // 2
    m_order = half + J
    phi3 = phi3_series(m_order)
    g = list(cf.g.coeffs) + [ZERO] * (m_order + 1)
    d = _mul(g, [SymScalar(v) for v in phi3], m_order)
    c = [cf.f.coeff(i) for i in range(n + 1)]
    for i in range(0, n + 1, 2):
        c[i] = c[i] + d[i // 2]
    for j in range(1, J + 1):
        c.append(d[half + j])
    return HopfExpansion(n, tuple(c), J)
