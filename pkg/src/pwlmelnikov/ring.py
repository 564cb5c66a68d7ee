"""Exact coefficients in Q + Q*pi + Q*ln2 and univariate polynomials over them.

Rationals are :class:`fractions.Fraction`. ``pi`` and ``ln 2`` are treated as
independent transcendentals, so equality is component-wise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "Fraction",
    "SymScalar",
    "Poly",
    "TranscendentalProductError",
    "ZERO",
    "ONE",
    "PI",
    "LN2",
    "parse_rational",
    "format_rational",
    "scalar_approx",
    "poly_eval",
    "poly_derivative",
]

VARIABLES = ("h", "lambda", "w")
NEG_INF = float("-inf")

Number = Union[int, Fraction]


class TranscendentalProductError(ArithmeticError):
    """Product of two scalars that both carry a pi or ln2 part."""


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"``, an integer string, or an int into a Fraction.

    Floats are rejected: they would silently smuggle binary rounding into
    exact coefficients. Decimal strings such as ``"0.25"`` are accepted.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, str):
        try:
            return Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {text!r}") from exc
    raise TypeError(f"cannot parse {type(text).__name__} as rational")


def format_rational(r: Fraction) -> str:
    r = Fraction(r)
    if r.denominator == 1:
        return str(r.numerator)
    return f"{r.numerator}/{r.denominator}"


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


@dataclass(frozen=True)
class SymScalar:
    """``q + pi_coeff*pi + ln2_coeff*ln2`` with rational parts."""

    q: Fraction = Fraction(0)
    pi: Fraction = Fraction(0)
    ln2: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "q", _frac(self.q))
        object.__setattr__(self, "pi", _frac(self.pi))
        object.__setattr__(self, "ln2", _frac(self.ln2))

    @classmethod
    def coerce(cls, x) -> "SymScalar":
        if isinstance(x, SymScalar):
            return x
        return cls(_frac(x))

    # -- predicates ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not (self.q or self.pi or self.ln2)

    def is_rational(self) -> bool:
        return not (self.pi or self.ln2)

    def has_transcendental(self) -> bool:
        return bool(self.pi or self.ln2)

    def __bool__(self):
        return not self.is_zero()

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        try:
            o = SymScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return SymScalar(self.q + o.q, self.pi + o.pi, self.ln2 + o.ln2)

    __radd__ = __add__

    def __neg__(self):
        return SymScalar(-self.q, -self.pi, -self.ln2)

    def __sub__(self, other):
        try:
            o = SymScalar.coerce(other)
        except TypeError:
            return NotImplemented
        return SymScalar(self.q - o.q, self.pi - o.pi, self.ln2 - o.ln2)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            c = Fraction(other)
            return SymScalar(self.q * c, self.pi * c, self.ln2 * c)
        if not isinstance(other, SymScalar):
            return NotImplemented
        if self.has_transcendental() and other.has_transcendental():
            raise TranscendentalProductError(f"({self}) * ({other}) leaves Q + Q*pi + Q*ln2")
        if not self.has_transcendental():
            return other * self.q
        return self * other.q

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, SymScalar):
            if other.has_transcendental():
                raise TranscendentalProductError("division by a transcendental scalar")
            other = other.q
        c = _frac(other)
        return SymScalar(self.q / c, self.pi / c, self.ln2 / c)

    # -- conversion ---------------------------------------------------------
    def approx(self) -> float:
        return scalar_approx(self)

    def to_json(self) -> dict:
        return {"q": format_rational(self.q), "pi": format_rational(self.pi),
                "ln2": format_rational(self.ln2)}

    @classmethod
    def from_json(cls, obj) -> "SymScalar":
        if isinstance(obj, (str, int)):
            return cls(parse_rational(obj))
        extra = set(obj) - {"q", "pi", "ln2"}
        if extra:
            raise ValueError(f"unknown SymScalar keys: {sorted(extra)}")
        return cls(parse_rational(obj.get("q", 0)), parse_rational(obj.get("pi", 0)),
                   parse_rational(obj.get("ln2", 0)))

    def __str__(self):
        parts = []
        if self.q or not (self.pi or self.ln2):
            parts.append(format_rational(self.q))
        if self.pi:
            parts.append(f"({format_rational(self.pi)})*pi")
        if self.ln2:
            parts.append(f"({format_rational(self.ln2)})*ln2")
        return " + ".join(parts)


ZERO = SymScalar()
ONE = SymScalar(Fraction(1))
PI = SymScalar(pi=Fraction(1))
LN2 = SymScalar(ln2=Fraction(1))

_LN2 = math.log(2.0)


def scalar_approx(s: SymScalar) -> float:
    """Float value of ``s``; each part is rounded once, then summed."""
    return float(s.q) + float(s.pi) * math.pi + float(s.ln2) * _LN2


def _trim(coeffs: Sequence[SymScalar]) -> tuple:
    c = list(coeffs)
    while c and c[-1].is_zero():
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class Poly:
    """Polynomial ``sum coeffs[k] * var**k`` in one tagged variable.

    ``var`` is one of ``"h"``, ``"lambda"`` (= sqrt(1-h)) or ``"w"`` (= 1-h).
    Arithmetic between different variables is refused; use the explicit
    conversions :meth:`h_to_w`, :meth:`w_to_h` and :meth:`w_to_lambda`.
    """

    var: str
    coeffs: tuple = ()

    def __post_init__(self):
        if self.var not in VARIABLES:
            raise ValueError(f"unknown polynomial variable {self.var!r}")
        object.__setattr__(self, "coeffs",
                           _trim([SymScalar.coerce(c) for c in self.coeffs]))

    @classmethod
    def zero(cls, var: str) -> "Poly":
        return cls(var, ())

    @classmethod
    def from_rationals(cls, var: str, values: Iterable) -> "Poly":
        return cls(var, tuple(SymScalar(parse_rational(v)) for v in values))

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_rational(self) -> bool:
        return all(c.is_rational() for c in self.coeffs)

    def coeff(self, k: int) -> SymScalar:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else ZERO

    def _check(self, other: "Poly"):
        if not isinstance(other, Poly):
            raise TypeError("expected Poly")
        if other.var != self.var:
            raise ValueError(f"variable mismatch: {self.var} vs {other.var}")

    def __add__(self, other: "Poly") -> "Poly":
        self._check(other)
        m = max(len(self.coeffs), len(other.coeffs))
        return Poly(self.var, tuple(self.coeff(k) + other.coeff(k) for k in range(m)))

    def __neg__(self):
        return Poly(self.var, tuple(-c for c in self.coeffs))

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Poly):
            self._check(other)
            if self.is_zero() or other.is_zero():
                return Poly.zero(self.var)
            out = [ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a.is_zero():
                    continue
                for j, b in enumerate(other.coeffs):
                    if not b.is_zero():
                        out[i + j] = out[i + j] + a * b
            return Poly(self.var, tuple(out))
        if isinstance(other, (int, Fraction, SymScalar)) and not isinstance(other, bool):
            return Poly(self.var, tuple(c * other for c in self.coeffs))
        return NotImplemented

    __rmul__ = __mul__

    def shift(self, k: int) -> "Poly":
        """Multiply by ``var**k``."""
        if self.is_zero():
            return self
        return Poly(self.var, (ZERO,) * k + self.coeffs)

    def derivative(self) -> "Poly":
        return Poly(self.var, tuple(c * k for k, c in enumerate(self.coeffs) if k > 0))

    def approx_coeffs(self) -> np.ndarray:
        return np.array([scalar_approx(c) for c in self.coeffs], dtype=float)

    def __call__(self, x):
        return poly_eval(self, x)

    # -- variable conversions ----------------------------------------------
    def _affine_flip(self, new_var: str) -> "Poly":
        # p(v) -> p(1 - v'), used for both h <-> w directions
        result = Poly.zero(new_var)
        base = Poly(new_var, (ONE, -ONE))
        power = Poly(new_var, (ONE,))
        for c in self.coeffs:
            result = result + power * c
            power = power * base
        return result

    def h_to_w(self) -> "Poly":
        if self.var != "h":
            raise ValueError("h_to_w needs a polynomial in h")
        return self._affine_flip("w")

    def w_to_h(self) -> "Poly":
        if self.var != "w":
            raise ValueError("w_to_h needs a polynomial in w")
        return self._affine_flip("h")

    def w_to_lambda(self) -> "Poly":
        """``p(w)`` rewritten as a polynomial in lambda with w = lambda**2."""
        if self.var != "w":
            raise ValueError("w_to_lambda needs a polynomial in w")
        out = []
        for c in self.coeffs:
            out.extend([c, ZERO])
        return Poly("lambda", tuple(out))

    def to_json(self) -> dict:
        return {"var": self.var, "coeffs": [c.to_json() for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj) -> "Poly":
        return cls(obj["var"], tuple(SymScalar.from_json(c) for c in obj["coeffs"]))

    def __str__(self):
        if self.is_zero():
            return "0"
        v = "λ" if self.var == "lambda" else self.var
        terms = []
        for k, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            mono = "" if k == 0 else (v if k == 1 else f"{v}^{k}")
            terms.append(f"[{c}]{mono}")
        return " + ".join(terms)


def poly_eval(p: Poly, x):
    """Horner evaluation with float coefficients; ``x`` may be an array."""
    x = np.asarray(x, dtype=float) if not np.isscalar(x) else float(x)
    acc = 0.0 * x
    for c in reversed(p.coeffs):
        acc = acc * x + scalar_approx(c)
    return acc


def poly_derivative(p: Poly) -> Poly:
    return p.derivative()
