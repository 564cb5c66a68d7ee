"""The unperturbed piecewise linear system and its perturbation coefficients.

Right half-plane (x >= 0): H+ = ((x-1)^2 - y^2)/2, a saddle at (1, 0).
Left half-plane (x < 0):  H- = -(x^2 + y^2)/2, a center at the origin.

For 0 < h < 1 the closed orbit L_h crosses the y-axis at
A = (0, -sqrt(1-h)) and A1 = (0, sqrt(1-h)); on the right it lies on
H+ = h/2 and on the left on H- = (h-1)/2. The perturbed system is

    x' = -y + eps*p+(x, y),  y' = 1 - x + eps*q+(x, y)   (x >= 0)
    x' = -y + eps*p-(x, y),  y' =     x + eps*q-(x, y)   (x < 0)

with p, q polynomials of total degree n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np

from .ring import PI, ZERO, SymScalar, format_rational, parse_rational

__all__ = [
    "PerturbationSpec",
    "SpecError",
    "right_hamiltonian",
    "left_hamiltonian",
    "section_endpoints",
    "wallis",
    "ibar",
    "reduce_plus",
    "left_moments",
    "random_spec",
    "SADDLE",
    "CENTER",
]

Key = Tuple[int, int]
SLOTS = ("a_plus", "b_plus", "a_minus", "b_minus")

SADDLE = (1.0, 0.0)
CENTER = (0.0, 0.0)


class SpecError(ValueError):
    """Malformed perturbation coefficients or spec JSON."""


def _clean(coeffs, n: int, name: str) -> Dict[Key, Fraction]:
    out = {}
    for key, val in dict(coeffs or {}).items():
        i, j = (int(k) for k in key)
        if i < 0 or j < 0 or i + j > n:
            raise SpecError(f"{name}[{i},{j}] outside 0 <= i+j <= {n}")
        v = parse_rational(val)
        if v:
            out[(i, j)] = v
    return out


@dataclass(frozen=True)
class PerturbationSpec:
    """Coefficients of p+- = sum a+-_ij x^i y^j and q+- = sum b+-_ij x^i y^j.

    Coefficient maps are sparse: missing keys are zero, and zero values are
    dropped on construction.
    """

    n: int
    a_plus: Dict[Key, Fraction] = field(default_factory=dict)
    b_plus: Dict[Key, Fraction] = field(default_factory=dict)
    a_minus: Dict[Key, Fraction] = field(default_factory=dict)
    b_minus: Dict[Key, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise SpecError(f"degree n must be a positive integer, got {self.n!r}")
        for name in SLOTS:
            object.__setattr__(self, name, _clean(getattr(self, name), self.n, name))

    def __hash__(self):
        return hash((self.n,) + tuple(tuple(sorted(getattr(self, s).items())) for s in SLOTS))

    # -- linear structure --------------------------------------------------
    def keys(self):
        """All (i, j) with i + j <= n, in a fixed order."""
        return [(i, d - i) for d in range(self.n + 1) for i in range(d, -1, -1)]

    def coordinates(self):
        """Ordered (slot, (i, j)) labels of the coefficient vector."""
        return [(s, k) for s in SLOTS for k in self.keys()]

    def vector(self):
        return [getattr(self, s).get(k, Fraction(0)) for s, k in self.coordinates()]

    @classmethod
    def from_vector(cls, n: int, values) -> "PerturbationSpec":
        tmp = cls(n)
        maps = {s: {} for s in SLOTS}
        for (s, k), v in zip(tmp.coordinates(), values):
            maps[s][k] = v
        return cls(n, **maps)

    @classmethod
    def unit(cls, n: int, slot: str, key: Key) -> "PerturbationSpec":
        return cls(n, **{slot: {key: Fraction(1)}})

    def is_zero(self) -> bool:
        return not any(getattr(self, s) for s in SLOTS)

    def scaled(self, c) -> "PerturbationSpec":
        c = parse_rational(c) if not isinstance(c, Fraction) else c
        return PerturbationSpec(self.n, **{s: {k: v * c for k, v in getattr(self, s).items()}
                                           for s in SLOTS})

    def __add__(self, other: "PerturbationSpec") -> "PerturbationSpec":
        n = max(self.n, other.n)
        maps = {}
        for s in SLOTS:
            m = dict(getattr(self, s))
            for k, v in getattr(other, s).items():
                m[k] = m.get(k, Fraction(0)) + v
            maps[s] = m
        return PerturbationSpec(n, **maps)

    # -- float evaluation --------------------------------------------------
    def terms(self, slot: str):
        """(i, j, float coefficient) triples of one polynomial."""
        return [(i, j, float(v)) for (i, j), v in sorted(getattr(self, slot).items())]

    def evaluate(self, slot: str, x, y):
        """Float value of one of the four perturbation polynomials."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for i, j, c in self.terms(slot):
            out = out + c * x ** i * y ** j
        return out

    # -- serialization -----------------------------------------------------
    def to_json(self) -> dict:
        def enc(m):
            return {f"{i},{j}": format_rational(v) for (i, j), v in sorted(m.items())}

        return {
            "n": self.n,
            "plus": {"p": enc(self.a_plus), "q": enc(self.b_plus)},
            "minus": {"p": enc(self.a_minus), "q": enc(self.b_minus)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, obj) -> "PerturbationSpec":
        if not isinstance(obj, dict):
            raise SpecError("spec JSON must be an object")
        extra = set(obj) - {"n", "plus", "minus"}
        if extra:
            raise SpecError(f"unknown keys in spec: {sorted(extra)}")
        if "n" not in obj:
            raise SpecError("spec JSON lacks 'n'")
        n = obj["n"]
        if isinstance(n, bool) or not isinstance(n, int):
            raise SpecError("'n' must be an integer")
        maps = {}
        for side, (pslot, qslot) in (("plus", ("a_plus", "b_plus")),
                                      ("minus", ("a_minus", "b_minus"))):
            part = obj.get(side, {})
            if not isinstance(part, dict):
                raise SpecError(f"'{side}' must be an object")
            extra = set(part) - {"p", "q"}
            if extra:
                raise SpecError(f"unknown keys in '{side}': {sorted(extra)}")
            for name, slot in (("p", pslot), ("q", qslot)):
                raw = part.get(name, {})
                if not isinstance(raw, dict):
                    raise SpecError(f"'{side}.{name}' must be an object")
                m = {}
                for key, val in raw.items():
                    try:
                        i, j = (int(t) for t in key.split(","))
                    except ValueError:
                        raise SpecError(f"bad coefficient key {key!r}; expected 'i,j'") from None
                    try:
                        m[(i, j)] = parse_rational(val)
                    except (TypeError, ValueError) as exc:
                        raise SpecError(f"{side}.{name}[{key}]: {exc}") from None
                maps[slot] = m
        return cls(n, **maps)

    @classmethod
    def loads(cls, text: str) -> "PerturbationSpec":
        return cls.from_json(json.loads(text))


def right_hamiltonian(x, y):
    return 0.5 * ((np.asarray(x) - 1.0) ** 2 - np.asarray(y) ** 2)


def left_hamiltonian(x, y):
    return -0.5 * (np.asarray(x) ** 2 + np.asarray(y) ** 2)


def section_endpoints(h: float):
    """A(h) and A1(h), where L_h meets the y-axis."""
    r = math.sqrt(1.0 - h)
    return (0.0, -r), (0.0, r)


@lru_cache(maxsize=None)
def wallis(i: int, j: int) -> SymScalar:
    """Integral of cos^i * sin^j over [-pi/2, pi/2], exactly."""
    if i < 0 or j < 0:
        raise ValueError("wallis indices must be non-negative")
    if j % 2:
        return ZERO
    if j >= 2:
        return wallis(i, j - 2) * Fraction(j - 1, i + j)
    if i >= 2:
        return wallis(i - 2, 0) * Fraction(i - 1, i)
    return PI if i == 0 else SymScalar(Fraction(2))


def ibar(i: int, j: int) -> SymScalar:
    """Integral of cos^i * sin^j over [pi/2, 3pi/2]."""
    g = wallis(i, j)
    return -g if (i + j) % 2 else g


def reduce_plus(spec: PerturbationSpec) -> Dict[Key, Fraction]:
    """Coefficients p+_ij of pbar(x, y) = x * sum p+_ij x^i y^j, i+j <= n-1.

    pbar = p+(x, y) - p+(0, y) + int_0^x dq+/dy(u, y) du.
    """
    out = {}
    for d in range(spec.n):
        for i in range(d + 1):
            j = d - i
            v = spec.a_plus.get((i + 1, j), Fraction(0)) \
                + Fraction(j + 1, i + 1) * spec.b_plus.get((i, j + 1), Fraction(0))
            if v:
                out[(i, j)] = v
    return out


def left_moments(spec: PerturbationSpec):
    """e_0..e_n such that M-(h) = -sqrt(1-h) * sum e_l (1-h)^(l/2)."""
    e = []
    for l in range(spec.n + 1):
        acc = ZERO
        for j in range(l + 1):
            a = spec.a_minus.get((l - j, j))
            if a and j % 2 == 0:
                acc = acc + wallis(l - j + 1, j) * a
            b = spec.b_minus.get((l - j, j))
            if b and j % 2 == 1:
                acc = acc + wallis(l - j, j + 1) * b
        e.append(acc if l % 2 else -acc)
    return e


def random_spec(n: int, rng: np.random.Generator, *, scale: int = 1000,
                density: float = 1.0) -> PerturbationSpec:
    """Random spec with coefficients k/scale, k uniform in [-scale, scale]."""
    tmp = PerturbationSpec(n)
    vals = []
    for _ in tmp.coordinates():
        if density < 1.0 and rng.random() > density:
            vals.append(Fraction(0))
        else:
            vals.append(Fraction(int(rng.integers(-scale, scale + 1)), scale))
    return PerturbationSpec.from_vector(n, vals)
