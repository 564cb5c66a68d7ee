"""Exact matrix rank by fraction-free (Bareiss) elimination.

Rational matrices are scaled row-wise to integers. Matrices over
Q + Q*pi + Q*ln2 are lifted to Z[P, L] with pi, ln 2 as independent
indeterminates (sympy polynomials); the rank is then the rank over Q(P, L).
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import List, Sequence

import sympy

from .ring import SymScalar

__all__ = ["bareiss_rank", "rank_rational", "rank_symscalar", "to_fraction_matrix"]

_P, _L = sympy.symbols("P L")


def bareiss_rank(rows: List[list], *, is_zero, exquo) -> int:
    """Rank of ``rows`` over the fraction field of an integral domain.

    ``rows`` is modified in place. Division steps use ``exquo`` and are exact
    by Sylvester's identity.
    """
    m = len(rows)
    if m == 0:
        return 0
    ncols = len(rows[0])
    rank = 0
    prev = None
    for col in range(ncols):
        piv = next((r for r in range(rank, m) if not is_zero(rows[r][col])), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank][col]
        for r in range(rank + 1, m):
            a = rows[r][col]
            new = []
            for c in range(ncols):
                v = p * rows[r][c] - a * rows[rank][c]
                if prev is not None:
                    v = exquo(v, prev)
                new.append(v)
            rows[r] = new
        prev = p
        rank += 1
        if rank == m:
            break
    return rank


def to_fraction_matrix(matrix) -> List[List[Fraction]]:
    return [[Fraction(x) for x in row] for row in matrix]


def rank_rational(matrix: Sequence[Sequence]) -> int:
    rows = []
    for row in to_fraction_matrix(matrix):
        d = lcm(*(x.denominator for x in row)) if row else 1
        rows.append([int(x * d) for x in row])
    return bareiss_rank(rows, is_zero=lambda v: v == 0, exquo=lambda a, b: a // b)


def _lift(s: SymScalar, scale: int) -> sympy.Poly:
    expr = (sympy.Rational(s.q * scale) + sympy.Rational(s.pi * scale) * _P
            + sympy.Rational(s.ln2 * scale) * _L)
    return sympy.Poly(expr, _P, _L, domain="ZZ")


def rank_symscalar(matrix: Sequence[Sequence[SymScalar]]) -> int:
    """Rank treating pi and ln 2 as algebraically independent over Q."""
    coerced = [[SymScalar.coerce(x) for x in row] for row in matrix]
    if all(x.is_rational() for row in coerced for x in row):
        return rank_rational([[x.q for x in row] for row in coerced])
    rows = []
    for row in coerced:
        d = lcm(*(c.denominator for x in row for c in (x.q, x.pi, x.ln2))) if row else 1
        rows.append([_lift(x, d) for x in row])
    return bareiss_rank(rows, is_zero=lambda v: v.is_zero, exquo=lambda a, b: a.exquo(b))
