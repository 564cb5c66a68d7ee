"""Perturbations with the maximal known number of zeros near h = 1 or h = 0.

Both constructions work on the exact linear map from a restricted family of
perturbation coefficients to the leading expansion coefficients:

* Hopf family: p+- = sum a+-_i x^i, q+- = 0. Targets c_0 .. c_K, K = 2n - n//2.
* Homoclinic family: p+ = sum a+_i y^i, q+ = sum b+_i y^i, p- = sum a-_i x^i,
  q- = 0. Targets b*_1 .. b*_m and b_0 .. b_n, m = (n+1)//2.

The targets are chosen so that the truncated expansion vanishes at K
prescribed points z_j = t * ratio**(j-1) (lambda for Hopf, h for the loop),
with the last coefficient normalized to 1. The truncated expansions are
Chebyshev systems near the endpoint, so every z_j is a simple zero; the
neglected tail moves them by a relative O(t), and the result is verified by
an independent zero scan with t halved on failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import List, Optional

import mpmath
import numpy as np

from .expansion import expand_homoclinic, expand_hopf, power_series, sqrt_one_minus_series
from .linalg import rank_rational, rank_symscalar
from .melnikov import ClosedForm, closed_form
from .model import PerturbationSpec, left_moments, wallis
from .ring import ZERO, SymScalar, format_rational
from .zeros import count_zeros

__all__ = [
    "ConstructionError",
    "ConstructionLedger",
    "ConstructionResult",
    "RankCertificate",
    "double_factorial",
    "sigma_series",
    "taylor_mu",
    "paper_mu",
    "wallis_B",
    "tilde_a1",
    "hopf_columns",
    "homoclinic_columns",
    "hopf_map",
    "homoclinic_map",
    "jacobian_rank",
    "construct_hopf",
    "construct_homoclinic",
]

SOLVE_DPS = 50
SCAN_DPS = 40


class ConstructionError(RuntimeError):
    """Rank deficiency or failure to realize the predicted zeros."""


def double_factorial(k: int) -> int:
    """k!! with (-1)!! = 0!! = 1."""
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def sigma_series(J: int) -> List[Fraction]:
    """g_0 .. g_J of x = sigma(w) solving 2x - x^2 = w, i.e. 1 - sqrt(1-w)."""
    mu = sqrt_one_minus_series(J)
    return [Fraction(0)] + [-m for m in mu[1:]]


def taylor_mu(i: int) -> Fraction:
    """Taylor coefficient of sqrt(1-h) at h^i."""
    if i == 0:
        return Fraction(1)
    return Fraction(-double_factorial(2 * i - 3), double_factorial(2 * i))


def paper_mu(i: int) -> Fraction:
    """mu_i as printed for the loop analysis: -(2i-3)!!/2^i (differs from Taylor for i >= 2)."""
    if i == 0:
        return Fraction(1)
    if i == 1:
        return Fraction(-1, 2)
    return Fraction(-double_factorial(2 * i - 3), 2 ** i)


def wallis_B(j: int) -> Fraction:
    """B_j = 2 int_0^1 (1-u^2)^j du = 2 (2j)!!/(2j+1)!!."""
    return Fraction(2 * double_factorial(2 * j), double_factorial(2 * j + 1))


@dataclass
class RankCertificate:
    which: str
    n: int
    matrix: list
    rank: int
    expected: int
    rows: list = field(default_factory=list)
    columns: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.rank == self.expected

    def to_json(self) -> dict:
        def enc(x):
            return x.to_json() if isinstance(x, SymScalar) else format_rational(Fraction(x))

        return {"which": self.which, "n": self.n, "rank": self.rank, "expected": self.expected,
                "ok": self.ok, "rows": self.rows, "columns": [f"{s}[{i},{j}]" for s, (i, j) in self.columns],
                "matrix": [[enc(x) for x in row] for row in self.matrix]}


def tilde_a1(n: int, variant: str = "paper_mu") -> RankCertificate:
    """The reduced Hankel-type matrix with entry (i, j) = mu_{(n-1)/2 + i - j + 1}, 1-based."""
    if n < 1 or n % 2 == 0:
        raise ValueError("tilde_a1 needs odd positive n")
    mu = {"paper_mu": paper_mu, "taylor_mu": taylor_mu}.get(variant)
    if mu is None:
        raise ValueError("variant must be 'paper_mu' or 'taylor_mu'")
    size = (n + 1) // 2
    half = (n - 1) // 2
    mat = [[mu(half + i - j + 1) for j in range(1, size + 1)] for i in range(1, size + 1)]
    return RankCertificate(f"tilde_a1_{variant}", n, mat, rank_rational(mat), size)


# ---------------------------------------------------------------------------
# coefficient maps

def hopf_columns(n: int):
    """Free coordinates of the Hopf family, in the column order of its Jacobian."""
    return [("a_plus", (i, 0)) for i in range(n + 1)] + [("a_minus", (i, 0)) for i in range(n + 1)]


def homoclinic_columns(n: int):
    """Free coordinates of the loop family; displayed Jacobian columns first.

    p+_{0,2k} = (2k+1) b+_{2k+1}, so the p+ columns are carried by odd b+.
    """
    cols = [("a_plus", (0, j)) for j in range(0, n + 1, 2)]
    cols += [("b_plus", (0, j)) for j in range(1, n + 1, 2)]
    cols += [("a_minus", (i, 0)) for i in range(1, n + 1, 2)]
    cols += [("a_minus", (i, 0)) for i in range(0, n + 1, 2)]
    cols += [("a_plus", (0, j)) for j in range(1, n + 1, 2)]
    cols += [("b_plus", (0, j)) for j in range(2, n + 1, 2)]
    return cols


def hopf_order(n: int) -> int:
    return 2 * n - n // 2


def hopf_map(n: int):
    """Matrix of (a+-_i) -> (c_0 .. c_K); rows are coefficients, columns ``hopf_columns``."""
    K = hopf_order(n)
    cols = hopf_columns(n)
    data = []
    for slot, key in cols:
        ex = expand_hopf(closed_form(PerturbationSpec.unit(n, slot, key)), J=K - n)
        data.append(list(ex.c[:K + 1]))
    rows = [f"c{i}" for i in range(K + 1)]
    return [list(r) for r in zip(*data)], rows, cols


def homoclinic_map(n: int):
    """Matrix of the loop family -> (b*_1 .. b*_m, b_0 .. b_n)."""
    m = (n + 1) // 2
    cols = homoclinic_columns(n)
    data = []
    for slot, key in cols:
        ex = expand_homoclinic(closed_form(PerturbationSpec.unit(n, slot, key)), J=n)
        data.append(list(ex.bstar) + list(ex.b[:n + 1]))
    rows = [f"bstar{i}" for i in range(1, m + 1)] + [f"b{j}" for j in range(n + 1)]
    return [list(r) for r in zip(*data)], rows, cols


def jacobian_rank(kind: str, n: int) -> RankCertificate:
    if kind == "hopf":
        mat, rows, cols = hopf_map(n)
        expected = 2 * n - n // 2 + 1
    elif kind == "homoclinic":
        mat, rows, cols = homoclinic_map(n)
        expected = n + 1 + n // 2 if n % 2 == 0 else n + (n - 1) // 2 + 2
    else:
        raise ValueError("kind must be 'hopf' or 'homoclinic'")
    return RankCertificate(f"{kind}_jacobian", n, mat, rank_symscalar(mat), expected, rows, cols)


# ---------------------------------------------------------------------------
# ladder solve

def _mp(s: SymScalar):
    return (mpmath.mpf(s.q.numerator) / s.q.denominator
            + mpmath.pi * mpmath.mpf(s.pi.numerator) / s.pi.denominator
            + mpmath.log(2) * mpmath.mpf(s.ln2.numerator) / s.ln2.denominator)


def _to_fraction(x) -> Fraction:
    x = mpmath.mpf(x)
    man, exp = x.man_exp   # man is unsigned
    out = Fraction(int(man)) * (Fraction(2) ** int(exp))
    return -out if x < 0 else out


def _pivot_columns(mat, need: int) -> List[int]:
    """Greedy left-to-right choice of independent columns."""
    chosen: List[int] = []
    for j in range(len(mat[0])):
        trial = chosen + [j]
        sub = [[row[c] for c in trial] for row in mat]
        if rank_symscalar(sub) == len(trial):
            chosen = trial
            if len(chosen) == need:
                break
    if len(chosen) < need:
        raise ConstructionError(f"coefficient map has rank {len(chosen)} < {need}")
    return chosen


def _ladder_targets(basis, zeros):
    """tau with sum_k tau_k basis_k(z) = 0 at every z, tau_last = 1."""
    K = len(zeros)
    A = mpmath.matrix(K, K)
    rhs = mpmath.matrix(K, 1)
    for r, z in enumerate(zeros):
        for k in range(K):
            A[r, k] = basis[k](z)
        rhs[r] = -basis[K](z)
    sol = mpmath.lu_solve(A, rhs)
    return [sol[k] for k in range(K)] + [mpmath.mpf(1)]


def _solve_spec(n, mat, cols, targets, pivots):
    A = mpmath.matrix(len(targets), len(pivots))
    for r in range(len(targets)):
        for k, c in enumerate(pivots):
            A[r, k] = _mp(mat[r][c])
    sol = mpmath.lu_solve(A, mpmath.matrix(targets))
    maps = {"a_plus": {}, "b_plus": {}, "a_minus": {}, "b_minus": {}}
    for k, c in enumerate(pivots):
        slot, key = cols[c]
        maps[slot][key] = _to_fraction(sol[k])
    return PerturbationSpec(n, **maps)


# ---------------------------------------------------------------------------
# ledger

def _series_times(poly_h, series, order):
    out = [ZERO] * (order + 1)
    for i, a in enumerate(poly_h):
        for j, b in enumerate(series[:order + 1 - i]):
            out[i + j] = out[i + j] + SymScalar.coerce(a) * b
    return out


def _lam_poly_series(coeffs, order, extra=Fraction(0)):
    """sum c_k (1-h)^(k/2 + extra) as a series in h."""
    out = [ZERO] * (order + 1)
    for k, c in enumerate(coeffs):
        if not c:
            continue
        for j, s in enumerate(power_series(Fraction(k, 2) + extra, order)):
            out[j] = out[j] + c * s
    return out


@dataclass
class ConstructionLedger:
    kind: str
    n: int
    t: float
    ratio: float
    sigma_series: list
    p_tilde: list
    B: list
    c_star: list
    mu: list
    D: list
    omega: list
    v: list
    v_star: list
    v_tilde: list
    C1: list
    C2: list
    X_star: SymScalar
    jacobian: list
    rows: list
    columns: list
    pivots: list
    targets: list
    ladder_zeros: list
    spec: PerturbationSpec

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, SymScalar):
                return x.to_json()
            return format_rational(Fraction(x))

        return {
            "kind": self.kind, "n": self.n, "t": self.t, "ratio": self.ratio,
            "sigma_series": [enc(x) for x in self.sigma_series],
            "p_tilde": [enc(x) for x in self.p_tilde], "B": [enc(x) for x in self.B],
            "c_star": [enc(x) for x in self.c_star], "mu": [enc(x) for x in self.mu],
            "D": [enc(x) for x in self.D], "omega": [enc(x) for x in self.omega],
            "v": [enc(x) for x in self.v], "v_star": [enc(x) for x in self.v_star],
            "v_tilde": [enc(x) for x in self.v_tilde],
            "C1": [enc(x) for x in self.C1], "C2": [enc(x) for x in self.C2],
            "X_star": enc(self.X_star),
            "jacobian": [[enc(x) for x in row] for row in self.jacobian],
            "rows": self.rows, "columns": [f"{s}[{i},{j}]" for s, (i, j) in self.columns],
            "pivots": [f"{self.columns[c][0]}[{self.columns[c][1][0]},{self.columns[c][1][1]}]"
                       for c in self.pivots],
            "targets": [mpmath.nstr(x, 20) for x in self.targets],
            "ladder_zeros": self.ladder_zeros,
            "spec": self.spec.to_json(),
        }


def hopf_ledger_parts(spec: PerturbationSpec):
    """sigma, p_tilde, B, c_star for a spec of the Hopf family."""
    n = spec.n
    g = sigma_series(n)
    # pbar(sigma(w)) = sum_{i>=1} a+_i sigma^i
    p_tilde = [Fraction(0)] * (n + 1)
    power = [Fraction(1)] + [Fraction(0)] * n
    for i in range(1, n + 1):
        power = [sum(power[k] * g[j - k] for k in range(j + 1)) for j in range(n + 1)]
        a = spec.a_plus.get((i, 0), Fraction(0))
        p_tilde = [p + a * s for p, s in zip(p_tilde, power)]
    B = [Fraction(0)] + [wallis_B(j) for j in range(1, n + 1)]
    c_star = [-2 * spec.a_plus.get((0, 0), Fraction(0))] + [-p_tilde[j] * B[j] for j in range(1, n + 1)]
    return g, p_tilde, B, c_star


def homoclinic_ledger_parts(spec: PerturbationSpec, order: int):
    """D_k, omega, v, v*, v~, C1, C2 for a spec of the loop family, as h-series."""
    n = spec.n
    half = (n - 1) // 2
    D = []
    for k in range(half + 1):
        acc = ZERO
        for m in range(k, half + 1):
            a = spec.a_minus.get((2 * m + 1, 0))
            if a:
                acc = acc + wallis(2 * m + 2, 0) * (a * comb(m, k) * (-1) ** k)
        D.append(acc)
    e = left_moments(spec)
    # M-/(-2 sqrt(1-h)) = (1/2) sum e_l (1-h)^(l/2) = C1 + C2
    C1 = _lam_poly_series([x * Fraction(1, 2) if l % 2 == 0 else ZERO for l, x in enumerate(e)], order)
    C2 = _lam_poly_series([x * Fraction(1, 2) if l % 2 == 1 else ZERO for l, x in enumerate(e)], order)
    omega = [a + b for a, b in zip(C1, C2)]
    plus = PerturbationSpec(n, a_plus=spec.a_plus, b_plus=spec.b_plus)
    cf = closed_form(plus)
    # M+/(-2 l) = -f(l)/2 - g(1-h) I10 / (2 l); I10 = -h log h / 4 + gamma
    from .expansion import gamma_series

    g_h = list(cf.g.w_to_h().coeffs)
    inv_sqrt = power_series(Fraction(-1, 2), order)
    v = _lam_poly_series([c * Fraction(-1, 2) for c in cf.f.coeffs], order)
    gam = gamma_series(order)
    g_gamma = _series_times(g_h, gam, order)
    tail = _series_times([SymScalar(x) for x in inv_sqrt], g_gamma, order)
    v = [a - b * Fraction(1, 2) for a, b in zip(v, tail)]
    # log part: +(1/8) g(1-h) (1-h)^(-1/2) h log h; v*_k multiplies h^(k+1) log h
    v_star = [x * Fraction(1, 8) for x in _series_times(g_h, [SymScalar(x) for x in inv_sqrt], order)]
    v_tilde = [a + b for a, b in zip(v, omega)]
    return D, omega, v, v_star, v_tilde, C1, C2


@dataclass
class ConstructionResult:
    spec: PerturbationSpec
    ledger: ConstructionLedger
    predicted: int
    report: object
    closed_form: ClosedForm

    @property
    def found(self) -> int:
        return self.report.count


def _basis_hopf(n):
    K = hopf_order(n)
    powers = list(range(n + 1)) + [2 * (n // 2) + 2 * j for j in range(1, K - n + 1)]
    return [(lambda z, p=p: z ** p) for p in powers]


def _basis_homoclinic(n):
    m = (n + 1) // 2
    fns = [lambda z: mpmath.mpf(1)]
    order = [("b", 0)]
    for i in range(1, m + 1):
        fns.append(lambda z, i=i: z ** i * mpmath.log(z))
        order.append(("bstar", i))
        fns.append(lambda z, i=i: z ** i)
        order.append(("b", i))
    for j in range(m + 1, n + 1):
        fns.append(lambda z, j=j: z ** j)
        order.append(("b", j))
    return fns, order


def _construct(kind: str, n: int, t: float, ratio: float, max_tries: int, verify: bool,
               grid: int) -> ConstructionResult:
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < t <= 0.2:
        raise ValueError("need 0 < t <= 0.2")
    if not 0.0 < ratio < 1.0:
        raise ValueError("need 0 < ratio < 1")
    predicted = n + (n + 1) // 2
    if kind == "hopf":
        mat, rows, cols = hopf_map(n)
    else:
        mat, rows, cols = homoclinic_map(n)
    pivots = _pivot_columns(mat, len(rows))
    last = None
    with mpmath.workdps(SOLVE_DPS):
        for attempt in range(max_tries):
            zeros = [mpmath.mpf(t) * mpmath.mpf(ratio) ** j for j in range(predicted)]
            if kind == "hopf":
                targets = _ladder_targets(_basis_hopf(n), zeros)
            else:
                fns, order = _basis_homoclinic(n)
                tau = _ladder_targets(fns, zeros)
                m = (n + 1) // 2
                index = {lab: k for k, lab in enumerate(order)}
                targets = [tau[index[("bstar", i)]] for i in range(1, m + 1)]
                targets += [tau[index[("b", j)]] for j in range(n + 1)]
            spec = _solve_spec(n, mat, cols, targets, pivots)
            cf = closed_form(spec)
            report = count_zeros(cf, grid=grid, dps=SCAN_DPS)
            if not verify:
                break
            if kind == "hopf":
                inside = all(z["lambda"] <= 2 * t for z in report.zeros)
            else:
                inside = all(z["h"] <= 2 * t for z in report.zeros)
            if report.count == predicted and inside and not report.suspected_multiple:
                break
            last = (t, report.count)
            t = t / 2
        else:
            raise ConstructionError(
                f"{kind} n={n}: no t gave {predicted} zeros; last try t={last[0]:.3g} found {last[1]}")
        ladder = [float(z) for z in zeros]

    if kind == "hopf":
        g, p_tilde, B, c_star = hopf_ledger_parts(spec)
        X_star = SymScalar(-wallis_B(n // 2) / 2 ** (n // 2)) if n % 2 == 0 else ZERO
        D = omega = v = v_star = v_tilde = C1 = C2 = []
        mu = [taylor_mu(i) for i in range(predicted + 2)]
    else:
        g, p_tilde, B, c_star = sigma_series(n), [], [wallis_B(j) for j in range(n + 1)], []
        X_star = ZERO
        mu = [taylor_mu(i) for i in range(predicted + 2)]
        D, omega, v, v_star, v_tilde, C1, C2 = homoclinic_ledger_parts(spec, n + 1)
    ledger = ConstructionLedger(kind, n, float(t), float(ratio), g, p_tilde, B, c_star, mu, D, omega,
                                v, v_star, v_tilde, C1, C2, X_star, mat, rows, cols, pivots,
                                targets, ladder, spec)
    return ConstructionResult(spec, ledger, predicted, report, cf)


def construct_hopf(n: int, t: float = 0.1, *, ratio: float = 0.5, max_tries: int = 12,
                   verify: bool = True, grid: int = 4096) -> ConstructionResult:
    """Hopf-family spec whose Mbar has n + (n+1)//2 simple zeros with lambda <= 2t."""
    return _construct("hopf", n, t, ratio, max_tries, verify, grid)


def construct_homoclinic(n: int, t: float = 0.1, *, ratio: float = 0.5, max_tries: int = 12,
                         verify: bool = True, grid: int = 4096) -> ConstructionResult:
    """Loop-family spec whose Mbar has n + (n+1)//2 simple zeros with h <= 2t."""
    return _construct("homoclinic", n, t, ratio, max_tries, verify, grid)
