import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy as sp

from pwlmelnikov.construct import construct_hopf
from pwlmelnikov.melnikov import ClosedForm, closed_form, eval_melnikov, float_closed_form
from pwlmelnikov.model import PerturbationSpec, random_spec
from pwlmelnikov.ring import Poly, SymScalar
from pwlmelnikov.zeros import (GridTooCoarseError, SturmError, count_zeros, roots_in_unit_interval,
                               sign_variation_bound, sturm_count, theta_poly,
                               upper_bound_certificate, zmax_table)


def cf_from(f, g=(), n=None):
    f = Poly.from_rationals("lambda", f)
    g = Poly.from_rationals("w", g)
    return ClosedForm(n or max(f.degree, 1), f, g)


def test_count_quadratic():
    # roots of l^2 - 0.1 l + 0.001: (0.1 -+ sqrt(0.006)) / 2
    cf = cf_from(["1/1000", "-1/10", "1"])
    rep = count_zeros(cf)
    assert rep.count == 2
    want = [(0.1 - math.sqrt(0.006)) / 2, (0.1 + math.sqrt(0.006)) / 2]
    assert sorted(rep.lambda_values) == pytest.approx(want, abs=1e-11)
    for z in rep.zeros:
        lo, hi = z["bracket"]
        assert hi - lo <= 1e-12 and lo <= z["lambda"] <= hi
        assert z["h"] == pytest.approx(1 - z["lambda"] ** 2, abs=1e-15)


def test_count_single_signed():
    cf = closed_form(PerturbationSpec.unit(1, "a_plus", (0, 0)))
    assert count_zeros(cf).count == 0


def test_count_constructed_hopf_n2():
    res = construct_hopf(2)
    assert count_zeros(res.closed_form, dps=40).count == 3


def test_double_root_reported_not_counted():
    # f = (l - 1/2)^2
    cf = cf_from(["1/4", -1, 1])
    rep = count_zeros(cf)
    assert rep.count == 0
    assert len(rep.suspected_multiple) == 1
    assert rep.suspected_multiple[0] == pytest.approx(0.75, abs=1e-6)


def test_grid_too_coarse():
    # three roots inside the grid cell [0.49495, 0.5] of a 100-point scan, far
    # enough apart for the in-cell probe to see them
    r = [Fraction(4955, 10000), Fraction(4965, 10000), Fraction(4975, 10000)]
    coeffs = sp.Poly(sp.prod([sp.Symbol("x") - sp.Rational(x.numerator, x.denominator) for x in r]),
                     sp.Symbol("x")).all_coeffs()[::-1]
    cf = cf_from([Fraction(int(c.p), int(c.q)) for c in coeffs])
    with pytest.raises(GridTooCoarseError):
        count_zeros(cf, grid=100)


def test_count_h_window_and_lambda_bijection(rng):
    for _ in range(20):
        cf = closed_form(random_spec(3, rng))
        full = count_zeros(cf)
        hs = np.linspace(1e-6, 1 - 1e-6, 20001)
        vals = eval_melnikov(cf, hs)
        s = np.sign(vals)
        assert full.count == int(np.count_nonzero(s[1:] != s[:-1]))
        lo, hi = 0.2, 0.8
        win = count_zeros(cf, lo, hi)
        assert win.count == sum(1 for h in full.h_values if lo < h < hi)


def test_count_zeros_rejects_bad_input():
    cf = cf_from([1, 1])
    with pytest.raises(ValueError):
        count_zeros(cf, grid=10)
    with pytest.raises(ValueError):
        count_zeros(cf, 0.5, 0.4)


def test_report_json():
    rep = count_zeros(cf_from(["1/1000", "-1/10", "1"]))
    obj = rep.to_json()
    assert obj["count"] == 2 and obj["scan"]["tol"] == 1e-12


def test_theta_examples():
    cf = cf_from([-2], [2], n=1)
    assert theta_poly(cf) == Poly.from_rationals("lambda", [0, 0, -4])
    assert theta_poly(cf_from([1, 2, 3], n=2)).is_zero()


def test_theta_odd_cancellation(rng):
    cf = closed_form(random_spec(3, rng))
    th = theta_poly(cf)
    assert th.degree <= 6 and th.coeff(7).is_zero()


def test_theta_against_sympy(rng):
    x = sp.Symbol("x")

    def sym(p, arg):
        return sum((sp.Rational(c.q.numerator, c.q.denominator) + sp.pi * sp.Rational(c.pi.numerator, c.pi.denominator)
                    + sp.log(2) * sp.Rational(c.ln2.numerator, c.ln2.denominator)) * arg ** k
                   for k, c in enumerate(p.coeffs))

    for n in (2, 3, 4):
        cf = closed_form(random_spec(n, rng, scale=5))
        F = x * sym(cf.f, x)
        u0 = sym(cf.g, x ** 2)
        u = (1 - x ** 2) * u0
        want = sp.expand(sp.diff(F, x) * u - F * sp.diff(u, x) + u0 ** 2)
        got = sp.expand(sym(theta_poly(cf), x))
        assert sp.simplify(want - got) == 0


def test_certificate_examples():
    c = upper_bound_certificate(cf_from([-2], [2], n=1))
    assert (c.zeros_u_in_I, c.zeros_theta_in_I, c.bound) == (0, 0, 1)
    c = upper_bound_certificate(cf_from(["1/1000", "-1/10", "1"]))
    assert c.bound == 2


def test_certificate_n5_bound(rng):
    for _ in range(20):
        cf = closed_form(random_spec(5, rng))
        c = upper_bound_certificate(cf)
        assert c.bound <= 12
        assert count_zeros(cf).count <= c.bound
        assert c.to_json()["bound"] == c.bound


def test_zmax_table():
    assert zmax_table(1) == {"lower": 2, "upper": 2}
    assert zmax_table(4) == {"lower": 6, "upper": 6}
    assert zmax_table(3) == {"lower": 5, "upper": 5}
    assert zmax_table(5) == {"lower": 8, "upper": 13}
    with pytest.raises(ValueError):
        zmax_table(0)


def _unit_interval_descartes(coeffs):
    """Descartes count for (0, 1) via x = 1/(1+t): sign changes of sum a_k (1+t)^(d-k)."""
    d = len(coeffs) - 1
    out = [Fraction(0)] * (d + 1)
    for k, a in enumerate(coeffs):
        for j in range(d - k + 1):
            out[j] += a * math.comb(d - k, j)
    return sign_variation_bound(out)


def _random_poly(rng):
    """Random rational polynomial with known real roots, plus an irreducible quadratic factor."""
    x = sp.Symbol("x")
    k = int(rng.integers(1, 6))
    roots = sorted({Fraction(int(r), 97) for r in rng.integers(-40, 140, size=k)})
    p = sp.prod([x - sp.Rational(r.numerator, r.denominator) for r in roots])
    p *= (x - sp.Rational(int(rng.integers(-9, 10)), 7)) ** 2 + sp.Rational(int(rng.integers(1, 9)), 5)
    p *= sp.Rational(int(rng.integers(1, 20)) * (-1) ** int(rng.integers(0, 2)), 3)
    coeffs = [Fraction(int(c.p), int(c.q)) for c in sp.Poly(p, x).all_coeffs()[::-1]]
    return coeffs, sum(1 for r in roots if 0 < r < 1)


def test_sturm_against_sampling_and_descartes(rng):
    xs = np.linspace(0.0, 1.0, 200001)[1:-1]
    for _ in range(100):
        coeffs, want = _random_poly(rng)
        exact = sturm_count(coeffs)
        assert exact == want
        vals = np.polyval([float(c) for c in coeffs[::-1]], xs)
        s = np.sign(vals)
        assert np.count_nonzero(s[1:] != s[:-1]) == want
        desc = _unit_interval_descartes(coeffs)
        assert exact <= desc and (desc - exact) % 2 == 0
        # the mpmath path agrees with the exact one
        with mpmath.workdps(60):
            mp_coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in coeffs]
            assert sturm_count(mp_coeffs, mpmath.mpf(0), mpmath.mpf(1), exact=False) == exact


def test_sturm_mp_path_on_transcendental_coefficients():
    # (l - 1/pi)(l - 1/2) * pi = pi l^2 - (1 + pi/2) l + 1/2
    p = Poly("lambda", (SymScalar(Fraction(1, 2)), SymScalar(Fraction(-1), pi=Fraction(-1, 2)),
                        SymScalar(pi=Fraction(1))))
    assert roots_in_unit_interval(p) == 2


def test_sturm_zero_polynomial():
    with pytest.raises(SturmError):
        roots_in_unit_interval(Poly.zero("lambda"))


@pytest.mark.slow
def test_random_float_specs_within_bounds(rng):
    for n in (1, 2, 3, 4):
        dim = 2 * (n + 1) * (n + 2)
        up = zmax_table(n)["upper"]
        for _ in range(500):
            assert count_zeros(float_closed_form(n, rng.standard_normal(dim))).count <= up
