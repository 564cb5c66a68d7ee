"""Acceptance criteria 1-8. Each test prints one PASS/FAIL line.

Run just these with ``pytest tests/test_acceptance.py -v -s``; the lines are
also collected in the terminal summary.
"""

import math
import time
from fractions import Fraction

import mpmath
import numpy as np

from pwlmelnikov.construct import (construct_homoclinic, construct_hopf, jacobian_rank,
                                   tilde_a1)
from pwlmelnikov.expansion import expand_homoclinic, expand_hopf
from pwlmelnikov.melnikov import (closed_form, eval_melnikov, float_closed_form,
                                  quadrature_oracle)
from pwlmelnikov.model import random_spec
from pwlmelnikov.ring import Poly, SymScalar
from pwlmelnikov.simulate import SimConfig, find_limit_cycles
from pwlmelnikov.zeros import (_mp_evaluator, count_zeros, theta_poly,
                               upper_bound_certificate, zmax_table)

import tables_n2


# -- 1 ------------------------------------------------------------------------

def _table_mismatches(table, specs):
    bad = set()
    for spec in specs:
        got = tables_n2.pipeline_values(spec)
        for name, form in table.items():
            if got[name] != tables_n2.apply(form, spec):
                bad.add(name)
    return sorted(bad)


def test_criterion_1_n2_tables_literal(criterion, rng):
    t0 = time.perf_counter()
    specs = [tables_n2.random_integer_spec(rng) for _ in range(20)]
    bad = _table_mismatches(tables_n2.LITERAL, specs)
    dt = time.perf_counter() - t0
    criterion(1, not bad and dt < 10.0,
              f"20 integer specs, {len(tables_n2.LITERAL)} entries, {dt:.2f}s; "
              f"mismatched entries: {bad or 'none'}")


def test_criterion_1_n2_tables_corrected(rng):
    """The same check against the tables with the b-_11 slips fixed."""
    specs = [tables_n2.random_integer_spec(rng) for _ in range(20)]
    assert _table_mismatches(tables_n2.CORRECTED, specs) == []


# -- 2 ------------------------------------------------------------------------

def test_criterion_2_oracle_equivalence(criterion, rng):
    t0 = time.perf_counter()
    hs = np.linspace(0.02, 0.98, 50)
    worst, fails = 0.0, 0
    for n in range(1, 7):
        for _ in range(100):
            spec = random_spec(n, rng)
            cf = closed_form(spec)
            for h in hs:
                a = eval_melnikov(cf, h)
                b = quadrature_oracle(spec, h)
                # relative error, with the oracle's absolute floor for values near a root
                err = abs(a - b) / max(abs(b), 1e-3)
                worst = max(worst, err)
                if abs(a - b) > 1e-9 * abs(b) + 1e-12:
                    fails += 1
    dt = time.perf_counter() - t0
    criterion(2, fails == 0 and dt < 300,
              f"30000 points, {fails} outside 1e-9 rel, worst rel {worst:.1e}, {dt:.1f}s")


# -- 3 ------------------------------------------------------------------------

def _oracle_signs_alternate(res):
    """Oracle and closed form agree in sign between consecutive zeros and flip across each."""
    lams = sorted(res.report.lambda_values)
    pts = [lams[0] / 2]
    pts += [math.sqrt(a * b) for a, b in zip(lams[:-1], lams[1:])]
    pts += [min(1.5 * lams[-1], 0.5 * (1 + lams[-1]))]
    ev = _mp_evaluator(res.closed_form, 40)
    signs = []
    for lam in pts:
        o = quadrature_oracle(res.spec, (1 - lam) * (1 + lam), dps=40)
        s = int(mpmath.sign(ev(lam)))
        if s == 0 or s != int(np.sign(o)):
            return False
        signs.append(s)
    return all(a == -b for a, b in zip(signs[:-1], signs[1:]))


def test_criterion_3_lower_bound_realization(criterion):
    t0 = time.perf_counter()
    rows, ok = [], True
    for n, want in zip(range(1, 5), (2, 3, 5, 6)):
        for name, fn in (("hopf", construct_hopf), ("homoclinic", construct_homoclinic)):
            res = fn(n)
            good = (res.predicted == want and res.found == want
                    and not res.report.suspected_multiple and _oracle_signs_alternate(res))
            ok &= good
            rows.append(f"{name[:4]} n={n}:{res.found}")
    dt = time.perf_counter() - t0
    criterion(3, ok and dt < 120, f"{', '.join(rows)}; {dt:.1f}s")


# -- 4 ------------------------------------------------------------------------

def test_criterion_4_upper_bounds(criterion, rng):
    t0 = time.perf_counter()
    worst = {}
    ok = True
    for n in range(1, 5):
        upper = zmax_table(n)["upper"]
        m = 0
        dim = 2 * (n + 1) * (n + 2)
        for _ in range(10_000):
            c = count_zeros(float_closed_form(n, rng.standard_normal(dim))).count
            m = max(m, c)
        worst[n] = (m, upper)
        ok &= m <= upper
    for n in (5, 6):
        upper = zmax_table(n)["upper"]
        m, over = 0, 0
        for _ in range(1_000):
            cf = closed_form(random_spec(n, rng))
            c = count_zeros(cf).count
            b = upper_bound_certificate(cf).bound
            m = max(m, c)
            over += c > b or b > upper
        worst[n] = (m, upper)
        ok &= over == 0
    dt = time.perf_counter() - t0
    detail = ", ".join(f"n={n}: max {m} <= {u}" for n, (m, u) in worst.items())
    criterion(4, ok and dt < 600, f"{detail}; {dt:.1f}s")


# -- 5 ------------------------------------------------------------------------

def _lam(*c):
    return Poly("lambda", tuple(SymScalar.coerce(x) for x in c))


def test_criterion_5_theta_structure(criterion, rng):
    t0 = time.perf_counter()
    ok = True
    cancelled = 0
    for n in range(1, 9):
        top = n + 2 * ((n + 1) // 2)
        for _ in range(100):
            cf = closed_form(random_spec(n, rng))
            th = theta_poly(cf)
            ok &= th.degree <= 2 * n
            if n % 2:
                # the two halves each reach degree top; their leading terms cancel exactly
                lf = cf.f.shift(1)
                u0 = cf.g.w_to_lambda()
                u = u0 * _lam(1, 0, -1)
                left = lf.derivative() * u
                right = lf * u.derivative()
                ok &= th.coeff(top).is_zero()
                if not left.coeff(top).is_zero():
                    ok &= left.coeff(top) == right.coeff(top)
                    cancelled += 1
    dt = time.perf_counter() - t0
    criterion(5, ok and dt < 60,
              f"800 specs, deg <= 2n, {cancelled} odd-n exact cancellations; {dt:.1f}s")


# -- 6 ------------------------------------------------------------------------

def test_criterion_6_rank_certificates(criterion):
    t0 = time.perf_counter()
    bad = []
    for variant in ("paper_mu", "taylor_mu"):
        for n in range(1, 16, 2):
            c = tilde_a1(n, variant)
            if c.rank != (n + 1) // 2:
                bad.append(f"tilde_a1 {variant} n={n}")
    app = tilde_a1(7, "paper_mu")
    df = {1: 1, 3: 3, 5: 15, 7: 105, 9: 945, 11: 10395}
    first_row = [Fraction(-df[5], 2 ** 4), Fraction(-df[3], 2 ** 3), Fraction(-1, 4), Fraction(-1, 2)]
    if app.rank != 4 or [Fraction(x) for x in app.matrix[0]] != first_row \
            or Fraction(app.matrix[3][0]) != Fraction(-df[11], 2 ** 7):
        bad.append("appendix n=7")
    for n in range(1, 9):
        c = jacobian_rank("hopf", n)
        if c.rank != 2 * n - n // 2 + 1:
            bad.append(f"hopf n={n}")
    for n in range(1, 9):
        c = jacobian_rank("homoclinic", n)
        want = n + 1 + n // 2 if n % 2 == 0 else n + (n - 1) // 2 + 2
        if c.rank != want:
            bad.append(f"homoclinic n={n}")
    dt = time.perf_counter() - t0
    criterion(6, not bad and dt < 60, f"failures: {bad or 'none'}; {dt:.1f}s")


# -- 7 ------------------------------------------------------------------------

def test_criterion_7_simulation(criterion):
    t0 = time.perf_counter()
    ok, rows = True, []
    for n in (1, 2):
        res = construct_homoclinic(n, t=0.2)
        mism = {}
        for eps in (1e-3, 1e-4):
            rep = find_limit_cycles(res.spec, SimConfig(eps))
            exact = len(rep.fixed_points) == res.predicted and len(rep.matched) == res.predicted
            ok &= exact
            mism[eps] = rep.max_mismatch
        ok &= mism[1e-4] <= 0.05 and mism[1e-4] < mism[1e-3]
        rows.append(f"n={n}: |dh| {mism[1e-3]:.1e} -> {mism[1e-4]:.1e}")
    dt = time.perf_counter() - t0
    criterion(7, ok and dt < 300, f"{'; '.join(rows)}; {dt:.1f}s")


# -- 8 ------------------------------------------------------------------------

def test_criterion_8_expansions(criterion, rng):
    t0 = time.perf_counter()
    worst_hom, worst_hopf = 0.0, 0.0
    for n in range(1, 5):
        for _ in range(20):
            cf = closed_form(random_spec(n, rng))
            hom = expand_homoclinic(cf, 6)
            hop = expand_hopf(cf, 6)
            worst_hom = max(worst_hom, abs(hom.value(1e-3) - eval_melnikov(cf, 1e-3)))
            worst_hopf = max(worst_hopf, abs(hop.value(1 - 1e-3) - eval_melnikov(cf, 1 - 1e-3)))
    dt = time.perf_counter() - t0
    criterion(8, max(worst_hom, worst_hopf) <= 1e-6 and dt < 30,
              f"loop side {worst_hom:.1e}, center side {worst_hopf:.1e}; {dt:.1f}s")
