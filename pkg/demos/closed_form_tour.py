"""A tour of the averaged Melnikov function for a small perturbation.

Builds a degree-2 perturbation, prints the exact (f, g) pair, compares the
closed form with direct quadrature along the unperturbed orbit, and shows the
two local expansions (near the loop h -> 0 and near the center h -> 1).
"""
import numpy as np

from pwlmelnikov.expansion import expand_homoclinic, expand_hopf
from pwlmelnikov.melnikov import closed_form, eval_melnikov, quadrature_oracle
from pwlmelnikov.model import PerturbationSpec
from pwlmelnikov.zeros import count_zeros, upper_bound_certificate

spec = PerturbationSpec(2, a_plus={(0, 0): "1/3", (1, 0): -1},
                        b_plus={(1, 1): 2},
                        a_minus={(0, 0): 1, (2, 0): "-5/2"},
                        b_minus={(1, 1): 1})
cf = closed_form(spec)
print("f(lambda) =", cf.f)
print("g(w)      =", cf.g)

print("\n   h      closed form        quadrature")
for h in np.linspace(0.1, 0.9, 5):
    print(f"{h:5.2f}  {eval_melnikov(cf, h): .15f}  {quadrature_oracle(spec, h): .15f}")

rep = count_zeros(cf)
cert = upper_bound_certificate(cf)
print(f"\nzeros in (0,1): {rep.count} at h = {[round(float(x), 6) for x in rep.h_values]}")
print(f"certificate bound: {cert.bound}")

hom = expand_homoclinic(cf, 3)
print("\nnear the loop:")
for i, c in enumerate(hom.bstar, start=1):
    print(f"  h^{i} log h : {c}")
for j, c in enumerate(hom.b):
    print(f"  h^{j}       : {c}")
print(f"  series at h=1e-3: {hom.value(1e-3):.12f}, exact {eval_melnikov(cf, 1e-3):.12f}")

hopf = expand_hopf(cf, 2)
print("\nnear the center (powers of 1-h):")
for i, c in enumerate(hopf.c):
    print(f"  (1-h)^{hopf.exponent(i)} : {c}")
