"""Limit cycles of the perturbed system against zeros of the Melnikov function.

The return map on the negative y-axis is integrated numerically; its fixed
points should sit at the zeros of Mbar up to O(epsilon).
"""
from pwlmelnikov.construct import construct_homoclinic
from pwlmelnikov.melnikov import eval_melnikov
from pwlmelnikov.simulate import SimConfig, displacement, find_limit_cycles

res = construct_homoclinic(2, t=0.2)
print("Melnikov zeros:", [round(float(h), 6) for h in res.report.h_values])

for eps in (1e-3, 1e-4):
    rep = find_limit_cycles(res.spec, SimConfig(eps))
    print(f"\neps = {eps:g}: {len(rep.fixed_points)} fixed points")
    for h_cyc, h_zero, dist in rep.matched:
        print(f"  cycle h = {h_cyc:.6f}  zero h = {h_zero:.6f}  |diff| = {dist:.2e}")

# the displacement is 2 eps Mbar to first order
eps = 1e-4
for h in (0.05, 0.3, 0.6):
    d = displacement(h, res.spec, SimConfig(eps))
    print(f"h = {h}: d/eps = {d / eps: .6f}, 2 Mbar = {2 * eval_melnikov(res.closed_form, h): .6f}")
