"""Burgers shock formation: exact solution, shock path and network error.

Run: python demos/burgers_rdn.py
"""

from rdnlab.experiments import BurgersRDN
from rdnlab.hyperbolic import BurgersProblem

p = BurgersProblem()
print(f"x0={p.x0}  t1={p.t1:.6f}  t2={p.t2:.6f}")
for t in (p.t1, 0.5 * (p.t1 + p.t2), p.t2, 2.0):
    print(f"  t={t:.4f}  shock at {p.x_s(t):.6f}")

print("\n L_inv  dof   L2 error at t = 1.0, 2.0, 2.9")
for L in range(6, 15, 2):
    errs = [BurgersRDN(p, t, L).l2_error() for t in (1.0, 2.0, 2.9)]
    print(f"{L:6d} {BurgersRDN(p, 1.0, L).dof:4d}   " + "  ".join(f"{e:.3e}" for e in errs))
