"""Bisection inverse of a monotone PL network, step by step.

Run: python demos/inverse_network.py
"""

import numpy as np

from rdnlab import build_full_two_layer, build_inverse, check_monotone, eval_network

grid = np.linspace(0.0, 1.0, 6)
vals = np.array([0.0, 0.05, 0.4, 0.45, 0.9, 1.0])
f = check_monotone(build_full_two_layer(6, vals).network)

y = np.linspace(0.0, 1.0, 401)
exact = np.interp(y, vals, grid)
print(" L_inv  depth  max|f_flat - f^-1|   2^-L")
for L in (2, 4, 6, 8, 10, 12):
    inv = build_inverse(f, L)
    err = np.max(np.abs(eval_network(inv.net, y) - exact))
    print(f"{L:6d} {inv.net.depth:6d}  {err:18.3e}  {2.0 ** -L:8.3e}")
