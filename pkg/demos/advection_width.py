"""Linear advection of a step: slow POD decay, exact one-weight reduction.

Run: python demos/advection_width.py
"""

import numpy as np

from rdnlab.experiments import advection_ball, advection_separation
from rdnlab.nwidth import fit_decay, lower_bound_certificate

ms = np.array([4, 8, 16, 32, 64])
res = advection_separation(ms)
fit = fit_decay(ms, res.pod_error, "algebraic")
print("   M   POD error   RDN error")
for m, p, r in zip(ms, res.pod_error, res.rdn_error):
    print(f"{m:4d}  {p:10.3e}  {r:10.3e}")
print(f"POD slope {fit.rate:.3f} (R2 {fit.r_squared:.4f})")

rep = lower_bound_certificate([advection_ball(N) for N in (4, 8, 16, 32)], 0.5)
print(rep.summary())
