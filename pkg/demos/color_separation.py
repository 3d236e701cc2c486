"""Variable-speed transport of a kinked datum: POD against the composed network.

Takes about a minute on one core.  Run: python demos/color_separation.py
"""

import math

import numpy as np

from rdnlab.experiments import box_mus, color_separation
from rdnlab.nwidth import fit_decay

ms = [4, 8, 12, 16, 24, 32, 48]
mus = box_mus(2) + [(0.375, 4 * math.pi, 1.05 * math.pi)]
res = color_separation(ms, mus, np.linspace(0.0, 0.35, 28), [0.1, 0.2, 0.35])
print("   M   POD error   RDN error")
for m, p, r in zip(res.ms, res.pod_error, res.rdn_error):
    print(f"{m:4d}  {p:10.3e}  {r:10.3e}")
pod = fit_decay(res.ms, res.pod_error, "algebraic")
rdn = fit_decay(res.ms, res.rdn_error, "exponential")
print(f"POD algebraic slope {pod.rate:.3f}, RDN exponential base {rdn.base:.3f}")
