"""
Checking the functional inequalities numerically
================================================

Each check returns LHS / RHS on concrete fields.  The frequency-side
interpolation inequality has constant one; the others are judged by whether
the ratio stays bounded as the grid is refined.
"""

from ch6 import GridSpec
from ch6 import inequalities as ineq

coarse, fine = GridSpec(3, 16), GridSpec(3, 32)

for lks in [(1, 1, 0.5), (2, 1, 0), (1, 2, 0.5)]:
    rep = ineq.calibrate(ineq.Interpolation(*lks), 100, 0, coarse, k_max=5)
    print("interpolation", lks, "max ratio %.4f" % rep.max_ratio)

# exponent 2/(l+k+s) instead of k/(l+k+s): only right when k = 2
bad = ineq.calibrate(ineq.Interpolation(1, 1, 0.5, theta=2 / 2.5), 100, 0, coarse, k_max=5)
print("interpolation with theta = 0.8: max ratio %.2f" % bad.max_ratio)

for case in (ineq.HLS(0.5, 1.5), ineq.Agmon()):
    a = ineq.calibrate(case, 100, 0, coarse, k_max=5).max_ratio
    b = ineq.calibrate(case, 100, 0, fine, k_max=5).max_ratio
    print("%-5s 16^3: %.4f  32^3: %.4f" % (case.kind, a, b))
