"""
Two ways of writing the same flow
=================================

The equation can be stepped either through the chemical potential
(u_t = M Lap mu) or through the rewritten kappa form where a stabilising
fourth-order term is split off.  Here both are evaluated on the same field.
"""

import numpy as np

from ch6 import GridSpec, RealField
from ch6.model import PhysicalParams, PotentialSpec, formulation_residual, map_parameters
from ch6.spectral import band_limited_random

grid = GridSpec(3, 32)
u = band_limited_random(grid, k_max=8, slope=-1, seed=0)
u = RealField(grid, 0.5 * u.values / np.abs(u.values).max())

# g0 > 0 keeps the raw coefficients, g0 <= 0 shifts them
for g0 in (2.0, 0.0, -1.0):
    print("g0 =", g0, "->", map_parameters(g0, 1.5))

for g0 in (2.0, -1.0):
    params = PhysicalParams(g0=g0, g2=1.5, potential=PotentialSpec(h0=0.3))
    print("g0 = %+.1f  relative gap between the two right-hand sides: %.2e" % (g0, formulation_residual(u, params)))
