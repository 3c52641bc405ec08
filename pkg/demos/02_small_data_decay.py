"""
Small data decay on a periodic box
==================================

A zero-mean Gaussian with H^2 norm 1e-2 is evolved on a 32^3 box and its
L2 and gradient norms are compared with the fourth-order heat flow
u_t + Lap^2 u = 0 started from the same data.  (The full 64^3 version is
``ch6 run --scenario decay3d``.)
"""

import math

import numpy as np

from ch6 import GridSpec
from ch6 import diagnostics as diag
from ch6.harness import InitialDataSpec, generate_initial_data
from ch6.integrator import StepperConfig, evolve
from ch6.model import PhysicalParams

grid = GridSpec(3, 32, 16 * math.pi)
params = PhysicalParams()
u0 = generate_initial_data(InitialDataSpec(width=2.0, target_h2=1e-2), grid)

cadence = 2.0
t1, t2 = diag.decay_window(cadence, grid.box_length, params.kappa0)
print("fit window [%g, %g]" % (t1, t2))

traj = evolve(u0, StepperConfig(dt=1.0), params, t2, cadence)
heat = diag.heat_baseline_series(u0, [r.t for r in traj.records])

for l in (0, 1):
    fit = diag.fit_decay(*diag.series(traj.records, "grad%d" % l), (t1, t2))
    ref = diag.fit_decay(*diag.series(heat, "grad%d" % l), (t1, t2))
    print("l=%d  sigma %.3f   heat flow %.3f   (l + 3/2)/4 = %.3f" % (l, fit.sigma, ref.sigma, (l + 1.5) / 4))

energy = np.array([r.free_energy for r in traj.records])
print("free energy never increases:", bool(np.all(np.diff(energy) <= 0)))
