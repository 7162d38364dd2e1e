"""
Quasi one-dimensional motion on a rectangular lattice
=====================================================

With lattice constants differing by a factor of about twenty, hopping along
the long axis is exponentially suppressed.  The particle oscillates along the
short axis through the source instead of orbiting it, while the continuum
model with the same mass ratio moves in two dimensions.
"""

import numpy as np

from latkepler import experiments as ex
from latkepler import lattice as lm

# Hopping energies follow the exponential overlap of hydrogen-like orbitals;
# the short spacing is fixed by requiring a mass ratio of 2.94.
b_over_a0 = lm.solve_anisotropy(2.94, 9.5)
print(f"b/a0 = {b_over_a0:.4f} for a/a0 = 9.5 (a/b = {9.5 / b_over_a0:.1f})")

lattice = ex.run_scenario(ex.preset("fig2-lattice"))
continuum = ex.run_scenario(ex.preset("fig2-continuum"))

for label, bundle in (("lattice", lattice), ("continuum", continuum)):
    r = bundle.trajectory.r
    print(f"{label:10s} x range = {np.ptp(r[:, 0]):.4g}, y range = {np.ptp(r[:, 1]):.4g}")

y = lattice.trajectory.r[:, 1]
print("sign changes of y on the lattice:", int(np.sum(np.signbit(y[1:]) != np.signbit(y[:-1]))))
