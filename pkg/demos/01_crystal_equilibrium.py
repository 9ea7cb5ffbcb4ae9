"""Solve a 127-ion planar crystal and look at its structure.

A single-plane crystal forms when the radial confinement is much weaker
than the axial one.  This script relaxes the 127-ion (6-shell) crystal at
omega_r/2pi = 0.2 MHz, omega_z/2pi = 10 MHz for 9Be+, then prints the
shell-resolved radii and the tightest pair distance that sets how close
neighboring qubits sit.
"""

import math

import numpy as np

from gatelab import TrapConfig, closed_shell_count, solve_equilibrium

trap = TrapConfig(127, omega_r=2 * math.pi * 0.2e6,
                  omega_z=2 * math.pi * 10e6)
crystal = solve_equilibrium(trap)

print("ions                 :", crystal.ion_count)
print("length scale         : %.3f um" % (crystal.length_scale_ell * 1e6))
print("dimensionless u_min  : %.6f" % crystal.u_min)
print("minimum spacing      : %.3f um" % (crystal.spacing_metres() * 1e6))
print("residual |gradient|  : %.2e" % crystal.residual_gradient_norm)

# group ions by distance from the center; relaxation splits the ideal
# hexagonal shells (6 shells close at 127 ions) into more rings
radii = np.linalg.norm(crystal.positions, axis=1)
order = np.argsort(radii)
print("\nring structure (ideal hexagonal closure: %s ions in 6 shells):"
      % closed_shell_count(6))
edges = np.flatnonzero(np.diff(radii[order]) > 0.25)
start = 0
for ring, stop in enumerate(list(edges + 1) + [len(radii)]):
    members = order[start:stop]
    print("  ring %d: %3d ions, mean radius %6.3f (dimensionless)"
          % (ring, len(members), radii[members].mean()))
    start = stop

inner = radii < radii.max() / 2
print("\ncentral-region nearest neighbor distances:")
pos = crystal.positions
for j in np.flatnonzero(inner)[:5]:
    d = np.linalg.norm(pos - pos[j], axis=1)
    d[j] = np.inf
    print("  ion %3d: %.4f" % (j, d.min()))
print("\nThe crystal is denser in the middle; the global minimum spacing "
      "always sits at the center.")
