"""Canonical ensembles from imaginary-time evolution.

Starting near the identity (tau0 small), the anticommutator flow
d rho / d tau = -{H, rho}/2 carries a thermal kernel along
n_k = 1/(e^{omega_k tau} - 1) and Omega = Z(tau), the partition function.
"""

import numpy as np

from gaussrep import fock_oracle as fo
from gaussrep import quadratic_master_equation as qme

w = np.array([0.5, 1.0, 2.0])
taus = np.array([0.05, 0.2, 1.0, 3.0])
closed = qme.propagate_imaginary_time(w, taus)
ode = qme.propagate_imaginary_time(w, taus, method="ode")
# the truncated sum misses e^{-omega (nmax+1) tau} / (1 - e^{-omega tau}) per mode,
# visible for the slowest mode at the smallest tau
Z, nbar = fo.imaginary_time_oracle(w, taus, nmax=400)

print(f"{'tau':>5} {'n_1 closed':>12} {'n_1 BE':>12} {'Z closed':>14} {'Z ode':>14} {'Z fock':>14}")
for k, tau in enumerate(taus):
    print(f"{tau:5.2f} {closed[k].n[1, 1].real:12.8f} {1 / np.expm1(tau):12.8f} "
          f"{closed[k].omega.real:14.6f} {ode[k].omega.real:14.6f} {Z[k]:14.6f}")
