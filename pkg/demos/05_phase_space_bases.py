"""Classical phase-space kernels and the number-state ensemble.

P, Wigner and Q kernels are Gaussians with n = 0, -1/2, -1: the latter two
are not density matrices. A Fock state is not Gaussian, but a finite
weighted sum of complex-temperature thermal kernels reproduces it with
exponentially small aliasing.
"""

import numpy as np

from gaussrep import fock_oracle as fo
from gaussrep import gaussian_state as gs
from gaussrep import state_factory as sf

for kind in ("p", "wigner", "q"):
    g = sf.classical_basis(kind, [0.3 + 0.1j])
    rep = gs.check_physical(g)
    print(f"{kind:7s} n = {g.n[0, 0].real:5.2f}  physical = {rep.physical}  failures = {rep.failures()}")

space = fo.FockSpace(1, 40)
for K in (4, 8, 16):
    e = sf.number_state_ensemble(2, r=1.0, K=K)
    diag = np.diag(fo.build_ensemble(e, space).rho).real
    print(f"K={K:2d}  <a^dag a> = {gs.ensemble_moments(e).normal[0, 0].real:.12f}  "
          f"p(2) = {diag[2]:.3f}  p(2+K) = {diag[2 + K]:.2e}")
