"""Degenerate parametric amplifier below threshold.

A pumped cavity mode with gain chi and loss gamma settles into a squeezed
steady state. We compute that state three ways: from the steady-state
Sylvester equation, by propagating the closed form to late times, and by
brute-force integration of the Lindblad equation in a truncated Fock basis.
"""

import numpy as np

from gaussrep import fock_oracle as fo
from gaussrep import gaussian_state as gs
from gaussrep import quadratic_master_equation as qme
from gaussrep import state_factory as sf

chi, gamma = 0.25, 1.0
spec = qme.parametric_amplifier(chi, gamma)
q = qme.lindblad_to_qme(spec)

# %% The drift matrix and its steady state
drift = qme.drift_matrices(q)
print("E spectrum:", np.round(drift.spectrum, 6))
print("sigma0:\n", np.round(drift.sigma0.real, 12))
print("expected n0, m0 =", 2 * chi**2 / (gamma**2 - 4 * chi**2), chi * gamma / (gamma**2 - 4 * chi**2))

# %% Relaxation from vacuum: Gaussian closed form vs Fock oracle
times = np.linspace(0, 15, 7)
traj = qme.moment_trajectory(q, sf.vacuum(1), times)
space = fo.FockSpace(1, 40)
rhos = fo.evolve_lindblad(spec, fo.build_state("vacuum", space), times)
print(f"\n{'t':>5} {'<a^dag a> gauss':>16} {'<a^dag a> fock':>16} {'<a a> gauss':>12}")
for t, mo, r in zip(times, traj.moments, rhos):
    mf = fo.moments_fock(r)
    print(f"{t:5.1f} {mo.normal[0, 0].real:16.10f} {mf.normal[0, 0].real:16.10f} {mo.aa[0, 0].real:12.8f}")

# %% The steady state passes the physicality checks
g_ss = gs.GaussianParams.from_covariance(1, [0], [0], drift.sigma0)
print("\nsteady state physical:", gs.check_physical(g_ss).physical)
