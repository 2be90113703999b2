"""Vacuum amplification by a Bogoliubov Hamiltonian.

Without loss the drift matrix has eigenvalues +-chi and the steady-state
Sylvester equation is singular; the min-norm solution sigma0 = I/2 still
gives the exact closed form. The truncated Fock oracle tracks it until the
squeezed vacuum spills past the truncation.
"""

import numpy as np

from gaussrep import fock_oracle as fo
from gaussrep import quadratic_master_equation as qme
from gaussrep import state_factory as sf

chi = 0.5
q = qme.lindblad_to_qme(qme.bogoliubov(chi))
d = qme.drift_matrices(q)
print("unique steady state:", d.sigma0_unique, " sigma0 =", np.round(d.sigma0.real, 12).tolist())

times = np.linspace(0, 2.5, 6)
traj = qme.moment_trajectory(q, sf.vacuum(1), times)
for nmax in (60, 120):
    space = fo.FockSpace(1, nmax)
    rhos = fo.evolve_lindblad(qme.bogoliubov(chi), fo.build_state("vacuum", space), times, edge_tol=None)
    print(f"\nnmax = {nmax}")
    print(f"{'chi t':>6} {'1/2 sinh(2 chi t)':>18} {'<aa> gauss':>14} {'<aa> fock':>14} {'edge pop':>10}")
    for t, mo, r in zip(times, traj.moments, rhos):
        mf = fo.moments_fock(r)
        print(f"{chi * t:6.3f} {0.5 * np.sinh(2 * chi * t):18.12f} {mo.aa[0, 0].real:14.10f} "
              f"{mf.aa[0, 0].real:14.10f} {r.edge_population():10.2e}")
