"""Two coupled trap modes leaking into a zero-temperature reservoir.

The damping matrix gamma need not be diagonal; it is split into jump
operators by its eigen-decomposition. A coherent initial state stays
coherent while n(t) = |alpha(t)|^2 decays.
"""

import numpy as np

from gaussrep import fock_oracle as fo
from gaussrep import gaussian_state as gs
from gaussrep import quadratic_master_equation as qme
from gaussrep import state_factory as sf

omega = np.array([[1.0, 0.2], [0.2, 0.6]])
gamma = np.array([[0.3, 0.05], [0.05, 0.2]])
spec = qme.lossy_trap(omega, gamma)
q = qme.lindblad_to_qme(spec)
print(qme.validate_trace_preserving(q).lines())

alpha0 = np.array([0.6 + 0.2j, -0.4])
times = np.linspace(0, 6, 4)
traj = qme.moment_trajectory(q, sf.coherent_projector(alpha0), times)

space = fo.FockSpace(2, 12)
rhos = fo.evolve_lindblad(spec, fo.build_state("coherent", space, alpha=alpha0), times)
for t, mo, r in zip(times, traj.moments, rhos):
    dev = fo.moments_fock(r).max_abs_diff(mo)
    print(f"t={t:3.1f}  <a> = {np.round(mo.a, 6)}  total N = {np.trace(mo.normal).real:.6f}  |gauss - fock| = {dev:.1e}")

# %% A squeezed input loses its squeezing at the same rates
g = sf.squeezed_vacuum(sf.SqueezeSpec(np.diag([0.4, 0.2])))
for t in (0.0, 2.0, 8.0):
    gt = qme.propagate_closed_form(q, g, t)
    print(f"t={t:3.1f}  |m| = {np.abs(gt.m).max():.5f}  physical = {gs.check_physical(gt, 1e-9).physical}")
