"""Quadratic master equations and exact Gaussian evolution.

A general quadratic master equation is stored as coefficients
(A0, A1, B1, A, B, C) acting on rho through the extended operator vector
a_ext = (a, a^dagger) with a_ext^dagger = (a^dagger, a):

    drho/dt = A0 rho
              + A1_mu :a_mu rho:          + B1_mu {a_mu :rho:}
              + A_{nu mu} :a_mu a^dag_nu rho:
              + B_{nu mu} {a_mu a^dag_nu :rho:}
              + C_{nu mu} {a_mu :a^dag_nu rho:}

where :...: moves creation operators to the left of rho and annihilation
operators to its right, and {...} does the opposite. Under such an
equation every Gaussian kernel stays Gaussian, with

    d alpha_ext / dt = swap(A1) + E alpha_ext
    d sigma / dt     = 2 B + E sigma + sigma E^+,     E = 2A + C.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import linalg_kernels as lk
from .gaussian_state import GaussianParams, WeightedEnsemble, assemble_covariance, ensemble_moments, moments

TOL = 1e-10


class IntegrationError(RuntimeError):
    pass


class SteadyStateUnavailable(RuntimeError):
    """Closed form needs alpha0 and sigma0; use propagate_ode instead."""


def _block_matrix(x, name):
    a = lk.as_cmatrix(x, name)
    if a.shape[0] != a.shape[1] or a.shape[0] % 2:
        raise ValueError(f"{name} must be 2M x 2M, got {a.shape}")
    return a


def _scale(*xs):
    return max([1.0] + [float(np.abs(x).max()) for x in xs if np.size(x)])


@dataclass(frozen=True)
class QuadraticME:
    A0: complex
    A1: np.ndarray
    B1: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        set_ = object.__setattr__
        A = _block_matrix(self.A, "A")
        dim = A.shape[0]
        B = _block_matrix(self.B, "B")
        C = _block_matrix(self.C, "C")
        if not (B.shape == C.shape == A.shape):
            raise ValueError("A, B and C must share one shape")
        A1 = np.zeros(dim, complex) if self.A1 is None else np.array(self.A1, dtype=complex).reshape(-1)
        B1 = np.zeros(dim, complex) if self.B1 is None else np.array(self.B1, dtype=complex).reshape(-1)
        if A1.shape != (dim,) or B1.shape != (dim,):
            raise ValueError(f"A1 and B1 must have length {dim}")
        for name, X in (("A", A), ("B", B)):
            d = np.abs(X - lk.generalized_dagger(X)).max()
            if d > TOL * _scale(X):
                raise ValueError(f"{name} must equal its generalized dagger (deviation {d:.3g})")
        set_(self, "A0", complex(self.A0))
        for name, val in (("A1", A1), ("B1", B1), ("A", A), ("B", B), ("C", C)):
            val.setflags(write=False)
            set_(self, name, val)

    @property
    def modes(self):
        return self.A.shape[0] // 2

    @property
    def E(self):
        return 2 * self.A + self.C

    @property
    def D(self):
        return self.A + self.B + self.C

    @classmethod
    def zero(cls, M):
        z = np.zeros((2 * M, 2 * M))
        return cls(0.0, None, None, z, z, z)


@dataclass(frozen=True)
class LindbladSpec:
    """H = 2 a^dag H1 a + a^dag H2 a^dag + a H2* a; O_K = O1* . a + O2* . a^dag.

    Damping enters as sum_K (2 O_K rho O_K^dag - O_K^dag O_K rho - rho O_K^dag O_K).
    """

    H1: np.ndarray
    H2: np.ndarray = None
    loss_ops: tuple = ()

    def __post_init__(self):
        H1 = lk.as_cmatrix(self.H1, "H1")
        M = H1.shape[0]
        H2 = np.zeros((M, M), complex) if self.H2 is None else lk.as_cmatrix(self.H2, "H2")
        if H1.shape != (M, M) or H2.shape != (M, M):
            raise ValueError("H1 and H2 must be square and of equal size")
        if np.abs(H1 - H1.conj().T).max() > 1e-12 * _scale(H1):
            raise ValueError("H1 must be Hermitian")
        if np.abs(H2 - H2.T).max() > 1e-12 * _scale(H2):
            raise ValueError("H2 must be symmetric")
        ops = []
        for k, op in enumerate(self.loss_ops):
            o1, o2 = op
            o1 = np.zeros(M, complex) if o1 is None else np.array(o1, dtype=complex).reshape(-1)
            o2 = np.zeros(M, complex) if o2 is None else np.array(o2, dtype=complex).reshape(-1)
            if o1.shape != (M,) or o2.shape != (M,):
                raise ValueError(f"loss_ops[{k}] vectors must have length {M}")
            ops.append((o1, o2))
        object.__setattr__(self, "H1", H1)
        object.__setattr__(self, "H2", H2)
        object.__setattr__(self, "loss_ops", tuple(ops))

    @property
    def modes(self):
        return self.H1.shape[0]


def _sym(x):
    return (x + x.T) / 2


def lindblad_to_qme(spec):
    """Coefficients of the quadratic master equation for a Lindblad spec.

    Off-diagonal blocks of the damping A_K and B_K are symmetrized (only
    their symmetric part acts on rho), and the off-diagonal blocks of C_K
    carry the transposition that reproduces the superoperator exactly.
    """
    H1, H2 = spec.H1, spec.H2
    M = spec.modes
    z = np.zeros((M, M), complex)
    AH = lk.join_blocks(z, -1j * H2, 1j * H2.conj(), z)
    A = AH.copy()
    B = -AH
    C = lk.join_blocks(-2j * H1, z, z, 2j * H1.T)
    for o1, o2 in spec.loss_ops:
        p11 = np.outer(o1, o1.conj())
        p22 = np.outer(o2, o2.conj())
        p12 = np.outer(o1, o2.conj())
        p21 = np.outer(o2, o1.conj())
        A = A + lk.join_blocks(p22.T, _sym(-p12), _sym(-p21), p22)
        B = B + lk.join_blocks(p11, _sym(-p12), _sym(-p21), p11.T)
        C = C + lk.join_blocks(-p11 - p22.T, 2 * p12.T, 2 * p21, -p11.T - p22)
    return QuadraticME(np.trace(B), None, None, A, B, C)


def _hermitian(x, name):
    x = lk.as_cmatrix(x, name)
    if np.abs(x - x.conj().T).max() > 1e-12 * _scale(x):
        raise ValueError(f"{name} must be Hermitian")
    return x


def number_hamiltonian(omega):
    """Lindblad spec for H = a^dag omega a (no damping)."""
    omega = _hermitian(np.atleast_2d(omega), "omega")
    return LindbladSpec(omega / 2)


def bogoliubov(chi):
    """H = (i/2) sum_ij (chi_ij a_i^dag a_j^dag - chi_ij* a_i a_j)."""
    chi = lk.as_cmatrix(np.atleast_2d(chi), "chi")
    M = chi.shape[0]
    return LindbladSpec(np.zeros((M, M)), 0.5j * chi)


def lossy_trap(omega, gamma):
    """H = a^dag omega a with loss (gamma_ij / 2)(2 a_i rho a_j^dag - ...).

    gamma must be Hermitian positive semidefinite; it is split into rank-one
    jump operators through its eigen-decomposition.
    """
    omega = _hermitian(np.atleast_2d(omega), "omega")
    gamma = _hermitian(np.atleast_2d(gamma), "gamma")
    lam, vecs = np.linalg.eigh(gamma)
    if lam.min() < -1e-12 * _scale(gamma):
        raise ValueError("gamma must be positive semidefinite")
    ops = tuple(
        (np.sqrt(max(l, 0.0) / 2) * vecs[:, k].conj(), None)
        for k, l in enumerate(lam)
        if l > 0
    )
    return LindbladSpec(omega / 2, None, ops)


def parametric_amplifier(chi, gamma):
    """Single mode: H = (i/2)(chi a^dag^2 - chi* a^2), loss rate gamma."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    ops = ((np.array([np.sqrt(gamma / 2)]), None),) if gamma > 0 else ()
    return LindbladSpec(np.zeros((1, 1)), np.array([[0.5j * chi]]), ops)


def imaginary_time_qme(omega):
    """d rho / d tau = -(1/2){H, rho} with H = a^dag omega a.

    Not trace preserving, so the real-time drift formulas do not apply;
    use `propagate_imaginary_time`.
    """
    omega = lk.as_cmatrix(np.atleast_2d(omega), "omega")
    M = omega.shape[0]
    z = np.zeros((2 * M, 2 * M))
    zm = np.zeros((M, M))
    C = -0.5 * lk.join_blocks(omega, zm, zm, omega.T)
    return QuadraticME(np.trace(omega), None, None, z, z, C)


@dataclass(frozen=True)
class Report:
    checks: dict
    details: dict

    @property
    def passed(self):
        return all(self.checks.values())

    def failures(self):
        return [k for k, ok in self.checks.items() if not ok]

    def lines(self):
        return [f"{'PASS' if ok else 'FAIL'} {k}: {self.details[k]}" for k, ok in self.checks.items()]


def validate_trace_preserving(q, tol=TOL):
    checks, details = {}, {}
    scale = _scale(q.A, q.B, q.C)

    def record(name, dev):
        checks[name] = bool(dev <= tol * scale)
        details[name] = f"deviation {dev:.3g}"

    record("linear_terms", float(np.abs(q.A1 + q.B1).max()))
    trB = np.trace(q.B)
    record("constant_term", abs(q.A0 - trB))
    record("trace_balance", abs(trB + np.trace(q.A + q.C)))
    D = q.D
    record("D_antisymmetric", float(np.abs(lk.generalized_dagger(D) + D).max()))
    return Report(checks, details)


def structure_report(q, tol=TOL):
    """Symmetry diagnostics that are not required for trace preservation."""
    checks, details = {}, {}
    scale = _scale(q.A, q.B, q.C)
    for name, X in (("A", q.A), ("B", q.B), ("C", q.C)):
        d = float(np.abs(X.conj().T - lk.generalized_dagger(X)).max())
        checks[f"{name}_hermitian_density"] = d <= tol * scale
        details[f"{name}_hermitian_density"] = f"deviation {d:.3g}"
    _, b, c, _ = lk.split_blocks(q.C)
    d = float(max(np.abs(b - b.T).max(), np.abs(c - c.T).max()))
    checks["C_offdiagonal_symmetric"] = d <= tol * scale
    details["C_offdiagonal_symmetric"] = f"deviation {d:.3g}"
    return Report(checks, details)


@dataclass(frozen=True)
class DriftSolution:
    E: np.ndarray
    E_plus: np.ndarray
    drive: np.ndarray
    alpha0: np.ndarray = None
    sigma0: np.ndarray = None
    sigma0_unique: bool = False
    stable: bool = False
    spectrum: np.ndarray = field(default=None, repr=False)
    D: np.ndarray = field(default=None, repr=False)

    @property
    def has_steady_state(self):
        return self.alpha0 is not None and self.sigma0 is not None


def drift_matrices(q):
    E = q.E
    Ep = lk.generalized_dagger(E)
    drive = lk.swap_halves(q.A1)
    spec = np.linalg.eigvals(E)
    scale = _scale(E)

    if not np.any(drive):
        alpha0 = np.zeros_like(drive)
    else:
        sol, *_ = np.linalg.lstsq(E, -drive, rcond=None)
        ok = np.abs(E @ sol + drive).max() <= 1e-8 * _scale(E, drive)
        alpha0 = sol if ok else None

    unique = not lk.pencil_is_singular(E, Ep)
    try:
        sigma0 = lk.sylvester_solve(E, Ep, -2 * q.B)
    except lk.SingularPencilError:
        sigma0 = None
    stable = bool(np.all(spec.real < -TOL * scale))
    return DriftSolution(E, Ep, drive, alpha0, sigma0, unique, stable, spec, q.D)


def _evolution(drift, t):
    U = lk.matrix_exp(drift.E * t)
    return U, lk.generalized_dagger(U)


def propagate_closed_form(q, g, t, drift=None):
    """alpha(t) = e^Et (alpha - alpha0) + alpha0, sigma likewise; Omega fixed."""
    drift = drift_matrices(q) if drift is None else drift
    if not drift.has_steady_state:
        raise SteadyStateUnavailable("no particular solution for alpha0 or sigma0; use propagate_ode")
    U, Up = _evolution(drift, t)
    a = U @ (g.alpha_ext - drift.alpha0) + drift.alpha0
    s = U @ (assemble_covariance(g) - drift.sigma0) @ Up + drift.sigma0
    return GaussianParams.from_extended(g.omega, a, s)


def _pack(a, s):
    return np.concatenate([a, s.reshape(-1)])


def propagate_ode(q, g, t, rtol=1e-10, atol=1e-12, method="RK45"):
    return ode_trajectory(q, g, [t], rtol=rtol, atol=atol, method=method)[0]


def ode_trajectory(q, g, times, rtol=1e-10, atol=1e-12, method="RK45"):
    """Integrate the drift equations; returns one GaussianParams per time."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ValueError("times must be nonnegative and nondecreasing")
    dim = 2 * q.modes
    E = q.E
    Ep = lk.generalized_dagger(E)
    drive = lk.swap_halves(q.A1)
    twoB = 2 * q.B

    def rhs(_, y):
        a = y[:dim]
        s = y[dim:].reshape(dim, dim)
        return _pack(drive + E @ a, twoB + E @ s + s @ Ep)

    y0 = _pack(g.alpha_ext, assemble_covariance(g))
    t_end = float(times[-1]) if times.size else 0.0
    if t_end == 0.0:
        return [g for _ in times]
    sol = solve_ivp(rhs, (0.0, t_end), y0, method=method, t_eval=times, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(f"drift integration failed: {sol.message}")
    out = []
    for k in range(times.size):
        y = sol.y[:, k]
        out.append(GaussianParams.from_extended(g.omega, y[:dim], y[dim:].reshape(dim, dim)))
    return out


def _check_diag_thermal(g0):
    off = g0.n - np.diag(g0.n.diagonal())
    if np.any(np.abs(off) > TOL) or np.any(np.abs(g0.m) > TOL) or np.any(np.abs(g0.m_plus) > TOL):
        raise ValueError("imaginary-time start state must have diagonal n and m = m+ = 0")
    if np.any(np.abs(g0.alpha) > TOL) or np.any(np.abs(g0.alpha_plus) > TOL):
        raise ValueError("imaginary-time start state must be undisplaced")


def propagate_imaginary_time(omega_k, tau, tau0=1e-3, g0=None, method="analytic", omega0=1.0,
                             rtol=1e-12, atol=1e-14):
    """Kernel at imaginary time tau under H = sum_k omega_k a_k^dag a_k.

    Characteristics: dn_k/dtau = -omega_k n_k (1 + n_k),
    dOmega/dtau = -Omega sum_k omega_k n_k. Without `g0` the start is the
    exact characteristic at tau0, n_k = 1 / (e^(omega_k tau0) - 1) and
    Omega = omega0 prod_k (1 - e^(-omega_k tau0))^-1, the regularized image
    of the identity operator. Returns a list when `tau` is a sequence.
    """
    w = np.atleast_1d(np.asarray(omega_k, dtype=float))
    if np.any(w <= 0) or tau0 <= 0:
        raise ValueError("omega_k and tau0 must be positive")
    scalar = np.ndim(tau) == 0
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(taus < tau0):
        raise ValueError("tau must not precede tau0")
    M = w.size
    if g0 is None:
        n0 = 1.0 / np.expm1(w * tau0)
        log_om0 = np.log(complex(omega0)) - np.sum(np.log(-np.expm1(-w * tau0)))
    else:
        if g0.modes != M:
            raise ValueError("g0 and omega_k disagree on mode count")
        _check_diag_thermal(g0)
        n0 = g0.n.diagonal()
        log_om0 = np.log(g0.omega)

    if method == "analytic":
        out = [_imag_analytic(w, n0, log_om0, tau0, t, M, exact_start=g0 is None) for t in taus]
    elif method == "ode":
        out = _imag_ode(w, n0, log_om0, taus, tau0, M, rtol, atol)
    else:
        raise ValueError(f"unknown method {method!r}")
    return out[0] if scalar else out


def _diag_params(log_om, n, M):
    z = np.zeros((M, M))
    return GaussianParams(np.exp(log_om), np.zeros(M), np.zeros(M), np.diag(n), z, z)


def _imag_analytic(w, n0, log_om0, tau0, tau, M, exact_start):
    if exact_start:
        # on this characteristic n/(1+n) = e^{-w tau} exactly
        n = 1.0 / np.expm1(w * tau)
        log_om = log_om0 + np.sum(np.log(-np.expm1(-w * tau0))) - np.sum(np.log(-np.expm1(-w * tau)))
        return _diag_params(log_om, n.astype(complex), M)
    x0 = n0 / (1 + n0)
    x = x0 * np.exp(-w * (tau - tau0))
    n = x / (1 - x)
    log_om = log_om0 + np.sum(np.log((1 - x0) / (1 - x)))
    return _diag_params(log_om, n, M)


def _imag_ode(w, n0, log_om0, taus, tau0, M, rtol, atol):
    def rhs(_, y):
        n = y[:M]
        return np.concatenate([-w * n * (1 + n), [-np.sum(w * n)]])

    y0 = np.concatenate([np.asarray(n0, dtype=complex), [log_om0]])
    if taus[-1] == tau0:
        return [_diag_params(log_om0, np.asarray(n0, complex), M) for _ in taus]
    sol = solve_ivp(rhs, (tau0, taus[-1]), y0, method="RK45", t_eval=taus, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(f"characteristic integration failed: {sol.message}")
    return [_diag_params(sol.y[M, k], sol.y[:M, k], M) for k in range(taus.size)]


@dataclass(frozen=True)
class MomentTrajectory:
    times: np.ndarray
    moments: tuple
    omega: np.ndarray

    def stacked(self, name):
        return np.array([getattr(mo, name) for mo in self.moments])


def propagate(q, state, times, engine="closed_form", **ode_kw):
    """Propagate a kernel or ensemble; returns a list (per time) of states."""
    times = np.asarray(times, dtype=float)
    members = state.members if isinstance(state, WeightedEnsemble) else (state,)
    if engine == "closed_form":
        drift = drift_matrices(q)
        per = [[propagate_closed_form(q, g, t, drift) for t in times] for g in members]
    elif engine == "ode":
        per = [ode_trajectory(q, g, times, **ode_kw) for g in members]
    else:
        raise ValueError(f"unknown engine {engine!r}")
    if isinstance(state, WeightedEnsemble):
        return [WeightedEnsemble(tuple(p[k] for p in per)) for k in range(times.size)]
    return per[0]


def moment_trajectory(q, state, times, engine="closed_form", **ode_kw):
    times = np.asarray(times, dtype=float)
    states = propagate(q, state, times, engine, **ode_kw)
    if isinstance(state, WeightedEnsemble):
        mom = tuple(ensemble_moments(s) for s in states)
        om = np.array([s.total_weight for s in states])
    else:
        mom = tuple(moments(s) for s in states)
        om = np.array([s.omega for s in states])
    return MomentTrajectory(times, mom, om)
