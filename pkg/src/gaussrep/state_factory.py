"""Constructors mapping named state families to Gaussian kernels."""

from dataclasses import dataclass

import numpy as np

from . import linalg_kernels as lk
from .gaussian_state import GaussianParams, WeightedEnsemble, _matrix


def _as_square(x, M=None, name="matrix"):
    a = np.array(x, dtype=complex)
    if a.ndim == 0:
        a = a * np.eye(M or 1, dtype=complex)
    elif a.ndim == 1:
        a = np.diag(a)
    return _matrix(a, a.shape[0], name)


@dataclass(frozen=True)
class SqueezeSpec:
    """Squeeze matrices xi and xi+ (xi+ = conj(xi) for a unitary squeeze)."""

    xi: np.ndarray
    xi_plus: np.ndarray = None

    def __post_init__(self):
        xi = _as_square(self.xi, name="xi")
        xp = np.conj(xi) if self.xi_plus is None else _as_square(self.xi_plus, xi.shape[0], "xi_plus")
        for name, x in (("xi", xi), ("xi_plus", xp)):
            if np.abs(x - x.T).max() > 1e-10 * max(1.0, np.abs(x).max()):
                raise ValueError(f"{name} must be symmetric")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "xi_plus", xp)

    @property
    def modes(self):
        return self.xi.shape[0]

    def matrices(self):
        """(mu, nu, nu+)."""
        return lk.squeeze_matrices(self.xi, self.xi_plus)


def bose_einstein(phi):
    """n = 1 / (e^phi - 1), elementwise, complex phi allowed."""
    return 1.0 / np.expm1(np.asarray(phi, dtype=complex))


@dataclass(frozen=True)
class ThermalSpec:
    nbar: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nbar", _as_square(self.nbar, name="nbar"))

    @classmethod
    def from_phi(cls, phi):
        """Per-mode phi_k = eps_k / kT, diagonal occupation."""
        return cls(np.diag(np.atleast_1d(bose_einstein(phi))))

    @property
    def modes(self):
        return self.nbar.shape[0]


def _thermal_matrix(spec):
    if isinstance(spec, ThermalSpec):
        return spec.nbar
    return ThermalSpec(spec).nbar


def vacuum(M=1):
    if M < 1:
        raise ValueError("mode count must be at least 1")
    z = np.zeros(M)
    return GaussianParams(1.0, z, z, np.zeros((M, M)), np.zeros((M, M)), np.zeros((M, M)))


def coherent_projector(alpha, beta=None, omega=1.0):
    """Omega |alpha><beta*| / <beta*|alpha>, the positive-P kernel.

    beta defaults to conj(alpha), giving the Glauber-Sudarshan projector.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    beta = np.conj(alpha) if beta is None else np.atleast_1d(np.asarray(beta, dtype=complex))
    M = alpha.shape[0]
    z = np.zeros((M, M))
    return GaussianParams(omega, alpha, beta, z, z, z)


def thermal(spec, omega=1.0, alpha=None, alpha_plus=None):
    nbar = _thermal_matrix(spec)
    M = nbar.shape[0]
    alpha = np.zeros(M) if alpha is None else alpha
    alpha_plus = np.conj(np.asarray(alpha, dtype=complex)) if alpha_plus is None else alpha_plus
    z = np.zeros((M, M))
    return GaussianParams(omega, alpha, alpha_plus, nbar, z, z)


def _displacement(M, alpha, alpha_plus):
    alpha = np.zeros(M, dtype=complex) if alpha is None else np.atleast_1d(np.asarray(alpha, dtype=complex))
    if alpha_plus is None:
        alpha_plus = np.conj(alpha)
    return alpha, np.atleast_1d(np.asarray(alpha_plus, dtype=complex))


def squeezed_vacuum(squeeze, alpha=None, alpha_plus=None, omega=1.0):
    """Displaced squeezed vacuum S(xi)|0>: n = nu nu+, m = -mu nu, m+ = -nu+ mu."""
    if not isinstance(squeeze, SqueezeSpec):
        squeeze = SqueezeSpec(squeeze)
    mu, nu, nu_p = squeeze.matrices()
    alpha, alpha_plus = _displacement(squeeze.modes, alpha, alpha_plus)
    return GaussianParams(omega, alpha, alpha_plus, nu @ nu_p, -mu @ nu, -nu_p @ mu)


def squeezed_thermal(squeeze, spec, alpha=None, alpha_plus=None, omega=1.0):
    """Displaced squeezed thermal kernel, D S rho_th S^dagger D^dagger.

    Conjugates in the Hermitian formulas are continued as mu* -> mu^T and
    nu* -> nu+, which keeps sigma invariant under the generalized dagger.
    """
    if not isinstance(squeeze, SqueezeSpec):
        squeeze = SqueezeSpec(squeeze)
    nbar = _thermal_matrix(spec)
    M = squeeze.modes
    if nbar.shape != (M, M):
        raise ValueError("squeeze and thermal specs disagree on mode count")
    mu, nu, nu_p = squeeze.matrices()
    eye = np.eye(M)
    n = mu @ nbar @ mu + nu @ (nbar.T + eye) @ nu_p
    m = -mu @ (nbar + eye) @ nu - nu @ nbar.T @ mu.T
    m_plus = -mu.T @ nbar.T @ nu_p - nu_p @ (nbar + eye) @ mu
    alpha, alpha_plus = _displacement(M, alpha, alpha_plus)
    return GaussianParams(omega, alpha, alpha_plus, n, m, m_plus)


def squeezed_thermal_compact(squeeze, spec):
    """sigma = U (nbar_ext + I/2) U + I/2 with U = exp(-[[0, xi], [xi+, 0]]).

    Independent route used to cross-check `squeezed_thermal`.
    """
    if not isinstance(squeeze, SqueezeSpec):
        squeeze = SqueezeSpec(squeeze)
    nbar = _thermal_matrix(spec)
    M = squeeze.modes
    z = np.zeros((M, M))
    U = lk.matrix_exp(-lk.join_blocks(z, squeeze.xi, squeeze.xi_plus, z))
    nb = lk.join_blocks(nbar, z, z, nbar.T)
    half = 0.5 * np.eye(2 * M)
    return U @ (nb + half) @ U + half


_BASIS_N = {"wigner": -0.5, "q": -1.0, "p": 0.0, "plus_p": 0.0}


def classical_basis(kind, alpha, beta=None, s=None, omega=1.0):
    """Classical phase-space kernels as Gaussians with negative occupation.

    kind: 'wigner', 'q', 'p', 'plus_p' or 's_ordered' (needs s).
    n = (s - 1)/2 I, so s = 1, 0, -1 give P, Wigner and Q.
    """
    kind = kind.lower()
    if kind == "s_ordered":
        if s is None:
            raise ValueError("s-ordered basis needs s")
        nval = (s - 1) / 2
    elif kind in _BASIS_N:
        nval = _BASIS_N[kind]
    else:
        raise ValueError(f"unknown basis kind {kind!r}")
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    M = alpha.shape[0]
    if beta is None:
        beta = np.conj(alpha)
    z = np.zeros((M, M))
    return GaussianParams(omega, alpha, beta, nval * np.eye(M), z, z)


def number_state_ensemble(n0, r=1.0, K=32):
    """|n0><n0| as K thermal kernels on a circle of complex phi.

    phi_j = r + 2 pi i j / K, Omega_j = (1/K) (1 - e^-phi_j)^-1 e^(n0 phi_j).
    Fock weights come out as delta(n, n0) plus aliases e^(-l K r) at
    n = n0 + l K.
    """
    if int(n0) != n0 or n0 < 0:
        raise ValueError("n0 must be a nonnegative integer")
    if K < 2 or r <= 0:
        raise ValueError("need K >= 2 and r > 0")
    phis = r + 2j * np.pi * np.arange(K) / K
    members = []
    for phi in phis:
        w = np.exp(n0 * phi) / (K * -np.expm1(-phi))
        members.append(thermal(np.array([[bose_einstein(phi)]]), omega=w))
    return WeightedEnsemble(tuple(members))


def number_ensemble_alias_weights(n0, r, K, nmax):
    """Exact diagonal Fock weights the quadrature produces up to nmax."""
    w = np.zeros(nmax + 1)
    for n in range(n0 % K, nmax + 1, K):
        w[n] = np.exp(-(n - n0) * r)
    return w
