"""Gaussian kernel parameters, covariance, trace and moments.

A kernel is the normally ordered Gaussian operator

    Lambda = Omega / sqrt(det sigma) * :exp(-da+ sigma^-1 da / 2):

with da = (a - alpha, a^dagger - alpha+) and the generalized covariance

    sigma = [[I + n, m    ],
             [m+,    I + n^T]].
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg_kernels as lk

SYMMETRY_TOL = 1e-10
PHYS_TOL = 1e-10


class GaussianValidityWarning(UserWarning):
    """Covariance outside the region where the trace integral converges."""


class ZeroTotalWeightError(ValueError):
    pass


def _vector(x, M, name):
    v = np.zeros(M, dtype=complex) if x is None else np.array(x, dtype=complex).reshape(-1)
    if v.shape != (M,):
        raise ValueError(f"{name} must have length {M}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def _matrix(x, M, name):
    if x is None:
        return np.zeros((M, M), dtype=complex)
    a = np.array(x, dtype=complex)
    if a.ndim == 0:
        a = a * np.eye(M, dtype=complex)
    if a.shape != (M, M):
        raise ValueError(f"{name} must be {M}x{M}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def _symmetrized(x, name):
    asym = np.abs(x - x.T).max()
    if asym > SYMMETRY_TOL * max(1.0, np.abs(x).max()):
        raise ValueError(f"{name} must be symmetric (asymmetry {asym:.3g})")
    return (x + x.T) / 2


def _frozen(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianParams:
    """Phase-space point (Omega, alpha, alpha+, n, m, m+) for M modes.

    Conjugate pairs are independent: a Hermitian (physical) kernel has
    alpha+ = conj(alpha), n Hermitian and m+ = conj(m), but nothing here
    enforces that. m and m+ are symmetrized on construction.
    """

    omega: complex
    alpha: np.ndarray
    alpha_plus: np.ndarray
    n: np.ndarray
    m: np.ndarray
    m_plus: np.ndarray
    modes: int = field(init=False)

    def __post_init__(self):
        n = np.array(self.n, dtype=complex)
        M = 1 if n.ndim == 0 else n.shape[0]
        set_ = object.__setattr__
        set_(self, "modes", M)
        set_(self, "omega", complex(self.omega))
        if not np.isfinite(self.omega):
            raise ValueError("omega must be finite")
        set_(self, "alpha", _frozen(_vector(self.alpha, M, "alpha")))
        set_(self, "alpha_plus", _frozen(_vector(self.alpha_plus, M, "alpha_plus")))
        set_(self, "n", _frozen(_matrix(n, M, "n")))
        set_(self, "m", _frozen(_symmetrized(_matrix(self.m, M, "m"), "m")))
        set_(self, "m_plus", _frozen(_symmetrized(_matrix(self.m_plus, M, "m_plus"), "m_plus")))

    @classmethod
    def from_covariance(cls, omega, alpha, alpha_plus, sigma, tol=1e-8):
        """Read (n, m, m+) off sigma; the lower-right block must be I + n^T."""
        a, b, c, d = lk.split_blocks(sigma)
        M = a.shape[0]
        dev = np.abs(d - a.T).max()
        if dev > tol * max(1.0, np.abs(a).max()):
            raise ValueError(f"sigma is not dagger-symmetric (diagonal blocks differ by {dev:.3g})")
        return cls(omega, alpha, alpha_plus, a - np.eye(M), b, c)

    @classmethod
    def from_extended(cls, omega, alpha_ext, sigma):
        """Build from the extended vector (alpha, alpha+) and sigma."""
        alpha_ext = np.asarray(alpha_ext, dtype=complex)
        M = alpha_ext.shape[0] // 2
        return cls.from_covariance(omega, alpha_ext[:M], alpha_ext[M:], sigma)

    @property
    def alpha_ext(self):
        return np.concatenate([self.alpha, self.alpha_plus])

    @property
    def param_count(self):
        """Phase-space dimension excluding Omega: M(2 + 3M).

        m and m+ are counted as full matrices, as in the phase-space vector;
        their symmetry leaves M(3 + 2M) truly independent entries.
        """
        M = self.modes
        return M * (2 + 3 * M)

    def replace(self, **changes):
        return replace(self, **changes)

    def allclose(self, other, atol=1e-12):
        return all(
            np.allclose(x, y, atol=atol, rtol=0)
            for x, y in zip(_fields(self), _fields(other))
        )


def _fields(g):
    return (g.omega, g.alpha, g.alpha_plus, g.n, g.m, g.m_plus)


def assemble_covariance(g):
    M = g.modes
    eye = np.eye(M)
    return lk.join_blocks(eye + g.n, g.m, g.m_plus, eye + g.n.T)


def normal_covariance(g):
    """sigma - I: the normally ordered covariance."""
    return assemble_covariance(g) - np.eye(2 * g.modes)


def covariance_det(g):
    return lk.det(assemble_covariance(g))


def sqrt_det_sigma(g):
    """sqrt(det sigma) on the branch continuous from sigma = I.

    det sigma = det(I+n)^2 det(I - (I+n^T)^-1 m+ (I+n)^-1 m); only the
    second factor needs a square root, taken on the principal branch.
    """
    M = g.modes
    p = lk.inverse(np.eye(M) + g.n)
    q = lk.inverse(np.eye(M) + g.n.T)
    inner = lk.det(np.eye(M) - q @ g.m_plus @ p @ g.m)
    return lk.det(np.eye(M) + g.n) * np.sqrt(inner)


def is_trace_valid(g):
    """All eigenvalues of sigma have positive real part."""
    return bool(np.all(np.linalg.eigvals(assemble_covariance(g)).real > 0))


def trace(g):
    """Tr[Lambda] = Omega.

    Outside the convergence region the value is an analytic continuation;
    a GaussianValidityWarning flags that case.
    """
    if not is_trace_valid(g):
        warnings.warn(
            "sigma has an eigenvalue with non-positive real part; trace is an analytic continuation",
            GaussianValidityWarning,
            stacklevel=2,
        )
    return g.omega


@dataclass(frozen=True)
class Moments:
    """Normally ordered first and second moments.

    a[i] = <a_i>, adag[i] = <a_i^dagger>, aa[i, j] = <a_i a_j>,
    normal[i, j] = <:a_i a_j^dagger:> = <a_j^dagger a_i>,
    adag_adag[i, j] = <a_i^dagger a_j^dagger>.
    """

    a: np.ndarray
    adag: np.ndarray
    aa: np.ndarray
    normal: np.ndarray
    adag_adag: np.ndarray

    def as_tuple(self):
        return (self.a, self.adag, self.aa, self.normal, self.adag_adag)

    def max_abs_diff(self, other):
        return max(np.abs(x - y).max() for x, y in zip(self.as_tuple(), other.as_tuple()))


def moments_first(g):
    return g.alpha.copy(), g.alpha_plus.copy()


def moments_second(g):
    aa = np.outer(g.alpha, g.alpha) + g.m
    normal = np.outer(g.alpha, g.alpha_plus) + g.n
    adag_adag = np.outer(g.alpha_plus, g.alpha_plus) + g.m_plus
    return aa, normal, adag_adag


def moments(g):
    return Moments(*moments_first(g), *moments_second(g))


@dataclass(frozen=True)
class WeightedEnsemble:
    """Finite delta-comb distribution: rho = sum_j Lambda(lambda_j)."""

    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("ensemble needs at least one member")
        M = members[0].modes
        if any(g.modes != M for g in members):
            raise ValueError("ensemble members disagree on mode count")
        object.__setattr__(self, "members", members)
        if self.total_weight == 0:
            raise ZeroTotalWeightError("ensemble weights sum to zero")

    @property
    def modes(self):
        return self.members[0].modes

    @property
    def total_weight(self):
        return complex(sum(g.omega for g in self.members))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def ensemble_moments(e):
    if not isinstance(e, WeightedEnsemble):
        e = WeightedEnsemble(tuple(e))
    total = e.total_weight
    if total == 0:
        raise ZeroTotalWeightError("ensemble weights sum to zero")
    acc = None
    for g in e.members:
        parts = [g.omega * x for x in moments(g).as_tuple()]
        acc = parts if acc is None else [x + y for x, y in zip(acc, parts)]
    return Moments(*(x / total for x in acc))


@dataclass(frozen=True)
class PhysicalityReport:
    checks: dict
    details: dict

    @property
    def hermitian(self):
        return all(self.checks[k] for k in ("alpha_plus_conjugate", "n_hermitian", "m_plus_conjugate"))

    @property
    def physical(self):
        return all(self.checks.values())

    def failures(self):
        return [k for k, ok in self.checks.items() if not ok]

    def lines(self):
        return [f"{'PASS' if ok else 'FAIL'} {k}: {self.details[k]}" for k, ok in self.checks.items()]


def check_physical(g, tol=PHYS_TOL):
    """Necessary conditions for Lambda to be a physical density matrix."""
    checks, details = {}, {}

    def record(name, ok, detail):
        checks[name] = bool(ok)
        details[name] = detail

    d = np.abs(g.alpha_plus - np.conj(g.alpha)).max()
    record("alpha_plus_conjugate", d <= tol, f"max |alpha+ - conj(alpha)| = {d:.3g}")
    d = np.abs(g.n - g.n.conj().T).max()
    record("n_hermitian", d <= tol, f"max |n - n^dagger| = {d:.3g}")
    d = np.abs(g.m_plus - g.m.conj().T).max()
    record("m_plus_conjugate", d <= tol, f"max |m+ - m^dagger| = {d:.3g}")

    herm = (g.n + g.n.conj().T) / 2
    lo = float(np.linalg.eigvalsh(herm).min())
    record("n_nonnegative", checks["n_hermitian"] and lo >= -tol, f"min eigenvalue of n = {lo:.6g}")

    nd = g.n.diagonal().real
    bound = np.sqrt(np.abs(g.m.diagonal()) ** 2 + 0.25) - 0.5
    slack = float((nd - bound).min())
    record("single_mode_bound", slack >= -tol, f"min n_k - (sqrt(|m_kk|^2 + 1/4) - 1/2) = {slack:.6g}")

    pair = nd[:, None] * (1 + nd[None, :]) - np.abs(g.m) ** 2
    slack = float(pair.min())
    record("pairwise_bound", slack >= -tol, f"min n_k (1 + n_j) - |m_kj|^2 = {slack:.6g}")
    return PhysicalityReport(checks, details)
