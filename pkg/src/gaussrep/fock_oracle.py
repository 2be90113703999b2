"""Truncated Fock-space brute force, used to check the phase-space results.

Everything here works with explicit (nmax+1)^M dimensional matrices, so it
is only practical for one or two modes.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.integrate import dblquad, solve_ivp
from scipy.linalg import expm

from . import linalg_kernels as lk
from .gaussian_state import GaussianParams, Moments, WeightedEnsemble, assemble_covariance, sqrt_det_sigma


class TruncationError(RuntimeError):
    def __init__(self, message, measured):
        super().__init__(message)
        self.measured = measured


class UnsupportedKernelError(ValueError):
    pass


class FockSpace:
    """Product basis |n_1 ... n_M>, n_k <= nmax; mode 0 is most significant."""

    def __init__(self, M, nmax):
        if M < 1 or nmax < 1:
            raise ValueError("need M >= 1 and nmax >= 1")
        self.M = M
        self.nmax = nmax
        self.d = nmax + 1
        self.dim = self.d ** M
        a1 = sp.diags(np.sqrt(np.arange(1, self.d)), 1, format="csr")
        eye = sp.identity(self.d, format="csr")
        ops = []
        for k in range(M):
            op = sp.identity(1, format="csr")
            for j in range(M):
                op = sp.kron(op, a1 if j == k else eye, format="csr")
            ops.append(op)
        self.a = tuple(ops)
        self.adag = tuple(o.conj().T.tocsr() for o in ops)

    @cached_property
    def occupations(self):
        idx = np.arange(self.dim)
        occ = np.zeros((self.dim, self.M), dtype=int)
        for k in range(self.M - 1, -1, -1):
            occ[:, k] = idx % self.d
            idx //= self.d
        return occ

    @cached_property
    def edge(self):
        """Basis states with some mode at the truncation level."""
        return np.any(self.occupations == self.nmax, axis=1)

    @property
    def interior(self):
        return ~self.edge

    @cached_property
    def edge_band(self):
        """Top two levels of any mode; parity-conserving flows skip one."""
        return np.any(self.occupations >= self.nmax - 1, axis=1)

    def index(self, occ):
        i = 0
        for n in occ:
            i = i * self.d + int(n)
        return i

    def identity(self):
        return np.eye(self.dim, dtype=complex)

    def number(self, k):
        return (self.adag[k] @ self.a[k]).tocsr()


@dataclass
class DensityMatrix:
    rho: np.ndarray
    space: FockSpace
    hermitian: bool = True

    @property
    def trace(self):
        return complex(np.trace(self.rho))

    def checks(self, tol=1e-10):
        if not self.hermitian:
            return {}
        r = self.rho
        ev = np.linalg.eigvalsh((r + r.conj().T) / 2)
        return {
            "hermitian": bool(np.abs(r - r.conj().T).max() <= tol),
            "unit_trace": bool(abs(self.trace - 1) <= tol),
            "positive": bool(ev.min() >= -tol),
        }

    def edge_population(self):
        return float(np.abs(np.diag(self.rho)[self.space.edge_band]).sum() / max(abs(self.trace), 1e-300))


def _quadratic_op(space, X, kind):
    """sum_ij X_ij c_i c_j with c = a^dag ('cc'), a ('aa') or a^dag a ('ca')."""
    D = space.dim
    out = sp.csr_matrix((D, D), dtype=complex)
    left = space.adag if kind in ("cc", "ca") else space.a
    right = space.adag if kind == "cc" else space.a
    for i in range(space.M):
        for j in range(space.M):
            if X[i, j] != 0:
                out = out + X[i, j] * (left[i] @ right[j])
    return out.tocsr()


def _linear_op(space, v, ops):
    D = space.dim
    out = sp.csr_matrix((D, D), dtype=complex)
    for i in range(space.M):
        if v[i] != 0:
            out = out + v[i] * ops[i]
    return out.tocsr()


def _crop(rho, big, small):
    keep = np.all(big.occupations <= small.nmax, axis=1)
    return rho[np.ix_(keep, keep)]


def build_state(kind, space, tail_tol=1e-10, pad=None, **params):
    """Physical density matrices by direct operator construction.

    kind: 'vacuum', 'coherent' (alpha), 'thermal' (nbar per mode),
    'squeezed' (xi, alpha), 'squeezed_thermal' (xi, nbar, alpha),
    'number' (n, occupation tuple). Unitaries are exponentiated on a padded
    space and cropped; the trace lost to cropping is the measured tail mass.
    """
    M = space.M
    if kind == "number":
        rho = np.zeros((space.dim, space.dim), complex)
        i = space.index(params["n"])
        rho[i, i] = 1.0
        return DensityMatrix(rho, space)
    if pad is None:
        pad = 30 if M == 1 else 10
    big = FockSpace(M, space.nmax + pad)
    alpha = np.atleast_1d(np.asarray(params.get("alpha", np.zeros(M)), dtype=complex))
    nbar = np.atleast_1d(np.asarray(params.get("nbar", np.zeros(M)), dtype=float))
    xi = params.get("xi")

    if kind == "vacuum":
        rho = np.zeros((big.dim, big.dim), complex)
        rho[0, 0] = 1.0
    elif kind == "coherent":
        psi = _coherent_vector(big, alpha)
        rho = np.outer(psi, psi.conj())
    elif kind in ("thermal", "squeezed", "squeezed_thermal"):
        rho = np.diag(_thermal_diagonal(big, nbar if kind != "squeezed" else np.zeros(M))).astype(complex)
        if kind != "thermal":
            xi = np.atleast_2d(np.asarray(xi, dtype=complex))
            gen = -0.5 * _quadratic_op(big, xi, "cc") + 0.5 * _quadratic_op(big, xi.conj(), "aa")
            S = expm(gen.toarray())
            rho = S @ rho @ S.conj().T
        if np.any(alpha != 0):
            gen = _linear_op(big, alpha, big.adag) - _linear_op(big, alpha.conj(), big.a)
            Dop = expm(gen.toarray())
            rho = Dop @ rho @ Dop.conj().T
    else:
        raise ValueError(f"unknown state kind {kind!r}")

    rho = _crop(rho, big, space)
    tail = 1.0 - float(np.trace(rho).real)
    if tail > tail_tol:
        raise TruncationError(f"truncation at nmax={space.nmax} loses probability {tail:.3g}", tail)
    return DensityMatrix(rho, space)


def _coherent_vector(space, alpha):
    psi = np.ones(1, complex)
    for a in alpha:
        k = np.arange(space.d)
        amp = np.empty(space.d, complex)
        amp[0] = np.exp(-abs(a) ** 2 / 2)
        for j in range(1, space.d):
            amp[j] = amp[j - 1] * a / np.sqrt(j)
        psi = np.kron(psi, amp)
    return psi


def _thermal_diagonal(space, nbar):
    diag = np.ones(1)
    for n in nbar:
        k = np.arange(space.d)
        diag = np.kron(diag, (n / (1 + n)) ** k / (1 + n))
    return diag


def _second_quantized(space, T):
    """Matrix of :exp(a^dag (T - I) a): for a single-particle matrix T.

    Column |n> equals prod_i (sum_k T_ki a_k^dag)^{n_i} / sqrt(n_i!) |0>.
    Only raising operators act, so the truncated result is exact.
    """
    D, M = space.dim, space.M
    Bs = [_linear_op(space, T[:, i], space.adag) for i in range(M)]
    out = np.zeros((D, D), complex)
    occ = space.occupations
    order = np.argsort(occ.sum(axis=1), kind="stable")
    out[0, 0] = 1.0
    for idx in order[1:]:
        o = occ[idx]
        i = int(np.nonzero(o)[0][0])
        prev = o.copy()
        prev[i] -= 1
        out[:, idx] = Bs[i] @ out[:, space.index(prev)] / np.sqrt(o[i])
    return out


def build_kernel(g, space):
    """Lambda(g) as an explicit matrix, from its normally ordered form.

    With K = sigma^-1 and G = (K11 + K22^T)/2,
        Lambda = Omega / sqrt|sigma| e^c exp(L(a^dag)) :exp(-a^dag G a): exp(R(a))
    where L holds the creation-only and R the annihilation-only terms. Each
    factor maps the truncated space into itself, so the matrix elements are
    exact (no truncation error inside the space).
    """
    if g.modes != space.M:
        raise ValueError("kernel and space disagree on mode count")
    M = g.modes
    try:
        K = lk.inverse(assemble_covariance(g))
        root = sqrt_det_sigma(g)
    except lk.SingularMatrixError as exc:
        raise UnsupportedKernelError(f"kernel normalization undefined: {exc}") from exc
    if root == 0:
        raise UnsupportedKernelError("det sigma vanishes")
    K11, K12, K21, K22 = lk.split_blocks(K)
    K12 = (K12 + K12.T) / 2
    K21 = (K21 + K21.T) / 2
    G = (K11 + K22.T) / 2
    al, ap = g.alpha, g.alpha_plus
    lin_c = G @ al + K12 @ ap
    lin_a = ap @ G + al @ K21
    c = -ap @ G @ al - 0.5 * ap @ K12 @ ap - 0.5 * al @ K21 @ al
    L = -0.5 * _quadratic_op(space, K12, "cc") + _linear_op(space, lin_c, space.adag)
    R = -0.5 * _quadratic_op(space, K21, "aa") + _linear_op(space, lin_a, space.a)
    mid = _second_quantized(space, np.eye(M) - G)
    lam = expm(L.toarray()) @ mid @ expm(R.toarray())
    lam *= g.omega / root * np.exp(c)
    herm = bool(np.allclose(lam, lam.conj().T, atol=1e-12))
    return DensityMatrix(lam, space, hermitian=herm)


def build_ensemble(e, space):
    rho = sum(build_kernel(g, space).rho for g in e.members)
    return DensityMatrix(rho, space, hermitian=bool(np.allclose(rho, rho.conj().T, atol=1e-10)))


def _expect(X, rho):
    return complex((X.multiply(rho.T)).sum()) if sp.issparse(X) else complex(np.sum(X * rho.T))


def moments_fock(rho, space=None):
    """Normalized normally ordered moments Tr[rho X] / Tr[rho]."""
    if isinstance(rho, DensityMatrix):
        space = rho.space
        rho = rho.rho
    tr = complex(np.trace(rho))
    if abs(tr) < 1e-300:
        raise ZeroDivisionError("density matrix has zero trace")
    M = space.M
    a = np.array([_expect(space.a[i], rho) for i in range(M)]) / tr
    ad = np.array([_expect(space.adag[i], rho) for i in range(M)]) / tr
    aa = np.empty((M, M), complex)
    nn = np.empty((M, M), complex)
    dd = np.empty((M, M), complex)
    for i in range(M):
        for j in range(M):
            aa[i, j] = _expect(space.a[i] @ space.a[j], rho) / tr
            nn[i, j] = _expect(space.adag[j] @ space.a[i], rho) / tr
            dd[i, j] = _expect(space.adag[i] @ space.adag[j], rho) / tr
    return Moments(a, ad, aa, nn, dd)


def lindblad_operators(spec, space):
    """(H, [O_K]) as sparse matrices in the truncated space."""
    H = (2 * _quadratic_op(space, spec.H1, "ca") + _quadratic_op(space, spec.H2, "cc")
         + _quadratic_op(space, spec.H2.conj(), "aa"))
    ops = [(_linear_op(space, o1.conj(), space.a) + _linear_op(space, o2.conj(), space.adag)).tocsr()
           for o1, o2 in spec.loss_ops]
    return H.tocsr(), ops


def apply_lindblad(spec, rho, space):
    H, ops = lindblad_operators(spec, space)
    out = -1j * (H @ rho - (H.T @ rho.T).T)
    for O in ops:
        Od = O.conj().T
        OdO = Od @ O
        out = out + 2 * (O @ ((Od.T @ rho.T).T)) - OdO @ rho - (OdO.T @ rho.T).T
    return out


def apply_qme(q, rho, space):
    """Act with a QuadraticME on rho using its literal ordering rules."""
    M = space.M
    ext = list(space.a) + list(space.adag)
    ext_dag = list(space.adag) + list(space.a)

    def ann(mu):
        return mu < M

    def place(op, is_ann, r, normal):
        # normal order: creation left, annihilation right; antinormal reversed
        left = (not is_ann) if normal else is_ann
        return op @ r if left else (op.T @ r.T).T

    out = q.A0 * rho
    for mu in range(2 * M):
        if q.A1[mu] != 0:
            out = out + q.A1[mu] * place(ext[mu], ann(mu), rho, True)
        if q.B1[mu] != 0:
            out = out + q.B1[mu] * place(ext[mu], ann(mu), rho, False)
        for nu in range(2 * M):
            nu_ann = not ann(nu)  # a^dag_nu is an annihilator when nu >= M
            for coef, normal in ((q.A[nu, mu], True), (q.B[nu, mu], False)):
                if coef != 0:
                    r = place(ext_dag[nu], nu_ann, rho, normal)
                    out = out + coef * place(ext[mu], ann(mu), r, normal)
            if q.C[nu, mu] != 0:
                r = place(ext_dag[nu], nu_ann, rho, True)
                out = out + q.C[nu, mu] * place(ext[mu], ann(mu), r, False)
    return out


def evolve_lindblad(spec, rho0, times, space=None, rtol=1e-9, atol=1e-12, edge_tol=1e-8, method="RK45"):
    """Integrate the Lindblad equation; returns one DensityMatrix per time.

    Raises TruncationError when the population on the truncation edge
    exceeds `edge_tol` at any sample (pass None to skip the monitor).
    """
    if isinstance(rho0, DensityMatrix):
        space, herm, rho0 = rho0.space, rho0.hermitian, rho0.rho
    else:
        herm = True
    times = np.asarray(times, dtype=float)
    H, ops = lindblad_operators(spec, space)
    K = sum((O.conj().T @ O for O in ops), sp.csr_matrix(H.shape, dtype=complex))
    Heff = (H - 1j * K).tocsr()
    HeffHT = Heff.conj().tocsr()
    pairs = [(O, (O.conj().T).T.tocsr()) for O in ops]
    D = space.dim

    def rhs(_, y):
        r = y.reshape(D, D)
        # -i Heff r + i r Heff^dag + 2 sum O r O^dag
        out = -1j * (Heff @ r) + 1j * (HeffHT @ r.T).T
        for O, OdT in pairs:
            out = out + 2 * (O @ (OdT @ r.T).T)
        return out.reshape(-1)

    y0 = np.asarray(rho0, dtype=complex).reshape(-1)
    if times[-1] == 0:
        states = [y0 for _ in times]
    else:
        sol = solve_ivp(rhs, (0.0, float(times[-1])), y0, method=method, t_eval=times, rtol=rtol, atol=atol)
        if sol.status != 0:
            raise RuntimeError(f"Lindblad integration failed: {sol.message}")
        states = [sol.y[:, k] for k in range(times.size)]
    out = []
    for t, y in zip(times, states):
        dm = DensityMatrix(y.reshape(D, D), space, hermitian=herm)
        if edge_tol is not None:
            edge = dm.edge_population()
            if edge > edge_tol:
                raise TruncationError(f"edge population {edge:.3g} at t={t:g} exceeds {edge_tol:g}; raise nmax", edge)
        out.append(dm)
    return out


def _residual(R, ref, mask):
    r = R[np.ix_(mask, mask)]
    s = ref[np.ix_(mask, mask)]
    return float(np.linalg.norm(r) / max(1.0, np.linalg.norm(s)))


@dataclass(frozen=True)
class IdentityReport:
    residuals: dict
    h: float

    @property
    def max_residual(self):
        return max(self.residuals.values())

    def passed(self, tol=1e-6):
        return self.max_residual <= tol


def _with(g, **kw):
    return g.replace(**kw)


def verify_coherent_identities(alpha, beta, space, h=1e-5):
    """Residuals of the four coherent-kernel identities.

    a Lambda = alpha Lambda and Lambda a^dag = beta Lambda are exact;
    a^dag Lambda = (beta + d/dalpha) Lambda and Lambda a = (alpha + d/dbeta)
    Lambda use central differences with step h. Residuals are Frobenius
    norms on the interior block, relative to max(1, |Lambda|).
    """
    from .state_factory import coherent_projector

    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    beta = np.atleast_1d(np.asarray(beta, dtype=complex))
    g = coherent_projector(alpha, beta)
    lam = build_kernel(g, space).rho
    mask = space.interior
    res = {}
    for i in range(space.M):
        a, ad = space.a[i], space.adag[i]
        res[f"a{i} Lambda"] = _residual(a @ lam - alpha[i] * lam, lam, mask)
        res[f"Lambda a{i}^dag"] = _residual((ad.T @ lam.T).T - beta[i] * lam, lam, mask)
        e = np.zeros_like(alpha)
        e[i] = h
        d_alpha = (build_kernel(_with(g, alpha=alpha + e), space).rho
                   - build_kernel(_with(g, alpha=alpha - e), space).rho) / (2 * h)
        d_beta = (build_kernel(_with(g, alpha_plus=beta + e), space).rho
                  - build_kernel(_with(g, alpha_plus=beta - e), space).rho) / (2 * h)
        res[f"a{i}^dag Lambda"] = _residual(ad @ lam - beta[i] * lam - d_alpha, lam, mask)
        res[f"Lambda a{i}"] = _residual((a.T @ lam.T).T - alpha[i] * lam - d_beta, lam, mask)
    return IdentityReport(res, h)


def verify_thermal_identities(nbar, space, h=1e-5):
    """Single-mode thermal-kernel identities with a finite-difference d/dn.

        a^dag L a = (1+n) L + (1+n)^2 dL/dn
        a a^dag L = (1+n) L + n (1+n) dL/dn
        L a a^dag = (1+n) L + (1+n) n dL/dn
        a L a^dag = n L + n^2 dL/dn
    """
    from .state_factory import thermal

    if space.M != 1:
        raise ValueError("thermal identities are checked for a single mode")
    n = complex(nbar)
    lam_of = lambda x: build_kernel(thermal(np.array([[x]])), space).rho
    lam = lam_of(n)
    dl = (lam_of(n + h) - lam_of(n - h)) / (2 * h)
    a, ad = space.a[0], space.adag[0]
    right = lambda r, op: (op.T @ r.T).T
    mask = space.interior
    res = {
        ":a a^dag Lambda:": _residual(ad @ right(lam, a) - (1 + n) * lam - (1 + n) ** 2 * dl, lam, mask),
        "{a :a^dag Lambda:}": _residual(a @ (ad @ lam) - (1 + n) * lam - n * (1 + n) * dl, lam, mask),
        "{:a Lambda: a^dag}": _residual(right(right(lam, a), ad) - (1 + n) * lam - (1 + n) * n * dl, lam, mask),
        "{a a^dag Lambda}": _residual(a @ right(lam, ad) - n * lam - n * n * dl, lam, mask),
    }
    return IdentityReport(res, h)


class IntegralValidityError(ValueError):
    pass


def verify_gaussian_integral(sigma, alpha=0.0, alpha_plus=0.0, epsabs=1e-13, epsrel=1e-11):
    """Integrate exp(-dz+ sigma^-1 dz / 2) over the complex plane (M = 1).

    dz = (z - alpha, z* - alpha+) with independent offsets. Returns
    (numeric, analytic) where analytic = pi sqrt(det sigma).
    """
    sigma = lk.as_cmatrix(sigma, "sigma")
    if sigma.shape != (2, 2):
        raise ValueError("the integral check is single-mode: sigma must be 2x2")
    if np.any(np.linalg.eigvals(sigma).real <= 0):
        raise IntegralValidityError("sigma has an eigenvalue with non-positive real part")
    K = lk.inverse(sigma)
    P = np.array([[0, 1], [1, 0]])
    T = np.array([[1, 1j], [1, -1j]])
    PK = P @ K
    PK = (PK + PK.T) / 2
    a = np.array([alpha, alpha_plus], dtype=complex)
    Q = T.T @ PK @ T
    R = ((Q + Q.T) / 2).real
    lam = np.linalg.eigvalsh(R)
    if lam.min() <= 0:
        raise IntegralValidityError("integrand does not decay on the real plane")
    center = np.linalg.solve(R, (T.T @ PK @ a).real)
    half = np.sqrt(2 * 40.0 / lam.min())

    def f(y, x):
        d = T @ np.array([x, y]) - a
        return np.exp(-0.5 * (d @ PK @ d))

    xlo, xhi = center[0] - half, center[0] + half
    ylo, yhi = center[1] - half, center[1] + half
    re, _ = dblquad(lambda y, x: f(y, x).real, xlo, xhi, ylo, yhi, epsabs=epsabs, epsrel=epsrel)
    im, _ = dblquad(lambda y, x: f(y, x).imag, xlo, xhi, ylo, yhi, epsabs=epsabs, epsrel=epsrel)
    analytic = np.pi * np.sqrt(complex(np.linalg.det(sigma)))
    return complex(re, im), complex(analytic)


def imaginary_time_oracle(omega_k, taus, nmax):
    """Tr exp(-tau H) and per-mode <n_k> from truncated diagonal sums."""
    w = np.atleast_1d(np.asarray(omega_k, dtype=float))
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    space = FockSpace(1, nmax)
    N = space.number(0).diagonal().real
    Z = np.ones(taus.size)
    nbar = np.zeros((taus.size, w.size))
    for k, wk in enumerate(w):
        boltz = np.exp(-np.outer(taus, wk * N))
        zk = boltz.sum(axis=1)
        Z *= zk
        nbar[:, k] = (boltz * N).sum(axis=1) / zk
    return Z, nbar
