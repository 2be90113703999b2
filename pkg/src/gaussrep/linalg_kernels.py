"""Dense complex-matrix primitives used throughout the package.

Matrices are plain 2-D numpy arrays of complex dtype. Block matrices are
2M x 2M arrays split into four M x M quadrants:

    X = [[a, b],
         [c, d]]
"""

import numpy as np
from scipy.linalg import expm

ATOL = 1e-13
RTOL = 1e-10


class LinalgError(ValueError):
    pass


class SingularMatrixError(LinalgError):
    def __init__(self, message, condition=np.inf):
        super().__init__(message)
        self.condition = condition


class SingularPencilError(LinalgError):
    """E S + S F = R has no solution (or the spectral condition fails)."""


def as_cmatrix(x, name="matrix"):
    """Return `x` as a finite 2-D complex array."""
    a = np.array(x, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise LinalgError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise LinalgError(f"{name} has non-finite entries")
    return a


def _square(x, name="matrix"):
    a = as_cmatrix(x, name)
    if a.shape[0] != a.shape[1]:
        raise LinalgError(f"{name} must be square, got shape {a.shape}")
    return a


def split_blocks(x):
    """Split a 2M x 2M matrix into its (a, b, c, d) quadrants."""
    x = _square(x)
    if x.shape[0] % 2:
        raise LinalgError(f"block matrix needs even dimension, got {x.shape[0]}")
    M = x.shape[0] // 2
    return x[:M, :M], x[:M, M:], x[M:, :M], x[M:, M:]


def join_blocks(a, b, c, d):
    blocks = [np.atleast_2d(np.asarray(v, dtype=complex)) for v in (a, b, c, d)]
    shape = blocks[0].shape
    if shape[0] != shape[1] or any(v.shape != shape for v in blocks):
        raise LinalgError("blocks must be square and share one dimension")
    return np.block([[blocks[0], blocks[1]], [blocks[2], blocks[3]]])


def generalized_dagger(x):
    """Block conjugation [[a, b], [c, d]] -> [[d^T, b^T], [c^T, a^T]].

    Accepts either a 2M x 2M array or a tuple of four blocks, and returns
    the same kind. No complex conjugation is involved: this is the
    analytic counterpart of Hermitian conjugation on the extended
    operator vector (a, a^dagger).
    """
    if isinstance(x, (tuple, list)) and len(x) == 4:
        a, b, c, d = (np.atleast_2d(np.asarray(v, dtype=complex)) for v in x)
        join_blocks(a, b, c, d)  # shape check
        return d.T, b.T, c.T, a.T
    a, b, c, d = split_blocks(x)
    return np.block([[d.T, b.T], [c.T, a.T]])


def swap_halves(v):
    """(x, y) -> (y, x) for an extended 2M vector."""
    v = np.asarray(v, dtype=complex)
    M = v.shape[0] // 2
    return np.concatenate([v[M:], v[:M]])


def matrix_exp(x):
    # scipy's expm is scaling-and-squaring with a Pade approximant
    return expm(_square(x, "exponent"))


def _series(x_prod, start, tol=1e-16, max_terms=500):
    # sum_k x_prod^k / (2k + start)!  with start in {0, 1}
    dim = x_prod.shape[0]
    term = np.eye(dim, dtype=complex)
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term @ x_prod / ((2 * k + start) * (2 * k + start - 1))
        total = total + term
        if np.linalg.norm(term) <= tol * max(1.0, np.linalg.norm(total)):
            return total
        if k >= max_terms:
            raise LinalgError("hyperbolic series failed to converge")


def matrix_cosh_sinh(xi, xi_plus=None, tol=1e-16):
    """Multi-mode hyperbolic functions of a symmetric squeeze matrix.

    mu = sum (xi xi+)^k / (2k)!,  nu = sum (xi xi+)^k xi / (2k+1)!

    `xi_plus` defaults to conj(xi), the Hermitian case. Returns (mu, nu);
    use `squeeze_matrices` for the conjugate partner nu+ as well.
    """
    mu, nu, _ = squeeze_matrices(xi, xi_plus, tol=tol)
    return mu, nu


def squeeze_matrices(xi, xi_plus=None, tol=1e-16):
    """Return (mu, nu, nu_plus) for independent symmetric xi, xi_plus."""
    xi = _square(xi, "xi")
    xi_plus = np.conj(xi) if xi_plus is None else _square(xi_plus, "xi_plus")
    if xi_plus.shape != xi.shape:
        raise LinalgError("xi and xi_plus differ in shape")
    for name, x in (("xi", xi), ("xi_plus", xi_plus)):
        if np.abs(x - x.T).max() > ATOL + RTOL * np.abs(x).max():
            raise LinalgError(f"{name} must be symmetric")
    prod = xi @ xi_plus
    mu = _series(prod, 0, tol)
    s = _series(prod, 1, tol)
    nu = s @ xi
    nu_plus = xi_plus @ s
    return mu, nu, nu_plus


def det(x):
    return complex(np.linalg.det(_square(x)))


def condition_number(x):
    x = _square(x)
    s = np.linalg.svd(x, compute_uv=False)
    if s[-1] <= ATOL * max(1.0, s[0]):
        return np.inf
    return float(s[0] / s[-1])


def inverse(x):
    x = _square(x)
    cond = condition_number(x)
    if not np.isfinite(cond):
        raise SingularMatrixError(f"matrix is singular (condition {cond:.3g})", cond)
    inv = np.linalg.inv(x)
    resid = np.abs(x @ inv - np.eye(x.shape[0])).max()
    if resid > 1e-10:
        raise SingularMatrixError(f"inverse residual {resid:.3g} too large (condition {cond:.3g})", cond)
    return inv


def pencil_is_singular(E, F, tol=1e-10):
    """True when some eigenvalue of E plus some eigenvalue of F is ~0."""
    le = np.linalg.eigvals(_square(E))
    lf = np.linalg.eigvals(_square(F))
    scale = max(1.0, np.abs(le).max(initial=0.0), np.abs(lf).max(initial=0.0))
    return bool(np.abs(le[:, None] + lf[None, :]).min() <= tol * scale)


def sylvester_solve(E, F, rhs, tol=1e-10, allow_singular=True):
    """Solve E S + S F = rhs.

    With a nonsingular pencil the solution is unique and found through
    eigen-decompositions of E and F. When the pencil is singular but the
    system is consistent (undamped dynamics, e.g. pure down-conversion) the
    minimum-norm solution is returned, unless `allow_singular` is False.
    Inconsistent systems raise SingularPencilError.
    """
    E, F, rhs = _square(E, "E"), _square(F, "F"), _square(rhs, "rhs")
    if not (E.shape == F.shape == rhs.shape):
        raise LinalgError("E, F and rhs must share one square shape")
    scale = max(1.0, np.abs(E).max(), np.abs(F).max(), np.abs(rhs).max())

    S = None
    singular = pencil_is_singular(E, F, tol)
    if singular and not allow_singular:
        raise SingularPencilError("an eigenvalue of E cancels an eigenvalue of F")
    if not singular:
        le, V = np.linalg.eig(E)
        lf, W = np.linalg.eig(F)
        if np.linalg.cond(V) < 1e8 and np.linalg.cond(W) < 1e8:
            R = np.linalg.solve(V, rhs @ W)
            S = V @ (R / (le[:, None] + lf[None, :])) @ np.linalg.inv(W)
    if S is None or _residual(E, F, S, rhs) > tol * scale * max(1.0, np.abs(S).max()):
        S = _sylvester_kron(E, F, rhs)
    if _residual(E, F, S, rhs) > 1e3 * tol * scale * max(1.0, np.abs(S).max()):
        raise SingularPencilError("E S + S F = rhs has no solution: singular pencil with inconsistent right-hand side")
    return S


def _residual(E, F, S, rhs):
    return np.abs(E @ S + S @ F - rhs).max()


def _sylvester_kron(E, F, rhs):
    # column-major vec: vec(E S + S F) = (I kron E + F^T kron I) vec(S)
    n = E.shape[0]
    I = np.eye(n)
    op = np.kron(I, E) + np.kron(F.T, I)
    vec, *_ = np.linalg.lstsq(op, rhs.reshape(-1, order="F"), rcond=None)
    return vec.reshape(n, n, order="F")
