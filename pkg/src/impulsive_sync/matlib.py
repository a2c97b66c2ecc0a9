"""Dense linear algebra kernels.

Matrices are plain 2-D numpy arrays. Real inputs stay real where the
operation allows it; anything spectral comes back complex.

Functions
---------
matmul, kron          : products with dimension checks
expm                  : scaling and squaring with a degree-13 Pade approximant
solve                 : LU solve that refuses near-singular pivots
eigenvalues           : Hessenberg reduction + shifted complex QR iteration
order_spectrum        : ascending real part, ties by imaginary part
spectral_radius       : max |eigenvalue|
two_norm              : largest singular value
left_null_vector      : row l with l^T m = 0, normalized so sum(l) = 1
"""
from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DimensionError, SingularMatrixError

# relative pivot / null-space threshold
SINGULAR_RTOL = 1e-12

_EPS = np.finfo(float).eps

# Pade(13) numerator coefficients, Higham (2005)
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def as_mat(m) -> np.ndarray:
    a = np.asarray(m)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.issubdtype(a.dtype, np.number):
        raise DimensionError(f"non-numeric matrix of dtype {a.dtype}")
    if not (np.issubdtype(a.dtype, np.complexfloating) or np.issubdtype(a.dtype, np.floating)):
        a = a.astype(float)
    return a


def _square(m) -> np.ndarray:
    a = as_mat(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"square matrix required, got {a.shape}")
    return a


def matmul(a, b) -> np.ndarray:
    a, b = as_mat(a), as_mat(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(a, b) -> np.ndarray:
    """Kronecker product; block (i, j) of the result is a[i, j] * b."""
    a, b = as_mat(a), as_mat(b)
    return np.kron(a, b)


def expm(m) -> np.ndarray:
    """Matrix exponential by scaling and squaring.

    A fixed degree-13 Pade approximant is used; the number of squarings is
    the smallest s with ``||m||_1 / 2**s <= theta_13``.
    """
    a = _square(m)
    n = a.shape[0]
    norm1 = np.linalg.norm(a, 1)
    if not np.isfinite(norm1):
        raise ValueError("expm of a matrix with non-finite entries")
    if norm1 == 0.0:
        return np.eye(n, dtype=a.dtype)
    s = 0
    if norm1 > _THETA13:
        s = int(np.ceil(np.log2(norm1 / _THETA13)))
    a = a / 2.0**s

    b = _PADE13
    ident = np.eye(n, dtype=a.dtype)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def solve(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` by pivoted LU.

    Raises SingularMatrixError when the smallest pivot magnitude falls
    below ``SINGULAR_RTOL`` times the largest.
    """
    a = _square(a)
    b = as_mat(b) if np.ndim(b) != 1 else np.asarray(b).reshape(-1, 1)
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"right-hand side has {b.shape[0]} rows, expected {a.shape[0]}")
    with warnings.catch_warnings():
        # exact zero pivots are reported below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.max() == 0.0 or pivots.min() < SINGULAR_RTOL * pivots.max():
        raise SingularMatrixError(
            f"matrix is singular to tolerance (pivot ratio {pivots.min() / max(pivots.max(), 1e-300):.3e})")
    return scipy.linalg.lu_solve((lu, piv), b)


def hessenberg(m) -> np.ndarray:
    """Upper Hessenberg form of m by Householder reflections (complex)."""
    h = np.array(_square(m), dtype=complex)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h


def _givens(a: complex, b: complex):
    """Return (c, s) with [[c, s], [-conj(s), c]] @ [a, b] = [r, 0], c real."""
    if b == 0:
        return 1.0, 0j
    if a == 0:
        return 0.0, np.conj(b) / abs(b)
    r = np.hypot(abs(a), abs(b))
    c = abs(a) / r
    s = (a / abs(a)) * np.conj(b) / r
    return c, s


def _qr_step(w: np.ndarray, shift: complex) -> None:
    """One explicit shifted QR step, in place, on a Hessenberg block."""
    m = w.shape[0]
    idx = np.arange(m)
    w[idx, idx] -= shift
    rots = []
    for k in range(m - 1):
        c, s = _givens(w[k, k], w[k + 1, k])
        rows = w[k:k + 2, k:].copy()
        w[k, k:] = c * rows[0] + s * rows[1]
        w[k + 1, k:] = -np.conj(s) * rows[0] + c * rows[1]
        w[k + 1, k] = 0.0
        rots.append((c, s))
    for k, (c, s) in enumerate(rots):
        cols = w[:k + 2, k:k + 2].copy()
        w[:k + 2, k] = c * cols[:, 0] + np.conj(s) * cols[:, 1]
        w[:k + 2, k + 1] = -s * cols[:, 0] + c * cols[:, 1]
    w[idx, idx] += shift


def _wilkinson_shift(a: complex, b: complex, c: complex, d: complex) -> complex:
    # eigenvalue of [[a, b], [c, d]] closest to d
    tr = a + d
    det = a * d - b * c
    disc = np.sqrt(tr * tr / 4.0 - det + 0j)
    l1, l2 = tr / 2.0 + disc, tr / 2.0 - disc
    return l1 if abs(l1 - d) < abs(l2 - d) else l2


def eigenvalues(m, max_sweeps_per_eig: int = 60) -> np.ndarray:
    """All eigenvalues of a square matrix, ordered by :func:`order_spectrum`.

    Hessenberg reduction followed by Wilkinson-shifted complex QR iteration
    with deflation. Raises ConvergenceError once the iteration budget
    (``max_sweeps_per_eig * n``) is spent.
    """
    h = hessenberg(m)
    n = h.shape[0]
    scale = max(np.linalg.norm(h, 1), np.finfo(float).tiny)
    out = []
    hi = n - 1
    its = 0
    total = 0
    budget = max_sweeps_per_eig * n
    while hi >= 0:
        lo = 0
        for l in range(hi, 0, -1):
            sub = abs(h[l, l - 1])
            near = abs(h[l, l]) + abs(h[l - 1, l - 1])
            if sub <= _EPS * near or sub <= _EPS * 1e-3 * scale:
                h[l, l - 1] = 0.0
                lo = l
                break
        if lo == hi:
            out.append(h[hi, hi])
            hi -= 1
            its = 0
            continue
        if total >= budget:
            raise ConvergenceError(f"QR iteration did not converge after {total} sweeps")
        if its > 0 and its % 10 == 0:
            shift = h[hi, hi] + 0.75 * abs(h[hi, hi - 1]) * np.exp(1j * its)
        else:
            shift = _wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        w = h[lo:hi + 1, lo:hi + 1]
        _qr_step(w, shift)
        h[lo:hi + 1, lo:hi + 1] = w
        its += 1
        total += 1
    return order_spectrum(np.array(out, dtype=complex))


def order_spectrum(values, rtol: float = 1e-9) -> np.ndarray:
    """Sort by ascending real part; real parts within ``rtol * scale`` tie
    and are ordered by ascending imaginary part."""
    vals = np.asarray(values, dtype=complex).ravel()
    if vals.size == 0:
        return vals
    tol = rtol * max(1.0, np.abs(vals).max())
    vals = vals[np.argsort(vals.real, kind="stable")]
    out = []
    i = 0
    while i < vals.size:
        j = i + 1
        while j < vals.size and vals[j].real - vals[j - 1].real <= tol:
            j += 1
        cluster = vals[i:j]
        out.extend(cluster[np.argsort(cluster.imag, kind="stable")])
        i = j
    return np.array(out, dtype=complex)


def spectral_radius(m) -> float:
    return float(np.abs(eigenvalues(m)).max())


def two_norm(m) -> float:
    """Induced 2-norm (largest singular value)."""
    return float(np.linalg.svd(as_mat(m), compute_uv=False)[0])


def left_null_vector(m, rtol: float = 1e-9) -> np.ndarray:
    """Row vector l (shape 1 x q) with ``l @ m ~ 0`` and ``l.sum() == 1``.

    The null space of m^T must be one-dimensional: the second smallest
    singular value has to exceed ``rtol * ||m||``.
    """
    a = _square(m)
    q = a.shape[0]
    u, sv, _ = np.linalg.svd(a)
    norm = sv[0]
    if norm == 0.0:
        if q == 1:
            return np.ones((1, 1), dtype=a.dtype)
        raise SingularMatrixError("zero matrix has a multi-dimensional left null space")
    if q > 1 and sv[-2] <= rtol * norm:
        raise SingularMatrixError("eigenvalue at zero is not simple to tolerance")
    if sv[-1] > 1e-6 * norm:
        raise SingularMatrixError(f"matrix has no left null vector (smallest singular value {sv[-1]:.3e})")
    ell = np.conj(u[:, -1])
    total = ell.sum()
    if abs(total) <= rtol * np.linalg.norm(ell):
        raise SingularMatrixError("left null vector is orthogonal to the ones vector; cannot normalize")
    ell = ell / total
    if not np.iscomplexobj(a):
        ell = ell.real
    return ell.reshape(1, q)
