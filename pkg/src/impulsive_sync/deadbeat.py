"""Normalized deadbeat gain for a single agent and the Schur factors of its
nilpotent closed-loop matrix.

For an agent ``dx/dt = A x + B u`` hit by impulses every ``T`` seconds the
gain is ``K = G e^{-AT}`` where ``G`` is the deadbeat gain of the pair
``(e^{AT}, B)``. With that choice ``M = (I - BK) e^{AT}`` is nilpotent and
``KB = 1``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import matlib as ml
from .errors import ControllabilityError, NotNilpotentError, NumericalError, SingularMatrixError

log = logging.getLogger(__name__)

CTRB_RTOL = 1e-10


@dataclass(frozen=True)
class AgentSystem:
    """One agent ``dx/dt = A x + B u`` with impulses every ``T`` seconds."""

    A: np.ndarray
    B: np.ndarray
    T: float
    n: int = field(init=False)

    def __post_init__(self):
        A = np.array(ml.as_mat(self.A), dtype=float)
        B = np.array(self.B, dtype=float).reshape(-1, 1)
        if A.shape[0] != A.shape[1]:
            raise ml.DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ml.DimensionError(f"B has {B.shape[0]} rows but A is {A.shape[0]}x{A.shape[0]}")
        if not np.isfinite(self.T) or self.T <= 0:
            raise ValueError(f"impulse period must be positive, got {self.T}")
        A.flags.writeable = False
        B.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "n", A.shape[0])

    def is_controllable(self) -> bool:
        """Kalman rank test for the continuous pair (A, B)."""
        cols = [self.B]
        for _ in range(self.n - 1):
            cols.append(self.A @ cols[-1])
        sv = np.linalg.svd(np.hstack(cols), compute_uv=False)
        return bool(sv[-1] > CTRB_RTOL * sv[0])

    @property
    def eAT(self) -> np.ndarray:
        return ml.expm(self.A * self.T)


@dataclass(frozen=True)
class DeadbeatDesign:
    C: np.ndarray
    G: np.ndarray
    K: np.ndarray
    M: np.ndarray
    Q: np.ndarray
    N: np.ndarray
    kb: float
    B: np.ndarray
    eAT: np.ndarray

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def BK(self) -> np.ndarray:
        return self.B @ self.K

    @property
    def BKeAT(self) -> np.ndarray:
        """``B K e^{AT}``, which equals ``e^{AT} - M``."""
        return self.eAT - self.M

    @property
    def norm_N(self) -> float:
        return ml.two_norm(self.N)

    def power_norms(self) -> list[float]:
        """``||M^k||`` for k = 1..n."""
        out, p = [], np.eye(self.n)
        for _ in range(self.n):
            p = p @ self.M
            out.append(ml.two_norm(p))
        return out


def controllability_matrix(sys: AgentSystem) -> np.ndarray:
    """``[B, e^{AT} B, ..., e^{A(n-1)T} B]``."""
    eAT = sys.eAT
    cols = [sys.B]
    for _ in range(sys.n - 1):
        cols.append(eAT @ cols[-1])
    return np.hstack(cols)


def design_deadbeat(sys: AgentSystem) -> DeadbeatDesign:
    """Closed-form normalized deadbeat gain and its closed-loop Schur factors.

    Raises ControllabilityError when ``(e^{AT}, B)`` is uncontrollable to
    tolerance, NumericalError when any post-condition fails.
    """
    n = sys.n
    eAT = sys.eAT
    C = controllability_matrix(sys)
    sv = np.linalg.svd(C, compute_uv=False)
    if sv[-1] <= CTRB_RTOL * sv[0]:
        raise ControllabilityError(
            f"period T loses controllability: sigma_min(C)/sigma_max(C) = {sv[-1] / sv[0]:.3e}")
    e_n = np.zeros((1, n))
    e_n[0, -1] = 1.0
    try:
        last_row = ml.solve(C.T, e_n.T).T  # e_n^T C^{-1}
    except SingularMatrixError as exc:
        raise ControllabilityError(f"period T loses controllability: {exc}") from exc

    G = last_row @ np.linalg.matrix_power(eAT, n)
    K = G @ ml.expm(-sys.A * sys.T)
    K_alt = last_row @ np.linalg.matrix_power(eAT, n - 1)
    if np.abs(K - K_alt).max() > 1e-9 * max(1.0, np.abs(K).max()):
        raise NumericalError(f"gain formulas disagree: {K} vs {K_alt}")

    kb = float((K @ sys.B)[0, 0])
    if abs(kb - 1.0) > 1e-9:
        raise NumericalError(f"KB = {kb!r}, expected 1")

    BK = sys.B @ K
    M = (np.eye(n) - BK) @ eAT
    scale = max(ml.two_norm(M), ml.two_norm(eAT))
    Mn = np.linalg.matrix_power(M, n)
    if ml.two_norm(Mn) > 1e-8 * scale ** n:
        raise NumericalError(f"closed loop is not nilpotent: ||M^n|| = {ml.two_norm(Mn):.3e}")
    if n > 1 and log.isEnabledFor(logging.DEBUG):
        log.debug("nilpotency index check: ||M^(n-1)|| = %.3e",
                  ml.two_norm(np.linalg.matrix_power(M, n - 1)))

    try:
        Q, N = schur_nilpotent(M, scale=ml.two_norm(eAT))
    except NotNilpotentError as exc:
        raise NumericalError(str(exc)) from exc
    return DeadbeatDesign(C=C, G=G, K=K, M=M, Q=Q, N=N, kb=kb, B=sys.B, eAT=eAT)


def _null_basis(a: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical null space of a."""
    _, sv, vh = np.linalg.svd(a)
    k = a.shape[1]
    s_full = np.zeros(k)
    s_full[:sv.size] = sv
    mask = s_full <= tol
    return vh.conj().T[:, mask]


def schur_nilpotent(m, rtol: float = 1e-8, scale: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Unitary Q and strictly upper triangular N with ``Q^H m Q = N``.

    Columns of Q are built layer by layer along the kernel flag
    ``ker m ⊂ ker m^2 ⊂ ...``: each new layer is the orthonormal set of
    directions, orthogonal to all earlier columns, that m maps into the
    span of earlier columns.

    Tolerances are relative to ``max(||m||, scale)``; pass ``scale`` when m
    is a rounding-level remainder of larger matrices.
    """
    m = np.asarray(ml._square(m), dtype=complex)
    n = m.shape[0]
    norm = max(ml.two_norm(m), scale or 0.0)
    if norm == 0.0:
        return np.eye(n, dtype=complex), np.zeros((n, n), dtype=complex)
    tol = rtol * norm

    Q = np.zeros((n, 0), dtype=complex)
    while Q.shape[1] < n:
        # orthonormal complement of the current span
        if Q.shape[1] == 0:
            W = np.eye(n, dtype=complex)
        else:
            u, _, _ = np.linalg.svd(Q)
            W = u[:, Q.shape[1]:]
        P = np.eye(n) - Q @ Q.conj().T
        restricted = P @ m @ W
        Z = _null_basis(restricted, tol)
        if Z.shape[1] == 0:
            # accept the weakest direction if it is still small
            _, sv, vh = np.linalg.svd(restricted)
            if sv[-1] > 1e2 * tol:
                raise NotNilpotentError(
                    f"matrix is not nilpotent to tolerance (residual {sv[-1] / norm:.3e})")
            Z = vh.conj().T[:, -1:]
        Q = np.hstack([Q, W @ Z])
    # re-orthonormalize against accumulated round-off
    Q, _ = np.linalg.qr(Q)
    full = Q.conj().T @ m @ Q
    N = np.triu(full, 1)
    resid = np.linalg.norm(full - N, 2)
    if resid > 1e-9 * norm:
        raise NotNilpotentError(f"Schur residual {resid / norm:.3e} exceeds tolerance")
    return Q, N
