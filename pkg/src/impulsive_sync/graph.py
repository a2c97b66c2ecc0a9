"""Coupling graphs, their Laplacians and the spanning-tree check.

Weight orientation: ``weights[i, j]`` (gamma_ij) multiplies ``x_j - x_i`` in
agent i's measurement, i.e. it is the influence of agent j on agent i.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matlib as ml
from .errors import DimensionError, SingularMatrixError

ROW_SUM_ATOL = 1e-12
ZERO_RTOL = 1e-9


@dataclass(frozen=True)
class CouplingGraph:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
            raise DimensionError(f"weights must be a non-empty square table, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("coupling weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise ValueError("self-coupling weights (diagonal) must be zero")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def q(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class LaplacianSpectrum:
    gamma: np.ndarray
    eigenvalues: np.ndarray
    lambda2: complex | None
    ell: np.ndarray | None
    spanning_tree: bool

    @property
    def q(self) -> int:
        return self.gamma.shape[0]


def laplacian(g: CouplingGraph) -> np.ndarray:
    """Degree on the diagonal, ``-gamma_ij`` off it."""
    w = g.weights
    return np.diag(w.sum(axis=1)) - w


def analyze_spectrum(gamma) -> LaplacianSpectrum:
    """Order the Laplacian spectrum and decide the spanning-tree condition.

    The graph has a spanning tree iff exactly one eigenvalue sits at the
    origin and the rest have strictly positive real part (both judged
    relative to ``||gamma||``). ``lambda2`` and the normalized left null
    row ``ell`` are filled only when the verdict is positive.
    """
    gamma = np.asarray(ml.as_mat(gamma), dtype=float)
    if gamma.shape[0] != gamma.shape[1]:
        raise DimensionError(f"Laplacian must be square, got {gamma.shape}")
    rows = np.abs(gamma.sum(axis=1)).max()
    if rows > ROW_SUM_ATOL * max(1.0, np.abs(gamma).max()):
        raise ValueError(f"Laplacian rows must sum to zero (max |row sum| = {rows:.3e})")
    eig = ml.eigenvalues(gamma)
    tol = ZERO_RTOL * max(ml.two_norm(gamma), np.finfo(float).tiny)
    at_zero = np.abs(eig) <= tol
    if gamma.shape[0] == 1:
        return LaplacianSpectrum(gamma, eig, None, np.ones((1, 1)), True)
    verdict = bool(at_zero.sum() == 1 and np.all(eig[~at_zero].real > tol))
    if not verdict:
        return LaplacianSpectrum(gamma, eig, None, None, False)
    try:
        ell = ml.left_null_vector(gamma)
    except SingularMatrixError:
        return LaplacianSpectrum(gamma, eig, None, None, False)
    rest = eig[~at_zero]
    return LaplacianSpectrum(gamma, eig, complex(rest[0]), ell, True)

