"""Discrete-time network map, coupling-strength bound and exact simulation.

Between impulses every agent flows by ``e^{At}``; at ``t = kT`` the stacked
state jumps by ``e^{-mu [Gamma (x) BK]}``. Since ``KB = 1`` makes ``BK`` a
projection, one period collapses to

    x[k+1] = (E (x) e^{AT} + (I - E) (x) M) x[k],   E = e^{-Gamma mu},

with ``M = (I - BK) e^{AT}`` nilpotent. For ``mu = inf`` the matrix E is
replaced by ``1 l^T`` exactly.

Stacking convention: ``x = [x_1; x_2; ...; x_q]``, agent i occupies
``x[i*n:(i+1)*n]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import matlib as ml
from .deadbeat import AgentSystem, DeadbeatDesign
from .errors import NumericalError, SpanningTreeError
from .graph import LaplacianSpectrum

SYNC_MARGIN = 1e-9
DEFAULT_SAFETY = 1.05


@dataclass(frozen=True)
class MuPolicy:
    """How the coupling strength is chosen.

    ``explicit``: a fixed ``value >= 0``. ``auto``: ``safety`` times the
    sufficient bound (``safety > 1``). ``infinite``: the exact averaging
    limit.
    """

    mode: str
    value: float | None = None
    safety: float = DEFAULT_SAFETY

    def __post_init__(self):
        if self.mode == "explicit":
            # mu = 0 (decoupled agents) is allowed as a negative control
            if self.value is None or not self.value >= 0 or not math.isfinite(self.value):
                raise ValueError(f"explicit coupling strength must be nonnegative and finite, got {self.value}")
        elif self.mode == "auto":
            if not self.safety > 1:
                raise ValueError(f"auto safety factor must exceed 1, got {self.safety}")
        elif self.mode != "infinite":
            raise ValueError(f"unknown mu mode {self.mode!r}")

    @classmethod
    def explicit(cls, mu: float) -> "MuPolicy":
        return cls("explicit", value=float(mu))

    @classmethod
    def auto(cls, safety: float = DEFAULT_SAFETY) -> "MuPolicy":
        return cls("auto", safety=float(safety))

    @classmethod
    def infinite(cls) -> "MuPolicy":
        return cls("infinite")


@dataclass(frozen=True)
class NetworkRun:
    sys: AgentSystem
    design: DeadbeatDesign
    graph: LaplacianSpectrum | tuple[LaplacianSpectrum, ...]
    mu: MuPolicy
    x0: np.ndarray
    periods: int
    samples_per_period: int = 1

    def __post_init__(self):
        graphs = self.graphs
        q = graphs[0].q
        if any(g.q != q for g in graphs):
            raise ValueError("all graphs in a sequence must have the same number of agents")
        x0 = np.array(self.x0, dtype=float).ravel()
        if x0.size != q * self.sys.n:
            raise ValueError(f"x0 has length {x0.size}, expected q*n = {q * self.sys.n}")
        if self.periods < 0 or self.samples_per_period < 1:
            raise ValueError("periods must be >= 0 and samples_per_period >= 1")
        x0.flags.writeable = False
        object.__setattr__(self, "x0", x0)
        if not isinstance(self.graph, LaplacianSpectrum):
            object.__setattr__(self, "graph", tuple(self.graph))

    @property
    def graphs(self) -> tuple[LaplacianSpectrum, ...]:
        if isinstance(self.graph, LaplacianSpectrum):
            return (self.graph,)
        return tuple(self.graph)

    @property
    def time_varying(self) -> bool:
        return not isinstance(self.graph, LaplacianSpectrum)

    @property
    def q(self) -> int:
        return self.graphs[0].q


@dataclass
class Trajectory:
    """Sampled run.

    ``times``/``tags``/``states`` hold every sample in time order. ``tags``
    is ``"+"`` for post-jump boundary states ``x(kT+)``, ``"-"`` for the
    pre-jump state ``x(kT-)`` and ``""`` for interior samples.
    ``periods_index`` counts the jumps applied so far. ``boundary_states[k]``
    is ``x[k] = x(kT+)``.
    """

    n: int
    q: int
    T: float
    times: np.ndarray
    tags: list[str]
    periods_index: np.ndarray
    states: np.ndarray
    sample_disagreement: np.ndarray
    boundary_states: np.ndarray
    disagreement: np.ndarray
    consensus: np.ndarray

    def agent(self, k: int, i: int) -> np.ndarray:
        """State of agent i at boundary k."""
        return self.boundary_states[k, i * self.n:(i + 1) * self.n]


@dataclass
class AnalysisReport:
    mu: float
    mu_bound: float
    norm_BKeAT: float
    norm_N: float
    norm_M: float
    lambda2: complex
    block_radii: list[float]
    phi_radius: float
    synchronous: bool
    eigenvalues: np.ndarray = field(repr=False)


def disagreement(x: np.ndarray, q: int, n: int) -> float:
    """Largest pairwise distance ``max_{i,j} ||x_i - x_j||``."""
    agents = np.asarray(x).reshape(q, n)
    diff = agents[:, None, :] - agents[None, :, :]
    return float(np.sqrt((np.abs(diff) ** 2).sum(axis=-1)).max())


def _check_projection(design: DeadbeatDesign) -> None:
    BK = design.BK
    err = np.abs(BK @ BK - BK).max()
    if abs(design.kb - 1.0) > 1e-9 or err > 1e-8 * max(1.0, np.abs(BK).max() ** 2):
        raise NumericalError(f"BK is not a projection (KB = {design.kb!r}, ||(BK)^2 - BK|| = {err:.3e})")


def impulse_jump(gamma, design: DeadbeatDesign, mu: float) -> np.ndarray:
    """Jump map ``e^{-mu [Gamma (x) BK]}`` via ``I + (e^{-Gamma mu} - I) (x) BK``."""
    _check_projection(design)
    gamma = ml.as_mat(gamma)
    q, n = gamma.shape[0], design.n
    E = ml.expm(-mu * gamma)
    return np.eye(q * n) + ml.kron(E - np.eye(q), design.BK)


def step_matrix(gamma, design: DeadbeatDesign, mu: float) -> np.ndarray:
    """One-period map ``x[k] -> x[k+1]`` for finite mu."""
    _check_projection(design)
    gamma = ml.as_mat(gamma)
    q = gamma.shape[0]
    E = ml.expm(-mu * gamma)
    return ml.kron(E, design.eAT) + ml.kron(np.eye(q) - E, design.M)


def step_matrix_consensus(ell, design: DeadbeatDesign) -> np.ndarray:
    """One-period map for infinite mu: ``e^{-Gamma mu}`` replaced by ``1 l^T``."""
    ell = ml.as_mat(ell)
    q = ell.shape[1]
    if abs(ell.sum() - 1.0) > 1e-9:
        raise ValueError(f"left eigenvector must sum to one, got {ell.sum()}")
    P = np.ones((q, 1)) @ ell
    return ml.kron(P, design.eAT) + ml.kron(np.eye(q) - P, design.M)


def mu_bound(design: DeadbeatDesign, lambda2: complex) -> float:
    """Sufficient coupling strength for synchronization.

        (1 / Re lambda2) * ln(||BK e^{AT}|| * sum_{k<n} ||N||^k)

    ``||N||`` is read from the Schur factor and must equal ``||M||``, so
    the value does not depend on which Schur basis was picked.
    """
    re = complex(lambda2).real
    if not re > 0:
        raise SpanningTreeError(f"Re(lambda2) = {re} must be positive")
    norm_N = design.norm_N
    norm_M = ml.two_norm(design.M)
    if abs(norm_N - norm_M) > 1e-9 * max(norm_M, ml.two_norm(design.eAT)):
        raise NumericalError(f"||N|| = {norm_N} differs from ||M|| = {norm_M}")
    series = sum(norm_N ** k for k in range(design.n))
    return math.log(ml.two_norm(design.BKeAT) * series) / re


def diagonal_blocks(design: DeadbeatDesign, eigenvalues: Sequence[complex], mu: float) -> list[np.ndarray]:
    """``D_i = M + e^{-lambda_i mu} BK e^{AT}`` for each nonzero Laplacian eigenvalue."""
    BKeAT = design.BKeAT
    return [design.M + np.exp(-complex(lam) * mu) * BKeAT for lam in eigenvalues]


def resolve_mu(policy: MuPolicy, bound: float, lambda2: complex) -> float:
    """Numeric coupling strength for a policy (``math.inf`` for infinite).

    ``auto`` gives ``safety * bound``; when the bound is not positive any
    mu > 0 qualifies and ``1 / Re(lambda2)`` is used.
    """
    if policy.mode == "explicit":
        return float(policy.value)
    if policy.mode == "infinite":
        return math.inf
    if bound > 0:
        return policy.safety * bound
    return 1.0 / complex(lambda2).real


def _analyze_graph(design: DeadbeatDesign, spec: LaplacianSpectrum, policy: MuPolicy) -> AnalysisReport:
    if not spec.spanning_tree:
        raise SpanningTreeError("coupling graph has no spanning tree")
    bound = mu_bound(design, spec.lambda2)
    mu = resolve_mu(policy, bound, spec.lambda2)
    nonzero = spec.eigenvalues[1:]
    if math.isinf(mu):
        # D_i -> M, which is nilpotent by construction
        radii = [0.0] * len(nonzero)
    else:
        radii = [ml.spectral_radius(D) for D in diagonal_blocks(design, nonzero, mu)]
    phi = max(radii) if radii else 0.0
    return AnalysisReport(
        mu=mu,
        mu_bound=bound,
        norm_BKeAT=ml.two_norm(design.BKeAT),
        norm_N=design.norm_N,
        norm_M=ml.two_norm(design.M),
        lambda2=spec.lambda2,
        block_radii=radii,
        phi_radius=phi,
        synchronous=bool(phi < 1.0 - SYNC_MARGIN),
        eigenvalues=spec.eigenvalues,
    )


def analyze(run: NetworkRun) -> AnalysisReport | list[AnalysisReport]:
    """Coupling bound and diagonal-block spectral radii at the run's mu.

    Returns one report per graph for time-varying runs.
    """
    reports = [_analyze_graph(run.design, g, run.mu) for g in run.graphs]
    return reports if run.time_varying else reports[0]


def _run_mu(run: NetworkRun, spec: LaplacianSpectrum) -> float:
    if run.mu.mode == "infinite":
        return math.inf
    if run.mu.mode == "explicit":
        return float(run.mu.value)
    if not spec.spanning_tree:
        raise SpanningTreeError("coupling graph has no spanning tree")
    return resolve_mu(run.mu, mu_bound(run.design, spec.lambda2), spec.lambda2)


def _propagate(run: NetworkRun, steps: list[np.ndarray], ells: list[np.ndarray | None]) -> Trajectory:
    # The state is carried as x = 1 (x) eta + delta with (l^T (x) I) delta = 0.
    # Re-splitting after every step keeps the disagreement accurate relative
    # to ||delta|| even when the consensus part grows by orders of magnitude.
    sys, q, n = run.sys, run.q, run.sys.n
    S, P, T = run.samples_per_period, run.periods, sys.T
    flows = [ml.expm(sys.A * (T * j / S)) for j in range(1, S + 1)]
    eAT = run.design.eAT
    uniform = np.full((1, q), 1.0 / q)
    ells = [uniform if ell is None else np.asarray(ell, dtype=float).reshape(1, q) for ell in ells]

    def split(eta, delta, ell):
        c = (ell @ delta).ravel()
        return eta + c, delta - c

    def spread(delta):
        diff = delta[:, None, :] - delta[None, :, :]
        return float(np.sqrt((diff ** 2).sum(axis=-1)).max())

    X0 = run.x0.reshape(q, n)
    eta, delta = split(np.zeros(n), X0.copy(), ells[0])

    boundary, d, consensus = [X0.ravel().copy()], [spread(delta)], [eta.copy()]
    times, tags, pidx = [0.0], ["+"], [0]
    states, d_samples = [X0.ravel().copy()], [d[0]]
    for k in range(1, P + 1):
        ell = ells[(k - 1) % len(ells)]
        eta, delta = split(eta, delta, ell)
        for j, F in enumerate(flows, start=1):
            delta_s = delta @ F.T
            times.append((k - 1) * T + T * j / S)
            tags.append("-" if j == S else "")
            pidx.append(k - 1)
            states.append((F @ eta + delta_s).ravel())
            d_samples.append(spread(delta_s))
        step = steps[(k - 1) % len(steps)]
        eta, delta = split(eAT @ eta, (step @ delta.ravel()).reshape(q, n), ell)
        x = (eta + delta).ravel()
        boundary.append(x)
        d.append(spread(delta))
        consensus.append(eta.copy())
        times.append(k * T)
        tags.append("+")
        pidx.append(k)
        states.append(x)
        d_samples.append(d[-1])

    return Trajectory(
        n=n, q=q, T=T,
        times=np.array(times), tags=tags, periods_index=np.array(pidx),
        states=np.array(states), sample_disagreement=np.array(d_samples),
        boundary_states=np.array(boundary), disagreement=np.array(d),
        consensus=np.array(consensus),
    )


def simulate(run: NetworkRun) -> Trajectory:
    """Exact sampled trajectory of the impulsive network (static graph)."""
    if run.time_varying:
        return simulate_time_varying(run)
    spec = run.graph
    mu = _run_mu(run, spec)
    if math.isinf(mu):
        if not spec.spanning_tree:
            raise SpanningTreeError("infinite coupling needs a graph with a spanning tree")
        step = step_matrix_consensus(spec.ell, run.design)
    else:
        step = step_matrix(spec.gamma, run.design, mu)
    return _propagate(run, [step], [spec.ell])


def simulate_time_varying(run: NetworkRun) -> Trajectory:
    """Infinite-coupling run where the jump at ``kT`` uses graph ``k-1``
    of the sequence (cycled when the sequence is shorter than the run)."""
    if run.mu.mode != "infinite":
        raise ValueError("time-varying topology is supported only with infinite coupling")
    for idx, g in enumerate(run.graphs):
        if not g.spanning_tree:
            raise SpanningTreeError(f"graph {idx} of the sequence has no spanning tree")
    steps = [step_matrix_consensus(g.ell, run.design) for g in run.graphs]
    return _propagate(run, steps, [g.ell for g in run.graphs])


def dirac_pulse_oracle(M, eps: float, y0, steps: int = 2000) -> np.ndarray:
    """Integrate ``dy/dt = p_eps(t) M y`` over ``[-eps, eps]`` with classical
    RK4, where ``p_eps`` is the unit-area box pulse of half-width eps.

    Test oracle for the jump map: the result tends to ``expm(M) @ y0``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    M = ml.as_mat(M)
    y = np.array(y0, dtype=np.result_type(M, float)).ravel()
    h = 2.0 * eps / steps
    height = 1.0 / (2.0 * eps)

    def f(v):
        return height * (M @ v)

    for _ in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y
