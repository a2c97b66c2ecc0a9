import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from impulsive_sync import (AgentSystem, ControllabilityError, NotNilpotentError, controllability_matrix,
                            design_deadbeat, schur_nilpotent)
from impulsive_sync import matlib as ml

from gen import lc_system, random_nilpotent, random_system

seeds = st.integers(0, 2**32 - 1)


def test_controllability_matrix_lc_demo():
    assert np.abs(controllability_matrix(lc_system()) - np.eye(2)).max() <= 1e-15


def test_controllability_matrix_scalar():
    assert np.array_equal(controllability_matrix(AgentSystem([[0.3]], [2.5], 1.0)), [[2.5]])


def test_controllability_matrix_zero_dynamics():
    B = np.array([1.0, -2.0, 0.5])
    C = controllability_matrix(AgentSystem(np.zeros((3, 3)), B, 0.7))
    assert np.array_equal(C, np.column_stack([B, B, B]))
    with pytest.raises(ControllabilityError, match="period T loses controllability"):
        design_deadbeat(AgentSystem(np.zeros((3, 3)), B, 0.7))


def test_lc_demo_gain():
    d = design_deadbeat(lc_system())
    assert np.abs(d.K - [[1.0, 0.0]]).max() <= 1e-10
    assert np.abs(d.G - [[0.0, -1.0]]).max() <= 1e-10
    assert np.abs(d.M - [[0.0, 0.0], [1.0, 0.0]]).max() <= 1e-12
    assert np.abs(d.M @ d.M).max() <= 1e-12
    assert d.kb == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("a,T", [(0.4, 1.0), (-2.0, 0.3), (0.0, 5.0)])
def test_scalar_deadbeat(a, T):
    d = design_deadbeat(AgentSystem([[a]], [1.0], T))
    assert d.K[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert abs(d.M[0, 0]) <= 1e-12
    assert np.array_equal(d.N, [[0.0]])


def test_half_period_rotation_loses_controllability():
    # e^{A pi} = -I makes C = [B, -B]
    with pytest.raises(ControllabilityError):
        design_deadbeat(AgentSystem([[0.0, -1.0], [1.0, 0.0]], [1.0, 0.0], np.pi))


def test_agent_system_validation():
    with pytest.raises(ValueError):
        AgentSystem([[0.0]], [1.0], 0.0)
    with pytest.raises(ValueError):
        AgentSystem([[0.0, 1.0]], [1.0], 1.0)
    with pytest.raises(ValueError):
        AgentSystem(np.eye(2), [1.0, 2.0, 3.0], 1.0)
    assert not AgentSystem(np.eye(2), [1.0, 0.0], 1.0).is_controllable()


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_design_invariants(seed):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, n=int(rng.integers(1, 6)))
    d = design_deadbeat(sys)
    n = sys.n
    assert abs(d.kb - 1.0) <= 1e-9
    # (BK)^2 - BK = (KB - 1) BK, plus rounding that grows with |BK|^2
    assert np.abs(d.BK @ d.BK - d.BK).max() <= 1e-9 * max(1.0, np.abs(d.BK).max()) ** 2
    # both closed forms for K
    K_alt = ml.solve(d.C.T, np.eye(n)[:, -1:]).T @ np.linalg.matrix_power(d.eAT, n - 1)
    assert np.abs(d.K - K_alt).max() <= 1e-9 * max(1.0, np.abs(d.K).max())
    scale = max(ml.two_norm(d.M), ml.two_norm(d.eAT))
    assert ml.two_norm(np.linalg.matrix_power(d.M, n)) <= 1e-8 * scale ** n
    assert np.abs(d.Q.conj().T @ d.Q - np.eye(n)).max() <= 1e-10
    assert np.array_equal(np.tril(d.N), np.zeros((n, n)))
    assert ml.two_norm(d.Q.conj().T @ d.M @ d.Q - d.N) <= 1e-9 * scale
    assert abs(d.norm_N - ml.two_norm(d.M)) <= 1e-9 * scale


def test_nilpotency_index_logged(caplog):
    rng = np.random.default_rng(7)
    with caplog.at_level(logging.DEBUG, logger="impulsive_sync.deadbeat"):
        d = design_deadbeat(random_system(rng, n=3))
    assert "nilpotency index" in caplog.text
    assert d.power_norms()[-2] > 1e-6


def test_schur_zero():
    Q, N = schur_nilpotent(np.zeros((3, 3)))
    assert np.array_equal(Q, np.eye(3))
    assert np.array_equal(N, np.zeros((3, 3)))


def test_schur_lower_shift():
    m = np.array([[0.0, 0.0], [1.0, 0.0]])
    Q, N = schur_nilpotent(m)
    assert np.abs(Q.conj().T @ Q - np.eye(2)).max() <= 1e-15
    assert np.array_equal(np.tril(N), np.zeros((2, 2)))
    assert np.abs(Q.conj().T @ m @ Q - N).max() <= 1e-15
    assert abs(abs(N[0, 1]) - 1.0) <= 1e-15


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 6))
def test_schur_random_jordan(seed, n):
    rng = np.random.default_rng(seed)
    m = random_nilpotent(rng, n)
    Q, N = schur_nilpotent(m)
    norm = ml.two_norm(m)
    assert np.abs(Q.conj().T @ Q - np.eye(n)).max() <= 1e-10
    assert np.array_equal(np.tril(N), np.zeros((n, n)))
    assert ml.two_norm(Q.conj().T @ m @ Q - N) <= 1e-9 * norm
    assert abs(ml.two_norm(N) - norm) <= 1e-9 * norm


def test_schur_rejects_non_nilpotent():
    with pytest.raises(NotNilpotentError):
        schur_nilpotent(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(NotNilpotentError):
        schur_nilpotent(np.array([[0.0, -1.0], [1.0, 0.0]]))
