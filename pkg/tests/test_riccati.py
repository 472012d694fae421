import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import solve_discrete_are

from numetric.errors import RiccatiDivergence
from numetric.riccati import dare_residual, solve_dare


def random_problem(seed, n=4, m=2, p=2, cross=True):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) * 0.8
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    D = rng.standard_normal((p, m))
    R = np.eye(m) + D.T @ D
    Q = C.T @ C
    S = C.T @ D if cross else np.zeros((n, m))
    return A, B, Q, R, S


@given(st.integers(0, 10**6), st.booleans())
def test_matches_scipy(seed, cross):
    A, B, Q, R, S = random_problem(seed, cross=cross)
    X, hist = solve_dare(A, B, Q, R, S)
    ref = solve_discrete_are(A, B, Q, R, s=S)
    assert np.abs(X - ref).max() <= 1e-8 * (1 + np.abs(ref).max())
    assert dare_residual(A, B, Q, R, X, S) <= 1e-10


def test_closed_loop_is_stable():
    A, B, Q, R, S = random_problem(3)
    X, _ = solve_dare(A, B, Q, R, S)
    K = np.linalg.solve(R + B.T @ X @ B, B.T @ X @ A + S.T)
    assert np.max(np.abs(np.linalg.eigvals(A - B @ K))) < 1


def test_scalar_closed_form():
    # x = a^2 x - a^2 x^2 / (1 + x) + 1 with a = 2
    X, _ = solve_dare([[2.0]], [[1.0]], [[1.0]], [[1.0]])
    a2 = 4.0
    expected = ((a2 - 1) + 1 + np.sqrt((a2 - 1 + 1) ** 2 + 4)) / 2
    assert X[0, 0].real == pytest.approx(expected, rel=1e-12)


def test_empty_state():
    X, hist = solve_dare(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((0, 0)), np.eye(1))
    assert X.shape == (0, 0) and hist == []


def test_unstabilizable_diverges():
    # unstable mode that B cannot reach: no stabilizing solution exists
    A = np.diag([2.0, 0.5])
    B = np.array([[0.0], [1.0]])
    with pytest.raises(RiccatiDivergence):
        solve_dare(A, B, np.eye(2), np.eye(1))
