"""Discrete algebraic Riccati equation by structure-preserving doubling.

Solves ``X = A^H X A - (A^H X B + S)(R + B^H X B)^{-1}(B^H X A + S^H) + Q``
for the stabilizing solution. The cross term is folded into ``A`` and ``Q``
first; the doubling recursion then converges quadratically whenever the
stabilizing solution exists.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, solve_discrete_lyapunov

from .errors import RiccatiDivergence


def dare_residual(A, B, Q, R, X, S=None) -> float:
    """Relative Frobenius residual of ``X`` in the Riccati equation."""
    S = np.zeros_like(B) if S is None else S
    AH = A.conj().T
    K = np.linalg.solve(R + B.conj().T @ X @ B, B.conj().T @ X @ A + S.conj().T)
    res = AH @ X @ A - (AH @ X @ B + S) @ K + Q - X
    return float(np.linalg.norm(res) / max(1.0, np.linalg.norm(X)))


def solve_dare(A, B, Q, R, S=None, tol: float = 1e-12, max_iter: int = 500,
               accept: float = 1e-8):
    """Stabilizing solution of the DARE.

    Parameters
    ----------
    A, B, Q, R, S : array_like
        ``n x n``, ``n x m``, ``n x n`` Hermitian, ``m x m`` Hermitian
        positive definite, optional ``n x m`` cross term.
    tol : float
        Relative step size at which the doubling stops.
    accept : float
        Largest relative residual accepted after convergence.

    Returns
    -------
    X : ndarray
    history : list of float
        Relative step sizes, one per doubling step.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    R = np.asarray(R, dtype=complex)
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex), []
    S = np.zeros_like(B) if S is None else np.asarray(S, dtype=complex)

    Rinv_SH = np.linalg.solve(R, S.conj().T)
    Ak = A - B @ Rinv_SH
    Hk = Q - S @ Rinv_SH
    Gk = B @ np.linalg.solve(R, B.conj().T)
    Hk = 0.5 * (Hk + Hk.conj().T)
    Gk = 0.5 * (Gk + Gk.conj().T)
    eye = np.eye(n)
    history = []
    with np.errstate(over="ignore", invalid="ignore"):
        Ak, Gk, Hk = _doubling(Ak, Gk, Hk, eye, tol, max_iter, history)
    X, res = _newton_polish(A, B, Q, R, S, Hk)
    if res > accept:
        raise RiccatiDivergence(f"Riccati residual {res:.3g} above {accept:.1g}", history + [res])
    return X, history


def _doubling(Ak, Gk, Hk, eye, tol, max_iter, history):
    for _ in range(max_iter):
        W = eye + Gk @ Hk
        try:
            WA = np.linalg.solve(W, Ak)
            WG = np.linalg.solve(W, Gk)
        except np.linalg.LinAlgError as exc:
            raise RiccatiDivergence(f"doubling step singular: {exc}", history) from exc
        H_new = Hk + Ak.conj().T @ Hk @ WA
        G_new = Gk + Ak @ WG @ Ak.conj().T
        A_new = Ak @ WA
        H_new = 0.5 * (H_new + H_new.conj().T)
        G_new = 0.5 * (G_new + G_new.conj().T)
        step = float(np.linalg.norm(H_new - Hk) / max(1.0, np.linalg.norm(H_new)))
        history.append(step)
        Ak, Gk, Hk = A_new, G_new, H_new
        if not np.all(np.isfinite(Hk)):
            raise RiccatiDivergence("doubling iteration blew up", history)
        if step <= tol:
            return Ak, Gk, Hk
    raise RiccatiDivergence(f"no convergence in {max_iter} doubling steps", history)


def _newton_polish(A, B, Q, R, S, X, steps: int = 3):
    """Newton (Hewer) corrections: each solves one Stein equation."""
    res = dare_residual(A, B, Q, R, X, S)
    BH = B.conj().T
    for _ in range(steps):
        if res < 1e-15:
            break
        K = np.linalg.solve(R + BH @ X @ B, BH @ X @ A + S.conj().T)
        Ac = A - B @ K
        defect = A.conj().T @ X @ A - (A.conj().T @ X @ B + S) @ K + Q - X
        with warnings.catch_warnings():
            # an ill-conditioned Stein solve is caught by the residual test below
            warnings.simplefilter("ignore", LinAlgWarning)
            dX = solve_discrete_lyapunov(Ac.conj().T, 0.5 * (defect + defect.conj().T))
        cand = X + dX
        cand = 0.5 * (cand + cand.conj().T)
        new = dare_residual(A, B, Q, R, cand, S)
        if not np.isfinite(new) or new >= res:
            break
        X, res = cand, new
    return X, res
