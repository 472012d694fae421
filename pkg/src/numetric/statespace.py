"""Realization utilities: batched evaluation, Moebius changes of variable,
minimal realizations and SISO/MIMO rational <-> state-space conversion."""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as npoly


def ss_eval(A, B, C, D, points) -> np.ndarray:
    """``D + C (xI - A)^{-1} B`` at every point; shape ``(K, p, m)``."""
    x = np.asarray(points, dtype=complex).ravel()
    D = np.asarray(D, dtype=complex)
    out = np.broadcast_to(D, (len(x),) + D.shape).copy()
    n = A.shape[0]
    if n == 0 or len(x) == 0:
        return out
    M = x[:, None, None] * np.eye(n) - A
    rhs = np.broadcast_to(B, (len(x),) + B.shape)
    out += C @ np.linalg.solve(M, rhs)
    return out


def mobius(A, B, C, D, alpha, beta, gamma, delta):
    """Realization of ``w -> P((alpha w + beta) / (gamma w + delta))``.

    Requires ``alpha I - gamma A`` invertible, i.e. ``P`` finite at the
    image of ``w = infinity``.
    """
    n = A.shape[0]
    if n == 0:
        return A, B, C, D
    eye = np.eye(n)
    E = alpha * eye - gamma * A
    Ei_B = np.linalg.solve(E, B)
    Ahat = -np.linalg.solve(E, beta * eye - delta * A)
    Chat = C @ (gamma * Ahat + delta * eye)
    Dhat = D + gamma * C @ Ei_B
    return Ahat, Ei_B, Chat, Dhat


def to_w(a: complex):
    """Coefficients of ``z = (1 + a w) / (w + conj(a))``.

    The map sends ``|w| >= 1`` (with infinity) onto the closed unit disk in
    ``z`` and the unit circle onto itself, so functions analytic on the
    closed disk become proper and stable in ``w``.
    """
    return a, 1.0, 1.0, np.conj(a)


def w_of_z(a: complex, z):
    z = np.asarray(z, dtype=complex)
    return (1.0 - np.conj(a) * z) / (z - a)


def from_w(a: complex):
    """Coefficients of the inverse map ``w = (1 - conj(a) z) / (z - a)``."""
    return -np.conj(a), 1.0, 1.0, -a


def _orth(M, tol):
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if len(s) == 0 or s[0] == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    r = int(np.sum(s > tol * s[0]))
    return U[:, :r]


def _reachable_basis(A, B, tol):
    n = A.shape[0]
    V = _orth(B, tol)
    while True:
        grown = _orth(np.hstack([V, A @ V]), tol)
        if grown.shape[1] == V.shape[1] or grown.shape[1] == n:
            return grown
        V = grown


def minreal(A, B, C, D, tol: float = 1e-9):
    """Remove unreachable, then unobservable, states by orthogonal projection."""
    n = A.shape[0]
    if n == 0:
        return A, B, C, D
    V = _reachable_basis(A, B, tol)
    if V.shape[1] < n:
        A, B, C = V.conj().T @ A @ V, V.conj().T @ B, C @ V
    n = A.shape[0]
    if n == 0:
        return A, B, C, D
    W = _reachable_basis(A.conj().T, C.conj().T, tol)
    if W.shape[1] < n:
        A, B, C = W.conj().T @ A @ W, W.conj().T @ B, C @ W
    return A, B, C, D


def tf2ss_simo(nums, den):
    """Controllable-form realization of ``[n_1; ...; n_p] / den`` (ascending
    coefficients, proper)."""
    den = np.trim_zeros(np.asarray(den, dtype=complex), "b")
    n = len(den) - 1
    lead = den[-1]
    den = den / lead
    p = len(nums)
    D = np.zeros((p, 1), dtype=complex)
    C = np.zeros((p, n), dtype=complex)
    for i, num in enumerate(nums):
        num = np.asarray(num, dtype=complex) / lead
        num = np.trim_zeros(num, "b") if np.any(num) else np.zeros(1, dtype=complex)
        if len(num) - 1 > n:
            raise ValueError("improper rational function")
        num = np.concatenate([num, np.zeros(n + 1 - len(num))])
        D[i, 0] = num[n]
        # strictly proper remainder num - D*den, ascending coefficients
        C[i] = (num - num[n] * den)[:n]
    A = np.zeros((n, n), dtype=complex)
    if n:
        A[:-1, 1:] = np.eye(n - 1)
        A[-1, :] = -den[:n]
    B = np.zeros((n, 1), dtype=complex)
    if n:
        B[-1, 0] = 1.0
    return A, B, C, D


def tf2ss(entries, tol: float = 1e-9):
    """Minimal realization of a proper rational matrix.

    ``entries[i][j] = (num, den)`` with ascending coefficients. Each column
    is realized over the product of its distinct denominators, the columns
    are stacked block-diagonally, and the result is reduced with
    :func:`minreal`.
    """
    p, m = len(entries), len(entries[0])
    blocks = []
    for j in range(m):
        dens = []
        for i in range(p):
            d = np.trim_zeros(np.asarray(entries[i][j][1], dtype=complex), "b")
            if not any(len(d) == len(e) and np.allclose(d / d[-1], e / e[-1], rtol=0, atol=1e-14) for e in dens):
                dens.append(d)
        common = np.array([1.0 + 0j])
        for d in dens:
            common = npoly.polymul(common, d)
        nums = []
        for i in range(p):
            num, d = (np.asarray(v, dtype=complex) for v in entries[i][j])
            d = np.trim_zeros(d, "b")
            q, r = npoly.polydiv(common, d)
            if np.max(np.abs(r), initial=0.0) > 1e-9 * np.max(np.abs(common)):
                raise ValueError("denominator bookkeeping failed")
            nums.append(npoly.polymul(num, q))
        blocks.append(tf2ss_simo(nums, common))
    n = sum(b[0].shape[0] for b in blocks)
    A = np.zeros((n, n), dtype=complex)
    B = np.zeros((n, m), dtype=complex)
    C = np.zeros((p, n), dtype=complex)
    D = np.zeros((p, m), dtype=complex)
    k = 0
    for j, (Aj, Bj, Cj, Dj) in enumerate(blocks):
        nj = Aj.shape[0]
        A[k:k + nj, k:k + nj] = Aj
        B[k:k + nj, j:j + 1] = Bj
        C[:, k:k + nj] = Cj
        D[:, j:j + 1] = Dj
        k += nj
    return minreal(A, B, C, D, tol)


def ss2tf_siso(A, B, C, D):
    """Numerator / denominator (ascending) of a SISO realization."""
    d = complex(np.asarray(D).ravel()[0])
    n = A.shape[0]
    if n == 0:
        return np.array([d]), np.array([1.0 + 0j])
    den = np.poly(A)[::-1]
    # det(zI - A + B C) = det(zI - A) (1 + C (zI - A)^{-1} B)
    num = np.poly(A - B @ C)[::-1] - den + d * den
    return num, den


def substitute(coeffs, alpha, beta, gamma, delta, degree):
    """Coefficients of ``(gamma w + delta)^degree * q((alpha w + beta)/(gamma w + delta))``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    out = np.zeros(degree + 1, dtype=complex)
    top = np.array([beta, alpha], dtype=complex)
    bot = np.array([delta, gamma], dtype=complex)
    for k, c in enumerate(coeffs):
        if c == 0:
            continue
        term = npoly.polymul(npoly.polypow(top, k), npoly.polypow(bot, degree - k)) * c
        out[: len(term)] += term
    return out
