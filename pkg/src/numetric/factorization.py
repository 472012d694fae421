"""Normalized coprime factorizations.

Rational disk plants are factorized in state space. The plant is first
moved to the variable ``w = (1 - conj(a) z) / (z - a)``, in which "analytic
on the closed unit disk" becomes "proper with poles strictly inside the unit
circle"; the standard discrete-time normalized factorization then follows
from two Riccati equations (the plant and its transpose). Factors of other
algebras are supplied by the user and only verified here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.linalg import polar, sqrtm

from . import freqdomain as fd
from . import plants as pl
from . import statespace as ssu
from .config import CIRCLE_MARGIN, Tolerances
from .errors import FactorizationError, NearCircleDegeneracy, NotEquivalent, ValidationError
from .freqdomain import FrequencyGrid, MatrixFunction
from .riccati import solve_dare
from .symbols import CDScalar, ExpSum, MultiPoly, Rational

_TOL = Tolerances()
GOOD_DEFECT = 1e-10


@dataclass(frozen=True)
class WRealization:
    """``x -> D + C (w(x) I - A)^{-1} B`` with ``w = (1 - conj(a) z) / (z - a)``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    a: complex

    def __call__(self, z) -> np.ndarray:
        return ssu.ss_eval(self.A, self.B, self.C, self.D, ssu.w_of_z(self.a, z))

    def in_z(self):
        """The same transfer function realized in ``z``."""
        return ssu.mobius(self.A, self.B, self.C, self.D, *ssu.from_w(self.a))


@dataclass(frozen=True, eq=False)
class CoprimeFactors:
    """Graph symbols ``G = [N; D]`` and ``Gt = [-Dt, Nt]``.

    ``bezout`` optionally holds ``X, Y, Xt, Yt`` with ``X N + Y D = I`` and
    ``Nt Xt + Dt Yt = I``.
    """

    G: MatrixFunction
    Gtilde: MatrixFunction
    bezout: Optional[Dict[str, MatrixFunction]] = None
    normalized: bool = True
    residuals: Optional[Tuple[float, float, float]] = None
    state: Optional[dict] = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.G.cols

    @property
    def p(self) -> int:
        return self.G.rows - self.G.cols

    @property
    def grid(self) -> FrequencyGrid:
        return self.G.grid

    @property
    def N(self) -> MatrixFunction:
        return fd.block(self.G, slice(0, self.p), slice(None))

    @property
    def D(self) -> MatrixFunction:
        return fd.block(self.G, slice(self.p, None), slice(None))

    @property
    def Dt(self) -> MatrixFunction:
        return -fd.block(self.Gtilde, slice(None), slice(0, self.p))

    @property
    def Nt(self) -> MatrixFunction:
        return fd.block(self.Gtilde, slice(None), slice(self.p, None))

    def on(self, grid: FrequencyGrid) -> "CoprimeFactors":
        bez = None if self.bezout is None else {k: v.on(grid) for k, v in self.bezout.items()}
        return replace(self, G=self.G.on(grid), Gtilde=self.Gtilde.on(grid), bezout=bez)

    def right_multiply(self, U) -> "CoprimeFactors":
        """Factors ``G U`` (and ``U^* X``, ``U^* Y``) for a constant unitary ``U``."""
        U = np.asarray(U, dtype=complex)
        Uf = fd.constant(self.grid, U)
        bez = None
        if self.bezout is not None:
            Uh = fd.constant(self.grid, U.conj().T)
            bez = dict(self.bezout)
            bez["X"] = fd.compose(Uh, bez["X"])
            bez["Y"] = fd.compose(Uh, bez["Y"])
        return replace(self, G=fd.compose(self.G, Uf), bezout=bez, state=None)


@dataclass(frozen=True)
class FactorizationReport:
    r_right: float
    r_left: float
    r_double: float
    bezout_residual: Optional[float]
    tolerance: float
    passed: bool

    @property
    def residuals(self) -> Tuple[float, float, float]:
        return (self.r_right, self.r_left, self.r_double)


# -- helpers -------------------------------------------------------------------------------


def _defect(f: MatrixFunction) -> float:
    eye = fd.identity(f.grid, f.rows)
    return fd.sup_norm(f - eye)


def verify_factors(F: CoprimeFactors, tol: float = 1e-8) -> FactorizationReport:
    """Sup-norm residuals of ``G*G = I``, ``Gt Gt* = I``, ``G G* + Gt* Gt = I``
    and, when witnesses are present, of both Bezout identities."""
    if F.Gtilde.cols != F.G.rows or F.Gtilde.rows != F.p:
        raise ValidationError(f"inconsistent factor shapes {F.G.shape} and {F.Gtilde.shape}")
    G, Gt = F.G, F.Gtilde
    Gs, Gts = fd.involute(G), fd.involute(Gt)
    r_right = _defect(fd.compose(Gs, G))
    r_left = _defect(fd.compose(Gt, Gts))
    r_double = _defect(fd.compose(G, Gs) + fd.compose(Gts, Gt))
    bez = None
    if F.bezout:
        b = F.bezout
        right = fd.compose(b["X"], F.N) + fd.compose(b["Y"], F.D)
        left = fd.compose(F.Nt, b["Xt"]) + fd.compose(F.Dt, b["Yt"])
        bez = max(_defect(right), _defect(left))
    values = [r_right, r_left, r_double] + ([bez] if bez is not None else [])
    return FactorizationReport(r_right, r_left, r_double, bez, tol, all(v <= tol for v in values))


def _poles(P: pl.PlantModel) -> np.ndarray:
    body = P.body
    if isinstance(body, pl.StateSpace):
        return np.linalg.eigvals(body.A) if body.order else np.zeros(0, dtype=complex)
    if isinstance(body, pl.RationalMatrix):
        return np.concatenate([npoly.polyroots(d) if len(d) > 1 else np.zeros(0)
                               for row in body.entries for _, d in row]).astype(complex)
    raise ValidationError(f"ncf needs a rational or state-space disk plant, got {P.kind}")


def _centers(poles, wmax: float = 1e3):
    """Candidate Moebius centres, most promising first.

    A pole ``lam`` lands at ``|w| = |1 - conj(a) lam| / |lam - a|``. Centres
    are ranked by the worst pole's log distance from both the unit circle
    and ``|w| = wmax``. The centroid of the unstable poles comes first: it
    spreads a cluster of them around a large circle in ``w``.
    """
    poles = np.asarray(poles, dtype=complex).ravel()
    inside = poles[np.abs(poles) < 1.0]
    cands = [0.0 + 0j] + [r * np.exp(2j * np.pi * k / 16)
                          for r in (0.2, 0.4, 0.6, 0.8, 0.9) for k in range(16)]
    if poles.size == 0:
        return cands[:1]

    def score(a):
        gap = np.abs(poles - a)
        if np.any(gap < 1e-12):
            return -np.inf
        lw = np.log(np.abs(1.0 - np.conj(a) * poles) / gap)
        return float(np.min(np.minimum(np.abs(lw), np.log(wmax) - lw)))

    ranked = sorted(cands, key=score, reverse=True)
    if inside.size:
        c = complex(np.mean(inside))
        # nudge the centroid off any pole it coincides with
        shifts = [0.0] + [0.05 * np.exp(2j * np.pi * k / 4) for k in range(4)]
        extra = [c + d for d in shifts if abs(c + d) < 0.95 and score(c + d) > -np.inf]
        ranked = extra[:1] + ranked
    return [a for a in ranked if score(a) > -np.inf]


def _plant_in_w(P: pl.PlantModel, a: complex, reduce: bool):
    """Realization of ``P`` in ``w`` for the Moebius centre ``a``."""
    body = P.body
    if isinstance(body, pl.StateSpace):
        A, B, C, D = (np.asarray(x, dtype=complex) for x in (body.A, body.B, body.C, body.D))
        Aw, Bw, Cw, Dw = ssu.mobius(A, B, C, D, *ssu.to_w(a))
    else:
        alpha, beta, gamma, delta = ssu.to_w(a)
        entries = []
        for row in body.entries:
            new = []
            for num, den in row:
                k = max(len(num), len(den)) - 1
                new.append((ssu.substitute(num, alpha, beta, gamma, delta, k),
                            ssu.substitute(den, alpha, beta, gamma, delta, k)))
            entries.append(new)
        Aw, Bw, Cw, Dw = ssu.tf2ss(entries)
        reduce = True
    if reduce:
        Aw, Bw, Cw, Dw = ssu.minreal(Aw, Bw, Cw, Dw)
    return Aw, Bw, Cw, Dw


def _right_ncf_gain(A, B, C, D, tol):
    """State feedback ``F`` and scaling ``W`` of the normalized right factorization."""
    m = B.shape[1]
    R = np.eye(m) + D.conj().T @ D
    X, _ = solve_dare(A, B, C.conj().T @ C, R, C.conj().T @ D, tol=tol.riccati)
    H = R + B.conj().T @ X @ B
    H = 0.5 * (H + H.conj().T)
    F = -np.linalg.solve(H, B.conj().T @ X @ A + D.conj().T @ C)
    W = sqrtm(H)
    return F, np.asarray(W, dtype=complex)


def _polar_unitary(M, side):
    """Unitary ``U`` with ``M U`` (side='right') or ``U M`` (side='left') Hermitian PSD."""
    # M = P u (left polar) gives M u* = P; M = u P (right polar) gives u* M = P
    u, _ = polar(M, side="left" if side == "right" else "right")
    return u.conj().T


def ncf(P: pl.PlantModel, grid: Optional[FrequencyGrid] = None, tol: Tolerances = _TOL,
        verify: bool = True) -> CoprimeFactors:
    """Normalized double coprime factorization of a rational disk plant.

    Parameters
    ----------
    P : PlantModel
        Disk plant in state-space or rational form.
    grid : FrequencyGrid, optional
        Circle grid for the samples (default size from the environment).
    verify : bool
        Compute residuals and raise :class:`FactorizationError` if any
        exceeds ``tol.identity``.

    Returns
    -------
    CoprimeFactors
        Factors in canonical phase: ``D(1)`` and ``Dt(1)`` Hermitian
        positive definite.
    """
    if P.algebra.name != "disk":
        raise ValidationError("ncf constructs factors for disk plants only")
    grid = grid or fd.circle_grid(fd_default_size())
    poles = _poles(P)
    if np.any(np.abs(np.abs(poles) - 1.0) <= CIRCLE_MARGIN):
        raise NearCircleDegeneracy(f"plant has a pole within {CIRCLE_MARGIN:g} of the unit circle")
    best, best_defect, last_error = None, np.inf, None
    # a state-space body is used as given; a reduced realization is tried
    # when that fails (an unstabilizable realization breaks the Riccati solve)
    for reduce in (isinstance(P.body, pl.RationalMatrix), True):
        for a in _centers(poles)[:6]:
            try:
                real = _build(P, a, tol, reduce)
            except (FactorizationError, np.linalg.LinAlgError) as exc:
                last_error = exc
                continue
            defect = _probe_defect(real)
            if defect < best_defect:
                best, best_defect = real, defect
            if defect < GOOD_DEFECT:
                break
        if best is not None:
            break
    if best is None:
        if isinstance(last_error, FactorizationError):
            raise last_error
        raise FactorizationError(f"factorization failed: {last_error}")

    G = fd.sample(grid, best["G"])
    Gt = fd.sample(grid, best["Gt"])
    bezout = {k: fd.sample(grid, best[k]) for k in pl.BEZOUT_BLOCKS}
    out = CoprimeFactors(G, Gt, bezout, True, None, best["state"])
    if verify:
        rep = verify_factors(out, tol.identity)
        out = replace(out, residuals=rep.residuals)
        if not rep.passed:
            raise FactorizationError(
                f"factor residuals {rep.residuals} / Bezout {rep.bezout_residual} exceed {tol.identity:g}")
    return out


def _build(P, a, tol, reduce):
    A, B, C, D = _plant_in_w(P, a, reduce)
    p, m = D.shape
    F, W = _right_ncf_gain(A, B, C, D, tol)
    Ft, Wt = _right_ncf_gain(A.T, C.T, B.T, D.T, tol)
    L, Z = Ft.T, Wt.T
    Winv = np.linalg.inv(W)
    Zinv = np.linalg.inv(Z)
    AF = A + B @ F
    AL = A + L @ C

    Gr = WRealization(AF, B @ Winv, np.vstack([C + D @ F, F]), np.vstack([D @ Winv, Winv]), a)
    Gl = WRealization(AL, np.hstack([-L, B + L @ D]), Zinv @ C, Zinv @ np.hstack([-np.eye(p), D]), a)
    # canonical phase from the values at z = 1
    one = np.array([1.0 + 0j])
    U = _polar_unitary(Gr(one)[0, p:, :], "right")
    V = _polar_unitary(-Gl(one)[0, :, :p], "left")
    Gr = replace(Gr, B=Gr.B @ U, D=Gr.D @ U)
    Gl = replace(Gl, C=V @ Gl.C, D=V @ Gl.D)

    Uh, Vh = U.conj().T, V.conj().T
    # X N + Y D = I and Nt Xt + Dt Yt = I
    return {
        "G": Gr, "Gt": Gl,
        "X": WRealization(AL, L, Uh @ W @ F, np.zeros((m, p)), a),
        "Y": WRealization(AL, -(B + L @ D), Uh @ W @ F, Uh @ W, a),
        "Xt": WRealization(AF, L @ Z @ Vh, F, np.zeros((m, p)), a),
        "Yt": WRealization(AF, L @ Z @ Vh, -(C + D @ F), Z @ Vh, a),
        "state": {"a": a, "A": A, "B": B, "C": C, "D": D, "F": F, "L": L},
    }


def _probe_defect(real, n: int = 256) -> float:
    """Largest identity defect on a coarse grid offset from the working one."""
    z = np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    G, Gt = real["G"](z), real["Gt"](z)
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(Gt))):
        return np.inf
    m = G.shape[2]
    p = G.shape[1] - m
    GH, GtH = np.conj(np.swapaxes(G, 1, 2)), np.conj(np.swapaxes(Gt, 1, 2))
    N, Dm = G[:, :p], G[:, p:]
    Dt, Nt = -Gt[:, :, :p], Gt[:, :, p:]
    checks = [GH @ G - np.eye(m), Gt @ GtH - np.eye(p), G @ GH + GtH @ Gt - np.eye(p + m),
              real["X"](z) @ N + real["Y"](z) @ Dm - np.eye(m),
              Nt @ real["Xt"](z) + Dt @ real["Yt"](z) - np.eye(p)]
    return float(max(np.abs(c).max() for c in checks))


def fd_default_size() -> int:
    from .config import default_grid_size

    return default_grid_size()


def stabilizing_controller(P: pl.PlantModel, tol: Tolerances = _TOL) -> pl.PlantModel:
    """Observer-based controller built from the factorization gains.

    With the feedback convention ``u = C y`` used throughout, the returned
    ``C`` stabilizes ``P``.
    """
    st = ncf(P, fd.circle_grid(256), tol, verify=False).state
    A, B, Cm, D, F, L, a = (st[k] for k in ("A", "B", "C", "D", "F", "L", "a"))
    Ak = A + B @ F + L @ Cm + L @ D @ F
    Bk = -L
    Ck = F
    Dk = np.zeros((F.shape[0], L.shape[1]), dtype=complex)
    try:
        Az, Bz, Cz, Dz = ssu.mobius(Ak, Bk, Ck, Dk, *ssu.from_w(a))
    except np.linalg.LinAlgError as exc:
        raise FactorizationError("controller is not proper in z") from exc
    return pl.state_space(Az, Bz, Cz, Dz)


# -- user supplied factors ----------------------------------------------------------------


def _entry_eval(sym, points):
    return sym(points)


def _block_function(grid: FrequencyGrid, blk: np.ndarray) -> MatrixFunction:
    syms = blk

    def fn(x):
        x = np.asarray(x)
        k = len(x)
        out = np.empty((k,) + syms.shape, dtype=complex)
        for i in range(syms.shape[0]):
            for j in range(syms.shape[1]):
                out[:, i, j] = syms[i, j](x)
        return out

    symbolic = isinstance(syms.flat[0], (ExpSum, CDScalar))
    return fd.sample(grid, fn, syms if symbolic else None)


def explicit_factors(P: pl.PlantModel, grid: Optional[FrequencyGrid] = None) -> CoprimeFactors:
    """Wrap the factor blocks of an ``ExplicitFactors`` plant."""
    body = P.body
    if not isinstance(body, pl.ExplicitFactors):
        raise ValidationError("plant does not carry explicit factors")
    if body.sampled is not None:
        g = body.sampled

        def mf(name):
            return MatrixFunction(g, body.blocks[name])
    else:
        g = grid if grid is not None and grid.algebra == P.algebra else fd.grid_for(
            P.algebra, grid.size if grid is not None else fd_default_size())

        def mf(name):
            return _block_function(g, body.blocks[name])
    G = fd.vstack(mf("N"), mf("D"))
    Gt = fd.hstack(-mf("Dt"), mf("Nt"))
    bez = None
    if all(k in body.blocks for k in pl.BEZOUT_BLOCKS):
        bez = {k: mf(k) for k in pl.BEZOUT_BLOCKS}
    return CoprimeFactors(G, Gt, bez, True, body.residuals, None)


def factors(P: pl.PlantModel, grid: Optional[FrequencyGrid] = None, tol: Tolerances = _TOL) -> CoprimeFactors:
    """Verified normalized factors: constructed for rational disk plants,
    checked for explicit ones."""
    if isinstance(P.body, pl.ExplicitFactors):
        F = explicit_factors(P, grid)
        rep = verify_factors(F, tol.identity)
        if not rep.passed:
            raise FactorizationError(f"supplied factors are not normalized: residuals {rep.residuals}")
        return replace(F, residuals=rep.residuals)
    return ncf(P, grid, tol)


def to_explicit(F: CoprimeFactors, algebra=fd.DISK) -> pl.PlantModel:
    """Sampled ``coprime`` plant carrying ``F`` (and its residuals)."""
    blocks = {"N": F.N.samples, "D": F.D.samples, "Nt": F.Nt.samples, "Dt": F.Dt.samples}
    if F.bezout:
        blocks.update({k: v.samples for k, v in F.bezout.items()})
    return pl.explicit_factors(algebra, blocks, F.residuals, sampled=F.grid)


# -- equivalence ------------------------------------------------------------------------------


def unitary_equivalence(F1: CoprimeFactors, F2: CoprimeFactors, tol: float = 1e-7) -> MatrixFunction:
    """``U = G2* G1`` with checks ``U*U = I`` and ``G1 = G2 U``.

    Raises :class:`NotEquivalent` when either defect exceeds ``tol``.
    """
    if F1.G.shape != F2.G.shape:
        raise NotEquivalent(f"factor shapes differ: {F1.G.shape} vs {F2.G.shape}")
    G1 = F1.G
    G2 = F2.G.on(G1.grid) if not F2.grid.same_as(G1.grid) else F2.G
    U = fd.compose(fd.involute(G2), G1)
    unit = _defect(fd.compose(fd.involute(U), U))
    gap = fd.sup_norm(G1 - fd.compose(G2, U))
    if unit > tol or gap > tol:
        raise NotEquivalent(f"factors are not unitarily related (|U*U - I| = {unit:.3g}, "
                            f"|G1 - G2 U| = {gap:.3g})")
    return U


# -- scalar spectral factorization --------------------------------------------------------------


def spectral_factors(num, den, grid: Optional[FrequencyGrid] = None) -> MatrixFunction:
    """``[N; D] = [num; den] / q`` with ``|q|^2 = |num|^2 + |den|^2`` on the circle.

    ``q`` collects the roots of ``z^k (num num~ + den den~)`` outside the unit
    disk, so ``1/q`` is analytic on the closed disk. The phase is fixed by
    ``D(1) > 0``. Independent of the Riccati route and used to check it.
    """
    grid = grid or fd.circle_grid(fd_default_size())
    num = np.trim_zeros(np.asarray(num, dtype=complex), "b")
    den = np.trim_zeros(np.asarray(den, dtype=complex), "b")
    if num.size == 0:
        num = np.zeros(1, dtype=complex)
    k = max(len(num), len(den)) - 1

    def pad(c):
        return np.concatenate([c, np.zeros(k + 1 - len(c))])

    n_, d_ = pad(num), pad(den)
    # z^k c(z) conj(c)(1/z) has coefficients conv(c, reversed conj c)
    phi = npoly.polymul(n_, np.conj(n_[::-1])) + npoly.polymul(d_, np.conj(d_[::-1]))
    roots = npoly.polyroots(np.trim_zeros(phi, "b")) if np.count_nonzero(phi) > 1 else np.zeros(0)
    outside = roots[np.abs(roots) > 1.0]
    q = npoly.polyfromroots(outside) if outside.size else np.array([1.0 + 0j])
    one = 1.0
    target = np.sqrt(abs(npoly.polyval(one, num)) ** 2 + abs(npoly.polyval(one, den)) ** 2)
    q = q * (target / abs(npoly.polyval(one, q)))
    ratio = npoly.polyval(one, den) / npoly.polyval(one, q)
    q = q * (ratio / abs(ratio))

    def fn(z):
        z = np.asarray(z, dtype=complex)
        qz = npoly.polyval(z, q)
        return np.stack([npoly.polyval(z, num) / qz, npoly.polyval(z, den) / qz], axis=1)[:, :, None]

    return fd.sample(grid, fn)
