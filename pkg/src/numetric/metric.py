"""The nu-gap distance, closed-loop maps, stability margins and robust
stability certificates.

Feedback convention: ``u = C y + v``, so the closed loop from the injected
signals to ``[y; u]`` is ``H(P, C) = [P; I] (I - C P)^{-1} [-C, I]``, which
equals ``G (Kt G)^{-1} Kt`` with ``Kt = [-Nt_C, Dt_C]``.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import factorization as fz
from . import freqdomain as fd
from . import index as ix
from . import plants as pl
from .config import Tolerances, default_grid_size
from .errors import (CertificateViolation, FactorizationError, NotEquivalent, NotInvertible,
                     SingularLoop, ValidationError)
from .freqdomain import FrequencyGrid, MatrixFunction
from .index import IndexValue

_TOL = Tolerances()
METRIC, DEGENERATE = "Metric", "DegenerateOne"


# -- results -----------------------------------------------------------------------------------


@dataclass(frozen=True)
class NuResult:
    value: float
    branch: str
    det_invertible: bool
    index: Optional[IndexValue]
    winding_condition_met: bool
    grid_size_used: int
    reason: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "branch": self.branch,
            "det_invertible": self.det_invertible,
            "index": None if self.index is None else self.index.to_json(),
            "winding_condition_met": self.winding_condition_met,
            "grid_size_used": self.grid_size_used,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class StabilizationEvidence:
    stabilizes: bool
    min_abs_det: float
    index: Optional[IndexValue]
    reason: Optional[str] = None

    def __bool__(self):
        return self.stabilizes

    def to_json(self) -> dict:
        return {"stabilizes": self.stabilizes, "min_abs_det": self.min_abs_det,
                "index": None if self.index is None else self.index.to_json(), "reason": self.reason}


@dataclass(frozen=True)
class MarginResult:
    mu: float
    stabilizes: bool
    h_norm: Optional[float]
    index_check: Optional[IndexValue]
    duality_defect: Optional[float] = None

    def to_json(self) -> dict:
        return {"mu": self.mu, "stabilizes": self.stabilizes, "h_norm": self.h_norm,
                "index_check": None if self.index_check is None else self.index_check.to_json(),
                "duality_defect": self.duality_defect}


@dataclass(frozen=True)
class RobustCertificate:
    mu0: float
    dnu: float
    certified: bool
    predicted_margin_lower_bound: float
    actual_mu1: Optional[float] = None
    arcsin_slack: Optional[float] = None
    corollary_slack: Optional[float] = None

    def to_json(self) -> dict:
        return {"mu0": self.mu0, "dnu": self.dnu, "certified": self.certified,
                "predicted_margin_lower_bound": self.predicted_margin_lower_bound,
                "actual_mu1": self.actual_mu1, "arcsin_slack": self.arcsin_slack,
                "corollary_slack": self.corollary_slack}


@dataclass(frozen=True)
class AxiomReport:
    count: int
    distances: np.ndarray = field(repr=False)
    identity_worst: float
    symmetry_worst: float
    triangle_worst_slack: float
    positivity_failures: int
    tolerance: float
    violations: Tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"count": self.count, "passed": self.passed, "identity_worst": self.identity_worst,
                "symmetry_worst": self.symmetry_worst, "triangle_worst_slack": self.triangle_worst_slack,
                "positivity_failures": self.positivity_failures, "tolerance": self.tolerance,
                "violations": list(self.violations)}


# -- factors with a small cache --------------------------------------------------------------------


_CACHE: "OrderedDict[tuple, fz.CoprimeFactors]" = OrderedDict()
_CACHE_SIZE = 512


def working_grid(P: pl.PlantModel, grid: Optional[FrequencyGrid] = None) -> FrequencyGrid:
    """Grid for computations with ``P``: its sampled grid, ``grid`` or the default."""
    body = P.body
    if isinstance(body, pl.ExplicitFactors) and body.sampled is not None:
        return body.sampled
    if grid is not None and grid.algebra == P.algebra:
        return grid
    size = grid.size if grid is not None else default_grid_size()
    return fd.grid_for(P.algebra, size)


def graph_factors(P: pl.PlantModel, grid: Optional[FrequencyGrid] = None,
                  tol: Tolerances = _TOL) -> fz.CoprimeFactors:
    """Verified normalized factors of ``P`` on ``grid`` (memoized)."""
    grid = working_grid(P, grid)
    key = (pl.serialize_plant(P), grid.algebra, grid.size, grid.radius, tol)
    hit = _CACHE.get(key)
    if hit is not None:
        _CACHE.move_to_end(key)
        return hit
    F = fz.factors(P, grid, tol)
    _CACHE[key] = F
    if len(_CACHE) > _CACHE_SIZE:
        _CACHE.popitem(last=False)
    return F


def _pair_grid(P1, P2, grid):
    if P1.algebra != P2.algebra:
        raise ValidationError(f"plants live in different algebras ({P1.algebra} vs {P2.algebra})")
    g1, g2 = working_grid(P1, grid), working_grid(P2, grid)
    if not g1.same_as(g2):
        # a sampled factor pins the grid; the other side is resampled onto it
        pinned = [g for P, g in ((P1, g1), (P2, g2))
                  if isinstance(P.body, pl.ExplicitFactors) and P.body.sampled is not None]
        if len(pinned) == 2:
            raise ValidationError("sampled factors live on different grids")
        return pinned[0]
    return g1


def _invertible(M: MatrixFunction, tol: Tolerances) -> bool:
    # products of normalized factors are contractions, so |det| <= 1 sets the scale
    if np.abs(np.linalg.det(M.samples)).min() <= tol.invertibility:
        return False
    return ix.is_invertible_in_S(M, tol=tol)


# -- nu-gap ----------------------------------------------------------------------------------------


def nu_distance(P1: pl.PlantModel, P2: pl.PlantModel, grid: Optional[FrequencyGrid] = None,
                tol: Tolerances = _TOL, factors=None) -> NuResult:
    """``||Gt2 G1||`` if ``det(G1* G2)`` is invertible with zero index, else 1.

    ``factors`` may pass precomputed ``(F1, F2)`` (used for unitary
    invariance checks). Unresolved indices propagate as exceptions.
    """
    if (P1.p, P1.m) != (P2.p, P2.m):
        raise ValidationError(f"dimension mismatch: {P1.p}x{P1.m} vs {P2.p}x{P2.m}")
    g = _pair_grid(P1, P2, grid)
    if factors is None:
        F1, F2 = graph_factors(P1, g, tol), graph_factors(P2, g, tol)
    else:
        F1, F2 = factors
    G1, G2 = F1.G.on(g), F2.G.on(g)
    Gt2 = F2.Gtilde.on(g)
    M = fd.compose(fd.involute(G1), G2)
    if not _invertible(M, tol):
        return NuResult(1.0, DEGENERATE, False, None, False, g.size, "det(G1* G2) is not invertible")
    try:
        idx = ix.index_of(M, tol)
    except NotInvertible as exc:
        return NuResult(1.0, DEGENERATE, False, None, False, g.size, str(exc))
    if not idx.is_identity(tol.winding):
        return NuResult(1.0, DEGENERATE, True, idx, False, g.size, f"index of det(G1* G2) is {idx}")
    value = fd.sup_norm(fd.compose(Gt2, G1))
    return NuResult(float(value), METRIC, True, idx, True, g.size)


# -- closed loop -------------------------------------------------------------------------------------


def controller_row(FC: fz.CoprimeFactors) -> MatrixFunction:
    """``Kt = [-Nt_C, Dt_C]`` from the controller's left factors."""
    return fd.hstack(-FC.Nt, FC.Dt)


def _loop_factors(P, C, grid, tol):
    if (C.p, C.m) != (P.m, P.p):
        raise ValidationError(f"controller must be {P.m}x{P.p}, got {C.p}x{C.m}")
    g = _pair_grid(P, C, grid)
    FP, FC = graph_factors(P, g, tol), graph_factors(C, g, tol)
    G = FP.G.on(g)
    Kt = controller_row(FC.on(g))
    return G, Kt


def closed_loop(P: pl.PlantModel, C: pl.PlantModel, grid: Optional[FrequencyGrid] = None,
                tol: Tolerances = _TOL) -> MatrixFunction:
    """``H(P, C)`` sampled through the factor form ``G (Kt G)^{-1} Kt``.

    Raises :class:`SingularLoop` when ``det(Kt G)`` vanishes on the grid.
    Where ``I - C P`` is well conditioned the result is compared with the
    direct formula.
    """
    G, Kt = _loop_factors(P, C, grid, tol)
    KG = fd.compose(Kt, G)
    if np.abs(np.linalg.det(KG.samples)).min() <= tol.invertibility:
        raise SingularLoop("det(Kt G) vanishes on the grid: the feedback loop is ill-posed")

    def assemble(g_s, kg_s, k_s):
        return g_s @ np.linalg.solve(kg_s, k_s)

    fn = None
    if G.fn is not None and Kt.fn is not None:
        gf, kf = G.fn, Kt.fn

        def fn(x):
            gs, ks = gf(x), kf(x)
            return assemble(gs, ks @ gs, ks)

    H = MatrixFunction(G.grid, assemble(G.samples, KG.samples, Kt.samples), fn)
    _cross_check(P, C, H, tol)
    return H


def closed_loop_direct(P: pl.PlantModel, C: pl.PlantModel, points) -> np.ndarray:
    """``[P; I] (I - C P)^{-1} [-C, I]`` by direct evaluation."""
    Pv = pl.evaluate_many(P, points)
    Cv = pl.evaluate_many(C, points)
    k, p, m = Pv.shape
    S = np.linalg.inv(np.eye(m) - Cv @ Pv)
    left = np.concatenate([Pv, np.broadcast_to(np.eye(m), (k, m, m))], axis=1)
    right = np.concatenate([-Cv, np.broadcast_to(np.eye(m), (k, m, m))], axis=2)
    return left @ S @ right


def _cross_check(P, C, H: MatrixFunction, tol: Tolerances, count: int = 64):
    if isinstance(P.body, pl.ExplicitFactors) or isinstance(C.body, pl.ExplicitFactors):
        return
    step = max(1, H.grid.npoints // count)
    pts = H.grid.points[::step]
    Pv, Cv = pl.evaluate_many(P, pts), pl.evaluate_many(C, pts)
    M = np.eye(P.m) - Cv @ Pv
    good = np.linalg.cond(M) < 1e6
    if not np.any(good):
        return
    direct = closed_loop_direct(P, C, pts[good])
    scale = 1.0 + np.abs(direct).max()
    gap = np.abs(direct - H.samples[::step][good]).max() / scale
    if gap > 1e-6:
        raise FactorizationError(f"factor form of H(P, C) disagrees with the direct formula ({gap:.3g})")


# -- stabilization and margins ---------------------------------------------------------------------


def stabilizes(P: pl.PlantModel, C: pl.PlantModel, grid: Optional[FrequencyGrid] = None,
               tol: Tolerances = _TOL) -> StabilizationEvidence:
    """``C`` stabilizes ``P`` iff ``det(Kt G)`` is invertible with zero index."""
    G, Kt = _loop_factors(P, C, grid, tol)
    KG = fd.compose(Kt, G)
    d = np.abs(np.linalg.det(KG.samples))
    min_det = float(d.min())
    if not _invertible(KG, tol):
        return StabilizationEvidence(False, min_det, None, "det(Kt G) vanishes on the grid")
    try:
        idx = ix.index_of(KG, tol)
    except NotInvertible as exc:
        return StabilizationEvidence(False, min_det, None, str(exc))
    if not idx.is_identity(tol.winding):
        return StabilizationEvidence(False, min_det, idx, f"index of det(Kt G) is {idx}")
    return StabilizationEvidence(True, min_det, idx)


def stability_margin(P: pl.PlantModel, C: pl.PlantModel, grid: Optional[FrequencyGrid] = None,
                     tol: Tolerances = _TOL) -> MarginResult:
    """``mu = inf sigma_min(Kt G)`` when ``C`` stabilizes ``P``, else 0.

    Also records ``||H(P, C)||`` and the defect ``|mu ||H|| - 1|``.
    """
    ev = stabilizes(P, C, grid, tol)
    if not ev.stabilizes:
        return MarginResult(0.0, False, None, ev.index)
    G, Kt = _loop_factors(P, C, grid, tol)
    mu = fd.min_singular_inf(fd.compose(Kt, G))
    # sigma_min of a product of contractions cannot exceed one
    mu = min(mu, 1.0)
    h = fd.sup_norm(closed_loop(P, C, grid, tol))
    return MarginResult(float(mu), True, float(h), ev.index, float(abs(mu * h - 1.0)))


def _asin(x: float) -> float:
    return math.asin(min(1.0, max(0.0, x)))


def certify_robust(P0: pl.PlantModel, C: pl.PlantModel, P1: pl.PlantModel,
                   grid: Optional[FrequencyGrid] = None, tol: Tolerances = _TOL) -> RobustCertificate:
    """Robust stability certificate for ``C`` on ``P1`` from data on ``P0``.

    Certified iff ``d_nu(P0, P1) < mu(P0, C)``; then ``C`` stabilizes ``P1``
    with ``asin mu1 >= asin mu0 - asin d_nu`` (and so ``mu1 >= mu0 - d_nu``).
    Both inequalities are checked against the computed ``mu1``; a violation
    beyond ``tol.certificate`` raises :class:`CertificateViolation`.
    """
    mu0 = stability_margin(P0, C, grid, tol).mu
    dnu = nu_distance(P0, P1, grid, tol).value
    certified = dnu < mu0
    angle = _asin(mu0) - _asin(dnu)
    predicted = math.sin(angle) if angle > 0 else 0.0
    if not certified:
        return RobustCertificate(mu0, dnu, False, predicted)
    mu1 = stability_margin(P1, C, grid, tol).mu
    arcsin_slack = _asin(mu1) - angle
    corollary_slack = mu1 - (mu0 - dnu)
    if arcsin_slack < -tol.certificate or corollary_slack < -tol.certificate:
        raise CertificateViolation(
            f"robustness bound violated: mu1={mu1:.9g}, mu0={mu0:.9g}, dnu={dnu:.9g} "
            f"(slacks {arcsin_slack:.3g}, {corollary_slack:.3g})")
    return RobustCertificate(mu0, dnu, True, predicted, mu1, arcsin_slack, corollary_slack)


# -- axioms -----------------------------------------------------------------------------------------


def distance_matrix(plants: Sequence[pl.PlantModel], grid: Optional[FrequencyGrid] = None,
                    tol: Tolerances = _TOL, parallel: bool = False) -> np.ndarray:
    """All ordered pairwise distances; entry ``[i, j] = d(P_i, P_j)``."""
    n = len(plants)
    pairs = [(i, j) for i in range(n) for j in range(n)]
    for P in plants:
        graph_factors(P, grid, tol)

    def one(ij):
        i, j = ij
        return nu_distance(plants[i], plants[j], grid, tol).value

    if parallel:
        with ThreadPoolExecutor() as pool:
            values = list(pool.map(one, pairs))
    else:
        values = [one(ij) for ij in pairs]
    return np.array(values, dtype=float).reshape(n, n)


def metric_axiom_suite(plants: Sequence[pl.PlantModel], tol: Optional[float] = None,
                       grid: Optional[FrequencyGrid] = None, tolerances: Tolerances = _TOL,
                       parallel: bool = False, identity_tol: float = 1e-9) -> AxiomReport:
    """Check identity, positivity, symmetry and the triangle inequality.

    Positivity is tested through the graphs: a pair at distance ``<= tol``
    must have unitarily equivalent factors.
    """
    if len(plants) < 3:
        raise ValidationError("the axiom suite needs at least three plants")
    shapes = {(P.p, P.m, P.algebra) for P in plants}
    if len(shapes) != 1:
        raise ValidationError("all plants must share dimensions and algebra")
    tol = tolerances.metric if tol is None else tol
    d = distance_matrix(plants, grid, tolerances, parallel)
    n = len(plants)
    violations: List[str] = []

    ident = float(np.max(np.abs(np.diag(d))))
    if ident > identity_tol:
        violations.append(f"d(P, P) reaches {ident:.3g}")

    sym = float(np.max(np.abs(d - d.T)))
    if sym > tol:
        i, j = np.unravel_index(int(np.argmax(np.abs(d - d.T))), d.shape)
        violations.append(f"symmetry defect {sym:.3g} at ({i}, {j})")

    # slack[i, j, k] = d(i, k) + d(k, j) - d(i, j)
    slack = d[:, None, :] + d.T[None, :, :] - d[:, :, None]
    idx = np.arange(n)
    # triples through an endpoint are trivially tight
    slack[idx, :, idx] = np.inf
    slack[:, idx, idx] = np.inf
    worst = float(slack.min())
    if worst < -tol:
        i, j, k = np.unravel_index(int(np.argmin(slack)), slack.shape)
        violations.append(f"triangle slack {worst:.3g} for ({i}, {j}) via {k}")

    pos_fail = 0
    for i in range(n):
        for j in range(i + 1, n):
            if d[i, j] <= tol:
                F1 = graph_factors(plants[i], grid, tolerances)
                F2 = graph_factors(plants[j], grid, tolerances)
                try:
                    fz.unitary_equivalence(F1, F2, tolerances.equivalence)
                except NotEquivalent:
                    pos_fail += 1
                    violations.append(f"d({i}, {j}) = {d[i, j]:.3g} but the graphs differ")
    return AxiomReport(n, d, ident, sym, worst, pos_fail, tol, tuple(violations))
