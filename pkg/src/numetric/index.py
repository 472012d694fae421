"""Index maps on invertible elements: circle winding number, average winding
of almost periodic functions, the composite (real, integer) index of the
L1-plus-atomic algebra and the diagonal winding for the polydisk.

All four are homomorphisms into an abelian group (Z, R or R x Z), flip sign
under conjugation and are locally constant; invertibility in the stable
subring is decided by the index being the group identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from . import freqdomain as fd
from .config import Tolerances
from .errors import NonInteger, NonLattice, NotInvertible, RefinementExhausted, Unresolved
from .freqdomain import FrequencyGrid, MatrixFunction
from .symbols import CDScalar, ExpSum

MAX_STEP = np.pi / 2
_TOL = Tolerances()


@dataclass(frozen=True)
class IndexValue:
    """Element of Z (``int``), R (``real``) or R x Z (``realint``)."""

    kind: str
    value: Union[int, float, Tuple[float, int]]

    def __post_init__(self):
        if self.kind not in ("int", "real", "realint"):
            raise ValueError(f"bad index kind {self.kind!r}")

    @classmethod
    def identity(cls, kind: str) -> "IndexValue":
        return cls(kind, {"int": 0, "real": 0.0, "realint": (0.0, 0)}[kind])

    def _check(self, other):
        if other.kind != self.kind:
            raise TypeError(f"cannot combine {self.kind} and {other.kind} indices")

    def __add__(self, other: "IndexValue") -> "IndexValue":
        self._check(other)
        if self.kind == "realint":
            return IndexValue("realint", (self.value[0] + other.value[0], self.value[1] + other.value[1]))
        return IndexValue(self.kind, self.value + other.value)

    def __neg__(self) -> "IndexValue":
        if self.kind == "realint":
            return IndexValue("realint", (-self.value[0] + 0.0, -self.value[1]))
        return IndexValue(self.kind, -self.value + (0.0 if self.kind == "real" else 0))

    def close(self, other: "IndexValue", tol: float = 1e-9) -> bool:
        """Equality: exact on integer parts, within ``tol`` on real parts."""
        self._check(other)
        if self.kind == "int":
            return self.value == other.value
        if self.kind == "real":
            return abs(self.value - other.value) <= tol
        return abs(self.value[0] - other.value[0]) <= tol and self.value[1] == other.value[1]

    def is_identity(self, tol: float = 1e-9) -> bool:
        return self.close(IndexValue.identity(self.kind), tol)

    def to_json(self):
        if self.kind == "realint":
            return {"kind": self.kind, "value": [float(self.value[0]), int(self.value[1])]}
        return {"kind": self.kind, "value": self.value}

    def __str__(self):
        if self.kind == "realint":
            return f"({self.value[0]:.6g}, {self.value[1]})"
        return f"{self.value:.6g}" if self.kind == "real" else str(self.value)


KIND_FOR = {"disk": "int", "polydisk": "int", "ap": "real", "cd": "realint"}


# -- circle winding -------------------------------------------------------------


def _phase_steps(values: np.ndarray, closed: bool = True) -> np.ndarray:
    nxt = np.roll(values, -1) if closed else values[1:]
    cur = values if closed else values[:-1]
    return np.angle(nxt / cur)


def _relative_min(values: np.ndarray) -> float:
    mags = np.abs(values)
    top = mags.max()
    return 0.0 if top == 0 else float(mags.min() / top)


def winding_from_samples(values: np.ndarray, tol: Tolerances = _TOL, closed: bool = True) -> int:
    """Winding number of a closed sampled curve; no refinement."""
    values = np.asarray(values, dtype=complex).ravel()
    if _relative_min(values) <= tol.invertibility:
        raise NotInvertible("function vanishes on the grid", where=int(np.argmin(np.abs(values))))
    steps = _phase_steps(values, closed)
    if np.max(np.abs(steps)) >= MAX_STEP:
        raise Unresolved("phase increments exceed pi/2; grid too coarse")
    raw = steps.sum() / (2 * np.pi)
    n = int(round(raw))
    if abs(raw - n) > tol.winding:
        raise NonInteger(f"accumulated phase {raw:.9f} is not an integer number of turns")
    return n


def _circle_values(f: MatrixFunction) -> np.ndarray:
    if f.rows != 1 or f.cols != 1:
        raise ValueError("winding number needs a scalar function")
    return f.samples[f.grid.diagonal, 0, 0]


def _wind_adaptive(f: MatrixFunction, tol: Tolerances, values_of=_circle_values) -> Tuple[int, FrequencyGrid]:
    """Wind with doubling until phase steps are below pi/2."""
    while True:
        vals = values_of(f)
        if _relative_min(vals) <= tol.invertibility:
            raise NotInvertible("function vanishes on the grid", where=int(np.argmin(np.abs(vals))))
        if np.max(np.abs(_phase_steps(vals))) < MAX_STEP:
            return winding_from_samples(vals, tol), f.grid
        if f.fn is None:
            raise Unresolved("phase increments exceed pi/2 and the function cannot be resampled")
        try:
            f = f.on(f.grid.doubled())
        except RefinementExhausted as exc:
            raise Unresolved(f"winding unresolved: {exc}") from exc


def winding_number(f: Union[MatrixFunction, Callable], grid: Optional[FrequencyGrid] = None,
                   tol: Tolerances = _TOL) -> int:
    """Winding number about 0 of a nonvanishing scalar function on the circle.

    ``f`` is a 1x1 :class:`MatrixFunction` on a disk grid (the diagonal
    circle is used on polydisk grids) or a vectorised callable of ``z`` plus
    a ``grid``. The grid is doubled while any principal-branch phase step
    reaches pi/2.
    """
    if not isinstance(f, MatrixFunction):
        func = f
        f = fd.sample(grid or fd.circle_grid(), lambda z: np.asarray(func(z), dtype=complex).reshape(-1, 1, 1))
    return _wind_adaptive(f, tol)[0]


def laurent_winding(lowest: int, coeffs: np.ndarray, grid: Optional[FrequencyGrid] = None,
                    tol: Tolerances = _TOL) -> int:
    """Winding of ``sum_k coeffs[k] z^(lowest + k)`` on the unit circle."""
    coeffs = np.asarray(coeffs, dtype=complex)

    def g(z):
        return (z**lowest * np.polynomial.polynomial.polyval(z, coeffs)).reshape(-1, 1, 1)

    size = max(grid.size if grid else fd.DEFAULT_GRID, 16)
    # the phase of z^k moves 2 pi k / N per step: start fine enough for the degree
    span = max(abs(lowest), abs(lowest + len(coeffs) - 1), 1)
    while size < 8 * span and size < fd.MAX_GRID:
        size *= 2
    return winding_number(fd.sample(fd.circle_grid(size), g), tol=tol)


# -- almost periodic ---------------------------------------------------------------


def _as_expsum(f) -> ExpSum:
    if isinstance(f, ExpSum):
        return f
    if isinstance(f, MatrixFunction) and f.symbol is not None:
        sym = f.symbol[0, 0]
        if isinstance(sym, CDScalar):
            return sym.ap
        return sym if isinstance(sym, ExpSum) else ExpSum.const(sym)
    if isinstance(f, (int, float, complex)):
        return ExpSum.const(f)
    raise TypeError("average winding needs an exponential sum")


def _ap_check_invertible(f: ExpSum, grid: FrequencyGrid, tol: Tolerances):
    vals = f(grid.points)
    if not f.terms or _relative_min(vals) <= tol.invertibility:
        raise NotInvertible("almost periodic function is not bounded away from zero on the window")
    return vals


def _phase_slope(f: ExpSum, T: float, dy: float) -> Tuple[float, float]:
    n = int(math.ceil(2 * T / dy))
    y = np.linspace(-T, T, n + 1)
    vals = f(y)
    steps = np.angle(vals[1:] / vals[:-1])
    if np.max(np.abs(steps)) >= MAX_STEP:
        raise Unresolved("phase increments exceed pi/2 in average-winding estimate")
    theta = np.concatenate([[0.0], np.cumsum(steps)])
    slope = float(theta[-1] / (2 * T))
    # the bounded oscillation of theta - slope * y caps the error of the slope
    resid = theta - slope * (y + T)
    return slope, float((resid.max() - resid.min()) / (2 * T))


def average_winding_estimate(f: ExpSum, grid: Optional[FrequencyGrid] = None,
                             tol: Tolerances = _TOL, max_points: int = 2**22) -> Tuple[float, float]:
    """Mean phase slope ``(arg f(T) - arg f(-T)) / 2T`` over growing windows.

    Returns ``(estimate, error_bar)``; the error bar is the spread of the
    de-trended phase divided by the window length.
    """
    grid = grid or fd.grid_for(fd.AP)
    vals = _ap_check_invertible(f, grid, tol)
    inf_f = float(np.abs(vals).min())
    dy = min(0.25, (np.pi / 8) * inf_f / max(f.derivative_bound(), 1e-300))
    T = grid.radius
    est, err = _phase_slope(f, T, dy)
    while err > 0.1 * tol.ap_error and 4 * T / dy <= max_points:
        T *= 2
        est, err = _phase_slope(f, T, dy)
    return est, err


def average_winding(f, grid: Optional[FrequencyGrid] = None, tol: Tolerances = _TOL) -> float:
    """Average winding number of an invertible finite exponential sum.

    Commensurate frequencies ``lambda_k = n_k h`` reduce exactly to ``h``
    times the circle winding of the Laurent polynomial
    ``g(zeta) = sum c_k zeta^n_k``. Otherwise the mean phase slope is
    estimated; if its error bar exceeds ``tol.ap_error``, :class:`NonLattice`
    is raised.
    """
    f = _as_expsum(f)
    grid = grid or fd.grid_for(fd.AP)
    _ap_check_invertible(f, grid, tol)
    h = f.lattice()
    if h is not None:
        lo, coeffs = f.laurent(h)
        return float(h * laurent_winding(lo, coeffs, tol=tol)) + 0.0
    est, err = average_winding_estimate(f, grid, tol)
    if err > tol.ap_error:
        raise NonLattice(f"average winding estimate {est:.6g} has error bar {err:.3g}")
    return est


def _sampled_average_winding(f: MatrixFunction, tol: Tolerances) -> float:
    # no symbol: use the window [-Y, Y] itself, compare with the half window
    vals = f.samples[:, 0, 0]
    y = f.grid.params
    if _relative_min(vals) <= tol.invertibility:
        raise NotInvertible("function is not bounded away from zero on the window")
    steps = np.angle(vals[1:] / vals[:-1])
    if np.max(np.abs(steps)) >= MAX_STEP:
        raise Unresolved("phase increments exceed pi/2 on the AP window")
    theta = np.concatenate([[0.0], np.cumsum(steps)])
    full = (theta[-1] - theta[0]) / (y[-1] - y[0])
    q = len(y) // 4
    half = (theta[-1 - q] - theta[q]) / (y[-1 - q] - y[q])
    if abs(full - half) > tol.ap_error:
        raise NonLattice(f"sampled average winding {full:.6g} unresolved (error bar {abs(full - half):.3g})")
    return float(full)


# -- L1 + atomic ----------------------------------------------------------------------


def _as_cd(F) -> CDScalar:
    if isinstance(F, CDScalar):
        return F
    if isinstance(F, ExpSum):
        return CDScalar(F)
    if isinstance(F, MatrixFunction) and F.symbol is not None:
        sym = F.symbol[0, 0]
        return sym if isinstance(sym, CDScalar) else CDScalar(_as_expsum(F))
    if isinstance(F, (int, float, complex)):
        return CDScalar.const(F)
    raise TypeError("cd_index needs a CDScalar (atomic part plus L1 part)")


def cd_index(F, grid: Optional[FrequencyGrid] = None, tol: Tolerances = _TOL) -> Tuple[float, int]:
    """Composite index ``(w(F_AP), wind(1 + F_AP^{-1} f_a))``.

    The second component is the winding of ``y -> F(iy) / F_AP(iy)`` as
    ``y`` runs from ``-inf`` to ``+inf``, sampled on the compactified circle
    ``y = cot(t / 2)``; both ends close up at 1 because the L1 part decays.
    """
    F = _as_cd(F)
    cgrid = grid if grid is not None and grid.algebra.name == "cd" else fd.grid_for(fd.CD, grid.size if grid else fd.DEFAULT_GRID)
    agrid = fd.grid_for(fd.AP, cgrid.size)
    if F.poles_on_axis():
        raise NotInvertible("L1 part has a pole on the imaginary axis")
    ap_vals = F.ap(agrid.points)
    if not F.ap.terms or _relative_min(ap_vals) <= tol.invertibility:
        raise NotInvertible("atomic part is not bounded away from zero")
    first = average_winding(F.ap, agrid, tol)

    def ratio(y):
        return (1.0 + F.l1_part(y) / F.ap(y)).reshape(-1, 1, 1)

    def closed_values(f: MatrixFunction) -> np.ndarray:
        # reverse angle order so y increases; append the limit point y = +-inf
        v = f.samples[::-1, 0, 0]
        return np.concatenate([[1.0 + 0j], v])

    full = fd.sample(cgrid, lambda y: F(y).reshape(-1, 1, 1))
    if _relative_min(np.concatenate([full.samples[:, 0, 0], ap_vals])) <= tol.invertibility:
        raise NotInvertible("F(iy) vanishes on the grid")
    second, _ = _wind_adaptive(fd.sample(cgrid, ratio), tol, closed_values)
    return first, second


# -- polydisk ---------------------------------------------------------------------------


def polydisk_index(f, tol: Tolerances = _TOL) -> int:
    """Winding of the diagonal restriction; both components must be invertible.

    ``f`` is a 1x1 function on a polydisk grid, or a pair ``(g, h)`` with
    ``g`` the torus samples (array) and ``h`` a 1x1 function on a circle grid.
    """
    if isinstance(f, tuple):
        g, h = f
        g = np.asarray(g.samples if isinstance(g, MatrixFunction) else g).ravel()
        if _relative_min(g) <= tol.invertibility:
            raise NotInvertible("torus component vanishes")
        return winding_number(h, tol=tol)
    lat = f.samples[: f.grid.diagonal.start, 0, 0]
    if _relative_min(lat) <= tol.invertibility:
        raise NotInvertible("torus component vanishes")
    return _wind_adaptive(f, tol)[0]


# -- generic -----------------------------------------------------------------------------


def _det_scalar(f: MatrixFunction) -> MatrixFunction:
    if f.rows != f.cols:
        raise ValueError("index needs a square function")
    return f if f.rows == 1 else fd.det(f)


def _matrix_relative_min(f: MatrixFunction) -> float:
    # |det| against the largest possible |det| at the grid's peak gain
    top = float(np.linalg.norm(f.samples, 2, axis=(1, 2)).max()) ** f.rows
    if top == 0:
        return 0.0
    return float(np.abs(np.linalg.det(f.samples)).min() / top)


def is_invertible_in_S(f: MatrixFunction, threshold: Optional[float] = None,
                       tol: Tolerances = _TOL) -> bool:
    """True iff ``|det f|`` stays above ``threshold`` relative to its maximum.

    For matrices ``|det f|`` is also compared with ``(max sigma_max)^n``, so
    a constant but nearly singular matrix is not mistaken for invertible.

    When the function can be resampled the verdict is confirmed on one
    doubled grid. On CD grids with a symbolic determinant the atomic part
    must also be bounded away from zero.
    """
    thr = tol.invertibility if threshold is None else threshold
    d = _det_scalar(f)
    if _relative_min(d.samples[:, 0, 0]) <= thr:
        return False
    if f.rows > 1 and _matrix_relative_min(f) <= thr:
        return False
    if d.grid.algebra.name == "cd" and d.symbol is not None:
        F = _as_cd(d)
        if F.poles_on_axis():
            return False
        ap = F.ap(fd.grid_for(fd.AP, d.grid.size).points)
        if not F.ap.terms or _relative_min(ap) <= thr:
            return False
    if d.fn is not None:
        try:
            finer = d.on(d.grid.doubled())
        except RefinementExhausted:
            return True
        return _relative_min(finer.samples[:, 0, 0]) > thr
    return True


def _index_once(d: MatrixFunction, tol: Tolerances) -> IndexValue:
    kind = d.grid.algebra.name
    if kind == "disk":
        return IndexValue("int", _wind_adaptive(d, tol)[0])
    if kind == "polydisk":
        return IndexValue("int", polydisk_index(d, tol))
    if kind == "ap":
        if d.symbol is not None:
            return IndexValue("real", average_winding(d, d.grid, tol))
        return IndexValue("real", _sampled_average_winding(d, tol))
    if d.symbol is None:
        raise Unresolved("cd index needs the atomic / L1 decomposition of the determinant")
    w, n = cd_index(d, d.grid, tol)
    return IndexValue("realint", (w, n))


def index_of(f: MatrixFunction, tol: Tolerances = _TOL) -> IndexValue:
    """Index of ``det f`` in the group of ``f``'s algebra.

    The computation is repeated on a doubled grid when the function can be
    resampled; disagreement raises :class:`Unresolved`.
    """
    d = _det_scalar(f)
    if not is_invertible_in_S(d, tol=tol):
        raise NotInvertible("determinant is not invertible on the grid")
    first = _index_once(d, tol)
    if d.fn is None:
        return first
    try:
        finer = d.on(d.grid.doubled())
    except RefinementExhausted:
        return first
    second = _index_once(finer, tol)
    if not first.close(second, tol.winding):
        raise Unresolved(f"index changed under refinement: {first} vs {second}")
    return first


def homotopy_index_check(path: Callable[[float], MatrixFunction], steps: int = 16,
                         tol: Tolerances = _TOL, ts: Optional[Sequence[float]] = None) -> bool:
    """Sample ``t -> path(t)`` on ``[0, 1]`` and compare indices.

    Raises :class:`NotInvertible` carrying the offending ``t`` when the path
    leaves the invertible group.
    """
    ts = np.linspace(0.0, 1.0, steps + 1) if ts is None else ts
    ref = None
    same = True
    for t in ts:
        f = path(float(t))
        if not is_invertible_in_S(f, tol=tol):
            raise NotInvertible(f"path leaves the invertible group at t={t:.6g}", where=float(t))
        idx = index_of(f, tol)
        if ref is None:
            ref = idx
        elif not ref.close(idx, tol.winding):
            same = False
    return same
