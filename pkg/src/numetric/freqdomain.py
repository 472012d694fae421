"""Grid-sampled matrix functions over the maximal ideal spaces of the
supported algebras.

Four evaluation domains are supported:

``disk``
    the unit circle, angles ``2 pi k / N``;
``ap``
    a truncated real line ``[-Y, Y]`` (the reals are dense in the Bohr
    compactification, so the sup over a long window approximates the norm);
``cd``
    the imaginary axis compactified through ``iy = (1 + e^{it}) / (1 - e^{it})``,
    sampled at ``t = 2 pi k / N`` for ``k = 1 .. N-1``;
``polydisk``
    a lattice on the n-torus followed by a separate circle grid used for the
    diagonal restriction ``z -> f(z, ..., z)``.

A :class:`MatrixFunction` keeps its samples and, optionally, a point
evaluator. The evaluator lets norms be sharpened off-grid and lets grids be
doubled without rebuilding the function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .config import DEFAULT_AP_RADIUS, DEFAULT_GRID, MAX_GRID, MIN_GRID, check_grid_size
from .errors import GridError, RefinementExhausted

ALGEBRAS = ("disk", "ap", "cd", "polydisk")


@dataclass(frozen=True)
class AlgebraTag:
    """Which transfer-function algebra a plant or grid belongs to."""

    name: str
    arity: Optional[int] = None

    def __post_init__(self):
        if self.name not in ALGEBRAS:
            raise ValueError(f"unknown algebra {self.name!r}")
        if self.name == "polydisk":
            if self.arity is None or int(self.arity) < 2:
                raise ValueError("polydisk arity must be an integer >= 2")
        elif self.arity is not None:
            raise ValueError(f"{self.name} algebra takes no arity")

    def __str__(self):
        return f"polydisk({self.arity})" if self.name == "polydisk" else self.name


DISK = AlgebraTag("disk")
AP = AlgebraTag("ap")
CD = AlgebraTag("cd")


def polydisk(n: int) -> AlgebraTag:
    return AlgebraTag("polydisk", int(n))


def _mobius_y(theta):
    # iy = (1 + e^{it}) / (1 - e^{it})  <=>  y = cot(t / 2)
    return 1.0 / np.tan(theta / 2.0)


@dataclass(frozen=True)
class FrequencyGrid:
    """An evaluation grid standing in for the maximal ideal space.

    ``size`` is the nominal resolution (a power of two); the number of
    sample points ``npoints`` differs slightly per algebra (``N + 1`` on the
    AP window, ``N - 1`` on the compactified axis, lattice plus circle for
    the polydisk). Every doubling keeps the previous points as a subset.
    """

    algebra: AlgebraTag
    size: int = DEFAULT_GRID
    radius: float = DEFAULT_AP_RADIUS
    refinement_limit: Optional[int] = None
    base_size: Optional[int] = None

    def __post_init__(self):
        check_grid_size(self.size)
        if self.base_size is None:
            object.__setattr__(self, "base_size", self.size)
        if self.refinement_limit is None:
            limit = int(math.log2(MAX_GRID // self.base_size)) if self.base_size <= MAX_GRID else 0
            object.__setattr__(self, "refinement_limit", limit)
        if self.radius <= 0:
            raise ValueError("AP truncation radius must be positive")

    # -- construction helpers -------------------------------------------------
    def doubled(self) -> "FrequencyGrid":
        new = 2 * self.size
        if new > self.base_size * 2**self.refinement_limit or new > MAX_GRID:
            raise RefinementExhausted(
                f"cannot refine beyond {self.size} points "
                f"(base {self.base_size}, limit {self.refinement_limit} doublings)"
            )
        return FrequencyGrid(self.algebra, new, self.radius, self.refinement_limit, self.base_size)

    def with_size(self, size: int) -> "FrequencyGrid":
        return FrequencyGrid(self.algebra, size, self.radius)

    # -- geometry -------------------------------------------------------------
    @property
    def periodic(self) -> bool:
        return self.algebra.name in ("disk", "polydisk")

    @cached_property
    def angles(self) -> np.ndarray:
        """Circle angles for disk / cd / polydisk-diagonal grids."""
        n = self.size
        if self.algebra.name == "cd":
            return 2.0 * np.pi * np.arange(1, n) / n
        if self.algebra.name == "ap":
            raise GridError("the AP grid has no angle parametrisation")
        return 2.0 * np.pi * np.arange(n) / n

    @cached_property
    def params(self) -> np.ndarray:
        """Scalar parameter of the 1-D part of the grid (angle or y)."""
        if self.algebra.name == "ap":
            n = self.size
            return -self.radius + 2.0 * self.radius * np.arange(n + 1) / n
        return self.angles

    @cached_property
    def lattice_axis(self) -> int:
        n = self.algebra.arity
        return min(self.size, 2 ** (12 // n)) if n else 0

    @cached_property
    def points(self) -> np.ndarray:
        """Evaluation points.

        disk: complex ``z``; ap / cd: real ``y`` (functions are sampled at
        ``iy`` where relevant); polydisk: complex array of shape ``(K, n)``.
        """
        kind = self.algebra.name
        if kind == "disk":
            return np.exp(1j * self.angles)
        if kind == "ap":
            return self.params
        if kind == "cd":
            return _mobius_y(self.angles)
        n = self.algebra.arity
        m = self.lattice_axis
        axis = np.exp(2j * np.pi * np.arange(m) / m)
        mesh = np.meshgrid(*([axis] * n), indexing="ij")
        lattice = np.stack([g.ravel() for g in mesh], axis=1)
        diag = np.repeat(np.exp(1j * self.angles)[:, None], n, axis=1)
        return np.concatenate([lattice, diag], axis=0)

    @property
    def npoints(self) -> int:
        return len(self.points)

    @property
    def diagonal(self) -> slice:
        """Slice selecting the 1-D circle part (whole grid except polydisk)."""
        if self.algebra.name == "polydisk":
            start = self.lattice_axis**self.algebra.arity
            return slice(start, start + self.size)
        return slice(0, self.npoints)

    def point_at(self, t: float):
        """Map a 1-D parameter value to an evaluation point."""
        kind = self.algebra.name
        if kind == "disk":
            return np.exp(1j * t)
        if kind == "ap":
            return float(t)
        if kind == "cd":
            return float(_mobius_y(t))
        return np.full(self.algebra.arity, np.exp(1j * t))

    def same_as(self, other: "FrequencyGrid") -> bool:
        return (
            self.algebra == other.algebra
            and self.size == other.size
            and (self.algebra.name != "ap" or self.radius == other.radius)
        )


def circle_grid(size: int = DEFAULT_GRID, **kw) -> FrequencyGrid:
    return FrequencyGrid(DISK, size, **kw)


def grid_for(algebra: AlgebraTag, size: int = DEFAULT_GRID, radius: float = DEFAULT_AP_RADIUS) -> FrequencyGrid:
    return FrequencyGrid(algebra, size, radius)


Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class MatrixFunction:
    """A ``p x m`` complex matrix function sampled on a grid.

    Parameters
    ----------
    grid : FrequencyGrid
    samples : ndarray, shape (K, p, m)
    fn : callable, optional
        Maps an array of evaluation points to samples of shape ``(K, p, m)``.
        Used for off-grid sharpening and for refinement.
    symbol : ndarray of objects, optional
        Entrywise symbolic representation (exponential sums and friends)
        for algebras whose index needs more than samples.
    """

    grid: FrequencyGrid
    samples: np.ndarray
    fn: Optional[Evaluator] = field(default=None, repr=False)
    symbol: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 3:
            raise GridError(f"samples must have shape (K, p, m), got {s.shape}")
        if s.shape[0] != self.grid.npoints:
            raise GridError(f"{s.shape[0]} samples for a grid of {self.grid.npoints} points")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def rows(self) -> int:
        return self.samples.shape[1]

    @property
    def cols(self) -> int:
        return self.samples.shape[2]

    @property
    def shape(self):
        return self.samples.shape[1:]

    def on(self, grid: FrequencyGrid) -> "MatrixFunction":
        """Resample on another grid (requires an evaluator)."""
        if grid.same_as(self.grid):
            return self
        if self.fn is None:
            raise GridError("function has no evaluator and cannot be resampled")
        return MatrixFunction(grid, self.fn(grid.points), self.fn, self.symbol)

    def __add__(self, other):
        return _binary(self, other, np.add)

    def __sub__(self, other):
        return _binary(self, other, np.subtract)

    def __neg__(self):
        fn = self.fn
        sym = None if self.symbol is None else -self.symbol
        return MatrixFunction(self.grid, -self.samples, None if fn is None else (lambda x: -fn(x)), sym)

    def scale(self, c: complex) -> "MatrixFunction":
        fn = self.fn
        sym = None if self.symbol is None else self.symbol * c
        return MatrixFunction(self.grid, c * self.samples, None if fn is None else (lambda x: c * fn(x)), sym)


def sample(grid: FrequencyGrid, fn: Evaluator, symbol=None) -> MatrixFunction:
    """Build a MatrixFunction by evaluating ``fn`` on ``grid``."""
    return MatrixFunction(grid, fn(grid.points), fn, symbol)


def constant(grid: FrequencyGrid, matrix) -> MatrixFunction:
    mat = np.atleast_2d(np.asarray(matrix, dtype=complex))

    def fn(x):
        return np.broadcast_to(mat, (len(x),) + mat.shape).copy()

    return sample(grid, fn)


def identity(grid: FrequencyGrid, n: int) -> MatrixFunction:
    return constant(grid, np.eye(n))


def _check_same_grid(a: MatrixFunction, b: MatrixFunction):
    if not a.grid.same_as(b.grid):
        raise GridError("operands are sampled on different grids")


def _binary(a: MatrixFunction, b: MatrixFunction, op):
    _check_same_grid(a, b)
    if a.shape != b.shape:
        raise GridError(f"shape mismatch {a.shape} vs {b.shape}")
    fa, fb = a.fn, b.fn
    fn = None if fa is None or fb is None else (lambda x: op(fa(x), fb(x)))
    sym = None
    if a.symbol is not None and b.symbol is not None:
        sym = op(a.symbol, b.symbol)
    return MatrixFunction(a.grid, op(a.samples, b.samples), fn, sym)


def _conj_symbol(sym):
    out = np.empty(sym.shape[::-1], dtype=object)
    for i in range(sym.shape[0]):
        for j in range(sym.shape[1]):
            out[j, i] = sym[i, j].conj()
    return out


def involute(f: MatrixFunction) -> MatrixFunction:
    """Pointwise conjugate transpose ``f*``."""
    fn = f.fn
    sym = None if f.symbol is None else _conj_symbol(f.symbol)
    return MatrixFunction(
        f.grid,
        np.conj(np.swapaxes(f.samples, 1, 2)),
        None if fn is None else (lambda x: np.conj(np.swapaxes(fn(x), 1, 2))),
        sym,
    )


def compose(a: MatrixFunction, b: MatrixFunction) -> MatrixFunction:
    """Pointwise matrix product ``a b``."""
    _check_same_grid(a, b)
    if a.cols != b.rows:
        raise GridError(f"cannot multiply {a.shape} by {b.shape}")
    fa, fb = a.fn, b.fn
    fn = None if fa is None or fb is None else (lambda x: fa(x) @ fb(x))
    sym = None
    if a.symbol is not None and b.symbol is not None:
        sym = a.symbol.dot(b.symbol)
    return MatrixFunction(a.grid, a.samples @ b.samples, fn, sym)


def hstack(*fs: MatrixFunction) -> MatrixFunction:
    return _stack(fs, axis=2)


def vstack(*fs: MatrixFunction) -> MatrixFunction:
    return _stack(fs, axis=1)


def _stack(fs, axis):
    for f in fs[1:]:
        _check_same_grid(fs[0], f)
    fns = [f.fn for f in fs]
    fn = None
    if all(g is not None for g in fns):
        def fn(x):
            return np.concatenate([g(x) for g in fns], axis=axis)
    sym = None
    if all(f.symbol is not None for f in fs):
        sym = np.concatenate([f.symbol for f in fs], axis=axis - 1)
    return MatrixFunction(fs[0].grid, np.concatenate([f.samples for f in fs], axis=axis), fn, sym)


def block(f: MatrixFunction, rows: slice, cols: slice) -> MatrixFunction:
    fn = f.fn
    sym = None if f.symbol is None else f.symbol[rows, cols]
    return MatrixFunction(
        f.grid,
        f.samples[:, rows, cols],
        None if fn is None else (lambda x: fn(x)[:, rows, cols]),
        sym,
    )


def det(f: MatrixFunction) -> MatrixFunction:
    """Pointwise determinant as a 1x1 function (symbol carried along)."""
    if f.rows != f.cols:
        raise GridError("determinant of a non-square function")
    fn = f.fn
    sym = None
    if f.symbol is not None:
        sym = np.array([[symbolic_det(f.symbol)]], dtype=object)
    return MatrixFunction(
        f.grid,
        np.linalg.det(f.samples)[:, None, None],
        None if fn is None else (lambda x: np.linalg.det(fn(x))[:, None, None]),
        sym,
    )


def symbolic_det(m):
    """Determinant by cofactor expansion; entries need only ``+ - *``."""
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    if n == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    total = None
    for j in range(n):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        term = m[0, j] * symbolic_det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


# -- singular values and norms -------------------------------------------------


@dataclass(frozen=True)
class SingularValueProfile:
    """Largest and smallest singular value at every grid point."""

    grid: FrequencyGrid
    largest: np.ndarray
    smallest: np.ndarray


def _sv(samples):
    s = np.linalg.svd(samples, compute_uv=False)
    return s[:, 0], s[:, -1]


def singular_values(f: MatrixFunction) -> SingularValueProfile:
    hi, lo = _sv(f.samples)
    # svd returns sorted values, so lo <= hi holds exactly
    return SingularValueProfile(f.grid, hi, lo)


def _local_extrema(values, periodic, count, maximize):
    v = values if maximize else -values
    n = len(v)
    if n < 3:
        return [int(np.argmax(v))]
    if periodic:
        left, right = np.roll(v, 1), np.roll(v, -1)
        cand = np.nonzero((v >= left) & (v >= right))[0]
    else:
        inner = np.nonzero((v[1:-1] >= v[:-2]) & (v[1:-1] >= v[2:]))[0] + 1
        cand = np.concatenate([[0], inner, [n - 1]])
    # stable sort keeps the index-ascending reduction order
    order = np.argsort(-v[cand], kind="stable")
    return [int(k) for k in cand[order[:count]]]


def _parabolic(values, k, periodic):
    n = len(values)
    if periodic:
        ym, y0, yp = values[(k - 1) % n], values[k], values[(k + 1) % n]
    else:
        if k == 0 or k == n - 1:
            return values[k]
        ym, y0, yp = values[k - 1], values[k], values[k + 1]
    denom = ym - 2.0 * y0 + yp
    if denom == 0.0:
        return y0
    return y0 - 0.125 * (ym - yp) ** 2 / denom


def _extremum(f: MatrixFunction, maximize: bool) -> float:
    grid = f.grid
    hi, lo = _sv(f.samples)
    values = hi if maximize else lo
    best = float(values.max() if maximize else values.min())
    diag = grid.diagonal
    line = values[diag]
    periodic = grid.periodic
    params = grid.params
    if f.fn is None:
        k = _local_extrema(line, periodic, 1, maximize)[0]
        interp = float(_parabolic(line, k, periodic))
        return max(best, interp) if maximize else min(best, interp)

    fn = f.fn
    pick = 0 if maximize else -1
    sign = -1.0 if maximize else 1.0

    def objective(t):
        x = np.asarray([grid.point_at(t)])
        s = np.linalg.svd(fn(x), compute_uv=False)[0]
        return sign * s[pick]

    n = len(line)
    for k in _local_extrema(line, periodic, 3, maximize):
        if periodic:
            step = params[1] - params[0]
            lo_t, hi_t = params[k] - step, params[k] + step
        else:
            lo_t = params[max(k - 1, 0)]
            hi_t = params[min(k + 1, n - 1)]
            if grid.algebra.name == "cd":
                # the compactified axis extends to (but excludes) t = 0, 2 pi
                if k == 0:
                    lo_t = 0.5 * params[0]
                if k == n - 1:
                    hi_t = params[-1] + 0.5 * (2.0 * np.pi - params[-1])
        if hi_t <= lo_t:
            continue
        res = minimize_scalar(objective, bounds=(lo_t, hi_t), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, abs(hi_t))})
        val = sign * float(res.fun)
        best = max(best, val) if maximize else min(best, val)
    return best


def sup_norm(f: MatrixFunction) -> float:
    """``max`` over the grid of the largest singular value, sharpened locally.

    With an evaluator the top local maxima are polished by bounded Brent
    search between neighbouring grid points; otherwise a parabola through
    the maximizing sample and its neighbours is used. The result never
    falls below the plain grid maximum.
    """
    if f.samples.size == 0:
        return 0.0
    return _extremum(f, maximize=True)


def min_singular_inf(f: MatrixFunction) -> float:
    """``min`` over the grid of the smallest singular value, sharpened locally."""
    if f.samples.size == 0:
        return 0.0
    return max(0.0, _extremum(f, maximize=False))


def refine(sampler: Callable[[FrequencyGrid], np.ndarray], grid: FrequencyGrid,
           accept: Optional[Callable[[np.ndarray], bool]] = None) -> FrequencyGrid:
    """Double ``grid``; with ``accept``, keep doubling until it is satisfied.

    ``sampler`` maps a grid to samples. Without ``accept`` a single doubling
    is performed. With ``accept`` the current grid is returned as soon as
    ``accept(sampler(grid))`` holds. Raises :class:`RefinementExhausted` when
    the budget runs out first.
    """
    if accept is None:
        return grid.doubled()
    while not accept(sampler(grid)):
        grid = grid.doubled()
    return grid
