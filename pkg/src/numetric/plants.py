"""Plant and controller models, the plant file format, point evaluation and
seeded random plants.

File format
-----------
A UTF-8 JSON object::

    {"algebra": "disk", "kind": "rational", "p": 1, "m": 1,
     "body": {"entries": [[{"num": [[0, 0], [1, 0]], "den": [[1, 0]]}]]}}

``algebra`` is one of ``disk``, ``ap``, ``cd``, ``polydisk`` (the last also
carries ``"n"``). ``kind`` is one of ``state_space`` (body ``A``, ``B``,
``C``, ``D`` as nested lists of complex numbers), ``rational`` (polynomial
coefficients ascending in ``z``), ``exp_poly`` (entrywise ``num`` / ``den``
lists of ``{"lambda", "coeff"}`` terms) and ``coprime`` (explicit factor
blocks ``N``, ``D``, ``Nt``, ``Dt``, optional ``bezout`` and ``residuals``).
Complex numbers are ``[re, im]``; plain numbers are accepted on input.
Floats are written with 17 significant digits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import statespace as ssu
from .config import CIRCLE_MARGIN
from .errors import NotInvertible, PlantSyntaxError, ValidationError
from .freqdomain import ALGEBRAS, DISK, AlgebraTag, FrequencyGrid
from .symbols import CDScalar, ExpSum, MultiPoly, Rational

KINDS = ("state_space", "rational", "exp_poly", "coprime")
FACTOR_BLOCKS = ("N", "D", "Nt", "Dt")
BEZOUT_BLOCKS = ("X", "Y", "Xt", "Yt")


# -- bodies ------------------------------------------------------------------------


def _carr(x, ndim=2) -> np.ndarray:
    a = np.array(x, dtype=complex)
    if a.ndim != ndim:
        a = a.reshape((0,) * ndim) if a.size == 0 else a
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateSpace:
    """``P(z) = D + C (zI - A)^{-1} B``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __eq__(self, other):
        return isinstance(other, StateSpace) and all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip((self.A, self.B, self.C, self.D), (other.A, other.B, other.C, other.D))
        )

    @property
    def order(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class RationalMatrix:
    """Entrywise ``num(z) / den(z)``, coefficients ascending."""

    entries: Tuple[Tuple[Tuple[np.ndarray, np.ndarray], ...], ...]

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix) or len(self.entries) != len(other.entries):
            return False
        for r1, r2 in zip(self.entries, other.entries):
            if len(r1) != len(r2):
                return False
            for (n1, d1), (n2, d2) in zip(r1, r2):
                if not (np.array_equal(n1, n2) and np.array_equal(d1, d2)):
                    return False
        return True


@dataclass(frozen=True, eq=False)
class ExpPolyQuotient:
    """Entrywise quotients of finite exponential sums in ``y``."""

    entries: Tuple[Tuple[Tuple[ExpSum, ExpSum], ...], ...]

    def __eq__(self, other):
        return isinstance(other, ExpPolyQuotient) and self.entries == other.entries


@dataclass(frozen=True, eq=False)
class ExplicitFactors:
    """User-supplied normalized factors ``P = N D^{-1} = Dt^{-1} Nt``.

    ``blocks`` maps ``N, D, Nt, Dt`` (and optionally the Bezout witnesses
    ``X, Y, Xt, Yt``) to object arrays of symbols, or, when ``sampled`` is
    set, to complex sample arrays of shape ``(K, rows, cols)`` on that grid.
    """

    blocks: Dict[str, np.ndarray]
    sampled: Optional[FrequencyGrid] = None
    residuals: Optional[Tuple[float, float, float]] = None

    def __eq__(self, other):
        if not isinstance(other, ExplicitFactors) or set(self.blocks) != set(other.blocks):
            return False
        if (self.sampled is None) != (other.sampled is None):
            return False
        if self.sampled is not None and not self.sampled.same_as(other.sampled):
            return False
        if self.residuals != other.residuals:
            return False
        return all(_json_block(self.blocks[k], self.sampled) == _json_block(other.blocks[k], other.sampled)
                   for k in self.blocks)


@dataclass(frozen=True, eq=False)
class PlantModel:
    algebra: AlgebraTag
    p: int
    m: int
    body: Any

    def __eq__(self, other):
        return (isinstance(other, PlantModel) and self.algebra == other.algebra
                and self.p == other.p and self.m == other.m and self.body == other.body)

    @property
    def kind(self) -> str:
        return {StateSpace: "state_space", RationalMatrix: "rational",
                ExpPolyQuotient: "exp_poly", ExplicitFactors: "coprime"}[type(self.body)]

    def __repr__(self):
        return f"PlantModel({self.algebra}, {self.kind}, p={self.p}, m={self.m})"


# -- constructors ----------------------------------------------------------------------


def state_space(A, B, C, D, algebra: AlgebraTag = DISK) -> PlantModel:
    D = np.atleast_2d(np.asarray(D, dtype=complex))
    p, m = D.shape
    A = np.asarray(A, dtype=complex)
    n = A.shape[0] if A.size else 0
    A = A.reshape(n, n)
    B = np.asarray(B, dtype=complex).reshape(n, m)
    C = np.asarray(C, dtype=complex).reshape(p, n)
    P = PlantModel(algebra, p, m, StateSpace(_carr(A), _carr(B), _carr(C), _carr(D)))
    validate(P)
    return P


def rational(entries, algebra: AlgebraTag = DISK) -> PlantModel:
    """Rational matrix from ``entries[i][j] = (num, den)`` (ascending in ``z``)."""
    rows = tuple(
        tuple((_carr(np.atleast_1d(n), 1), _carr(np.atleast_1d(d), 1)) for n, d in row) for row in entries
    )
    P = PlantModel(algebra, len(rows), len(rows[0]), RationalMatrix(rows))
    validate(P)
    return P


def siso(num, den=(1.0,)) -> PlantModel:
    """Scalar rational disk plant ``num(z) / den(z)``."""
    return rational([[(num, den)]])


def constant(K, algebra: AlgebraTag = DISK) -> PlantModel:
    """Static gain ``K`` as a zero-order state-space model."""
    K = np.atleast_2d(np.asarray(K, dtype=complex))
    p, m = K.shape
    return state_space(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)), K, algebra)


def explicit_factors(algebra: AlgebraTag, blocks: Dict[str, Any], residuals=None,
                     sampled: Optional[FrequencyGrid] = None) -> PlantModel:
    arrs = {}
    for name, blk in blocks.items():
        if sampled is not None:
            arrs[name] = _carr(blk, 3)
        else:
            a = np.empty((len(blk), len(blk[0])), dtype=object)
            for i, row in enumerate(blk):
                for j, v in enumerate(row):
                    a[i, j] = v
            arrs[name] = a
    shape = arrs["N"].shape[-2:]
    P = PlantModel(algebra, shape[0], shape[1], ExplicitFactors(arrs, sampled,
                   None if residuals is None else tuple(float(r) for r in residuals)))
    validate(P)
    return P


# -- validation ----------------------------------------------------------------------------


def _check_circle(roots, what):
    roots = np.atleast_1d(roots)
    if roots.size and np.any(np.abs(np.abs(roots) - 1.0) <= CIRCLE_MARGIN):
        raise ValidationError(f"{what} within {CIRCLE_MARGIN:g} of the unit circle")


def validate(P: PlantModel) -> None:
    """Raise :class:`ValidationError` when ``P`` breaks a model invariant."""
    if P.p < 1 or P.m < 1:
        raise ValidationError("plant dimensions must be positive")
    body = P.body
    if isinstance(body, (StateSpace, RationalMatrix)) and P.algebra.name != "disk":
        raise ValidationError(f"{P.kind} plants are only supported on the disk algebra; "
                              "supply explicit coprime factors instead")
    if isinstance(body, ExpPolyQuotient) and P.algebra.name != "ap":
        raise ValidationError("exp_poly plants belong to the ap algebra")
    if isinstance(body, StateSpace):
        n = body.A.shape[0]
        if body.A.shape != (n, n) or body.B.shape != (n, P.m) or body.C.shape != (P.p, n) \
                or body.D.shape != (P.p, P.m):
            raise ValidationError("state-space matrix dimensions are inconsistent")
        if not all(np.all(np.isfinite(x)) for x in (body.A, body.B, body.C, body.D)):
            raise ValidationError("non-finite state-space entries")
        if n:
            _check_circle(np.linalg.eigvals(body.A), "pole")
    elif isinstance(body, RationalMatrix):
        if len(body.entries) != P.p or any(len(r) != P.m for r in body.entries):
            raise ValidationError("rational matrix dimensions do not match (p, m)")
        for row in body.entries:
            for num, den in row:
                if len(den) == 0 or den[-1] == 0:
                    raise ValidationError("denominator has a zero leading coefficient")
                if not (np.all(np.isfinite(num)) and np.all(np.isfinite(den))):
                    raise ValidationError("non-finite rational coefficients")
                if len(den) > 1:
                    _check_circle(npoly.polyroots(den), "pole")
    elif isinstance(body, ExpPolyQuotient):
        if len(body.entries) != P.p or any(len(r) != P.m for r in body.entries):
            raise ValidationError("exp_poly dimensions do not match (p, m)")
        for row in body.entries:
            for num, den in row:
                for t in list(num.terms) + list(den.terms):
                    if t < 0:
                        raise ValidationError("exp_poly frequencies must be non-negative")
    elif isinstance(body, ExplicitFactors):
        want = {"N": (P.p, P.m), "D": (P.m, P.m), "Nt": (P.p, P.m), "Dt": (P.p, P.p),
                "X": (P.m, P.p), "Y": (P.m, P.m), "Xt": (P.m, P.p), "Yt": (P.p, P.p)}
        for name in FACTOR_BLOCKS:
            if name not in body.blocks:
                raise ValidationError(f"coprime body lacks block {name}")
        for name, blk in body.blocks.items():
            if name not in want:
                raise ValidationError(f"unknown factor block {name!r}")
            if tuple(blk.shape[-2:]) != want[name]:
                raise ValidationError(f"block {name} has shape {blk.shape[-2:]}, expected {want[name]}")
            if body.sampled is not None:
                if blk.shape[0] != body.sampled.npoints:
                    raise ValidationError(f"block {name} has {blk.shape[0]} samples for a grid "
                                          f"of {body.sampled.npoints}")
            else:
                _check_symbols(P.algebra, name, blk)
    else:
        raise ValidationError(f"unsupported plant body {type(body).__name__}")


_SYMBOL_TYPE = {"disk": Rational, "ap": ExpSum, "cd": CDScalar, "polydisk": MultiPoly}


def _check_symbols(algebra, name, blk):
    want = _SYMBOL_TYPE[algebra.name]
    for v in blk.ravel():
        if not isinstance(v, want):
            raise ValidationError(f"block {name}: expected {want.__name__} entries for {algebra}")
        if isinstance(v, Rational) and len(v.den) > 1:
            roots = npoly.polyroots(v.den)
            if np.any(np.abs(roots) <= 1.0 + CIRCLE_MARGIN):
                raise ValidationError(f"block {name}: factor entries must be analytic on the closed disk")
        if isinstance(v, MultiPoly) and v.n != algebra.arity:
            raise ValidationError(f"block {name}: polynomial arity {v.n} != {algebra.arity}")
        if isinstance(v, CDScalar) and v.poles_on_axis():
            raise ValidationError(f"block {name}: L1 part has a pole on the imaginary axis")


# -- evaluation ------------------------------------------------------------------------------


def _symbol_eval(sym, pts):
    return sym(pts)


def evaluate_many(P: PlantModel, points) -> np.ndarray:
    """``P`` at an array of grid points; shape ``(K, p, m)``."""
    body = P.body
    pts = np.asarray(points)
    if isinstance(body, StateSpace):
        z = pts.astype(complex).ravel()
        n = body.order
        if n:
            M = z[:, None, None] * np.eye(n) - body.A
            if np.any(np.abs(np.linalg.det(M)) < 1e-300):
                raise NotInvertible("resolvent is singular at an evaluation point")
        return ssu.ss_eval(body.A, body.B, body.C, body.D, z)
    if isinstance(body, RationalMatrix):
        z = pts.astype(complex).ravel()
        out = np.empty((len(z), P.p, P.m), dtype=complex)
        for i, row in enumerate(body.entries):
            for j, (num, den) in enumerate(row):
                d = npoly.polyval(z, den)
                if np.any(d == 0):
                    raise NotInvertible("evaluation at a pole")
                out[:, i, j] = npoly.polyval(z, num) / d
        return out
    if isinstance(body, ExpPolyQuotient):
        y = pts.astype(float).ravel()
        out = np.empty((len(y), P.p, P.m), dtype=complex)
        for i, row in enumerate(body.entries):
            for j, (num, den) in enumerate(row):
                out[:, i, j] = num(y) / den(y)
        return out
    if isinstance(body, ExplicitFactors):
        if body.sampled is not None:
            raise ValueError("sampled factors can only be evaluated on their own grid")
        N = _sample_block(body.blocks["N"], pts)
        D = _sample_block(body.blocks["D"], pts)
        return N @ np.linalg.inv(D)
    raise TypeError(type(body))


def _sample_block(blk, pts):
    k = len(pts)
    out = np.empty((k,) + blk.shape, dtype=complex)
    for i in range(blk.shape[0]):
        for j in range(blk.shape[1]):
            out[:, i, j] = blk[i, j](pts)
    return out


def evaluate(P: PlantModel, point) -> np.ndarray:
    """``P`` at a single point (``z`` on the circle, ``y`` on the real line,
    or an ``n``-tuple on the torus)."""
    if P.algebra.name == "polydisk":
        pts = np.asarray(point, dtype=complex).reshape(1, -1)
    else:
        pts = np.asarray([point])
    return evaluate_many(P, pts)[0]


# -- conversions ---------------------------------------------------------------------------


def to_rational(P: PlantModel) -> PlantModel:
    """Entrywise rational form of a disk state-space plant."""
    if isinstance(P.body, RationalMatrix):
        return P
    ss = P.body
    entries = []
    for i in range(P.p):
        row = []
        for j in range(P.m):
            num, den = ssu.ss2tf_siso(ss.A, ss.B[:, j:j + 1], ss.C[i:i + 1, :], ss.D[i:i + 1, j:j + 1])
            row.append((num, den))
        entries.append(row)
    return rational(entries)


def to_state_space(P: PlantModel) -> PlantModel:
    """Minimal state-space form of a proper rational disk plant."""
    if isinstance(P.body, StateSpace):
        return P
    A, B, C, D = ssu.tf2ss([[(n, d) for n, d in row] for row in P.body.entries])
    return state_space(A, B, C, D)


def scale(P: PlantModel, k: complex) -> PlantModel:
    """The plant ``k P``."""
    body = P.body
    if isinstance(body, StateSpace):
        return state_space(body.A, body.B, k * body.C, k * body.D)
    if isinstance(body, RationalMatrix):
        return rational([[(k * n, d) for n, d in row] for row in body.entries])
    raise ValidationError(f"cannot scale a {P.kind} plant")


def zero(p: int, m: int) -> PlantModel:
    return constant(np.zeros((p, m)))


# -- random plants ----------------------------------------------------------------------------


MIN_POLE_GAP = 0.1
MIN_PBH_MARGIN = 1e-3


def _random_eigs(rng, n):
    """Real poles and conjugate pairs, at least ``MIN_POLE_GAP`` apart."""
    eigs, taken = [], []
    while len(eigs) < n:
        inside = rng.random() < 0.5
        # uniform in area inside, uniform in radius outside
        r = 0.9 * np.sqrt(rng.random()) if inside else rng.uniform(1.1, 3.0)
        if n - len(eigs) >= 2 and rng.random() < 0.5:
            phi = rng.uniform(0.1, np.pi - 0.1)
            new = [r * np.exp(1j * phi), r * np.exp(-1j * phi)]
            item = [("pair", r, phi), None]
        else:
            x = r * rng.choice([-1.0, 1.0])
            new, item = [complex(x)], [("real", x, 0.0)]
        cand = taken + new
        gaps = [abs(u - v) for i, u in enumerate(cand) for v in cand[i + 1:]]
        if gaps and min(gaps) < MIN_POLE_GAP:
            continue
        taken += new
        eigs += item
    return [e for e in eigs if e is not None]


def random_plant(p: int, m: int, order: int, seed: int, algebra: AlgebraTag = DISK) -> PlantModel:
    """Deterministic random real state-space plant.

    Poles are drawn from ``|z| <= 0.9`` (uniform in area) or
    ``1.1 <= |z| <= 3`` with equal probability, as real poles or conjugate
    pairs kept ``MIN_POLE_GAP`` apart, and mixed by a random orthogonal
    similarity; ``B``, ``C``, ``D`` are standard normal, redrawn while the
    realization is within ``MIN_PBH_MARGIN`` of losing minimality (a near
    pole-zero cancellation makes every factorization ill-conditioned).
    """
    if algebra.name != "disk":
        raise ValidationError("random plants are generated for the disk algebra only")
    if order < 0:
        raise ValueError("order must be non-negative")
    rng = np.random.default_rng(seed)
    A = np.zeros((order, order))
    k = 0
    for kind, r, phi in _random_eigs(rng, order):
        if kind == "pair":
            c, s = r * np.cos(phi), r * np.sin(phi)
            A[k:k + 2, k:k + 2] = [[c, s], [-s, c]]
            k += 2
        else:
            A[k, k] = r
            k += 1
    if order:
        Q, R = np.linalg.qr(rng.standard_normal((order, order)))
        Q = Q * np.sign(np.diag(R))
        A = Q @ A @ Q.T
    for _ in range(100):
        B = rng.standard_normal((order, m))
        C = rng.standard_normal((p, order))
        D = rng.standard_normal((p, m))
        if pbh_margin(A, B, C) >= MIN_PBH_MARGIN:
            break
    return state_space(A, B, C, D)


def pbh_margin(A, B, C) -> float:
    """Smallest singular value of ``[A - lam I, B]`` and ``[A - lam I; C]``
    over the eigenvalues ``lam`` (zero for a non-minimal realization)."""
    n = A.shape[0]
    out = np.inf
    for lam in np.linalg.eigvals(A) if n else []:
        shifted = A - lam * np.eye(n)
        for M in (np.hstack([shifted, B]), np.vstack([shifted, C])):
            out = min(out, np.linalg.svd(M, compute_uv=False)[-1])
    return float(out)


# -- serialization ----------------------------------------------------------------------------


class _Float(float):
    pass


def _fmt_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValidationError("cannot serialize non-finite numbers")
    s = format(float(x), ".17g")
    if s == "-0":
        s = "-0.0"
    return s


def _cx(v) -> list:
    v = complex(v)
    return [_Float(v.real), _Float(v.imag)]


def _cx_list(a) -> list:
    return [_cx(v) for v in np.asarray(a).ravel()]


def _cx_matrix(a) -> list:
    a = np.asarray(a)
    return [[_cx(v) for v in row] for row in a]


def _terms_json(e: ExpSum) -> list:
    return [{"lambda": _Float(lam), "coeff": _cx(c)} for lam, c in e.terms.items()]


def _symbol_json(v):
    if isinstance(v, Rational):
        return {"num": _cx_list(v.num), "den": _cx_list(v.den)}
    if isinstance(v, ExpSum):
        return _terms_json(v)
    if isinstance(v, CDScalar):
        return {"ap": _terms_json(v.ap),
                "l1": [{"lambda": _Float(mu), "num": _cx_list(n), "den": _cx_list(d)} for mu, n, d in v.l1]}
    if isinstance(v, MultiPoly):
        return [{"exps": list(e), "coeff": _cx(c)} for e, c in v.terms.items()]
    raise TypeError(type(v))


def _json_block(blk, sampled):
    if sampled is not None:
        return [[[_cx(v) for v in row] for row in mat] for mat in np.asarray(blk)]
    return [[_symbol_json(v) for v in row] for row in blk]


def _grid_json(g: FrequencyGrid):
    return {"size": g.size, "radius": _Float(g.radius)}


def to_document(P: PlantModel) -> Dict[str, Any]:
    doc: Dict[str, Any] = {"algebra": P.algebra.name}
    if P.algebra.name == "polydisk":
        doc["n"] = P.algebra.arity
    doc.update({"kind": P.kind, "p": P.p, "m": P.m})
    b = P.body
    if isinstance(b, StateSpace):
        body = {"A": _cx_matrix(b.A), "B": _cx_matrix(b.B), "C": _cx_matrix(b.C), "D": _cx_matrix(b.D),
                "n": b.order}
    elif isinstance(b, RationalMatrix):
        body = {"entries": [[{"num": _cx_list(n), "den": _cx_list(d)} for n, d in row] for row in b.entries]}
    elif isinstance(b, ExpPolyQuotient):
        body = {"entries": [[{"num": _terms_json(n), "den": _terms_json(d)} for n, d in row]
                            for row in b.entries]}
    else:
        body = {}
        if b.sampled is not None:
            body["sampled"] = _grid_json(b.sampled)
        for name in FACTOR_BLOCKS:
            body[name] = _json_block(b.blocks[name], b.sampled)
        bez = [k for k in BEZOUT_BLOCKS if k in b.blocks]
        if bez:
            body["bezout"] = {k: _json_block(b.blocks[k], b.sampled) for k in bez}
        if b.residuals is not None:
            body["residuals"] = {"r_right": _Float(b.residuals[0]), "r_left": _Float(b.residuals[1]),
                                 "r_double": _Float(b.residuals[2])}
    doc["body"] = body
    return doc


def _dump(obj) -> str:
    if isinstance(obj, _Float):
        return _fmt_float(obj)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_dump(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_dump(v) for v in obj) + "]"
    raise TypeError(type(obj))


def serialize_plant(P: PlantModel) -> str:
    """Canonical text form; :func:`parse_plant` inverts it exactly."""
    return _dump(to_document(P)) + "\n"


# -- parsing --------------------------------------------------------------------------------------


def _need(d, key, where):
    if not isinstance(d, dict) or key not in d:
        raise ValidationError(f"{where}: missing field {key!r}")
    return d[key]


def _parse_cx(v, where) -> complex:
    if isinstance(v, bool):
        raise ValidationError(f"{where}: expected a number")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(t, (int, float)) and not isinstance(t, bool)
                                                   for t in v):
        return complex(v[0], v[1])
    raise ValidationError(f"{where}: expected a number or [re, im], got {v!r}")


def _parse_cx_list(v, where) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ValidationError(f"{where}: expected a non-empty coefficient list")
    return np.array([_parse_cx(x, f"{where}[{i}]") for i, x in enumerate(v)], dtype=complex)


def _parse_matrix(v, rows, cols, where) -> np.ndarray:
    if not isinstance(v, list) or len(v) != rows:
        raise ValidationError(f"{where}: expected {rows} rows")
    out = np.zeros((rows, cols), dtype=complex)
    for i, row in enumerate(v):
        if not isinstance(row, list) or len(row) != cols:
            raise ValidationError(f"{where}[{i}]: expected {cols} columns")
        for j, x in enumerate(row):
            out[i, j] = _parse_cx(x, f"{where}[{i}][{j}]")
    return out


def _parse_terms(v, where) -> ExpSum:
    if not isinstance(v, list):
        raise ValidationError(f"{where}: expected a list of terms")
    pairs = []
    for i, t in enumerate(v):
        lam = _need(t, "lambda", f"{where}[{i}]")
        if not isinstance(lam, (int, float)) or isinstance(lam, bool):
            raise ValidationError(f"{where}[{i}].lambda must be a real number")
        pairs.append((float(lam), _parse_cx(_need(t, "coeff", f"{where}[{i}]"), f"{where}[{i}].coeff")))
    return ExpSum.from_pairs(pairs)


def _parse_symbol(algebra: AlgebraTag, v, where):
    kind = algebra.name
    if kind == "disk":
        return Rational(_parse_cx_list(_need(v, "num", where), f"{where}.num"),
                        _parse_cx_list(_need(v, "den", where), f"{where}.den"))
    if kind == "ap":
        return _parse_terms(v, where)
    if kind == "cd":
        ap = _parse_terms(_need(v, "ap", where), f"{where}.ap")
        l1 = []
        for i, t in enumerate(v.get("l1", [])):
            w = f"{where}.l1[{i}]"
            lam = _need(t, "lambda", w)
            l1.append((float(lam), _parse_cx_list(_need(t, "num", w), f"{w}.num"),
                       _parse_cx_list(_need(t, "den", w), f"{w}.den")))
        try:
            return CDScalar(ap, l1)
        except ValueError as exc:
            raise ValidationError(f"{where}: {exc}") from exc
    terms = {}
    if not isinstance(v, list):
        raise ValidationError(f"{where}: expected a list of monomials")
    for i, t in enumerate(v):
        exps = _need(t, "exps", f"{where}[{i}]")
        if not isinstance(exps, list) or not all(isinstance(e, int) for e in exps):
            raise ValidationError(f"{where}[{i}].exps must be a list of integers")
        key = tuple(exps)
        terms[key] = terms.get(key, 0j) + _parse_cx(_need(t, "coeff", f"{where}[{i}]"), f"{where}[{i}].coeff")
    try:
        return MultiPoly(algebra.arity, terms)
    except ValueError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def _parse_block(algebra, v, sampled, where):
    if sampled is not None:
        if not isinstance(v, list):
            raise ValidationError(f"{where}: expected sample matrices")
        return [[[_parse_cx(x, where) for x in row] for row in mat] for mat in v]
    if not isinstance(v, list) or not v or not all(isinstance(r, list) and r for r in v):
        raise ValidationError(f"{where}: expected a non-empty matrix of entries")
    if len({len(r) for r in v}) != 1:
        raise ValidationError(f"{where}: ragged matrix")
    return [[_parse_symbol(algebra, x, f"{where}[{i}][{j}]") for j, x in enumerate(row)]
            for i, row in enumerate(v)]


def from_document(doc: Dict[str, Any]) -> PlantModel:
    if not isinstance(doc, dict):
        raise ValidationError("plant document must be a JSON object")
    name = _need(doc, "algebra", "plant")
    if name not in ALGEBRAS:
        raise ValidationError(f"unknown algebra tag {name!r}")
    try:
        algebra = AlgebraTag(name, doc.get("n") if name == "polydisk" else None)
    except (ValueError, TypeError) as exc:
        raise ValidationError(str(exc)) from exc
    kind = _need(doc, "kind", "plant")
    if kind not in KINDS:
        raise ValidationError(f"unknown plant kind {kind!r}")
    p, m = _need(doc, "p", "plant"), _need(doc, "m", "plant")
    if not (isinstance(p, int) and isinstance(m, int)) or p < 1 or m < 1:
        raise ValidationError("p and m must be positive integers")
    body = _need(doc, "body", "plant")
    if kind == "state_space":
        n = body.get("n") if isinstance(body, dict) else None
        if n is None:
            n = len(_need(body, "A", "body"))
        A = _parse_matrix(_need(body, "A", "body"), n, n, "body.A") if n else np.zeros((0, 0), complex)
        B = _parse_matrix(_need(body, "B", "body"), n, m, "body.B") if n else np.zeros((0, m), complex)
        C = _parse_matrix(_need(body, "C", "body"), p, n, "body.C") if n else np.zeros((p, 0), complex)
        D = _parse_matrix(_need(body, "D", "body"), p, m, "body.D")
        P = PlantModel(algebra, p, m, StateSpace(_carr(A), _carr(B), _carr(C), _carr(D)))
    elif kind == "rational":
        ents = _need(body, "entries", "body")
        rows = []
        for i, row in enumerate(ents if isinstance(ents, list) else []):
            rows.append(tuple(
                (_carr(_parse_cx_list(_need(e, "num", f"entries[{i}][{j}]"), f"entries[{i}][{j}].num"), 1),
                 _carr(_parse_cx_list(_need(e, "den", f"entries[{i}][{j}]"), f"entries[{i}][{j}].den"), 1))
                for j, e in enumerate(row)))
        if not rows:
            raise ValidationError("rational body needs entries")
        P = PlantModel(algebra, p, m, RationalMatrix(tuple(rows)))
    elif kind == "exp_poly":
        ents = _need(body, "entries", "body")
        rows = tuple(
            tuple((_parse_terms(_need(e, "num", f"entries[{i}][{j}]"), f"entries[{i}][{j}].num"),
                   _parse_terms(_need(e, "den", f"entries[{i}][{j}]"), f"entries[{i}][{j}].den"))
                  for j, e in enumerate(row))
            for i, row in enumerate(ents))
        P = PlantModel(algebra, p, m, ExpPolyQuotient(rows))
    else:
        sampled = None
        if "sampled" in body:
            g = body["sampled"]
            try:
                sampled = FrequencyGrid(algebra, int(_need(g, "size", "sampled")),
                                        float(g.get("radius", 200.0)))
            except ValueError as exc:
                raise ValidationError(str(exc)) from exc
        blocks = {k: _parse_block(algebra, _need(body, k, "body"), sampled, f"body.{k}")
                  for k in FACTOR_BLOCKS}
        for k, v in (body.get("bezout") or {}).items():
            blocks[k] = _parse_block(algebra, v, sampled, f"body.bezout.{k}")
        res = body.get("residuals")
        residuals = None
        if res is not None:
            residuals = (float(_need(res, "r_right", "residuals")), float(_need(res, "r_left", "residuals")),
                         float(_need(res, "r_double", "residuals")))
        return explicit_factors(algebra, blocks, residuals, sampled)
    validate(P)
    return P


def parse_plant(text: str) -> PlantModel:
    """Parse and validate a plant document.

    Raises :class:`~numetric.errors.PlantSyntaxError` (with a character
    offset) on malformed JSON and :class:`~numetric.errors.ValidationError`
    on structural problems.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlantSyntaxError(f"malformed plant document: {exc.msg} (line {exc.lineno}, column {exc.colno})",
                               exc.pos) from exc
    try:
        return from_document(doc)
    except (TypeError, AttributeError, KeyError) as exc:
        raise ValidationError(f"malformed plant document: {exc}") from exc


def load_plant(path) -> PlantModel:
    with open(path, encoding="utf-8") as fh:
        return parse_plant(fh.read())


def save_plant(P: PlantModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_plant(P))
