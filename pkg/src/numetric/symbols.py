"""Symbolic scalar functions: finite exponential sums, their L1-perturbed
variant on the imaginary axis, rationals on the circle and polynomials on
the polydisk.

Only :class:`ExpSum` and :class:`CDScalar` form a closed algebra (``+ - *``
and conjugation); the index of an AP or CD determinant is computed from
that exact representation. :class:`Rational` and :class:`MultiPoly` are
evaluation-only carriers used by explicit factor files.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from numbers import Number
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

_FREQ_DIGITS = 12


def _key(lam: float) -> float:
    k = round(float(lam), _FREQ_DIGITS)
    return 0.0 if k == 0 else k


class ExpSum:
    """Finite sum ``sum_k c_k exp(i lambda_k y)`` on the real line."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[float, complex]] = None):
        clean: Dict[float, complex] = {}
        for lam, c in (terms or {}).items():
            k = _key(lam)
            clean[k] = clean.get(k, 0j) + complex(c)
        self.terms = {k: c for k, c in sorted(clean.items()) if c != 0}

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[float, complex]]) -> "ExpSum":
        out: Dict[float, complex] = {}
        for lam, c in pairs:
            k = _key(lam)
            out[k] = out.get(k, 0j) + complex(c)
        return cls(out)

    @classmethod
    def const(cls, c: complex) -> "ExpSum":
        return cls({0.0: c})

    def __repr__(self):
        body = " + ".join(f"({c:.6g})e^(i{lam:g}y)" for lam, c in self.terms.items())
        return f"ExpSum({body or '0'})"

    def __eq__(self, other):
        if isinstance(other, Number):
            other = ExpSum.const(other)
        return isinstance(other, ExpSum) and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    # -- algebra --------------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, ExpSum):
            return other
        if isinstance(other, Number):
            return ExpSum.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for lam, c in other.terms.items():
            out[lam] = out.get(lam, 0j) + c
        return ExpSum(out)

    __radd__ = __add__

    def __neg__(self):
        return ExpSum({lam: -c for lam, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return ExpSum({lam: c * other for lam, c in self.terms.items()})
        if isinstance(other, CDScalar):
            return NotImplemented
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: Dict[float, complex] = {}
        for l1, c1 in self.terms.items():
            for l2, c2 in other.terms.items():
                k = _key(l1 + l2)
                out[k] = out.get(k, 0j) + c1 * c2
        return ExpSum(out)

    __rmul__ = __mul__

    def conj(self) -> "ExpSum":
        """Pointwise complex conjugate on the real line."""
        return ExpSum({-lam: np.conj(c) for lam, c in self.terms.items()})

    # -- evaluation -------------------------------------------------------------
    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape, dtype=complex)
        for lam, c in self.terms.items():
            out += c * np.exp(1j * lam * y)
        return out

    @property
    def frequencies(self):
        return list(self.terms)

    def l1_norm(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def derivative_bound(self) -> float:
        return float(sum(abs(c * lam) for lam, c in self.terms.items()))

    def lattice(self, max_den: int = 10**4, rtol: float = 1e-10) -> Optional[float]:
        """Step ``h`` with every frequency an integer multiple of ``h``, or None.

        Returns 1.0 for a constant.
        """
        lams = [lam for lam in self.terms if lam != 0.0]
        if not lams:
            return 1.0
        ref = min(abs(x) for x in lams)
        fracs = []
        for lam in lams:
            ratio = lam / ref
            fr = Fraction(ratio).limit_denominator(max_den)
            if abs(float(fr) - ratio) > rtol * max(1.0, abs(ratio)):
                return None
            fracs.append(fr)
        num = reduce(math.gcd, (abs(f.numerator) for f in fracs))
        den = reduce(lambda a, b: a * b // math.gcd(a, b), (f.denominator for f in fracs))
        h = ref * num / den
        # a huge reduced degree means the ratios are only nearly rational
        if max(abs(lam) for lam in lams) / h > max_den:
            return None
        return h

    def laurent(self, h: float) -> Tuple[int, np.ndarray]:
        """Coefficients of ``g(zeta)`` with ``f(y) = g(e^{i h y})``.

        Returns ``(lowest_power, coeffs)`` with coefficients ascending.
        """
        if not self.terms:
            return 0, np.zeros(1, dtype=complex)
        powers = {lam: int(round(lam / h)) for lam in self.terms}
        lo, hi = min(powers.values()), max(powers.values())
        coeffs = np.zeros(hi - lo + 1, dtype=complex)
        for lam, c in self.terms.items():
            coeffs[powers[lam] - lo] += c
        return lo, coeffs


def _trim(c):
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    nz = np.nonzero(c)[0]
    return c[: nz[-1] + 1] if len(nz) else np.zeros(1, dtype=complex)


def _degree(c) -> int:
    c = _trim(c)
    return len(c) - 1 if np.any(c) else -1


class CDScalar:
    """``F(iy) = F_AP(y) + sum_j r_j(iy) exp(i mu_j y)``.

    ``r_j`` are strictly proper rationals in ``s`` (ascending coefficient
    arrays) without poles on the imaginary axis, so the second sum is the
    Fourier transform of an integrable function. The first part is an
    :class:`ExpSum`.
    """

    __slots__ = ("ap", "l1")

    def __init__(self, ap: ExpSum | None = None, l1=()):
        self.ap = ap if ap is not None else ExpSum()
        terms = []
        for mu, num, den in l1:
            num, den = _trim(num), _trim(den)
            if not np.any(num):
                continue
            if _degree(num) >= _degree(den):
                raise ValueError("L1 part must be strictly proper in s")
            terms.append((_key(mu), num, den))
        self.l1 = tuple(terms)

    @classmethod
    def const(cls, c):
        return cls(ExpSum.const(c))

    def __repr__(self):
        return f"CDScalar(ap={self.ap!r}, l1_terms={len(self.l1)})"

    def _coerce(self, other):
        if isinstance(other, CDScalar):
            return other
        if isinstance(other, ExpSum):
            return CDScalar(other)
        if isinstance(other, Number):
            return CDScalar.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return CDScalar(self.ap + other.ap, self.l1 + other.l1)

    __radd__ = __add__

    def __neg__(self):
        return CDScalar(-self.ap, [(mu, -n, d) for mu, n, d in self.l1])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return CDScalar(self.ap * other, [(mu, n * other, d) for mu, n, d in self.l1])
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        l1 = []
        for mu, n, d in self.l1:
            for mu2, n2, d2 in other.l1:
                l1.append((mu + mu2, npoly.polymul(n, n2), npoly.polymul(d, d2)))
            for lam, c in other.ap.terms.items():
                l1.append((mu + lam, n * c, d))
        for mu2, n2, d2 in other.l1:
            for lam, c in self.ap.terms.items():
                l1.append((mu2 + lam, n2 * c, d2))
        return CDScalar(self.ap * other.ap, l1)

    __rmul__ = __mul__

    def conj(self) -> "CDScalar":
        def flip(c):
            return np.conj(c) * (-1.0) ** np.arange(len(c))

        return CDScalar(self.ap.conj(), [(-mu, flip(n), flip(d)) for mu, n, d in self.l1])

    def l1_part(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        s = 1j * y
        out = np.zeros(y.shape, dtype=complex)
        for mu, n, d in self.l1:
            out += npoly.polyval(s, n) / npoly.polyval(s, d) * np.exp(1j * mu * y)
        return out

    def __call__(self, y) -> np.ndarray:
        return self.ap(y) + self.l1_part(y)

    def poles_on_axis(self, tol: float = 1e-9) -> bool:
        for _, _, d in self.l1:
            if _degree(d) > 0 and np.any(np.abs(npoly.polyroots(d).real) < tol):
                return True
        return False


class Rational:
    """``num(z) / den(z)`` with ascending complex coefficients (circle symbols)."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=(1.0,)):
        self.num = _trim(num)
        self.den = _trim(den)
        if not np.any(self.den):
            raise ValueError("zero denominator")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return npoly.polyval(z, self.num) / npoly.polyval(z, self.den)


class MultiPoly:
    """Laurent polynomial in ``n`` variables, ``{exponents: coeff}``."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Dict[Tuple[int, ...], complex]):
        self.n = int(n)
        out = {}
        for e, c in terms.items():
            e = tuple(int(v) for v in e)
            if len(e) != self.n:
                raise ValueError(f"exponent {e} has wrong arity (expected {self.n})")
            out[e] = out.get(e, 0j) + complex(c)
        self.terms = {e: c for e, c in sorted(out.items()) if c != 0}

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=complex))
        out = np.zeros(len(pts), dtype=complex)
        for e, c in self.terms.items():
            out += c * np.prod(pts ** np.asarray(e), axis=1)
        return out

    def diagonal(self) -> Tuple[int, np.ndarray]:
        """Univariate Laurent coefficients of ``z -> f(z, ..., z)``."""
        if not self.terms:
            return 0, np.zeros(1, dtype=complex)
        deg = {e: sum(e) for e in self.terms}
        lo, hi = min(deg.values()), max(deg.values())
        coeffs = np.zeros(hi - lo + 1, dtype=complex)
        for e, c in self.terms.items():
            coeffs[deg[e] - lo] += c
        return lo, coeffs
