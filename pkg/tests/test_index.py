import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import polynomial as npoly

from numetric import freqdomain as fd
from numetric import index as ix
from numetric.errors import NonLattice, NotInvertible
from numetric.index import IndexValue
from numetric.symbols import CDScalar, ExpSum, MultiPoly

from conftest import ap_scalar, cd_scalar, scalar_on


@pytest.mark.parametrize("fn,expected", [
    (lambda z: z**3, 3),
    (lambda z: 5 + 0 * z, 0),
    (lambda z: z - 2, 0),
    (lambda z: 1 / z**2, -2),
])
def test_winding_examples(circle, fn, expected):
    assert ix.winding_number(scalar_on(circle, fn)) == expected


@pytest.mark.parametrize("n", range(-9, 10))
def test_winding_of_monomials(n):
    assert ix.winding_number(lambda z: z**n, fd.circle_grid(16)) == n


def test_winding_rejects_zero_on_circle(circle):
    with pytest.raises(NotInvertible):
        ix.winding_number(scalar_on(circle, lambda z: z - 1))


@pytest.mark.parametrize("f,expected", [
    (ExpSum({2.0: 1}), 2.0),
    (ExpSum.const(3 - 1j), 0.0),
    (ExpSum({1.0: 1, 0.0: 0.5}), 1.0),
    (ExpSum({0.5: 1, 1.5: 0.2}), 0.5),
])
def test_average_winding_examples(f, expected):
    assert ix.average_winding(f) == pytest.approx(expected, abs=1e-12)


def test_average_winding_non_lattice_estimate():
    # 1 + 0.3 e^{i sqrt2 y}: dominant constant, so the mean phase slope is 0
    f = ExpSum({0.0: 1.0, np.sqrt(2): 0.3})
    assert ix.average_winding(f) == pytest.approx(0.0, abs=1e-3)
    g = ExpSum({np.sqrt(2): 1.0, 1.0: 0.2})
    assert ix.average_winding(g) == pytest.approx(np.sqrt(2), abs=1e-3)


def test_average_winding_needs_invertible():
    with pytest.raises(NotInvertible):
        ix.average_winding(ExpSum({1.0: 1, 0.0: 1}))


@pytest.mark.parametrize("F,expected", [
    (CDScalar(ExpSum({1.0: 1})), (1.0, 0)),
    (CDScalar.const(1.0), (0.0, 0)),
    (CDScalar(ExpSum.const(2.0), [(0.0, (1.0,), (1.0, 1.0))]), (0.0, 0)),
])
def test_cd_index_examples(F, expected):
    first, second = ix.cd_index(F)
    assert first == pytest.approx(expected[0], abs=1e-12)
    assert second == expected[1]


@pytest.mark.parametrize("terms,expected", [
    ({(1, 1): 1}, 2),
    ({(0, 0): 1}, 0),
    ({(1, 0): 1, (0, 0): -3}, 0),
])
def test_polydisk_examples(terms, expected):
    grid = fd.grid_for(fd.polydisk(2), 256)
    f = MultiPoly(2, terms)
    assert ix.polydisk_index(scalar_on(grid, f)) == expected


def test_is_invertible_examples(circle):
    assert ix.is_invertible_in_S(scalar_on(circle, lambda z: z))
    assert not ix.is_invertible_in_S(scalar_on(circle, lambda z: z - 1))
    assert not ix.is_invertible_in_S(fd.constant(circle, np.diag([1.0, 1e-12])), threshold=1e-9)


def test_index_of_examples(circle):
    assert ix.index_of(scalar_on(circle, lambda z: z**2)) == IndexValue("int", 2)
    assert ix.index_of(ap_scalar(ExpSum({3.0: 1}))).value == pytest.approx(3.0)
    assert ix.index_of(cd_scalar(CDScalar.const(1.0))).is_identity()


def test_index_of_matrix_uses_determinant(circle):
    f = fd.sample(circle, lambda z: np.stack([np.stack([z, 0 * z], -1), np.stack([0 * z + 3, z**2], -1)], 1))
    assert ix.index_of(f).value == 3


def test_homotopy_examples(circle):
    assert ix.homotopy_index_check(lambda t: fd.constant(circle, [[(1 - t) * 2 + 3 * t]]))
    assert ix.homotopy_index_check(lambda t: scalar_on(circle, lambda z: z * (1 + t)))
    with pytest.raises(NotInvertible) as err:
        ix.homotopy_index_check(lambda t: scalar_on(circle, lambda z: z - 2 * t), steps=8)
    assert err.value.where == pytest.approx(0.5)


def random_poly(rng, deg):
    """Polynomial with roots kept away from the unit circle, and its zero count."""
    r = np.where(rng.random(deg) < 0.5, rng.uniform(0.1, 0.8, deg), rng.uniform(1.25, 3, deg))
    roots = r * np.exp(2j * np.pi * rng.random(deg))
    return npoly.polyfromroots(roots), int(np.sum(np.abs(roots) < 1))


@given(st.integers(0, 10**6))
def test_argument_principle_oracle(seed):
    rng = np.random.default_rng(seed)
    num, zin = random_poly(rng, int(rng.integers(0, 5)))
    den, pin = random_poly(rng, int(rng.integers(0, 5)))
    f = scalar_on(fd.circle_grid(256), lambda z: npoly.polyval(z, num) / npoly.polyval(z, den))
    assert ix.winding_number(f) == zin - pin


@given(st.integers(0, 10**6))
def test_disk_group_laws(seed):
    rng = np.random.default_rng(seed)
    a, _ = random_poly(rng, 3)
    b, _ = random_poly(rng, 2)
    grid = fd.circle_grid(256)
    f = scalar_on(grid, lambda z: npoly.polyval(z, a))
    g = scalar_on(grid, lambda z: npoly.polyval(z, b))
    assert ix.index_of(fd.compose(f, g)) == ix.index_of(f) + ix.index_of(g)
    assert ix.index_of(fd.involute(f)) == -ix.index_of(f)
    eps = 0.09 * np.abs(f.samples).min()
    e = scalar_on(grid, lambda z: eps * z**5)
    assert ix.index_of(f + e) == ix.index_of(f)


def random_lattice_expsum(rng):
    """Invertible sum with one dominant term on the lattice 0.5 Z."""
    k = int(rng.integers(-4, 5))
    terms = {0.5 * k: 2.0}
    for j in rng.integers(-4, 5, size=2):
        if j != k:
            terms[0.5 * j] = terms.get(0.5 * j, 0) + 0.4 * np.exp(2j * np.pi * rng.random())
    return ExpSum(terms), 0.5 * k


@given(st.integers(0, 10**6))
def test_ap_group_laws(seed):
    rng = np.random.default_rng(seed)
    (f, wf), (g, wg) = random_lattice_expsum(rng), random_lattice_expsum(rng)
    F, G = ap_scalar(f), ap_scalar(g)
    assert ix.index_of(F).value == pytest.approx(wf, abs=1e-9)
    assert ix.index_of(fd.compose(F, G)).value == pytest.approx(wf + wg, abs=1e-9)
    assert ix.index_of(fd.involute(F)).value == pytest.approx(-wf, abs=1e-9)
    # lattice reduction: h times the circle winding of the Laurent polynomial
    lo, coeffs = f.laurent(0.5)
    circ = ix.winding_number(lambda z: z**lo * npoly.polyval(z, coeffs), fd.circle_grid(256))
    assert ix.average_winding(f) == pytest.approx(0.5 * circ, abs=1e-9)


@given(st.integers(0, 10**6))
def test_cd_group_laws(seed):
    rng = np.random.default_rng(seed)
    (f, wf), (g, wg) = random_lattice_expsum(rng), random_lattice_expsum(rng)
    a = rng.uniform(0.5, 2)
    F = CDScalar(f, [(0.0, (0.3,), (a, 1.0))])
    G = CDScalar(g)
    first, second = ix.cd_index(F * G)
    a1, a2 = ix.cd_index(F)
    b1, b2 = ix.cd_index(G)
    assert first == pytest.approx(a1 + b1, abs=1e-9) and second == a2 + b2
    c1, c2 = ix.cd_index(F.conj())
    assert c1 == pytest.approx(-a1, abs=1e-9) and c2 == -a2


@pytest.mark.parametrize("lam", [-2.0, 0.0, 1.5, 3.0])
def test_cd_pure_exponential(lam):
    assert ix.cd_index(CDScalar(ExpSum({lam: 1.0}))) == (lam, 0)


@pytest.mark.parametrize("exps,expected", [((1, 0), 1), ((2, 3), 5), ((0, -1), -1), ((1, 1, 1), 3)])
def test_polydisk_monomials(exps, expected):
    grid = fd.grid_for(fd.polydisk(len(exps)), 64)
    assert ix.polydisk_index(scalar_on(grid, MultiPoly(len(exps), {exps: 1}))) == expected


@given(st.integers(0, 10**6))
def test_homotopy_invariance_on_random_paths(seed):
    rng = np.random.default_rng(seed)
    a, _ = random_poly(rng, 3)
    b, _ = random_poly(rng, 3)
    grid = fd.circle_grid(256)
    # the straight path between two polynomials with the same zero count stays invertible
    # exactly when no intermediate polynomial vanishes on the circle; test the invariant
    # along the scaling path t -> (1 + t) f(z) (1 + t z / 4), which never vanishes
    path = lambda t: scalar_on(grid, lambda z: (1 + t) * npoly.polyval(z, a) * (1 + t * z / 4))
    assert ix.homotopy_index_check(path, steps=6)


def test_index_value_json_and_kinds():
    assert IndexValue("realint", (0.0, 0)).is_identity()
    assert IndexValue("int", 3).to_json() == {"kind": "int", "value": 3}
