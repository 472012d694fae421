import numpy as np
import pytest
from hypothesis import given, strategies as st

from numetric import factorization as fz
from numetric import freqdomain as fd
from numetric import plants as pl
from numetric.errors import FactorizationError, NotEquivalent

GRID = fd.circle_grid(512)


@pytest.mark.parametrize("k", [-3.0, 0.5, 2.0, 7.0])
def test_constant_plant(k):
    F = fz.ncf(pl.constant([[k]]), GRID)
    s = np.sqrt(1 + k * k)
    assert np.allclose(F.N.samples, k / s, atol=1e-12)
    assert np.allclose(F.D.samples, 1 / s, atol=1e-12)


def test_zero_plant():
    F = fz.ncf(pl.zero(1, 1), GRID)
    assert np.allclose(F.N.samples, 0, atol=1e-14)
    assert np.allclose(F.D.samples, 1, atol=1e-14)
    rep = fz.verify_factors(F)
    assert rep.passed and max(rep.residuals) <= 1e-14


def test_inverse_z():
    F = fz.ncf(pl.siso((1.0,), (0.0, 1.0)), GRID)
    z = GRID.points
    assert np.allclose(F.N.samples[:, 0, 0], 1 / np.sqrt(2), atol=1e-12)
    assert np.allclose(F.D.samples[:, 0, 0], z / np.sqrt(2), atol=1e-12)
    # the witness pair is not unique; any pair satisfying the identity will do
    X, Y = F.bezout["X"].samples, F.bezout["Y"].samples
    assert np.abs(X * F.N.samples + Y * F.D.samples - 1).max() <= 1e-10


def test_unnormalized_pair_fails_verification():
    G = fd.constant(GRID, [[1.0], [1.0]])
    Gt = fd.constant(GRID, [[-1.0, 1.0]]).scale(1 / np.sqrt(2))
    rep = fz.verify_factors(fz.CoprimeFactors(G, Gt, None, False, None, None))
    assert rep.r_right == pytest.approx(1.0)
    assert not rep.passed


def test_random_order_six_plant_verifies():
    F = fz.ncf(pl.random_plant(2, 2, 6, 11), GRID)
    rep = fz.verify_factors(F)
    assert rep.passed and rep.bezout_residual <= 1e-8


@given(st.integers(0, 10**6), st.sampled_from([(1, 1), (2, 1), (1, 2), (2, 2), (3, 2)]), st.integers(0, 8))
def test_random_plants_admit_ncf(seed, shape, order):
    P = pl.random_plant(*shape, order, seed)
    rep = fz.verify_factors(fz.ncf(P, GRID))
    assert max(rep.residuals) <= 1e-8 and rep.bezout_residual <= 1e-8


def test_factors_reproduce_the_plant():
    P = pl.random_plant(2, 2, 4, 3)
    F = fz.ncf(P, GRID)
    Pv = pl.evaluate_many(P, GRID.points)
    assert np.abs(F.N.samples - Pv @ F.D.samples).max() <= 1e-9
    assert np.abs(F.Dt.samples @ Pv - F.Nt.samples).max() <= 1e-9


def test_rational_body_route():
    P = pl.to_rational(pl.random_plant(1, 1, 5, 8))
    assert fz.verify_factors(fz.ncf(P, GRID)).passed


@given(st.integers(0, 10**6), st.integers(1, 6))
def test_spectral_oracle_agrees(seed, order):
    P = pl.to_rational(pl.random_plant(1, 1, order, seed))
    (num, den), = P.body.entries[0]
    ref = fz.spectral_factors(num, den, GRID)
    F = fz.ncf(P, GRID)
    assert np.abs(F.G.samples - ref.samples).max() <= 1e-8


def test_unitary_equivalence_examples():
    F = fz.ncf(pl.random_plant(2, 2, 3, 2), GRID)
    U = fz.unitary_equivalence(F, F)
    assert np.abs(U.samples - np.eye(2)).max() <= 1e-10
    W = np.diag([np.exp(1j * np.pi / 3), 1.0])
    U = fz.unitary_equivalence(F.right_multiply(W), F)
    assert np.abs(U.samples - W).max() <= 1e-10
    with pytest.raises(NotEquivalent):
        fz.unitary_equivalence(fz.ncf(pl.zero(1, 1), GRID), fz.ncf(pl.constant([[1.0]]), GRID))


@given(st.integers(0, 10**6))
def test_scalar_singular_value_identity(seed):
    # A*A + B*B = I for the two halves of a random isometry
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
    Q = np.linalg.qr(M)[0]
    A, B = Q[:2], Q[2:]
    smin = np.linalg.svd(A, compute_uv=False)[-1]
    smax = np.linalg.svd(B, compute_uv=False)[0]
    assert smin**2 + smax**2 == pytest.approx(1.0, abs=1e-10)


def test_explicit_factors_checked():
    N = fd.constant(GRID, [[1.0]])
    bad = pl.explicit_factors(fd.DISK, {"N": N.samples, "D": N.samples, "Nt": N.samples, "Dt": N.samples},
                              sampled=GRID)
    with pytest.raises(FactorizationError):
        fz.factors(bad)


def test_stabilizing_controller_is_observer_based():
    from numetric import metric as mt
    P = pl.random_plant(2, 1, 4, 21)
    C = fz.stabilizing_controller(P)
    assert (C.p, C.m) == (1, 2)
    assert mt.stabilizes(P, C, GRID).stabilizes
