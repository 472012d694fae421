import numpy as np
import pytest
from hypothesis import given, strategies as st

from numetric import freqdomain as fd
from numetric.errors import GridError, RefinementExhausted

from conftest import scalar_on


def rand_function(grid, seed, p=2, m=2, deg=3):
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((deg + 1, p, m)) + 1j * rng.standard_normal((deg + 1, p, m))

    def fn(z):
        z = np.asarray(z, dtype=complex)
        return sum(c * z[:, None, None] ** k for k, c in enumerate(coeffs))

    return fd.sample(grid, fn)


def test_involute_constant(circle):
    f = fd.constant(circle, [[1j]])
    assert np.allclose(fd.involute(f).samples, -1j)


def test_involute_z_is_reciprocal(circle):
    f = scalar_on(circle, lambda z: z)
    z = circle.points
    assert np.allclose(fd.involute(f).samples[:, 0, 0], 1 / z, atol=1e-14)


def test_involute_stacked_constants(circle):
    f = fd.constant(circle, [[1 / np.sqrt(2)], [1 / np.sqrt(2)]])
    g = fd.involute(f)
    assert g.shape == (1, 2)
    assert np.allclose(g.samples, 1 / np.sqrt(2))


def test_compose_examples(circle):
    z = circle.points
    row = fd.sample(circle, lambda x: np.stack([np.ones_like(x), 1 / x], -1)[:, None, :] / np.sqrt(2))
    col = fd.sample(circle, lambda x: np.stack([np.full_like(x, 1.1), x], -1)[:, :, None] / np.sqrt(2.21))
    assert np.allclose(fd.compose(row, col).samples, 2.1 / np.sqrt(4.42))
    row2 = fd.sample(circle, lambda x: np.stack([-x, np.ones_like(x)], -1)[:, None, :] / np.sqrt(2))
    assert np.allclose(fd.compose(row2, col).samples[:, 0, 0], -0.1 * z / np.sqrt(4.42))
    ident = fd.identity(circle, 2)
    assert np.array_equal(fd.compose(ident, col).samples, col.samples)


def test_compose_rejects_mismatch(circle):
    with pytest.raises(GridError):
        fd.compose(fd.constant(circle, np.ones((1, 2))), fd.constant(circle, np.ones((3, 1))))
    with pytest.raises(GridError):
        fd.compose(fd.constant(circle, [[1]]), fd.constant(fd.circle_grid(64), [[1]]))


def test_sup_norm_examples(circle):
    assert fd.sup_norm(fd.constant(circle, [[2]])) == pytest.approx(2.0)
    assert fd.sup_norm(scalar_on(circle, lambda z: z)) == pytest.approx(1.0)
    f = scalar_on(circle, lambda z: -0.1 * z / np.sqrt(4.42))
    assert fd.sup_norm(f) == pytest.approx(0.047565, abs=1e-6)


def test_min_singular_examples(circle):
    assert fd.min_singular_inf(fd.constant(circle, [[2]])) == pytest.approx(2.0)
    f = scalar_on(circle, lambda z: (z - 2.2) / np.sqrt(11.05))
    assert fd.min_singular_inf(f) == pytest.approx(1.2 / np.sqrt(11.05), abs=1e-9)
    assert fd.min_singular_inf(scalar_on(circle, lambda z: z)) == pytest.approx(1.0)


def test_sharpening_brackets_grid_extrema():
    # peak of |1/(z - 1.05)| sits at z = 1 and between grid points when rotated
    grid = fd.circle_grid(64)
    f = scalar_on(grid, lambda z: 1 / (z * np.exp(-0.03j) - 1.05))
    plain = np.abs(f.samples).max()
    assert fd.sup_norm(f) >= plain
    assert fd.sup_norm(f) == pytest.approx(1 / 0.05, rel=1e-8)
    g = scalar_on(grid, lambda z: z * np.exp(-0.03j) - 1.05)
    assert fd.min_singular_inf(g) <= np.abs(g.samples).min()
    assert fd.min_singular_inf(g) == pytest.approx(0.05, rel=1e-8)


def test_refine_preserves_points():
    g = fd.circle_grid(16)
    g2 = fd.refine(lambda gr: gr.points, g)
    assert g2.size == 32
    assert np.allclose(g2.points[::2], g.points)


def test_refine_until_phase_steps_small():
    def steps_ok(vals):
        return np.max(np.abs(np.angle(vals[1:] / vals[:-1]))) < np.pi / 2

    g = fd.refine(lambda gr: gr.points ** 9, fd.circle_grid(16), steps_ok)
    # 9 * 2 pi / 32 exceeds pi / 2, so two doublings are needed
    assert g.size == 64
    tight = fd.FrequencyGrid(fd.DISK, 16, refinement_limit=1)
    with pytest.raises(RefinementExhausted):
        fd.refine(lambda gr: gr.points ** 9, tight, steps_ok)


@pytest.mark.parametrize("bad", [8, 100, 2**21])
def test_grid_size_validation(bad):
    with pytest.raises(ValueError):
        fd.circle_grid(bad)


def test_grid_layouts():
    assert np.all(np.diff(fd.circle_grid(16).angles) > 0)
    cd = fd.grid_for(fd.CD, 16)
    assert np.all(np.diff(cd.angles) > 0) and cd.npoints == 15
    ap = fd.grid_for(fd.AP, 16, radius=5.0)
    assert ap.npoints == 17 and ap.points[0] == -5.0 and ap.points[-1] == 5.0
    with pytest.raises(ValueError):
        fd.polydisk(1)


@given(st.integers(0, 10**6))
def test_involution_properties(seed):
    grid = fd.circle_grid(128)
    a, b = rand_function(grid, seed), rand_function(grid, seed + 1)
    na = fd.sup_norm(a)
    assert abs(na - fd.sup_norm(fd.involute(a))) <= 1e-12 * (1 + na)
    lhs = fd.involute(fd.compose(a, b)).samples
    rhs = fd.compose(fd.involute(b), fd.involute(a)).samples
    assert np.abs(lhs - rhs).max() <= 1e-13 * (1 + np.abs(lhs).max())
    assert fd.sup_norm(fd.compose(a, b)) <= na * fd.sup_norm(b) + 1e-9


@given(st.integers(0, 10**6))
def test_isometries_have_unit_norm(seed):
    grid = fd.circle_grid(128)
    f = rand_function(grid, seed, p=3, m=2)
    q = np.linalg.qr(f.samples)[0]
    iso = fd.MatrixFunction(grid, q)
    assert np.abs(np.conj(np.swapaxes(q, 1, 2)) @ q - np.eye(2)).max() < 1e-10
    assert fd.sup_norm(iso) == pytest.approx(1.0, abs=1e-9)


@given(st.integers(0, 10**6))
def test_singular_value_profile_ordered(seed):
    prof = fd.singular_values(rand_function(fd.circle_grid(64), seed, p=3, m=2))
    assert np.all(prof.smallest <= prof.largest)
