import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from numetric import factorization as fz
from numetric import freqdomain as fd
from numetric import metric as mt
from numetric import plants as pl
from numetric.errors import SingularLoop, ValidationError
from numetric.symbols import CDScalar, ExpSum

GRID = fd.circle_grid(1024)
R2 = 1 / math.sqrt(2)


def c(k):
    return pl.constant([[k]])


INV_Z = pl.siso((1.0,), (0.0, 1.0))


def test_distance_examples():
    P = pl.random_plant(1, 1, 3, 4)
    r = mt.nu_distance(P, P, GRID)
    assert r.branch == mt.METRIC and r.value <= 1e-12
    r = mt.nu_distance(c(0), c(1), GRID)
    assert r.branch == mt.METRIC and r.value == pytest.approx(R2, abs=1e-12)
    r = mt.nu_distance(c(0), INV_Z, GRID)
    assert r.branch == mt.DEGENERATE and r.value == 1.0 and not r.winding_condition_met


def test_dimension_mismatch():
    with pytest.raises(ValidationError):
        mt.nu_distance(c(0), pl.constant([[0, 0]]), GRID)


def test_closed_loop_examples():
    assert np.allclose(mt.closed_loop(c(1), c(0), GRID).samples, [[0, 1], [0, 1]])
    assert np.allclose(mt.closed_loop(c(0), c(0), GRID).samples, [[0, 0], [0, 1]])
    z = GRID.points[:, None, None]
    H = mt.closed_loop(INV_Z, c(2), GRID).samples
    ref = np.concatenate([np.concatenate([-2 + 0 * z, 1 + 0 * z], 2), np.concatenate([-2 * z, z], 2)], 1) / (z - 2)
    assert np.abs(H - ref).max() <= 1e-12


def test_singular_loop():
    # C P = 1 identically: I - C P vanishes everywhere
    with pytest.raises(SingularLoop):
        mt.closed_loop(c(1), c(1), GRID)


def test_stabilizes_examples():
    assert mt.stabilizes(INV_Z, c(2), GRID).stabilizes
    ev = mt.stabilizes(INV_Z, c(0), GRID)
    assert not ev.stabilizes and ev.index.value == 1
    assert mt.stabilizes(c(0), c(0), GRID).stabilizes


def test_margin_examples():
    assert mt.stability_margin(c(1), c(0), GRID).mu == pytest.approx(R2, abs=1e-12)
    r = mt.stability_margin(INV_Z, c(2), GRID)
    assert r.mu == pytest.approx(1 / math.sqrt(10), abs=1e-10)
    assert r.mu * r.h_norm == pytest.approx(1.0, abs=1e-8)
    r = mt.stability_margin(INV_Z, c(0), GRID)
    assert r.mu == 0.0 and not r.stabilizes and r.h_norm is None
    # the zero loop reaches the upper bound
    assert mt.stability_margin(c(0), c(0), GRID).mu == pytest.approx(1.0)


def test_certificate_examples():
    r = mt.certify_robust(INV_Z, c(2), pl.siso((1.1,), (0.0, 1.0)), GRID)
    assert r.certified
    assert r.dnu == pytest.approx(0.1 / math.sqrt(4.42), abs=1e-9)
    assert r.actual_mu1 == pytest.approx(1.2 / math.sqrt(11.05), abs=1e-9)
    assert r.predicted_margin_lower_bound == pytest.approx(0.27074, abs=1e-5)
    P = pl.random_plant(1, 1, 2, 9)
    C = fz.stabilizing_controller(P)
    r = mt.certify_robust(P, C, P, GRID)
    assert r.certified and r.dnu <= 1e-12
    assert r.predicted_margin_lower_bound == pytest.approx(r.mu0, abs=1e-9)
    r = mt.certify_robust(c(0), c(0), INV_Z, GRID)
    assert not r.certified and r.dnu == 1.0 and r.actual_mu1 is None


def test_axiom_suite_examples():
    r = mt.metric_axiom_suite([c(0), c(1), c(5)], grid=GRID)
    assert r.passed
    assert r.distances[1, 2] == pytest.approx(4 / math.sqrt(52), abs=1e-12)
    r = mt.metric_axiom_suite([c(1)] * 3, grid=GRID)
    assert r.passed and np.abs(r.distances).max() <= 1e-12
    with pytest.raises(ValidationError):
        mt.metric_axiom_suite([c(1), c(2)], grid=GRID)


def test_axiom_suite_parallel_matches_serial():
    fam = [pl.random_plant(1, 1, k % 3, k) for k in range(5)]
    a = mt.metric_axiom_suite(fam, grid=GRID)
    b = mt.metric_axiom_suite(fam, grid=GRID, parallel=True)
    assert np.array_equal(a.distances, b.distances)


@given(st.integers(0, 10**6), st.sampled_from([(1, 1), (2, 2), (2, 1)]))
def test_distance_invariants(seed, shape):
    P1 = pl.random_plant(*shape, 3, seed)
    P2 = pl.random_plant(*shape, 3, seed + 1)
    a, b = mt.nu_distance(P1, P2, GRID), mt.nu_distance(P2, P1, GRID)
    assert 0.0 <= a.value <= 1 + 1e-9
    assert abs(a.value - b.value) <= 1e-7
    assert a.det_invertible == b.det_invertible
    if a.index is not None and b.index is not None:
        assert a.index.value == -b.index.value


@given(st.integers(0, 10**6))
def test_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    P1, P2 = pl.random_plant(2, 2, 2, seed), pl.random_plant(2, 2, 2, seed + 7)
    F1, F2 = mt.graph_factors(P1, GRID), mt.graph_factors(P2, GRID)
    U = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))[0]
    base = mt.nu_distance(P1, P2, GRID, factors=(F1, F2))
    moved = mt.nu_distance(P1, P2, GRID, factors=(F1.right_multiply(U), F2))
    assert abs(base.value - moved.value) <= 1e-9 and base.branch == moved.branch


@given(st.integers(0, 10**6))
def test_pointwise_singular_value_identity(seed):
    P1, P2 = pl.random_plant(2, 1, 3, seed), pl.random_plant(2, 1, 3, seed + 1)
    G1 = mt.graph_factors(P1, GRID).G
    F2 = mt.graph_factors(P2, GRID)
    a = np.linalg.svd(fd.compose(fd.involute(F2.G), G1).samples, compute_uv=False)[:, -1]
    b = np.linalg.svd(fd.compose(F2.Gtilde, G1).samples, compute_uv=False)[:, 0]
    assert np.abs(a**2 + b**2 - 1).max() <= 1e-8


@given(st.integers(0, 10**6))
def test_margin_properties(seed):
    P = pl.random_plant(1 + seed % 2, 1, 3, seed)
    C = fz.stabilizing_controller(P)
    r = mt.stability_margin(P, C, GRID)
    assert r.stabilizes and 0 < r.mu <= 1 + 1e-9
    assert abs(r.mu * r.h_norm - 1) <= 1e-6
    assert abs(r.mu - mt.stability_margin(C, P, GRID).mu) <= 1e-8


def ap_plant(n, d):
    """Scalar AP plant with factors ``N = Nt = n``, ``D = Dt = d``."""
    return pl.explicit_factors(fd.AP, {"N": [[n]], "D": [[d]], "Nt": [[n]], "Dt": [[d]]})


def test_ap_plants():
    zero = ap_plant(ExpSum(), ExpSum.const(1.0))
    shift = ap_plant(ExpSum({1.0: R2}), ExpSum.const(R2))
    r = mt.nu_distance(zero, shift)
    assert r.branch == mt.METRIC and r.value == pytest.approx(R2, abs=1e-9)
    delay_inv = ap_plant(ExpSum.const(R2), ExpSum({1.0: R2}))
    r = mt.nu_distance(zero, delay_inv)
    assert r.branch == mt.DEGENERATE and r.index.value == pytest.approx(1.0)


def test_cd_plants():
    zero = pl.explicit_factors(fd.CD, {"N": [[CDScalar()]], "D": [[CDScalar.const(1.0)]],
                                       "Nt": [[CDScalar()]], "Dt": [[CDScalar.const(1.0)]]})
    one = pl.explicit_factors(fd.CD, {k: [[CDScalar.const(R2)]] for k in ("N", "D", "Nt", "Dt")})
    r = mt.nu_distance(zero, one)
    assert r.branch == mt.METRIC and r.value == pytest.approx(R2, abs=1e-9)
    assert r.index.is_identity()


def test_result_json_round():
    r = mt.nu_distance(c(0), c(1), GRID)
    doc = r.to_json()
    assert doc["branch"] == "Metric" and doc["index"] == {"kind": "int", "value": 0}
