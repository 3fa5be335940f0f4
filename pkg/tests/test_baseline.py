import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rbl.baseline import ls_solve, ridge_solve, wls_solve
from rbl.errors import SingularSystemError
from rbl.geometry import PoseParams
from rbl.measurement import LinearSystem, build_position_system, ground_truth_unknowns, simulate


def _system(rng, M=10, K=4, n0=None):
    G = rng.standard_normal((M, K))
    y = rng.standard_normal(M)
    return LinearSystem(y, {"x": G}, 1.0 if n0 is None else n0)


def test_ls_noiseless_position(cube):
    pose = PoseParams([0.2, 0.1, -0.3], [2.0, -1.0, 0.5])
    meas = simulate(cube, pose)
    X, _ = ground_truth_unknowns(cube, pose)
    for n in range(cube.N):
        s = build_position_system(meas, cube, n)
        np.testing.assert_allclose(ls_solve(s).estimate, X[:, n], atol=1e-9)
        np.testing.assert_allclose(wls_solve(s).estimate, X[:, n], atol=1e-9)


def test_ls_square_system(rng):
    G = rng.standard_normal((4, 4)) + 4 * np.eye(4)
    y = rng.standard_normal(4)
    rep = ls_solve(LinearSystem(y, {"x": G}, 1.0))
    np.testing.assert_allclose(rep.estimate, np.linalg.solve(G, y), rtol=1e-9)
    assert rep.residual_norm < 1e-9


def test_ls_residual_orthogonal(rng):
    s = _system(rng, M=20, K=5)
    rep = ls_solve(s)
    r = s.y - s.matrix @ rep.estimate
    np.testing.assert_allclose(s.matrix.T @ r, 0.0, atol=1e-9)
    assert rep.residual_norm == pytest.approx(np.linalg.norm(r))
    assert rep.condition >= 1.0


def test_wls_uniform_weights_equal_ls(rng):
    s = _system(rng, n0=3.7)
    np.testing.assert_allclose(wls_solve(s).estimate, ls_solve(s).estimate, rtol=1e-12)


def test_wls_huge_noise_row_is_ignored(rng):
    s = _system(rng)
    n0 = np.ones(10)
    n0[4] = 1e30
    heavy = LinearSystem(s.y, s.blocks, n0)
    keep = np.arange(10) != 4
    reduced = LinearSystem(s.y[keep], {"x": s.matrix[keep]}, 1.0)
    np.testing.assert_allclose(wls_solve(heavy).estimate, ls_solve(reduced).estimate, atol=1e-9)


def test_rank_deficient_raises(rng):
    G = rng.standard_normal((6, 3))
    G = np.column_stack([G, G[:, 0] + G[:, 1]])
    s = LinearSystem(rng.standard_normal(6), {"x": G}, 1.0)
    with pytest.raises(SingularSystemError):
        ls_solve(s)
    with pytest.raises(SingularSystemError):
        wls_solve(s)
    # the prior regularizes the same system
    assert np.all(np.isfinite(ridge_solve(s, 1.0).estimate))


def test_ridge_limits(rng):
    s = _system(rng, n0=rng.uniform(0.5, 2.0, 10))
    np.testing.assert_allclose(ridge_solve(s, 1e12).estimate, wls_solve(s).estimate, rtol=1e-6)
    np.testing.assert_allclose(ridge_solve(s, 1e-14).estimate, 0.0, atol=1e-10)
    np.testing.assert_allclose(ridge_solve(s, 1e-14, prior_mean=2.5).estimate, 2.5, atol=1e-10)


def test_ridge_per_block_prior(rng):
    G = rng.standard_normal((12, 5))
    s = LinearSystem(rng.standard_normal(12), {"a": G[:, :3], "b": G[:, 3:]}, 0.2)
    rep = ridge_solve(s, {"a": 1e-14, "b": 1e12})
    np.testing.assert_allclose(rep.block("a"), 0.0, atol=1e-10)
    # with block a pinned at zero, block b is the WLS fit of the b columns alone
    only_b = wls_solve(LinearSystem(s.y, {"b": G[:, 3:]}, 0.2))
    np.testing.assert_allclose(rep.block("b"), only_b.estimate, rtol=1e-6)
    with pytest.raises(ValueError):
        ridge_solve(s, {"a": 0.0, "b": 1.0})


@given(st.floats(1e-4, 1e3), st.floats(1e-4, 1e3))
def test_ridge_shrinkage_is_monotone(p1, p2):
    lo, hi = sorted((p1, p2))
    s = _system(np.random.default_rng(5), n0=0.3)
    a = np.linalg.norm(ridge_solve(s, lo).estimate)
    b = np.linalg.norm(ridge_solve(s, hi).estimate)
    assert a <= b + 1e-12


def test_ridge_is_continuous(rng):
    s = _system(rng)
    a = ridge_solve(s, 1.0).estimate
    b = ridge_solve(s, 1.0 + 1e-9).estimate
    assert np.max(np.abs(a - b)) < 1e-7


def test_solvers_are_pure(rng):
    s = _system(rng)
    y0 = s.y.copy()
    r1, r2 = wls_solve(s), wls_solve(s)
    np.testing.assert_array_equal(r1.estimate, r2.estimate)
    np.testing.assert_array_equal(s.y, y0)
