import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmfkit.nnls import nnls_gram, nnls_pg, nnls_solve, row_kkt

from oracles import nnls_enumerate


def quad(H, X, W):
    return 0.5 * np.sum((X - W @ H) ** 2)


def random_instance(rng, r, p=None, n=None):
    p = p or int(rng.integers(1, 6))
    n = n or int(rng.integers(r, r + 8))
    H = rng.standard_normal((r, n)) + 0.5
    X = rng.standard_normal((p, n)) * 2
    return H, X


def test_identity_gram(rng):
    X = rng.uniform(size=(4, 3))
    sol = nnls_solve(np.eye(3), X)
    np.testing.assert_allclose(sol.solution, X, rtol=1e-14)
    assert sol.max_residual <= 1e-10


def test_scalar_example():
    sol = nnls_solve(np.array([[1.0, 1.0]]), np.array([[1.0, 3.0]]))
    np.testing.assert_allclose(sol.solution, [[2.0]], rtol=1e-14)


def grid_search_r2(H, x, step=1e-3, hi=3.0):
    g = np.arange(0, hi + step / 2, step)
    a, b = np.meshgrid(g, g, indexing="ij")
    R = x[None, None, :] - a[..., None] * H[0] - b[..., None] * H[1]
    f = np.sum(R**2, axis=-1)
    i, j = np.unravel_index(np.argmin(f), f.shape)
    return np.array([g[i], g[j]])


def r2_instances():
    """r=2 problems whose unconstrained optimum has a negative coordinate."""
    out = []
    rng = np.random.default_rng(7)
    while len(out) < 5:
        H = rng.uniform(size=(2, 6))
        x = rng.uniform(size=6) * 2
        free = np.linalg.lstsq(H.T, x, rcond=None)[0]
        if free.min() < 0 and free.max() < 3:
            out.append((H, x))
    return out


@pytest.mark.parametrize("H,x", r2_instances())
def test_grid_search_r2(H, x):
    w = nnls_solve(H, x[None, :]).solution[0]
    assert w.min() == 0.0
    np.testing.assert_allclose(w, grid_search_r2(H, x), atol=2e-3)


@pytest.mark.parametrize("warm", [False, True])
def test_enumeration_oracle(rng, warm):
    for _ in range(50):
        r = int(rng.integers(1, 5))
        H, X = random_instance(rng, r)
        W0 = rng.uniform(size=(X.shape[0], r)) * (rng.uniform(size=(X.shape[0], r)) > 0.5)
        sol = nnls_solve(H, X, warm_start=W0 if warm else None)
        G = H @ H.T
        for i in range(X.shape[0]):
            ref = nnls_enumerate(G, H @ X[i])
            np.testing.assert_allclose(sol.solution[i], ref, atol=1e-8)
        assert sol.solution.min() >= 0
        assert np.all(np.isfinite(sol.residual))


def test_kkt_residual_small(rng):
    H, X = random_instance(rng, 6, p=30, n=40)
    sol = nnls_solve(H, X)
    assert sol.max_residual <= 1e-10 * max(1.0, np.abs(H @ X.T).max())
    np.testing.assert_allclose(sol.residual, row_kkt(H @ H.T, X @ H.T, sol.solution))


def test_singular_gram_is_handled():
    H = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0]])
    X = np.array([[2.0, 2.0, 0.0]])
    sol = nnls_solve(H, X)
    assert np.all(np.isfinite(sol.solution)) and sol.solution.min() >= 0
    assert quad(H, X, sol.solution) <= 1e-12


def test_zero_h_gives_zero():
    sol = nnls_solve(np.zeros((2, 3)), np.ones((4, 3)))
    np.testing.assert_array_equal(sol.solution, 0.0)


def test_errors():
    with pytest.raises(ValueError):
        nnls_solve(np.zeros((0, 3)), np.ones((2, 3)))
    with pytest.raises(ValueError):
        nnls_solve(np.array([[np.nan, 1.0]]), np.ones((1, 2)))
    with pytest.raises(ValueError):
        nnls_gram(np.eye(2), np.ones((3, 2)), warm_start=np.ones((2, 2)))


@given(st.integers(0, 10_000), st.integers(1, 5))
@settings(max_examples=30, deadline=None)
def test_row_permutation(seed, r):
    rng = np.random.default_rng(seed)
    H, X = random_instance(rng, r, p=7)
    perm = rng.permutation(X.shape[0])
    a = nnls_solve(H, X).solution
    b = nnls_solve(H, X[perm]).solution
    # BLAS blocking may reorder sums, so agreement is to roundoff
    np.testing.assert_allclose(a[perm], b, rtol=1e-12, atol=1e-14)


def test_deterministic(rng):
    H, X = random_instance(rng, 5, p=40)
    np.testing.assert_array_equal(nnls_solve(H, X).solution, nnls_solve(H, X).solution)


def test_rows_are_independent(rng):
    H, X = random_instance(rng, 4, p=10)
    full = nnls_solve(H, X).solution
    for i in range(10):
        np.testing.assert_allclose(nnls_solve(H, X[i:i + 1]).solution[0], full[i], atol=1e-12)


def test_pg_matches_active_set():
    for H, x in r2_instances():
        X = x[None, :]
        ref = nnls_solve(H, X).solution
        sol = nnls_pg(H, X, np.ones((1, 2)), max_inner=500)
        np.testing.assert_allclose(sol.solution, ref, atol=1e-4)


def test_pg_monotone(rng):
    H, X = random_instance(rng, 4, p=6, n=10)
    W = rng.uniform(size=(6, 4))
    vals = [quad(H, X, W)]
    for _ in range(50):
        W = nnls_pg(H, X, W, max_inner=1).solution
        vals.append(quad(H, X, W))
    assert np.all(np.diff(vals) <= 1e-12 * vals[0])


def test_pg_fixed_point_and_degenerate(rng):
    H, X = random_instance(rng, 3, p=4)
    Wopt = nnls_solve(H, X).solution
    np.testing.assert_allclose(nnls_pg(H, X, Wopt, max_inner=20).solution, Wopt, atol=1e-12)
    W0 = rng.uniform(size=(4, 3))
    np.testing.assert_array_equal(nnls_pg(np.zeros((3, X.shape[1])), X, W0).solution, W0)
    with pytest.raises(ValueError):
        nnls_pg(H, X, -W0)
