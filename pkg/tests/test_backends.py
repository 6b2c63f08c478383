"""Cross-lane equivalence: the compiled and pure-Python kernels must agree
bit-for-bit, not just to tolerance."""

import numpy as np
import pytest

from qbheat import backend

pytestmark = pytest.mark.skipif(
    "compiled" not in backend.available_backends(),
    reason="compiled kernels not built")


@pytest.fixture
def lanes():
    from qbheat import _kernels_py
    from qbheat import _core
    return _core, _kernels_py


def test_mat_mul_identical(lanes, rng):
    c, py = lanes
    a = rng.normal(size=(7, 5))
    b = rng.normal(size=(5, 9))
    assert np.array_equal(c.mat_mul(a, b), py.mat_mul(a, b))


def test_mat_exp_identical(lanes, rng):
    c, py = lanes
    for _ in range(10):
        a = rng.normal(size=(6, 6))
        assert np.array_equal(c.mat_exp(a, 0.7, 0.5, 1e-16),
                              py.mat_exp(a, 0.7, 0.5, 1e-16))


def test_lu_solve_identical(lanes, rng):
    c, py = lanes
    a = rng.normal(size=(8, 8)) + 4.0 * np.eye(8)
    rhs = rng.normal(size=(8, 3))
    assert np.array_equal(c.lu_solve(a, rhs, 1e-14),
                          py.lu_solve(a, rhs, 1e-14))


def test_eig_identical_including_vectors(lanes, rng):
    c, py = lanes
    for _ in range(10):
        a = rng.normal(size=(8, 8))
        wr_c, wi_c, vr_c, vi_c = c.eig(a, True, 100, 1e-8)
        wr_p, wi_p, vr_p, vi_p = py.eig(a, True, 100, 1e-8)
        assert np.array_equal(wr_c, wr_p)
        assert np.array_equal(wi_c, wi_p)
        assert np.array_equal(vr_c, vr_p)
        assert np.array_equal(vi_c, vi_p)


def test_csolve_identical(lanes, rng):
    c, py = lanes
    ar = rng.normal(size=(6, 6)) + 3.0 * np.eye(6)
    ai = rng.normal(size=(6, 6))
    br = rng.normal(size=6)
    bi = rng.normal(size=6)
    xr_c, xi_c = c.csolve(ar, ai, br, bi, 1e-14)
    xr_p, xi_p = py.csolve(ar, ai, br, bi, 1e-14)
    assert np.array_equal(xr_c, xr_p)
    assert np.array_equal(xi_c, xi_p)


def test_march_field_identical(lanes, rng):
    c, py = lanes
    gx = np.eye(4) + 0.05 * rng.normal(size=(4, 4))
    gy = np.eye(4) + 0.05 * rng.normal(size=(4, 4))
    z0 = rng.normal(size=4)
    assert np.array_equal(c.march_field(gx, gy, z0, 12, 11, 1e12),
                          py.march_field(gx, gy, z0, 12, 11, 1e12))


def test_eigen_field_identical(lanes, rng):
    c, py = lanes
    n = 3
    args = [rng.normal(size=n) * 0.3 for _ in range(6)]
    vr = rng.normal(size=(n, n))
    vi = rng.normal(size=(n, n))
    got_c = c.eigen_field(*args, vr, vi, 6, 7, 0.25)
    got_py = py.eigen_field(*args, vr, vi, 6, 7, 0.25)
    assert np.array_equal(got_c, got_py)


def test_heat_run_identical(lanes, rng):
    c, py = lanes
    u = rng.normal(size=(9, 8))
    assert np.array_equal(c.heat_run(u, 0.25, 50), py.heat_run(u, 0.25, 50))


def test_project_pairs_identical(lanes, rng):
    c, py = lanes
    values = rng.normal(size=(40, 5))
    src = rng.integers(0, 20, size=15).astype(np.int64)
    tgt = rng.integers(20, 40, size=15).astype(np.int64)
    p = rng.normal(size=(5, 5))
    pred_c, err_c = c.project_pairs(values, src, tgt, p)
    pred_p, err_p = py.project_pairs(values, src, tgt, p)
    assert np.array_equal(pred_c, pred_p)
    assert err_c == err_p


def test_accumulate_normal_identical(lanes, rng):
    c, py = lanes
    values = rng.normal(size=(30, 4))
    i_idx = rng.integers(0, 30, size=25).astype(np.int64)
    o_idx = rng.integers(0, 30, size=25).astype(np.int64)
    g_c, r_c = c.accumulate_normal(values, i_idx, o_idx)
    g_p, r_p = py.accumulate_normal(values, i_idx, o_idx)
    assert np.array_equal(g_c, g_p)
    assert np.array_equal(r_c, r_p)


def test_residual_grad_identical(lanes, rng):
    c, py = lanes
    values = rng.normal(size=(30, 4))
    src = rng.integers(0, 15, size=12).astype(np.int64)
    tgt = rng.integers(15, 30, size=12).astype(np.int64)
    p = np.eye(4) + 0.1 * rng.normal(size=(4, 4))
    e_c, g_c = c.residual_grad_pairs(values, src, tgt, p)
    e_p, g_p = py.residual_grad_pairs(values, src, tgt, p)
    assert e_c == e_p
    assert np.array_equal(g_c, g_p)


def test_abs_offdiag_corr_identical(lanes, rng):
    c, py = lanes
    z = rng.normal(size=(25, 8))
    assert c.abs_offdiag_corr(z) == py.abs_offdiag_corr(z)


def test_conv2d_identical(lanes, rng):
    c, py = lanes
    img = rng.normal(size=(20, 22, 3))
    w = rng.normal(size=(5, 3, 3, 3))
    assert np.array_equal(c.conv2d_valid(img, w, 4), py.conv2d_valid(img, w, 4))


def test_backend_switching(rng):
    from qbheat import Matrix, backend, mat_exp, set_backend
    a = Matrix(rng.normal(size=(5, 5)))
    original = backend.backend_name()
    try:
        results = {}
        for lane in backend.available_backends():
            set_backend(lane)
            results[lane] = mat_exp(a, 1.3).array
        vals = list(results.values())
        assert np.array_equal(vals[0], vals[-1])
    finally:
        set_backend(original)
