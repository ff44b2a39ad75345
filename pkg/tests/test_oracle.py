import numpy as np
import pytest

from streampls import oracle


def _random_matrices(rng, count):
    for _ in range(count):
        m = int(rng.integers(1, 25))
        d = int(rng.integers(1, 25))
        yield rng.standard_normal((m, d)) * float(rng.uniform(0.1, 4.0))


def test_svd_reconstruction_and_orthogonality():
    rng = np.random.default_rng(0)
    for a in _random_matrices(rng, 40):
        m, d = a.shape
        res = oracle.svd(a)
        k = min(m, d)
        assert res.singular.shape == (k,)
        assert (res.singular >= 0).all()
        assert (np.diff(res.singular) <= 1e-12).all()
        np.testing.assert_allclose(res.o_x.T @ res.o_x, np.eye(m), atol=1e-10)
        np.testing.assert_allclose(res.o_y.T @ res.o_y, np.eye(d), atol=1e-10)
        rec = res.o_x[:, :k] @ np.diag(res.singular) @ res.o_y.T[:k]
        np.testing.assert_allclose(rec, a, atol=1e-10 * max(1.0, res.singular[0]))
        np.testing.assert_allclose(
            res.singular, np.linalg.svd(a, compute_uv=False)[:k], atol=1e-10
        )


def test_svd_rank_deficient_trailing_values_are_clean():
    # Null-space columns must deflate to roundoff, not stall at sqrt(eps).
    rng = np.random.default_rng(1)
    u = rng.standard_normal((12, 2))
    v = rng.standard_normal((9, 2))
    a = u @ v.T
    res = oracle.svd(a)
    assert res.singular[2:].max() < 1e-12 * res.singular[0]
    rec = res.o_x[:, :9] @ np.diag(res.singular) @ res.o_y.T
    np.testing.assert_allclose(rec, a, atol=1e-12 * res.singular[0])


def test_svd_zero_matrix():
    res = oracle.svd(np.zeros((4, 3)))
    np.testing.assert_array_equal(res.singular, np.zeros(3))
    np.testing.assert_allclose(res.o_x.T @ res.o_x, np.eye(4), atol=1e-12)


def test_svd_wide_matrix_transpose_convention():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((3, 7))
    res = oracle.svd(a)
    assert res.o_x.shape == (3, 3)
    assert res.o_y.shape == (7, 7)
    rec = res.o_x @ np.diag(res.singular) @ res.o_y.T[:3]
    np.testing.assert_allclose(rec, a, atol=1e-12)


def test_svd_rejects_bad_input():
    with pytest.raises(ValueError):
        oracle.svd(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        oracle.svd(np.array([[np.inf, 1.0]]))


def test_symmetric_eig_matches_numpy():
    rng = np.random.default_rng(3)
    for n in (1, 2, 5, 12):
        a = rng.standard_normal((n, n))
        a = a + a.T
        vals, vecs = oracle.symmetric_eig(a)
        assert (np.diff(vals) <= 1e-10).all()
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(n), atol=1e-10)
        np.testing.assert_allclose(a @ vecs, vecs * vals, atol=1e-9)
        np.testing.assert_allclose(vals, np.linalg.eigvalsh(a)[::-1], atol=1e-10)


def test_symmetric_eig_rejects_asymmetric():
    with pytest.raises(ValueError, match="symmetric"):
        oracle.symmetric_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_inverse_normal_cdf_round_trip():
    qs = [1e-9, 1e-4, 0.025, 0.3, 0.5, 0.525, 0.8, 0.975, 1 - 1e-4, 1 - 1e-9]
    for q in qs:
        x = oracle.inverse_normal_cdf(q)
        assert abs(oracle.normal_cdf(x) - q) < 1e-10
    assert oracle.inverse_normal_cdf(0.5) == pytest.approx(0.0, abs=1e-12)
    # classic two-sided 95% quantile
    assert oracle.inverse_normal_cdf(0.975) == pytest.approx(1.959963985, abs=1e-8)
    assert oracle.inverse_normal_cdf(0.2) == pytest.approx(
        -oracle.inverse_normal_cdf(0.8), abs=1e-12
    )
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            oracle.inverse_normal_cdf(bad)


def test_empirical_cov_hand_example():
    samples = [
        (np.array([1.0, 0.0]), np.array([2.0, 0.0])),
        (np.array([0.0, 1.0]), np.array([0.0, 4.0])),
    ]
    got = oracle.empirical_cov(samples)
    np.testing.assert_allclose(got, [[1.0, 0.0], [0.0, 2.0]])
    centered = oracle.empirical_cov(samples, center=True)
    mean_outer = np.outer([0.5, 0.5], [1.0, 2.0])
    np.testing.assert_allclose(centered, got - mean_outer)


def test_empirical_cov_accepts_sample_objects_and_rejects_empty():
    from streampls.core import TwoViewSample

    rng = np.random.default_rng(8)
    xs = rng.standard_normal((50, 3))
    ys = rng.standard_normal((50, 2))
    objs = [TwoViewSample(x, y) for x, y in zip(xs, ys)]
    np.testing.assert_allclose(
        oracle.empirical_cov(objs), xs.T @ ys / 50, atol=1e-12
    )
    with pytest.raises(ValueError):
        oracle.empirical_cov([])


def test_mc_latent_moments_match_analytic(reference_model):
    # Gaussian fourth moments by Isserlis: alpha_ij = l_i l_j + Sxx_ij Syy_ij
    # off the diagonal, alpha_ii = gamma_i omega_i + 2 l_i^2.
    expected_alpha = np.array(
        [[68.0, 12.0, 3.0], [12.0, 44.0, 5.0], [3.0, 5.0, 36.5]]
    )
    mom = reference_model.moments
    np.testing.assert_allclose(np.asarray(mom.gamma), [6.0, 6.0, 6.0], atol=1e-12)
    np.testing.assert_allclose(np.asarray(mom.omega), [6.0, 6.0, 6.0], atol=1e-12)
    np.testing.assert_allclose(np.asarray(mom.alpha), expected_alpha, atol=1e-12)

    mc = oracle.mc_moments(reference_model, 2_000_000, np.random.default_rng(123))
    assert np.all(np.abs(mc.gamma - 6.0) <= 4 * mc.gamma_se)
    assert np.all(np.abs(mc.omega - 6.0) <= 4 * mc.omega_se)
    assert np.all(np.abs(mc.alpha - expected_alpha) <= 4 * mc.alpha_se)


def test_mc_latent_moments_shape_validation():
    with pytest.raises(ValueError):
        oracle.mc_latent_moments(np.eye(3), np.ones(2), np.eye(3), 10, 0)


def test_fd_gradient_quadratic():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((4, 4))
    a = a + a.T

    def f(z):
        return float(z @ a @ z)

    z0 = rng.standard_normal(4)
    np.testing.assert_allclose(oracle.fd_gradient(f, z0), 2 * a @ z0, atol=1e-5)
