from itertools import islice

import numpy as np
import pytest

from streampls import datagen, oracle

LATENT = np.array([[6.0, 2.0, 1.0], [2.0, 6.0, 2.0], [1.0, 2.0, 6.0]])
CROSS = np.array([4.0, 2.0, 0.5])


def test_build_model_reference_invariants(reference_model):
    model = reference_model
    np.testing.assert_allclose(model.mix_x.T @ model.mix_x, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(model.mix_y.T @ model.mix_y, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(
        oracle.svd(model.sigma_xy).singular, CROSS, atol=1e-8
    )
    # rotation preserves each view's spectrum
    np.testing.assert_allclose(
        np.linalg.eigvalsh(model.sigma_x), np.linalg.eigvalsh(LATENT), atol=1e-8
    )
    joint = model.joint()
    assert np.linalg.eigvalsh(joint).min() >= -1e-8
    np.testing.assert_allclose(joint, joint.T, atol=1e-12)


def test_build_model_identity_mixing_hook():
    model = datagen.build_model(LATENT, CROSS, LATENT, mixing="identity")
    np.testing.assert_array_equal(model.mix_x, np.eye(3))
    np.testing.assert_array_equal(model.sigma_xy, np.diag(CROSS))
    np.testing.assert_array_equal(model.sigma_x, LATENT)

    one = datagen.build_model(np.eye(2), np.ones(2), np.eye(2), mixing="identity")
    np.testing.assert_array_equal(one.sigma_xy, np.eye(2))


def test_build_model_pads_extra_x_dimensions():
    model = datagen.build_model(LATENT, CROSS, LATENT, m=5, d=3, seed=4)
    assert model.sigma_xy.shape == (5, 3)
    assert model.sigma_x.shape == (5, 5)
    np.testing.assert_allclose(
        oracle.svd(model.sigma_xy).singular, CROSS, atol=1e-8
    )
    # padded coordinates are unit-variance noise before mixing
    np.testing.assert_allclose(
        np.sort(np.linalg.eigvalsh(model.sigma_x))[:2], [1.0, 1.0], atol=1e-8
    )


def test_build_model_input_validation():
    with pytest.raises(ValueError, match="nonincreasing"):
        datagen.build_model(LATENT, np.array([1.0, 2.0, 3.0]), LATENT)
    with pytest.raises(ValueError, match="nonnegative"):
        datagen.build_model(LATENT, np.array([4.0, 2.0, -0.5]), LATENT)
    with pytest.raises(ValueError, match="diagonal"):
        datagen.build_model(LATENT, np.ones((3, 3)), LATENT)
    with pytest.raises(ValueError):
        datagen.build_model(LATENT, CROSS, LATENT, m=2, d=3)
    with pytest.raises(ValueError, match="symmetric"):
        datagen.build_model(np.triu(LATENT), CROSS, LATENT)


def test_build_model_rejects_indefinite_joint():
    # cross-covariance 3 between unit-variance latents is impossible
    with pytest.raises(ValueError, match="indefinite"):
        model = datagen.build_model(np.eye(2), np.array([3.0, 0.0]), np.eye(2))
        model.joint_cholesky()


def test_sampler_matches_model_covariance(reference_model):
    n = 1_000_000
    xs, ys = datagen.draw_pairs(reference_model, n, seed=42)
    emp_xy = xs.T @ ys / n
    assert np.abs(emp_xy - reference_model.sigma_xy).max() <= 0.02
    emp_var = (xs * xs).mean(axis=0)
    np.testing.assert_allclose(
        emp_var, np.diag(reference_model.sigma_x), rtol=0.02
    )


def test_sample_and_stream_are_deterministic(reference_model):
    s1 = datagen.sample(reference_model, np.random.default_rng(9))
    s2 = datagen.sample(reference_model, np.random.default_rng(9))
    np.testing.assert_array_equal(s1.x, s2.x)
    np.testing.assert_array_equal(s1.y, s2.y)

    a = [np.concatenate([s.x, s.y]) for s in islice(datagen.gaussian_stream(reference_model, 5), 20)]
    b = [np.concatenate([s.x, s.y]) for s in islice(datagen.gaussian_stream(reference_model, 5), 20)]
    np.testing.assert_array_equal(np.asarray(a), np.asarray(b))


def test_mask_fraction_and_zero_imputation(reference_model):
    rng = np.random.default_rng(17)
    observed = 0
    total = 0
    for s in islice(datagen.gaussian_stream(reference_model, 3), 170_000):
        masked = datagen.mask(s, 0.5, rng)
        assert masked.mask_x.dtype == bool
        np.testing.assert_array_equal(masked.x[~masked.mask_x], 0.0)
        np.testing.assert_array_equal(masked.y[~masked.mask_y], 0.0)
        np.testing.assert_array_equal(masked.x[masked.mask_x], s.x[masked.mask_x])
        observed += int(masked.mask_x.sum()) + int(masked.mask_y.sum())
        total += s.x.size + s.y.size
    assert abs(observed / total - 0.5) <= 0.002


def test_mask_validates_probability(reference_model):
    s = datagen.sample(reference_model, np.random.default_rng(0))
    with pytest.raises(ValueError):
        datagen.mask(s, 0.0, np.random.default_rng(0))
    full = datagen.mask(s, 1.0, np.random.default_rng(0))
    np.testing.assert_array_equal(full.x, s.x)
    assert full.mask_x.all() and full.mask_y.all()


def test_masked_stream_unbiased_after_debias(reference_model):
    # E[x~ y~^T] = p^2 Sigma_xy off the mask, so dividing by p^2 recovers it.
    p = 0.9
    est = oracle.empirical_cov(
        islice(datagen.masked_gaussian_stream(reference_model, 11, p), 200_000)
    ) / (p * p)
    assert np.abs(est - reference_model.sigma_xy).max() <= 0.06


def test_masked_stream_is_deterministic(reference_model):
    a = list(islice(datagen.masked_gaussian_stream(reference_model, 2, 0.7), 10))
    b = list(islice(datagen.masked_gaussian_stream(reference_model, 2, 0.7), 10))
    for s, t in zip(a, b):
        np.testing.assert_array_equal(s.x, t.x)
        np.testing.assert_array_equal(s.mask_y, t.mask_y)


def test_gram_schmidt_orthonormal():
    rng = np.random.default_rng(23)
    for n in (2, 5, 12):
        q = datagen.gram_schmidt_orthonormal(rng.standard_normal((n, n)))
        np.testing.assert_allclose(q.T @ q, np.eye(n), atol=1e-10)


def test_two_view_csv_round_trip(tmp_path):
    rng = np.random.default_rng(29)
    x = rng.standard_normal((40, 3))
    y = rng.standard_normal((40, 2))
    px, py = tmp_path / "x.csv", tmp_path / "y.csv"
    datagen.save_two_view_csv(px, py, x, y)
    samples = datagen.load_two_view_csv(px, py, center=False)
    assert len(samples) == 40
    np.testing.assert_array_equal(np.array([s.x for s in samples]), x)
    np.testing.assert_array_equal(np.array([s.y for s in samples]), y)

    centered = datagen.load_two_view_csv(px, py, center=True)
    got = np.array([s.x for s in centered])
    np.testing.assert_allclose(got, x - x.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(got.mean(axis=0), 0.0, atol=1e-12)


def test_two_view_csv_errors(tmp_path):
    px, py = tmp_path / "x.csv", tmp_path / "y.csv"
    with pytest.raises(ValueError, match="row count"):
        datagen.save_two_view_csv(px, py, np.ones((3, 2)), np.ones((2, 2)))
    datagen.save_two_view_csv(px, py, np.ones((3, 2)), np.ones((3, 2)))
    bad = tmp_path / "bad.csv"
    bad.write_text("a_0,a_1\n1.0,2.0\n1.0\n")
    with pytest.raises(ValueError, match="line 3"):
        datagen.load_two_view_csv(bad, py)
    bad.write_text("a_0,a_1\n1.0,oops\n")
    with pytest.raises(ValueError, match="non-numeric"):
        datagen.load_two_view_csv(bad, py)
    short = tmp_path / "short.csv"
    datagen.save_two_view_csv(short, tmp_path / "short_y.csv", np.ones((2, 2)), np.ones((2, 2)))
    with pytest.raises(ValueError, match="row count"):
        datagen.load_two_view_csv(px, short)
