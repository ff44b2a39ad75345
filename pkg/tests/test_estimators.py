import numpy as np
import pytest
from sklearn.base import clone

from streampls.datagen import draw_pairs
from streampls.estimators import HebbianPls, MsgPls


@pytest.fixture(scope="module")
def training_views(reference_model):
    return draw_pairs(reference_model, 40_000, seed=7)


def true_pair(reference_model):
    u_mat, _, vt = np.linalg.svd(reference_model.sigma_xy)
    return u_mat[:, 0], vt[0]


def test_hebbian_recovers_leading_pair(reference_model, training_views):
    X, Y = training_views
    est = HebbianPls(eta=2e-3, n_epochs=2, random_state=0).fit(X, Y)
    u_star, v_star = true_pair(reference_model)
    assert abs(est.x_weights_ @ u_star) >= 0.95
    assert abs(est.y_weights_ @ v_star) >= 0.95
    assert est.singular_value_ == pytest.approx(4.0, rel=0.1)
    assert est.n_iter_ == 80_000
    assert abs(np.linalg.norm(est.x_weights_) - 1.0) <= 1e-12
    assert abs(np.linalg.norm(est.y_weights_) - 1.0) <= 1e-12


def test_msg_recovers_leading_pair(reference_model, training_views):
    X, Y = training_views
    est = MsgPls(random_state=0).fit(X[:3000], Y[:3000])
    u_star, v_star = true_pair(reference_model)
    assert abs(est.x_weights_ @ u_star) >= 0.95
    assert abs(est.y_weights_ @ v_star) >= 0.95
    assert est.singular_value_ == pytest.approx(4.0, rel=0.15)
    assert est.n_iter_ == 3000


def test_sklearn_parameter_protocol():
    est = HebbianPls(eta=5e-4, n_epochs=3, random_state=3)
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()
    est.set_params(eta=1e-3)
    assert est.get_params()["eta"] == 1e-3

    msg_est = MsgPls(eta=0.1, shuffle=False)
    assert clone(msg_est).get_params() == msg_est.get_params()


def test_refit_is_reproducible(training_views):
    X, Y = training_views
    a = HebbianPls(eta=1e-3, random_state=11).fit(X[:2000], Y[:2000])
    b = HebbianPls(eta=1e-3, random_state=11).fit(X[:2000], Y[:2000])
    np.testing.assert_array_equal(a.x_weights_, b.x_weights_)
    np.testing.assert_array_equal(a.y_weights_, b.y_weights_)
    assert a.singular_value_ == b.singular_value_
    assert a.coef_ == b.coef_

    c = MsgPls(random_state=11).fit(X[:500], Y[:500])
    d = MsgPls(random_state=11).fit(X[:500], Y[:500])
    np.testing.assert_array_equal(c.x_weights_, d.x_weights_)


def test_transform_predict_score_shapes(training_views):
    X, Y = training_views
    X, Y = X[:500], Y[:500]
    est = HebbianPls(eta=2e-3, n_epochs=2, random_state=1).fit(X, Y)
    xs = est.transform(X)
    assert xs.shape == (500, 1)
    xs2, ys2 = est.transform(X, Y)
    assert xs2.shape == ys2.shape == (500, 1)
    np.testing.assert_array_equal(xs, xs2)
    pred = est.predict(X)
    assert pred.shape == (500, 3)
    # the rank-1 regression cannot be worse than predicting the mean
    resid = ((Y - pred) ** 2).sum()
    base = ((Y - Y.mean(axis=0)) ** 2).sum()
    assert resid < base
    # scoring the training data evaluates the fitted objective itself
    assert est.score(X, Y) == pytest.approx(est.singular_value_, abs=1e-12)


def test_center_false_matches_on_precentered_data(training_views):
    X, Y = training_views
    X = X[:2000] - X[:2000].mean(axis=0)
    Y = Y[:2000] - Y[:2000].mean(axis=0)
    with_centering = HebbianPls(eta=1e-3, random_state=2).fit(X, Y)
    without = HebbianPls(eta=1e-3, center=False, random_state=2).fit(X, Y)
    assert np.all(without.x_mean_ == 0.0) and np.all(without.y_mean_ == 0.0)
    np.testing.assert_allclose(without.x_weights_, with_centering.x_weights_, atol=1e-8)
    np.testing.assert_allclose(without.y_weights_, with_centering.y_weights_, atol=1e-8)


def test_validation_and_unfitted_errors(training_views):
    X, Y = training_views
    est = HebbianPls()
    with pytest.raises(ValueError, match="2-D"):
        est.fit(X[:10, 0], Y[:10])
    with pytest.raises(ValueError, match="same number of rows"):
        est.fit(X[:10], Y[:11])
    with pytest.raises(ValueError, match="at least one sample"):
        est.fit(X[:0], Y[:0])
    bad = X[:10].copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError, match="finite"):
        est.fit(bad, Y[:10])

    for method in ("transform", "predict"):
        with pytest.raises(RuntimeError, match="not fitted"):
            getattr(HebbianPls(), method)(X[:5])
    with pytest.raises(RuntimeError, match="not fitted"):
        MsgPls().score(X[:5], Y[:5])
