import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qreservoir.errors import ValidationError
from qreservoir.readout import ReadoutModel, accuracy, fit_ridge, model_predict, mse


def normal_equation_oracle(X, Y):
    """Unregularised affine least squares via the augmented normal equations."""
    A = np.hstack([X, np.ones((X.shape[0], 1))])
    beta = np.linalg.solve(A.T @ A, A.T @ Y)
    return beta[:-1], beta[-1]


def test_exact_line():
    m = fit_ridge([[0], [1]], [[0], [2]], lam=0)
    np.testing.assert_allclose(m.W_out, [[2]], atol=1e-12)
    np.testing.assert_allclose(m.intercept, [0], atol=1e-12)
    np.testing.assert_allclose(model_predict(m, [[0.5]]), [[1.0]], atol=1e-12)


def test_large_lambda_limit():
    rng = np.random.default_rng(0)
    X, Y = rng.normal(size=(30, 3)), rng.normal(size=(30, 2))
    m = fit_ridge(X, Y, lam=1e12)
    assert np.linalg.norm(m.W_out) < 1e-9
    np.testing.assert_allclose(m.intercept, Y.mean(axis=0), atol=1e-9)


def test_matches_normal_equations_oracle():
    rng = np.random.default_rng(1)
    X, Y = rng.normal(size=(20, 5)), rng.normal(size=(20, 2))
    m = fit_ridge(X, Y, lam=0)
    W, b = normal_equation_oracle(X, Y)
    np.testing.assert_allclose(m.W_out, W, atol=1e-8, rtol=0)
    np.testing.assert_allclose(m.intercept, b, atol=1e-8, rtol=0)


def test_zero_model_predicts_intercept():
    m = fit_ridge(np.zeros((4, 2)), [[1.0, -2.0]] * 4, lam=1.0)
    np.testing.assert_allclose(model_predict(m, np.ones((3, 2))), [[1.0, -2.0]] * 3)


def test_interpolation():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(15, 3))
    Y = X @ np.array([[1.0], [-2.0], [0.5]]) + 3.0
    np.testing.assert_allclose(fit_ridge(X, Y, lam=0).predict(X), Y, atol=1e-8)


def test_rank_deficient_gives_minimum_norm():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    m = fit_ridge(X, [0.0, 1.0, 2.0], lam=0)
    np.testing.assert_allclose(m.W_out[:, 0], [0.5, 0.5], atol=1e-12)


def test_no_intercept_option():
    m = ReadoutModel(lam=0, fit_intercept=False).fit([[1.0], [2.0]], [3.0, 5.0])
    np.testing.assert_allclose(m.intercept, [0.0])
    np.testing.assert_allclose(m.W_out, [[13 / 5]])


def test_vector_target_shape():
    m = ReadoutModel().fit([[0.0], [1.0]], [0.0, 1.0])
    assert m.predict([[0.2], [0.4]]).shape == (2,)


def test_ridge_monotone():
    rng = np.random.default_rng(3)
    X, Y = rng.normal(size=(25, 4)), rng.normal(size=(25, 1))
    norms = [np.linalg.norm(fit_ridge(X, Y, lam).W_out) for lam in [0, 1e-3, 0.1, 1, 10, 100]]
    assert all(a >= b for a, b in zip(norms, norms[1:]))


def test_prediction_affine():
    rng = np.random.default_rng(4)
    m = fit_ridge(rng.normal(size=(10, 3)), rng.normal(size=(10, 2)), lam=0.1)
    X1, X2 = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))
    a = 0.3
    np.testing.assert_allclose(
        m.predict(a * X1 + (1 - a) * X2), a * m.predict(X1) + (1 - a) * m.predict(X2), atol=1e-12
    )


def test_input_errors():
    with pytest.raises(ValidationError):
        fit_ridge([[np.nan]], [[1.0]])
    with pytest.raises(ValidationError):
        fit_ridge([[1.0], [2.0]], [[1.0]])
    with pytest.raises(ValidationError):
        ReadoutModel(lam=-1)
    m = fit_ridge([[0.0, 1.0], [1.0, 0.0]], [0.0, 1.0])
    with pytest.raises(ValidationError):
        m.predict([[1.0]])
    with pytest.raises(ValidationError):
        ReadoutModel().predict([[1.0]])


def test_dump_round_trip_is_exact():
    rng = np.random.default_rng(5)
    m = fit_ridge(rng.normal(size=(12, 3)), rng.normal(size=(12, 2)), lam=0.37)
    back = ReadoutModel.loads(m.dumps())
    assert np.array_equal(back.W_out, m.W_out) and np.array_equal(back.intercept, m.intercept)
    assert back.lam == m.lam
    X = rng.normal(size=(4, 3))
    assert np.array_equal(back.predict(X), m.predict(X))


def test_metrics():
    assert mse([0, 1], [0, 1]) == 0 and accuracy([0, 1], [0, 1]) == 1
    assert mse([0, 1], [1, 0]) == 1.0 and accuracy([0, 1], [1, 0]) == 0
    assert accuracy([0, 0, 1, 1], [0, 1, 1, 1]) == 0.75
    with pytest.raises(ValidationError):
        mse([0, 1], [0])
    with pytest.raises(ValidationError):
        accuracy([0], [0, 1])


def test_sklearn_estimator_is_compatible():
    sklearn = pytest.importorskip("sklearn.linear_model")
    rng = np.random.default_rng(6)
    X, y = rng.normal(size=(30, 3)), rng.normal(size=30)
    ours = ReadoutModel(lam=0.5).fit(X, y)
    theirs = sklearn.Ridge(alpha=0.5).fit(X, y)
    np.testing.assert_allclose(ours.W_out[:, 0], theirs.coef_, atol=1e-10)
    np.testing.assert_allclose(ours.intercept[0], theirs.intercept_, atol=1e-10)


def _instances():
    return st.tuples(st.integers(1, 6), st.integers(0, 20), st.integers(0, 2**31 - 1)).map(
        lambda a: (a[0], a[0] + 2 + a[1], np.random.default_rng(a[2]))
    )


@settings(max_examples=40, deadline=None)
@given(_instances(), st.floats(0, 1e3), st.floats(0, 1e3))
def test_property_ridge_monotone(inst, l1, l2):
    F, T, rng = inst
    X, Y = rng.normal(size=(T, F)), rng.normal(size=(T, 2))
    lo, hi = sorted((l1, l2))
    assert np.linalg.norm(fit_ridge(X, Y, hi).W_out) <= np.linalg.norm(fit_ridge(X, Y, lo).W_out) * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(_instances())
def test_property_matches_pseudo_inverse(inst):
    F, T, rng = inst
    X, Y = rng.normal(size=(T, F)), rng.normal(size=(T, 1))
    beta = np.linalg.pinv(np.hstack([X, np.ones((T, 1))])) @ Y
    m = fit_ridge(X, Y, lam=0)
    np.testing.assert_allclose(m.W_out, beta[:-1], atol=1e-8, rtol=0)
    np.testing.assert_allclose(m.intercept, beta[-1], atol=1e-8, rtol=0)


@settings(max_examples=40, deadline=None)
@given(_instances(), st.floats(0, 1), st.floats(0, 10))
def test_property_prediction_affine(inst, a, lam):
    F, T, rng = inst
    m = fit_ridge(rng.normal(size=(T, F)), rng.normal(size=(T, 2)), lam)
    X1, X2 = rng.normal(size=(3, F)), rng.normal(size=(3, F))
    np.testing.assert_allclose(
        m.predict(a * X1 + (1 - a) * X2), a * m.predict(X1) + (1 - a) * m.predict(X2), atol=1e-9
    )
