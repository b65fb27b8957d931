import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from qiforest.estimators import QIForestRegressor

from tests.conftest import linear_dataset


@pytest.fixture
def data():
    dataset = linear_dataset(n=80, m=5, seed=6)
    return dataset.x[:60], dataset.y[:60], dataset.x[60:], dataset.y[60:]


def test_fit_predict(data):
    x, y, x_test, y_test = data
    model = QIForestRegressor(n_estimators=6, random_state=1).fit(x, y)

    assert model.predict(x_test).shape == (20,)
    assert model.learner_predictions(x_test).shape == (6, 20)
    assert model.n_features_in_ == 5
    assert np.isclose(model.feature_weights_.sum(), 1.0)
    assert isinstance(model.score(x_test, y_test), float)


def test_random_state_makes_fits_repeatable(data):
    x, y, x_test, _ = data
    first = QIForestRegressor(n_estimators=4, random_state=7).fit(x, y).predict(x_test)
    second = QIForestRegressor(n_estimators=4, random_state=7).fit(x, y).predict(x_test)
    assert np.array_equal(first, second)


def test_full_subsets_match_uniform_mode(data):
    x, y, x_test, _ = data
    qi = QIForestRegressor(n_estimators=4, alpha=1.0, random_state=2).fit(x, y)
    rf = QIForestRegressor(n_estimators=4, alpha=1.0, subset_mode="uniform", random_state=2).fit(x, y)
    assert np.array_equal(qi.predict(x_test), rf.predict(x_test))


def test_clone_keeps_parameters():
    model = QIForestRegressor(n_estimators=12, alpha=0.3, learner="linear", random_state=5)
    params = clone(model).get_params()
    assert params["n_estimators"] == 12
    assert params["alpha"] == 0.3
    assert params["learner"] == "linear"


def test_predict_before_fit():
    with pytest.raises(NotFittedError):
        QIForestRegressor().predict(np.zeros((2, 3)))
