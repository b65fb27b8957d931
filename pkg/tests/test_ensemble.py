import numpy as np
import pytest

from qiforest import ensemble, pca
from qiforest.ensemble import (
    EnsembleConfig,
    learner_predictions,
    mse,
    predict_ensemble,
    train_ensemble,
    train_qi_forest,
    train_random_forest,
)
from qiforest.errors import InvalidInput
from qiforest.learners import LearnerKind, predict_many, train_tree
from qiforest.qis import FeatureSubset, SubspaceMode, generate_subsets

from tests.conftest import linear_dataset


@pytest.fixture
def data():
    dataset = linear_dataset(n=80, m=6, seed=3)
    return dataset.x[:60], dataset.y[:60], dataset.x[60:], dataset.y[60:]


def test_single_full_learner_equals_plain_tree(data):
    x, y, x_test, _ = data
    config = EnsembleConfig(ensemble_size=1, alpha=1.0, bootstrap=False, seed=4)
    model = train_ensemble(x, y, config)

    x_r = pca.transform(model.pca, x)
    single = train_tree(x_r, y, FeatureSubset(range(6)))
    expected = predict_many(single, pca.transform(model.pca, x_test))
    assert np.array_equal(predict_ensemble(model, x_test), expected)


def test_same_seed_is_bit_identical(data):
    x, y, x_test, _ = data
    config = EnsembleConfig(ensemble_size=8, subset_mode="qis", seed=11)
    first = train_ensemble(x, y, config)
    second = train_ensemble(x, y, config)

    assert first.draw_digest == second.draw_digest
    assert [l.subset for l in first.learners] == [l.subset for l in second.learners]
    assert np.array_equal(predict_ensemble(first, x_test), predict_ensemble(second, x_test))


def test_different_seeds_draw_differently(data):
    x, y, _, _ = data
    first = train_ensemble(x, y, EnsembleConfig(ensemble_size=5, seed=1))
    second = train_ensemble(x, y, EnsembleConfig(ensemble_size=5, seed=2))
    assert first.draw_digest != second.draw_digest


def test_worker_count_does_not_change_the_model(data):
    x, y, x_test, _ = data
    config = EnsembleConfig(ensemble_size=6, subset_mode="qis", seed=5)
    serial = train_ensemble(x, y, config)
    parallel = train_ensemble(x, y, config.replace(n_jobs=2))

    assert serial.draw_digest == parallel.draw_digest
    assert np.array_equal(predict_ensemble(serial, x_test), predict_ensemble(parallel, x_test))


def test_paired_ensembles_share_bootstrap_rows(data):
    x, y, _, _ = data
    config = EnsembleConfig(ensemble_size=6, seed=9)
    qi = train_qi_forest(x, y, config.replace(subset_mode="qis"))
    rf = train_random_forest(x, y, config)
    assert qi.draw_digest == rf.draw_digest


def test_full_subsets_make_qi_and_random_forest_identical(data):
    x, y, x_test, _ = data
    config = EnsembleConfig(ensemble_size=5, alpha=1.0, seed=13)
    qi = train_qi_forest(x, y, config.replace(subset_mode="qis"))
    rf = train_random_forest(x, y, config)
    assert np.array_equal(predict_ensemble(qi, x_test), predict_ensemble(rf, x_test))


def test_forest_constructors_check_the_mode(data):
    x, y, _, _ = data
    with pytest.raises(InvalidInput):
        train_random_forest(x, y, EnsembleConfig(subset_mode="qis"))
    with pytest.raises(InvalidInput):
        train_qi_forest(x, y, EnsembleConfig(subset_mode="uniform"))


def test_subsets_have_the_configured_size(data):
    x, y, _, _ = data
    model = train_ensemble(x, y, EnsembleConfig(ensemble_size=10, alpha=0.5, subset_mode="qis"))
    assert model.ensemble_size == 10
    assert all(len(learner.subset) == 3 for learner in model.learners)
    assert np.isclose(model.weights.p.sum(), 1.0)


def test_learners_use_the_generated_subsets(data):
    x, y, _, _ = data
    config = EnsembleConfig(ensemble_size=7, alpha=0.5, subset_mode="qis", seed=13)
    model = train_ensemble(x, y, config)

    x_r = pca.transform(model.pca, x)
    expected = generate_subsets(x_r, y, 7, 3, "qis", 13)
    assert [learner.subset for learner in model.learners] == expected


def test_averaging_beats_the_average_member(data):
    x, y, x_test, y_test = data
    model = train_ensemble(x, y, EnsembleConfig(ensemble_size=20, alpha=0.5, seed=21))
    individual = learner_predictions(model, x_test)

    member_errors = [mse(row, y_test) for row in individual]
    assert mse(predict_ensemble(model, x_test), y_test) < np.mean(member_errors)


def test_ensemble_prediction_lies_between_members(data):
    x, y, x_test, _ = data
    model = train_ensemble(x, y, EnsembleConfig(ensemble_size=7, learner_kind="linear", subset_mode="qis"))
    individual = learner_predictions(model, x_test)
    averaged = predict_ensemble(model, x_test)

    assert individual.shape == (7, x_test.shape[0])
    assert np.all(averaged >= individual.min(axis=0) - 1e-12)
    assert np.all(averaged <= individual.max(axis=0) + 1e-12)


def test_bootstrap_covers_about_two_thirds_of_rows():
    fractions = [
        np.unique(ensemble._bootstrap_rows(1000, 42, index, True)).size / 1000 for index in range(50)
    ]
    assert abs(np.mean(fractions) - (1 - np.exp(-1))) < 0.02
    assert np.array_equal(ensemble._bootstrap_rows(5, 42, 0, False), np.arange(5))


def test_prefit_pca_is_reused(data):
    x, y, _, _ = data
    fitted = pca.fit(x)
    model = train_ensemble(x, y, EnsembleConfig(ensemble_size=2), pca=fitted)
    assert model.pca is fitted


def test_prediction_checks_dimension(data):
    x, y, _, _ = data
    model = train_ensemble(x, y, EnsembleConfig(ensemble_size=2))
    with pytest.raises(InvalidInput):
        predict_ensemble(model, np.zeros((3, 5)))


def test_mse():
    assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mse([0.0, 0.0], [1.0, 3.0]) == 5.0
    with pytest.raises(InvalidInput):
        mse([1.0], [1.0, 2.0])


def test_config_validation():
    config = EnsembleConfig(learner_kind="linear", subset_mode="fraction")
    assert config.learner_kind is LearnerKind.LINEAR
    assert config.subset_mode is SubspaceMode.FRACTION_ONLY
    assert config.replace(alpha=0.25).alpha == 0.25
    assert config.as_dict()["subset_mode"] == "fraction_only"

    for bad in ({"alpha": 0.0}, {"alpha": 1.2}, {"ensemble_size": 0}, {"ensemble_size": 2.5},
                {"seed": -1}, {"n_jobs": 0}, {"learner_kind": "svm"}):
        with pytest.raises(InvalidInput):
            EnsembleConfig(**bad)
