import numpy as np
import pytest
from scipy.integrate import quad

from qiforest.diagnostics import (
    LinearMoments,
    decompose,
    decomposition_from_predictions,
    expected_linear_moments,
    run_theory_trials,
    verify_fraction_expectation,
)
from qiforest.ensemble import EnsembleConfig, mse, predict_ensemble, train_ensemble
from qiforest.errors import InvalidInput
from qiforest.learners import predict_many, train_linear
from qiforest.qis import FeatureSubset, fraction_transition_probabilities, uniform_weights

from tests.conftest import linear_dataset


def assert_identities(report):
    t = report.ensemble_size
    scale = report.avg_err
    assert np.isclose(report.ensemble_err, report.avg_err - report.avg_ambiguity, rtol=1e-10, atol=1e-12 * scale)
    assert np.isclose(
        report.ensemble_err,
        report.avg_bias_sq + report.avg_variance / t + (1 - 1 / t) * report.avg_covariance,
        rtol=1e-10,
        atol=1e-12 * scale,
    )
    assert np.isclose(
        report.ensemble_err,
        report.avg_err - (1 - 1 / t) * (report.avg_variance - report.avg_covariance),
        rtol=1e-10,
        atol=1e-12 * scale,
    )


def test_identical_learners_have_no_ambiguity(rng):
    y = rng.standard_normal(10)
    row = y + rng.standard_normal(10)
    report = decomposition_from_predictions(np.tile(row, (4, 1)), y)

    assert report.avg_ambiguity == pytest.approx(0.0, abs=1e-15)
    assert report.ensemble_err == pytest.approx(report.avg_err)
    assert report.avg_variance == pytest.approx(report.avg_covariance)


def test_exact_fit_decomposes_to_zero():
    y = np.array([0.1, 0.7, 0.3, 1.1])
    report = decomposition_from_predictions(np.tile(y, (3, 1)), y)
    assert report.avg_err == 0.0
    assert report.ensemble_err == pytest.approx(0.0, abs=1e-30)
    assert report.avg_ambiguity == pytest.approx(0.0, abs=1e-30)

    dataset = linear_dataset(n=40, m=4, seed=6)
    config = EnsembleConfig(ensemble_size=3, alpha=1.0, bootstrap=False, seed=2)
    model = train_ensemble(dataset.x, dataset.y, config)
    fitted = decompose(model, dataset.x, dataset.y)
    assert fitted.avg_err == pytest.approx(0.0, abs=1e-20)
    assert fitted.ensemble_err == pytest.approx(0.0, abs=1e-20)


def test_two_learners_around_the_truth():
    report = decomposition_from_predictions([[1.0], [3.0]], [2.0])
    assert report.ensemble_err == 0.0
    assert report.avg_err == 1.0
    assert report.avg_ambiguity == 1.0
    assert report.n_eval == 1
    assert report.ensemble_size == 2


@pytest.mark.parametrize("t", [1, 2, 5, 30])
def test_identities_hold_on_random_predictions(rng, t):
    for _ in range(50):
        n = int(rng.integers(1, 40))
        y = rng.standard_normal(n) * rng.uniform(0.1, 10)
        predictions = y + rng.standard_normal((t, n)) + rng.normal(0, 2)
        report = decomposition_from_predictions(predictions, y)
        assert_identities(report)
        if t == 1:
            assert report.avg_covariance == 0.0
            assert report.avg_ambiguity == 0.0


@pytest.mark.parametrize("learner", ["tree", "linear"])
@pytest.mark.parametrize("mode", ["qis", "uniform"])
def test_identities_hold_for_trained_ensembles(learner, mode):
    dataset = linear_dataset(n=70, m=5, seed=17)
    config = EnsembleConfig(ensemble_size=9, learner_kind=learner, subset_mode=mode, seed=3)
    model = train_ensemble(dataset.x[:50], dataset.y[:50], config)
    report = decompose(model, dataset.x[50:], dataset.y[50:])

    assert_identities(report)
    assert report.ensemble_err == pytest.approx(mse(predict_ensemble(model, dataset.x[50:]), dataset.y[50:]))
    assert report.ensemble_err <= report.avg_err


def test_decomposition_rejects_bad_input():
    with pytest.raises(InvalidInput):
        decomposition_from_predictions(np.zeros((2, 0)), [])
    with pytest.raises(InvalidInput):
        decomposition_from_predictions([[1.0, 2.0]], [1.0])


def orthogonal_design():
    # centred, mutually orthogonal columns with squared norm 4 each
    return np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])


def test_two_feature_moments_match_enumeration():
    x = orthogonal_design()
    w = np.array([1.0, 0.0])
    y = x @ w
    n = x.shape[0]
    a = w**2 * np.sum(x**2, axis=0) / n

    # a single learner on each one-feature subset
    variances = []
    for feature in (0, 1):
        learner = train_linear(x, y, FeatureSubset((feature,)))
        prediction = predict_many(learner, x)
        variances.append(float(np.mean((prediction - prediction.mean()) ** 2)))
    assert variances == pytest.approx([1.0, 0.0])

    qi_weights = fraction_transition_probabilities([2.0, 2.0], w)
    qi = expected_linear_moments(a, qi_weights, 1, 10)
    rs = expected_linear_moments(a, uniform_weights(2), 1, 10)

    assert qi.variance == pytest.approx(variances[0])
    assert rs.variance == pytest.approx(0.5 * variances[0] + 0.5 * variances[1])
    assert qi.covariance == pytest.approx(1.0)
    assert rs.covariance == pytest.approx(0.25)
    assert qi.variance > rs.variance
    assert qi.ambiguity == pytest.approx(0.0)
    assert rs.ambiguity == pytest.approx(0.9 * 0.25)
    assert np.isnan(qi.avg_err)


def test_uniform_subsets_maximise_expected_ambiguity_at_half_the_features(rng):
    # inclusion probabilities of 1/2 maximise every pi (1 - pi) term
    for _ in range(20):
        a = rng.uniform(0, 5, size=6)
        weights = fraction_transition_probabilities(rng.uniform(0.5, 2, 6), rng.standard_normal(6))
        qi = expected_linear_moments(a, weights, 3, 30)
        rs = expected_linear_moments(a, uniform_weights(6), 3, 30)
        assert qi.ambiguity <= rs.ambiguity + 1e-12


def test_weighted_subsets_raise_expected_covariance(rng):
    # inclusion probabilities follow a, so sum a pi^2 can only grow
    n = 50
    for m, k in ((6, 3), (8, 4), (8, 2)):
        for _ in range(20):
            s = rng.uniform(0.5, 3, m)
            w = rng.standard_normal(m)
            a = w**2 * s**2 / n
            qi = expected_linear_moments(a, fraction_transition_probabilities(s, w), k, 30)
            rs = expected_linear_moments(a, uniform_weights(m), k, 30)
            assert qi.covariance >= rs.covariance - 1e-12
            assert qi.variance >= rs.variance - 1e-12


def test_expected_moments_validate_input():
    with pytest.raises(InvalidInput):
        expected_linear_moments([1.0], uniform_weights(2), 1, 5)
    with pytest.raises(InvalidInput):
        expected_linear_moments([1.0, -1.0], uniform_weights(2), 1, 5)


def test_full_subsets_make_all_schemes_equal(rng):
    result = run_theory_trials(4, 40, 1.0, 4, 5, 3, rng)
    assert result.qi == result.rs
    assert result.qi == result.oracle
    assert result.wins["variance"] == 0


def test_weighted_selection_raises_variance_and_lowers_error(rng):
    trials = 20
    result = run_theory_trials(8, 200, 1.0, 4, 30, trials, rng)

    assert result.trial_count == trials
    assert result.e_var_qi > result.e_var_rs
    assert result.e_cov_qi > result.e_cov_rs
    assert result.qi.ensemble_err < result.rs.ensemble_err
    assert result.wins["variance"] >= trials - 2
    assert set(result.wins) == {"variance", "covariance", "ambiguity", "avg_err", "ensemble_err"}
    for moments in (result.qi, result.rs, result.oracle):
        assert moments.ambiguity == pytest.approx(
            (1 - 1 / 30) * (moments.variance - moments.covariance), rel=1e-9
        )


def test_theory_trials_are_reproducible():
    first = run_theory_trials(5, 60, 1.0, 2, 6, 4, np.random.default_rng(8), noise=0.1)
    second = run_theory_trials(5, 60, 1.0, 2, 6, 4, np.random.default_rng(8), noise=0.1)
    assert first == second
    assert first.as_dict()["qi"]["variance"] == first.e_var_qi


@pytest.mark.parametrize(
    "args",
    [(0, 10, 1.0, 1, 5, 2), (4, 1, 1.0, 1, 5, 2), (4, 10, 1.0, 5, 5, 2),
     (4, 10, 1.0, 2, 0, 2), (4, 10, 1.0, 2, 5, 0), (4, 10, 0.0, 2, 5, 2)],
)
def test_theory_trials_validate_input(rng, args):
    with pytest.raises(InvalidInput):
        run_theory_trials(*args, rng)


def test_moments_average_fieldwise():
    moments = [LinearMoments(1.0, 2.0, 3.0, 4.0, 5.0), LinearMoments(3.0, 4.0, 5.0, 6.0, 7.0)]
    assert LinearMoments.mean_of(moments) == LinearMoments(2.0, 3.0, 4.0, 5.0, 6.0)


def test_fraction_expectation_holds_for_equal_spectrum(rng):
    assert verify_fraction_expectation(4, 20000, rng) < 0.01
    assert verify_fraction_expectation(1, 1000, rng) == 0.0


def test_fraction_expectation_deviates_for_unequal_spectrum(rng):
    a, b = 4.0, 1.0
    # E[a u^2 / (a u^2 + b v^2)] for an isotropic Gaussian (u, v), by angle
    integral, _ = quad(lambda th: a * np.cos(th) ** 2 / (a * np.cos(th) ** 2 + b * np.sin(th) ** 2), 0, 2 * np.pi)
    expectation = integral / (2 * np.pi)
    assert expectation == pytest.approx(2 / 3, abs=1e-9)

    deviation = verify_fraction_expectation(2, 200000, rng, singular_values=[2.0, 1.0])
    assert deviation == pytest.approx(abs(expectation - a / (a + b)), abs=0.005)


def test_fraction_expectation_validates_input(rng):
    with pytest.raises(InvalidInput):
        verify_fraction_expectation(3, 999, rng)
    with pytest.raises(InvalidInput):
        verify_fraction_expectation(2, 1000, rng, singular_values=[1.0, 2.0, 3.0])
    with pytest.raises(InvalidInput):
        verify_fraction_expectation(2, 1000, rng, singular_values=[0.0, 0.0])
