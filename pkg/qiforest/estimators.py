"""scikit-learn compatible wrapper around the ensemble trainer."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from qiforest import rng as rng_
from qiforest.ensemble import EnsembleConfig, learner_predictions, predict_ensemble, train_ensemble


class QIForestRegressor(RegressorMixin, BaseEstimator):
    """
    Bagged subspace ensemble regressor.

    With subset_mode="qis" (the default) this is a Quantum-Inspired Forest;
    subset_mode="uniform" gives a Random Forest whose trees each see one
    random feature subset, and learner="linear" swaps trees for least-squares
    learners.

    Parameters
    ----------
    n_estimators : int
        Number of base learners T.
    alpha : float
        Fraction of the (PCA-transformed) features each learner sees.
    learner : {"tree", "linear"}
    subset_mode : {"qis", "fraction", "uniform"}
    bootstrap : bool
        Train every learner on a bootstrap sample of the rows.
    random_state : int or None
        Master seed; None draws a fresh one at fit time.
    n_jobs : int
        joblib workers used to train the learners.
    """

    def __init__(
        self,
        n_estimators=30,
        alpha=0.5,
        learner="tree",
        subset_mode="qis",
        bootstrap=True,
        random_state=None,
        n_jobs=1,
    ):
        self.n_estimators = n_estimators
        self.alpha = alpha
        self.learner = learner
        self.subset_mode = subset_mode
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if self.random_state is None:
            seed = int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])
        else:
            seed = rng_.check_seed(self.random_state)

        config = EnsembleConfig(
            ensemble_size=self.n_estimators,
            alpha=self.alpha,
            learner_kind=self.learner,
            subset_mode=self.subset_mode,
            bootstrap=self.bootstrap,
            seed=seed,
            n_jobs=self.n_jobs,
        )
        self.model_ = train_ensemble(X, y, config)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return predict_ensemble(self.model_, check_array(X, dtype=np.float64))

    def learner_predictions(self, X):
        """T x n matrix of the individual learners' predictions."""
        check_is_fitted(self, "model_")
        return learner_predictions(self.model_, check_array(X, dtype=np.float64))

    @property
    def feature_weights_(self):
        """Selection probabilities over principal components used to draw subsets."""
        check_is_fitted(self, "model_")
        return self.model_.weights.p
