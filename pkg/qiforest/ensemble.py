"""
Bagged subspace ensembles with simple-averaging prediction.

Random Forest and Quantum-Inspired Forest share one training loop and differ
only in the weights their feature subsets are drawn from. Every learner gets
its own bootstrap stream and subset stream derived from the master seed and
the learner index, so:

  * training is bit-identical whatever n_jobs is;
  * two ensembles trained with the same seed draw the same bootstrap rows,
    which is what isolates the subset scheme in a treatment/baseline pair.
"""

import hashlib
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from qiforest import pca as pca_
from qiforest import rng as rng_
from qiforest.errors import InvalidInput
from qiforest.learners import LearnerKind, predict_many, train_learner
from qiforest.matrix_core import as_data_matrix, as_target_vector
from qiforest.qis import SubspaceMode, generate_subsets, subset_size, subspace_weights
from qiforest.structured_logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class EnsembleConfig:
    """
    Hyperparameters of one ensemble.

    Defaults follow the benchmark protocol: T = 30 learners on subsets of
    half the transformed features, trees, bootstrap on.
    """

    ensemble_size: int = 30
    alpha: float = 0.5
    learner_kind: LearnerKind = LearnerKind.TREE
    subset_mode: SubspaceMode = SubspaceMode.UNIFORM
    bootstrap: bool = True
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "learner_kind", LearnerKind.parse(self.learner_kind))
        object.__setattr__(self, "subset_mode", SubspaceMode.parse(self.subset_mode))
        object.__setattr__(self, "seed", rng_.check_seed(self.seed))
        if int(self.ensemble_size) != self.ensemble_size or self.ensemble_size < 1:
            raise InvalidInput(f"ensemble size must be a positive integer, got {self.ensemble_size}")
        object.__setattr__(self, "ensemble_size", int(self.ensemble_size))
        if not 0 < self.alpha <= 1:
            raise InvalidInput(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.n_jobs == 0:
            raise InvalidInput("n_jobs must be non-zero (use -1 for all cores)")

    def replace(self, **changes):
        values = {**self.as_dict(), **changes}
        return EnsembleConfig(**values)

    def as_dict(self):
        return {
            "ensemble_size": self.ensemble_size,
            "alpha": self.alpha,
            "learner_kind": self.learner_kind.value,
            "subset_mode": self.subset_mode.value,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
            "n_jobs": self.n_jobs,
        }


@dataclass(frozen=True)
class EnsembleModel:
    """
    Trained ensemble.

    Attributes:
        learners: the T trained base learners
        pca: rotation applied to raw rows before the learners see them
        config: hyperparameters the model was trained with
        weights: selection probabilities the subsets were drawn from
        draw_digest: sha256 over all bootstrap row indices, for checking that
            paired ensembles consumed identical draws
    """

    learners: tuple
    pca: pca_.PcaModel
    config: EnsembleConfig
    weights: object
    draw_digest: str

    @property
    def ensemble_size(self):
        return len(self.learners)

    @property
    def n_features(self):
        return self.pca.n_features


def _bootstrap_rows(n, seed, index, bootstrap):
    if not bootstrap:
        return np.arange(n)
    return rng_.derive_rng(seed, rng_.BOOTSTRAP, index).integers(0, n, size=n)


def _train_member(x_r, y, subset, config, index):
    rows = _bootstrap_rows(x_r.shape[0], config.seed, index, config.bootstrap)
    learner = train_learner(config.learner_kind, x_r[rows], y[rows], subset)
    return learner, rows


def train_ensemble(x, y, config, pca=None):
    """
    Train T learners on bootstrap rows and weighted feature subsets.

    Args:
        x: raw n x m training matrix
        y: training targets
        config: EnsembleConfig; its subset_mode picks the subset weights
        pca: prefitted PcaModel; fitted on x when omitted

    Returns:
        EnsembleModel
    """
    x = as_data_matrix(x)
    y = as_target_vector(y, n_rows=x.shape[0])
    pca = pca if pca is not None else pca_.fit(x)
    x_r = pca_.transform(pca, x)

    # weights come from the full training set, once, before any bootstrap
    weights = subspace_weights(x_r, y, config.subset_mode)
    k = subset_size(config.alpha, x_r.shape[1])
    subsets = generate_subsets(x_r, y, config.ensemble_size, k, weights, config.seed)

    logger.debug(
        "training ensemble",
        extra={
            "config": config.as_dict(),
            "subset_size": k,
            "weights_mode": weights.mode.value,
            "n_samples": x.shape[0],
        },
    )

    members = Parallel(n_jobs=config.n_jobs)(
        delayed(_train_member)(x_r, y, subset, config, index)
        for index, subset in enumerate(subsets)
    )

    digest = hashlib.sha256()
    for _, rows in members:
        digest.update(np.ascontiguousarray(rows, dtype=np.int64).tobytes())

    return EnsembleModel(
        learners=tuple(learner for learner, _ in members),
        pca=pca,
        config=config,
        weights=weights,
        draw_digest=digest.hexdigest(),
    )


def train_random_forest(x, y, config, pca=None):
    """Bagging with uniformly drawn feature subsets (random subspace)."""
    if config.subset_mode is not SubspaceMode.UNIFORM:
        raise InvalidInput(
            f"random forest draws uniform subsets, got subset mode {config.subset_mode.value}"
        )
    return train_ensemble(x, y, config, pca=pca)


def train_qi_forest(x, y, config, pca=None):
    """Bagging with subsets drawn from fraction(-transition) probabilities."""
    if config.subset_mode is SubspaceMode.UNIFORM:
        raise InvalidInput("quantum-inspired forest needs subset mode fraction_only or fraction_transition")
    return train_ensemble(x, y, config, pca=pca)


def learner_predictions(model, x):
    """T x n matrix of individual learner predictions on raw rows."""
    x = as_data_matrix(x)
    if x.shape[1] != model.n_features:
        raise InvalidInput(f"model expects {model.n_features} features, got {x.shape[1]}")
    x_r = pca_.transform(model.pca, x)
    return np.vstack([predict_many(learner, x_r) for learner in model.learners])


def predict_ensemble(model, x):
    """Simple average of the learner predictions for every row."""
    return learner_predictions(model, x).mean(axis=0)


def mse(predictions, truth):
    predictions = as_target_vector(predictions, name="predictions")
    truth = as_target_vector(truth, n_rows=predictions.shape[0], name="truth")
    return float(np.mean((predictions - truth) ** 2))
