"""
Ensemble diagnostics.

Finite-sample error decompositions of a trained ensemble and Monte Carlo
trials comparing weighted and uniform subspace selection for linear base
learners on orthogonal (PCA-transformed) data.

All expectations over inputs are averages over the evaluation rows. Learner
errors are centred on the shared ensemble bias B = mean(H - y), which makes
the error-ambiguity, bias-variance-covariance and error-variance-covariance
decompositions exact identities on any evaluation set.
"""

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from qiforest import pca as pca_
from qiforest import rng as rng_
from qiforest.ensemble import learner_predictions
from qiforest.errors import DegenerateData, InvalidInput
from qiforest.learners import train_linear
from qiforest.matrix_core import as_data_matrix, as_target_vector
from qiforest.qis import (
    fraction_transition_probabilities,
    inclusion_probabilities,
    sample_subset,
    subspace_weights,
    uniform_weights,
)
from qiforest.structured_logger import get_logger

logger = get_logger(__name__)

IDENTITY_RTOL = 1e-9

MAX_REDRAWS = 20


@dataclass(frozen=True)
class DecompositionReport:
    avg_err: float
    avg_ambiguity: float
    ensemble_err: float
    avg_variance: float
    avg_covariance: float
    avg_bias_sq: float
    n_eval: int
    ensemble_size: int

    def as_dict(self):
        return asdict(self)


def _pair_mean(gram):
    t = gram.shape[0]
    if t < 2:
        return 0.0
    return float((gram.sum() - np.trace(gram)) / (t * (t - 1)))


def _check_identity(name, lhs, rhs, scale):
    if abs(lhs - rhs) > IDENTITY_RTOL * scale:
        raise DegenerateData(
            f"{name} identity violated: {lhs!r} != {rhs!r}", lhs=float(lhs), rhs=float(rhs)
        )


def decomposition_from_predictions(predictions, y):
    """
    Decompose the error of an averaging ensemble from its learners' predictions.

    Args:
        predictions: T x n matrix, row i holds learner i's predictions
        y: n evaluation targets

    Returns:
        DecompositionReport
    """
    predictions = as_data_matrix(predictions, name="predictions")
    t, n = predictions.shape
    y = as_target_vector(y, n_rows=n)

    ensemble = predictions.mean(axis=0)
    deviations = predictions - y
    bias = float(np.mean(ensemble - y))
    centred = deviations - bias
    gram = centred @ centred.T / n

    report = DecompositionReport(
        avg_err=float(np.mean(deviations**2)),
        avg_ambiguity=float(np.mean((predictions - ensemble) ** 2)),
        ensemble_err=float(np.mean((ensemble - y) ** 2)),
        avg_variance=float(np.trace(gram) / t),
        avg_covariance=_pair_mean(gram),
        avg_bias_sq=bias * bias,
        n_eval=n,
        ensemble_size=t,
    )

    # avg_err is zero when every learner fits the rows exactly
    scale = max(report.avg_err, float(np.mean(predictions**2)), float(np.mean(y**2)))
    _check_identity(
        "error-ambiguity", report.ensemble_err, report.avg_err - report.avg_ambiguity, scale
    )
    _check_identity(
        "bias-variance-covariance",
        report.ensemble_err,
        report.avg_bias_sq
        + report.avg_variance / t
        + (1.0 - 1.0 / t) * report.avg_covariance,
        scale,
    )
    _check_identity(
        "error-variance-covariance",
        report.ensemble_err,
        report.avg_err - (1.0 - 1.0 / t) * (report.avg_variance - report.avg_covariance),
        scale,
    )
    return report


def decompose(model, x, y):
    """Decomposition of a trained ensemble on an evaluation set of raw rows."""
    x = as_data_matrix(x)
    y = as_target_vector(y, n_rows=x.shape[0])
    report = decomposition_from_predictions(learner_predictions(model, x), y)
    logger.debug("ensemble decomposed", extra=report.as_dict())
    return report


@dataclass(frozen=True)
class LinearMoments:
    """Moments of one linear ensemble, or their average over trials."""

    variance: float
    covariance: float
    ambiguity: float
    avg_err: float
    ensemble_err: float

    @classmethod
    def from_predictions(cls, predictions, y):
        n = predictions.shape[1]
        centred = predictions - predictions.mean(axis=1, keepdims=True)
        gram = centred @ centred.T / n
        ensemble = predictions.mean(axis=0)
        return cls(
            variance=float(np.trace(gram) / predictions.shape[0]),
            covariance=_pair_mean(gram),
            ambiguity=float(np.mean((predictions - ensemble) ** 2)),
            avg_err=float(np.mean((predictions - y) ** 2)),
            ensemble_err=float(np.mean((ensemble - y) ** 2)),
        )

    @classmethod
    def mean_of(cls, moments):
        return cls(
            **{
                f.name: float(np.mean([getattr(m, f.name) for m in moments]))
                for f in fields(cls)
            }
        )


@dataclass(frozen=True)
class TheoryTrialResult:
    """
    Trial averages for three subset schemes on the same data and weights.

    qi uses probabilities from fitted amplitudes, oracle from the true
    weights, rs is the uniform random subspace. `wins` counts trials in which
    the fitted-amplitude scheme beat the uniform one on each criterion.
    """

    qi: LinearMoments
    rs: LinearMoments
    oracle: LinearMoments
    trial_count: int
    wins: dict = field(default_factory=dict)
    redraws: int = 0

    @property
    def e_var_qi(self):
        return self.qi.variance

    @property
    def e_var_rs(self):
        return self.rs.variance

    @property
    def e_cov_qi(self):
        return self.qi.covariance

    @property
    def e_cov_rs(self):
        return self.rs.covariance

    @property
    def e_ambi_qi(self):
        return self.qi.ambiguity

    @property
    def e_ambi_rs(self):
        return self.rs.ambiguity

    def as_dict(self):
        return {
            "trial_count": self.trial_count,
            "redraws": self.redraws,
            "qi": asdict(self.qi),
            "rs": asdict(self.rs),
            "oracle": asdict(self.oracle),
            "wins": dict(self.wins),
        }


def _draw_trial_data(m_dims, n_samples, sigma, noise, rng):
    z = rng.standard_normal((n_samples, m_dims))
    mixing = rng.standard_normal((m_dims, m_dims))
    model = pca_.fit(z @ mixing)
    if model.rank < m_dims:
        raise DegenerateData(f"trial design has rank {model.rank} < {m_dims}")

    x_r = pca_.transform(model, z @ mixing)
    w = rng.normal(0.0, sigma, size=m_dims)
    y = x_r @ w
    if noise > 0:
        y = y + rng.normal(0.0, noise, size=n_samples)
    if np.ptp(y) == 0:
        raise DegenerateData("trial target is constant")
    return x_r, y, w, model.singular_values


def _ensemble_moments(x_r, y, weights, k, t_ensemble, rng):
    predictions = np.empty((t_ensemble, x_r.shape[0]))
    for i in range(t_ensemble):
        learner = train_linear(x_r, y, sample_subset(weights, k, rng))
        predictions[i] = learner.model.predict(learner.project(x_r))
    return LinearMoments.from_predictions(predictions, y)


def _one_trial(m_dims, n_samples, sigma, k, t_ensemble, noise, seed, trial):
    redraws = 0
    while True:
        trial_rng = rng_.derive_rng(seed, rng_.TRIAL, trial, redraws)
        try:
            x_r, y, w, s = _draw_trial_data(m_dims, n_samples, sigma, noise, trial_rng)
            schemes = {
                "qi": subspace_weights(x_r, y, "fraction_transition"),
                "rs": uniform_weights(m_dims),
                "oracle": fraction_transition_probabilities(s, w),
            }
            break
        except DegenerateData as e:
            redraws += 1
            logger.debug("redrawing degenerate trial", extra={"trial": trial, "reason": e.detail})
            if redraws > MAX_REDRAWS:
                raise DegenerateData(
                    f"trial {trial} stayed degenerate after {MAX_REDRAWS} redraws"
                ) from e

    moments = {
        name: _ensemble_moments(x_r, y, weights, k, t_ensemble, trial_rng)
        for name, weights in schemes.items()
    }
    return moments, redraws


def run_theory_trials(m_dims, n_samples, sigma, k, t_ensemble, trials, rng, noise=0.0):
    """
    Monte Carlo comparison of weighted and uniform subspace selection for
    ensembles of linear regressors.

    Every trial draws a correlated Gaussian design, rotates it with full-rank
    PCA, draws true weights w ~ N(0, sigma^2) and sets y = x_r @ w (plus
    optional Gaussian noise). Three ensembles of t_ensemble linear learners
    are then trained without bootstrap on subsets of size k, and their
    variance, covariance and ambiguity measured on the training rows.

    Args:
        m_dims: number of features
        n_samples: rows per trial
        sigma: standard deviation of the true weights
        k: subset size
        t_ensemble: learners per ensemble
        trials: number of trials
        rng: numpy Generator; one seed is drawn from it and every trial
            derives its own stream from that seed and the trial index
        noise: standard deviation of additive target noise

    Returns:
        TheoryTrialResult
    """
    if m_dims < 1 or n_samples < 2:
        raise InvalidInput(f"need m_dims >= 1 and n_samples >= 2, got {m_dims} and {n_samples}")
    if not 1 <= k <= m_dims:
        raise InvalidInput(f"subset size must be in [1, {m_dims}], got {k}")
    if t_ensemble < 1 or trials < 1:
        raise InvalidInput(f"need t_ensemble >= 1 and trials >= 1, got {t_ensemble} and {trials}")
    if sigma <= 0 or noise < 0:
        raise InvalidInput(f"need sigma > 0 and noise >= 0, got {sigma} and {noise}")

    seed = int(rng.integers(0, 2**63))
    per_trial, redraws = [], 0
    for trial in range(trials):
        moments, extra = _one_trial(m_dims, n_samples, sigma, k, t_ensemble, noise, seed, trial)
        per_trial.append(moments)
        redraws += extra

    wins = {
        "variance": sum(t["qi"].variance > t["rs"].variance for t in per_trial),
        "covariance": sum(t["qi"].covariance < t["rs"].covariance for t in per_trial),
        "ambiguity": sum(t["qi"].ambiguity > t["rs"].ambiguity for t in per_trial),
        "avg_err": sum(t["qi"].avg_err < t["rs"].avg_err for t in per_trial),
        "ensemble_err": sum(t["qi"].ensemble_err < t["rs"].ensemble_err for t in per_trial),
    }
    result = TheoryTrialResult(
        qi=LinearMoments.mean_of([t["qi"] for t in per_trial]),
        rs=LinearMoments.mean_of([t["rs"] for t in per_trial]),
        oracle=LinearMoments.mean_of([t["oracle"] for t in per_trial]),
        trial_count=trials,
        wins=wins,
        redraws=redraws,
    )
    logger.info("theory trials finished", extra=result.as_dict())
    return result


def expected_linear_moments(a, weights, k, t_ensemble):
    """
    Exact expected moments of an orthogonal linear ensemble over subset draws.

    With orthogonal features and parameter invariance, learner i predicts
    sum over k in F_i of w_k x_k, so its variance is the sum of the per-feature
    contributions a_k = w_k^2 s_k^2 / n over its subset. Taking expectation over
    independently drawn subsets with inclusion probabilities pi_k:

        E[var]   = sum a_k pi_k
        E[covar] = sum a_k pi_k^2
        E[ambi]  = (1 - 1/T) (E[var] - E[covar])

    Returns:
        LinearMoments with avg_err and ensemble_err left at NaN
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape != weights.p.shape or np.any(a < 0):
        raise InvalidInput(f"contributions must be {weights.p.shape[0]} non-negative values")
    if t_ensemble < 1:
        raise InvalidInput(f"ensemble size must be at least 1, got {t_ensemble}")

    pi = inclusion_probabilities(weights, k)
    variance = float(a @ pi)
    covariance = float(a @ pi**2)
    return LinearMoments(
        variance=variance,
        covariance=covariance,
        ambiguity=(1.0 - 1.0 / t_ensemble) * (variance - covariance),
        avg_err=float("nan"),
        ensemble_err=float("nan"),
    )


def verify_fraction_expectation(m_dims, trials, rng, singular_values=None, sigma=1.0):
    """
    Monte Carlo check of E[w_k^2 s_k^2 / sum_i w_i^2 s_i^2] against s_k^2 / sum_i s_i^2
    for w ~ N(0, sigma^2 I).

    The two agree only when all singular values are equal, so the deviation is
    measured and returned rather than asserted.

    Returns:
        max_k |Monte Carlo mean - s_k^2 / sum s_i^2|
    """
    if trials < 1000:
        raise InvalidInput(f"need at least 1000 trials, got {trials}")
    s = np.ones(m_dims) if singular_values is None else np.asarray(singular_values, dtype=float)
    if s.ndim != 1 or s.shape[0] != m_dims or m_dims < 1:
        raise InvalidInput(f"need {m_dims} singular values, got shape {s.shape}")
    if np.any(s < 0) or not np.any(s > 0) or sigma <= 0:
        raise InvalidInput("singular values must be non-negative with at least one positive")

    s = s / s.max()
    w = rng.normal(0.0, sigma, size=(trials, m_dims))
    q = (w * s) ** 2
    totals = q.sum(axis=1, keepdims=True)
    p = np.divide(q, totals, out=np.zeros_like(q), where=totals > 0)

    empirical = p.mean(axis=0)
    fraction = s**2 / np.sum(s**2)
    deviation = float(np.max(np.abs(empirical - fraction)))
    logger.info(
        "fraction expectation measured",
        extra={
            "trials": trials,
            "empirical": empirical.round(6).tolist(),
            "fraction": fraction.round(6).tolist(),
            "max_deviation": deviation,
        },
    )
    return deviation
