"""
Quantum-inspired subspace sampling.

Each principal component k gets a selection weight

    fraction_transition:  p_k = s_k^2 t_k^2 / sum_i s_i^2 t_i^2
    fraction_only:        p_k = s_k^2 / sum_i s_i^2
    uniform:              p_k = 1 / m          (plain random subspace)

where s_k are the singular values of the PCA-transformed training data and
t_k the least-squares coefficients mapping it onto the target. Feature subsets
for the base learners are drawn from these weights without replacement.
"""

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from qiforest import rng as rng_
from qiforest.errors import DegenerateData, InvalidInput
from qiforest.matrix_core import as_data_matrix, as_target_vector, ols_solve
from qiforest.structured_logger import get_logger

logger = get_logger(__name__)


class SubspaceMode(str, enum.Enum):
    FRACTION_TRANSITION = "fraction_transition"
    FRACTION_ONLY = "fraction_only"
    UNIFORM = "uniform"

    @classmethod
    def parse(cls, value):
        """Accept enum members, their values, or the CLI spellings qis/fraction/uniform."""
        if isinstance(value, cls):
            return value
        aliases = {"qis": cls.FRACTION_TRANSITION, "fraction": cls.FRACTION_ONLY}
        key = str(value).strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(["qis", "fraction", *(mode.value for mode in cls)])
            raise InvalidInput(f"unknown subset mode {value!r} (choose from {choices})") from None


@dataclass(frozen=True)
class SubspaceWeights:
    """Selection probabilities over transformed-feature indices."""

    p: np.ndarray
    mode: SubspaceMode

    @property
    def n_features(self):
        return int(self.p.shape[0])


@dataclass(frozen=True)
class FeatureSubset:
    """K distinct feature indices, stored ascending."""

    indices: tuple

    def __post_init__(self):
        indices = tuple(sorted(int(i) for i in self.indices))
        if not indices:
            raise InvalidInput("feature subset must not be empty")
        if len(set(indices)) != len(indices):
            raise InvalidInput(f"feature subset has duplicate indices: {indices}")
        if indices[0] < 0:
            raise InvalidInput(f"feature subset has negative index: {indices}")
        object.__setattr__(self, "indices", indices)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def as_array(self):
        return np.asarray(self.indices, dtype=np.intp)


def _normalise(q, mode, what):
    q = np.asarray(q, dtype=np.float64)
    total = q.sum()
    if not np.all(np.isfinite(q)) or not np.isfinite(total) or total <= 0:
        raise DegenerateData(f"{what} are all zero or non-finite; cannot form {mode.value} weights")
    return SubspaceWeights(p=q / total, mode=mode)


def uniform_weights(m):
    if m < 1:
        raise InvalidInput(f"need at least one feature, got {m}")
    return SubspaceWeights(p=np.full(m, 1.0 / m), mode=SubspaceMode.UNIFORM)


def fraction_probabilities(singular_values):
    """p_k = s_k^2 / sum s_i^2."""
    s = np.asarray(singular_values, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise InvalidInput("singular values must be a non-empty vector")
    # rescale before squaring so huge or tiny spectra neither overflow nor underflow
    scale = np.max(np.abs(s)) if np.all(np.isfinite(s)) else 1.0
    if scale > 0:
        s = s / scale
    return _normalise(s**2, SubspaceMode.FRACTION_ONLY, "singular values")


def transition_amplitudes(x_r, y):
    """Least-squares coefficients of the PCA-transformed data onto the target."""
    x_r = as_data_matrix(x_r, name="x_r")
    y = as_target_vector(y, n_rows=x_r.shape[0])
    return ols_solve(x_r, y)


def fraction_transition_probabilities(singular_values, amplitudes):
    """p_k = s_k^2 t_k^2 / sum s_i^2 t_i^2."""
    s = np.asarray(singular_values, dtype=np.float64)
    t = np.asarray(amplitudes, dtype=np.float64)
    if s.ndim != 1 or s.shape != t.shape or s.size == 0:
        raise InvalidInput(
            f"singular values {s.shape} and amplitudes {t.shape} must be equal-length vectors"
        )
    product = np.abs(s * t)
    scale = np.max(product) if np.all(np.isfinite(product)) else 1.0
    if scale > 0:
        product = product / scale
    return _normalise(product**2, SubspaceMode.FRACTION_TRANSITION, "products s_k * t_k")


def subspace_weights(x_r, y, mode):
    """
    Selection weights for PCA-transformed training data, with the fallback
    ladder fraction_transition -> fraction_only -> uniform on degenerate input.

    The fraction of component k is read from the column norm of x_r, which is
    s_k for centred training data.
    """
    mode = SubspaceMode.parse(mode)
    x_r = as_data_matrix(x_r, name="x_r")
    m = x_r.shape[1]

    if mode is SubspaceMode.UNIFORM:
        return uniform_weights(m)

    singular_values = np.linalg.norm(x_r, axis=0)

    if mode is SubspaceMode.FRACTION_TRANSITION:
        try:
            amplitudes = transition_amplitudes(x_r, y)
            return fraction_transition_probabilities(singular_values, amplitudes)
        except DegenerateData as e:
            logger.warning("falling back to fraction-only weights", extra={"reason": e.detail})

    try:
        return fraction_probabilities(singular_values)
    except DegenerateData as e:
        logger.warning("falling back to uniform weights", extra={"reason": e.detail})
    return uniform_weights(m)


def subset_size(alpha, m):
    """K = round(alpha * m), halves rounded up, clamped to [1, m]."""
    if not 0 < alpha <= 1:
        raise InvalidInput(f"alpha must lie in (0, 1], got {alpha}")
    return min(max(int(math.floor(alpha * m + 0.5)), 1), m)


def sample_subset(weights, k, rng):
    """
    Draw k distinct indices by sequential weighted sampling without replacement.

    One index is drawn proportionally to the current weights, its weight is
    zeroed, the rest renormalised, and so on. Once every positive-weight index
    is taken, the remaining slots are filled uniformly from the zero-weight
    indices.

    Args:
        weights: SubspaceWeights over m features
        k: subset size, 1 <= k <= m
        rng: numpy Generator

    Returns:
        FeatureSubset of size k
    """
    m = weights.n_features
    if not 1 <= k <= m:
        raise InvalidInput(f"subset size must be in [1, {m}], got {k}")

    remaining = weights.p.astype(np.float64, copy=True)
    chosen = []
    while len(chosen) < k:
        total = remaining.sum()
        if total <= 0:
            break
        index = int(rng.choice(m, p=remaining / total))
        chosen.append(index)
        remaining[index] = 0.0

    if len(chosen) < k:
        taken = set(chosen)
        leftovers = np.array([i for i in range(m) if i not in taken])
        fill = rng.choice(leftovers, size=k - len(chosen), replace=False)
        chosen.extend(int(i) for i in fill)

    return FeatureSubset(tuple(chosen))


def generate_subsets(x_r, y, t_ensemble, k, mode, seed):
    """
    T independent feature subsets of size k for PCA-transformed training data.

    Subset i is drawn from its own stream derive_rng(seed, SUBSET, i), so a
    learner's subset does not depend on how many others are drawn or in what
    order.

    Args:
        x_r: PCA-transformed training matrix
        y: training targets
        t_ensemble: number of subsets
        k: subset size
        mode: SubspaceMode name, or SubspaceWeights already computed for x_r and y
        seed: ensemble seed

    Returns:
        list of FeatureSubset
    """
    if t_ensemble < 1:
        raise InvalidInput(f"ensemble size must be at least 1, got {t_ensemble}")
    x_r = as_data_matrix(x_r, name="x_r")
    weights = mode if isinstance(mode, SubspaceWeights) else subspace_weights(x_r, y, mode)
    if weights.n_features != x_r.shape[1]:
        raise InvalidInput(f"weights cover {weights.n_features} features, x_r has {x_r.shape[1]}")
    logger.debug(
        "subspace weights computed",
        extra={"mode": weights.mode.value, "weights": weights.p.round(6).tolist()},
    )
    return [
        sample_subset(weights, k, rng_.derive_rng(seed, rng_.SUBSET, index))
        for index in range(t_ensemble)
    ]


def subset_distribution(weights, k):
    """
    Exact probability of every size-k subset under sample_subset.

    Enumerates all draw sequences, so only meant for small m.

    Returns:
        dict mapping FeatureSubset -> probability
    """
    m = weights.n_features
    if not 1 <= k <= m:
        raise InvalidInput(f"subset size must be in [1, {m}], got {k}")

    distribution = {}

    def fill_uniform(chosen, probability):
        leftovers = [i for i in range(m) if i not in chosen]
        slots = k - len(chosen)
        n_ways = math.comb(len(leftovers), slots)
        for extra in itertools.combinations(leftovers, slots):
            subset = FeatureSubset(tuple(chosen) + extra)
            distribution[subset] = distribution.get(subset, 0.0) + probability / n_ways

    def walk(chosen, remaining, probability):
        if len(chosen) == k:
            subset = FeatureSubset(tuple(chosen))
            distribution[subset] = distribution.get(subset, 0.0) + probability
            return
        total = remaining.sum()
        if total <= 0:
            fill_uniform(chosen, probability)
            return
        for index in np.flatnonzero(remaining > 0):
            nxt = remaining.copy()
            nxt[index] = 0.0
            walk(chosen + [int(index)], nxt, probability * remaining[index] / total)

    walk([], weights.p.astype(np.float64, copy=True), 1.0)
    return distribution


def inclusion_probabilities(weights, k):
    """Exact probability that each feature appears in a sampled subset."""
    pi = np.zeros(weights.n_features)
    for subset, probability in subset_distribution(weights, k).items():
        pi[subset.as_array()] += probability
    return pi
