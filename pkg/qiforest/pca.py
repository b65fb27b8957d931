"""
Full-rank PCA: centre the columns, rotate into the principal basis, keep every
component. The rotation is orthogonal, so the transform is lossless.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from qiforest.errors import InvalidInput
from qiforest.matrix_core import as_data_matrix, svd


@dataclass(frozen=True)
class PcaModel:
    """
    Fitted full-rank PCA.

    Attributes:
        rotation: m x m orthogonal matrix, columns are the principal directions
            (right singular vectors, completed to a full basis when rank < m)
        singular_values: m values, descending; entries beyond the rank are 0
        column_means: training column means subtracted before rotating
        n_samples: number of rows the model was fitted on
    """

    rotation: np.ndarray
    singular_values: np.ndarray
    column_means: np.ndarray
    n_samples: int

    @property
    def n_features(self):
        return int(self.rotation.shape[0])

    @property
    def rank(self):
        return int(np.count_nonzero(self.singular_values > 0))

    @property
    def explained_variance(self):
        """Column variances of the transformed training data (n - 1 denominator)."""
        return self.singular_values**2 / (self.n_samples - 1)


def fit(x):
    """
    Fit full-rank PCA on the column-centred matrix.

    Raises:
        InvalidInput: fewer than two rows, or non-finite values
    """
    x = as_data_matrix(x)
    n, m = x.shape
    if n < 2:
        raise InvalidInput(f"PCA needs at least 2 rows, got {n}")

    column_means = x.mean(axis=0)
    decomposition = svd(x - column_means)
    rank = decomposition.rank

    if rank == 0:
        rotation = np.eye(m)
    elif rank < m:
        # orthonormal completion of the principal directions
        completion = null_space(decomposition.v.T)
        rotation = np.hstack([decomposition.v, completion[:, : m - rank]])
    else:
        rotation = decomposition.v

    singular_values = np.zeros(m)
    singular_values[:rank] = decomposition.s

    return PcaModel(
        rotation=rotation,
        singular_values=singular_values,
        column_means=column_means,
        n_samples=n,
    )


def _check_columns(model, x):
    if x.shape[1] != model.n_features:
        raise InvalidInput(
            f"data has {x.shape[1]} columns but the PCA model was fitted on {model.n_features}"
        )


def transform(model, x):
    """Rotate x into the principal basis: (x - column_means) @ rotation."""
    x = as_data_matrix(x)
    _check_columns(model, x)
    return (x - model.column_means) @ model.rotation


def inverse_transform(model, z):
    """Map principal-basis coordinates back to the original feature space."""
    z = as_data_matrix(z, name="z")
    _check_columns(model, z)
    return z @ model.rotation.T + model.column_means
