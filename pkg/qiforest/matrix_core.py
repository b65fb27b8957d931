"""
Dense matrix substrate: validation, singular value decomposition and
minimum-norm least squares.

Matrices are float64 numpy arrays in row-major sample order (rows are
samples, columns are features).
"""

from dataclasses import dataclass

import numpy as np

from qiforest.errors import InvalidInput

# singular values at or below RANK_TOL * s_max are treated as zero
RANK_TOL = 1e-12


def as_data_matrix(values, name="x"):
    """
    Validate and convert to an n x m float matrix.

    Raises:
        InvalidInput: not two-dimensional, empty, or containing NaN/infinity
    """
    try:
        x = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise InvalidInput(f"{name} is not numeric: {e}") from e

    if x.ndim != 2:
        raise InvalidInput(f"{name} must be two-dimensional, got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise InvalidInput(f"{name} must have at least one row and one column, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInput(f"{name} contains NaN or infinite values")
    return x


def as_target_vector(values, n_rows=None, name="y"):
    """Validate and convert to a length-n float vector, optionally paired with n_rows."""
    try:
        y = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise InvalidInput(f"{name} is not numeric: {e}") from e

    if y.ndim != 1:
        raise InvalidInput(f"{name} must be one-dimensional, got shape {y.shape}")
    if n_rows is not None and y.shape[0] != n_rows:
        raise InvalidInput(f"{name} has {y.shape[0]} values but the data matrix has {n_rows} rows")
    if not np.all(np.isfinite(y)):
        raise InvalidInput(f"{name} contains NaN or infinite values")
    return y


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD truncated to numerical rank: x ≈ u @ diag(s) @ v.T"""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def rank(self):
        return int(self.s.shape[0])

    def reconstruct(self):
        return (self.u * self.s) @ self.v.T


def svd(x):
    """
    Singular value decomposition truncated to the numerical rank.

    Singular values come back in descending order. Signs are fixed so that the
    largest-magnitude entry of every right singular vector is positive, which
    makes the factorisation reproducible across LAPACK builds.

    Args:
        x: finite n x m matrix

    Returns:
        SvdResult with u (n x r), s (r,), v (m x r)
    """
    x = as_data_matrix(x)
    u, s, vt = np.linalg.svd(x, full_matrices=False)

    s_max = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > RANK_TOL * s_max)) if s_max > 0 else 0

    u = u[:, :rank]
    s = s[:rank]
    v = vt[:rank].T

    if rank:
        pivots = np.argmax(np.abs(v), axis=0)
        signs = np.sign(v[pivots, np.arange(rank)])
        signs[signs == 0] = 1.0
        u = u * signs
        v = v * signs

    return SvdResult(u=u, s=s, v=v)


def ols_solve(x, y):
    """
    Minimum-norm least-squares solution of x @ w ≈ y.

    Solved through the truncated SVD pseudoinverse, so rank-deficient designs
    (tiny trailing singular values after PCA, duplicated columns) return the
    minimum-norm solution instead of failing.

    Args:
        x: n x m design matrix
        y: length-n target

    Returns:
        weight vector of length m

    Raises:
        InvalidInput: non-finite values or y not paired with x
    """
    x = as_data_matrix(x)
    y = as_target_vector(y, n_rows=x.shape[0])

    decomposition = svd(x)
    if decomposition.rank == 0:
        return np.zeros(x.shape[1])

    coefficients = (decomposition.u.T @ y) / decomposition.s
    return decomposition.v @ coefficients
