"""
Dataset ingestion and synthetic generators.

CSV files are read with pandas; every cell of the feature and target columns
must parse as a finite number. Columns that hold no numeric value at all
(identifiers, names, categorical codes) are dropped with a warning.

The registry lists the ten regression benchmarks used in the comparison of
QI Forest against Random Forest, with their published shapes, so that
`make_standin` can produce synthetic data of the same size when the real
files are not available.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from qiforest.errors import InvalidInput, IoError
from qiforest.matrix_core import as_data_matrix, as_target_vector
from qiforest.structured_logger import get_logger

logger = get_logger(__name__)

# rows listed in a validation error before the list is truncated
MAX_REPORTED_ROWS = 10


@dataclass(frozen=True)
class Dataset:
    """A regression dataset: feature matrix, target vector and provenance."""

    name: str
    x: np.ndarray
    y: np.ndarray
    source_path: str = ""
    feature_names: tuple = field(default=())

    def __post_init__(self):
        x = as_data_matrix(self.x, name=f"{self.name}: x")
        y = as_target_vector(self.y, n_rows=x.shape[0], name=f"{self.name}: y")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        names = tuple(str(n) for n in self.feature_names) or tuple(
            f"x{i}" for i in range(x.shape[1])
        )
        if len(names) != x.shape[1]:
            raise InvalidInput(f"{self.name}: {len(names)} feature names for {x.shape[1]} columns")
        object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self):
        return int(self.x.shape[0])

    @property
    def n_features(self):
        return int(self.x.shape[1])


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    slug: str
    instances: int
    dimension: int


BENCHMARK_DATASETS = (
    DatasetInfo("Abalone", "abalone", 4177, 8),
    DatasetInfo("Communities Crime", "communities", 1994, 122),
    DatasetInfo("Communities Crime Unnormalized 1", "communities-unnormalized-1", 2215, 140),
    DatasetInfo("Communities Crime Unnormalized 2", "communities-unnormalized-2", 2215, 140),
    DatasetInfo("Facebook Metrics", "facebook-metrics", 500, 11),
    DatasetInfo("Forests Fire", "forest-fires", 517, 8),
    DatasetInfo("Housing", "housing", 505, 13),
    DatasetInfo("Slump Test", "slump", 103, 9),
    DatasetInfo("Wine Quality Red", "wine-red", 1599, 11),
    DatasetInfo("Wine Quality White", "wine-white", 4898, 11),
)


def dataset_info(name):
    """Registry entry by display name or slug (case-insensitive)."""
    key = str(name).strip().lower()
    for info in BENCHMARK_DATASETS:
        if key in (info.slug, info.name.lower()):
            return info
    known = ", ".join(info.slug for info in BENCHMARK_DATASETS)
    raise InvalidInput(f"unknown benchmark dataset {name!r} (known: {known})")


def _resolve_target(frame, target_column):
    columns = list(frame.columns)
    if target_column in columns:
        return target_column

    text = str(target_column).strip()
    if text in [str(c) for c in columns]:
        return columns[[str(c) for c in columns].index(text)]
    try:
        index = int(text)
    except ValueError:
        raise InvalidInput(
            f"target column {target_column!r} not found", columns=[str(c) for c in columns]
        ) from None
    if not -len(columns) <= index < len(columns):
        raise InvalidInput(f"target column index {index} out of range for {len(columns)} columns")
    return columns[index]


def load_csv(path, target_column, header=True, name=None):
    """
    Load a numeric regression dataset from a CSV file.

    Args:
        path: CSV file, UTF-8, comma separated
        target_column: column name, or zero-based column index (int or digit
            string; negative indices count from the end)
        header: whether the first line holds column names
        name: dataset name, defaults to the file stem

    Returns:
        Dataset

    Raises:
        IoError: file missing or unreadable
        InvalidInput: target missing, no numeric feature columns, or rows with
            blank / non-numeric cells (the offending rows are listed)
    """
    path = Path(path)
    name = name or path.stem
    try:
        frame = pd.read_csv(
            path,
            header=0 if header else None,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            encoding="utf-8",
        )
    except FileNotFoundError as e:
        raise IoError(f"dataset file not found: {path}", path=str(path)) from e
    except pd.errors.EmptyDataError as e:
        raise InvalidInput(f"{name}: file has no data", path=str(path)) from e
    except (OSError, UnicodeDecodeError, pd.errors.ParserError) as e:
        raise IoError(f"cannot read dataset file {path}: {e}", path=str(path)) from e

    if frame.empty:
        raise InvalidInput(f"{name}: file has no data rows", path=str(path))

    target = _resolve_target(frame, target_column)
    numeric = frame.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))

    empty_columns = [c for c in frame.columns if numeric[c].isna().all()]
    if target in empty_columns:
        raise InvalidInput(f"{name}: target column {target!r} holds no numeric values")
    if empty_columns:
        logger.warning(
            "dropping non-numeric columns",
            extra={"dataset": name, "columns": [str(c) for c in empty_columns]},
        )
    numeric = numeric.drop(columns=empty_columns)

    features = [c for c in numeric.columns if c != target]
    if not features:
        raise InvalidInput(f"{name}: no numeric feature columns", path=str(path))

    bad = numeric.isna() | ~np.isfinite(numeric.fillna(0.0))
    bad_rows = np.flatnonzero(bad.any(axis=1).to_numpy())
    if bad_rows.size:
        first = int(bad_rows[0])
        line = first + (2 if header else 1)
        columns = [str(c) for c in numeric.columns[bad.iloc[first].to_numpy()]]
        raise InvalidInput(
            f"{name}: {bad_rows.size} row(s) with missing or non-numeric cells, "
            f"first at data row {first}, file line {line} (columns {', '.join(columns)})",
            path=str(path),
            rows=[int(r) for r in bad_rows[:MAX_REPORTED_ROWS]],
        )

    dataset = Dataset(
        name=name,
        x=numeric[features].to_numpy(dtype=np.float64),
        y=numeric[target].to_numpy(dtype=np.float64),
        source_path=str(path),
        feature_names=tuple(str(c) for c in features),
    )
    logger.info(
        "dataset loaded",
        extra={"dataset": name, "n_samples": dataset.n_samples, "n_features": dataset.n_features},
    )
    return dataset


def load_directory(path, target_column, header=True):
    """Load every *.csv file of a directory, sorted by file name."""
    path = Path(path)
    if not path.is_dir():
        raise IoError(f"not a directory: {path}", path=str(path))
    files = sorted(p for p in path.iterdir() if p.suffix.lower() == ".csv" and p.is_file())
    if not files:
        raise InvalidInput(f"no .csv files in {path}", path=str(path))
    return [load_csv(p, target_column, header=header) for p in files]


def load_data(path, target_column, header=True):
    """A single CSV file or a directory of them, always as a list."""
    if os.path.isdir(path):
        return load_directory(path, target_column, header=header)
    return [load_csv(path, target_column, header=header)]


def _anisotropic_design(n, m, rng, decay=0.7):
    # geometric variance spectrum hidden behind a random rotation
    scales = decay ** np.arange(m)
    rotation, _ = np.linalg.qr(rng.standard_normal((m, m)))
    return (rng.standard_normal((n, m)) * scales) @ rotation.T


def _add_noise(signal, noise, rng):
    scale = float(np.std(signal)) or 1.0
    return signal + noise * scale * rng.standard_normal(signal.shape[0])


def make_linear(n, m, rng, noise=0.1, name="linear"):
    """
    Linear target on a correlated Gaussian design.

    y = x @ w + noise, with w ~ N(0, I) and noise scaled relative to the
    signal's standard deviation.
    """
    if n < 2 or m < 1:
        raise InvalidInput(f"need n >= 2 and m >= 1, got n={n}, m={m}")
    x = _anisotropic_design(n, m, rng)
    w = rng.standard_normal(m)
    return Dataset(name=name, x=x, y=_add_noise(x @ w, noise, rng), source_path="synthetic")


def make_piecewise(n, m, rng, n_directions=2, noise=0.1, name="piecewise"):
    """Piecewise-constant target: steps along a few random directions of the design."""
    if n < 2 or m < 1 or n_directions < 1:
        raise InvalidInput(f"need n >= 2, m >= 1, n_directions >= 1, got {n}, {m}, {n_directions}")
    x = _anisotropic_design(n, m, rng)
    directions = rng.standard_normal((m, n_directions))
    projections = x @ directions
    projections /= projections.std(axis=0)
    levels = np.digitize(projections, [-1.0, 0.0, 1.0]).astype(np.float64)
    y = levels @ rng.standard_normal(n_directions)
    return Dataset(name=name, x=x, y=_add_noise(y, noise, rng), source_path="synthetic")


def make_standin(name, rng, max_samples=None, noise=0.3):
    """
    Synthetic dataset with the shape of a registered benchmark.

    The target mixes a linear part and a piecewise-constant part so both tree
    and linear learners have something to find.

    Args:
        name: registry name or slug
        rng: numpy Generator
        max_samples: cap on the number of rows, for quick runs
        noise: noise level relative to the signal
    """
    info = dataset_info(name)
    n = info.instances if max_samples is None else min(info.instances, int(max_samples))
    m = info.dimension
    linear = make_linear(n, m, rng, noise=0.0)
    directions = rng.standard_normal((m, 2))
    steps = np.digitize(linear.x @ directions / np.std(linear.x @ directions, axis=0), [0.0])
    y = linear.y / np.std(linear.y) + steps.astype(np.float64) @ rng.standard_normal(2)
    return Dataset(
        name=info.slug,
        x=linear.x,
        y=_add_noise(y, noise, rng),
        source_path="synthetic",
    )


SYNTHETIC_GENERATORS = {"linear": make_linear, "piecewise": make_piecewise}


def make_synthetic(kind, n, m, rng):
    """A `make_linear` or `make_piecewise` dataset, picked by name."""
    key = str(kind).strip().lower()
    generator = SYNTHETIC_GENERATORS.get(key)
    if generator is None:
        raise InvalidInput(
            f"unknown synthetic dataset {kind!r} (choose from {', '.join(SYNTHETIC_GENERATORS)})"
        )
    return generator(n, m, rng, name=key)
