"""
Benchmark protocol: treatment vs baseline ensembles over repeated random splits.

For every dataset and repeat a fresh train/test split is drawn, targets are
standardised and PCA fitted on the training rows, and the treatment and
baseline ensembles are trained with the same model seed. Both therefore see
identical splits and identical bootstrap rows; only the feature subsets
differ. Test MSEs are aggregated into mean and sample standard deviation over
repeats and compared with the verdict rule in `verdict_for`.
"""

import json
import math
import sys
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
from joblib import Parallel, delayed

from qiforest import pca as pca_
from qiforest import rng as rng_
from qiforest.ensemble import EnsembleConfig, mse, predict_ensemble, train_ensemble
from qiforest.errors import DegenerateData, InvalidInput, IoError, QIForestError
from qiforest.learners import LearnerKind
from qiforest.qis import SubspaceMode
from qiforest.structured_logger import get_logger

logger = get_logger(__name__)

MIN_SAMPLES = 10

SIGNIFICANTLY_BETTER = "++"
BETTER = "+"
TIE = "="
WORSE = "−"
SIGNIFICANTLY_WORSE = "−−"

SWEEP_PARAMETERS = {
    "alpha": "alpha",
    "trees": "ensemble_size",
    "ensemble_size": "ensemble_size",
    "train-frac": "train_fraction",
    "train_frac": "train_fraction",
    "train_fraction": "train_fraction",
}


@dataclass(frozen=True)
class ExperimentSpec:
    """One treatment-vs-baseline comparison over a list of datasets."""

    datasets: tuple
    alpha: float = 0.5
    ensemble_size: int = 30
    train_fraction: float = 0.6
    repeats: int = 15
    learner_kind: LearnerKind = LearnerKind.TREE
    treatment_mode: SubspaceMode = SubspaceMode.FRACTION_TRANSITION
    baseline_mode: SubspaceMode = SubspaceMode.UNIFORM
    master_seed: int = 0
    leaky_preprocess: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "learner_kind", LearnerKind.parse(self.learner_kind))
        object.__setattr__(self, "treatment_mode", SubspaceMode.parse(self.treatment_mode))
        object.__setattr__(self, "baseline_mode", SubspaceMode.parse(self.baseline_mode))
        object.__setattr__(self, "master_seed", rng_.check_seed(self.master_seed))
        if not self.datasets:
            raise InvalidInput("experiment needs at least one dataset")
        if not 0 < self.train_fraction < 1:
            raise InvalidInput(f"train fraction must lie in (0, 1), got {self.train_fraction}")
        if int(self.repeats) != self.repeats or self.repeats < 1:
            raise InvalidInput(f"repeats must be a positive integer, got {self.repeats}")
        # validates alpha and ensemble size
        self.ensemble_config(self.treatment_mode, seed=0)

    def ensemble_config(self, mode, seed):
        return EnsembleConfig(
            ensemble_size=self.ensemble_size,
            alpha=self.alpha,
            learner_kind=self.learner_kind,
            subset_mode=mode,
            bootstrap=True,
            seed=seed,
            n_jobs=1,
        )


@dataclass(frozen=True)
class PreparedSplit:
    """
    One train/test split after preprocessing.

    x_train and x_test stay in the raw feature space; `pca` is fitted on the
    training rows (all rows when leaky) and handed to the ensembles, which
    rotate their inputs themselves. Targets are standardised with the
    training mean and standard deviation.
    """

    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    pca: pca_.PcaModel
    y_mean: float
    y_scale: float


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    n_samples: int
    n_features: int
    treatment_mean: float
    treatment_std: float
    baseline_mean: float
    baseline_std: float
    verdict: str
    repeats: int
    learner_kind: str
    treatment_mode: str
    baseline_mode: str
    alpha: float
    ensemble_size: int
    train_fraction: float
    seed: int

    def as_record(self):
        return asdict(self)


@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    treatment_mean: float
    treatment_std: float
    baseline_mean: float
    baseline_std: float
    verdict: str
    n_datasets: int

    def as_record(self):
        return asdict(self)


def split_indices(n, train_fraction, rng):
    """
    Random train/test partition of range(n).

    The training part has round(train_fraction * n) rows, clamped so that both
    parts keep at least one row and training keeps two. Indices come back
    sorted.
    """
    if n < 3:
        raise InvalidInput(f"need at least 3 rows to split, got {n}")
    if not 0 < train_fraction < 1:
        raise InvalidInput(f"train fraction must lie in (0, 1), got {train_fraction}")
    n_train = min(max(int(math.floor(train_fraction * n + 0.5)), 2), n - 1)
    order = rng.permutation(n)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def preprocess(dataset, train_idx, test_idx, leaky=False):
    """
    Standardise targets and fit full-rank PCA for one split.

    Statistics come from the training rows only, unless `leaky` is set, in
    which case they come from every row of the dataset.

    Raises:
        DegenerateData: the target has zero variance on the fitting rows
    """
    fit_rows = np.arange(dataset.n_samples) if leaky else train_idx
    y_fit = dataset.y[fit_rows]
    y_mean = float(y_fit.mean())
    y_scale = float(y_fit.std())
    if not y_scale > 0:
        raise DegenerateData(f"{dataset.name}: target has zero variance on the training rows")

    return PreparedSplit(
        x_train=dataset.x[train_idx],
        y_train=(dataset.y[train_idx] - y_mean) / y_scale,
        x_test=dataset.x[test_idx],
        y_test=(dataset.y[test_idx] - y_mean) / y_scale,
        pca=pca_.fit(dataset.x[fit_rows]),
        y_mean=y_mean,
        y_scale=y_scale,
    )


def _run_repeat(spec, index, dataset, repeat):
    split_rng = rng_.derive_rng(spec.master_seed, rng_.SPLIT, index, repeat)
    train_idx, test_idx = split_indices(dataset.n_samples, spec.train_fraction, split_rng)
    prepared = preprocess(dataset, train_idx, test_idx, leaky=spec.leaky_preprocess)

    model_seed = rng_.derive_seed(spec.master_seed, rng_.MODEL, index, repeat)
    scores, digests = {}, {}
    for arm, mode in (("treatment", spec.treatment_mode), ("baseline", spec.baseline_mode)):
        model = train_ensemble(
            prepared.x_train,
            prepared.y_train,
            spec.ensemble_config(mode, model_seed),
            pca=prepared.pca,
        )
        scores[arm] = mse(predict_ensemble(model, prepared.x_test), prepared.y_test)
        digests[arm] = model.draw_digest

    logger.debug(
        "repeat finished",
        extra={
            "dataset": dataset.name,
            "repeat": repeat,
            "treatment_mse": scores["treatment"],
            "baseline_mse": scores["baseline"],
            "treatment_draws": digests["treatment"],
            "baseline_draws": digests["baseline"],
        },
    )
    if digests["treatment"] != digests["baseline"]:
        raise DegenerateData(
            f"{dataset.name}: treatment and baseline consumed different bootstrap draws"
        )
    return scores["treatment"], scores["baseline"]


def _run_task(spec, index, dataset, repeat):
    # errors travel back as values so one dataset cannot abort the others
    try:
        if dataset.n_samples < MIN_SAMPLES:
            raise InvalidInput(
                f"{dataset.name}: need at least {MIN_SAMPLES} rows, got {dataset.n_samples}"
            )
        return _run_repeat(spec, index, dataset, repeat)
    except QIForestError as e:
        return e


def _sample_std(values):
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def verdict_for(treatment_mean, treatment_std, baseline_mean, baseline_std, repeats):
    """
    Compare treatment against baseline (lower MSE is better).

    The gap baseline - treatment is significant when it exceeds
    2 * sqrt(std_t^2 + std_b^2) / sqrt(repeats); an exactly zero gap is a tie.
    """
    gap = baseline_mean - treatment_mean
    threshold = 2.0 * math.sqrt(treatment_std**2 + baseline_std**2) / math.sqrt(repeats)
    if gap == 0:
        return TIE
    if gap > threshold:
        return SIGNIFICANTLY_BETTER
    if gap > 0:
        return BETTER
    if gap < -threshold:
        return SIGNIFICANTLY_WORSE
    return WORSE


def run_experiment(spec):
    """
    Run the treatment-vs-baseline protocol on every dataset of the spec.

    A dataset whose repeats fail is logged and left out of the result; the
    first failure is re-raised only when no dataset succeeds.

    Returns:
        list of ResultRow, in dataset order
    """
    tasks = [
        (index, dataset, repeat)
        for index, dataset in enumerate(spec.datasets)
        for repeat in range(spec.repeats)
    ]
    logger.info(
        "experiment started",
        extra={
            "datasets": [d.name for d in spec.datasets],
            "repeats": spec.repeats,
            "learner": spec.learner_kind.value,
            "treatment": spec.treatment_mode.value,
            "baseline": spec.baseline_mode.value,
            "alpha": spec.alpha,
            "ensemble_size": spec.ensemble_size,
            "train_fraction": spec.train_fraction,
        },
    )
    outcomes = Parallel(n_jobs=spec.n_jobs)(
        delayed(_run_task)(spec, index, dataset, repeat) for index, dataset, repeat in tasks
    )

    rows, failures = [], []
    for index, dataset in enumerate(spec.datasets):
        results = outcomes[index * spec.repeats : (index + 1) * spec.repeats]
        errors = [r for r in results if isinstance(r, QIForestError)]
        if errors:
            logger.warning(
                "dataset skipped",
                extra={"dataset": dataset.name, "reason": errors[0].detail},
            )
            failures.append(errors[0])
            continue

        treatment = [t for t, _ in results]
        baseline = [b for _, b in results]
        row = ResultRow(
            dataset=dataset.name,
            n_samples=dataset.n_samples,
            n_features=dataset.n_features,
            treatment_mean=float(np.mean(treatment)),
            treatment_std=_sample_std(treatment),
            baseline_mean=float(np.mean(baseline)),
            baseline_std=_sample_std(baseline),
            verdict="",
            repeats=spec.repeats,
            learner_kind=spec.learner_kind.value,
            treatment_mode=spec.treatment_mode.value,
            baseline_mode=spec.baseline_mode.value,
            alpha=float(spec.alpha),
            ensemble_size=spec.ensemble_size,
            train_fraction=float(spec.train_fraction),
            seed=spec.master_seed,
        )
        row = replace(
            row,
            verdict=verdict_for(
                row.treatment_mean,
                row.treatment_std,
                row.baseline_mean,
                row.baseline_std,
                spec.repeats,
            ),
        )
        logger.info("dataset finished", extra=row.as_record())
        rows.append(row)

    if not rows:
        raise failures[0]
    return rows


def run_sweep(spec, parameter, values):
    """
    Repeat the experiment for each value of one hyperparameter.

    Each point averages the per-dataset MSE means and standard deviations
    across datasets.

    Args:
        spec: base ExperimentSpec
        parameter: alpha, trees (ensemble_size) or train-frac (train_fraction)
        values: the settings to try

    Returns:
        list of SweepRow, in the order of `values`
    """
    field_name = SWEEP_PARAMETERS.get(str(parameter).strip().lower())
    if field_name is None:
        raise InvalidInput(
            f"cannot sweep {parameter!r} (choose from alpha, trees, train-frac)"
        )
    values = list(values)
    if not values:
        raise InvalidInput("sweep needs at least one value")

    points = []
    for value in values:
        value = int(value) if field_name == "ensemble_size" else float(value)
        rows = run_experiment(replace(spec, **{field_name: value}))
        treatment_mean = float(np.mean([r.treatment_mean for r in rows]))
        treatment_std = float(np.mean([r.treatment_std for r in rows]))
        baseline_mean = float(np.mean([r.baseline_mean for r in rows]))
        baseline_std = float(np.mean([r.baseline_std for r in rows]))
        points.append(
            SweepRow(
                parameter=field_name,
                value=value,
                treatment_mean=treatment_mean,
                treatment_std=treatment_std,
                baseline_mean=baseline_mean,
                baseline_std=baseline_std,
                verdict=verdict_for(
                    treatment_mean, treatment_std, baseline_mean, baseline_std, spec.repeats
                ),
                n_datasets=len(rows),
            )
        )
        logger.info("sweep point finished", extra=points[-1].as_record())
    return points


def arm_label(mode, learner_kind):
    """Column label of one arm: QI-Forest, R-Forest, QIE-LR, RE-LR, ..."""
    mode = SubspaceMode.parse(mode)
    prefix = {
        SubspaceMode.FRACTION_TRANSITION: "QI",
        SubspaceMode.FRACTION_ONLY: "QI-fraction",
        SubspaceMode.UNIFORM: "R",
    }[mode]
    if LearnerKind.parse(learner_kind) is LearnerKind.LINEAR:
        return f"{prefix}E-LR" if mode is not SubspaceMode.FRACTION_ONLY else f"{prefix}-LR"
    return f"{prefix}-Forest"


def _mse_cell(mean, std):
    return f"{mean:.4f} ± {std:.4f}"


def align_table(header, lines):
    """Left-align the first column, right-align the rest, rule under the header."""
    widths = [max(len(row[i]) for row in [header, *lines]) for i in range(len(header))]

    def render(row):
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        return "  ".join(cells).rstrip()

    rule = "-" * len(render(header))
    return "\n".join([render(header), rule, *(render(row) for row in lines)]) + "\n"


def format_table(rows, treatment_label="QI", baseline_label="Baseline"):
    """Aligned text table: dataset, shape, treatment and baseline MSE, verdict."""
    if not rows:
        raise InvalidInput("nothing to report")
    header = ["Data", "Instances", "Dimension", treatment_label, baseline_label, "+/-"]
    lines = [
        [
            r.dataset,
            str(r.n_samples),
            str(r.n_features),
            _mse_cell(r.treatment_mean, r.treatment_std),
            _mse_cell(r.baseline_mean, r.baseline_std),
            r.verdict,
        ]
        for r in rows
    ]
    return align_table(header, lines)


def format_sweep_table(points, treatment_label="QI", baseline_label="Baseline"):
    if not points:
        raise InvalidInput("nothing to report")
    header = [points[0].parameter, treatment_label, baseline_label, "+/-"]
    lines = [
        [
            f"{p.value:g}",
            _mse_cell(p.treatment_mean, p.treatment_std),
            _mse_cell(p.baseline_mean, p.baseline_std),
            p.verdict,
        ]
        for p in points
    ]
    return align_table(header, lines)


def emit_records(rows):
    """JSON Lines, one record per row, fields in declaration order."""
    return "".join(json.dumps(row.as_record(), ensure_ascii=False) + "\n" for row in rows)


def parse_records(text):
    """Inverse of emit_records for ResultRow and SweepRow records."""
    rows = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise InvalidInput(f"line {number} is not valid JSON: {e.msg}") from e

        row_type = SweepRow if "parameter" in record else ResultRow
        expected = [f.name for f in fields(row_type)]
        if list(record) != expected:
            raise InvalidInput(f"line {number} does not hold a {row_type.__name__} record")
        rows.append(row_type(**record))
    return rows


def write_records(rows, path):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(emit_records(rows))
    except OSError as e:
        raise IoError(f"cannot write results to {path}: {e}", path=str(path)) from e


def report(rows, out=None, stream=None, treatment_label="QI", baseline_label="Baseline"):
    """
    Print the aligned table and, when `out` is given, write the JSON Lines file.

    Returns:
        the table text
    """
    if rows and isinstance(rows[0], SweepRow):
        table = format_sweep_table(rows, treatment_label, baseline_label)
    else:
        table = format_table(rows, treatment_label, baseline_label)
    (stream or sys.stdout).write(table)
    if out:
        write_records(rows, out)
        logger.info("results written", extra={"path": str(out), "records": len(rows)})
    return table
