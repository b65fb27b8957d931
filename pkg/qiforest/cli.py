"""
qiforest command line.

    qiforest bench     treatment vs baseline ensembles on CSV data or stand-ins
    qiforest sweep     the same comparison over a range of one hyperparameter
    qiforest theory    Monte Carlo trials for linear ensembles on orthogonal data
    qiforest decompose error decomposition of one trained ensemble

Tables go to stdout, logs to stderr. Failures are reported on stderr as a
problem document and mapped onto the exit code: 0 success, 1 invalid input,
2 runtime or data error.
"""

import argparse
import json
import os
import sys

from qiforest import bench, config, datasets, diagnostics
from qiforest import rng as rng_
from qiforest.ensemble import EnsembleConfig, train_ensemble
from qiforest.errors import (
    EXIT_OK,
    InvalidInput,
    IoError,
    QIForestError,
    exit_code_for,
    problem_detail,
)
from qiforest.structured_logger import get_logger, run_context, setup_structured_logging
from qiforest.version import PROGRAM_NAME, VERSION

logger = get_logger(__name__)

SYNTHETIC_ROWS = 500


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors become InvalidInput (exit 1) instead of argparse's exit 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise InvalidInput(message)


def _csv_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_config_option(parser):
    parser.add_argument(
        "--config",
        "--model-config",
        dest="config",
        help=f"INI config file (default: $QIFOREST_CONFIG or {config.DEFAULT_CONFIG_PATH})",
    )


def _add_data_options(parser):
    parser.add_argument("--data", help="CSV file or directory of CSV files")
    parser.add_argument(
        "--target-col", dest="target_col", help="target column name or zero-based index"
    )
    parser.add_argument(
        "--no-header",
        dest="header",
        action="store_false",
        default=None,
        help="CSV files have no header row",
    )
    parser.add_argument(
        "--standin",
        help="comma-separated benchmark names (or 'all') to replace with synthetic data",
    )
    parser.add_argument(
        "--max-samples",
        dest="max_samples",
        type=int,
        help="cap stand-in datasets at this many rows (rows of --synthetic data, 500 when unset)",
    )
    parser.add_argument(
        "--synthetic",
        help="comma-separated generated datasets: linear, piecewise",
    )
    parser.add_argument(
        "--features", type=int, help="columns of --synthetic data (8)"
    )


def _add_experiment_options(parser):
    _add_data_options(parser)
    parser.add_argument("--alpha", type=float, help="feature fraction per learner (0.5)")
    parser.add_argument("--trees", type=int, help="ensemble size T (30)")
    parser.add_argument("--train-frac", dest="train_frac", type=float, help="training share (0.6)")
    parser.add_argument("--repeats", type=int, help="random splits per dataset (15)")
    parser.add_argument("--learner", choices=["tree", "linear"], help="base learner (tree)")
    parser.add_argument("--mode", help="treatment subset mode: qis, fraction or uniform (qis)")
    parser.add_argument("--baseline", help="baseline subset mode (uniform)")
    parser.add_argument("--seed", type=int, help="master seed (0)")
    parser.add_argument("--n-jobs", dest="n_jobs", type=int, help="joblib workers")
    parser.add_argument(
        "--paper-leaky-preprocess",
        dest="paper_leaky_preprocess",
        action="store_true",
        default=None,
        help="fit PCA and target scaling on all rows instead of the training rows",
    )
    parser.add_argument("--out", help="write JSON Lines results to this file")


def build_parser():
    parser = ArgumentParser(
        prog=PROGRAM_NAME,
        description="Quantum-inspired subspace forests: benchmarks and diagnostics",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    bench_parser = commands.add_parser("bench", help="compare treatment and baseline ensembles")
    _add_config_option(bench_parser)
    _add_experiment_options(bench_parser)

    sweep_parser = commands.add_parser("sweep", help="bench over a range of one hyperparameter")
    _add_config_option(sweep_parser)
    _add_experiment_options(sweep_parser)
    sweep_parser.add_argument(
        "--param", required=True, choices=["alpha", "trees", "train-frac"], help="swept setting"
    )
    sweep_parser.add_argument(
        "--values", required=True, type=_csv_floats, help="comma-separated settings"
    )

    theory_parser = commands.add_parser("theory", help="Monte Carlo trials for linear ensembles")
    _add_config_option(theory_parser)
    theory_parser.add_argument("--dims", type=int, help="number of features m (8)")
    theory_parser.add_argument("--samples", type=int, help="rows per trial n (200)")
    theory_parser.add_argument("--sigma", type=float, help="true weight standard deviation (1)")
    theory_parser.add_argument("--trees", type=int, help="learners per ensemble T (30)")
    theory_parser.add_argument("--k", type=int, help="subset size K (4)")
    theory_parser.add_argument("--trials", type=int, help="Monte Carlo trials (100)")
    theory_parser.add_argument("--noise", type=float, help="target noise standard deviation (0)")
    theory_parser.add_argument("--seed", type=int, help="master seed (0)")
    theory_parser.add_argument(
        "--fraction-trials",
        dest="fraction_trials",
        type=int,
        default=0,
        help="also measure E[p_k] against s_k^2/sum s^2 with this many draws (>= 1000)",
    )
    theory_parser.add_argument("--out", help="write the result as one JSON record")

    decompose_parser = commands.add_parser("decompose", help="decompose one ensemble's error")
    _add_config_option(decompose_parser)
    _add_data_options(decompose_parser)
    decompose_parser.add_argument("--alpha", type=float)
    decompose_parser.add_argument("--trees", type=int)
    decompose_parser.add_argument("--learner", choices=["tree", "linear"])
    decompose_parser.add_argument("--mode")
    decompose_parser.add_argument(
        "--no-bootstrap", dest="bootstrap", action="store_false", default=None
    )
    decompose_parser.add_argument("--seed", type=int)
    decompose_parser.add_argument("--train-frac", dest="train_frac", type=float)
    decompose_parser.add_argument("--n-jobs", dest="n_jobs", type=int)
    decompose_parser.add_argument("--out", help="write JSON Lines records to this file")
    return parser


def _settings(args, section):
    settings = config.section_settings(config.load_config(args.config), section)
    return config.merge_flags(settings, vars(args))


def _names(value):
    return [n.strip() for n in value.split(",") if n.strip()]


def load_datasets(settings):
    """Datasets named by --data, --standin or --synthetic."""
    given = [key for key in ("data", "standin", "synthetic") if settings.get(key)]
    if len(given) > 1:
        raise InvalidInput(
            f"use only one of --data, --standin, --synthetic (got {', '.join(given)})"
        )
    if settings["data"]:
        return datasets.load_data(settings["data"], settings["target_col"], settings["header"])
    if settings["standin"]:
        names = _names(settings["standin"])
        if names == ["all"]:
            names = [info.slug for info in datasets.BENCHMARK_DATASETS]
        max_samples = settings.get("max_samples") or None
        return [
            datasets.make_standin(
                name, rng_.derive_rng(settings["seed"], rng_.DATA, i), max_samples
            )
            for i, name in enumerate(names)
        ]
    if settings.get("synthetic"):
        n = settings.get("max_samples") or SYNTHETIC_ROWS
        return [
            datasets.make_synthetic(
                kind, n, settings["features"], rng_.derive_rng(settings["seed"], rng_.DATA, i)
            )
            for i, kind in enumerate(_names(settings["synthetic"]))
        ]
    raise InvalidInput(
        "no data: pass --data <file|dir>, --standin <names|all> or --synthetic <kinds>"
    )


def _experiment_spec(settings):
    return bench.ExperimentSpec(
        datasets=load_datasets(settings),
        alpha=settings["alpha"],
        ensemble_size=settings["trees"],
        train_fraction=settings["train_frac"],
        repeats=settings["repeats"],
        learner_kind=settings["learner"],
        treatment_mode=settings["mode"],
        baseline_mode=settings["baseline"],
        master_seed=settings["seed"],
        leaky_preprocess=settings["paper_leaky_preprocess"],
        n_jobs=settings["n_jobs"],
    )


def _labels(spec):
    return (
        bench.arm_label(spec.treatment_mode, spec.learner_kind),
        bench.arm_label(spec.baseline_mode, spec.learner_kind),
    )


def cmd_bench(args, out):
    settings = _settings(args, "bench")
    spec = _experiment_spec(settings)
    rows = bench.run_experiment(spec)
    treatment, baseline = _labels(spec)
    bench.report(rows, settings["out"] or None, out, treatment, baseline)
    return EXIT_OK


def cmd_sweep(args, out):
    settings = _settings(args, "bench")
    spec = _experiment_spec(settings)
    points = bench.run_sweep(spec, args.param, args.values)
    treatment, baseline = _labels(spec)
    bench.report(points, settings["out"] or None, out, treatment, baseline)
    return EXIT_OK


def _write_json_lines(path, records):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for record in records:
                f.write(json.dumps(record, ensure_ascii=False) + "\n")
    except OSError as e:
        raise IoError(f"cannot write results to {path}: {e}", path=str(path)) from e


def cmd_theory(args, out):
    settings = _settings(args, "theory")
    result = diagnostics.run_theory_trials(
        m_dims=settings["dims"],
        n_samples=settings["samples"],
        sigma=settings["sigma"],
        k=settings["k"],
        t_ensemble=settings["trees"],
        trials=settings["trials"],
        rng=rng_.derive_rng(settings["seed"], rng_.TRIAL),
        noise=settings["noise"],
    )

    header = ["scheme", "E[var]", "E[covar]", "E[ambi]", "E[err]", "E[err(H)]"]
    lines = [
        [name]
        + [
            f"{value:.6f}"
            for value in (m.variance, m.covariance, m.ambiguity, m.avg_err, m.ensemble_err)
        ]
        for name, m in (("qi", result.qi), ("rs", result.rs), ("oracle", result.oracle))
    ]
    out.write(bench.align_table(header, lines))
    wins = ", ".join(f"{key} {value}/{result.trial_count}" for key, value in result.wins.items())
    out.write(f"qi beats rs: {wins}\n")

    record = {
        "command": "theory",
        **{key: settings[key] for key in ("dims", "samples", "sigma", "trees", "k", "trials")},
        "noise": settings["noise"],
        "seed": settings["seed"],
        **result.as_dict(),
    }
    if args.fraction_trials:
        deviation = diagnostics.verify_fraction_expectation(
            settings["dims"],
            args.fraction_trials,
            rng_.derive_rng(settings["seed"], rng_.TRIAL, 1),
            sigma=settings["sigma"],
        )
        out.write(f"fraction expectation max deviation: {deviation:.6f}\n")
        record["fraction_max_deviation"] = deviation

    if args.out:
        _write_json_lines(args.out, [record])
    return EXIT_OK


def cmd_decompose(args, out):
    loaded = config.load_config(args.config)
    settings = config.merge_flags(config.section_settings(loaded, "model"), vars(args))
    data_settings = config.merge_flags(config.section_settings(loaded, "bench"), vars(args))
    data_settings["seed"] = settings["seed"]

    records = []
    for index, dataset in enumerate(load_datasets(data_settings)):
        split_rng = rng_.derive_rng(settings["seed"], rng_.SPLIT, index, 0)
        train_idx, test_idx = bench.split_indices(
            dataset.n_samples, settings["train_frac"], split_rng
        )
        prepared = bench.preprocess(dataset, train_idx, test_idx)
        model = train_ensemble(
            prepared.x_train,
            prepared.y_train,
            EnsembleConfig(
                ensemble_size=settings["trees"],
                alpha=settings["alpha"],
                learner_kind=settings["learner"],
                subset_mode=settings["mode"],
                bootstrap=settings["bootstrap"],
                seed=rng_.derive_seed(settings["seed"], rng_.MODEL, index, 0),
                n_jobs=settings["n_jobs"],
            ),
            pca=prepared.pca,
        )
        report = diagnostics.decompose(model, prepared.x_test, prepared.y_test)
        records.append({"dataset": dataset.name, **report.as_dict()})

    header = ["Data", "err(H)", "err", "ambi", "bias^2", "var", "covar", "T"]
    lines = [
        [
            r["dataset"],
            *(
                f"{r[key]:.6f}"
                for key in (
                    "ensemble_err",
                    "avg_err",
                    "avg_ambiguity",
                    "avg_bias_sq",
                    "avg_variance",
                    "avg_covariance",
                )
            ),
            str(r["ensemble_size"]),
        ]
        for r in records
    ]
    out.write(bench.align_table(header, lines))
    if args.out:
        _write_json_lines(args.out, records)
    return EXIT_OK


COMMANDS = {
    "bench": cmd_bench,
    "sweep": cmd_sweep,
    "theory": cmd_theory,
    "decompose": cmd_decompose,
}


def _configure_logging():
    enable_json = os.environ.get("ENABLE_JSON_LOGGING", "true").lower() in ("true", "1", "yes")
    setup_structured_logging(enable_json=enable_json, level=os.environ.get("LOG_LEVEL", "INFO"))


def main(argv=None, out=None):
    """Run one command; returns the process exit code."""
    out = out or sys.stdout
    _configure_logging()
    with run_context():
        try:
            args = build_parser().parse_args(argv)
            logger.info("qiforest started", extra={"version": VERSION, "command": args.command})
            return COMMANDS[args.command](args, out)
        except QIForestError as e:
            logger.warning("command failed", extra={"error": e.detail})
            return _report_failure(e, argv)
        except Exception as e:
            logger.exception("unexpected error")
            return _report_failure(e, argv)


def _report_failure(error, argv):
    problem = problem_detail(error, instance=_instance(argv))
    sys.stderr.write(json.dumps(problem, ensure_ascii=False, default=str) + "\n")
    return exit_code_for(error)


def _instance(argv):
    argv = sys.argv[1:] if argv is None else argv
    return next((a for a in argv if a in COMMANDS), PROGRAM_NAME)
