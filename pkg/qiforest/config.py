"""
Run configuration: built-in defaults < INI config file < command-line flags.

The config file is read with configparser.RawConfigParser from
instance/qiforest.conf unless --config or QIFOREST_CONFIG names another file.

Example:
    [bench]
    alpha = 0.5
    trees = 30
    repeats = 15
    learner = tree
    mode = qis

    [theory]
    dims = 8
    trials = 100
"""

import configparser
import os

from qiforest.errors import InvalidInput, IoError

DEFAULT_CONFIG_PATH = os.path.join("instance", "qiforest.conf")


def _env_n_jobs():
    value = os.environ.get("QIFOREST_N_JOBS", "1")
    try:
        return int(value)
    except ValueError:
        raise InvalidInput(f"QIFOREST_N_JOBS must be an integer, got {value!r}") from None


def section_defaults():
    """Built-in defaults per config section, typed by their default values."""
    n_jobs = _env_n_jobs()
    return {
        "bench": {
            "data": "",
            "target_col": "-1",
            "header": True,
            "standin": "",
            "max_samples": 0,
            "synthetic": "",
            "features": 8,
            "alpha": 0.5,
            "trees": 30,
            "train_frac": 0.6,
            "repeats": 15,
            "learner": "tree",
            "mode": "qis",
            "baseline": "uniform",
            "seed": 0,
            "n_jobs": n_jobs,
            "paper_leaky_preprocess": False,
            "out": "",
        },
        "theory": {
            "dims": 8,
            "samples": 200,
            "sigma": 1.0,
            "trees": 30,
            "k": 4,
            "trials": 100,
            "noise": 0.0,
            "seed": 0,
        },
        "model": {
            "alpha": 0.5,
            "trees": 30,
            "learner": "tree",
            "mode": "qis",
            "bootstrap": True,
            "seed": 0,
            "train_frac": 0.6,
            "n_jobs": n_jobs,
        },
    }


def config_path(explicit=None):
    return explicit or os.environ.get("QIFOREST_CONFIG") or DEFAULT_CONFIG_PATH


def load_config(path=None):
    """
    Read the INI config file.

    A missing file at the default location yields an empty configuration; a
    missing file that was asked for explicitly is an error.
    """
    explicit = path or os.environ.get("QIFOREST_CONFIG")
    path = config_path(path)

    config = configparser.RawConfigParser()
    if not os.path.exists(path):
        if explicit:
            raise IoError(f"config file not found: {path}", path=path)
        return config

    try:
        with open(path, encoding="utf-8") as f:
            config.read_file(f)
    except configparser.Error as e:
        raise InvalidInput(f"malformed config file {path}: {e}", path=path) from e
    except OSError as e:
        raise IoError(f"cannot read config file {path}: {e}", path=path) from e

    known = set(section_defaults())
    unknown = [s for s in config.sections() if s not in known]
    if unknown:
        raise InvalidInput(f"unknown config section(s): {', '.join(unknown)}", path=path)
    return config


def _coerce(config, section, key, default):
    try:
        if isinstance(default, bool):
            return config.getboolean(section, key)
        if isinstance(default, int):
            return config.getint(section, key)
        if isinstance(default, float):
            return config.getfloat(section, key)
    except ValueError:
        raise InvalidInput(
            f"config [{section}] {key} = {config.get(section, key)!r} is not a valid "
            f"{type(default).__name__}"
        ) from None
    return config.get(section, key)


def section_settings(config, section):
    """Defaults for one section overlaid with the values found in the config file."""
    defaults = section_defaults()[section]
    settings = dict(defaults)
    if not config.has_section(section):
        return settings

    for key in config.options(section):
        if key not in defaults:
            raise InvalidInput(
                f"unknown key {key!r} in config section [{section}]",
                known=sorted(defaults),
            )
        settings[key] = _coerce(config, section, key, defaults[key])
    return settings


def merge_flags(settings, flags):
    """Overlay command-line values that were actually given (not None)."""
    merged = dict(settings)
    for key, value in flags.items():
        if key in merged and value is not None:
            merged[key] = value
    return merged
