"""
QIForest: Quantum-Inspired Subspace forests and ensemble diagnostics.

Environment (read from .env when present):
    LOG_LEVEL            logging level for the qiforest loggers (INFO)
    ENABLE_JSON_LOGGING  JSON log lines on stderr, false for plain text (true)
    QIFOREST_CONFIG      INI config file (instance/qiforest.conf)
    QIFOREST_N_JOBS      default joblib workers (1)
"""

from dotenv import load_dotenv

load_dotenv(".env")

from qiforest.ensemble import (  # noqa: E402
    EnsembleConfig,
    EnsembleModel,
    learner_predictions,
    mse,
    predict_ensemble,
    train_ensemble,
    train_qi_forest,
    train_random_forest,
)
from qiforest.errors import DegenerateData, InvalidInput, IoError, QIForestError  # noqa: E402
from qiforest.learners import LearnerKind  # noqa: E402
from qiforest.qis import SubspaceMode  # noqa: E402
from qiforest.version import VERSION  # noqa: E402

__version__ = VERSION

__all__ = [
    "DegenerateData",
    "EnsembleConfig",
    "EnsembleModel",
    "InvalidInput",
    "IoError",
    "LearnerKind",
    "QIForestError",
    "SubspaceMode",
    "VERSION",
    "learner_predictions",
    "mse",
    "predict_ensemble",
    "train_ensemble",
    "train_qi_forest",
    "train_random_forest",
]
