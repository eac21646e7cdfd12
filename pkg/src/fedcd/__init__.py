"""Privacy-preserving multiparty regression trained by coordinate descent.

Data owners encrypt local sufficient statistics under an additively
homomorphic key held by a separate decryption service; an evaluator
aggregates and trains on perturbed decryptions, and only the owners can
strip the perturbation from the final model.  Centralized solvers and a
benchmark CLI live alongside the protocol for accuracy and cost
comparisons.
"""

from .csp import Csp, attack_inference
from .data import (
    gen_synthetic,
    load_csv,
    load_fixture,
    partition_equal,
    split_train_test,
    standardize,
    to_dataset,
)
from .data_owner import DataOwner, LocalShard, NoiseVector, denoise
from .evaluator import Evaluator, XiMatrix
from .paillier import keygen
from .regression import Dataset, RegressionSpec, cd_update, fit_cd, fit_gd, mae
from .session import SessionConfig, SessionResult, counters_report, run_session

__all__ = [
    "Csp",
    "DataOwner",
    "Dataset",
    "Evaluator",
    "LocalShard",
    "NoiseVector",
    "RegressionSpec",
    "SessionConfig",
    "SessionResult",
    "XiMatrix",
    "attack_inference",
    "cd_update",
    "counters_report",
    "denoise",
    "fit_cd",
    "fit_gd",
    "gen_synthetic",
    "keygen",
    "load_csv",
    "load_fixture",
    "mae",
    "partition_equal",
    "run_session",
    "split_train_test",
    "standardize",
    "to_dataset",
]
