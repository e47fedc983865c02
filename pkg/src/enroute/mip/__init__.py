"""Mixed-integer model of coordinated charging, its encodings and solver backends."""

from .backends import BackendUnavailable, CbcBackend, HighsBackend, Limits, make_backend
from .build import BuildOptions, ModelTooLarge, WarmStartRejected, build_model, census, choose_big_m, warm_start_from
from .model import MipModel
from .solve import SolveReport, extract, solve

__all__ = [
    "BackendUnavailable", "BuildOptions", "CbcBackend", "HighsBackend", "Limits", "MipModel",
    "ModelTooLarge", "SolveReport", "WarmStartRejected", "build_model", "census", "choose_big_m",
    "extract", "make_backend", "solve", "warm_start_from",
]
