"""Fair regression under statistical parity and bounded group loss."""

from .baselines import fit_seo, fit_unconstrained, solve_sp_exact
from .bgl_solver import BGLConfig, BGLResult, run_bgl
from .core import Dataset, LinearModel, LossSpec, RandomizedPredictor
from .estimators import FairRegressorBGL, FairRegressorSP, InfeasibleError, SEORegressor
from .moments import DiscretizedProblem
from .oracles import CandidateOracle, CSOracle, LSOracle, MatchedLossOracle, make_oracle
from .sp_solver import SPConfig, SPResult, run_sp

__version__ = "0.1.0"

__all__ = [
    "BGLConfig", "BGLResult", "CSOracle", "CandidateOracle", "Dataset", "DiscretizedProblem",
    "FairRegressorBGL", "FairRegressorSP", "InfeasibleError", "LSOracle", "LinearModel",
    "LossSpec", "MatchedLossOracle", "RandomizedPredictor", "SEORegressor", "SPConfig",
    "SPResult", "fit_seo", "fit_unconstrained", "make_oracle", "run_bgl",
    "run_sp", "solve_sp_exact",
]
