"""Cut-HDMR surrogate modelling with PC-Kriging component functions."""
__version__ = "0.1.0"

from .core import BudgetedFunction, BudgetExhausted, CutCenter, DesignSpace, Distribution
from .hdmr import BuildConfig, HdmrModel, PartialBuildError, build
from .metrics import MetricReport, evaluate_model
from .sensitivity import sensitivity_indices

__all__ = [
    "BudgetedFunction", "BudgetExhausted", "BuildConfig", "CutCenter", "DesignSpace",
    "Distribution", "HdmrModel", "MetricReport", "PartialBuildError", "build",
    "evaluate_model", "sensitivity_indices",
]
