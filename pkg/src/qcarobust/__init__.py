"""Crisp-set QCA with a bootstrapped assessment of how often random data
would have produced a result, threshold recommendations, and a Monte Carlo
robustness study."""

__version__ = "0.1.0"

from .baqca import BaqcaReport, Settings, assess, bootstrap_ci, convergence_check
from .dataset import (CaseMatrix, MarginalProfile, QCAInputError, code_presence,
                      dichotomize_at_mean, load_csv, marginal_profile, negate_outcome, write_csv)
from .irqca import UNATTAINABLE, Recommendation, invert_threshold, recommend
from .minimize import (Implicant, Mode, SolutionSet, compute_metrics, minimal_cover,
                       prime_implicants, render_recipe, solve)
from .random_gen import NullModel, generate_dataset, generate_uniform_structure
from .study import StudyConfig, fit_models, predicted_curves, run_study
from .truth_table import Status, TruthRow, TruthTable, build_truth_table, passing_rows

__all__ = [
    "BaqcaReport", "CaseMatrix", "Implicant", "MarginalProfile", "Mode", "NullModel",
    "QCAInputError", "Recommendation", "Settings", "SolutionSet", "Status", "StudyConfig",
    "TruthRow", "TruthTable", "UNATTAINABLE", "assess", "bootstrap_ci", "build_truth_table",
    "code_presence", "compute_metrics", "convergence_check", "dichotomize_at_mean",
    "fit_models", "generate_dataset", "generate_uniform_structure", "invert_threshold",
    "load_csv", "marginal_profile", "minimal_cover", "negate_outcome", "passing_rows",
    "predicted_curves", "prime_implicants", "recommend", "render_recipe", "run_study", "solve",
    "write_csv",
]
