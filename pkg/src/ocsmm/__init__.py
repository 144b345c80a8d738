"""One-class support measure machines for group anomaly detection."""

from .data import DatasetFormatError, GaussianSummary, Group, GroupDataset, load_dataset, save_jsonl
from .density import DensityModel, kde_eval, ocsmm_density, vkde_balloon, vkde_sample_smoothing
from .evaluation import GridSpec, auc_score, average_precision, density_ise, nu_sweep, roc_auc
from .kernels import (BaseKernel, GramMatrix, GroupKernelSpec, NumericalError, cross_gram,
                      emp_mean_inner, gaussian_analytic_inner, gram_matrix, median_heuristic,
                      rbf_eval, resolve_spec, spherical_normalize)
from .model import OcsmmModel, SolverConfig, decision, fit, nu_property_check, score_dataset
from .solver import DualProblem, DualSolution, brute_force_dual, solve_dual

__version__ = "0.1.0"
