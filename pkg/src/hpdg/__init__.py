"""hp interior penalty discontinuous Galerkin methods for 2D linear elasticity."""
from .assembly import DgConfig, ProblemData, SparseSystem, assemble, bilinear_apply, residual_flux
from .analysis import ConvergenceTable, ErrorReport, energy_error, energy_norm_squared, l2_error, rates
from .cases import MmsCase, builtin_case_linear, builtin_case_paper
from .config import StudyConfig, parse_config
from .linsolve import SolveReport, solve
from .material import Material
from .mesh import Mesh, build_structured, classify_boundary
from .space import DgSpace
from .study import run_study

__version__ = "0.1.0"
