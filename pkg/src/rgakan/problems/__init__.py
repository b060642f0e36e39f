from .functions import FUNCTION_DIMS, bessel_i1, bessel_i1e, evaluation_grid, target_function
from .pde import PROBLEM_IDS, AnalyticModel, PdeProblem, get_problem
from .pool import CollocationPool, grid_points, make_pool
from .reference import ReferenceField, load_reference, reference_from_function, save_reference
from .spectral import spectral_reference

__all__ = [
    "FUNCTION_DIMS", "bessel_i1", "bessel_i1e", "evaluation_grid", "target_function",
    "PROBLEM_IDS", "AnalyticModel", "PdeProblem", "get_problem",
    "CollocationPool", "grid_points", "make_pool",
    "ReferenceField", "load_reference", "reference_from_function", "save_reference",
    "spectral_reference",
]
