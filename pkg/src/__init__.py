"""Certified reproduction of the balancing and Lucas-balancing product equations"""

from .config import RunConfig
from .errors import ReproductionError
from .manifest import Manifest
from .search import SolutionRecord, brute_force_box, certify_solution

__all__ = ['RunConfig', 'ReproductionError', 'Manifest', 'SolutionRecord', 'brute_force_box', 'certify_solution']
