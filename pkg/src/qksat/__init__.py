"""Product-state testing for quantum k-SAT instances.

The package decides, for small local instances, whether a product state is
annihilated by every projector, and runs a sampling tester over large
instances built from those local checks. It also carries the combinatorial
and linear-algebraic checks behind the tester's correctness.
"""

from .instance import QSatInstance, gen_far, gen_random, gen_satisfiable, restrict
from .linalg import Subspace
from .solver import check_product
from .subspace import contains_product
from .tester import ProductStateTester, TesterConfig, TestReport, run_tester

__version__ = "0.1.0"

__all__ = [
    "ProductStateTester",
    "QSatInstance",
    "Subspace",
    "TestReport",
    "TesterConfig",
    "check_product",
    "contains_product",
    "gen_far",
    "gen_random",
    "gen_satisfiable",
    "restrict",
    "run_tester",
]
