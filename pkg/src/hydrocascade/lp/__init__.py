"""Linear and mixed-binary programming used by the scheduler."""
from .kernels import DEFAULT as DEFAULT_KERNEL
from .milp import semicontinuous_reformulate, solve_milp
from .program import DEFAULT_TOLERANCES, LinearProgram, LpSolution, Status, Tolerances
from .simplex import solve_lp

__all__ = [
    "DEFAULT_KERNEL",
    "DEFAULT_TOLERANCES",
    "LinearProgram",
    "LpSolution",
    "Status",
    "Tolerances",
    "semicontinuous_reformulate",
    "solve_lp",
    "solve_milp",
]
