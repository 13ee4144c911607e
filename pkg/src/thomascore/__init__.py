"""Hardware-oriented Thomas solver, fixed-point range analysis and pipeline model."""
from .fixed_point import FixedFormat, FixedValue, Overflow, DivideByZero, expected_rounding_error
from .backends import RealBackend, FixedBackend
from .tridiag import (TridiagonalSystem, SolveTrace, SingularPivot, thomas_reference,
                      thomas_hw, dense_solve, residual)

__version__ = "0.1.0"
