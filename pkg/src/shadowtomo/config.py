"""Package-wide numeric conventions and tunable constants.

All logarithms in derived-parameter formulas are natural logs unless a
base-2 log is explicitly part of a formula (bit counting, entropy in bits).
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

# Largest joint dimension any operation may materialize as a dense matrix.
DEFAULT_DIM_CAP = 4096

# Construction-time tolerance: hermiticity, unit trace, spectrum bounds for
# freshly built objects.
CONSTRUCTION_ATOL = 1e-10

# Tolerance for objects produced by chains of floating-point arithmetic
# (postselection, repeated collapse).
POST_ARITHMETIC_ATOL = 1e-8


@dataclass(frozen=True)
class Constants:
    """Implementation-pinned constants for the derived-parameter formulas.

    c_or      amplification register multiplier in the OR-bound test
    c_q       register-count multiplier for the refinement hypothesis
    c_t       iteration-bound multiplier for the refinement loop
    c_gap     copy-count multiplier for the promise-gap procedure
    c_search  multiplier in the recorded search copy budget bound
    """

    c_or: float = 4.0
    c_q: float = 4.0
    c_t: float = 8.0
    c_gap: float = 8.0
    c_search: float = 64.0

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_CONSTANTS = Constants()
