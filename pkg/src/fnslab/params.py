"""Shared problem parameters for the fractional Navier-Stokes lab.

The dissipation exponent alpha lives in the open interval (1/2, 1) for
the solver and norm machinery.  Kernel evaluation routines accept the
closed endpoints as well, since alpha = 1 (Gaussian) and alpha = 1/2
(Poisson) give closed-form calibration targets; those routines take
alpha as a plain float and do their own range check.
"""

import math
from dataclasses import dataclass

ALPHA_MIN = 0.5
ALPHA_MAX = 1.0


def _is_power_of_two(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class Parameters:
    """Problem setup shared by every module.

    alpha         fractional dissipation exponent, in (1/2, 1)
    n             spatial dimension, 1, 2 or 3
    M             grid points per axis (power of two, >= 8)
    L             torus side length
    dealias_frac  fraction of the Nyquist band kept by the dealias mask
    tol           spectral identity tolerance (Hermitian checks etc.)
    """

    alpha: float
    n: int = 2
    M: int = 32
    L: float = 2.0 * math.pi
    dealias_frac: float = 2.0 / 3.0
    tol: float = 1e-12

    def __post_init__(self):
        if not (ALPHA_MIN < self.alpha < ALPHA_MAX):
            raise ValueError(
                f"alpha = {self.alpha} outside the admissible interval "
                f"({ALPHA_MIN}, {ALPHA_MAX})"
            )
        if self.n not in (1, 2, 3):
            raise ValueError(f"dimension n = {self.n} not in {{1, 2, 3}}")
        if self.M < 8 or not _is_power_of_two(self.M):
            raise ValueError(f"grid size M = {self.M} must be a power of two >= 8")
        if not (self.L > 0.0):
            raise ValueError(f"period L = {self.L} must be positive")
        if not (0.0 < self.dealias_frac <= 1.0):
            raise ValueError(f"dealias_frac = {self.dealias_frac} not in (0, 1]")
        if not (self.tol > 0.0):
            raise ValueError("tol must be positive")

    @property
    def two_alpha(self) -> float:
        return 2.0 * self.alpha

    @property
    def weight_offset(self) -> float:
        """Exponent 1 - 1/(2 alpha) of the time-weighted sup norms."""
        return 1.0 - 1.0 / (2.0 * self.alpha)

    def gx_exponent(self, k: int) -> float:
        """Time weight exponent of the k-th derivative sup norm."""
        return self.weight_offset + k / (2.0 * self.alpha)
