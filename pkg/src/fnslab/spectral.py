"""Grids, wavenumber lattices and field containers.

Conventions used everywhere in the package:

  * fields live on the uniform torus grid [0, L)^n with M points per axis;
  * arrays carry an explicit leading component axis, so a scalar field has
    shape (1, M, ..., M), a velocity (n, M, ..., M) and a rank-2 tensor
    (n*n, M, ..., M);
  * the forward transform divides by M^n, so coefficients approximate
    Fourier-series coefficients of the periodic function;
  * wavenumbers are k = (2 pi / L) m with integer m in [-M/2, M/2).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .params import Parameters


class WavenumberLattice:
    """Integer mode vectors and derived multiplier arrays for one grid."""

    def __init__(self, p: Parameters):
        self.params = p
        n, M = p.n, p.M
        m1 = np.fft.fftfreq(M, d=1.0 / M)  # 0, 1, ..., M/2-1, -M/2, ..., -1
        axes = np.meshgrid(*([m1] * n), indexing="ij")
        self.m = np.stack(axes)                      # integer modes, float array
        self.k = (2.0 * np.pi / p.L) * self.m        # physical wavenumbers
        self.ksq = np.sum(self.k**2, axis=0)
        self.kmag = np.sqrt(self.ksq)
        cut = p.dealias_frac * (M / 2.0)
        self.dealias_mask = np.all(np.abs(self.m) <= cut, axis=0)
        self.nyquist_mask = np.any(np.abs(self.m) == M / 2.0, axis=0)

    @property
    def shape(self):
        return self.kmag.shape

    def grid_points(self):
        """Physical coordinates, shape (n, M, ..., M)."""
        p = self.params
        x1 = p.L * np.arange(p.M) / p.M
        return np.stack(np.meshgrid(*([x1] * p.n), indexing="ij"))


@lru_cache(maxsize=32)
def build_lattice(p: Parameters) -> WavenumberLattice:
    return WavenumberLattice(p)


@dataclass
class SpectralField:
    """Complex Fourier coefficients, component axis first."""

    lattice: WavenumberLattice
    coeffs: np.ndarray

    def __post_init__(self):
        expected = self.lattice.shape
        if self.coeffs.shape[1:] != expected:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match "
                f"lattice shape {expected}"
            )

    @property
    def rank(self) -> int:
        return self.coeffs.shape[0]

    def copy(self) -> "SpectralField":
        return SpectralField(self.lattice, self.coeffs.copy())

    def zero_mode(self) -> np.ndarray:
        return self.coeffs[(slice(None),) + (0,) * self.lattice.params.n]

    def is_mean_free(self, tol=None) -> bool:
        tol = self.lattice.params.tol if tol is None else tol
        return bool(np.all(np.abs(self.zero_mode()) <= tol))

    def l2(self) -> float:
        """Square root of the spectral energy sum (all components)."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))


@dataclass
class PhysicalField:
    """Real grid values, component axis first."""

    lattice: WavenumberLattice
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape[1:] != self.lattice.shape:
            raise ValueError(
                f"value shape {self.values.shape} does not match "
                f"lattice shape {self.lattice.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("physical field contains non-finite values")

    @property
    def rank(self) -> int:
        return self.values.shape[0]

    def linf(self) -> float:
        """Sup over the grid of the pointwise Euclidean component magnitude."""
        return float(np.sqrt(np.sum(self.values**2, axis=0)).max())


def _spatial_axes(p: Parameters):
    return tuple(range(1, p.n + 1))


def forward_transform(f: PhysicalField) -> SpectralField:
    p = f.lattice.params
    coeffs = np.fft.fftn(f.values, axes=_spatial_axes(p)) / p.M**p.n
    return SpectralField(f.lattice, coeffs)


def inverse_transform(g: SpectralField) -> PhysicalField:
    """Back to the grid.  Raises if the imaginary residue betrays a field
    that was not Hermitian-symmetric (i.e. not a real function)."""
    p = g.lattice.params
    vals = np.fft.ifftn(g.coeffs * p.M**p.n, axes=_spatial_axes(p))
    resid = float(np.abs(vals.imag).max())
    scale = max(float(np.abs(vals.real).max()), 1.0)
    if resid > 1e-8 * scale:
        raise ValueError(f"inverse transform left imaginary residue {resid:.3e}")
    return PhysicalField(g.lattice, np.ascontiguousarray(vals.real))


def inverse_transform_complex(g: SpectralField) -> np.ndarray:
    """Inverse DFT without the realness check, for intermediate products."""
    p = g.lattice.params
    return np.fft.ifftn(g.coeffs * p.M**p.n, axes=_spatial_axes(p))


def dealias(g: SpectralField) -> SpectralField:
    return SpectralField(g.lattice, g.coeffs * g.lattice.dealias_mask)


def _conj_reflect(coeffs: np.ndarray, n: int) -> np.ndarray:
    """coeffs evaluated at -m, conjugated (component axis untouched)."""
    out = coeffs
    for ax in range(1, n + 1):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return np.conj(out)


def hermitian_defect(g: SpectralField) -> float:
    """Max deviation from coeffs(-m) = conj(coeffs(m))."""
    p = g.lattice.params
    return float(np.abs(g.coeffs - _conj_reflect(g.coeffs, p.n)).max())


def hermitize(g: SpectralField) -> SpectralField:
    p = g.lattice.params
    sym = 0.5 * (g.coeffs + _conj_reflect(g.coeffs, p.n))
    return SpectralField(g.lattice, sym)


def parseval_gap(f: PhysicalField, g: SpectralField) -> float:
    """|integral of |f|^2 minus L^n * spectral energy|, normalized."""
    p = f.lattice.params
    h = p.L / p.M
    spatial = float(np.sum(f.values**2)) * h**p.n
    spectral = p.L**p.n * float(np.sum(np.abs(g.coeffs) ** 2))
    return abs(spatial - spectral) / max(spatial, 1e-300)
