"""Fourier-multiplier operator calculus on the torus.

Every operator here acts mode by mode: the fractional Laplacian is
|k|^(2 alpha), its semigroup is exp(-t |k|^(2 alpha)), the Leray
projector is the matrix delta_ij - k_i k_j / |k|^2, and derivatives are
monomials in ik.  The Duhamel integral of a forcing trajectory is done
with composite Gauss-Legendre panels geometrically graded toward the
evaluation time, where the semigroup factor has its boundary layer.
"""

import math
from dataclasses import dataclass

import numpy as np

from .params import Parameters
from .spectral import (
    SpectralField,
    dealias,
    forward_transform,
    inverse_transform_complex,
    PhysicalField,
)


def fractional_laplacian(g: SpectralField, p: Parameters) -> SpectralField:
    """Multiply each mode by |k|^(2 alpha); the zero mode stays zero."""
    return SpectralField(g.lattice, g.coeffs * g.lattice.kmag**p.two_alpha)


def semigroup_apply(g: SpectralField, t: float, p: Parameters) -> SpectralField:
    if t < 0.0:
        raise ValueError(f"semigroup time t = {t} must be nonnegative")
    if t == 0.0:
        return g.copy()
    return SpectralField(g.lattice, g.coeffs * np.exp(-t * g.lattice.kmag**p.two_alpha))


def leray_project(g: SpectralField) -> SpectralField:
    """Remove the gradient part of a vector field, mode by mode.

    The projector symbol is undefined at k = 0, so fields with a nonzero
    mean are rejected.
    """
    lat = g.lattice
    n = lat.params.n
    if g.rank != n:
        raise ValueError(f"leray_project needs a rank-{n} vector field, got rank {g.rank}")
    if not g.is_mean_free(tol=1e-13 * max(1.0, float(np.abs(g.coeffs).max()))):
        raise ValueError("leray_project: input has a nonzero mean mode")
    ksq = np.where(lat.ksq == 0.0, 1.0, lat.ksq)
    kdotv = np.sum(lat.k * g.coeffs, axis=0)
    out = g.coeffs - lat.k * (kdotv / ksq)
    return SpectralField(lat, out)


def partial_derivative(g: SpectralField, axis: int) -> SpectralField:
    return SpectralField(g.lattice, g.coeffs * (1j * g.lattice.k[axis]))


def derivative(g: SpectralField, multiindex) -> SpectralField:
    """Apply the monomial multiplier prod_j (i k_j)^a_j."""
    lat = g.lattice
    mult = np.ones(lat.shape, dtype=complex)
    for ax, order in enumerate(multiindex):
        if order:
            mult = mult * (1j * lat.k[ax]) ** order
    return SpectralField(lat, g.coeffs * mult)


def gradient(g: SpectralField) -> SpectralField:
    """Full gradient; component layout (i, j) -> i*n + j for input component i."""
    lat = g.lattice
    n = lat.params.n
    parts = [g.coeffs[i] * (1j * lat.k[j]) for i in range(g.rank) for j in range(n)]
    return SpectralField(lat, np.stack(parts))


def tensor_divergence(T: SpectralField) -> SpectralField:
    """Contract the second tensor index with ik: out_i = sum_j ik_j T_{ij}."""
    lat = T.lattice
    n = lat.params.n
    if T.rank != n * n:
        raise ValueError(f"tensor_divergence needs rank {n*n}, got {T.rank}")
    comp = T.coeffs.reshape(n, n, *lat.shape)
    out = np.stack([sum(1j * lat.k[j] * comp[i, j] for j in range(n)) for i in range(n)])
    return SpectralField(lat, out)


def divergence_defect(g: SpectralField) -> float:
    """Max over modes of |k . u_hat(k)|, the absolute divergence residue."""
    lat = g.lattice
    return float(np.abs(np.sum(lat.k * g.coeffs, axis=0)).max())


def nonlinearity(u: SpectralField, v: SpectralField | None = None) -> SpectralField:
    """Dealiased spectral tensor of the pointwise outer product u (x) v."""
    if v is None:
        v = u
    lat = u.lattice
    n = lat.params.n
    up = inverse_transform_complex(u).real
    vp = up if v is u else inverse_transform_complex(v).real
    prods = np.stack([up[i] * vp[j] for i in range(n) for j in range(n)])
    tens = forward_transform(PhysicalField(lat, prods))
    return dealias(tens)


def projected_transport(u: SpectralField, v: SpectralField | None = None) -> SpectralField:
    """Pi div(u (x) v), the projected quadratic transport term."""
    return leray_project(tensor_divergence(nonlinearity(u, v)))


# ---------------------------------------------------------------------------
# time grids and trajectories


@dataclass(frozen=True)
class TimeGrid:
    """Geometric time grid t_min * ratio^m with an optional finer prefix.

    prepend extra points below t_min (same ratio) improve interpolation
    of trajectories inside Duhamel integrals near s = 0.
    """

    t_min: float
    ratio: float
    count: int
    prepend: int = 0

    def __post_init__(self):
        if self.t_min <= 0.0:
            raise ValueError("t_min must be positive")
        if self.ratio <= 1.0:
            raise ValueError("ratio must exceed 1")
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if self.prepend < 0:
            raise ValueError("prepend must be nonnegative")

    @property
    def times(self) -> np.ndarray:
        expo = np.arange(-self.prepend, self.count)
        return self.t_min * self.ratio**expo

    @property
    def t_max(self) -> float:
        return float(self.t_min * self.ratio ** (self.count - 1))

    def refined(self) -> "TimeGrid":
        """Grid with doubled density over the same span."""
        return TimeGrid(
            self.t_min,
            math.sqrt(self.ratio),
            2 * self.count - 1,
            2 * self.prepend,
        )


@dataclass
class TrajectoryField:
    """Vector field sampled on a TimeGrid, interpolated log-linearly in t."""

    grid: TimeGrid
    states: list

    def __post_init__(self):
        if len(self.states) != self.grid.prepend + self.grid.count:
            raise ValueError(
                f"{len(self.states)} states for a grid of "
                f"{self.grid.prepend + self.grid.count} points"
            )

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def lattice(self):
        return self.states[0].lattice

    def coeffs_at(self, s: float) -> np.ndarray:
        """Coefficients at time s.

        Clamps below the first sample (the trajectory is treated as
        frozen on (0, t_first]) and rejects s beyond the last sample.
        """
        times = self.times
        if s <= times[0]:
            return self.states[0].coeffs
        if s > times[-1] * (1.0 + 1e-12):
            raise ValueError(f"time {s} beyond the trajectory span {times[-1]}")
        i = int(np.searchsorted(times, s))
        if i >= len(times):
            return self.states[-1].coeffs
        ta, tb = times[i - 1], times[i]
        w = (math.log(s) - math.log(ta)) / (math.log(tb) - math.log(ta))
        return (1.0 - w) * self.states[i - 1].coeffs + w * self.states[i].coeffs

    def state_at(self, s: float) -> SpectralField:
        return SpectralField(self.lattice, self.coeffs_at(s))

    def div_defect(self) -> float:
        return max(divergence_defect(st) for st in self.states)


def semigroup_trajectory(u0: SpectralField, p: Parameters, grid: TimeGrid) -> TrajectoryField:
    lam = u0.lattice.kmag**p.two_alpha
    states = [SpectralField(u0.lattice, u0.coeffs * np.exp(-t * lam)) for t in grid.times]
    return TrajectoryField(grid, states)


# ---------------------------------------------------------------------------
# Duhamel integral and the bilinear map


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre setup for the Duhamel integral in s.

    panels   number of panels on (0, t)
    nodes    Gauss-Legendre nodes per panel
    grading  geometric panel-width ratio; widths shrink toward s = t
    """

    panels: int = 16
    nodes: int = 4
    grading: float = 2.0

    def __post_init__(self):
        if self.panels < 1 or self.nodes < 1:
            raise ValueError("panels and nodes must be positive")
        if self.grading < 1.0:
            raise ValueError("grading must be >= 1")

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.panels, self.nodes, self.grading)


def duhamel_nodes(t: float, quad: QuadratureSpec):
    """Quadrature nodes and weights on (0, t), graded toward s = t."""
    P, r = quad.panels, quad.grading
    if r == 1.0:
        widths = np.full(P, t / P)
    else:
        c = t * (1.0 - 1.0 / r) / (1.0 - r**-P)
        widths = c * r ** (-np.arange(P, dtype=float))
    edges = np.concatenate([[0.0], np.cumsum(widths)])
    edges[-1] = t
    xg, wg = np.polynomial.legendre.leggauss(quad.nodes)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * xg).ravel()
    weights = (half[:, None] * wg).ravel()
    return nodes, weights


def duhamel_apply(f, t: float, p: Parameters, quad: QuadratureSpec = QuadratureSpec()) -> SpectralField:
    """integral_0^t S(t-s) f(s) ds for a sampled or callable forcing.

    f may be a TrajectoryField (log-linear interpolation between stored
    samples) or a callable s -> SpectralField evaluated exactly at the
    quadrature nodes.
    """
    if isinstance(f, TrajectoryField) and t > f.times[-1] * (1.0 + 1e-12):
        raise ValueError(f"duhamel time {t} not covered by forcing samples")
    nodes, weights = duhamel_nodes(t, quad)
    if isinstance(f, TrajectoryField):
        lat = f.lattice
        samples = [f.coeffs_at(s) for s in nodes]
    else:
        fields = [f(s) for s in nodes]
        lat = fields[0].lattice
        samples = [g.coeffs if isinstance(g, SpectralField) else g for g in fields]
    lam = lat.kmag**p.two_alpha
    acc = np.zeros_like(samples[0])
    for s, w, fc in zip(nodes, weights, samples):
        acc += (w * np.exp(-(t - s) * lam)) * fc
    return SpectralField(lat, acc)


def bilinear_B(u, v, t: float, p: Parameters, quad: QuadratureSpec = QuadratureSpec()) -> SpectralField:
    """The mild-formulation bilinear term, minus sign included:

        B(u, v)(t) = - integral_0^t S(t-s) Pi div(u(s) (x) v(s)) ds

    u and v may be TrajectoryFields on a common grid or callables
    s -> SpectralField.
    """
    if isinstance(u, TrajectoryField) and isinstance(v, TrajectoryField):
        if u.grid != v.grid:
            raise ValueError("bilinear_B: trajectories on different time grids")

    def forcing(s: float) -> SpectralField:
        us = u.state_at(s) if isinstance(u, TrajectoryField) else u(s)
        vs = v.state_at(s) if isinstance(v, TrajectoryField) else v(s)
        return projected_transport(us, vs)

    out = duhamel_apply(forcing, t, p, quad)
    return SpectralField(out.lattice, -out.coeffs)
