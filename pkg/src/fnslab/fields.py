"""Initial data constructions for the solver and the norm studies.

Everything here returns mean-free SpectralFields (velocity fields are
divergence-free where that makes sense).  Random constructions draw from
the package's own generator so a seed pins the field exactly across
platforms.

The decay-study comb deserves a note: its amplitudes are designed, not
drawn.  A superposition u = (0, sum_m A_m sin(m x1)) is a shear flow, so
its self-advection vanishes identically and the flow stays linear; a
nonnegative least-squares fit picks A_m >= 0 so that the envelopes
sum_m A_m m^k e^{-m^{2a} t} follow the target power laws t^{-gamma_k}
for k = 0, 1, 2 through the fit window.  The continuum solution is
A(q) = q^{2a-2}, whose moment integrals reproduce the power laws
exactly; the fit corrects for the discreteness of the mode ladder.
"""

import math
from dataclasses import replace

import numpy as np
from scipy.optimize import nnls
from scipy.special import gamma as gamma_fn

from .operators import TimeGrid, TrajectoryField, leray_project
from .params import Parameters
from .rng import Xorshift64Star
from .spectral import (
    PhysicalField,
    SpectralField,
    build_lattice,
    forward_transform,
    hermitize,
    inverse_transform,
)


def taylor_green(p: Parameters, eps: float = 1e-2) -> SpectralField:
    """The standard 2-D vortex array eps*(-sin x cos y, cos x sin y)."""
    if p.n != 2:
        raise ValueError("vortex array data is two-dimensional")
    lat = build_lattice(p)
    x, y = lat.grid_points() * (2.0 * np.pi / p.L)
    vals = eps * np.stack([-np.sin(x) * np.cos(y), np.cos(x) * np.sin(y)])
    return forward_transform(PhysicalField(lat, vals))


def mode_pair(p: Parameters, m, comp: int, amplitude: float = 1.0) -> SpectralField:
    """amplitude * cos(k_m . x) in one component (a Hermitian mode pair)."""
    lat = build_lattice(p)
    m = tuple(int(v) for v in m)
    if len(m) != p.n or all(v == 0 for v in m):
        raise ValueError("mode index must be a nonzero n-vector")
    c = np.zeros((p.n,) + lat.shape, dtype=complex)
    idx = tuple(v % p.M for v in m)
    nidx = tuple((-v) % p.M for v in m)
    c[(comp,) + idx] += amplitude / 2.0
    c[(comp,) + nidx] += amplitude / 2.0
    return SpectralField(lat, c)


def band_limited_random(
    p: Parameters,
    seed,
    band=(1.0, 8.0),
    spectrum: float = 0.0,
    amplitude: float = 1.0,
    project: bool = True,
) -> SpectralField:
    """Random field supported on band[0] <= |m| <= band[1].

    spectrum is the power-law tilt |m|^(-spectrum) of the coefficient
    magnitudes (0 = white).  The field is Hermitized, normalized to
    ||.||_inf = amplitude and, for n >= 2 vector fields, projected onto
    divergence-free.
    """
    rng = seed if isinstance(seed, Xorshift64Star) else Xorshift64Star(seed)
    lat = build_lattice(p)
    mmag = np.sqrt(np.sum(lat.m**2, axis=0))
    mask = (mmag >= band[0]) & (mmag <= band[1]) & lat.dealias_mask
    if not np.any(mask):
        raise ValueError(f"band {band} contains no resolvable modes")
    draws = np.asarray(rng.complex_normals(p.n * mmag.size)).reshape((p.n,) + lat.shape)
    profile = np.where(mask, np.where(mmag > 0, mmag, 1.0) ** -spectrum, 0.0)
    g = hermitize(SpectralField(lat, draws * profile))
    if project and p.n >= 2:
        g = leray_project(g)
    peak = inverse_transform(g).linf()
    if peak == 0.0:
        raise ValueError("random draw degenerated to the zero field")
    return SpectralField(lat, g.coeffs * (amplitude / peak))


def white_noise_field(p: Parameters, seed, amplitude: float = 1.0) -> SpectralField:
    """Flat spectrum over every resolvable mode (the roughest test data)."""
    return band_limited_random(
        p, seed, band=(1.0, p.M), spectrum=0.0, amplitude=amplitude
    )


def gevrey_field(p: Parameters, rate: float = 1.0, amplitude: float = 1.0) -> SpectralField:
    """Divergence-free field with coefficient decay e^{-rate |k|}.

    The analytic-regularity signature of such a field is flat: the
    normalized derivative norms b_k approach a constant ~ 1/rate.
    """
    if p.n != 2:
        raise ValueError("the rotational construction is two-dimensional")
    if rate <= 0.0:
        raise ValueError("decay rate must be positive")
    lat = build_lattice(p)
    kmag = lat.kmag
    safe = np.where(kmag > 0, kmag, 1.0)
    env = np.where((kmag > 0) & lat.dealias_mask, np.exp(-rate * kmag), 0.0)
    # i * (-k2, k1)/|k| is divergence-free and conjugate-symmetric
    c = 1j * env / safe * np.stack([-lat.k[1], lat.k[0]])
    g = SpectralField(lat, c)
    peak = inverse_transform(g).linf()
    return SpectralField(lat, c * (amplitude / peak))


def edge_spiked_field(
    p: Parameters,
    spike_rel: float = 1e-3,
    amplitude: float = 1.0,
) -> SpectralField:
    """A smooth low mode plus a relative spike at the dealias edge.

    Frozen in time (see constant_trajectory) this is rough-but-bounded
    data whose normalized derivative norms b_k rise with k, the negative
    control for the analyticity verdict.
    """
    if p.n != 2:
        raise ValueError("spiked control data is two-dimensional")
    edge = int(p.dealias_frac * p.M / 2.0)
    base = mode_pair(p, (1, 0), comp=1, amplitude=amplitude)
    spike = mode_pair(p, (edge, 0), comp=1, amplitude=amplitude * spike_rel)
    return SpectralField(base.lattice, base.coeffs + spike.coeffs)


def constant_trajectory(v0: SpectralField, grid: TimeGrid) -> TrajectoryField:
    """The frozen-in-time trajectory u(t) = v0 (no smoothing at all)."""
    return TrajectoryField(grid, [v0] * (grid.prepend + grid.count))


def dilated_copy(v0: SpectralField, p: Parameters, lam: float):
    """Parabolic rescaling u0(x) = v0(lam^{1/2a} x) on a shrunken torus.

    Same coefficients, same mode indices; the box side contracts to
    L / lam^{1/2a} so every wavenumber stretches by lam^{1/2a}.  Critical
    norms respond with the factor lam^{-(1 - 1/2a)}.
    """
    if lam <= 0.0:
        raise ValueError("dilation factor must be positive")
    p2 = replace(p, L=p.L * lam ** (-1.0 / p.two_alpha))
    return SpectralField(build_lattice(p2), v0.coeffs.copy()), p2


# ---------------------------------------------------------------------------
# Shear combs for the decay study


def shear_comb(p: Parameters, amplitudes) -> SpectralField:
    """u = (0, sum_m A_m sin(m x1)); exactly divergence-free shear data.

    amplitudes[i] weights mode m = i + 1.  Self-advection of a shear
    flow vanishes identically, so the mild solution is the linear flow
    and decay rates can be read off without nonlinear contamination.
    """
    if p.n != 2:
        raise ValueError("shear data is two-dimensional")
    amplitudes = np.asarray(amplitudes, dtype=float)
    cut = p.dealias_frac * p.M / 2.0
    if len(amplitudes) > cut:
        raise ValueError(
            f"{len(amplitudes)} comb modes exceed the dealias cut {cut:.1f}"
        )
    lat = build_lattice(p)
    c = np.zeros((2,) + lat.shape, dtype=complex)
    for i, a in enumerate(amplitudes):
        m = i + 1
        c[(1, m % p.M) + (0,) * (p.n - 1)] += -0.5j * a
        c[(1, (-m) % p.M) + (0,) * (p.n - 1)] += 0.5j * a
    return SpectralField(lat, c)


def design_decay_amplitudes(
    p: Parameters,
    m_hi: int,
    window=None,
    k_weights=None,
    t_count: int = 70,
) -> np.ndarray:
    """Nonnegative comb amplitudes matching the decay power laws.

    Solves min ||W (G A - target)|| over A >= 0 where G_tk,m =
    m^k e^{-m^{2a} t} and the targets are the continuum envelopes
    kappa_k t^{-gamma_k}, kappa_k = Gamma((k + 2a - 1)/2a)/2a.  Rows are
    scaled by the target so every residual is relative.
    """
    two_a = p.two_alpha
    ms = np.arange(1, m_hi + 1, dtype=float)
    lam = ms**two_a
    if window is None:
        window = (float(m_hi) ** -two_a, 0.25)
    t_lo, t_hi = window
    ts = np.geomspace(0.75 * t_lo, 1.3 * t_hi, t_count)
    if k_weights is None:
        k_weights = {0: 3.0, 1: 1.0, 2: 1.0}
    rows, rhs = [], []
    for k, w in sorted(k_weights.items()):
        gamma_k = p.gx_exponent(k)
        kappa = gamma_fn((k + two_a - 1.0) / two_a) / two_a
        for t in ts:
            target = kappa * t**-gamma_k
            rows.append(w * ms**k * np.exp(-lam * t) / target)
            rhs.append(w)
    amps, _ = nnls(np.asarray(rows), np.asarray(rhs))
    return amps


def designed_comb(p: Parameters, m_hi: int | None = None, amplitude: float = 1.0) -> SpectralField:
    """Shear comb with NNLS-designed amplitudes, normalized in sup norm."""
    if m_hi is None:
        m_hi = int(p.dealias_frac * p.M / 2.0 - 1e-9)
    amps = design_decay_amplitudes(p, m_hi)
    g = shear_comb(p, amps)
    peak = inverse_transform(g).linf()
    return SpectralField(g.lattice, g.coeffs * (amplitude / peak))


# ---------------------------------------------------------------------------
# Families


def equivalence_family(p: Parameters, seed: int = 2026, count: int = 20):
    """Deterministic family of band-limited fields spanning |m| in [1, 16].

    Five pure modes on the dyadic ladder plus seeded random fields over
    dyadic bands with white, mildly red and red spectra.
    """
    if count < 1:
        raise ValueError("empty family requested")
    cut = p.dealias_frac * p.M / 2.0
    if cut < 16.0:
        raise ValueError(f"need a dealias cut >= 16, got {cut:.1f} (raise M)")
    fields = []
    for j, scale in enumerate((1, 2, 4, 8, 16)):
        fields.append(mode_pair(p, (scale, 0), comp=p.n - 1, amplitude=1.0))
    bands = ((1, 2), (2, 4), (4, 8), (8, 16), (1, 16))
    spectra = (0.0, 0.5, 1.0)
    i = 0
    while len(fields) < count:
        band = bands[i % len(bands)]
        tilt = spectra[(i // len(bands)) % len(spectra)]
        fields.append(
            band_limited_random(p, seed + i, band=band, spectrum=tilt, amplitude=1.0)
        )
        i += 1
    return fields[:count]
