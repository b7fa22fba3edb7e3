"""Norm layer: dyadic blocks, weighted time sups, box functional."""

import math

import numpy as np
import pytest

from fnslab.fields import (
    band_limited_random,
    constant_trajectory,
    dilated_copy,
    mode_pair,
)
from fnslab.norms import (
    CarlesonSampling,
    LPDecomposition,
    NormReport,
    besov_norm,
    carleson_norm,
    certify_equivalence,
    check_pointwise_semigroup_bound,
    gx_norm,
    gxk_norm,
    gy_norm,
    lp_for_lattice,
    norm_report,
    semigroup_norm_profile,
)
from fnslab.operators import TimeGrid, semigroup_trajectory
from fnslab.params import Parameters
from fnslab.spectral import SpectralField, build_lattice


def _params(alpha=0.75, n=2, M=16):
    return Parameters(alpha=alpha, n=n, M=M)


# ---------------------------------------------------------------------------
# Dyadic blocks


def test_partition_of_unity_is_exact():
    # the blocks telescope, so the sum over j is exactly 1 on the
    # resolvable annuli, not just approximately
    lat = build_lattice(_params())
    lp = lp_for_lattice(lat)
    assert lp.partition_residue(lat) == 0.0


def test_block_profile_values():
    assert LPDecomposition.bump(np.array([1.0]))[0] == 1.0
    assert LPDecomposition.bump(np.array([0.5]))[0] == 0.0
    assert LPDecomposition.bump(np.array([2.0]))[0] == 0.0
    with pytest.raises(ValueError, match="empty block range"):
        LPDecomposition(2, 1)


@pytest.mark.parametrize("alpha", [0.6, 0.75, 0.9])
def test_besov_single_block_oracle(alpha):
    # a pure mode at |k| = 2^j lands in exactly one block, so the norm
    # is 2^{j sigma} times the cosine amplitude
    p = _params(alpha=alpha)
    sigma = 1.0 - p.two_alpha
    amp = 0.9
    assert besov_norm(mode_pair(p, (4, 0), 0, amplitude=amp), sigma) == pytest.approx(
        2.0 ** (2.0 * sigma) * amp, rel=1e-12
    )
    assert besov_norm(mode_pair(p, (1, 0), 0, amplitude=amp), sigma) == pytest.approx(
        amp, rel=1e-12
    )


def test_besov_requires_mean_free():
    p = _params()
    lat = build_lattice(p)
    coeffs = np.zeros((2,) + lat.shape, dtype=complex)
    coeffs[0, 0, 0] = 1.0
    with pytest.raises(ValueError, match="mean-free"):
        besov_norm(SpectralField(lat, coeffs), -0.5)


# ---------------------------------------------------------------------------
# Weighted sup norms along the linear flow


@pytest.mark.parametrize("alpha,m,amp", [(0.75, 2, 1.0), (0.6, 1, 0.5), (0.9, 3, 2.0)])
def test_gx_norm_closed_form(alpha, m, amp):
    # for a pure mode the weighted sup t^w amp e^{-t lam} maximizes at
    # t = w / lam with value amp (w / lam)^w e^{-w}
    p = _params(alpha=alpha)
    v = mode_pair(p, (m, 0), 1, amplitude=amp)
    w = p.weight_offset
    lam = float(m) ** p.two_alpha
    oracle = amp * (w / lam) ** w * math.exp(-w)
    got = float(semigroup_norm_profile(v, p, 0)[0])
    assert got == pytest.approx(oracle, rel=1e-3)
    assert got <= oracle * (1.0 + 1e-12)


@pytest.mark.parametrize("k", [1, 2])
def test_gxk_norm_closed_form(k):
    # mode (m, 0): only the pure x1 multiindex survives, contributing a
    # factor m^k, and the time weight maximizes in closed form again
    p = _params()
    amp, m = 1.3, 2
    v = mode_pair(p, (m, 0), 1, amplitude=amp)
    lam = float(m) ** p.two_alpha
    gam = p.gx_exponent(k)
    oracle = (m**k * amp) * (gam / lam) ** gam * math.exp(-gam)
    got = float(semigroup_norm_profile(v, p, k)[k])
    assert got == pytest.approx(oracle, rel=1e-3)


def test_profile_matches_stored_trajectory():
    # lazy per-time evaluation and the stored-trajectory norm are two
    # code paths for the same numbers
    p = _params()
    u0 = band_limited_random(p, 7, (1, 4))
    grid = TimeGrid(1e-3, 2.0**0.25, 40)
    traj = semigroup_trajectory(u0, p, grid)
    profile = semigroup_norm_profile(u0, p, 2, grid)
    assert gx_norm(traj, p) == pytest.approx(float(profile[0]), rel=1e-13)
    for k in (1, 2):
        assert gxk_norm(traj, k, p) == pytest.approx(float(profile[k]), rel=1e-13)


def test_gxk_validation():
    p = _params(M=16)
    u0 = mode_pair(p, (1, 0), 1)
    traj = semigroup_trajectory(u0, p, TimeGrid(0.1, 2.0, 4))
    with pytest.raises(ValueError, match="nonnegative"):
        gxk_norm(traj, -1, p)
    with pytest.raises(ValueError, match="resolvable band"):
        gxk_norm(traj, 9, p)
    with pytest.raises(ValueError, match="resolvable band"):
        semigroup_norm_profile(u0, p, 9)
    with pytest.raises(ValueError, match="nonnegative"):
        semigroup_norm_profile(u0, p, -1)


def test_gy_norm_exponent():
    # constant trajectory: the sup is t_max^{2 - 1/alpha} times the sup
    # of the field, since the exponent is positive for alpha > 1/2
    p = _params()
    v = mode_pair(p, (1, 0), 1, amplitude=0.8)
    grid = TimeGrid(1.0, 2.0, 3)
    traj = constant_trajectory(v, grid)
    assert gy_norm(traj, p) == pytest.approx(4.0 ** (2.0 - 1.0 / p.alpha) * 0.8, rel=1e-12)


# ---------------------------------------------------------------------------
# Box functional


@pytest.mark.parametrize("alpha,m,amp", [(0.75, 1, 1.0), (0.6, 2, 0.7), (0.9, 1, 2.0)])
def test_carleson_closed_form_1d(alpha, m, amp):
    # one cosine mode in one dimension: the ball integral is
    # R + sin(2mR)/(2m) at the best center, the t integral is
    # (1 - e^{-2 lam R^{2a}}) / (2 lam), both in closed form
    p = Parameters(alpha=alpha, n=1, M=32)
    v = mode_pair(p, (m,), 0, amplitude=amp)
    lam = float(m) ** p.two_alpha
    best = 0.0
    R = 4.0 * p.L / p.M
    while R <= p.L / 4.0 * (1.0 + 1e-9):
        tint = (1.0 - math.exp(-2.0 * lam * R**p.two_alpha)) / (2.0 * lam)
        xmax = R + abs(math.sin(2.0 * m * R)) / (2.0 * m)
        best = max(best, math.sqrt(amp**2 * tint * xmax * R ** -(3.0 - p.two_alpha)))
        R *= 2.0
    assert carleson_norm(v, p) == pytest.approx(best, rel=1e-8)


@pytest.mark.parametrize("lam", [2.0, 4.0])
def test_carleson_dilation_scaling(lam):
    # shrinking the torus by lam^{-1/2a} with fixed coefficients is the
    # exact dilation symmetry; every ingredient rescales in proportion,
    # so the computed value scales by lam^{-(1 - 1/2a)} to roundoff
    p = Parameters(alpha=0.75, n=1, M=32)
    v = mode_pair(p, (2,), 0)
    e0 = carleson_norm(v, p)
    vd, pd = dilated_copy(v, p, lam)
    assert carleson_norm(vd, pd) / e0 == pytest.approx(
        lam ** -(1.0 - 1.0 / p.two_alpha), rel=1e-12
    )


def test_carleson_zero_field():
    p = _params()
    lat = build_lattice(p)
    v = SpectralField(lat, np.zeros((2,) + lat.shape, dtype=complex))
    assert carleson_norm(v, p) == 0.0


def test_carleson_validation():
    p = _params()
    lat = build_lattice(p)
    coeffs = np.zeros((2,) + lat.shape, dtype=complex)
    coeffs[0, 0, 0] = 1.0
    with pytest.raises(ValueError, match="mean-free"):
        carleson_norm(SpectralField(lat, coeffs), p)
    complex_coeffs = np.zeros((2,) + lat.shape, dtype=complex)
    complex_coeffs[0, 1, 0] = 1.0  # no conjugate partner
    with pytest.raises(ValueError, match="real-valued"):
        carleson_norm(SpectralField(lat, complex_coeffs), p)
    v = mode_pair(p, (1, 0), 1)
    with pytest.raises(ValueError, match="exceeds L/4"):
        carleson_norm(v, p, CarlesonSampling(radii=(p.L / 2.0,)))
    other = Parameters(alpha=0.6, n=2, M=16)
    with pytest.raises(ValueError, match="does not match"):
        carleson_norm(v, other)


def test_carleson_sampling_plan():
    s = CarlesonSampling()
    fine = s.refined()
    assert fine.t_panels == 2 * s.t_panels and fine.t_nodes == s.t_nodes + 2
    assert s.resolve_radii(2.0 * math.pi, 16) == (math.pi / 2.0,)
    assert len(s.resolve_radii(2.0 * math.pi, 64)) == 3
    with pytest.raises(ValueError, match="panel"):
        CarlesonSampling(t_panels=0)
    with pytest.raises(ValueError, match="x_stride"):
        CarlesonSampling(x_stride=0)
    with pytest.raises(ValueError, match="too coarse"):
        CarlesonSampling().resolve_radii(2.0 * math.pi, 4)


# ---------------------------------------------------------------------------
# Reports


def _small_family(p):
    return [
        mode_pair(p, (1, 0), 1),
        mode_pair(p, (2, 1), 0, amplitude=0.5),
        band_limited_random(p, 11, (1, 4)),
    ]


def test_certify_equivalence_small_family():
    p = _params()
    rep = certify_equivalence(_small_family(p), p, factor=50.0)
    assert rep.passed
    assert set(rep.spreads) == {"gx/besov", "carleson/besov", "gx/carleson"}
    for name, spread in rep.spreads.items():
        lo, hi = rep.ratio_ranges[name]
        assert spread == pytest.approx(hi / lo)
        assert spread >= 1.0
    assert any("PASS" in line for line in rep.summary_lines())


def test_certify_equivalence_validation():
    p = _params()
    with pytest.raises(ValueError, match="at least two"):
        certify_equivalence([mode_pair(p, (1, 0), 1)], p)
    lat = build_lattice(p)
    zero = SpectralField(lat, np.zeros((2,) + lat.shape, dtype=complex))
    with pytest.raises(ValueError, match="zero"):
        certify_equivalence([mode_pair(p, (1, 0), 1), zero], p)


def test_pointwise_semigroup_bound():
    p = _params()
    rep = check_pointwise_semigroup_bound(_small_family(p), p)
    assert rep.passed
    assert rep.drift < 0.1
    assert len(rep.per_field) == 3
    assert rep.constant == pytest.approx(max(rep.per_field))
    with pytest.raises(ValueError, match="empty"):
        check_pointwise_semigroup_bound([], p)


def test_norm_report_contents():
    p = _params()
    u0 = band_limited_random(p, 7, (1, 4))
    rep = norm_report(u0, p, k_max=2, label="probe")
    assert rep.gx == rep.gx_k[0]
    assert len(rep.gx_k) == 3
    assert all(v > 0.0 for v in (rep.gx, rep.gy, rep.carleson, rep.besov))
    assert rep.meta["sigma"] == pytest.approx(1.0 - p.two_alpha)
    assert "probe" in rep.summary_lines()[0]


def test_norm_report_rejects_bad_entries():
    with pytest.raises(ValueError, match="finite and nonnegative"):
        NormReport("x", -1.0, 0.0, (0.0,), 0.0, 0.0, {})
    with pytest.raises(ValueError, match="finite and nonnegative"):
        NormReport("x", math.nan, 0.0, (0.0,), 0.0, 0.0, {})
