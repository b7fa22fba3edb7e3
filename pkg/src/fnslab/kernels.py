"""Physical-space evaluation of the fractional heat kernel family.

The kernel Phi is the inverse Fourier transform of exp(-|xi|^(2 alpha))
under the convention  F f(xi) = integral f(x) exp(-i x.xi) dx,  so that
Phi integrates to one.  At time t the kernel is the self-similar rescale

    Phi_t(x) = t^(-n/2alpha) Phi(t^(-1/2alpha) x).

Radial reductions used for evaluation:

    n = 1:  Phi(r) = (1/pi)      int_0^inf cos(r rho) exp(-rho^2a) drho
    n = 2:  Phi(r) = (1/2 pi)    int_0^inf J_0(r rho) rho exp(-rho^2a) drho
    n = 3:  Phi(r) = (1/2 pi^2 r) int_0^inf rho sin(r rho) exp(-rho^2a) drho

Leray-projected derivative kernels (n = 2 only) are reduced to Fourier
coefficients on the unit circle: for a symbol component
s(omega) = m_ij(omega) omega^beta with m the projection matrix and
|beta| = g, writing s(phi) = sum_l c_l exp(i l phi),

    K(x) = Re[ i^g (1/2pi) ( c_0 H_0(r)
             + sum_{l>=1} i^l (c_l e^{i l phi_x} + c_{-l} e^{-i l phi_x}) H_l(r) ) ]

with Hankel-type radial integrals
    H_l(r) = int_0^inf J_l(r rho) rho^(g+1) exp(-t rho^2a) drho.
This uses the identity  int_0^2pi e^{i z cos psi} e^{i l psi} dpsi
= 2 pi i^l J_l(z),  and i^{-l} J_{-l} = i^l J_l for the negative
harmonics.  Since s is a trigonometric polynomial of degree at most
g + 2, the sum over l is finite and exact.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
from scipy.integrate import quad as _scipy_quad
from scipy.special import gamma, hankel1, j0, j1, jv

from .quadrature import (
    cutoff_for,
    graded_panels,
    neumaier_sum,
    panel_nodes,
    radial_edges,
)

_SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


# ---------------------------------------------------------------------------
# result containers


@dataclass
class KernelTable:
    """Kernel values sampled on a radial grid at one (alpha, n, t).

    kind is "phi" for the heat kernel itself or "pi_grad_phi" for the
    angular sup of the Leray-projected derivative kernel; grad_order is
    the number of gradients applied (0 for Pi Phi itself).
    """

    alpha: float
    n: int
    t: float
    radii: np.ndarray
    values: np.ndarray
    kind: str = "phi"
    grad_order: int = 0
    quad_points: int = 0

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1 or (len(r) > 1 and np.any(np.diff(r) <= 0)):
            raise ValueError("radii must be a strictly increasing 1-d array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("kernel table contains non-finite values")


@dataclass
class BoundCheckResult:
    """Measured sup of |kernel| / bound (constant set to 1)."""

    bound_name: str
    sup_ratio: float
    argmax: tuple
    samples: int
    passed: bool
    drift: float = float("nan")
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# the heat kernel Phi


def cutoff_for_t(m, two_a, t, tol):
    """Truncation radius R with integral_R^inf rho^m exp(-t rho^2a) drho <= tol.

    Substituting u = t^(1/2a) rho reduces to the t = 1 tail bound with an
    adjusted tolerance.
    """
    pref = t ** (-(m + 1.0) / two_a)
    u_cut = cutoff_for(m, two_a, max(tol / pref, 1e-300))
    return u_cut * t ** (-1.0 / two_a)


def _phi_reduced_1d(alpha, radii, t, p, tail_tol, dtype):
    """Shared node set for the n in {1, 3} radial reductions."""
    two_a = 2.0 * alpha
    R = cutoff_for_t(2, two_a, t, tail_tol)  # rho^2 is the worst weight (n = 3)
    r_max = float(np.max(radii)) if len(radii) else 1.0
    edges = radial_edges(r_max, R, phase_per_panel=math.pi / 4)
    nodes, w = panel_nodes(edges, p, dtype=dtype)
    expf = np.exp(-dtype(t) * nodes ** dtype(two_a))
    return nodes, w * expf


def _phi_n1(alpha, radii, t, p, tail_tol, dtype):
    nodes, wf = _phi_reduced_1d(alpha, radii, t, p, tail_tol, dtype)
    if dtype is np.float64:
        out = np.cos(np.multiply.outer(np.asarray(radii, dtype=dtype), nodes)) @ wf
    else:
        out = np.empty(len(radii), dtype=dtype)
        for i, r in enumerate(radii):
            out[i] = neumaier_sum(np.cos(dtype(r) * nodes) * wf)
    return np.asarray(out / dtype(math.pi), dtype=float), nodes.size


def _phi_n3(alpha, radii, t, p, tail_tol, dtype):
    nodes, wf = _phi_reduced_1d(alpha, radii, t, p, tail_tol, dtype)
    radii = np.asarray(radii, dtype=float)
    if dtype is np.float64:
        r_safe = np.where(radii == 0.0, 1.0, radii).astype(dtype)
        args = np.multiply.outer(r_safe, nodes)
        out = (np.sin(args) * nodes) @ wf / r_safe
        if np.any(radii == 0.0):
            out[radii == 0.0] = (nodes**2) @ wf
    else:
        out = np.empty(len(radii), dtype=dtype)
        for i, r in enumerate(radii):
            if r == 0.0:
                terms = nodes**2 * wf
            else:
                terms = nodes * np.sin(dtype(r) * nodes) * wf / dtype(r)
            out[i] = neumaier_sum(terms)
    return np.asarray(out / dtype(2.0 * math.pi**2), dtype=float), nodes.size


def _phi_n2_hankel(alpha, radii, t, p, tail_tol):
    """J_0 Hankel route, double precision; fine for power-law-size values."""
    H, npts = hankel_table(alpha, 0, np.asarray(radii, dtype=float), t=t,
                           p=p, tail_tol=tail_tol, lmax=0)
    return H[0] / (2.0 * math.pi), npts


def _phi_n2_tensor(alpha, radii, t, p, tail_tol):
    """Long-double tensor route for nearly-Gaussian alpha, where values
    decay superexponentially and the Hankel route's double-precision
    cancellation floor dominates.

    Phi(r, 0) = (1/pi^2) int_0^inf cos(r xi1) G(xi1) dxi1,
    G(xi1) = int_0^inf exp(-t (xi1^2 + xi2^2)^alpha) dxi2.
    """
    ld = np.longdouble
    two_a = 2.0 * alpha
    R = cutoff_for_t(1, two_a, t, tail_tol)
    r_max = float(np.max(radii)) if len(radii) else 1.0
    osc_nodes, osc_w = panel_nodes(radial_edges(r_max, R, phase_per_panel=math.pi / 4), p, dtype=ld)
    in_nodes, in_w = panel_nodes(radial_edges(1.0, R, phase_per_panel=math.pi / 4), p, dtype=ld)
    rad2 = osc_nodes[:, None] ** 2 + in_nodes[None, :] ** 2
    G = (np.exp(-ld(t) * rad2 ** ld(alpha)) * in_w).sum(axis=1)
    gw = G * osc_w
    out = np.empty(len(radii), dtype=ld)
    for i, r in enumerate(radii):
        out[i] = neumaier_sum(np.cos(ld(r) * osc_nodes) * gw)
    return np.asarray(out / ld(math.pi) ** 2, dtype=float), osc_nodes.size * (in_nodes.size + 1)


def _rotation_angle(alpha):
    """Ray angle theta for the rotated contour rho = s exp(i theta).

    Chosen so 2 alpha theta = 0.4 pi for every admissible alpha: the
    symbol factor then decays like exp(-cos(0.4 pi) t s^2a) along the
    whole ray, uniformly in alpha, while theta itself stays below pi/2.
    """
    return 0.2 * math.pi / alpha


def _rotated_edges(s_cut, per_octave=4):
    """Geometric panel edges on [0, s_cut], refined toward the origin.

    Position ratio 2^(1/per_octave) per panel keeps the oscillation
    exp(i r s cos theta) below ~0.2 r s cos(theta) radians per panel;
    since the integrand is negligible once r s sin(theta) exceeds the
    tail budget, the per-panel phase is bounded independently of r.
    """
    seed_frac = 1e-10
    count = int(math.ceil(per_octave * math.log2(1.0 / seed_frac)))
    pos = s_cut * seed_frac * 2.0 ** (np.arange(count + 1) / per_octave)
    pos[-1] = s_cut
    return np.concatenate([[0.0], pos])


def _phi_rotated(alpha, n, t, radii, p, tail_tol):
    """Radial reductions evaluated on a rotated contour.

    Writing cos / sin / J_0 through exp(i r rho) or H_0^(1)(r rho) and
    rotating the ray to rho = s exp(i theta) (legitimate: the integrand
    is analytic in the sector, decays on the closing arc because
    2 alpha theta < pi/2, and the origin pivot is integrable) turns the
    oscillatory factor into exp(-r s sin theta) decay.  Node count is
    then independent of r, and the cancellation that forces compensated
    long-double sums on the real axis never happens: plain double
    precision resolves the far field.
    """
    theta = _rotation_angle(alpha)
    two_a = 2.0 * alpha
    ray = complex(math.cos(theta), math.sin(theta))
    s_sym = cutoff_for_t(2, two_a, t * math.cos(two_a * theta), tail_tol)
    width = (5.0 - math.log(tail_tol)) / math.sin(theta)

    radii = np.asarray(radii, dtype=float)
    out = np.empty(radii.size)
    npts = 0
    for i, r in enumerate(radii):
        if r == 0.0:
            m = {1: 0, 2: 1, 3: 2}[n]
            mom = gamma((m + 1.0) / two_a) / (two_a * t ** ((m + 1.0) / two_a))
            out[i] = mom / {1: math.pi, 2: 2.0 * math.pi, 3: 2.0 * math.pi**2}[n]
            continue
        s_cut = min(s_sym, width / r)
        nodes, w = panel_nodes(_rotated_edges(s_cut), p)
        npts += nodes.size
        z = ray * nodes
        f = w * np.exp(-t * z**two_a)
        if n == 1:
            out[i] = (ray * np.sum(f * np.exp(1j * r * z))).real / math.pi
        elif n == 3:
            total = ray * ray * np.sum(f * nodes * np.exp(1j * r * z))
            out[i] = total.imag / (2.0 * math.pi**2 * r)
        else:
            total = ray * ray * np.sum(f * nodes * hankel1(0, r * z))
            out[i] = total.real / (2.0 * math.pi)
    return out, npts


def eval_phi(alpha, n, t, radii, p=12, tail_tol=1e-18, method="auto",
             use_scaling=True, precision="high") -> KernelTable:
    """Evaluate Phi_t on a radial grid.

    With use_scaling (default) the integral is computed at t = 1 and
    mapped by self-similarity; use_scaling=False integrates the
    exp(-t rho^2a) symbol directly, which exists so the self-similarity
    identity can be tested rather than assumed.

    method: "auto" integrates on the real axis when the phase budget
    r_max * R is modest, switching to the rotated contour (whose cost
    does not grow with r) once the real-axis panel count would exceed
    ~1200; the long-double tensor route still handles n = 2 at nearly
    Gaussian alpha, where superexponentially small values sit outside
    the rotated route's double-precision reach.  "rotated" / "hankel" /
    "tensor" force a route.

    precision "high" sums the real-axis routes in compensated long
    double (needed where deep oscillatory cancellation meets tiny
    kernel values); "fast" uses plain double dot products, adequate
    for power-law-size values.  The rotated route is always plain
    double: rotation removes the cancellation instead of absorbing it.
    """
    if not (0.5 <= alpha <= 1.0):
        raise ValueError(f"alpha = {alpha} outside [0.5, 1.0]")
    if n not in (1, 2, 3):
        raise ValueError(f"dimension n = {n} not in {{1, 2, 3}}")
    if t <= 0.0:
        raise ValueError("t must be positive")
    radii = np.asarray(radii, dtype=float)

    if use_scaling and t != 1.0:
        scale = t ** (-1.0 / (2.0 * alpha))
        base = eval_phi(alpha, n, 1.0, radii * scale, p=p, tail_tol=tail_tol,
                        method=method, use_scaling=False, precision=precision)
        return KernelTable(alpha, n, t, radii, t ** (-n / (2.0 * alpha)) * base.values,
                           kind="phi", quad_points=base.quad_points)

    use_rotated = method == "rotated"
    if method == "auto" and not (n == 2 and alpha >= 0.95):
        r_max = float(np.max(radii)) if radii.size else 0.0
        use_rotated = r_max * cutoff_for_t(2, 2.0 * alpha, t, tail_tol) > 300.0 * math.pi

    dtype = np.float64 if precision == "fast" else np.longdouble
    if use_rotated:
        values, npts = _phi_rotated(alpha, n, t, radii, p, tail_tol)
    elif n == 1:
        values, npts = _phi_n1(alpha, radii, t, p, tail_tol, dtype)
    elif n == 3:
        values, npts = _phi_n3(alpha, radii, t, p, tail_tol, dtype)
    else:
        if method == "tensor" or (method == "auto" and alpha >= 0.95):
            values, npts = _phi_n2_tensor(alpha, radii, t, p, tail_tol)
        else:
            values, npts = _phi_n2_hankel(alpha, radii, t, p, tail_tol)
    return KernelTable(alpha, n, t, radii, values, kind="phi", quad_points=npts)


def gaussian_closed_form(n, t, radii):
    r = np.asarray(radii, dtype=float)
    return (4.0 * math.pi * t) ** (-n / 2.0) * np.exp(-(r**2) / (4.0 * t))


def poisson_closed_form(n, t, radii):
    r = np.asarray(radii, dtype=float)
    c = gamma((n + 1) / 2.0) / math.pi ** ((n + 1) / 2.0)
    return c * t / (t**2 + r**2) ** ((n + 1) / 2.0)


def kernel_mass(alpha, n, r_cut=100.0, p=10, panels=70) -> float:
    """integral of Phi(1, x) over R^n by radial quadrature.

    The tail beyond r_cut is completed with a two-term power law
    A r^(-n-2a) + B r^(-n-4a) fitted at r_cut/2 and r_cut, matching the
    leading terms of the kernel's large-r expansion; the remainder is
    O(r_cut^(-6a)) relative to the total mass.
    """
    nodes, w = graded_panels(0.0, r_cut, panels=panels, nodes=p, grading=1.25)
    tab = eval_phi(alpha, n, 1.0, nodes, p=p, tail_tol=1e-16,
                   method="hankel" if n == 2 else "auto", precision="fast")
    area = _SPHERE_AREA[n]
    bulk = area * float(np.sum(tab.values * nodes ** (n - 1) * w))
    if alpha >= 0.95:
        return bulk  # superexponential tail, nothing left beyond r_cut
    two_a = 2.0 * alpha
    r_pair = np.array([r_cut / 2.0, r_cut])
    phi_pair = eval_phi(alpha, n, 1.0, r_pair, p=p, tail_tol=1e-16,
                        method="hankel" if n == 2 else "auto",
                        precision="fast").values
    design = np.array([[r ** (-(n + two_a)), r ** (-(n + 2 * two_a))] for r in r_pair])
    A, B = np.linalg.solve(design, phi_pair)
    tail = area * (A * r_cut ** (-two_a) / two_a
                   + B * r_cut ** (-2 * two_a) / (2 * two_a))
    return bulk + tail


# ---------------------------------------------------------------------------
# Leray-projected derivative kernels, n = 2


def bessel_rows(lmax: int, z: np.ndarray) -> np.ndarray:
    """J_l(z) for l = 0..lmax; upward recurrence where stable, jv else."""
    out = np.empty((lmax + 1, z.size))
    out[0] = j0(z)
    if lmax >= 1:
        out[1] = j1(z)
    if lmax >= 2:
        safe = z > max(2.0 * lmax, 1.0)
        zs = z[safe]
        zu = z[~safe]
        for l in range(1, lmax):
            out[l + 1, safe] = (2.0 * l / zs) * out[l, safe] - out[l - 1, safe]
            out[l + 1, ~safe] = jv(l + 1, zu)
    return out


def hankel_table(alpha, g, radii, t=1.0, p=10, tail_tol=1e-16, lmax=None):
    """H_l(r) = int_0^inf J_l(r rho) rho^(g+1) exp(-t rho^2a) drho.

    Radii are processed in decade batches so the phase-limited node set
    is sized by each batch's largest radius rather than the global one.
    Returns (H, node_count) with H of shape (lmax+1, len(radii)).
    """
    radii = np.asarray(radii, dtype=float)
    if lmax is None:
        lmax = g + 2
    two_a = 2.0 * alpha
    R = cutoff_for_t(g + 1, two_a, t, tail_tol)
    H = np.empty((lmax + 1, radii.size))
    total_nodes = 0

    zero = radii == 0.0
    if np.any(zero):
        s = (g + 2.0) / two_a
        H[0, zero] = gamma(s) / (two_a * t**s)
        H[1:, zero] = 0.0

    pos_idx = np.flatnonzero(~zero)
    order = pos_idx[np.argsort(radii[pos_idx])]
    i = 0
    while i < len(order):
        r_lo = radii[order[i]]
        r_hi = min(10.0 * r_lo, radii[order[-1]])
        j = i
        while j < len(order) and radii[order[j]] <= r_hi * (1 + 1e-12):
            j += 1
        batch = order[i:j]
        nodes, w = panel_nodes(radial_edges(radii[batch[-1]], R), p)
        gfac = nodes ** (g + 1) * np.exp(-t * nodes**two_a) * w
        total_nodes += nodes.size
        for idx in batch:
            H[:, idx] = bessel_rows(lmax, radii[idx] * nodes) @ gfac
        i = j
    return H, total_nodes


def _symbol_fourier(i, j, beta, nphi):
    """Circle Fourier coefficients of (delta_ij - w_i w_j) w^beta."""
    phi = 2.0 * math.pi * np.arange(nphi) / nphi
    w = np.stack([np.cos(phi), np.sin(phi)])
    s = ((1.0 if i == j else 0.0) - w[i] * w[j]) * w[0] ** beta[0] * w[1] ** beta[1]
    return np.fft.fft(s) / nphi


def pi_phi_components(alpha, g, radii, angles, comps, t=1.0, p=10,
                      tail_tol=1e-16):
    """Projected derivative kernel components on a polar (r, phi) grid.

    comps is a list of (i, j, beta) with |beta| = g; result has shape
    (len(comps), len(angles), len(radii)).
    """
    radii = np.asarray(radii, dtype=float)
    angles = np.asarray(angles, dtype=float)
    lmax = g + 2
    H, npts = hankel_table(alpha, g, radii, t=t, p=p, tail_tol=tail_tol, lmax=lmax)
    nphi = 8 * (lmax + 2)
    out = np.empty((len(comps), angles.size, radii.size))
    ig = 1j**g
    for ci, (i, j, beta) in enumerate(comps):
        if sum(beta) != g:
            raise ValueError(f"component multiindex {beta} has degree != {g}")
        fc = _symbol_fourier(i, j, beta, nphi)
        for ai, phx in enumerate(angles):
            total = fc[0] * H[0]
            for l in range(1, lmax + 1):
                il = 1j**l
                total = total + il * (
                    fc[l] * np.exp(1j * l * phx) + fc[-l % nphi] * np.exp(-1j * l * phx)
                ) * H[l]
            out[ci, ai] = (ig * total).real / (2.0 * math.pi)
    return out, npts


def _grad_multiindices(g):
    return [(b, g - b) for b in range(g + 1)]


def _sym_comps(g):
    return [(i, j, beta) for (i, j) in ((0, 0), (0, 1), (1, 1))
            for beta in _grad_multiindices(g)]


def eval_pi_phi(alpha, n, t, radii, grad_order=0, p=10, tail_tol=1e-16,
                n_angles=None, use_scaling=True) -> KernelTable:
    """Angular sup of |Pi grad^g Phi_t| on a radial grid (n = 2 only).

    The kernel of Pi grad^g S(t) has symbol m(xi) (i xi)^beta exp(-t|xi|^2a)
    per tensor component; values are the max of |K| over the symmetric
    components and a dense angle sample (the angular dependence is a
    trigonometric polynomial of degree <= g + 2, so modest sampling
    resolves the sup).
    """
    if n != 2:
        raise ValueError(
            "projected kernels are evaluated in dimension 2 only; "
            "n = 1 has a trivial projector and n = 3 is out of scope"
        )
    if not (0.5 <= alpha <= 1.0):
        raise ValueError(f"alpha = {alpha} outside [0.5, 1.0]")
    g = int(grad_order)
    radii = np.asarray(radii, dtype=float)

    if use_scaling and t != 1.0:
        scale = t ** (-1.0 / (2.0 * alpha))
        base = eval_pi_phi(alpha, n, 1.0, radii * scale, grad_order=g, p=p,
                           tail_tol=tail_tol, n_angles=n_angles, use_scaling=False)
        fac = t ** (-(n + g) / (2.0 * alpha))
        return KernelTable(alpha, n, t, radii, fac * base.values,
                           kind="pi_grad_phi", grad_order=g,
                           quad_points=base.quad_points)

    if n_angles is None:
        n_angles = 4 * (g + 3)
    angles = 2.0 * math.pi * np.arange(n_angles) / n_angles
    vals, npts = pi_phi_components(alpha, g, radii, angles, _sym_comps(g),
                                   t=t, p=p, tail_tol=tail_tol)
    sup = np.abs(vals).max(axis=(0, 1))
    return KernelTable(alpha, n, t, radii, sup, kind="pi_grad_phi",
                       grad_order=g, quad_points=npts)


def pi_phi_brute_point(alpha, g, i, j, beta, x, t=1.0, tail_tol=1e-14, p=8):
    """Direct tensor-product quadrature of one component at one point.

    This is the straightforward 2-d Fourier inversion on a truncated
    xi-grid; slow but independent of the circle-harmonic reduction, so
    the two routes cross-validate each other.
    """
    two_a = 2.0 * alpha
    R = cutoff_for(g + 1, two_a, tail_tol) * max(t, 1e-300) ** (-1.0 / two_a)
    r = math.hypot(*x)
    panels = max(40, int(math.ceil(2.0 * R * max(r, 1.0) / (math.pi / 2.0))))
    xg, wg = np.polynomial.legendre.leggauss(p)
    edges = np.linspace(-R, R, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * xg).ravel()
    w1 = (half[:, None] * wg).ravel()
    X1, X2 = np.meshgrid(nodes, nodes, indexing="ij")
    W = np.outer(w1, w1)
    ksq = X1**2 + X2**2
    ksq_safe = np.where(ksq == 0.0, 1.0, ksq)
    eta = (X1, X2)
    m = (1.0 if i == j else 0.0) - eta[i] * eta[j] / ksq_safe
    mono = (1j * X1) ** beta[0] * (1j * X2) ** beta[1]
    integ = m * mono * np.exp(-t * ksq**alpha) * np.exp(1j * (x[0] * X1 + x[1] * X2))
    val = np.sum(integ * W) / (2.0 * math.pi) ** 2
    return float(val.real)


# ---------------------------------------------------------------------------
# named bounds and their certification


def bound_value(name, r, t, alpha, n, k=0):
    """Reference decay bounds with the constant set to 1."""
    two_a = 2.0 * alpha
    if name == "phi_decay":
        return t / (t ** (1.0 / alpha) + r**2) ** ((n + two_a) / 2.0)
    if name == "pi_phi_decay":
        return (t ** (1.0 / two_a) + r) ** (-float(n))
    if name == "pi_grad_phi_decay":
        return (t ** (1.0 / two_a) + r) ** (-(n + 1.0))
    if name == "k_growth":
        # envelope for the (k + 1)-th gradient of the projected kernel:
        # compare against tables computed at grad_order = k + 1
        if k < 1:
            raise ValueError("k_growth bound needs k >= 1")
        return (k ** (k / two_a) * t ** (-k / two_a)
                * ((t / k) ** (1.0 / two_a) + r) ** (-(n + 1.0)))
    raise ValueError(f"unknown bound '{name}'")


def check_bound(tables, bound, refined=None, k=0) -> BoundCheckResult:
    """Sup of |value| / bound over one or more kernel tables.

    refined, if given, is a parallel list of tables computed with a
    denser quadrature; the check passes when the sup ratio is finite
    and drifts by less than 10% between the two.
    """
    if isinstance(tables, KernelTable):
        tables = [tables]
    if isinstance(refined, KernelTable):
        refined = [refined]

    def sup_over(tabs):
        best, arg = -math.inf, None
        count = 0
        for tab in tabs:
            b = bound_value(bound, tab.radii, tab.t, tab.alpha, tab.n, k=k)
            ratios = np.abs(tab.values) / b
            count += ratios.size
            i = int(np.argmax(ratios))
            if ratios[i] > best:
                best = float(ratios[i])
                arg = (float(tab.radii[i]), tab.t, k)
        return best, arg, count

    sup, argmax, count = sup_over(tables)
    drift = float("nan")
    passed = math.isfinite(sup)
    if refined is not None:
        sup_ref, _, _ = sup_over(refined)
        drift = abs(sup_ref - sup) / max(sup, 1e-300)
        passed = passed and drift < 0.10
    return BoundCheckResult(bound, sup, argmax, count, passed, drift)


# ---------------------------------------------------------------------------
# Mihlin-Hormander condition for the projector symbol


def _leray_symbol_entries(eta):
    e1, e2 = eta
    ksq = e1 * e1 + e2 * e2
    return np.array([
        1.0 - e1 * e1 / ksq,
        -e1 * e2 / ksq,
        1.0 - e2 * e2 / ksq,
    ])


def _fd_partial(f, eta, multi, h):
    """Nested central differences for the mixed partial d^multi f."""
    for ax in range(len(multi)):
        if multi[ax] > 0:
            lower = list(multi)
            lower[ax] -= 1
            ep = list(eta)
            em = list(eta)
            ep[ax] = eta[ax] + h
            em[ax] = eta[ax] - h
            return (_fd_partial(f, tuple(ep), tuple(lower), h)
                    - _fd_partial(f, tuple(em), tuple(lower), h)) / (2.0 * h)
    return f(eta)


def check_mihlin_hormander(max_order, n=2, h_rel=1e-2, n_dirs=16,
                           magnitudes=(1e-3, 1.0, 1e3)) -> BoundCheckResult:
    """sup over eta of |eta|^|a| |d^a m(eta)| per multiindex a, |a| <= max_order.

    Derivatives by nested central differences with step h_rel |eta|; the
    symbol is 0-homogeneous so the weighted derivative is scale
    invariant, which the sample over three magnitude decades confirms.
    """
    if n != 2:
        raise ValueError("the symbol check is implemented for n = 2")
    if max_order > 3:
        raise ValueError("max_order must be <= 3 (finite differences degrade beyond)")
    angles = math.pi * (np.arange(n_dirs) + 0.125) / n_dirs
    angles = np.concatenate([[0.0, math.pi / 2], angles])  # include the axes
    per_multi = {}
    count = 0
    overall_arg = None
    overall = 0.0
    for order in range(max_order + 1):
        for a1 in range(order + 1):
            multi = (a1, order - a1)
            sup = 0.0
            for mag in magnitudes:
                h = h_rel * mag
                for th in angles:
                    eta = (mag * math.cos(th), mag * math.sin(th))
                    d = _fd_partial(_leray_symbol_entries, eta, multi, h)
                    v = float(np.abs(d).max()) * mag**order
                    count += 1
                    if v > sup:
                        sup = v
                    if v > overall:
                        overall, overall_arg = v, (multi, mag, th)
            per_multi[multi] = sup
    passed = all(math.isfinite(v) for v in per_multi.values())
    return BoundCheckResult("mihlin_hormander", overall, overall_arg,
                            count, passed, details={"per_multiindex": per_multi})


# ---------------------------------------------------------------------------
# convolution inequality


def _conv_lhs_1d(a, b, x, epsrel):
    def f(y):
        return (a + abs(x - y)) ** (-2.0) * (b + abs(y)) ** (-2.0)

    pieces = sorted({0.0, float(x)})
    vals = []
    lo = -math.inf
    for pt in pieces + [math.inf]:
        v, _ = _scipy_quad(f, lo, pt, epsabs=0.0, epsrel=epsrel, limit=400)
        vals.append(v)
        lo = pt
    return sum(vals)


def _conv_lhs_2d(a, b, x, epsrel):
    r = abs(float(x))

    def inner(rho):
        def g(phi):
            d = math.sqrt(rho * rho + r * r - 2.0 * rho * r * math.cos(phi))
            return (a + d) ** (-3.0)

        v, _ = _scipy_quad(g, 0.0, math.pi, epsabs=0.0, epsrel=epsrel, limit=400)
        return 2.0 * v * rho * (b + rho) ** (-3.0)

    split = max(2.0 * r, 1.0)
    v1, _ = _scipy_quad(inner, 0.0, split, epsabs=0.0, epsrel=epsrel,
                        limit=400, points=[r] if 0.0 < r < split else None)
    v2, _ = _scipy_quad(inner, split, math.inf, epsabs=0.0, epsrel=epsrel,
                        limit=400)
    return v1 + v2


def verify_convolution_inequality(a, b, x_samples, n, epsrel=1e-9) -> BoundCheckResult:
    """Ratio of integral (a+|x-y|)^(-n-1) (b+|y|)^(-n-1) dy to its bound
    a^(-1) (a+|x|)^(-n-1), sampled over x.
    """
    if not (0.0 < a < b):
        raise ValueError(f"need 0 < a < b, got a = {a}, b = {b}")
    if n not in (1, 2):
        raise ValueError("convolution check supports n in {1, 2}")
    lhs_fn = _conv_lhs_1d if n == 1 else _conv_lhs_2d
    sup, argmax = -math.inf, None
    ratios = {}
    for x in x_samples:
        lhs = lhs_fn(a, b, x, epsrel)
        ratio = lhs * a * (a + abs(x)) ** (n + 1.0)
        ratios[float(x)] = ratio
        if ratio > sup:
            sup, argmax = ratio, float(x)
    lhs_ref = lhs_fn(a, b, argmax, epsrel * 0.1)
    ratio_ref = lhs_ref * a * (a + abs(argmax)) ** (n + 1.0)
    drift = abs(ratio_ref - sup) / max(sup, 1e-300)
    passed = math.isfinite(sup) and drift < 0.01
    return BoundCheckResult("convolution_inequality", sup, (argmax,),
                            len(ratios), passed, drift,
                            details={"ratios": ratios, "a": a, "b": b, "n": n})


# ---------------------------------------------------------------------------
# combinatorial multiindex lemma


def _multiindices_of_total(total, n):
    if n == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _multiindices_of_total(total - head, n - 1):
            yield (head,) + rest


def _interior_sum(alpha_idx, delta):
    """sum over 0 < gamma < alpha of binom(alpha, gamma) |gamma|^(|gamma|-delta)
    |alpha-gamma|^(|alpha-gamma|-delta); exact rationals for integer delta."""
    total = sum(alpha_idx)
    exact = float(delta).is_integer()
    d = int(delta) if exact else float(delta)
    acc = Fraction(0) if exact else 0.0
    ranges = [range(ai + 1) for ai in alpha_idx]
    for gamma in product(*ranges):
        gt = sum(gamma)
        if gt == 0 or gt == total:
            continue
        binom = 1
        for ai, gi in zip(alpha_idx, gamma):
            binom *= math.comb(ai, gi)
        rt = total - gt
        if exact:
            acc += binom * Fraction(gt) ** (gt - d) * Fraction(rt) ** (rt - d)
        else:
            acc += binom * gt ** (gt - d) * rt ** (rt - d)
    return acc


def check_combinatorial_lemma(delta, max_total_degree, n) -> BoundCheckResult:
    """Exact enumeration of the interior binomial sum against |alpha|^(|alpha|-delta).

    For integer delta every term is an exact rational, so the reported
    ratios carry no floating-point error beyond the final conversion.
    """
    if delta <= 0.5:
        raise ValueError(f"delta = {delta} must exceed 1/2")
    if max_total_degree > 30:
        raise ValueError("max_total_degree capped at 30")
    if n not in (1, 2, 3):
        raise ValueError("n must be 1, 2 or 3")
    sup, argmax = -math.inf, None
    count = 0
    per_degree = {}
    exact = float(delta).is_integer()
    for total in range(1, max_total_degree + 1):
        rhs = (Fraction(total) ** (total - int(delta)) if exact
               else total ** (total - delta))
        best_here = 0.0
        for alpha_idx in _multiindices_of_total(total, n):
            s = _interior_sum(alpha_idx, delta)
            ratio = float(s / rhs)
            count += 1
            if ratio > best_here:
                best_here = ratio
            if ratio > sup:
                sup, argmax = ratio, alpha_idx
        per_degree[total] = best_here
    passed = math.isfinite(sup)
    return BoundCheckResult("combinatorial_lemma", sup, (argmax,), count,
                            passed, details={"per_degree": per_degree,
                                             "delta": delta, "n": n})
