"""fnslab: a pseudo-spectral laboratory for the incompressible
Navier-Stokes equation with fractional dissipation (-Laplace)^alpha,
alpha in (1/2, 1).

The package evaluates the fractional heat kernel and its Leray-projected
derivative kernels in physical space, certifies their decay estimates,
computes the time-weighted sup norms and Carleson/Besov norms attached
to the critical well-posedness theory, constructs small-data global
solutions by Picard iteration on the mild formulation, and packages the
whole thing behind a batch CLI (`fns-lab`) that writes CSV tables and
matplotlib figures.
"""

__version__ = "0.1.0"
