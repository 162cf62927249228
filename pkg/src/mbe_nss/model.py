"""Nonlinearity, energy functional, and manufactured problem for the
thin-film growth equation with no slope selection,

    dh/dt = -eta^2 lap^2 h + div( slope_flux(grad h) ),

the L2 gradient flow of

    E(h) = integral( -1/2 log(1 + |grad h|^2) + eta^2/2 |lap h|^2 ).

The logarithmic potential does not pin the slope near a preferred value;
its flux ``-z / (1 + |z|^2)`` is globally smooth with bounded derivatives,
which is what makes explicit extrapolation of the nonlinearity viable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid


def slope_flux(zx, zy):
    """Pointwise flux -z / (1 + |z|^2) of the logarithmic potential.

    Accepts scalars or broadcasting arrays for the two slope components and
    returns the matching pair.  The magnitude of the result never exceeds
    1/2 (the maximum of r / (1 + r^2)), and the map is 1-Lipschitz.
    """
    denom = 1.0 + zx * zx + zy * zy
    return -zx / denom, -zy / denom


def flux_jacobian_form(z, x):
    """Quadratic form x^T J(z) x of the flux Jacobian.

    ``z`` and ``x`` are arrays whose last axis has length 2; broadcasting
    batches are fine.  The Jacobian of the flux at z is

        J(z)_ij = -( delta_ij / (1+|z|^2) - 2 z_i z_j / (1+|z|^2)^2 ),

    whose eigenvalues lie in [-1, 1/8], so the form is at most |x|^2 / 8.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    zx, zy = z[..., 0], z[..., 1]
    xx, xy = x[..., 0], x[..., 1]
    denom = 1.0 + zx * zx + zy * zy
    zdotx = zx * xx + zy * xy
    xsq = xx * xx + xy * xy
    return -(xsq / denom - 2.0 * zdotx * zdotx / denom**2)


def flux_divergence_hat(grid: Grid, px: np.ndarray, py: np.ndarray,
                        dealias: bool = False) -> np.ndarray:
    """Spectral coefficients of div(slope_flux(p)) for a slope field p.

    The flux is evaluated pointwise at the nodes and the divergence is
    taken spectrally, so the result has exactly zero mean.  With
    ``dealias`` the 2/3-rule mask is applied to the result; the default
    keeps all modes (the bounded flux makes aliasing mild).
    """
    gx, gy = slope_flux(px, py)
    out = grid.divergence_hat(gx, gy)
    if dealias:
        out = grid.dealias(out)
    return out


def flux_divergence(grid: Grid, px: np.ndarray, py: np.ndarray,
                    dealias: bool = False) -> np.ndarray:
    """Physical-space div(slope_flux(p)); see :func:`flux_divergence_hat`."""
    return grid.inverse(flux_divergence_hat(grid, px, py, dealias))


@dataclass(frozen=True)
class EnergyParts:
    """Energy functional split into its two quadrature contributions.

    ``total = log_part + biharmonic_part``; the log part is nonpositive
    pointwise and the biharmonic part is nonnegative, so
    ``total <= biharmonic_part`` always.
    """

    total: float
    log_part: float
    biharmonic_part: float


def energy(grid: Grid, h: np.ndarray, eta: float) -> EnergyParts:
    """Rectangle-rule energy of a height field.

    Both derivatives are spectral; the same operators drive the solver, so
    discrete energy identities hold to rounding.
    """
    coeffs = grid.forward(h, "height")
    gx = grid.inverse(1j * grid.kx * coeffs)
    gy = grid.inverse(1j * grid.ky * coeffs)
    lap = grid.inverse(-grid.k_sq * coeffs)
    log_part = grid.integrate(-0.5 * np.log1p(gx * gx + gy * gy))
    biharmonic_part = 0.5 * eta * eta * grid.integrate(lap * lap)
    return EnergyParts(log_part + biharmonic_part, log_part, biharmonic_part)


# -- manufactured problem ---------------------------------------------------
#
# Known solution cos(t) sin(x) sin(y), enforced through an added source so
# temporal discretization error can be measured directly.


def manufactured_solution(grid: Grid, t: float) -> np.ndarray:
    """The separable reference solution cos(t) sin(x) sin(y) at time t."""
    return np.cos(t) * np.sin(grid.x) * np.sin(grid.y)


def manufactured_forcing(grid: Grid, t: float, eta: float) -> np.ndarray:
    """Source f making the reference solution solve the forced equation.

    With h* = cos(t) sin(x) sin(y),

        f = dh*/dt + eta^2 lap^2 h* - div( slope_flux(grad h*) ).

    The time derivative and biharmonic terms are analytic (lap^2 h* =
    4 h*); the flux divergence is evaluated pseudo-spectrally on this
    grid, so inserting h* into the forced residual on the same grid is
    exact to rounding.
    """
    sxsy = np.sin(grid.x) * np.sin(grid.y)
    ct = np.cos(t)
    linear = (-np.sin(t) + 4.0 * eta * eta * ct) * sxsy
    px = ct * np.cos(grid.x) * np.sin(grid.y)
    py = ct * np.sin(grid.x) * np.cos(grid.y)
    return linear - flux_divergence(grid, px, py)
