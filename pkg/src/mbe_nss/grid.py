"""Uniform periodic grid on [-pi, pi]^2 and FFT-based spectral operators.

Conventions used throughout the package:

* A scalar field is a real ``(nx, ny)`` float64 array of node values, with
  the x index varying along axis 0.  Nodes sit at ``x_i = -pi + 2*pi*i/nx``
  (and likewise in y), so the domain is the standard periodic torus.
* A spectral field is a complex ``(nx, ny)`` array of Fourier-series
  coefficients in FFT layout: entry ``[k1, k2]`` (Python's negative indexing
  included) is the coefficient of ``exp(i*(k1*x + k2*y))``.  The forward
  transform is normalized by ``1/(nx*ny)`` so a constant field c has
  coefficient c at k = 0, and a phase correction accounts for the grid
  origin at -pi.
* Integrals are rectangle-rule sums scaled by the cell area
  ``(2*pi/nx)*(2*pi/ny)``, which is spectrally accurate for smooth periodic
  integrands.

The first-derivative symbol ``i*k`` is set to zero on the Nyquist column
and row (k = -n/2).  The squared symbols ``|k|^2`` and ``|k|^4`` are built
from the same zeroed wavenumber arrays, so the discrete identities
``div(grad(f)) == laplacian(f)`` and ``laplacian(laplacian(f)) ==
biharmonic(f)`` hold to rounding for arbitrary fields, Nyquist content
included.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class NonFiniteFieldError(ValueError):
    """A field contains NaN or infinity.

    Carries the flat index and value of the first offending entry so a
    failing solver step can be located precisely.
    """

    def __init__(self, name: str, index: tuple[int, ...], value: float):
        self.name = name
        self.index = index
        self.value = value
        super().__init__(f"non-finite value {value!r} in {name!r} at index {index}")


def ensure_finite(values: np.ndarray, name: str = "field") -> np.ndarray:
    """Return ``values`` unchanged, raising :class:`NonFiniteFieldError` otherwise."""
    values = np.asarray(values)
    finite = np.isfinite(values)
    if not finite.all():
        flat = int(np.argmin(finite.ravel()))
        index = np.unravel_index(flat, values.shape)
        raise NonFiniteFieldError(name, tuple(int(i) for i in index), values[index])
    return values


@dataclass(frozen=True)
class Grid:
    """Periodic nx-by-ny grid on [-pi, pi]^2 with precomputed spectral data.

    Parameters
    ----------
    nx, ny : int
        Number of modes (and nodes) per axis.  Both must be even and >= 4.
    """

    nx: int
    ny: int

    def __post_init__(self) -> None:
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if n < 4 or n % 2 != 0:
                raise ValueError(f"{name} must be an even integer >= 4, got {n}")

    # -- geometry ---------------------------------------------------------

    @cached_property
    def x(self) -> np.ndarray:
        """Node x coordinates, shape (nx, ny)."""
        x1 = -np.pi + 2.0 * np.pi * np.arange(self.nx) / self.nx
        return np.broadcast_to(x1[:, None], (self.nx, self.ny)).copy()

    @cached_property
    def y(self) -> np.ndarray:
        """Node y coordinates, shape (nx, ny)."""
        y1 = -np.pi + 2.0 * np.pi * np.arange(self.ny) / self.ny
        return np.broadcast_to(y1[None, :], (self.nx, self.ny)).copy()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def cell_area(self) -> float:
        """Quadrature weight of one node, (2*pi/nx)*(2*pi/ny)."""
        return (2.0 * np.pi / self.nx) * (2.0 * np.pi / self.ny)

    @property
    def area(self) -> float:
        """Measure of the domain, (2*pi)^2."""
        return 4.0 * np.pi**2

    # -- wavenumbers ------------------------------------------------------

    @cached_property
    def wavenumbers_x(self) -> np.ndarray:
        """Raw integer wavenumbers along x in FFT order, shape (nx, ny)."""
        k1 = np.fft.fftfreq(self.nx, 1.0 / self.nx)
        return np.broadcast_to(k1[:, None], (self.nx, self.ny)).copy()

    @cached_property
    def wavenumbers_y(self) -> np.ndarray:
        """Raw integer wavenumbers along y in FFT order, shape (nx, ny)."""
        k2 = np.fft.fftfreq(self.ny, 1.0 / self.ny)
        return np.broadcast_to(k2[None, :], (self.nx, self.ny)).copy()

    @cached_property
    def kx(self) -> np.ndarray:
        """Derivative wavenumbers along x; the Nyquist row is zeroed."""
        k = self.wavenumbers_x.copy()
        k[self.nx // 2, :] = 0.0
        return k

    @cached_property
    def ky(self) -> np.ndarray:
        """Derivative wavenumbers along y; the Nyquist column is zeroed."""
        k = self.wavenumbers_y.copy()
        k[:, self.ny // 2] = 0.0
        return k

    @cached_property
    def k_sq(self) -> np.ndarray:
        """|k|^2 built from the derivative wavenumbers."""
        return self.kx**2 + self.ky**2

    @cached_property
    def k_quad(self) -> np.ndarray:
        """|k|^4 built from the derivative wavenumbers."""
        return self.k_sq**2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean 2/3-rule mask keeping |k1| < nx/3 and |k2| < ny/3."""
        keep_x = np.abs(self.wavenumbers_x) < self.nx / 3.0
        keep_y = np.abs(self.wavenumbers_y) < self.ny / 3.0
        return keep_x & keep_y

    @cached_property
    def _phase(self) -> np.ndarray:
        # (-1)^(k1+k2): converts FFT output for samples starting at -pi into
        # Fourier-series coefficients on [-pi, pi)^2, and back.
        ksum = self.wavenumbers_x + self.wavenumbers_y
        return np.where(ksum.astype(np.int64) % 2 == 0, 1.0, -1.0)

    # -- transforms -------------------------------------------------------

    def forward(self, values: np.ndarray, name: str = "field") -> np.ndarray:
        """Scalar field -> Fourier-series coefficients.

        Raises :class:`NonFiniteFieldError` (naming the first bad index) if
        the input contains NaN or infinity.
        """
        values = ensure_finite(values, name)
        if values.shape != self.shape:
            raise ValueError(f"expected shape {self.shape}, got {values.shape}")
        return np.fft.fft2(values) * (self._phase / (self.nx * self.ny))

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        """Fourier-series coefficients -> scalar field (real part)."""
        if coeffs.shape != self.shape:
            raise ValueError(f"expected shape {self.shape}, got {coeffs.shape}")
        return np.fft.ifft2(coeffs * (self._phase * (self.nx * self.ny))).real

    def apply_symbol(self, coeffs: np.ndarray, symbol) -> np.ndarray:
        """Multiply coefficients by a Fourier symbol.

        ``symbol`` is either an array shaped like the grid or a callable
        ``symbol(k1, k2)`` evaluated on the raw integer wavenumber arrays.
        All symbol values must be finite.
        """
        if callable(symbol):
            symbol = symbol(self.wavenumbers_x, self.wavenumbers_y)
        symbol = np.asarray(symbol)
        if not np.isfinite(symbol).all():
            raise ValueError("symbol has non-finite values on the grid")
        return coeffs * symbol

    # -- differential operators -------------------------------------------

    def gradient(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Spectral gradient of a scalar field; returns (d/dx, d/dy)."""
        coeffs = self.forward(values)
        return (
            self.inverse(1j * self.kx * coeffs),
            self.inverse(1j * self.ky * coeffs),
        )

    def divergence(self, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
        """Spectral divergence of a vector field with components (vx, vy)."""
        return self.inverse(self.divergence_hat(vx, vy))

    def divergence_hat(self, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
        """Divergence, but returned as spectral coefficients."""
        return 1j * self.kx * self.forward(vx, "vx") + 1j * self.ky * self.forward(vy, "vy")

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        return self.inverse(-self.k_sq * self.forward(values))

    def biharmonic(self, values: np.ndarray) -> np.ndarray:
        return self.inverse(self.k_quad * self.forward(values))

    def dealias(self, coeffs: np.ndarray) -> np.ndarray:
        """Zero all coefficients outside the 2/3-rule ball."""
        return np.where(self.dealias_mask, coeffs, 0.0)

    # -- quadrature -------------------------------------------------------

    def integrate(self, values: np.ndarray) -> float:
        """Rectangle-rule integral over the domain."""
        return float(np.sum(values) * self.cell_area)

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Quadrature L2 inner product."""
        return float(np.sum(f * g) * self.cell_area)

    def norm_l2(self, values: np.ndarray) -> float:
        """Quadrature L2 norm."""
        return float(np.sqrt(np.sum(values * values) * self.cell_area))
