"""Spectral fields and calculus on the 2*pi-periodic torus.

Scalar fields are stored as full-complex Fourier coefficients on an N^dim
lattice of integer wavenumbers (numpy FFT layout).  The coefficient
normalization is such that a field with coefficients ``c`` equals
``sum_k c[k] exp(i k.x)``, so ``from_spectral(to_spectral(s)) == s`` and
Parseval reads ``||f||_L2^2 = (2*pi)^dim * sum |c|^2``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as _fft


class GridError(ValueError):
    """Invalid grid parameters."""


class CorruptFieldError(ValueError):
    """Coefficients of a nominally real field violate Hermitian symmetry."""


def fft_workers() -> int | None:
    """Worker count for FFT calls, from NLCSIM_THREADS when set."""
    raw = os.environ.get("NLCSIM_THREADS")
    if raw is None:
        return None
    workers = int(raw)
    if workers < 1:
        raise ValueError("NLCSIM_THREADS must be a positive integer")
    return workers


class Grid:
    """Uniform N^dim sample lattice on [0, 2*pi)^dim with integer wavenumbers.

    N must be a power of two, N >= 8, and dim must be 2 or 3.  Wavenumber
    components run over {-N/2+1, ..., N/2} (the balanced set; the unbalanced
    Nyquist component N/2 is represented once and zeroed by differentiation).
    """

    def __init__(self, dim: int, n: int):
        if dim not in (2, 3):
            raise GridError(f"dim must be 2 or 3, got {dim}")
        if n < 8 or n & (n - 1) != 0:
            raise GridError(f"points_per_axis must be a power of two >= 8, got {n}")
        self.dim = dim
        self.n = n
        self.box_length = 2.0 * np.pi
        self.shape = (n,) * dim
        self.cell_volume = (self.box_length / n) ** dim
        self.volume = self.box_length ** dim

        k1 = np.fft.fftfreq(n, d=1.0 / n).astype(np.float64)  # 0..n/2-1, -n/2..-1
        self.k_axis = k1
        # open-grid wavenumber arrays, broadcastable against self.shape
        self.k = []
        for ax in range(dim):
            shape = [1] * dim
            shape[ax] = n
            self.k.append(k1.reshape(shape))
        self.k_sq = sum(ki**2 for ki in self.k) + np.zeros(self.shape)
        self.k_mag = np.sqrt(self.k_sq)
        with np.errstate(divide="ignore"):
            inv = 1.0 / self.k_sq
        inv[(0,) * dim] = 0.0
        self.inv_k_sq = inv

        self.dealias_limit = n // 3
        keep = np.ones(self.shape, dtype=bool)
        for ki in self.k:
            keep &= np.abs(ki) <= n / 3.0
        self.dealias_keep = keep
        # unbalanced mode masks, one per axis (True where the mode survives)
        self.not_nyquist = [np.abs(ki) != n / 2.0 for ki in self.k]
        # wavenumbers and |grad|^2 multiplier consistent with the
        # Nyquist-zeroing derivative
        self.k_masked = [ki * mask for ki, mask in zip(self.k, self.not_nyquist)]
        self.grad_sq_weight = sum(km**2 for km in self.k_masked) + np.zeros(self.shape)
        with np.errstate(divide="ignore"):
            inv_g = 1.0 / self.grad_sq_weight
        inv_g[self.grad_sq_weight == 0.0] = 0.0
        self.inv_grad_sq_weight = inv_g

    def coords(self, axis: int) -> np.ndarray:
        """Physical coordinate along one axis, broadcastable to grid shape."""
        x = self.box_length * np.arange(self.n) / self.n
        shape = [1] * self.dim
        shape[axis] = self.n
        return x.reshape(shape)

    def __eq__(self, other):
        return isinstance(other, Grid) and (self.dim, self.n) == (other.dim, other.n)

    def __hash__(self):
        return hash((Grid, self.dim, self.n))

    def __repr__(self):
        return f"Grid(dim={self.dim}, n={self.n})"


@dataclass(frozen=True)
class SpectralField:
    """One scalar field as complex Fourier coefficients on a grid."""

    grid: Grid
    coeffs: np.ndarray

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())


@dataclass(frozen=True)
class VectorField:
    """A tuple of scalar spectral fields sharing one grid."""

    components: tuple[SpectralField, ...]

    def __post_init__(self):
        grids = {f.grid for f in self.components}
        if len(grids) != 1:
            raise GridError("all components must share one grid")

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    @property
    def ncomp(self) -> int:
        return len(self.components)

    def copy(self) -> "VectorField":
        return VectorField(tuple(f.copy() for f in self.components))


def vector_field(grid: Grid, coeff_arrays) -> VectorField:
    return VectorField(tuple(SpectralField(grid, np.asarray(c)) for c in coeff_arrays))


def zero_field(grid: Grid) -> SpectralField:
    return SpectralField(grid, np.zeros(grid.shape, dtype=np.complex128))


def zero_vector(grid: Grid, ncomp: int) -> VectorField:
    return vector_field(grid, [np.zeros(grid.shape, dtype=np.complex128) for _ in range(ncomp)])


def to_spectral(grid: Grid, samples: np.ndarray) -> SpectralField:
    """Forward transform of real samples on the grid."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape != grid.shape:
        raise GridError(f"sample shape {samples.shape} does not match grid {grid.shape}")
    coeffs = _fft.fftn(samples, norm="forward", workers=fft_workers())
    return SpectralField(grid, coeffs)


def from_spectral(f: SpectralField, symmetry_tol: float = 1e-10) -> np.ndarray:
    """Inverse transform to real samples.

    The imaginary residue of the inverse transform is checked against
    ``symmetry_tol`` (scaled by the field magnitude) and then discarded;
    a larger residue means the coefficients do not describe real data.
    """
    z = _fft.ifftn(f.coeffs, norm="forward", workers=fft_workers())
    scale = max(1.0, float(np.max(np.abs(z))) if z.size else 1.0)
    defect = float(np.max(np.abs(z.imag))) if z.size else 0.0
    if defect > symmetry_tol * scale:
        raise CorruptFieldError(
            f"Hermitian symmetry violated: imaginary residue {defect:.3e} "
            f"(tolerance {symmetry_tol * scale:.3e})"
        )
    return np.ascontiguousarray(z.real)


def physical(f: SpectralField) -> np.ndarray:
    """Alias of :func:`from_spectral` for call sites that read better with it."""
    return from_spectral(f)


def derivative(f: SpectralField, axis: int, order: int = 1) -> SpectralField:
    """Spectral derivative (i*k_axis)^order; the unbalanced mode is zeroed."""
    g = f.grid
    if not 0 <= axis < g.dim:
        raise GridError(f"axis {axis} out of range for dim {g.dim}")
    if order < 1:
        raise ValueError("order must be >= 1")
    mult = (1j * g.k[axis]) ** order
    out = f.coeffs * mult
    out *= g.not_nyquist[axis]
    return SpectralField(g, out)


def gradient(f: SpectralField) -> VectorField:
    return VectorField(tuple(derivative(f, ax) for ax in range(f.grid.dim)))


def divergence(v: VectorField) -> SpectralField:
    g = v.grid
    if v.ncomp != g.dim:
        raise GridError(f"divergence expects {g.dim} components, got {v.ncomp}")
    out = np.zeros(g.shape, dtype=np.complex128)
    for ax, comp in enumerate(v.components):
        out += derivative(comp, ax).coeffs
    return SpectralField(g, out)


def laplacian(f: SpectralField) -> SpectralField:
    """Laplacian as the sum of second derivatives (exactly div(grad(f)))."""
    g = f.grid
    out = np.zeros(g.shape, dtype=np.complex128)
    for ax in range(g.dim):
        out += derivative(f, ax, order=2).coeffs
    return SpectralField(g, out)


def curl(v: VectorField):
    """Curl: scalar d1(u2) - d2(u1) in 2D, the usual vector in 3D."""
    g = v.grid
    if v.ncomp != g.dim:
        raise GridError(f"curl expects {g.dim} components, got {v.ncomp}")
    c = v.components
    if g.dim == 2:
        out = derivative(c[1], 0).coeffs - derivative(c[0], 1).coeffs
        return SpectralField(g, out)
    return VectorField(
        (
            SpectralField(g, derivative(c[2], 1).coeffs - derivative(c[1], 2).coeffs),
            SpectralField(g, derivative(c[0], 2).coeffs - derivative(c[2], 0).coeffs),
            SpectralField(g, derivative(c[1], 0).coeffs - derivative(c[0], 1).coeffs),
        )
    )


def leray_project(v: VectorField) -> VectorField:
    """Remove the gradient part: v - k (k.v)/|k|^2 per mode, mean passed through.

    Uses the same Nyquist-zeroed wavenumbers as ``derivative``, so the
    divergence of the output vanishes identically under that convention.
    """
    g = v.grid
    if v.ncomp != g.dim:
        raise GridError(f"projection expects {g.dim} components, got {v.ncomp}")
    kv = np.zeros(g.shape, dtype=np.complex128)
    for ax, comp in enumerate(v.components):
        kv += g.k_masked[ax] * comp.coeffs
    kv *= g.inv_grad_sq_weight
    return vector_field(
        g, [comp.coeffs - g.k_masked[ax] * kv for ax, comp in enumerate(v.components)]
    )


def dealias(f: SpectralField) -> SpectralField:
    """Two-thirds rule: zero every mode with any |k_i| > N/3."""
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_keep)


def dealias_vector(v: VectorField) -> VectorField:
    return VectorField(tuple(dealias(c) for c in v.components))


def quad_lp(samples: np.ndarray, p: float, cell_volume: float) -> float:
    """Equal-weight quadrature L^p norm of pointwise values."""
    if p == np.inf:
        return float(np.max(np.abs(samples))) if samples.size else 0.0
    if p < 1:
        raise ValueError("p must be >= 1 or inf")
    return float((np.sum(np.abs(samples) ** p) * cell_volume) ** (1.0 / p))


def lp_norm(f: SpectralField, p: float) -> float:
    """L^p norm over the torus (quadrature for p < inf, max modulus for p = inf)."""
    return quad_lp(from_spectral(f), p, f.grid.cell_volume)


def lp_norm_vector(v: VectorField, p: float) -> float:
    """L^p norm of the pointwise Euclidean magnitude of a vector field."""
    mag_sq = sum(from_spectral(c) ** 2 for c in v.components)
    if p == np.inf:
        return float(np.sqrt(np.max(mag_sq)))
    return quad_lp(np.sqrt(mag_sq), p, v.grid.cell_volume)


def l2_norm_spectral(f: SpectralField) -> float:
    """L^2 norm evaluated by Parseval on the coefficients."""
    return float(np.sqrt(f.grid.volume * np.sum(np.abs(f.coeffs) ** 2)))


def mean_value(f: SpectralField) -> float:
    return float(f.coeffs[(0,) * f.grid.dim].real)


@lru_cache(maxsize=16)
def heat_propagator(grid: Grid, rate_dt: float) -> np.ndarray:
    """exp(-|k|^2 * rate_dt), the exact diffusion step multiplier."""
    return np.exp(-grid.k_sq * rate_dt)
