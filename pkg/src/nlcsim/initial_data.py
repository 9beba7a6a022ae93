"""Constructors for initial velocity and director fields."""

from __future__ import annotations

import numpy as np

from .littlewood_paley import smooth_step
from .spectral import (
    Grid,
    GridError,
    SpectralField,
    VectorField,
    dealias,
    dealias_vector,
    from_spectral,
    leray_project,
    to_spectral,
    vector_field,
)


def taylor_green(grid: Grid, amplitude: float = 1.0) -> VectorField:
    """Classical Taylor-Green velocity, divergence-free by construction."""
    x, y = grid.coords(0), grid.coords(1)
    if grid.dim == 2:
        u = amplitude * np.sin(x) * np.cos(y) + np.zeros(grid.shape)
        v = -amplitude * np.cos(x) * np.sin(y) + np.zeros(grid.shape)
        comps = [u, v]
    else:
        z = grid.coords(2)
        u = amplitude * np.sin(x) * np.cos(y) * np.cos(z) + np.zeros(grid.shape)
        v = -amplitude * np.cos(x) * np.sin(y) * np.cos(z) + np.zeros(grid.shape)
        comps = [u, v, np.zeros(grid.shape)]
    return vector_field(grid, [to_spectral(grid, c).coeffs for c in comps])


def random_divfree(grid: Grid, slope: float, seed: int, amplitude: float,
                   band: int | None = None) -> VectorField:
    """Random divergence-free velocity with a |k|^slope shaped spectrum.

    Gaussian white noise per component, shaped in frequency, dealiased,
    projected, then rescaled so the L2 norm equals ``amplitude``.  ``band``
    optionally truncates harder than the dealias rule (useful when the
    strict state invariants must survive long runs on coarse grids).
    """
    rng = np.random.default_rng(seed)
    nz = grid.k_sq > 0
    shaping = np.zeros(grid.shape)
    shaping[nz] = grid.k_mag[nz] ** slope
    if band is not None:
        for ki in grid.k:
            shaping = shaping * (np.abs(ki) <= band)
    comps = []
    for _ in range(grid.dim):
        white = to_spectral(grid, rng.standard_normal(grid.shape))
        comps.append(dealias(SpectralField(grid, white.coeffs * shaping)).coeffs)
    v = leray_project(vector_field(grid, comps))
    norm = np.sqrt(grid.volume * sum(np.sum(np.abs(c.coeffs) ** 2) for c in v.components))
    if norm == 0.0 or amplitude == 0.0:
        return vector_field(grid, [np.zeros_like(c.coeffs) for c in v.components])
    scale = amplitude / norm
    return vector_field(grid, [c.coeffs * scale for c in v.components])


def random_scalar(grid: Grid, kmax: int, slope: float, seed: int,
                  amplitude: float = 1.0) -> SpectralField:
    """Random band-limited mean-zero scalar, identical across grid sizes.

    Coefficients are drawn per integer wavenumber in a canonical order over
    the cube |k_i| <= kmax, so two grids that both resolve the band carry
    the same continuum function.  Used by the inequality-audit corpora.
    """
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    if kmax > grid.n // 3:
        raise GridError(f"band kmax={kmax} exceeds the dealiased range of N={grid.n}")
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    ranges = [range(-kmax, kmax + 1)] * grid.dim
    for k in np.ndindex(*[2 * kmax + 1] * grid.dim):
        kvec = tuple(ranges[ax][i] for ax, i in enumerate(k))
        # draw once per conjugate pair: keep the lexicographically positive half
        if kvec <= tuple([0] * grid.dim):
            continue
        re, im = rng.standard_normal(2)
        mag = np.sqrt(sum(c * c for c in kvec))
        val = (re + 1j * im) * mag**slope
        idx = tuple(c % grid.n for c in kvec)
        cidx = tuple(-c % grid.n for c in kvec)
        coeffs[idx] = val
        coeffs[cidx] = np.conj(val)
    f = SpectralField(grid, coeffs)
    norm = np.sqrt(grid.volume * np.sum(np.abs(coeffs) ** 2))
    if norm == 0.0 or amplitude == 0.0:
        return SpectralField(grid, np.zeros_like(coeffs))
    return SpectralField(grid, coeffs * (amplitude / norm))


def sinusoidal_profile(grid: Grid, amplitude: float, mode: int = 1) -> SpectralField:
    """theta = amplitude * sin(mode * x1), the workhorse director angle."""
    theta = amplitude * np.sin(mode * grid.coords(0)) + np.zeros(grid.shape)
    return to_spectral(grid, theta)


def equatorial_director(grid: Grid, theta_profile: SpectralField | np.ndarray) -> VectorField:
    """Director confined to the equator: d = (cos theta, sin theta, 0).

    Unit length holds to transform round-off because the components are
    built pointwise and not truncated.
    """
    if isinstance(theta_profile, SpectralField):
        theta = from_spectral(theta_profile)
    else:
        theta = np.asarray(theta_profile, dtype=np.float64)
        if theta.shape != grid.shape:
            raise GridError("theta profile shape does not match grid")
    comps = [np.cos(theta), np.sin(theta), np.zeros(grid.shape)]
    return vector_field(grid, [to_spectral(grid, c).coeffs for c in comps])


def constant_director(grid: Grid, direction=(1.0, 0.0, 0.0)) -> VectorField:
    d = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise ValueError("constant director must be nonzero")
    d = d / norm
    return vector_field(
        grid, [to_spectral(grid, np.full(grid.shape, c)).coeffs for c in d]
    )


# window radii for the concentrated director: pure profile inside WRAP_LO,
# smoothly unwound to the north pole by WRAP_HI (corners sit at pi*sqrt(2))
WRAP_LO = 1.2
WRAP_HI = 2.9


def near_harmonic(grid: Grid, concentration_scale: float) -> VectorField:
    """Concentrating 2D director built from a stereographic-type angle profile.

    The polar angle follows 2*atan(r/scale) near the centre of the box and
    is smoothly unwound back to zero across a fixed annulus, so the field
    is exactly unit length, periodic, and sits at the north pole away from
    the centre.  Gradient intensity concentrates at ``concentration_scale``
    and total gradient energy grows as the scale shrinks.
    """
    if grid.dim != 2:
        raise GridError("the concentrated director family is two-dimensional")
    if not 0.0 < concentration_scale <= 1.0:
        raise ValueError("concentration_scale must lie in (0, 1]")
    if concentration_scale * grid.n < 8:
        raise GridError(
            f"scale {concentration_scale} unresolvable on N={grid.n} "
            "(need scale * N >= 8)"
        )
    x = grid.coords(0) - np.pi
    y = grid.coords(1) - np.pi
    r = np.sqrt(x**2 + y**2) + np.zeros(grid.shape)
    azimuth = np.arctan2(y, x) + np.zeros(grid.shape)
    # base radius 2*scale: at scale 1 the bubble is window-truncated before
    # it develops, so shrinking the scale deepens the profile as well as
    # concentrating it
    polar = 2.0 * np.arctan2(r, 2.0 * concentration_scale)
    polar *= 1.0 - smooth_step((r - WRAP_LO) / (WRAP_HI - WRAP_LO))
    comps = [
        np.sin(polar) * np.cos(azimuth),
        np.sin(polar) * np.sin(azimuth),
        np.cos(polar),
    ]
    return vector_field(grid, [to_spectral(grid, c).coeffs for c in comps])
