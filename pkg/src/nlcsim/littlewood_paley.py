"""Dyadic frequency decomposition and homogeneous Besov / Sobolev norms.

The decomposition acts as a bank of Fourier multipliers ``phi(2^-j |k|)``
supported on dyadic annuli, together with the cumulative low-pass
multipliers ``chi``.  On the torus the zero mode is excluded everywhere
(the homogeneous convention) and the dyadic index is truncated to the
shells the lattice can host; norms of content at unresolvable scales are
therefore under-reported, which is acceptable for monitoring because the
same truncation applies at every time sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Grid, GridError, SpectralField, lp_norm

# Radial bump profile: smooth rise on [3/4, 7/8], plateau, smooth fall on
# [3/2, 7/4].  Support sits inside the annulus {3/4 <= |xi| <= 8/3}, and the
# rise/fall widths are dyadic complements, so neighbouring shells sum to one
# even before renormalization and every dyadic magnitude |k| = 2^j is owned
# by shell j alone with multiplier exactly one.
RISE_LO = 0.75
RISE_HI = 0.875
FALL_LO = 1.5
FALL_HI = 1.75


def smooth_step(x: np.ndarray | float) -> np.ndarray:
    """C-infinity step built from exp(-1/x): 0 for x<=0, 1 for x>=1."""
    x = np.asarray(x, dtype=np.float64)
    up = np.zeros_like(x)
    down = np.zeros_like(x)
    pos = x > 0.0
    neg = (1.0 - x) > 0.0
    with np.errstate(divide="ignore", over="ignore"):
        up[pos] = np.exp(-1.0 / x[pos])
        down[neg] = np.exp(-1.0 / (1.0 - x)[neg])
    return up / (up + down)


def bump_profile(r: np.ndarray | float) -> np.ndarray:
    """Raw radial profile of one dyadic shell, evaluated at |xi| (scaled)."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    rise = (r > RISE_LO) & (r < RISE_HI)
    plateau = (r >= RISE_HI) & (r <= FALL_LO)
    fall = (r > FALL_LO) & (r < FALL_HI)
    out[rise] = smooth_step((r[rise] - RISE_LO) / (RISE_HI - RISE_LO))
    out[plateau] = 1.0
    out[fall] = smooth_step((FALL_HI - r[fall]) / (FALL_HI - FALL_LO))
    return out


@dataclass(frozen=True)
class BesovIndex:
    """Regularity / integrability / summation indices (s, p, q)."""

    s: float
    p: float
    q: float

    def __post_init__(self):
        for name, val in (("p", self.p), ("q", self.q)):
            if val != np.inf and val < 1:
                raise ValueError(f"{name} must be >= 1 or inf, got {val}")


class DyadicCutoffBank:
    """Precomputed shell multipliers phi(2^-j k) and low-pass sums chi.

    ``phi[j]`` for j in [j_min, j_max] are pointwise-normalized so that
    their sum is exactly one on every nonzero lattice wavenumber the bank
    covers (all magnitudes up to sqrt(dim) * N/3, the dealiased corner).
    ``chi[j] = sum_{l < j} phi[l]`` for j in [j_min, j_max + 1], so the
    telescoping identity chi[j+1] = chi[j] + phi[j] holds exactly.
    """

    def __init__(self, grid: Grid, j_min: int, j_max: int,
                 phi_profiles: dict[int, np.ndarray], chi_profiles: dict[int, np.ndarray]):
        self.grid = grid
        self.j_min = j_min
        self.j_max = j_max
        self.phi_profiles = phi_profiles
        self.chi_profiles = chi_profiles

    @property
    def shells(self) -> range:
        return range(self.j_min, self.j_max + 1)


def build_cutoff_bank(grid: Grid) -> DyadicCutoffBank:
    """Construct the dyadic multiplier bank for a grid.

    Shells run from j_min = 0 (the lowest annulus holding a lattice point)
    up to the first j whose annulus reaches past the largest wavenumber a
    dealiased field can carry.  Rejected for N < 16, which cannot host two
    shells.
    """
    if grid.n < 16:
        raise GridError(f"grid too small for a dyadic bank: need N >= 16, got N={grid.n}")
    cover = math.sqrt(grid.dim) * (grid.n / 3.0)
    j_min = 0
    j_max = j_min
    while FALL_HI * 2.0**j_max < cover:
        j_max += 1

    raw = {j: bump_profile(grid.k_mag / 2.0**j) for j in range(j_min, j_max + 1)}
    total = sum(raw.values())
    covered = total > 0.0
    inv_total = np.where(covered, total, 1.0)
    phi = {j: np.where(covered, raw[j] / inv_total, 0.0) for j in raw}

    chi: dict[int, np.ndarray] = {j_min: np.zeros(grid.shape)}
    for j in range(j_min, j_max + 1):
        chi[j + 1] = chi[j] + phi[j]
    return DyadicCutoffBank(grid, j_min, j_max, phi, chi)


def lp_block(bank: DyadicCutoffBank, f: SpectralField, j: int) -> SpectralField:
    """Frequency projection to the annulus |k| ~ 2^j (zero mode excluded)."""
    if not bank.j_min <= j <= bank.j_max:
        raise ValueError(f"shell index {j} outside [{bank.j_min}, {bank.j_max}]")
    return SpectralField(f.grid, f.coeffs * bank.phi_profiles[j])


def low_freq_block(bank: DyadicCutoffBank, f: SpectralField, j: int) -> SpectralField:
    """Frequency projection to the ball |k| < ~2^j (zero mode excluded)."""
    if not bank.j_min <= j <= bank.j_max + 1:
        raise ValueError(f"low-pass index {j} outside [{bank.j_min}, {bank.j_max + 1}]")
    return SpectralField(f.grid, f.coeffs * bank.chi_profiles[j])


def besov_norm(bank: DyadicCutoffBank, f: SpectralField, idx: BesovIndex | tuple) -> float:
    """Homogeneous Besov norm over the resolvable shells.

    l^q aggregation over j of 2^(j*s) * ||block_j f||_Lp; sup for q = inf.
    """
    if not isinstance(idx, BesovIndex):
        idx = BesovIndex(*idx)
    terms = []
    for j in bank.shells:
        blk = lp_block(bank, f, j)
        if not np.any(blk.coeffs):
            continue
        terms.append(2.0 ** (j * idx.s) * lp_norm(blk, idx.p))
    if not terms:
        return 0.0
    if idx.q == np.inf:
        return max(terms)
    return float(np.sum(np.asarray(terms) ** idx.q) ** (1.0 / idx.q))


def sobolev_norm(f: SpectralField, s: float) -> float:
    """Homogeneous Sobolev norm: the exact |k|^s multiplier on L^2."""
    g = f.grid
    nz = g.k_sq > 0
    weights = g.k_sq[nz] ** s
    return float(np.sqrt(g.volume * np.sum(weights * np.abs(f.coeffs[nz]) ** 2)))


def fractional_laplacian(f: SpectralField, alpha: float) -> SpectralField:
    """Multiplier |k|^alpha; the zero mode is dropped for every alpha."""
    g = f.grid
    nz = g.k_sq > 0
    mult = np.zeros(g.shape)
    mult[nz] = g.k_mag[nz] ** alpha
    return SpectralField(g, f.coeffs * mult)


@dataclass(frozen=True)
class InterpolationSample:
    """One evaluation of the low-frequency/smoothness interpolation bound."""

    lhs: float
    factor_low: float
    factor_smooth: float
    theta: float
    beta: float
    ratio: float


def audit_interpolation(bank: DyadicCutoffBank, f: SpectralField,
                        alpha: float, p: float, q: float) -> InterpolationSample:
    """Measure ||f||_Lp against ||f||_{B^-alpha_inf,inf}^(1-theta) ||f||_{B^beta_q,q}^theta.

    beta = alpha (p/q - 1) and theta = q/p.  The ratio of the two sides is
    the empirical constant for this sample; a zero field reports ratio 0.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not 1 <= q < p < np.inf:
        raise ValueError(f"need 1 <= q < p < inf, got p={p}, q={q}")
    theta = q / p
    beta = alpha * (p / q - 1.0)
    lhs = lp_norm(f, p)
    factor_low = besov_norm(bank, f, BesovIndex(-alpha, np.inf, np.inf))
    factor_smooth = besov_norm(bank, f, BesovIndex(beta, q, q))
    denom = factor_low ** (1.0 - theta) * factor_smooth**theta
    ratio = lhs / denom if denom > 0 else 0.0
    return InterpolationSample(lhs, factor_low, factor_smooth, theta, beta, ratio)
