"""Fluid parameters, pressure-law coefficients and solution states.

The reference density is 1, the pressure law is the gamma-law
P(rho) = (p / gamma) rho^gamma (so P'(1) = p), and the elliptic coupling
length is normalised to 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BandOutOfRange, DomainError, ParameterOutOfRange, SizeMismatch, VacuumError
from .spectral import GridSpec, SpectralField, dft_forward


@dataclass(frozen=True)
class FluidParams:
    mu: float
    lam: float
    kappa: float
    p: float
    gamma: float = 1.4

    def __post_init__(self):
        checks = [
            (self.mu > 0, f"mu > 0 violated (mu={self.mu})"),
            (2 * self.mu + self.lam > 0, f"nu = lambda + 2 mu > 0 violated (nu={self.lam + 2 * self.mu})"),
            (self.kappa > 0, f"kappa > 0 violated (kappa={self.kappa})"),
            (self.p > 0, f"p > 0 violated (p={self.p})"),
            (self.gamma > 1, f"gamma > 1 violated (gamma={self.gamma})"),
        ]
        for ok, message in checks:
            if not ok:
                raise ParameterOutOfRange(message)

    @property
    def nu(self):
        return self.lam + 2.0 * self.mu

    @property
    def nu0(self):
        return min(self.mu, self.nu)

    @property
    def M(self):
        return self.nu**2 / (4.0 * self.kappa)


DEFAULT_PARAMS = FluidParams(mu=1.0, lam=1.0, kappa=1.0, p=1.0, gamma=1.4)


def make_params(mu, lam, kappa, p, gamma=1.4):
    return FluidParams(float(mu), float(lam), float(kappa), float(p), float(gamma))


def check_alpha(alpha):
    if not alpha > 0:
        raise ParameterOutOfRange(f"alpha > 0 violated (alpha={alpha})")
    return float(alpha)


def _check_density(q):
    q = np.asarray(q, dtype=float)
    if np.any(q <= -1.0):
        raise DomainError("q must be > -1 (positive density)")
    return q


def pressure_derivative(rho, params):
    """P'(rho) for the gamma-law."""
    return params.p * np.asarray(rho, dtype=float) ** (params.gamma - 1.0)


def coeff_K(q, params):
    """K(q) = P'(1) - P'(1+q)/(1+q) = p (1 - (1+q)^(gamma-2))."""
    q = _check_density(q)
    out = params.p * -np.expm1((params.gamma - 2.0) * np.log1p(q))
    return float(out) if out.ndim == 0 else out


def coeff_I(q):
    """I(q) = q / (1 + q)."""
    q = _check_density(q)
    out = q / (1.0 + q)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class State:
    """Density fluctuation q = rho - 1, velocity u and optionally c - 1."""

    q: SpectralField
    u: SpectralField
    c_minus_one: SpectralField | None = None

    def __post_init__(self):
        if self.q.kind != "scalar" or self.u.kind != "vector":
            raise SizeMismatch("State needs a scalar q and a vector u")
        fields = [self.q, self.u] + ([self.c_minus_one] if self.c_minus_one is not None else [])
        if any(f.grid != self.q.grid for f in fields):
            raise SizeMismatch("all State components must share one grid")
        if np.min(self.q.physical()) <= -1.0:
            raise VacuumError("1 + q <= 0 somewhere: density is not positive")

    @property
    def grid(self):
        return self.q.grid

    def scaled(self, factor):
        c = None if self.c_minus_one is None else self.c_minus_one * factor
        return State(self.q * factor, self.u * factor, c)


def band_mask(grid, band):
    """Frequencies with 2^j_lo <= |xi| < 2^(j_hi + 1)."""
    j_lo, j_hi = band
    if j_lo > j_hi:
        raise BandOutOfRange(f"empty band {band}")
    top = 2.0 ** (j_hi + 1)
    if top > grid.xi_dealias * (1 + 1e-12):
        raise BandOutOfRange(
            f"band top 2^{j_hi + 1} exceeds the dealiased range |xi| <= {grid.xi_dealias:.4g}"
        )
    r = grid.xi_norm
    mask = (r >= 2.0**j_lo) & (r < top) & grid.dealias_mask
    if not mask.any():
        raise BandOutOfRange(f"band {band} contains no grid frequency (xi_min={grid.xi_min:.4g})")
    return mask


def make_initial_data(grid, amplitude, band, seed):
    """Random-phase, band-limited small data around the rest state.

    q and u are real, mean-free and supported in the dyadic band; the pair
    is rescaled so that
    ||q||_{B^{d/2-1}} + ||q||_{B^{d/2}} + ||u||_{B^{d/2-1}} = amplitude.
    """
    from .littlewood_paley import besov_norm

    if not amplitude > 0:
        raise ParameterOutOfRange(f"amplitude > 0 violated (amplitude={amplitude})")
    mask = band_mask(grid, band)
    rng = np.random.default_rng(seed)

    def random_real(ncomp):
        noise = rng.standard_normal((ncomp,) + grid.shape) + 1j * rng.standard_normal((ncomp,) + grid.shape)
        coeffs = noise * mask
        # project onto real fields
        coeffs = 0.5 * (coeffs + np.conj(grid.reflect(coeffs)))
        return coeffs

    q = SpectralField(grid, random_real(1), "scalar")
    u = SpectralField(grid, random_real(grid.d), "vector")
    s = grid.d / 2.0
    total = besov_norm(q, s - 1) + besov_norm(q, s) + besov_norm(u, s - 1)
    factor = amplitude / total
    return State(q * factor, u * factor)


def state_from_physical(grid, q, u):
    return State(dft_forward(q, grid), dft_forward(np.reshape(u, (grid.d,) + grid.shape), grid, "vector"))


def sound_speed(params):
    return math.sqrt(params.p)
