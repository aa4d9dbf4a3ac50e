"""Fourier pseudo-spectral machinery on the periodic box [0, L)^d.

Coefficients use the "forward" normalisation: the k-th coefficient of a
grid function f is (1/N) sum_x f(x) exp(-i xi_k . x), so a constant field
has its value as k = 0 coefficient, and

    ||f||_{L^2(T^d)}^2 = L^d * sum_k |f_k|^2

(the trapezoid rule is exact for grid functions).  Frequencies are
xi = 2 pi k / L with k in [-n/2, n/2) along each axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ParameterOutOfRange, SingularMultiplier, SizeMismatch

C0_ANNULUS = 8.0 / 3.0
DEFAULT_PERIOD = 2.0 * math.pi * 16.0


@dataclass(frozen=True)
class GridSpec:
    d: int
    n: int
    L: float = DEFAULT_PERIOD

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ParameterOutOfRange(f"d must be 1, 2 or 3 (got {self.d})")
        if self.n < 8 or self.n & (self.n - 1):
            raise ParameterOutOfRange(f"n must be a power of two >= 8 (got {self.n})")
        if not self.L > 0:
            raise ParameterOutOfRange(f"L must be positive (got {self.L})")

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def axes(self):
        return tuple(range(-self.d, 0))

    @property
    def size(self):
        return self.n**self.d

    @property
    def volume(self):
        return self.L**self.d

    @cached_property
    def k(self):
        """Integer wavenumbers, shape (d, *shape)."""
        k1 = np.fft.fftfreq(self.n, 1.0 / self.n)
        return np.array(np.meshgrid(*([k1] * self.d), indexing="ij"))

    @cached_property
    def xi(self):
        return 2.0 * math.pi * self.k / self.L

    @cached_property
    def xi_norm2(self):
        return np.sum(self.xi**2, axis=0)

    @cached_property
    def xi_norm(self):
        return np.sqrt(self.xi_norm2)

    @property
    def xi_min(self):
        return 2.0 * math.pi / self.L

    @property
    def xi_max(self):
        """Largest |xi| present on the grid (corner of the Nyquist cube)."""
        return math.sqrt(self.d) * math.pi * self.n / self.L

    @property
    def k_dealias(self):
        return self.n // 3

    @property
    def xi_dealias(self):
        """Largest |xi| along an axis that survives two-thirds truncation."""
        return 2.0 * math.pi * self.k_dealias / self.L

    @cached_property
    def dealias_mask(self):
        return np.all(np.abs(self.k) <= self.n / 3.0, axis=0)

    @cached_property
    def nyquist_mask(self):
        return np.any(self.k == -self.n // 2, axis=0)

    @cached_property
    def x(self):
        """Physical sample points, shape (d, *shape)."""
        x1 = self.L * np.arange(self.n) / self.n
        return np.array(np.meshgrid(*([x1] * self.d), indexing="ij"))

    def reflect(self, a):
        """Return b with b[k] = a[-k] along the last d axes."""
        axes = self.axes
        return np.roll(np.flip(a, axis=axes), 1, axis=axes)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real scalar, vector or tensor field.

    ``coeffs`` always carries a leading component axis: shape
    (ncomp, *grid.shape).
    """

    grid: GridSpec
    coeffs: np.ndarray
    kind: str = "scalar"

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == self.grid.d:
            c = c[None]
        if c.shape[1:] != self.grid.shape:
            raise SizeMismatch(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        expected = {"scalar": 1, "vector": self.grid.d, "tensor": self.grid.d**2}.get(self.kind)
        if expected is None:
            raise ValueError(f"unknown field kind {self.kind!r}")
        if c.shape[0] != expected:
            raise SizeMismatch(f"{self.kind} field needs {expected} components, got {c.shape[0]}")
        object.__setattr__(self, "coeffs", c)

    @property
    def ncomp(self):
        return self.coeffs.shape[0]

    def with_coeffs(self, coeffs):
        return SpectralField(self.grid, coeffs, self.kind)

    def physical(self):
        return dft_inverse(self)

    def mean(self):
        return self.coeffs[(slice(None),) + (0,) * self.grid.d].real.copy()

    def l2_norm(self):
        return math.sqrt(self.grid.volume * float(np.sum(np.abs(self.coeffs) ** 2)))

    def hermitian_defect(self):
        c = self.coeffs
        scale = max(float(np.max(np.abs(c))), 1e-300)
        return float(np.max(np.abs(c - np.conj(self.grid.reflect(c))))) / scale

    def __add__(self, other):
        _check_compatible(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_compatible(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)


def _check_compatible(a, b):
    if a.grid != b.grid or a.kind != b.kind:
        raise SizeMismatch("fields live on different grids or have different kinds")


def zeros(grid, kind="scalar"):
    ncomp = {"scalar": 1, "vector": grid.d, "tensor": grid.d**2}[kind]
    return SpectralField(grid, np.zeros((ncomp,) + grid.shape, dtype=complex), kind)


def dft_forward(samples, grid, kind=None):
    """Transform real physical samples to a :class:`SpectralField`.

    ``samples`` has shape ``grid.shape`` (scalar) or (ncomp, *grid.shape).
    """
    a = np.asarray(samples, dtype=float)
    if a.shape == grid.shape:
        a = a[None]
        kind = kind or "scalar"
    elif a.ndim == grid.d + 1 and a.shape[1:] == grid.shape:
        if kind is None:
            kind = "scalar" if a.shape[0] == 1 else "vector"
    else:
        raise SizeMismatch(f"sample shape {a.shape} does not match grid {grid.shape}")
    coeffs = np.fft.fftn(a, axes=grid.axes, norm="forward")
    return SpectralField(grid, coeffs, kind)


def dft_inverse(f):
    """Physical samples of ``f``; scalar fields come back without the component axis."""
    out = np.fft.ifftn(f.coeffs, axes=f.grid.axes, norm="forward").real
    return out[0] if f.kind == "scalar" else out


def _evaluate_multiplier(m, grid):
    vals = m(grid.xi) if callable(m) else m
    vals = np.asarray(vals)
    if vals.ndim == 0:
        vals = np.full(grid.shape, vals)
    if not np.all(np.isfinite(vals)):
        raise SingularMultiplier("multiplier is not finite at every grid frequency")
    return vals


def apply_multiplier(f, m):
    """Multiply Fourier coefficients pointwise by the symbol ``m``.

    ``m`` is a callable of the frequency array ``grid.xi`` (shape
    (d, *shape)) or a precomputed array.  Coefficients where the symbol
    breaks Hermitian pairing (e.g. odd symbols on the k = -n/2 planes) are
    set to zero, so real fields stay real.
    """
    grid = f.grid
    vals = _evaluate_multiplier(m, grid)
    mirrored = np.conj(grid.reflect(vals))
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    broken = np.abs(vals - mirrored) > 1e-12 * max(scale, 1e-300)
    vals = np.where(broken, 0.0, vals)
    return f.with_coeffs(f.coeffs * vals)


def gradient(f):
    if f.kind != "scalar":
        raise SizeMismatch("gradient expects a scalar field")
    grid = f.grid
    coeffs = 1j * grid.xi * f.coeffs[0]
    coeffs[:, grid.nyquist_mask] = 0.0
    return SpectralField(grid, coeffs, "vector")


def divergence(u):
    if u.kind != "vector":
        raise SizeMismatch("divergence expects a vector field")
    grid = u.grid
    coeffs = np.sum(1j * grid.xi * u.coeffs, axis=0)
    coeffs[grid.nyquist_mask] = 0.0
    return SpectralField(grid, coeffs, "scalar")


def laplacian(f):
    return f.with_coeffs(-f.grid.xi_norm2 * f.coeffs)


def lame_operator(u, mu, lam):
    """A u = mu Lap u + (lam + mu) grad div u."""
    grid = u.grid
    xi = grid.xi
    xi_dot_u = np.sum(xi * u.coeffs, axis=0)
    coeffs = -mu * grid.xi_norm2 * u.coeffs - (lam + mu) * xi * xi_dot_u
    return u.with_coeffs(coeffs)


def capillary_symbol(xi_norm2, alpha):
    """Symbol of alpha^2 (phi_alpha * . - id): -|xi|^2 / (1 + |xi|^2/alpha^2).

    ``alpha = inf`` gives the local Laplacian symbol -|xi|^2.
    """
    xi_norm2 = np.asarray(xi_norm2, dtype=float)
    return -xi_norm2 / (1.0 + xi_norm2 / alpha**2)


def mollifier_symbol(xi_norm2, alpha):
    return 1.0 / (1.0 + np.asarray(xi_norm2, dtype=float) / alpha**2)


def capillary_op(q, alpha):
    """alpha^2 (phi_alpha * q - q), the order-parameter capillary term."""
    return q.with_coeffs(capillary_symbol(q.grid.xi_norm2, alpha) * q.coeffs)


def mollifier_phi_alpha(q, alpha):
    """phi_alpha * q, i.e. the resolvent alpha^2 (alpha^2 - Lap)^{-1} q."""
    return q.with_coeffs(mollifier_symbol(q.grid.xi_norm2, alpha) * q.coeffs)


@dataclass(frozen=True, eq=False)
class HelmholtzParts:
    v: SpectralField
    w: SpectralField
    u_mean: np.ndarray


def _zero_mode(grid):
    return (0,) * grid.d


def helmholtz_split(u):
    """Split u into v = Lambda^{-1} div u and w = Lambda^{-1} curl u.

    Here (curl u)_{ij} = d_i u^j - d_j u^i and Lambda = |D|; the xi = 0
    mode cannot be reached by Lambda^{-1} and is returned as ``u_mean``.
    """
    if u.kind != "vector":
        raise SizeMismatch("helmholtz_split expects a vector field")
    grid = u.grid
    d = grid.d
    xi = grid.xi
    norm = grid.xi_norm.copy()
    zero = _zero_mode(grid)
    norm[zero] = 1.0
    c = u.coeffs
    v = 1j * np.sum(xi * c, axis=0) / norm
    v[zero] = 0.0
    w = np.zeros((d, d) + grid.shape, dtype=complex)
    for i in range(d):
        for j in range(d):
            if i != j:
                w[i, j] = 1j * (xi[i] * c[j] - xi[j] * c[i]) / norm
    w[(slice(None), slice(None)) + zero] = 0.0
    u_mean = c[(slice(None),) + zero].real.copy()
    return HelmholtzParts(
        SpectralField(grid, v, "scalar"),
        SpectralField(grid, w.reshape((d * d,) + grid.shape), "tensor"),
        u_mean,
    )


def helmholtz_recompose(parts):
    """u = -Lambda^{-1} grad v + Lambda^{-1} div w + u_mean."""
    grid = parts.v.grid
    d = grid.d
    xi = grid.xi
    norm = grid.xi_norm.copy()
    zero = _zero_mode(grid)
    norm[zero] = 1.0
    v = parts.v.coeffs[0]
    w = parts.w.coeffs.reshape((d, d) + grid.shape)
    u = -1j * xi * v / norm
    for i in range(d):
        u[i] += np.sum(1j * xi * w[i], axis=0) / norm
    u[(slice(None),) + zero] = parts.u_mean
    return SpectralField(grid, u, "vector")


def friedrichs_project(f, n_trunc):
    """Keep only the annulus 2^-n <= |xi| <= (8/3) 2^n."""
    if n_trunc < 0:
        raise ParameterOutOfRange("n_trunc must be >= 0")
    r = f.grid.xi_norm
    keep = (r >= 2.0 ** (-n_trunc)) & (r <= C0_ANNULUS * 2.0**n_trunc)
    return f.with_coeffs(f.coeffs * keep)


def dealias(f):
    """Two-thirds rule: zero every mode with some |k_i| > n/3."""
    return f.with_coeffs(f.coeffs * f.grid.dealias_mask)
