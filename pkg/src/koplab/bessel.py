"""Modified Bessel functions and the interaction potential phi.

K_nu uses the integral representation K_nu(x) = int_0^inf exp(-x cosh t)
cosh(nu t) dt (adaptive quadrature), except at half-integer orders where
the finite closed form is exact.  phi is the kernel whose Fourier
transform is 1/(1 + |xi|^2) with the convention f^(xi) = int e^{-i x.xi} f.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, ParameterOutOfRange, QuadratureFailure

# exp(-745) is the smallest positive double
_UNDERFLOW = 745.0
_QUAD_EPSREL = 2e-14


def _is_half_integer(nu):
    return abs(2 * nu - round(2 * nu)) < 1e-15 and round(2 * nu) % 2 == 1


def _half_integer_scaled(nu, x):
    """e^x K_{n+1/2}(x) = sqrt(pi/2x) sum_k (n+k)!/(k!(n-k)!) (2x)^-k."""
    n = int(round(abs(nu) - 0.5))
    total = 0.0
    for k in range(n + 1):
        total += math.factorial(n + k) / (math.factorial(k) * math.factorial(n - k)) / (2.0 * x) ** k
    return math.sqrt(math.pi / (2.0 * x)) * total


def _quad(func, a, b, what, epsrel=_QUAD_EPSREL, epsabs=0.0, limit=400, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(func, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, points=points)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(f"{what}: {exc}") from exc
    return val


def _integral_scaled(nu, x):
    """e^x K_nu(x) by quadrature of exp(-x (cosh t - 1)) cosh(nu t)."""
    t_max = math.acosh(1.0 + _UNDERFLOW / x)

    def integrand(t):
        return math.exp(-x * (math.cosh(t) - 1.0) + nu * t) * 0.5 * (1.0 + math.exp(-2.0 * nu * t))

    # the integrand peaks near sinh t = nu / x; split there for small x
    points = None
    if nu > 0:
        t_peak = math.asinh(nu / x)
        if 0 < t_peak < t_max:
            points = [t_peak]
    return _quad(integrand, 0.0, t_max, f"K_{nu}({x})", points=points)


def _check_order(nu):
    if not nu >= 0:
        raise ParameterOutOfRange(f"order must be >= 0 (got {nu})")


def bessel_K_scaled(nu, x):
    """e^x K_nu(x) for nu >= 0, x > 0 (scalar or array)."""
    _check_order(nu)
    xs = np.asarray(x, dtype=float)
    if np.any(xs <= 0) or not np.all(np.isfinite(xs)):
        raise DomainError("K_nu needs x > 0")
    if _is_half_integer(nu):
        f = lambda v: _half_integer_scaled(nu, v)
    else:
        f = lambda v: _integral_scaled(nu, v)
    out = np.array([f(float(v)) for v in xs.ravel()]).reshape(xs.shape)
    return float(out) if out.ndim == 0 else out


def bessel_K(nu, x):
    """Modified Bessel function of the second kind K_nu(x), nu >= 0, x > 0."""
    scaled = bessel_K_scaled(nu, x)
    return scaled * np.exp(-np.asarray(x, dtype=float)) if np.ndim(scaled) else scaled * math.exp(-float(x))


def bessel_K_trapezoid(nu, x, step=0.05):
    """Vectorised e^x K_nu(x) by the trapezoid rule on the same integral.

    The integrand is analytic and even in t, so the rule converges
    geometrically (error ~ exp(-pi^2 / step)).  Used where many kernel
    values are needed inside an outer quadrature.
    """
    _check_order(nu)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs <= 0):
        raise DomainError("K_nu needs x > 0")
    t_max = np.arccosh(1.0 + _UNDERFLOW / xs.min())
    t = np.arange(0.0, t_max + step, step)
    expo = -np.outer(xs, np.cosh(t) - 1.0)
    vals = np.exp(expo) * np.cosh(nu * t)
    vals[:, 0] *= 0.5
    out = step * vals.sum(axis=1)
    return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])


def bessel_I(nu, x):
    """Modified Bessel function of the first kind, by Schlafli's integral (x > 0)."""
    _check_order(nu)
    x = float(x)
    if x <= 0:
        raise DomainError("bessel_I implemented for x > 0")
    # (1/pi) int_0^pi e^{x cos s} cos(nu s) ds, scaled by e^-x
    # cancellation at small x caps the attainable relative accuracy
    tol = dict(epsrel=1e-12, epsabs=1e-14)
    first = _quad(lambda s: math.exp(x * (math.cos(s) - 1.0)) * math.cos(nu * s), 0.0, math.pi, "I first part", **tol)
    first /= math.pi
    second = 0.0
    if math.sin(nu * math.pi) != 0.0 and not float(nu).is_integer():
        t_max = math.acosh(1.0 + _UNDERFLOW / x) + 1.0
        second = _quad(lambda t: math.exp(-x * (math.cosh(t) + 1.0) - nu * t), 0.0, t_max, "I second part", **tol)
        second *= math.sin(nu * math.pi) / math.pi
    return math.exp(x) * (first - second)


def bessel_J(nu, x):
    """Bessel function of the first kind (scipy.special.jv)."""
    if nu < 0 and float(nu).is_integer():
        raise ParameterOutOfRange("negative integer orders are not supported")
    return special.jv(nu, x)


def lower_bound_constant(nu):
    """Gamma(nu) 2^(nu - 1): the infimum of e^x x^nu K_nu(x) for nu >= 1/2."""
    return math.gamma(nu) * 2.0 ** (nu - 1.0)


def monotone_profile(nu, x):
    """f(x) = e^x x^nu K_nu(x), nondecreasing for nu >= 1/2."""
    x = np.asarray(x, dtype=float)
    return x**nu * bessel_K_scaled(nu, x)


# ---------------------------------------------------------------- kernel

@dataclass(frozen=True)
class KernelSpec:
    d: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DomainError(f"kernel dimension must be 1, 2 or 3 (got {self.d})")

    @property
    def order(self):
        return abs(self.d / 2.0 - 1.0)

    @property
    def constant(self):
        return kernel_constant(self.d)


def kernel_constant(d):
    """C_d = (2 pi)^(-d/2), so that phi^ = 1/(1 + |xi|^2) exactly."""
    return (2.0 * math.pi) ** (-d / 2.0)


def stated_kernel_constant(d):
    """(2^(d/2-1) Gamma(d/2))^-1, the other normalisation found in the literature."""
    return 1.0 / (2.0 ** (d / 2.0 - 1.0) * math.gamma(d / 2.0))


def _check_radius(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise DomainError("kernel_phi needs |x| > 0")
    return x


def kernel_phi(d, x, fast=False):
    """phi(x) = C_d |x|^(1 - d/2) K_{d/2-1}(|x|), radial profile."""
    spec = KernelSpec(d)
    x = _check_radius(x)
    scaled = bessel_K_trapezoid(spec.order, x) if fast else bessel_K_scaled(spec.order, x)
    out = spec.constant * x ** (1.0 - d / 2.0) * np.exp(-x) * scaled
    return float(out) if np.ndim(out) == 0 else out


def kernel_phi_alpha(d, x, alpha):
    """phi_alpha(x) = alpha^d phi(alpha x)."""
    return alpha**d * kernel_phi(d, alpha * np.asarray(x, dtype=float))


def kernel_phi_hat(d, xi_norm):
    KernelSpec(d)
    xi = np.asarray(xi_norm, dtype=float)
    out = 1.0 / (1.0 + xi**2)
    return float(out) if out.ndim == 0 else out


_SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}
_HANKEL_CUTOFF = 60.0


def hankel_transform(d, xi):
    """Radial Fourier transform of phi at |xi| = xi by Hankel quadrature."""
    KernelSpec(d)
    if xi < 0:
        raise DomainError("xi must be >= 0")
    profile = lambda r: kernel_phi(d, r, fast=True) if r > 0 else 0.0
    if xi == 0.0:
        integrand = lambda r: profile(r) * r ** (d - 1)
        return _SPHERE_AREA[d] * _quad_pieces(integrand, d, "mass of phi")
    nu = d / 2.0 - 1.0
    integrand = lambda r: bessel_J(nu, xi * r) * profile(r) * r ** (d / 2.0) if r > 0 else 0.0
    integral = _quad_pieces(integrand, d, f"Hankel transform at xi={xi}")
    return (2.0 * math.pi) ** (d / 2.0) * xi ** (1.0 - d / 2.0) * integral


def _quad_pieces(integrand, d, what):
    # integrable log/power singularity at 0 for d >= 2: isolate [0, 1]
    edges = [0.0, 1.0, 4.0, 12.0, 25.0, 40.0, _HANKEL_CUTOFF]
    return sum(
        _quad(integrand, a, b, what, epsrel=1e-12, epsabs=1e-15, limit=500) for a, b in zip(edges[:-1], edges[1:])
    )


def hankel_check(d, xi_samples):
    """max |Hankel transform of phi - 1/(1 + xi^2)| over the samples."""
    errs = [abs(hankel_transform(d, float(xi)) - 1.0 / (1.0 + float(xi) ** 2)) for xi in xi_samples]
    return max(errs)
