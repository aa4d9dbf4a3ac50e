"""Linearised order-parameter system around the rest state.

Per Fourier mode, with v = |D|^-1 div u, the compressible part obeys

    d/dt (q, v) = A(xi) (q, v),
    A(xi) = [[0, -|xi|], [|xi| (p + kappa m), -nu |xi|^2]],
    m = |xi|^2 / (1 + |xi|^2 / alpha^2),

and the solenoidal part is a heat flow at rate mu |xi|^2.  alpha = inf
gives the local Korteweg symbol m = |xi|^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, DomainError, ParameterOutOfRange
from .model import check_alpha

DEGENERATE_TOL = 1e-6
C0_SMALL = 3.0 / 4.0


def capillary_m(x, alpha):
    """|xi|^2 / (1 + |xi|^2/alpha^2) as a function of x = |xi|^2."""
    x = np.asarray(x, dtype=float)
    return x / (1.0 + x / alpha**2)


def g_alpha(x, params, alpha):
    """g(x) = 1 - (4p/nu^2)/x - (alpha^2/M)/(x + alpha^2); increasing from -inf to 1."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("g_alpha needs x > 0")
    nu2 = params.nu**2
    out = 1.0 - 4.0 * params.p / (nu2 * x) - (1.0 / params.M) / (1.0 + x / alpha**2)
    return float(out) if out.ndim == 0 else out


def f_alpha(x, params, alpha):
    """nu^2 x - 4 (p + kappa x / (x/alpha^2 + 1)), so that g = f / (nu^2 x)."""
    x = np.asarray(x, dtype=float)
    return params.nu**2 * x - 4.0 * (params.p + params.kappa * capillary_m(x, alpha))


def _check_beta(beta):
    if not 0.0 <= beta < 1.0:
        raise ParameterOutOfRange(f"beta must lie in [0, 1) (got {beta})")


def threshold_x_beta(beta, params, alpha):
    """Unique positive root of g_alpha(x) = beta, in closed form."""
    _check_beta(beta)
    alpha = check_alpha(alpha)
    if math.isinf(alpha):
        raise ParameterOutOfRange("thresholds need a finite alpha")
    a2 = alpha**2
    one_b = 1.0 - beta
    nu2 = params.nu**2
    A = (a2 / params.M) * (params.M - 1.0 / one_b) - (4.0 * params.p / nu2) / one_b
    c = (4.0 * params.p / nu2) * a2 / one_b
    root = math.sqrt(A * A + 4.0 * c)
    # x solves x^2 + A x - c = 0; avoid cancellation when A > 0
    return 2.0 * c / (A + root) if A > 0 else 0.5 * (root - A)


def bisect_threshold(beta, params, alpha, rtol=1e-15, max_iter=400):
    """Root of g_alpha(x) = beta by bisection (independent of the closed form)."""
    _check_beta(beta)
    g = lambda x: g_alpha(x, params, alpha) - beta
    lo, hi = 1.0, 1.0
    for _ in range(2000):
        if g(lo) < 0:
            break
        lo *= 0.5
    else:
        raise ConvergenceFailure("could not bracket the root from below")
    for _ in range(2000):
        if g(hi) > 0:
            break
        hi *= 2.0
    else:
        raise ConvergenceFailure("could not bracket the root from above")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            return 0.5 * (lo + hi)
    raise ConvergenceFailure("bisection did not reach the requested tolerance")


def threshold_asymptote(beta, params, alpha):
    """Large-alpha behaviour of x_{alpha,beta} in the three cases of M vs 1/(1-beta)."""
    _check_beta(beta)
    one_b = 1.0 - beta
    M, p, nu = params.M, params.p, params.nu
    pivot = 1.0 / one_b
    if math.isclose(M, pivot, rel_tol=1e-12):
        return (2.0 / nu) * math.sqrt(p / one_b) * alpha
    if M < pivot:
        return (1.0 / (M * one_b) - 1.0) * alpha**2
    return (4.0 * p / nu**2) * M / (one_b * M - 1.0)


def threshold_branch(beta, params):
    pivot = 1.0 / (1.0 - beta)
    if math.isclose(params.M, pivot, rel_tol=1e-12):
        return "equal"
    return "below" if params.M < pivot else "above"


def y_level(params):
    """The level g_alpha(y_alpha): 1/2 if M <= 1, else 1 - 1/(2M)."""
    return 0.5 if params.M <= 1.0 else 1.0 - 1.0 / (2.0 * params.M)


@dataclass(frozen=True)
class Thresholds:
    x_alpha: float
    y_alpha: float
    m: float
    M: float
    alpha: float

    def y_bounds(self):
        """Bracket for y_alpha claimed for large alpha."""
        a2 = self.alpha**2
        if self.M >= 1.0:
            return a2, 2.0 * a2
        return (2.0 / self.M - 1.0) * a2, (2.0 / self.M - 0.5) * a2

    def y_within_bounds(self):
        lo, hi = self.y_bounds()
        return lo <= self.y_alpha <= hi


def threshold_y(params, alpha):
    level = y_level(params)
    return Thresholds(
        x_alpha=threshold_x_beta(0.0, params, alpha),
        y_alpha=threshold_x_beta(level, params, alpha),
        m=math.sqrt(level),
        M=params.M,
        alpha=float(alpha),
    )


def alpha0_onset(params, alphas=None):
    """Smallest scanned alpha from which the y_alpha bracket holds for every larger scanned alpha.

    Returns None when the bracket fails at the largest scanned alpha.
    """
    if alphas is None:
        alphas = [2.0**k for k in range(0, 21)]
    alphas = sorted(alphas)
    onset = None
    for a in reversed(alphas):
        if threshold_y(params, a).y_within_bounds():
            onset = a
        else:
            break
    return onset


# --------------------------------------------------------------- modes

REGIME_LOW, REGIME_TRANSITION, REGIME_HIGH = "low", "transition", "high"


@dataclass(frozen=True, eq=False)
class LinearModes:
    """Eigen-data of A(xi) for an array of |xi|^2 values.

    S is set (NaN elsewhere) where the discriminant is negative, R where
    it is nonnegative; ``regime`` compares |xi|^2 with x_alpha and y_alpha.
    """

    xi_norm2: np.ndarray
    g: np.ndarray
    regime: np.ndarray
    S: np.ndarray
    R: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    m: float


def modes(xi_norm2, params, alpha):
    x = np.atleast_1d(np.asarray(xi_norm2, dtype=float))
    if np.any(x <= 0):
        raise DomainError("modes need |xi|^2 > 0")
    g = np.atleast_1d(g_alpha(x, params, alpha))
    nu = params.nu
    half = 0.5 * nu * x
    osc = g < 0
    S = np.where(osc, np.sqrt(np.where(osc, -g, 0.0)), np.nan)
    R = np.where(osc, np.nan, np.sqrt(np.where(osc, 0.0, g)))
    lam_p = np.empty(x.shape, dtype=complex)
    lam_m = np.empty(x.shape, dtype=complex)
    lam_p[osc] = -half[osc] * (1.0 + 1j * S[osc])
    lam_m[osc] = -half[osc] * (1.0 - 1j * S[osc])
    hi = ~osc
    lam_p[hi] = -half[hi] * (1.0 + R[hi])
    # 1 - R = (1 - g)/(1 + R) and (nu x / 2)(1 - g) = 2 (p + kappa m) / nu
    stiff = params.p + params.kappa * capillary_m(x[hi], alpha)
    lam_m[hi] = -(2.0 * stiff / nu) / (1.0 + R[hi])
    if math.isinf(alpha):
        regime = np.where(osc, REGIME_LOW, REGIME_HIGH)
        m_level = math.nan
    else:
        th = threshold_y(params, alpha)
        regime = np.where(x < th.x_alpha, REGIME_LOW, np.where(x < th.y_alpha, REGIME_TRANSITION, REGIME_HIGH))
        m_level = th.m
    return LinearModes(x, g, regime, S, R, lam_p, lam_m, m_level)


def system_matrix(xi_norm, params, alpha):
    """A(xi) for an array of |xi|, shape (..., 2, 2)."""
    r = np.asarray(xi_norm, dtype=float)
    x = r * r
    A = np.zeros(r.shape + (2, 2))
    A[..., 0, 1] = -r
    A[..., 1, 0] = r * (params.p + params.kappa * capillary_m(x, alpha))
    A[..., 1, 1] = -params.nu * x
    return A


def expm2x2(A):
    """exp(A) for a stack of real 2x2 matrices by scaling and squaring.

    Taylor degree 16 on A / 2^s with ||A / 2^s||_1 <= 1/2.
    """
    A = np.asarray(A, dtype=float)
    norm = np.max(np.sum(np.abs(A), axis=-2), axis=-1)
    s = np.maximum(0, np.ceil(np.log2(np.maximum(norm, 1e-300) / 0.5))).astype(int)
    B = A / (2.0 ** s)[..., None, None]
    eye = np.broadcast_to(np.eye(2), A.shape)
    E = eye.copy()
    term = eye.copy()
    for k in range(1, 17):
        term = term @ B / k
        E = E + term
    for level in range(int(s.max(initial=0))):
        active = s > level
        E[active] = E[active] @ E[active]
    return E


def propagator(xi_norm, t, params, alpha):
    """exp(t A(xi)) from the explicit two-regime formulas, shape (..., 2, 2).

    Modes with |g_alpha(|xi|^2)| < 1e-6 use a direct matrix exponential,
    where the explicit formulas lose accuracy (S or R near 0).
    """
    r = np.atleast_1d(np.asarray(xi_norm, dtype=float))
    t = float(t)
    if t < 0:
        raise ParameterOutOfRange("t must be >= 0")
    if np.any(r <= 0):
        raise DomainError("propagator needs |xi| > 0")
    x = r * r
    md = modes(x, params, alpha)
    nu = params.nu
    stiff = params.p + params.kappa * capillary_m(x, alpha)
    P = np.empty(r.shape + (2, 2))
    ep = np.exp(t * md.lambda_plus)
    em = np.exp(t * md.lambda_minus)
    diff = ep - em

    near = np.abs(md.g) < DEGENERATE_TOL
    low = (md.g < 0) & ~near
    high = (md.g >= 0) & ~near

    if low.any():
        S = md.S[low]
        iS = 1j / S
        den = nu * r[low] * S
        P[low, 0, 0] = (0.5 * ((1 + iS) * ep[low] + (1 - iS) * em[low])).real
        P[low, 0, 1] = (-1j * diff[low] / den).real
        P[low, 1, 0] = (1j * stiff[low] * diff[low] / den).real
        P[low, 1, 1] = (0.5 * ((1 - iS) * ep[low] + (1 + iS) * em[low])).real
    if high.any():
        R = md.R[high]
        ep_h, em_h, diff_h = ep[high].real, em[high].real, diff[high].real
        den = nu * r[high] * R
        P[high, 0, 0] = 0.5 * ((1 - 1 / R) * ep_h + (1 + 1 / R) * em_h)
        P[high, 0, 1] = diff_h / den
        P[high, 1, 0] = -stiff[high] * diff_h / den
        P[high, 1, 1] = 0.5 * ((1 + 1 / R) * ep_h + (1 - 1 / R) * em_h)
    if near.any():
        P[near] = expm2x2(t * system_matrix(r[near], params, alpha))
    return P.reshape(np.shape(xi_norm) + (2, 2))


def semigroup_apply(q0_hat, v0_hat, xi_norm, t, params, alpha):
    """(q^(t), v^(t)) for the unforced linear system, per mode."""
    P = propagator(xi_norm, t, params, alpha)
    q0 = np.asarray(q0_hat)
    v0 = np.asarray(v0_hat)
    q = P[..., 0, 0] * q0 + P[..., 0, 1] * v0
    v = P[..., 1, 0] * q0 + P[..., 1, 1] * v0
    return q, v


def heat_apply(w0_hat, xi_norm2, t, mu):
    """Solenoidal part: w0 exp(-mu |xi|^2 t)."""
    if t < 0:
        raise ParameterOutOfRange("t must be >= 0")
    return np.asarray(w0_hat) * np.exp(-mu * np.asarray(xi_norm2, dtype=float) * t)


# ------------------------------------------------------------ envelopes

@dataclass(frozen=True)
class EnvelopeRow:
    xi_norm2: float
    regime: str
    s_or_r: float
    re_lambda_plus: float
    re_lambda_minus: float
    im_lambda_plus: float
    rate_measured: float
    rate_bound: float
    ok: bool

    def as_tuple(self):
        return (
            self.xi_norm2,
            self.regime,
            self.s_or_r,
            self.re_lambda_plus,
            self.re_lambda_minus,
            self.im_lambda_plus,
            self.rate_measured,
            self.rate_bound,
        )


ENVELOPE_COLUMNS = (
    "xi_norm2",
    "regime",
    "S_or_R",
    "re_lambda_plus",
    "re_lambda_minus",
    "im_lambda_plus",
    "envelope_rate_measured",
    "envelope_rate_bound",
)


def measured_rate(xi_norm, t_grid, params, alpha):
    """Growth bound -log(spectral radius of exp(tA))/t, taken as the minimum over t_grid.

    Equal to lim -log||exp(tA)|| / t, the decay exponent of the semigroup.
    """
    rates = []
    for t in t_grid:
        if t <= 0:
            continue
        P = propagator(np.array([xi_norm]), t, params, alpha)[0]
        rho = np.max(np.abs(np.linalg.eigvals(P)))
        rates.append(-math.log(rho) / t)
    return min(rates)


def envelope_report(params, alpha, xi_grid, t_grid, rtol=1e-6):
    """Measured decay exponents per |xi| against the regime-wise lower bounds.

    low: exponent equals nu |xi|^2 / 2; transition: exponent is at least
    (nu c0^2 2^{2j} / 4)(1 - m) with c0 = 3/4 and j the dyadic block of
    |xi|; high: the slow eigenvalue satisfies |lambda_-| >= kappa alpha^2 / (2 nu).
    """
    rows = []
    nu = params.nu
    for r in np.asarray(xi_grid, dtype=float):
        x = r * r
        md = modes(np.array([x]), params, alpha)
        regime = str(md.regime[0])
        lp, lm = md.lambda_plus[0], md.lambda_minus[0]
        s_or_r = float(md.S[0] if md.g[0] < 0 else md.R[0])
        rate = measured_rate(r, t_grid, params, alpha)
        if regime == REGIME_LOW:
            bound = 0.5 * nu * x
            ok = abs(rate - bound) <= rtol * bound
        elif regime == REGIME_TRANSITION:
            j = math.floor(math.log2(r / C0_SMALL))
            bound = nu * C0_SMALL**2 * 4.0**j / 4.0 * (1.0 - md.m)
            ok = rate >= bound * (1 - rtol)
        else:
            bound = params.kappa * alpha**2 / (2.0 * nu)
            ok = abs(lm.real) >= bound * (1 - rtol)
        rows.append(EnvelopeRow(x, regime, s_or_r, lp.real, lm.real, lp.imag, rate, bound, bool(ok)))
    return rows
