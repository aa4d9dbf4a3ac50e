"""Nonlinear time integration of the order-parameter and Korteweg systems.

Unknowns (q, u) with q = rho - 1.  The linear part (acoustic coupling,
viscosity, capillarity) is integrated exactly per Fourier mode; the
nonlinear tendencies

    dq_N = -div(q u)                       (= -u.grad q - q div u)
    du_N = -u.grad u + K(q) grad q - I(q) A u

are evaluated pseudo-spectrally with two-thirds dealiasing and advanced
by the explicit midpoint rule inside a Strang splitting.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUp, ParameterOutOfRange, SizeMismatch, VacuumError
from .linear import propagator
from .littlewood_paley import Trajectory
from .model import State, check_alpha, coeff_I, coeff_K
from .spectral import (
    HelmholtzParts,
    SpectralField,
    friedrichs_project,
    helmholtz_recompose,
    helmholtz_split,
    mollifier_phi_alpha,
)

log = logging.getLogger(__name__)

BLOWUP_LIMIT = 1e6
CFL = 0.5


@dataclass(frozen=True)
class Model:
    """OP(alpha): order-parameter capillarity; K: local Korteweg capillarity."""

    kind: str
    alpha: float = math.inf

    def __post_init__(self):
        if self.kind not in ("op", "k"):
            raise ParameterOutOfRange(f"model kind must be 'op' or 'k' (got {self.kind!r})")
        if self.kind == "op":
            a = check_alpha(self.alpha)
            if math.isinf(a):
                raise ParameterOutOfRange("OP model needs a finite alpha")
        elif not math.isinf(self.alpha):
            raise ParameterOutOfRange("the Korteweg model has no alpha")

    @property
    def symbol_alpha(self):
        """alpha entering the capillary symbol; inf gives the local -|xi|^2."""
        return self.alpha

    def label(self):
        return f"OP(alpha={self.alpha:g})" if self.kind == "op" else "K"


def OP(alpha):
    return Model("op", float(alpha))


def K():
    return Model("k")


@dataclass(frozen=True)
class StepConfig:
    dt: float
    T: float
    n_trunc: int | None = None
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0 or not self.T > 0:
            raise ParameterOutOfRange("dt and T must be positive")
        if self.dt > self.T:
            raise ParameterOutOfRange("dt must not exceed T")
        if self.record_every < 1:
            raise ParameterOutOfRange("record_every must be >= 1")
        if self.n_trunc is not None and self.n_trunc < 0:
            raise ParameterOutOfRange("n_trunc must be >= 0 or None")

    @property
    def nsteps(self):
        return max(1, round(self.T / self.dt))

    @property
    def dt_effective(self):
        return self.T / self.nsteps


# ------------------------------------------------------------- helpers

def _grad_coeffs(grid, f_hat):
    g = 1j * grid.xi * f_hat
    g[:, grid.nyquist_mask] = 0.0
    return g


def _phys(grid, coeffs):
    return np.fft.ifftn(coeffs, axes=grid.axes, norm="forward").real


def _spec(grid, samples):
    return np.fft.fftn(samples, axes=grid.axes, norm="forward")


def _lame_coeffs(grid, u_hat, params):
    xi = grid.xi
    xi_dot_u = np.sum(xi * u_hat, axis=0)
    return -params.mu * grid.xi_norm2 * u_hat - (params.lam + params.mu) * xi * xi_dot_u


def _truncate(grid, coeffs, n_trunc):
    if n_trunc is None:
        return coeffs
    r = grid.xi_norm
    keep = (r >= 2.0 ** (-n_trunc)) & (r <= (8.0 / 3.0) * 2.0**n_trunc)
    return coeffs * keep


def _nonlinear_coeffs(grid, q_hat, u_hat, params, n_trunc=None):
    """Dealiased nonlinear tendencies for raw coefficient arrays."""
    q_hat = _truncate(grid, q_hat, n_trunc)
    u_hat = _truncate(grid, u_hat, n_trunc)
    q = _phys(grid, q_hat)
    if np.min(q) <= -1.0:
        raise VacuumError("1 + q <= 0 somewhere: density is not positive")
    u = _phys(grid, u_hat)
    mask = grid.dealias_mask

    # continuity, conservative form: the xi = 0 coefficient vanishes identically
    flux_hat = _spec(grid, q[None] * u)
    flux_hat[:, grid.nyquist_mask] = 0.0
    dq = -np.sum(1j * grid.xi * flux_hat, axis=0)
    dq[grid.nyquist_mask] = 0.0

    grad_u = np.stack([_phys(grid, _grad_coeffs(grid, u_hat[i])) for i in range(grid.d)])
    # grad_u[i, j] = d_j u_i
    advect = np.einsum("j...,ij...->i...", u, grad_u)
    grad_q = _phys(grid, _grad_coeffs(grid, q_hat))
    Au = _phys(grid, _lame_coeffs(grid, u_hat, params))
    du_phys = -advect + coeff_K(q, params) * grad_q - coeff_I(q) * Au
    du = _spec(grid, du_phys)

    dq = _truncate(grid, dq * mask, n_trunc)
    du = _truncate(grid, du * mask, n_trunc)
    return dq, du


def rhs_nonlinear(state, model, params, n_trunc=None):
    """(dq, du) nonlinear tendencies as spectral fields.

    ``model`` is accepted for interface symmetry: the nonlinear terms do
    not depend on the capillarity law.
    """
    grid = state.grid
    dq, du = _nonlinear_coeffs(grid, state.q.coeffs[0], state.u.coeffs, params, n_trunc)
    return SpectralField(grid, dq, "scalar"), SpectralField(grid, du, "vector")


# ------------------------------------------------------------- linear flow

@dataclass
class LinearFlow:
    """Exact linear propagator over a fixed time step, tabulated on the grid."""

    grid: object
    model: Model
    params: object
    dt: float
    _P: np.ndarray = field(init=False, repr=False)
    _heat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        grid = self.grid
        r = grid.xi_norm
        P = np.zeros(grid.shape + (2, 2))
        P[..., 0, 0] = P[..., 1, 1] = 1.0
        nz = r > 0
        if self.dt > 0:
            P[nz] = propagator(r[nz], self.dt, self.params, self.model.symbol_alpha)
        self._P = P
        self._heat = np.exp(-self.params.mu * grid.xi_norm2 * self.dt)

    def apply_coeffs(self, q_hat, u_hat):
        grid = self.grid
        xi = grid.xi
        norm = grid.xi_norm.copy()
        zero = (0,) * grid.d
        norm[zero] = 1.0
        v = 1j * np.sum(xi * u_hat, axis=0) / norm
        compressive = -1j * xi * v / norm
        solenoidal = u_hat - compressive
        P = self._P
        q_new = P[..., 0, 0] * q_hat + P[..., 0, 1] * v
        v_new = P[..., 1, 0] * q_hat + P[..., 1, 1] * v
        u_new = -1j * xi * v_new / norm + self._heat * solenoidal
        # mean velocity and mean density are not touched by the linear part
        q_new[zero] = q_hat[zero]
        u_new[(slice(None),) + zero] = u_hat[(slice(None),) + zero]
        return q_new, u_new


def linear_step(state, dt, model, params):
    """Exact flow of the linearised system over dt, via the Helmholtz split."""
    if dt < 0:
        raise ParameterOutOfRange("dt must be >= 0")
    grid = state.grid
    alpha = model.symbol_alpha
    parts = helmholtz_split(state.u)
    r = grid.xi_norm
    nz = r > 0
    q_hat = state.q.coeffs[0]
    v_hat = parts.v.coeffs[0]
    q_new = q_hat.copy()
    v_new = v_hat.copy()
    if dt > 0:
        q_new[nz], v_new[nz] = _apply_prop(propagator(r[nz], dt, params, alpha), q_hat[nz], v_hat[nz])
    w_new = parts.w.coeffs * np.exp(-params.mu * grid.xi_norm2 * dt)
    u_new = helmholtz_recompose(
        HelmholtzParts(SpectralField(grid, v_new), SpectralField(grid, w_new, "tensor"), parts.u_mean)
    )
    c = None if state.c_minus_one is None else order_parameter(SpectralField(grid, q_new), model.alpha)
    return State(SpectralField(grid, q_new), u_new, c)


def _apply_prop(P, q, v):
    return P[..., 0, 0] * q + P[..., 0, 1] * v, P[..., 1, 0] * q + P[..., 1, 1] * v


# ------------------------------------------------------------- stepping

class Stepper:
    """Strang splitting: half linear, explicit midpoint on the nonlinearity, half linear."""

    def __init__(self, grid, model, params, dt, n_trunc=None, nonlinear=True):
        self.grid = grid
        self.model = model
        self.params = params
        self.dt = dt
        self.n_trunc = n_trunc
        self.nonlinear = nonlinear
        self.half = LinearFlow(grid, model, params, 0.5 * dt)

    def advance(self, q_hat, u_hat):
        dt = self.dt
        q_hat, u_hat = self.half.apply_coeffs(q_hat, u_hat)
        if self.nonlinear:
            dq, du = _nonlinear_coeffs(self.grid, q_hat, u_hat, self.params, self.n_trunc)
            dq, du = _nonlinear_coeffs(
                self.grid, q_hat + 0.5 * dt * dq, u_hat + 0.5 * dt * du, self.params, self.n_trunc
            )
            q_hat = q_hat + dt * dq
            u_hat = u_hat + dt * du
        q_hat, u_hat = self.half.apply_coeffs(q_hat, u_hat)
        _check_bounded(self.grid, q_hat, u_hat)
        return q_hat, u_hat


def _check_bounded(grid, q_hat, u_hat):
    if not (np.all(np.isfinite(q_hat)) and np.all(np.isfinite(u_hat))):
        raise BlowUp("non-finite coefficients")
    # sum |coeffs| bounds the sup norm of the physical field
    bound = max(np.sum(np.abs(q_hat)), np.max(np.sum(np.abs(u_hat), axis=tuple(range(1, grid.d + 1)))))
    if bound > BLOWUP_LIMIT:
        q = _phys(grid, q_hat)
        u = _phys(grid, u_hat)
        if max(np.max(np.abs(q)), np.max(np.abs(u))) > BLOWUP_LIMIT:
            raise BlowUp(f"L-infinity norm exceeded {BLOWUP_LIMIT:g}")


def step(state, dt, model, params, cfg=None, nonlinear=True):
    """One Strang step of size dt."""
    n_trunc = None if cfg is None else cfg.n_trunc
    stepper = Stepper(state.grid, model, params, dt, n_trunc, nonlinear)
    q_hat, u_hat = stepper.advance(state.q.coeffs[0], state.u.coeffs)
    return _make_state(state.grid, q_hat, u_hat, model, state.c_minus_one is not None)


def _make_state(grid, q_hat, u_hat, model, with_c):
    q = SpectralField(grid, q_hat, "scalar")
    u = SpectralField(grid, u_hat, "vector")
    c = order_parameter(q, model.alpha) if with_c and model.kind == "op" else None
    return State(q, u, c)


def dt_max(state, params):
    """State-based explicit-stability estimate for the nonlinear substep.

    Advective CFL on the dealiased grid plus the viscous stiffness of
    I(q) A u; the linear part is exact and imposes no limit.
    """
    grid = state.grid
    dx = grid.L / grid.n
    q = state.q.physical()
    u = state.u.physical()
    umax = float(np.max(np.sqrt(np.sum(u**2, axis=0))))
    imax = float(np.max(np.abs(coeff_I(q))))
    kmax = float(np.max(np.abs(coeff_K(q, params))))
    limits = [math.inf]
    if umax > 0:
        limits.append(CFL * dx / umax)
    if imax > 0:
        limits.append(1.0 / (imax * params.nu * grid.xi_dealias**2 * grid.d))
    if kmax > 0:
        limits.append(CFL * dx / math.sqrt(kmax))
    return min(limits)


def integrate(state0, model, params, cfg, nonlinear=True, with_order_parameter=None):
    """Advance state0 to cfg.T and return the recorded Trajectory.

    States are recorded at t = 0, every ``record_every`` steps and at T.
    For the OP model the order parameter c - 1 = phi_alpha * q is attached
    to every recorded state unless ``with_order_parameter`` is False.
    """
    grid = state0.grid
    if state0.u.grid != grid:
        raise SizeMismatch("state components live on different grids")
    nsteps = cfg.nsteps
    dt = cfg.dt_effective
    if not math.isclose(dt, cfg.dt, rel_tol=1e-12):
        log.info("dt adjusted from %g to %g to land on T=%g in %d steps", cfg.dt, dt, cfg.T, nsteps)
    limit = dt_max(state0, params)
    if dt > limit:
        log.warning("dt=%g exceeds the stability estimate dt_max=%g", dt, limit)
    if with_order_parameter is None:
        with_order_parameter = model.kind == "op"

    stepper = Stepper(grid, model, params, dt, cfg.n_trunc, nonlinear)
    q_hat = state0.q.coeffs[0].copy()
    u_hat = state0.u.coeffs.copy()
    times = [0.0]
    states = [_make_state(grid, q_hat, u_hat, model, with_order_parameter)]
    for k in range(1, nsteps + 1):
        q_hat, u_hat = stepper.advance(q_hat, u_hat)
        if k % cfg.record_every == 0 or k == nsteps:
            times.append(k * dt)
            states.append(_make_state(grid, q_hat, u_hat, model, with_order_parameter))
    meta = {"model": model.label(), "alpha": model.alpha, "dt": dt, "nsteps": nsteps, "dt_max": limit}
    return Trajectory(np.array(times), states, meta)


def linear_evolve(state, t, model, params):
    """Exact linear solution at time t (single application of the propagator)."""
    return linear_step(state, t, model, params)


# --------------------------------------------------------- diagnostics

def order_parameter(q, alpha):
    """c - 1 = phi_alpha * q, the solution of -Lap c + alpha^2 c = alpha^2 (1 + q)."""
    if math.isinf(alpha):
        return q
    return mollifier_phi_alpha(q, alpha)


def elliptic_residual(c_minus_one, q, alpha):
    """||-Lap c + alpha^2 (c - (1 + q))||_{L^2} / (alpha^2 ||1 + q||_{L^2})."""
    grid = q.grid
    zero = (0,) + (0,) * grid.d
    c = c_minus_one.coeffs.copy()
    rho = q.coeffs.copy()
    c[zero] += 1.0
    rho[zero] += 1.0
    res = grid.xi_norm2 * c + alpha**2 * (c - rho)
    norm = lambda a: math.sqrt(grid.volume * float(np.sum(np.abs(a) ** 2)))
    return norm(res) / (alpha**2 * norm(rho))


def remainder_R_alpha(q, params, alpha):
    """R_alpha = kappa grad(Lap q - alpha^2 (phi_alpha * q - q)), symbol -i kappa xi |xi|^4 / (alpha^2 + |xi|^2)."""
    grid = q.grid
    x = grid.xi_norm2
    coeffs = -1j * params.kappa * grid.xi * (x * x / (alpha**2 + x)) * q.coeffs[0]
    coeffs[:, grid.nyquist_mask] = 0.0
    return SpectralField(grid, coeffs, "vector")


def friedrichs_state(state, n_trunc):
    c = None if state.c_minus_one is None else friedrichs_project(state.c_minus_one, n_trunc)
    return State(friedrichs_project(state.q, n_trunc), friedrichs_project(state.u, n_trunc), c)
