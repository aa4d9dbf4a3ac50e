"""Homogeneous Littlewood-Paley blocks, Besov and hybrid norms on the torus.

The mean (k = 0) mode is invisible to every homogeneous norm here; on the
torus this is the only difference with the whole-space definitions.
Time-integrated norms come in two flavours: the Chemin-Lerner "tilde"
norms (time norm per block, then the sum over blocks) and the plain
L^rho_T(B) norms (spatial norm first).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import EmptyTrajectory, MissingComponent
from .spectral import SpectralField

SMALL_RADIUS = 3.0 / 4.0
LARGE_RADIUS = 4.0 / 3.0
ANNULUS = (3.0 / 4.0, 8.0 / 3.0)


def _glue(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    a = _glue(t)
    b = _glue(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def chi(r):
    """Radial cut-off: 1 on [0, 3/4], 0 on [4/3, inf), nonincreasing."""
    return 1.0 - smooth_step((np.asarray(r, dtype=float) - SMALL_RADIUS) / (LARGE_RADIUS - SMALL_RADIUS))


def phi_lp(r):
    """Dyadic profile chi(r/2) - chi(r), supported in [3/4, 8/3]."""
    r = np.asarray(r, dtype=float)
    return chi(r / 2.0) - chi(r)


class DyadicPartition:
    """Littlewood-Paley weights phi(2^-j |xi|) for every active block of a grid."""

    def __init__(self, grid):
        self.grid = grid
        r = grid.xi_norm
        nonzero = r[r > 0]
        j_first = math.floor(math.log2(nonzero.min() / ANNULUS[1]))
        j_last = math.ceil(math.log2(nonzero.max() / ANNULUS[0]))
        js, weights = [], []
        for j in range(j_first, j_last + 1):
            w = phi_lp(r / 2.0**j)
            if np.any(w > 0):
                js.append(j)
                weights.append(w)
        self.j = np.array(js)
        self.weights = np.array(weights)
        self._weights_sq = (self.weights**2).reshape(len(js), -1)

    @property
    def j_range(self):
        return int(self.j[0]), int(self.j[-1])

    def profile(self, j):
        idx = np.flatnonzero(self.j == j)
        if idx.size == 0:
            return np.zeros(self.grid.shape)
        return self.weights[idx[0]]

    def partition_residual(self):
        """max over nonzero grid frequencies of |sum_j phi(2^-j xi) - 1|."""
        total = self.weights.sum(axis=0)
        nonzero = self.grid.xi_norm > 0
        return float(np.max(np.abs(total[nonzero] - 1.0)))

    def block_norms(self, f):
        """L^2(T^d) norms of every block of f (components summed)."""
        power = np.sum(np.abs(f.coeffs) ** 2, axis=0).reshape(-1)
        return np.sqrt(self.grid.volume * (self._weights_sq @ power))

    def block_norms_many(self, coeff_stack):
        """Block norms for a stack of coefficient arrays, shape (nt, ncomp, *shape)."""
        power = np.sum(np.abs(coeff_stack) ** 2, axis=1).reshape(coeff_stack.shape[0], -1)
        return np.sqrt(self.grid.volume * (power @ self._weights_sq.T))


@lru_cache(maxsize=16)
def partition_for(grid):
    return DyadicPartition(grid)


def block_weights(j, s, kind="besov", alpha=None):
    """2^{js} or, for the hybrid norm B_alpha^{s+2,s}, min(alpha^2, 2^{2j}) 2^{js}."""
    j = np.asarray(j, dtype=float)
    base = 2.0 ** (j * s)
    if kind == "besov":
        return base
    if kind == "hybrid":
        return np.minimum(alpha**2, 4.0**j) * base
    if kind == "hybrid_smooth":
        return 4.0**j / (1.0 + 4.0**j / alpha**2) * base
    raise ValueError(f"unknown norm kind {kind!r}")


def dyadic_block(f, j):
    """Delta_j f; zero when j is outside the grid's active range."""
    w = partition_for(f.grid).profile(j)
    return f.with_coeffs(f.coeffs * w)


def besov_norm(f, s):
    """Homogeneous B^s_{2,1} norm: sum_j 2^{js} ||Delta_j f||_{L^2}."""
    part = partition_for(f.grid)
    return float(block_weights(part.j, s) @ part.block_norms(f))


def hybrid_norm(f, s, alpha):
    """Hybrid B_alpha^{s+2,s} norm: sum_j min(alpha^2, 2^{2j}) 2^{js} ||Delta_j f||."""
    part = partition_for(f.grid)
    return float(block_weights(part.j, s, "hybrid", alpha) @ part.block_norms(f))


def hybrid_norm_smooth(f, s, alpha):
    """sum_j 2^{2j} / (1 + 2^{2j}/alpha^2) 2^{js} ||Delta_j f|| (capillary symbol sampled at 2^j)."""
    part = partition_for(f.grid)
    return float(block_weights(part.j, s, "hybrid_smooth", alpha) @ part.block_norms(f))


def l2_block_sum(f):
    """(sum_j ||Delta_j f||^2)^(1/2)."""
    return float(np.sqrt(np.sum(partition_for(f.grid).block_norms(f) ** 2)))


@dataclass
class Trajectory:
    """Time samples of solver states with trapezoid weights."""

    times: np.ndarray
    states: list
    meta: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.states)

    @property
    def weights(self):
        t = self.times
        w = np.zeros_like(t)
        if len(t) > 1:
            dt = np.diff(t)
            w[:-1] += dt / 2
            w[1:] += dt / 2
        return w

    @property
    def grid(self):
        return self.states[0].grid

    def field_stack(self, selector):
        return np.stack([select_field(st, selector).coeffs for st in self.states])

    def block_norms(self, selector):
        """Array (n_times, n_blocks) of block L^2 norms, cached per named selector."""
        if not self.states:
            raise EmptyTrajectory("trajectory has no samples")
        key = selector if isinstance(selector, str) else None
        if key is not None and key in self._cache:
            return self._cache[key]
        part = partition_for(self.grid)
        out = part.block_norms_many(self.field_stack(selector))
        if key is not None:
            self._cache[key] = out
        return out


def select_field(state, selector):
    if callable(selector):
        return selector(state)
    if selector == "q":
        return state.q
    if selector == "u":
        return state.u
    if selector == "c":
        if state.c_minus_one is None:
            raise MissingComponent("state carries no order parameter c")
        return state.c_minus_one
    raise ValueError(f"unknown field selector {selector!r}")


def _time_reduce(values, traj, rho):
    if rho == math.inf:
        return values.max(axis=0)
    if rho == 1:
        if len(traj) == 1:
            return np.zeros(values.shape[1:])
        return traj.weights @ values
    raise ValueError("rho must be 1 or inf")


def tilde_norm(traj, selector, s, rho, kind="besov", alpha=None):
    """Chemin-Lerner norm ||f||_{L~^rho_T B^s_{2,1}} (or its hybrid variant)."""
    if len(traj) == 0:
        raise EmptyTrajectory("trajectory has no samples")
    blocks = traj.block_norms(selector)
    per_block = _time_reduce(blocks, traj, rho)
    j = partition_for(traj.grid).j
    return float(block_weights(j, s, kind, alpha) @ per_block)


def time_norm(traj, selector, s, rho, kind="besov", alpha=None):
    """Plain ||f||_{L^rho_T B^s_{2,1}}: spatial norm per time, then the time norm."""
    if len(traj) == 0:
        raise EmptyTrajectory("trajectory has no samples")
    blocks = traj.block_norms(selector)
    j = partition_for(traj.grid).j
    spatial = blocks @ block_weights(j, s, kind, alpha)
    return float(_time_reduce(spatial[:, None], traj, rho)[0])


def e_norm_terms(traj, s, alpha, params):
    nu, nu0 = params.nu, params.nu0
    inf = math.inf
    return {
        "u_Linf_B(s-1)": tilde_norm(traj, "u", s - 1, inf),
        "q_Linf_B(s-1)": tilde_norm(traj, "q", s - 1, inf),
        "q_Linf_B(s)": nu * tilde_norm(traj, "q", s, inf),
        "u_L1_B(s+1)": nu0 * tilde_norm(traj, "u", s + 1, 1),
        "q_L1_Bh(s+1,s-1)": nu * tilde_norm(traj, "q", s - 1, 1, "hybrid", alpha),
        "q_L1_Bh(s+2,s)": nu**2 * tilde_norm(traj, "q", s, 1, "hybrid", alpha),
    }


def c_norm_terms(traj, s, alpha, params):
    nu = params.nu
    inf = math.inf
    return {
        "c_Linf_B(s-1)": tilde_norm(traj, "c", s - 1, inf),
        "c_Linf_B(s)": nu * tilde_norm(traj, "c", s, inf),
        "c_L1_Bh(s+1,s-1)": nu * tilde_norm(traj, "c", s - 1, 1, "hybrid", alpha),
        "c_L1_Bh(s+2,s)": nu**2 * tilde_norm(traj, "c", s, 1, "hybrid", alpha),
    }


def e_norm(traj, s, alpha, params):
    """||(q, u)||_{E_alpha^s} over the trajectory's time span."""
    return float(sum(e_norm_terms(traj, s, alpha, params).values()))


def f_norm(traj, s, alpha, params):
    """||(q, c, u)||_{F_alpha^s}: the E-norm plus the four order-parameter terms."""
    if any(st.c_minus_one is None for st in traj.states):
        raise MissingComponent("f_norm needs the order parameter c on every sample")
    return e_norm(traj, s, alpha, params) + float(sum(c_norm_terms(traj, s, alpha, params).values()))


def norm_report_rows(traj, s, alpha, params):
    """CSV rows (t or "traj", norm_kind, s, alpha, value)."""
    rows = []
    for t, st in zip(traj.times, traj.states):
        rows.append((f"{t:.10g}", "besov_q", s, alpha, besov_norm(st.q, s)))
        rows.append((f"{t:.10g}", "besov_u", s - 1, alpha, besov_norm(st.u, s - 1)))
        rows.append((f"{t:.10g}", "hybrid_q", s, alpha, hybrid_norm(st.q, s, alpha)))
    rows.append(("traj", "E", s, alpha, e_norm(traj, s, alpha, params)))
    if all(st.c_minus_one is not None for st in traj.states):
        rows.append(("traj", "F", s, alpha, f_norm(traj, s, alpha, params)))
    return rows


def single_state_trajectory(state, t=0.0):
    return Trajectory(np.array([t]), [state])


def as_field(grid, coeffs, kind="scalar"):
    return SpectralField(grid, coeffs, kind)
