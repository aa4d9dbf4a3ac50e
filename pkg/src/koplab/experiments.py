"""Configuration, alpha-sweeps, validation reports and rate fitting."""
from __future__ import annotations

import configparser
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import bessel, linear
from .errors import DegenerateFit, KoplabError, ParameterOutOfRange
from .littlewood_paley import Trajectory, c_norm_terms, f_norm, time_norm, tilde_norm
from .model import DEFAULT_PARAMS, State, make_initial_data, make_params
from .solver import K, OP, StepConfig, integrate
from .spectral import DEFAULT_PERIOD, GridSpec

log = logging.getLogger(__name__)

DEFAULT_BAND = (-3, 0)


@dataclass(frozen=True)
class ExperimentConfig:
    params: object = DEFAULT_PARAMS
    grid: GridSpec = GridSpec(1, 256)
    step: StepConfig = StepConfig(dt=0.01, T=5.0)
    alphas: tuple = (4.0, 8.0, 16.0, 32.0, 64.0)
    h: float = 0.5
    seed: int = 12345
    amplitude: float = 1e-3
    band: tuple = DEFAULT_BAND
    output_dir: str = "koplab_out"

    def __post_init__(self):
        a = list(self.alphas)
        if any(x <= 0 for x in a) or any(b <= x for x, b in zip(a, a[1:])):
            raise ParameterOutOfRange("alphas must be positive and strictly increasing")
        d = self.grid.d
        if not 0 < self.h <= 1 or (self.h == 1 and d < 3):
            raise ParameterOutOfRange("h must lie in (0, 1), or (0, 1] when d >= 3")

    @property
    def model_extension(self):
        """The convergence analysis covers d >= 2; d = 1 runs extend it."""
        return self.grid.d < 2


def _floats(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def load_config(path):
    """Read a sectioned key=value file ([fluid], [grid], [time], [sweep], [output])."""
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    fl = cp["fluid"] if cp.has_section("fluid") else {}
    params = make_params(
        float(fl.get("mu", DEFAULT_PARAMS.mu)),
        float(fl.get("lambda", DEFAULT_PARAMS.lam)),
        float(fl.get("kappa", DEFAULT_PARAMS.kappa)),
        float(fl.get("p", DEFAULT_PARAMS.p)),
        float(fl.get("gamma", DEFAULT_PARAMS.gamma)),
    )
    gr = cp["grid"] if cp.has_section("grid") else {}
    grid = GridSpec(int(gr.get("d", 1)), int(gr.get("n", 256)), float(gr.get("L", DEFAULT_PERIOD)))
    tm = cp["time"] if cp.has_section("time") else {}
    n_trunc = tm.get("n_trunc", "off")
    step = StepConfig(
        dt=float(tm.get("dt", 0.01)),
        T=float(tm.get("T", 5.0)),
        n_trunc=None if str(n_trunc).lower() in ("off", "none", "") else int(n_trunc),
        record_every=int(tm.get("record_every", 1)),
    )
    sw = cp["sweep"] if cp.has_section("sweep") else {}
    band = sw.get("band", None)
    out = cp["output"] if cp.has_section("output") else {}
    return ExperimentConfig(
        params=params,
        grid=grid,
        step=step,
        alphas=_floats(sw.get("alphas", "4,8,16,32,64")),
        h=float(sw.get("h", 0.5)),
        seed=int(sw.get("seed", 12345)),
        amplitude=float(sw.get("amplitude", 1e-3)),
        band=tuple(int(v) for v in band.split(",")) if band else DEFAULT_BAND,
        output_dir=out.get("dir", "koplab_out"),
    )


# ------------------------------------------------------------- fitting

@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    ci95: float
    n: int


def fit_rate(pairs):
    """Least-squares fit of log v = a log alpha + b with a 95% t-interval on a."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ParameterOutOfRange("fit_rate needs at least 3 points")
    a = np.array([p[0] for p in pairs], dtype=float)
    v = np.array([p[1] for p in pairs], dtype=float)
    if np.any(a <= 0) or np.any(v <= 0):
        raise ParameterOutOfRange("fit_rate needs positive alphas and values")
    if np.all(a == a[0]):
        raise DegenerateFit("all alphas are equal")
    res = stats.linregress(np.log(a), np.log(v))
    n = len(a)
    ci = float(stats.t.ppf(0.975, n - 2) * res.stderr) if n > 2 else math.inf
    return FitResult(float(res.slope), float(res.intercept), ci, n)


# ------------------------------------------------------------- sweep

def order_parameter_defect(traj):
    """Trajectory of c - rho = (c - 1) - q (stored in the q slot)."""
    states = [State(st.c_minus_one - st.q, st.u * 0.0) for st in traj.states]
    return Trajectory(traj.times, states)


def difference_trajectory(traj_op, traj_k):
    """(q_a - q, u_a - u, c_a - rho) sampled at shared times."""
    if len(traj_op) != len(traj_k) or not np.allclose(traj_op.times, traj_k.times, rtol=0, atol=1e-12):
        raise ParameterOutOfRange("trajectories must share their sample times")
    states = [
        State(a.q - b.q, a.u - b.u, a.c_minus_one - b.q) for a, b in zip(traj_op.states, traj_k.states)
    ]
    return Trajectory(traj_op.times, states)


def alpha_metrics(traj_op, traj_k, cfg):
    d = cfg.grid.d
    nu = cfg.params.nu
    s = d / 2.0
    alpha = traj_op.meta["alpha"]
    defect = order_parameter_defect(traj_op)
    diff = difference_trajectory(traj_op, traj_k)
    l1_low = time_norm(defect, "q", s - 1, 1)
    l1_high = time_norm(defect, "q", s, 1)
    return {
        "alpha": alpha,
        "op_L1": nu * l1_low + nu**2 * l1_high,
        "op_sup": time_norm(defect, "q", s - 1, math.inf),
        "op_L1_tilde": nu * tilde_norm(defect, "q", s - 1, 1) + nu**2 * tilde_norm(defect, "q", s, 1),
        "F_diff_h": f_norm(diff, s - cfg.h, alpha, cfg.params),
        "F_diff_0": f_norm(diff, s, alpha, cfg.params),
        "F_c_terms_h": sum(c_norm_terms(diff, s - cfg.h, alpha, cfg.params).values()),
    }


SWEEP_COLUMNS = ("alpha", "status", "op_L1", "op_sup", "op_L1_tilde", "F_diff_h", "F_diff_0", "F_c_terms_h")


@dataclass
class RateReport:
    rows: list
    fits: dict
    checks: dict
    model_extension: bool
    h: float
    amplitude: float
    meta: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.checks.values())

    def csv_rows(self):
        out = []
        for r in self.rows:
            out.append(tuple(r.get(c, math.nan) for c in SWEEP_COLUMNS))
        return out

    def fit_rows(self):
        return [(name, f.slope, f.intercept, f.ci95, f.n) for name, f in self.fits.items()]


def _worker_count(n_tasks):
    env = os.environ.get("KOPLAB_WORKERS")
    limit = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(limit, n_tasks))


_REFERENCE = {}


def _init_worker(cfg, state0, traj_k):
    _REFERENCE["cfg"], _REFERENCE["state0"], _REFERENCE["traj_k"] = cfg, state0, traj_k


def _run_alpha(alpha):
    cfg, state0, traj_k = _REFERENCE["cfg"], _REFERENCE["state0"], _REFERENCE["traj_k"]
    try:
        traj = integrate(state0, OP(alpha), cfg.params, cfg.step)
        row = alpha_metrics(traj, traj_k, cfg)
        row["status"] = "ok"
    except KoplabError as exc:
        row = {"alpha": alpha, "status": f"failed: {type(exc).__name__}"}
    return row


def sweep_tolerances(d):
    """(target, half-width) for the alpha^-2 slope and the upper limit for the alpha^-h slope."""
    return {"op_slope": (-2.0, 0.3), "f_slope_max": -0.5 + (0.2 if d == 1 else 0.3)}


def run_convergence_sweep(cfg, workers=None):
    """Solve OP(alpha) for every alpha and K once; fit the two convergence rates."""
    state0 = make_initial_data(cfg.grid, cfg.amplitude, cfg.band, cfg.seed)
    traj_k = integrate(state0, K(), cfg.params, cfg.step)
    workers = workers or _worker_count(len(cfg.alphas))
    if workers == 1:
        _init_worker(cfg, state0, traj_k)
        rows = [_run_alpha(a) for a in cfg.alphas]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(cfg, state0, traj_k)) as pool:
            rows = list(pool.map(_run_alpha, cfg.alphas))
    good = [r for r in rows if r["status"] == "ok"]
    fits = {}
    if len(good) >= 3:
        for key in ("op_L1", "op_sup", "F_diff_h", "F_diff_0"):
            fits[key] = fit_rate([(r["alpha"], r[key]) for r in good])
    tol = sweep_tolerances(cfg.grid.d)
    target, width = tol["op_slope"]
    checks = {"all_runs_ok": len(good) == len(rows)}
    if fits:
        checks["op_slope"] = abs(fits["op_L1"].slope - target) <= width
        checks["f_slope"] = fits["F_diff_h"].slope <= tol["f_slope_max"]
        sup = [r["op_sup"] for r in good]
        checks["op_sup_decreasing"] = all(b < a for a, b in zip(sup, sup[1:]))
        f0 = [r["F_diff_0"] for r in good]
        checks["f0_decreasing"] = all(b < a for a, b in zip(f0, f0[1:]))
    return RateReport(
        rows,
        fits,
        checks,
        cfg.model_extension,
        cfg.h,
        cfg.amplitude,
        meta={"d": cfg.grid.d, "n": cfg.grid.n, "T": cfg.step.T, "dt": cfg.step.dt_effective},
    )


# ------------------------------------------------------------- reports

@dataclass
class LinearReport:
    oracle_rows: list
    envelope_rows: list
    max_oracle_error: float
    max_trace_residual: float
    max_det_residual: float
    ok: bool


def run_linear_validation(cfg, n_samples=1000, seed=0, alpha=None):
    """Semigroup vs matrix exponential, eigenvalue identities and decay envelopes."""
    params = cfg.params
    alpha = float(alpha if alpha is not None else cfg.alphas[len(cfg.alphas) // 2])
    rng = np.random.default_rng(seed)
    th = linear.threshold_y(params, alpha)
    x = np.concatenate([
        10 ** rng.uniform(-3, math.log10(100 * th.y_alpha), n_samples),
        th.x_alpha * (1 + rng.uniform(-1e-4, 1e-4, 50)),
        [th.x_alpha, th.y_alpha],
    ])
    md = linear.modes(x, params, alpha)
    tr = np.abs(md.lambda_plus + md.lambda_minus + params.nu * x) / (params.nu * x)
    det_ref = x * (params.p + params.kappa * linear.capillary_m(x, alpha))
    det = np.abs(md.lambda_plus * md.lambda_minus - det_ref) / det_ref
    oracle_rows = []
    worst = 0.0
    r = np.sqrt(x)
    for t in (0.0, 1e-3, 0.1, 1.0, 10.0):
        P = linear.propagator(r, t, params, alpha)
        E = linear.expm2x2(t * linear.system_matrix(r, params, alpha))
        err = np.max(np.abs(P - E), axis=(-2, -1))
        worst = max(worst, float(err.max()))
        oracle_rows.append((t, float(err.max()), float(np.median(err))))
    xi_grid = np.sqrt(np.geomspace(th.x_alpha / 100, th.y_alpha * 100, 40))
    env = linear.envelope_report(params, alpha, xi_grid, (0.5, 2.0, 8.0))
    ok = worst <= 1e-8 and tr.max() <= 1e-12 and det.max() <= 1e-12 and all(e.ok for e in env)
    return LinearReport(oracle_rows, env, worst, float(tr.max()), float(det.max()), ok)


THRESHOLD_COLUMNS = (
    "alpha", "x_alpha", "y_alpha", "m", "y_lo", "y_hi", "y_within_bounds", "y_over_alpha2",
    "x_asymptote", "x_over_asymptote",
)


def run_threshold_report(params, alphas):
    rows = []
    for a in alphas:
        th = linear.threshold_y(params, a)
        lo, hi = th.y_bounds()
        asym = linear.threshold_asymptote(0.0, params, a)
        rows.append((float(a), th.x_alpha, th.y_alpha, th.m, lo, hi, th.y_within_bounds(),
                     th.y_alpha / a**2, asym, th.x_alpha / asym))
    return rows, linear.alpha0_onset(params)


KERNEL_COLUMNS = ("d", "check", "value", "tolerance", "ok")


def run_kernel_validation(d_list=(1, 2, 3)):
    rows = []
    xi = np.linspace(0.0, 8.0, 17)
    r = np.geomspace(1e-3, 30.0, 200)
    for d in d_list:
        tol = 1e-8 if d == 1 else 1e-6
        err = bessel.hankel_check(d, xi)
        rows.append((d, "hankel_max_error", err, tol, err <= tol))
        if d == 1:
            e = float(np.max(np.abs(bessel.kernel_phi(1, r) / (0.5 * np.exp(-r)) - 1)))
            rows.append((d, "closed_form_rel_error", e, 1e-12, e <= 1e-12))
        if d == 3:
            e = float(np.max(np.abs(bessel.kernel_phi(3, r) / (np.exp(-r) / (4 * np.pi * r)) - 1)))
            rows.append((d, "closed_form_rel_error", e, 1e-10, e <= 1e-10))
    xs = np.geomspace(1e-3, 50.0, 1000)
    for nu in (0.5, 1.0, 1.5):
        ratio = float(np.min(bessel.monotone_profile(nu, xs) / bessel.lower_bound_constant(nu)))
        rows.append(("-", f"lower_bound_min_ratio_nu={nu:g}", ratio, 1e-12, ratio >= 1 - 1e-12))
    rec = max(
        abs(bessel.bessel_K(0, x) - bessel.bessel_K(2, x) + 2 / x * bessel.bessel_K(1, x)) / bessel.bessel_K(2, x)
        for x in (0.5, 1.0, 5.0)
    )
    rows.append(("-", "recurrence_rel_residual", rec, 1e-8, rec <= 1e-8))
    h = 1e-3
    der = 0.0
    for x in (0.5, 1.0, 2.0, 5.0):
        k = lambda v: bessel.bessel_K(0, v)
        fd = (k(x - 2 * h) - 8 * k(x - h) + 8 * k(x + h) - k(x + 2 * h)) / (12 * h)
        der = max(der, abs(fd + bessel.bessel_K(1, x)) / bessel.bessel_K(1, x))
    rows.append(("-", "derivative_K0_rel_residual", der, 1e-8, der <= 1e-8))
    return rows
