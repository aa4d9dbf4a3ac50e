"""Acceptance criteria 1-10, one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines are repeated in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import expm

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, direct_nonlinear_oracle, random_field  # noqa: E402
from koplab import bessel, linear, solver  # noqa: E402
from koplab import littlewood_paley as lp  # noqa: E402
from koplab.experiments import ExperimentConfig, run_convergence_sweep, sweep_tolerances  # noqa: E402
from koplab.model import DEFAULT_PARAMS, make_initial_data, make_params  # noqa: E402
from koplab.spectral import GridSpec, capillary_op, dealias  # noqa: E402


def record(n, checks, elapsed=None):
    """checks: list of (label, ok, detail)."""
    ok = all(c[1] for c in checks)
    failed = [f"{c[0]} ({c[2]})" for c in checks if not c[1]]
    summary = "; ".join(f"{c[0]}: {c[2]}" for c in checks)
    timing = f" [{elapsed:.1f} s]" if elapsed is not None else ""
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'}{timing} {summary}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, "failed: " + "; ".join(failed)


def test_criterion_1_kernel_fourier_pair():
    t0 = time.perf_counter()
    xi = np.linspace(0.0, 8.0, 33)
    checks = []
    for d, tol in ((1, 1e-8), (2, 1e-6), (3, 1e-6)):
        err = bessel.hankel_check(d, xi)
        checks.append((f"hankel d={d}", err <= tol, f"{err:.2e} <= {tol:.0e}"))
    r = np.geomspace(1e-4, 40, 500)
    e1 = float(np.max(np.abs(bessel.kernel_phi(1, r) / (0.5 * np.exp(-r)) - 1)))
    e3 = float(np.max(np.abs(bessel.kernel_phi(3, r) / (np.exp(-r) / (4 * np.pi * r)) - 1)))
    checks.append(("closed form d=1", e1 <= 1e-12, f"{e1:.2e}"))
    checks.append(("closed form d=3", e3 <= 1e-10, f"{e3:.2e}"))
    elapsed = time.perf_counter() - t0
    checks.append(("runtime", elapsed < 60, f"{elapsed:.1f} s < 60 s"))
    record(1, checks, elapsed)


def test_criterion_2_bessel_bounds():
    x = np.geomspace(1e-4, 50, 1000)
    checks = []
    for nu in (0.5, 1.0, 1.5):
        ratio = bessel.monotone_profile(nu, x) / bessel.lower_bound_constant(nu)
        worst = float(ratio.min())
        checks.append((f"lower bound nu={nu:g}", worst >= 1 - 1e-12, f"min ratio {worst:.6f}"))
    xs = np.geomspace(1e-2, 40, 50)
    k0, k1, k2 = (bessel.bessel_K(n, xs) for n in (0, 1, 2))
    rec = float(np.max(np.abs(k0 - k2 + 2 * k1 / xs) / k2))
    checks.append(("recurrence", rec <= 1e-8, f"{rec:.1e}"))
    h = 1e-3 * np.minimum(xs, 1.0)
    k = lambda v: bessel.bessel_K(0, v)
    fd = (k(xs - 2 * h) - 8 * k(xs - h) + 8 * k(xs + h) - k(xs + 2 * h)) / (12 * h)
    der = float(np.max(np.abs(fd + k1) / k1))
    checks.append(("K0' = -K1", der <= 1e-8, f"{der:.1e}"))
    record(2, checks)


def test_criterion_3_littlewood_paley():
    checks = []
    worst_res = 0.0
    ortho = True
    for g in (GridSpec(1, 256), GridSpec(2, 64), GridSpec(3, 32)):
        part = lp.partition_for(g)
        worst_res = max(worst_res, part.partition_residual())
        for a in part.j:
            for b in part.j:
                if abs(a - b) > 1 and np.any(part.profile(a) * part.profile(b) != 0):
                    ortho = False
    checks.append(("partition residual", worst_res <= 1e-10, f"{worst_res:.1e}"))
    checks.append(("Delta_j Delta_l = 0 for |j-l| > 1", ortho, "exact zeros" if ortho else "overlap"))

    g = GridSpec(1, 256)
    part = lp.partition_for(g)
    sandwich = True
    for alpha in (1, 10, 100):
        a2 = Fraction(alpha) ** 2
        for j in part.j:
            x = Fraction(2) ** (2 * int(j))
            smooth = x / (1 + x / a2)
            m = min(a2, x)
            sandwich &= m / 2 <= smooth <= m
    checks.append(("exact sandwich", sandwich, f"{len(part.j)} shells x 3 alphas"))

    rng = np.random.default_rng(3)
    s = 0.5
    ratios = {}
    for alpha in (1.0, 10.0, 100.0):
        vals = []
        for _ in range(100):
            f = random_field(g, rng, slope=rng.uniform(-2, 1))
            vals.append(lp.hybrid_norm(f, s, alpha) / lp.besov_norm(capillary_op(f, alpha), s))
        ratios[alpha] = (min(vals), max(vals))
    lo = min(v[0] for v in ratios.values())
    hi = max(v[1] for v in ratios.values())
    detail = ", ".join(f"alpha={a:g}: [{v[0]:.3f}, {v[1]:.3f}]" for a, v in ratios.items())
    checks.append(("hybrid / multiplier norm in [0.49, 1.01]", 0.49 <= lo and hi <= 1.01, detail))
    record(3, checks)


def test_criterion_4_linear_eigenstructure():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst_tr = worst_det = worst_rem = worst_oracle = worst_comp = 0.0
    for _ in range(1000):
        params = make_params(rng.uniform(0.1, 3), rng.uniform(0, 3), rng.uniform(0.1, 3), rng.uniform(0.1, 3))
        alpha = 10 ** rng.uniform(-1, 3)
        th = linear.threshold_y(params, alpha)
        x = np.array([10 ** rng.uniform(-3, math.log10(50 * th.y_alpha)), th.x_alpha * (1 + rng.uniform(-1e-4, 1e-4))])
        md = linear.modes(x, params, alpha)
        stiff = params.p + params.kappa * linear.capillary_m(x, alpha)
        tr = -params.nu * x
        det = x * stiff
        worst_tr = max(worst_tr, float(np.max(np.abs(md.lambda_plus + md.lambda_minus - tr) / np.abs(tr))))
        worst_det = max(worst_det, float(np.max(np.abs(md.lambda_plus * md.lambda_minus - det) / det)))
        hi = md.g >= 0
        if hi.any():
            R = md.R[hi]
            rem = params.nu**2 * x[hi] / 4 * (1 - R) * (1 + R)
            worst_rem = max(worst_rem, float(np.max(np.abs(rem - stiff[hi]) / stiff[hi])))
        r = np.sqrt(x)
        t = 10 ** rng.uniform(-3, 1)
        P = linear.propagator(r, t, params, alpha)
        for i in range(2):
            E = expm(t * linear.system_matrix(r[i], params, alpha))
            worst_oracle = max(worst_oracle, float(np.max(np.abs(P[i] - E))))
        s1, s2 = rng.uniform(0, 1, 2)
        comp = linear.propagator(r, s1, params, alpha) @ linear.propagator(r, s2, params, alpha)
        worst_comp = max(worst_comp, float(np.max(np.abs(comp - linear.propagator(r, s1 + s2, params, alpha)))))
    elapsed = time.perf_counter() - t0
    record(4, [
        ("trace", worst_tr <= 1e-12, f"{worst_tr:.1e}"),
        ("det", worst_det <= 1e-12, f"{worst_det:.1e}"),
        ("p + kappa m = (nu^2 x/4)(1-R)(1+R)", worst_rem <= 1e-12, f"{worst_rem:.1e}"),
        ("semigroup vs expm", worst_oracle <= 1e-8, f"{worst_oracle:.1e}"),
        ("composition", worst_comp <= 1e-10, f"{worst_comp:.1e}"),
        ("runtime", elapsed < 60, f"{elapsed:.1f} s"),
    ], elapsed)


def test_criterion_5_thresholds():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        params = make_params(rng.uniform(0.1, 5), rng.uniform(0, 5), rng.uniform(0.1, 5), rng.uniform(0.1, 5))
        alpha = 10 ** rng.uniform(-1, 4)
        beta = rng.uniform(0, 0.95)
        a = linear.threshold_x_beta(beta, params, alpha)
        b = linear.bisect_threshold(beta, params, alpha)
        worst = max(worst, abs(a - b) / b)
    checks = [("closed form vs bisection", worst <= 1e-10, f"{worst:.1e}")]
    for params in (make_params(1, 0, 1, 1), make_params(1, 0, 0.5, 1), make_params(2, 0, 1, 1)):
        branch = linear.threshold_branch(0.5, params)
        ratio = linear.threshold_x_beta(0.5, params, 1e3) / linear.threshold_asymptote(0.5, params, 1e3)
        checks.append((f"branch {branch}", abs(ratio - 1) <= 0.02, f"ratio {ratio:.5f}"))
    alphas = np.geomspace(8, 1e6, 40)
    inside = all(linear.threshold_y(DEFAULT_PARAMS, a).y_within_bounds() for a in alphas)
    onset = linear.alpha0_onset(DEFAULT_PARAMS)
    checks.append(("alpha^2 <= y <= 2 alpha^2 for alpha >= 8", inside, f"alpha0 onset {onset:g}"))
    unit = linear.threshold_y(make_params(1, 0, 1, 1), 1e3).y_alpha / 1e6
    checks.append(("M = 1: y/alpha^2 at alpha=1e3", abs(unit - 1) <= 0.05, f"{unit:.4f}"))
    record(5, checks)


def test_criterion_6_solver_correctness():
    grid = GridSpec(1, 128)
    params = DEFAULT_PARAMS
    model = solver.OP(4.0)
    zero = make_initial_data(grid, 1e-3, (-3, 0), 1)
    zero = solver._make_state(grid, zero.q.coeffs[0] * 0, zero.u.coeffs * 0, model, False)
    out = solver.integrate(zero, model, params, solver.StepConfig(0.1, 1.0)).states[-1]
    fixed = bool(np.all(out.q.coeffs == 0) and np.all(out.u.coeffs == 0))

    st = make_initial_data(grid, 0.05, (-3, 0), 2)
    traj = solver.integrate(st, model, params, solver.StepConfig(0.05, 10.0))
    drift = max(abs(s.q.mean()[0] - st.q.mean()[0]) for s in traj.states)

    finals = [solver.integrate(st, model, params, solver.StepConfig(dt, 1.0)).states[-1].q.coeffs
              for dt in (0.1, 0.05, 0.025)]
    ratio = np.max(np.abs(finals[0] - finals[1])) / np.max(np.abs(finals[1] - finals[2]))
    order = math.log2(ratio)

    g16 = GridSpec(1, 16)
    rng = np.random.default_rng(6)
    flat = make_params(0.8, 0.3, 1.0, 1.0, gamma=2.0)
    q = dealias(random_field(g16, rng)) * 0.05
    u = dealias(random_field(g16, rng, "vector")) * 0.05
    dq, du = solver.rhs_nonlinear(solver.State(q, u), model, flat)
    dq_o, du_o = direct_nonlinear_oracle(g16, q, u, flat)
    conv = max(np.max(np.abs(dq.coeffs[0] - dq_o)) / np.max(np.abs(dq_o)),
               np.max(np.abs(du.coeffs[0] - du_o)) / np.max(np.abs(du_o)))

    amp = 1e-6
    small = make_initial_data(grid, amp, (-3, 0), 7)
    tr = solver.integrate(small, model, params, solver.StepConfig(0.05, 1.0), with_order_parameter=False)
    dev = 0.0
    for t, s in zip(tr.times, tr.states):
        lin = solver.linear_evolve(small, t, model, params)
        dev = max(dev, np.max(np.abs(s.q.coeffs - lin.q.coeffs)) / np.max(np.abs(lin.q.coeffs)))
    C = dev / amp
    record(6, [
        ("equilibrium", fixed, "exact zeros" if fixed else "moved"),
        ("mean drift over T=10", drift <= 1e-10, f"{drift:.1e}"),
        ("dt order", abs(order - 2) <= 0.5, f"{order:.3f}"),
        ("n=16 convolution oracle", conv <= 1e-12, f"{conv:.1e}"),
        ("amplitude 1e-6 vs semigroup", C <= 10, f"rel. deviation {dev:.1e} = C * 1e-6, C = {C:.3f}"),
    ])


def test_criterion_7_order_parameter_coupling():
    grid = GridSpec(1, 256)
    st = make_initial_data(grid, 1e-3, (-3, 0), 12345)
    worst = {}
    for alpha in (1.0, 8.0, 64.0):
        traj = solver.integrate(st, solver.OP(alpha), DEFAULT_PARAMS, solver.StepConfig(0.05, 2.0))
        worst[alpha] = max(solver.elliptic_residual(s.c_minus_one, s.q, alpha) for s in traj.states)
    detail = ", ".join(f"alpha={a:g}: {w:.1e}" for a, w in worst.items())
    record(7, [("residual / (alpha^2 ||rho||)", max(worst.values()) <= 1e-10, detail)])


@pytest.fixture(scope="module")
def sweep_1d():
    t0 = time.perf_counter()
    rep = run_convergence_sweep(ExperimentConfig())
    return rep, time.perf_counter() - t0


def test_criterion_8_rate_alpha_minus_two(sweep_1d):
    rep, elapsed = sweep_1d
    fit = rep.fits["op_L1"]
    sup = [r["op_sup"] for r in rep.rows]
    record(8, [
        ("runs", rep.checks["all_runs_ok"], f"{len(rep.rows)} alphas"),
        ("slope -2 +/- 0.3", abs(fit.slope + 2) <= 0.3, f"{fit.slope:+.3f} +/- {fit.ci95:.3f}"),
        ("sup norm decreasing", rep.checks["op_sup_decreasing"], " > ".join(f"{v:.2e}" for v in sup)),
        ("runtime", elapsed <= 600, f"{elapsed:.1f} s"),
    ], elapsed)


def test_criterion_9_rate_alpha_minus_h(sweep_1d):
    rep, elapsed = sweep_1d
    f_h = rep.fits["F_diff_h"]
    f0 = [r["F_diff_0"] for r in rep.rows]
    t0 = time.perf_counter()
    cfg2 = ExperimentConfig(
        grid=GridSpec(2, 128), step=solver.StepConfig(0.01, 5.0, record_every=5), alphas=(4.0, 8.0, 16.0)
    )
    rep2 = run_convergence_sweep(cfg2)
    elapsed2 = time.perf_counter() - t0
    lim1 = sweep_tolerances(1)["f_slope_max"]
    lim2 = sweep_tolerances(2)["f_slope_max"]
    total = elapsed + elapsed2
    record(9, [
        ("d=1 slope (h=1/2)", f_h.slope <= lim1, f"{f_h.slope:+.3f} <= {lim1:+.1f}"),
        ("d=1 h=0 norm decreasing", rep.checks["f0_decreasing"], " > ".join(f"{v:.2e}" for v in f0)),
        ("d=2 runs", rep2.checks["all_runs_ok"], "n=128, alpha 4,8,16"),
        ("d=2 slope (h=1/2)", rep2.fits["F_diff_h"].slope <= lim2, f"{rep2.fits['F_diff_h'].slope:+.3f} <= {lim2:+.1f}"),
        ("runtime", total <= 2700, f"{total:.1f} s"),
    ], total)


def test_criterion_10_remainder_bound():
    g = GridSpec(2, 64)
    rng = np.random.default_rng(10)
    params = DEFAULT_PARAMS
    s = g.d / 2
    worst = {}
    for h in (0.0, 0.25, 0.5, 1.0):
        w = 0.0
        for alpha in (1.0, 10.0, 100.0):
            for _ in range(100):
                q = random_field(g, rng, slope=rng.uniform(-4, 0))
                lhs = lp.besov_norm(solver.remainder_R_alpha(q, params, alpha), s - h - 1)
                rhs = params.kappa * alpha**-h * lp.besov_norm(q, s + 2)
                w = max(w, lhs / rhs)
        worst[h] = w
    record(10, [(f"h={h:g}", w <= 1.0, f"max lhs/rhs {w:.3f}") for h, w in worst.items()])


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
