import itertools
import math

import numpy as np
import pytest

from conftest import random_field
from koplab.errors import ParameterOutOfRange, SingularMultiplier, SizeMismatch
from koplab.spectral import (
    GridSpec,
    SpectralField,
    apply_multiplier,
    capillary_op,
    capillary_symbol,
    dealias,
    dft_forward,
    dft_inverse,
    divergence,
    friedrichs_project,
    gradient,
    helmholtz_recompose,
    helmholtz_split,
    lame_operator,
    laplacian,
    mollifier_phi_alpha,
)


def test_grid_validation():
    with pytest.raises(ParameterOutOfRange):
        GridSpec(4, 16)
    with pytest.raises(ParameterOutOfRange):
        GridSpec(1, 12)
    with pytest.raises(ParameterOutOfRange):
        GridSpec(1, 4)


def test_constant_and_cosine():
    g = GridSpec(1, 32)
    c = dft_forward(np.full(g.shape, 2.5), g)
    assert c.coeffs[0, 0] == pytest.approx(2.5)
    assert np.all(np.abs(c.coeffs[0, 1:]) < 1e-15)
    f = dft_forward(np.cos(2 * np.pi * g.x[0] / g.L), g)
    nz = np.flatnonzero(np.abs(f.coeffs[0]) > 1e-12)
    assert list(nz) == [1, g.n - 1]
    assert f.coeffs[0, 1] == pytest.approx(0.5) and f.coeffs[0, -1] == pytest.approx(0.5)


def test_roundtrip_and_parseval(small_grid, rng):
    g = small_grid
    x = rng.standard_normal((g.d,) + g.shape)
    f = dft_forward(x, g)
    back = dft_inverse(f)
    assert np.max(np.abs(back - x)) <= 1e-12 * np.max(np.abs(x))
    phys = g.volume * np.mean(x**2) * g.d
    assert f.l2_norm() ** 2 == pytest.approx(phys, rel=1e-12)


def test_size_mismatch():
    g = GridSpec(1, 16)
    with pytest.raises(SizeMismatch):
        dft_forward(np.zeros(8), g)


def test_multiplier_basics(rng):
    g = GridSpec(1, 32)
    f = random_field(g, rng)
    assert np.allclose(apply_multiplier(f, 1.0).coeffs, f.coeffs, rtol=0, atol=0)
    cos = dft_forward(np.cos(2 * np.pi * g.x[0] / g.L), g)
    lap = apply_multiplier(cos, lambda xi: -np.sum(xi**2, axis=0))
    assert np.allclose(lap.physical(), -((2 * np.pi / g.L) ** 2) * cos.physical(), atol=1e-15)
    sin = dft_forward(np.sin(2 * np.pi * g.x[0] / g.L), g)
    d1 = apply_multiplier(sin, lambda xi: 1j * xi[0])
    assert np.allclose(d1.physical(), (2 * np.pi / g.L) * np.cos(2 * np.pi * g.x[0] / g.L), atol=1e-15)
    with pytest.raises(SingularMultiplier), np.errstate(divide="ignore"):
        apply_multiplier(f, lambda xi: 1.0 / np.sum(xi**2, axis=0))


def test_odd_multiplier_keeps_field_real(small_grid, rng):
    g = small_grid
    full = rng.standard_normal(g.shape)
    f = dft_forward(full, g)
    out = apply_multiplier(f, lambda xi: 1j * xi[0])
    assert out.hermitian_defect() < 1e-12


def test_derivatives_against_closed_form():
    g = GridSpec(2, 32)
    k = 2 * np.pi / g.L
    x, y = g.x
    f = dft_forward(np.sin(3 * k * x) * np.cos(2 * k * y), g)
    grad = gradient(f).physical()
    assert np.allclose(grad[0], 3 * k * np.cos(3 * k * x) * np.cos(2 * k * y), atol=1e-14)
    assert np.allclose(grad[1], -2 * k * np.sin(3 * k * x) * np.sin(2 * k * y), atol=1e-14)
    assert np.allclose(divergence(gradient(f)).coeffs, laplacian(f).coeffs, atol=1e-16)


def test_lame_operator_on_gradient(rng):
    g = GridSpec(2, 32)
    mu, lam = 0.7, 0.4
    phi = random_field(g, rng)
    grad = gradient(phi)
    # A(grad phi) = (lam + 2 mu) grad Lap phi
    lhs = lame_operator(grad, mu, lam).coeffs
    rhs = (lam + 2 * mu) * gradient(laplacian(phi)).coeffs
    assert np.allclose(lhs, rhs, atol=1e-14 * np.max(np.abs(rhs)))


def test_capillary_and_mollifier(rng):
    g = GridSpec(1, 64)
    q = random_field(g, rng)
    for alpha in (0.5, 3.0, 40.0):
        cap = capillary_op(q, alpha)
        moll = mollifier_phi_alpha(q, alpha)
        assert np.allclose(alpha**2 * (moll.coeffs - q.coeffs), cap.coeffs, atol=1e-12 * alpha**2 * np.max(np.abs(q.coeffs)))
        # elliptic residual of c = phi_alpha * q
        res = g.xi_norm2 * moll.coeffs + alpha**2 * moll.coeffs - alpha**2 * q.coeffs
        assert math.sqrt(np.sum(np.abs(res) ** 2)) <= 1e-12 * alpha**2 * math.sqrt(np.sum(np.abs(q.coeffs) ** 2))
    const = dft_forward(np.full(g.shape, 3.0), g)
    assert np.allclose(mollifier_phi_alpha(const, 2.0).coeffs, const.coeffs)
    assert capillary_op(const, 2.0).coeffs[0, 0] == 0


def test_capillary_symbol_limits():
    x = np.array([0.01, 1.0, 9.0])
    for alpha in (10.0, 100.0, 1e3):
        rel = np.abs(capillary_symbol(x, alpha) + x) / x
        assert np.all(rel <= x / alpha**2 + 1e-15)
    big = np.array([1e8, 1e10])
    assert np.allclose(capillary_symbol(big, 2.0), -4.0, rtol=1e-7)
    assert np.array_equal(capillary_symbol(x, math.inf), -x)


def test_helmholtz_roundtrip(small_grid, rng):
    g = small_grid
    u = random_field(g, rng, "vector", mean_free=False)
    parts = helmholtz_split(u)
    back = helmholtz_recompose(parts)
    assert np.max(np.abs(back.coeffs - u.coeffs)) <= 1e-12 * np.max(np.abs(u.coeffs))
    assert np.allclose(parts.u_mean, u.mean())


def test_helmholtz_gradient_and_solenoidal(rng):
    g = GridSpec(2, 32)
    phi = random_field(g, rng)
    parts = helmholtz_split(gradient(phi))
    assert np.max(np.abs(parts.w.coeffs)) < 1e-14
    psi = random_field(g, rng)
    dpsi = gradient(psi).coeffs
    sol = SpectralField(g, np.array([dpsi[1], -dpsi[0]]), "vector")
    assert np.max(np.abs(helmholtz_split(sol).v.coeffs)) < 1e-14


def test_friedrichs(rng):
    g = GridSpec(1, 128)
    f = random_field(g, rng)
    j2 = friedrichs_project(f, 2)
    assert np.array_equal(friedrichs_project(j2, 2).coeffs, j2.coeffs)
    assert np.array_equal(
        capillary_op(friedrichs_project(f, 1), 3.0).coeffs, friedrichs_project(capillary_op(f, 3.0), 1).coeffs
    )
    inside = f.with_coeffs(f.coeffs * ((g.xi_norm >= 0.5) & (g.xi_norm <= 2.0)))
    assert np.array_equal(friedrichs_project(inside, 2).coeffs, inside.coeffs)
    with pytest.raises(ParameterOutOfRange):
        friedrichs_project(f, -1)


def test_friedrichs_removes_everything_on_a_coarse_band():
    g = GridSpec(1, 16, L=2 * np.pi / 16)  # xi_min = 16: every mode above (8/3) 2^0
    f = dft_forward(np.random.default_rng(0).standard_normal(g.shape), g)
    assert np.all(friedrichs_project(f, 0).coeffs == 0)


def _direct_convolution(a, b, keep):
    """Linear convolution of coefficient arrays restricted to retained modes."""
    n = a.shape[0]
    d = a.ndim
    out = np.zeros_like(a)
    ks = list(itertools.product(range(n), repeat=d))
    wav = lambda k: tuple(((ki + n // 2) % n) - n // 2 for ki in k)
    for k in ks:
        if a[k] == 0:
            continue
        for l in ks:
            if b[l] == 0:
                continue
            m = tuple(x + y for x, y in zip(wav(k), wav(l)))
            if all(-n // 2 <= mi < n // 2 for mi in m):
                idx = tuple(mi % n for mi in m)
                out[idx] += a[k] * b[l]
    return out * keep


@pytest.mark.parametrize("d", [1, 2])
def test_dealiased_product_matches_convolution(d, rng):
    g = GridSpec(d, 16)
    f = dealias(random_field(g, rng))
    h = dealias(random_field(g, rng))
    prod = dealias(dft_forward(f.physical() * h.physical(), g))
    oracle = _direct_convolution(f.coeffs[0], h.coeffs[0], g.dealias_mask)
    assert np.max(np.abs(prod.coeffs[0] - oracle)) <= 1e-13 * np.max(np.abs(oracle))


def test_dealias_kills_nyquist_and_keeps_low_modes(rng):
    g = GridSpec(1, 32)
    f = dft_forward(rng.standard_normal(g.shape), g)
    out = dealias(f)
    assert out.coeffs[0, g.n // 2] == 0
    low = np.abs(g.k[0]) <= g.n // 3
    assert np.array_equal(out.coeffs[0, low], f.coeffs[0, low])
