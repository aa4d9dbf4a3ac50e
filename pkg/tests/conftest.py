import numpy as np
import pytest

from koplab.model import coeff_I
from koplab.spectral import GridSpec, SpectralField

ACCEPTANCE_LINES = []


def random_field(grid, rng, kind="scalar", slope=0.0, mean_free=True):
    """Real random field on the dealiased modes, spectrum ~ (1 + |xi|)^slope."""
    ncomp = {"scalar": 1, "vector": grid.d, "tensor": grid.d**2}[kind]
    shape = (ncomp,) + grid.shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c = c * grid.dealias_mask * (1.0 + grid.xi_norm) ** slope
    c = 0.5 * (c + np.conj(grid.reflect(c)))
    if mean_free:
        c[(slice(None),) + (0,) * grid.d] = 0.0
    return SpectralField(grid, c, kind)


def direct_nonlinear_oracle(grid, q, u, params):
    """(dq, du) for a 1-D grid by explicit convolution sums and an O(n^2) DFT.

    Assumes K(q) = 0 (gamma = 2) so that du = -u u_x - I(q) A u.
    """
    n = grid.n
    wav = ((np.arange(n) + n // 2) % n) - n // 2
    xi = grid.xi[0]
    qh, uh = q.coeffs[0], u.coeffs[0]
    flux = np.zeros(n, complex)
    adv = np.zeros(n, complex)
    for a in range(n):
        for b in range(n):
            m = wav[a] + wav[b]
            if -n // 2 <= m < n // 2:
                flux[m % n] += qh[a] * uh[b]
                adv[m % n] += uh[a] * 1j * xi[b] * uh[b]
    keep = grid.dealias_mask
    k = np.arange(n)
    forward = np.exp(-2j * np.pi * np.outer(k, k) / n) / n
    inverse = np.exp(2j * np.pi * np.outer(k, k) / n)
    q_phys = (inverse @ qh).real
    Au_phys = (inverse @ (-(params.lam + 2 * params.mu) * xi**2 * uh)).real
    visc = forward @ (coeff_I(q_phys) * Au_phys)
    return -1j * xi * flux * keep, (-adv - visc) * keep


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[1, 2, 3], ids=["d1", "d2", "d3"])
def small_grid(request):
    n = {1: 64, 2: 32, 3: 16}[request.param]
    return GridSpec(request.param, n)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
