import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dislocwave import kernels
from dislocwave.numerics import (
    Grid1D, NumericalBlowUp, antiderivative, diff, fd_weights, quadrature, rk4_step, stencil,
)


def test_grid_basics():
    g = Grid1D(-1.0, 1.0, 11)
    assert g.dx == pytest.approx(0.2)
    assert g.x[0] == -1.0 and g.x[-1] == pytest.approx(1.0)
    assert g.refined(2).n_points == 21


@pytest.mark.parametrize("n", [-5, 0, 7, 3.5])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, n)


def test_grid_rejects_bad_interval():
    with pytest.raises(ValueError):
        Grid1D(1.0, 1.0, 16)
    with pytest.raises(ValueError):
        Grid1D(0.0, np.inf, 16)


def test_fd_weights_classic():
    assert np.allclose(fd_weights([-1, 0, 1], 2), [1, -2, 1])
    assert np.allclose(fd_weights([-2, -1, 0, 1, 2], 1), np.array([1, -8, 0, 8, -1]) / 12)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_stencil_rows_exact_on_polynomials(order):
    s = stencil(order)
    for rows, offset in ((s.left, 0), (s.right, None)):
        width = rows.shape[1]
        for i, w in enumerate(rows):
            k = np.arange(width) - (i if offset == 0 else width - s.half + i)
            for deg in range(order + 4):
                exact = math.factorial(deg) / math.factorial(deg - order) * 0.0**(deg - order) \
                    if deg >= order else 0.0
                assert w @ (k.astype(float) ** deg) == pytest.approx(exact, abs=1e-9)


def test_diff_constant_is_zero():
    g = Grid1D(-2.0, 3.0, 64)
    for order in (1, 2, 3, 4):
        # exact up to round-off amplified by dx**-order
        assert np.max(np.abs(diff(np.full(64, 2.5), g, order))) < 1e-13 / g.dx**order


def test_diff_cubic_third_derivative():
    for g in (Grid1D(-1.3, 2.1, 35), Grid1D(0.0, 3.0, 31), Grid1D(-1.0, 1.0, 21)):
        assert np.max(np.abs(diff(g.x**3, g, 3) - 6.0)) < 1e-10


def test_diff_sine_accuracy():
    g = Grid1D(-np.pi, np.pi, 2048)
    assert np.max(np.abs(diff(np.sin(g.x), g, 1) - np.cos(g.x))) < 1e-8


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_diff_fourth_order_convergence(order):
    # coarse enough that round-off (~eps / dx**order) stays below truncation
    ns = (33, 65, 129) if order == 4 else (33, 65, 129, 257)
    errs, hs = [], []
    for n in ns:
        g = Grid1D(0.0, 2.0, n)
        exact = np.real((1j * 1.7) ** order * np.exp(1j * 1.7 * g.x))
        errs.append(np.max(np.abs(diff(np.cos(1.7 * g.x), g, order) - exact)))
        hs.append(g.dx)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope > 3.5


def test_diff_validates():
    g = Grid1D(0.0, 1.0, 16)
    with pytest.raises(ValueError):
        diff(np.zeros(16), g, 5)
    with pytest.raises(ValueError):
        diff(np.zeros(15), g, 1)
    with pytest.raises(NumericalBlowUp):
        diff(np.full(16, np.nan), g, 1)


def test_antiderivative_zero_and_cos():
    g = Grid1D(-4.0, 4.0, 2048)
    assert np.all(antiderivative(np.zeros(2048), g) == 0.0)
    F = antiderivative(np.cos(g.x), g)
    assert np.max(np.abs(F - (np.sin(g.x) + np.sin(4.0)))) < 1e-8


def test_antiderivative_sech2():
    g = Grid1D(-20.0, 20.0, 2048)
    F = antiderivative(1.0 / np.cosh(g.x) ** 2, g)
    assert F[0] == 0.0
    assert abs(F[-1] - 2 * np.tanh(20.0)) < 1e-6


def test_quadrature_cases():
    assert quadrature(np.ones(11), Grid1D(0.0, 1.0, 11)) == 1.0
    g = Grid1D(-20.0, 20.0, 2048)
    assert abs(quadrature(1.0 / np.cosh(2 * g.x) ** 2, g) - 1.0) < 1e-6
    assert abs(quadrature(np.sin(g.x) * np.exp(-g.x**2), g)) < 1e-14


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 5), st.integers(16, 300))
def test_quadrature_odd_functions_vanish(c, w, n):
    g = Grid1D(c - w, c + w, n)
    f = (g.x - c) ** 3 * np.exp(-(g.x - c) ** 2)
    f = 0.5 * (f - f[::-1])
    assert abs(quadrature(f, g)) < 1e-12 * max(1.0, np.max(np.abs(f)) * w)


def test_rk4_cases():
    assert rk4_step(lambda t, y: 0 * y, np.array([1.0, 2.0]), 0.1).tolist() == [1.0, 2.0]
    y = 1.0
    for k in range(10):
        y = rk4_step(lambda t, v: v, y, 0.1, 0.1 * k)
    # one RK4 step of y' = y multiplies by the degree-4 Taylor polynomial of e^h
    assert y == pytest.approx((1 + 0.1 + 0.01 / 2 + 0.001 / 6 + 0.0001 / 24) ** 10, rel=1e-14)
    assert abs(y - math.e) < 2.1e-6
    assert abs(rk4_step(lambda t, v: -v * v, 1.0, 0.1) - 1 / 1.1) < 1e-6


def test_rk4_blowup_and_dt():
    with pytest.raises(NumericalBlowUp):
        rk4_step(lambda t, v: v * 1e308, 1e10, 1.0)
    with pytest.raises(ValueError):
        rk4_step(lambda t, v: v, 1.0, 0.0)


@pytest.mark.skipif(not hasattr(kernels, "use_backend"), reason="no backend switch")
def test_backends_agree(rng):
    try:
        kernels.use_backend("cython")
    except ImportError:
        pytest.skip("compiled backend not built")
    st3 = stencil(3)
    f = rng.standard_normal(300)
    src = rng.standard_normal(300)
    q = rng.standard_normal(300) * 0.1 + 0j
    out = {}
    for name in ("python", "cython"):
        kernels.use_backend(name)
        out[name] = (kernels.apply_stencil(f, st3.center, st3.left, st3.right),
                     kernels.apply_reflected(f, st3.center),
                     kernels.corrected_cumtrapz(src, f, 0.1),
                     kernels.integrated_rhs(f, src, 0.1, 0.3, 1.0, 0.5, 3.5, 2.0,
                                            stencil(1).center, st3.center, 0.01),
                     kernels.gauge0_sweep(q, -q, 1j, 0.05)[0])
    kernels.use_backend("cython")
    for a, b in zip(out["python"], out["cython"]):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)
