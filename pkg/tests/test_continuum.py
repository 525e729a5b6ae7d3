import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dislocwave.continuum import (
    FieldState, ModelParams, kink_center, l2_distance, lax_coeffs, max_stable_dt, pde_evolve,
    pde_residual, pde_rhs,
)
from dislocwave.numerics import Grid1D, NumericalBlowUp
from dislocwave.solutions import KinkParams, kink, kink_derivatives, kink_state


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(alpha=0.1, integrable=True)
    with pytest.raises(ValueError):
        ModelParams(beta=np.inf)
    p = ModelParams.integrable_sector(0.7, 2.0)
    assert p.gamma == 1.4 and p.in_integrable_sector


def test_field_state_copies_and_freezes():
    g = Grid1D(0.0, 1.0, 16)
    u = np.zeros(16)
    s = FieldState(u, g)
    u[0] = 1.0
    assert s.u[0] == 0.0
    with pytest.raises(ValueError):
        s.u[0] = 1.0
    with pytest.raises(NumericalBlowUp):
        FieldState(np.full(16, np.nan), g)
    with pytest.raises(ValueError):
        FieldState(np.zeros(15), g)


def test_check_vacua(kink0):
    assert kink0.check_vacua()
    g = kink0.grid
    assert not FieldState(np.full(g.n_points, 1.0), g).check_vacua()


def test_vacuum_rhs_zero(grid):
    assert np.all(pde_rhs(FieldState(np.zeros(grid.n_points), grid), ModelParams()) == 0.0)


def test_constant_field_gives_ramp():
    g = Grid1D(-5.0, 5.0, 101)
    s = FieldState(np.full(101, np.pi / 2), g)
    out = pde_rhs(s, ModelParams(alpha=0.0, beta=0.0, gamma=0.0, delta=1.0))
    assert np.max(np.abs(out - (g.x - g.x_min))) < 1e-12


def test_kink_rhs_converges_fourth_order(kp):
    p = kp.params()
    errs, hs = [], []
    for n in (513, 1025, 2049):
        g = Grid1D(-30.0, 30.0, n)
        s = kink_state(g, 0.0, kp)
        d = kink_derivatives(g.x, 0.0, kp)
        # exact u_t = -v u_x with the crossing velocity v
        assert np.allclose(d["ut"], -kp.velocity * d["ux"])
        errs.append(np.max(np.abs(pde_rhs(s, p) - d["ut"])))
        hs.append(g.dx)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope > 3.5
    assert errs[-1] < 1e-5


def test_residual_of_analytic_kink(kp):
    p = kp.params()
    errs = []
    for n in (1024, 2048):
        g = Grid1D(-30.0, 30.0, n)
        s = kink_state(g, 0.0, kp)
        errs.append(np.max(np.abs(pde_residual(s, kink_derivatives(g.x, 0.0, kp)["ut"], p))))
    # the 4th-order truncation of u_xxxx sets the floor: ~1.8e-5 at 2048 points
    assert errs[1] < 2e-5
    assert errs[0] / errs[1] > 2**3.5


def test_residual_zero_on_vacuum(grid):
    s = FieldState(np.zeros(grid.n_points), grid)
    assert np.all(pde_residual(s, np.zeros(grid.n_points), ModelParams()) == 0.0)


def test_rhs_consistent_with_residual_for_smooth_data():
    # u_t from the once-integrated form satisfies the differential form up to truncation
    p = ModelParams(alpha=0.3, beta=1.0, gamma=1.5, delta=1.0)
    worst = []
    for n in (512, 1024, 2048):
        g = Grid1D(-10.0, 10.0, n)
        u = np.exp(-g.x**2) * (1 + 0.3 * np.sin(3 * g.x))
        s = FieldState(u, g)
        res = pde_residual(s, pde_rhs(s, p), p)
        m = n // 10
        worst.append(np.max(np.abs(res[m:-m])))
    assert worst[2] < worst[1] < worst[0]
    assert worst[1] / worst[2] > 8


@settings(max_examples=25, deadline=None)
@given(st.integers(-3, 3), st.floats(0.2, 2.0), st.floats(-1.0, 1.0))
def test_rhs_periodic_in_u(k, beta, alpha):
    g = Grid1D(-8.0, 8.0, 256)
    u = 2.0 * np.tanh(g.x) + 0.5 * np.exp(-g.x**2)
    p = ModelParams(alpha=alpha, beta=beta, gamma=2 * beta, delta=1.0)
    a = pde_rhs(FieldState(u, g), p)
    b = pde_rhs(FieldState(u + 2 * np.pi * k, g), p)
    assert np.max(np.abs(a - b)) < 1e-9 * (1 + np.max(np.abs(a)))


def test_lax_coeffs_vacuum_and_pi(grid):
    p = ModelParams.integrable_sector(1.0, 1.0)
    L = lax_coeffs(FieldState(np.zeros(grid.n_points), grid), p)
    L.check_identities()
    assert np.all(L.B_m1 == 0) and np.all(L.C_m1 == 0) and np.all(L.B_0 == 0)
    assert np.allclose(L.A_m1, -0.25)
    L = lax_coeffs(FieldState(np.full(grid.n_points, np.pi), grid), p)
    assert np.allclose(L.A_m1, 0.25)
    assert np.max(np.abs(L.B_m1)) < 1e-15


def test_lax_coeffs_on_kink(kink0, kp):
    L = lax_coeffs(kink0, kp.params())
    i0 = np.argmin(np.abs(kink0.grid.x))
    assert kink0.grid.x[i0] == pytest.approx(0.0, abs=0.02)
    # q(0) = -u_x(0)/2 = -2 mu; the node nearest x=0 is within dx/2
    assert L.q[i0] == pytest.approx(-1.0, abs=1e-3)
    A, B, C = L.evaluate(1j * kp.mu)
    assert np.isrealobj(A)
    assert A[0] == pytest.approx(kp.A)


def test_lax_coeffs_need_integrable_sector(kink0):
    with pytest.raises(ValueError):
        lax_coeffs(kink0, ModelParams(alpha=0.5))


def test_vacuum_stays_vacuum(grid):
    s = FieldState(np.zeros(grid.n_points), grid)
    traj = pde_evolve(s, ModelParams(), dt=1e-4, n_steps=1000, stride=500)
    assert len(traj) == 3
    assert np.all(traj[-1].u == 0.0)


def test_backward_forward(kink0, kp):
    p = kp.params()
    fwd = pde_evolve(kink0, p, dt=1e-4, n_steps=500, stride=500)
    back = pde_evolve(fwd[-1], p, dt=-1e-4, n_steps=500, stride=500)
    assert back[-1].t == pytest.approx(0.0, abs=1e-12)
    assert l2_distance(back[-1].u, kink0.u, kink0.grid) < 1e-6


def test_short_run_tracks_exact_kink(short_run, kp):
    for s in short_run:
        assert l2_distance(s.u, kink(s.grid.x, s.t, kp), s.grid) < 1e-4
    c = [kink_center(s) for s in short_run]
    v = np.polyfit([s.t for s in short_run], c, 1)[0]
    assert v == pytest.approx(kp.velocity, rel=1e-3)


def test_substeps_follow_stability_bound(grid):
    p = ModelParams.integrable_sector()
    assert max_stable_dt(grid, p) == pytest.approx(0.5 * grid.dx**3 / 2.0)
    assert max_stable_dt(grid, ModelParams(gamma=0.0, beta=0.0)) == math.inf


def test_forced_unstable_substep_warns(kink0, kp):
    with pytest.warns(RuntimeWarning):
        pde_evolve(kink0, kp.params(), dt=1e-4, n_steps=1, substeps=1)


def test_blowup_reports_step(kink0, kp):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(NumericalBlowUp) as info:
            pde_evolve(kink0, kp.params(), dt=1e-3, n_steps=2000, substeps=1)
    assert info.value.step >= 1
    assert info.value.last_good.t < info.value.step * 1e-3


def test_evolve_validation(kink0, kp):
    with pytest.raises(ValueError):
        pde_evolve(kink0, kp.params(), dt=0.0)
    with pytest.raises(ValueError):
        pde_evolve(kink0, kp.params(), stride=0)


def test_kink_center_and_l2(kink0):
    assert kink_center(kink0) == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(ValueError):
        kink_center(FieldState(np.zeros(kink0.grid.n_points), kink0.grid))
    assert l2_distance(kink0.u, kink0.u, kink0.grid) == 0.0
