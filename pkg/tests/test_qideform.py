import math

import numpy as np
import pytest

from dislocwave import abelianize
from dislocwave.charges import flux_1, tower_of, density_1, continuity_residual
from dislocwave.continuum import FieldState, ModelParams, pde_evolve, pde_rhs, source_term
from dislocwave.numerics import Grid1D, quadrature
from dislocwave.qideform import (
    AnomalyReport, DeformationSpec, adapted_kink, anomaly_X, classify, deformed_flux_1,
    deformed_vacua, integrated_source_work, qi_run, shift_D, time_rates,
)
from dislocwave.solutions import kink, kink_state


def test_spec_validation():
    with pytest.raises(ValueError):
        DeformationSpec(kind="bogus")
    with pytest.raises(ValueError):
        DeformationSpec(kind="power-eps", epsilon=-1.0)
    with pytest.raises(ValueError):
        DeformationSpec(kind="shift-D", M=0)
    with pytest.raises(ValueError):
        DeformationSpec(kind="shift-D", family="custom", M=2, g=(np.cos,))
    with pytest.raises(ValueError):
        DeformationSpec(kind="potential-replace", potential="nope")
    with pytest.raises(ValueError):
        DeformationSpec(kind="shift-D", family="anomaly-killing", p=0.0)


def test_neutral_specs():
    assert DeformationSpec().neutral
    assert DeformationSpec(kind="power-eps", epsilon=0.0).neutral
    assert DeformationSpec(kind="shift-D", kappa=0.0).neutral
    assert not DeformationSpec(kind="shift-D", kappa=0.1).neutral
    assert DeformationSpec(kind="shift-D", family="cos-half", kappa=0.2, M=1).to_dict() == \
        {"kind": "shift-D", "M": 1, "family": "cos-half", "kappa": 0.2}


def test_zero_shift_reduces_to_integrable(kink0, kp):
    spec = DeformationSpec(kind="shift-D", family="constant", kappa=0.0)
    assert np.all(shift_D(kink0, spec)[0] == 0.0)
    assert np.array_equal(pde_rhs(kink0, kp.params(), spec), pde_rhs(kink0, kp.params()))


def test_constant_shift(kink0, kp):
    spec = DeformationSpec(kind="shift-D", family="constant", kappa=0.3)
    D, guarded = shift_D(kink0, spec)
    assert np.all(D == 0.3) and guarded == 0.0
    p = kp.params()
    assert np.allclose(source_term(kink0, p, spec), np.sin(kink0.u) - 1.2)


def test_higher_shift_summands_guarded(kink0):
    spec = DeformationSpec(kind="shift-D", family="constant", kappa=0.1, M=3)
    D, guarded = shift_D(kink0, spec)
    assert np.all(np.isfinite(D))
    assert 0.0 < guarded < 1.0
    tw = tower_of(kink0, 2)
    r = 0.5 * kink0.ux
    i = np.argmin(np.abs(kink0.grid.x))
    expected = 0.1 + 0.1 * r[i] / tw.f[0][i] + 0.1 * r[i] / tw.f[1][i] \
        if abs(tw.f[1][i]) > 1e-10 else 0.1 + 0.1 * r[i] / tw.f[0][i]
    assert D[i] == pytest.approx(expected)


def test_custom_family(kink0):
    spec = DeformationSpec(kind="shift-D", family="custom", M=1, g=(lambda u: 0.5 * np.sin(u),))
    assert np.allclose(shift_D(kink0, spec)[0], 0.5 * np.sin(kink0.u))


def test_anomaly_killing_is_M_times_a_minus(kink0):
    spec = DeformationSpec(kind="shift-D", family="anomaly-killing", M=2, p=1.0, lam=1j)
    D, _ = shift_D(kink0, spec)
    am = abelianize.solve_gauge0(kink0, 1j).a_minus
    assert np.allclose(D, 2 * am.real, rtol=1e-12, atol=1e-14)


def test_anomaly_killing_rejects_complex_a_minus(kink0):
    spec = DeformationSpec(kind="shift-D", family="anomaly-killing", lam=0.3 + 1j)
    with pytest.raises(ValueError):
        shift_D(kink0, spec)


def test_anomaly_X_cases(kink0):
    g = kink0.grid
    assert np.max(np.abs(anomaly_X(np.full(g.n_points, 0.7), g))) < 1e-12
    bump = np.exp(-(g.x - 1.0) ** 2)
    assert abs(quadrature(anomaly_X(bump, g), g)) < 1e-10
    am = abelianize.solve_gauge0(kink0, 1j).a_minus.real
    X = anomaly_X(am, g)
    fd = np.gradient(am, g.dx)
    assert np.max(np.abs(X - fd)[5:-5]) < 1e-3


def test_deformed_flux_reduces_at_zero_eps(short_run, kp):
    p = kp.params()
    s = short_run[3]
    spec = DeformationSpec(kind="power-eps", epsilon=0.0)
    assert np.allclose(deformed_flux_1(s, p, spec), flux_1(s, p), rtol=0, atol=1e-14)
    g = s.grid
    vac = FieldState(np.zeros(g.n_points), g)
    assert np.allclose(deformed_flux_1(vac, p, DeformationSpec(kind="power-eps", epsilon=0.5)), 0.25)


def test_deformed_flux_satisfies_deformed_law(kink0, kp):
    p = kp.params()
    spec = DeformationSpec(kind="power-eps", epsilon=0.5)
    w = pde_evolve(kink0, p, spec, dt=1e-4, n_steps=2)
    plain = continuity_residual(w, density_1, lambda s: flux_1(s, p))
    bent = continuity_residual(w, density_1, lambda s: deformed_flux_1(s, p, spec))
    assert np.max(np.abs(bent)) < 1e-3
    assert np.max(np.abs(bent)) < 1e-2 * np.max(np.abs(plain))


def test_deformed_vacua_zero_the_source(kp):
    p = kp.params()
    spec = DeformationSpec(kind="shift-D", family="cos-half", kappa=0.1)
    lo, hi = deformed_vacua(spec, p)
    for v in (lo, hi):
        assert abs(np.sin(v) - 4 * 0.1 * np.cos(v / 2)) < 1e-12
    assert abs(lo) < 1.0 and abs(hi - 2 * np.pi) < 1.0
    assert deformed_vacua(DeformationSpec(), p) == (0.0, 2 * math.pi)
    with pytest.raises(ValueError):
        deformed_vacua(DeformationSpec(kind="shift-D", kappa=2.0), p)


def test_adapted_kink_spans_vacua(kink0):
    u = adapted_kink(kink0.u, (0.1, 6.0))
    assert u[0] == pytest.approx(0.1) and u[-1] == pytest.approx(6.0)


def test_integrated_source_work_constant_shift(kink0):
    spec = DeformationSpec(kind="shift-D", kappa=0.25)
    assert integrated_source_work(kink0, ModelParams(), spec) == pytest.approx(
        0.25 * (kink0.u[-1] - kink0.u[0]), rel=1e-10)


def test_classify_and_rates():
    assert classify({"Q1": 1e-6, "Q2": 5e-4, "Q3": 1e-2}) == \
        {"Q1": "conserved", "Q2": "marginal", "Q3": "anomalous"}
    assert np.allclose(time_rates([0, 1, 2, 3], [0, 1, 4, 9]), [2, 4])


def test_qi_run_integrable_is_conserved(kink0, kp):
    res = qi_run(kink0, kp.params(), DeformationSpec(), T=0.1, dt=1e-4, stride=200, lam=1j)
    assert set(res.classification.values()) == {"conserved"}
    assert res.q0 is not None and res.q0.drift() < 1e-6
    lines = res.report.to_ndjson(classification=res.classification).splitlines()
    assert '"summary": true' in lines[-1]
    assert len(res.report.q0_exact) == len(res.report.q0_rate)


def test_qi_shift_run_rates(kp):
    # the exact transfer-matrix rate follows the finite-difference rate of Q0
    g = Grid1D(-30.0, 30.0, 1024)
    p = kp.params()
    spec = DeformationSpec(kind="shift-D", family="cos-half", kappa=0.1)
    s0 = FieldState(adapted_kink(kink(g.x, 0.0, kp), deformed_vacua(spec, p)), g)
    res = qi_run(s0, p, spec, T=0.1, dt=1e-4, stride=100, lam=1j)
    fd = np.array(res.report.q0_rate)
    ex = np.array(res.report.q0_exact)
    assert np.max(np.abs(ex - fd) / np.abs(fd)) < 0.05
    assert max(res.report.X_norm) > 0


def test_report_serialisation():
    rep = AnomalyReport(times=[0.0], X_norm=[0.5])
    assert '"max_X_norm": 0.5' in rep.to_ndjson()
