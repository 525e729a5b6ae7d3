import math

import numpy as np
import pytest
import sympy as sp

from dislocwave.lattice import (
    LatticeParams, LatticeState, fk_reference_accel, kink_position, lattice_accel, lattice_energy,
    lattice_evolve, potential_energy, sine_gordon_kink,
)
from dislocwave.numerics import NumericalBlowUp


def test_force_is_minus_energy_gradient_symbolically():
    k, a3, b4, f0, a = sp.symbols("k a3 b4 f0 a", positive=True)
    y = sp.symbols("y0:5")
    V = lambda d: k * d**2 / 2 + a3 * d**3 / 3 + b4 * d**4 / 4
    E = sum(V(y[i + 1] - y[i]) for i in range(4)) \
        + sum(a * f0 / (2 * sp.pi) * (1 - sp.cos(2 * sp.pi * yi / a)) for yi in y)
    ym, y0, yp = y[1], y[2], y[3]
    claimed = (yp - 2 * y0 + ym) * (k + a3 * (yp - ym) + b4 * (yp**2 + y0**2 + ym**2 - yp * y0
                                                              - yp * ym - y0 * ym)) \
        - f0 * sp.sin(2 * sp.pi * y0 / a)
    assert sp.simplify(-sp.diff(E, y0) - claimed) == 0


def test_zero_state_zero_force():
    p = LatticeParams(k=1.3, alpha=0.4, beta=0.7, f0=0.5, a=1.0)
    assert np.all(lattice_accel(LatticeState(np.zeros(6), np.zeros(6)), p) == 0.0)


def test_harmonic_middle_site():
    p = LatticeParams(k=1.0)
    acc = lattice_accel(LatticeState(np.array([0.0, 1.0, 0.0]), np.zeros(3)), p)
    assert acc[1] == -2.0


def test_uniform_state_only_onsite_force():
    c = 0.3
    p = LatticeParams(k=2.0, alpha=1.0, beta=1.0, f0=1.0, a=1.0, boundary="free-ends")
    acc = lattice_accel(LatticeState(np.full(7, c), np.zeros(7)), p)
    assert np.allclose(acc, -np.sin(2 * np.pi * c), atol=1e-15)


def test_energy_cases():
    p = LatticeParams()
    assert lattice_energy(LatticeState(np.zeros(4), np.zeros(4)), p) == 0.0
    free = LatticeParams(k=1.0, boundary="free-ends")
    assert lattice_energy(LatticeState(np.array([0.0, 1.0]), np.zeros(2)), free) == 0.5


@pytest.mark.parametrize("boundary", ["fixed-ends", "free-ends"])
def test_force_matches_gradient(boundary, rng):
    p = LatticeParams(k=1.2, alpha=0.3, beta=0.8, f0=0.4, a=1.5, boundary=boundary)
    y = 0.2 * rng.standard_normal(12)
    s = LatticeState(y, np.zeros(12), walls=(0.05, -0.1))
    acc = lattice_accel(s, p)
    h = 1e-5
    grad = np.empty(12)
    for i in range(12):
        e = np.zeros(12)
        e[i] = h
        grad[i] = (potential_energy(y + e, p, s.walls) - potential_energy(y - e, p, s.walls)) / (2 * h)
    assert np.max(np.abs(-grad - acc)) < 1e-6


def test_fk_reduction_bitwise(rng):
    for boundary in ("fixed-ends", "free-ends"):
        p = LatticeParams(k=0.7, f0=0.9, a=2.0, boundary=boundary)
        y = rng.uniform(-2, 2, 20)
        s = LatticeState(y, np.zeros(20), walls=(0.0, 2.0))
        lo, hi = (0.0, 2.0) if boundary == "fixed-ends" else (y[0], y[-1])
        ref = fk_reference_accel(y, p.k, p.f0, p.a, lo, hi)
        assert np.array_equal(lattice_accel(s, p), ref)


def test_zero_state_stays_zero():
    traj = lattice_evolve(LatticeState(np.zeros(5), np.zeros(5)), LatticeParams(beta=1.0, f0=1.0),
                          0.01, 500, stride=100)
    assert all(np.all(s.y == 0) and np.all(s.v == 0) for s in traj)
    assert traj[-1].t == pytest.approx(5.0)


def test_pluck_energy_drift():
    p = LatticeParams(k=1.0)
    y = np.zeros(16)
    y[8] = 0.1
    traj = lattice_evolve(LatticeState(y, np.zeros(16)), p, 1e-3, 10_000, stride=1000)
    E = np.array([lattice_energy(s, p) for s in traj])
    assert np.max(np.abs(E - E[0])) / E[0] < 1e-8


def test_random_state_energy_drift(rng):
    p = LatticeParams(k=1.0, alpha=0.25, beta=0.5, f0=0.3, a=1.0)
    s = LatticeState(0.05 * rng.standard_normal(32), 0.05 * rng.standard_normal(32))
    traj = lattice_evolve(s, p, 1e-2, 10_000, stride=500)
    E = np.array([lattice_energy(t, p) for t in traj])
    assert np.max(np.abs(E - E[0])) / E[0] < 1e-6


def test_evolve_records_final_state_and_callback():
    seen = []
    traj = lattice_evolve(LatticeState(np.ones(3), np.zeros(3)), LatticeParams(), 0.1, 7, stride=3,
                          callback=seen.append)
    assert [round(s.t, 10) for s in traj] == [0.0, 0.3, 0.6, 0.7]
    assert len(seen) == 3


def test_blowup_carries_last_good():
    p = LatticeParams(k=1.0, beta=50.0)
    s = LatticeState(np.array([0.0, 3.0, -3.0, 0.0]), np.zeros(4))
    with pytest.raises(NumericalBlowUp) as info:
        lattice_evolve(s, p, 1.0, 1000)
    assert info.value.step is not None
    assert np.all(np.isfinite(info.value.last_good.y))


def test_validation():
    with pytest.raises(ValueError):
        LatticeState(np.zeros(1), np.zeros(1))
    with pytest.raises(ValueError):
        LatticeState(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        LatticeParams(boundary="periodic")
    with pytest.raises(ValueError):
        LatticeParams(f0=1.0, a=0.0)
    with pytest.raises(ValueError):
        lattice_evolve(LatticeState(np.zeros(3), np.zeros(3)), LatticeParams(), 0.0, 1)


def test_state_is_value_semantic():
    y = np.zeros(4)
    s = LatticeState(y, np.zeros(4))
    y[0] = 1.0
    assert s.y[0] == 0.0
    with pytest.raises(ValueError):
        s.y[0] = 2.0


def test_sine_gordon_kink_speed():
    # near the continuum limit the discrete kink moves at the prescribed speed
    h = 0.05
    p = LatticeParams(k=1 / h**2, f0=1.0, a=2 * math.pi)
    v = 0.4
    s = sine_gordon_kink(801, h, p, velocity=v)
    traj = lattice_evolve(s, p, 2e-3, 2500, stride=250)
    xs = [kink_position(t, h, p) for t in traj]
    ts = [t.t for t in traj]
    measured = np.polyfit(ts, xs, 1)[0]
    assert abs(measured - v) / v < 0.05
