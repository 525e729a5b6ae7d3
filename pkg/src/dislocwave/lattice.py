"""Semi-discrete mixed FPU/Frenkel-Kontorova chain.

    y_i'' = (y_{i+1} - 2 y_i + y_{i-1}) [k + a3 (y_{i+1} - y_{i-1})
            + b4 (y_{i+1}^2 + y_i^2 + y_{i-1}^2 - y_{i+1} y_i - y_{i+1} y_{i-1} - y_i y_{i-1})]
            - f0 sin(2 pi y_i / a)

This is ``-dE/dy_i`` for the bond potential ``V(d) = k d^2/2 + a3 d^3/3 + b4 d^4/4``
(``V'(d+) - V'(d-)`` factors as the bracket above) plus the on-site term
``(a f0 / 2 pi)(1 - cos(2 pi y / a))``.

Boundaries act through ghost sites ``y_0`` and ``y_{N+1}``: ``fixed-ends``
pins them to the initial end values (so two extra bonds to fixed walls
enter the energy), ``free-ends`` copies the neighbours (no force, no bond).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dislocwave.numerics import NumericalBlowUp, check_finite

BOUNDARIES = ("fixed-ends", "free-ends")
MIN_SITES = 2


@dataclass(frozen=True)
class LatticeParams:
    k: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    f0: float = 0.0
    a: float = 2 * math.pi
    boundary: str = "fixed-ends"

    def __post_init__(self):
        for name in ("k", "alpha", "beta", "f0", "a"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.f0 != 0.0 and not self.a > 0:
            raise ValueError("on-site period a must be positive when f0 != 0")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")

    def to_dict(self) -> dict:
        return {"k": self.k, "alpha": self.alpha, "beta": self.beta, "f0": self.f0,
                "a": self.a, "boundary": self.boundary}


@dataclass(frozen=True, eq=False)
class LatticeState:
    y: np.ndarray
    v: np.ndarray
    t: float = 0.0
    # ghost values used by fixed ends; default to the end values of y
    walls: tuple | None = field(default=None)

    def __post_init__(self):
        y = check_finite(self.y, "y").copy()
        v = check_finite(self.v, "v").copy()
        if y.ndim != 1 or y.shape != v.shape:
            raise ValueError("y and v must be 1-D arrays of equal length")
        if y.size < MIN_SITES:
            raise ValueError(f"need at least {MIN_SITES} sites, got {y.size}")
        y.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "v", v)
        if self.walls is None:
            object.__setattr__(self, "walls", (float(y[0]), float(y[-1])))

    @property
    def n_sites(self) -> int:
        return self.y.size


def _ghosts(y, walls, boundary: str):
    if boundary == "fixed-ends":
        return walls[0], walls[1]
    return y[0], y[-1]


def _accel(y, p: LatticeParams, walls) -> np.ndarray:
    lo, hi = _ghosts(y, walls, p.boundary)
    ye = np.concatenate(([lo], y, [hi]))
    yp, y0, ym = ye[2:], ye[1:-1], ye[:-2]
    lap = yp - 2.0 * y0 + ym
    mult = p.k + p.alpha * (yp - ym) + p.beta * (yp * yp + y0 * y0 + ym * ym - yp * y0 - yp * ym - y0 * ym)
    return lap * mult - p.f0 * np.sin(2 * np.pi * y0 / p.a)


def lattice_accel(s: LatticeState, p: LatticeParams) -> np.ndarray:
    """Accelerations ``y_i''``; non-finite output raises :class:`NumericalBlowUp`."""
    out = _accel(s.y, p, s.walls)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowUp(f"non-finite lattice force at t={s.t}")
    return out


def bond_potential(d, p: LatticeParams):
    return 0.5 * p.k * d**2 + p.alpha * d**3 / 3.0 + 0.25 * p.beta * d**4


def onsite_potential(y, p: LatticeParams):
    if p.f0 == 0.0:
        return np.zeros_like(np.asarray(y, dtype=float))
    return (p.a * p.f0 / (2 * np.pi)) * (1.0 - np.cos(2 * np.pi * np.asarray(y) / p.a))


def potential_energy(y, p: LatticeParams, walls=None) -> float:
    y = np.asarray(y, dtype=float)
    if walls is None:
        walls = (float(y[0]), float(y[-1]))
    if p.boundary == "fixed-ends":
        ye = np.concatenate(([walls[0]], y, [walls[1]]))
    else:
        ye = y
    return float(np.sum(bond_potential(np.diff(ye), p)) + np.sum(onsite_potential(y, p)))


def lattice_energy(s: LatticeState, p: LatticeParams) -> float:
    return 0.5 * float(np.sum(s.v * s.v)) + potential_energy(s.y, p, s.walls)


def lattice_evolve(s: LatticeState, p: LatticeParams, dt: float, n_steps: int,
                   stride: int = 1, callback=None) -> list[LatticeState]:
    """RK4 on the first-order pairs ``(y, v)``; snapshots every ``stride`` steps.

    The final state is always recorded. A non-finite state raises
    :class:`NumericalBlowUp` with ``step`` set and ``last_good`` attached.
    """
    if not (math.isfinite(dt) and dt != 0):
        raise ValueError("dt must be finite and non-zero")
    if n_steps < 0 or stride < 1:
        raise ValueError("need n_steps >= 0 and stride >= 1")
    walls = s.walls
    y = np.array(s.y, dtype=float)
    v = np.array(s.v, dtype=float)
    traj = [s]
    last = s
    h = dt
    for step in range(1, n_steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            a1 = _accel(y, p, walls)
            y2, v2 = y + 0.5 * h * v, v + 0.5 * h * a1
            a2 = _accel(y2, p, walls)
            y3, v3 = y + 0.5 * h * v2, v + 0.5 * h * a2
            a3 = _accel(y3, p, walls)
            y4, v4 = y + h * v3, v + h * a3
            a4 = _accel(y4, p, walls)
            y = y + (h / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4)
            v = v + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(v))):
            err = NumericalBlowUp(f"lattice blow-up at step {step}", step=step)
            err.last_good = last
            raise err
        if step % stride == 0 or step == n_steps:
            last = LatticeState(y, v, s.t + step * dt, walls)
            traj.append(last)
            if callback is not None:
                callback(last)
    return traj


def fk_reference_accel(y, k: float, f0: float, a: float, lo: float, hi: float) -> np.ndarray:
    """Plain Frenkel-Kontorova force ``k (second difference) - f0 sin(2 pi y / a)``."""
    y = np.asarray(y, dtype=float)
    ye = np.concatenate(([lo], y, [hi]))
    return (ye[2:] - 2.0 * ye[1:-1] + ye[:-2]) * k - f0 * np.sin(2 * np.pi * ye[1:-1] / a)


def sine_gordon_kink(n_sites: int, spacing: float, p: LatticeParams, velocity: float = 0.0,
                     center: float | None = None) -> LatticeState:
    """Lattice samples of the continuum-limit kink of the FK chain (``alpha = beta = 0``).

    With ``x_i = i * spacing`` the chain approximates ``y_tt = c^2 y_xx - f0 sin(2 pi y/a)``
    with ``c^2 = k spacing^2``, whose kink is
    ``(a/2pi) 4 arctan(exp(m gamma (x - X - v t)))``, ``m = sqrt(2 pi f0 / a) / c``.
    """
    if p.f0 <= 0 or p.k <= 0:
        raise ValueError("the sine-Gordon kink needs k > 0 and f0 > 0")
    c = math.sqrt(p.k) * spacing
    if abs(velocity) >= c:
        raise ValueError("kink velocity must be below the sound speed")
    m = math.sqrt(2 * math.pi * p.f0 / p.a) / c
    lorentz = 1.0 / math.sqrt(1.0 - (velocity / c) ** 2)
    x = np.arange(n_sites) * spacing
    x0 = 0.5 * x[-1] if center is None else center
    th = m * lorentz * (x - x0)
    scale = p.a / (2 * np.pi)
    y = scale * 4 * np.arctan(np.exp(th))
    # y_t = -v y_x
    v = -velocity * scale * 2 * m * lorentz / np.cosh(th)
    return LatticeState(y, v, 0.0, (0.0, p.a))


def kink_position(s: LatticeState, spacing: float, p: LatticeParams) -> float:
    """Position where the chain crosses half a period ``a/2`` (linear interpolation)."""
    d = s.y - 0.5 * p.a
    idx = np.nonzero(np.sign(d[:-1]) != np.sign(d[1:]))[0]
    if idx.size == 0:
        raise ValueError("no half-period crossing")
    i = int(idx[0])
    return spacing * (i - d[i] / (d[i + 1] - d[i]))

