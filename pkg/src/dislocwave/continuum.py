"""Continuum equation ``u_xt + a u_x u_xx + 3b u_x^2 u_xx + g u_xxxx = d sin u``.

The field ``u`` is evolved in its once-integrated form

    u_t = int_{x_min}^x S(u) dx' - (a/2) u_x^2 - b u_x^3 - g u_xxx,

with ``S(u) = d sin u`` (possibly deformed, see :mod:`dislocwave.qideform`).
The integration constant vanishes because ``u_t`` and all derivatives are
zero in the left vacuum.

Inside the evolution the derivatives use centered stencils on the field
extended by odd reflection about each end value (ghost ``2 u_0 - u_k``).
The one-sided stencils of :func:`dislocwave.numerics.diff` give a
third-derivative operator with growing boundary modes, which the
left-anchored integral amplifies toward the right end. Even reflection is
stable too but puts a slope kink at the boundary that seeds odd-even noise.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from dislocwave import kernels
from dislocwave.numerics import Grid1D, NumericalBlowUp, check_finite, diff, stencil

log = logging.getLogger(__name__)

# the odd-reflected centered third-derivative operator has a purely imaginary
# spectrum up to 4.61/dx^3; RK4 is then stable up to ~0.61 dx^3/gamma
C_STAB = 0.5
# Kreiss-Oliger coefficient: the term DISSIPATION/(64 dx) * (6th difference of u)
# damps the odd-even mode (invisible to centered odd stencils) at rate
# DISSIPATION/dx and perturbs the equation only at O(dx^5).
DISSIPATION = 0.5


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 0.0
    beta: float = 1.0
    gamma: float = 2.0
    delta: float = 1.0
    integrable: bool = False

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.integrable and not (self.alpha == 0.0 and self.gamma == 2.0 * self.beta):
            raise ValueError("integrable flag requires alpha == 0 and gamma == 2*beta")

    @classmethod
    def integrable_sector(cls, beta: float = 1.0, delta: float = 1.0) -> "ModelParams":
        return cls(alpha=0.0, beta=beta, gamma=2.0 * beta, delta=delta, integrable=True)

    @property
    def in_integrable_sector(self) -> bool:
        return self.alpha == 0.0 and self.gamma == 2.0 * self.beta

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
                "delta": self.delta, "integrable": self.integrable}


@dataclass(frozen=True, eq=False)
class FieldState:
    """Displacement field ``u`` on ``grid`` at time ``t``; derivatives are cached."""

    u: np.ndarray
    grid: Grid1D
    t: float = 0.0

    def __post_init__(self):
        u = check_finite(self.u, "u")
        if u.shape != (self.grid.n_points,):
            raise ValueError(f"u has shape {u.shape}, grid has {self.grid.n_points} points")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @classmethod
    def unchecked(cls, u: np.ndarray, grid: Grid1D, t: float = 0.0) -> "FieldState":
        """Construct without validation or copy (RK4 stages)."""
        self = object.__new__(cls)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "t", t)
        return self

    @cached_property
    def ux(self) -> np.ndarray:
        return diff(self.u, self.grid, 1)

    @cached_property
    def uxx(self) -> np.ndarray:
        return diff(self.u, self.grid, 2)

    @cached_property
    def uxxx(self) -> np.ndarray:
        return diff(self.u, self.grid, 3)

    @cached_property
    def uxxxx(self) -> np.ndarray:
        return diff(self.u, self.grid, 4)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def check_vacua(self, tol: float = 1e-3) -> bool:
        """Both end values sit within ``tol`` of a vacuum ``2 pi k``."""
        ends = self.u[[0, -1]] / (2 * np.pi)
        return bool(np.all(np.abs(ends - np.round(ends)) * 2 * np.pi < tol))


@dataclass(frozen=True, eq=False)
class LaxCoeffs:
    """Coefficients of the time Lax component, grouped by powers of ``(i lambda)``."""

    A_m1: np.ndarray
    A_1: np.ndarray
    A_3: float
    B_m1: np.ndarray
    C_m1: np.ndarray
    B_0: np.ndarray
    C_0: np.ndarray
    B_1: np.ndarray
    C_1: np.ndarray
    B_2: np.ndarray
    C_2: np.ndarray
    q: np.ndarray
    r: np.ndarray

    def check_identities(self) -> None:
        """The conjugation identities hold exactly by construction."""
        ok = (np.array_equal(self.B_0, -self.C_0) and np.array_equal(self.B_2, -self.C_2)
              and np.array_equal(self.B_m1, self.C_m1) and np.array_equal(self.B_1, self.C_1)
              and np.array_equal(self.q, -self.r))
        if not ok:
            raise AssertionError("LaxCoeffs identities violated")

    def evaluate(self, lam: complex):
        """Full ``(A, B, C)`` at spectral parameter ``lam``; real when lam = i*mu."""
        il = 1j * complex(lam)
        A = self.A_m1 / il + self.A_1 * il + self.A_3 * il**3
        B = self.B_m1 / il + self.B_0 + self.B_1 * il + self.B_2 * il**2
        C = self.C_m1 / il + self.C_0 + self.C_1 * il + self.C_2 * il**2
        if abs(complex(lam).real) == 0.0:
            return A.real, B.real, C.real
        return A, B, C


def lax_coeffs(state: FieldState, params: ModelParams) -> LaxCoeffs:
    """Lax time-component coefficients of the integrable sector."""
    if not params.in_integrable_sector:
        raise ValueError("Lax pair exists only for alpha == 0 and gamma == 2*beta")
    b, d = params.beta, params.delta
    u, ux, uxx, uxxx = state.u, state.ux, state.uxx, state.uxxx
    s = -0.25 * d * np.sin(u)
    b0 = b * uxxx + 0.5 * b * ux**3
    b1 = -2.0 * b * uxx
    b2 = 4.0 * b * ux
    r = 0.5 * ux
    return LaxCoeffs(
        A_m1=-0.25 * d * np.cos(u), A_1=b * ux**2, A_3=8.0 * b,
        B_m1=s, C_m1=s.copy(), B_0=b0, C_0=-b0, B_1=b1, C_1=b1.copy(),
        B_2=b2, C_2=-b2, q=-r, r=r,
    )


def _rhs_coeffs(params: ModelParams, deformation):
    """Split of the cubic flux term into plain and sign-preserving-power parts."""
    eps = getattr(deformation, "epsilon", None) if _is_power(deformation) else None
    b = params.beta
    if eps is None:
        return b, 0.0, 3.0
    # u_x^2 u_xx (3b) -> b u_x^2 u_xx + b (4+e)/2 |u_x|^(2+e) u_xx, integrated once
    return b / 3.0, b * (4.0 + eps) / (2.0 * (3.0 + eps)), 3.0 + eps


def _is_power(deformation) -> bool:
    return deformation is not None and getattr(deformation, "kind", "none") == "power-eps"


def source_term(state: FieldState, params: ModelParams, deformation=None) -> np.ndarray:
    """Right-hand side ``S`` of the equation (``d sin u`` unless deformed)."""
    if deformation is None or deformation.kind in ("none", "power-eps"):
        return params.delta * np.sin(state.u)
    return deformation.source(state, params)


def pde_rhs(state: FieldState, params: ModelParams, deformation=None) -> np.ndarray:
    """Time derivative ``u_t`` from the once-integrated equation."""
    source = source_term(state, params, deformation)
    beta_cubic, beta_pow, power = _rhs_coeffs(params, deformation)
    st1, st3 = stencil(1), stencil(3)
    out = kernels.integrated_rhs(
        state.u, source, state.grid.dx, 0.5 * params.alpha, beta_cubic, beta_pow, power,
        params.gamma, st1.center, st3.center, DISSIPATION / (64.0 * state.grid.dx),
    )
    if not np.all(np.isfinite(out)):
        raise NumericalBlowUp(f"non-finite u_t at t={state.t}")
    return out


def pde_residual(state: FieldState, u_t, params: ModelParams) -> np.ndarray:
    """Pointwise residual of the undeformed equation given ``u_t``."""
    g = state.grid
    uxt = diff(u_t, g, 1)
    ux, uxx = state.ux, state.uxx
    return (uxt + params.alpha * ux * uxx + 3.0 * params.beta * ux**2 * uxx
            + params.gamma * state.uxxxx - params.delta * np.sin(state.u))


def max_stable_dt(grid: Grid1D, params: ModelParams, c_stab: float = C_STAB) -> float:
    """Largest RK4 sub-step allowed by the third-derivative stiffness."""
    if params.gamma == 0.0:
        return math.inf
    return c_stab * grid.dx**3 / abs(params.gamma)


def pde_evolve(state: FieldState, params: ModelParams, deformation=None, dt: float = 1e-4,
               n_steps: int = 1, stride: int = 1, substeps: int | None = None,
               c_stab: float = C_STAB, callback=None) -> list[FieldState]:
    """RK4 trajectory; snapshots every ``stride`` steps of size ``dt``.

    Each step of size ``dt`` is split into ``substeps`` RK4 sub-steps (chosen
    from the stability bound when not given). A forced sub-step above the
    bound triggers a :class:`RuntimeWarning`. On blow-up a
    :class:`NumericalBlowUp` carrying the last good snapshot is raised.
    """
    if dt == 0 or not math.isfinite(dt):
        raise ValueError("dt must be finite and non-zero")
    if n_steps < 0 or stride < 1:
        raise ValueError("need n_steps >= 0 and stride >= 1")
    limit = max_stable_dt(state.grid, params, c_stab)
    if substeps is None:
        substeps = max(1, math.ceil(abs(dt) / limit * (1 - 1e-12)))
    elif abs(dt) / substeps > limit:
        warnings.warn(f"sub-step {abs(dt) / substeps:.3g} exceeds stability bound {limit:.3g}",
                      RuntimeWarning, stacklevel=2)
    h = dt / substeps
    grid = state.grid
    u = np.array(state.u, dtype=float)
    t0 = state.t
    traj = [state]
    last = state

    def rhs(_t, v):
        return pde_rhs(FieldState.unchecked(v, grid, _t), params, deformation)

    for step in range(1, n_steps + 1):
        try:
            for sub in range(substeps):
                ts = t0 + ((step - 1) * substeps + sub) * h
                k1 = rhs(ts, u)
                k2 = rhs(ts + 0.5 * h, u + 0.5 * h * k1)
                k3 = rhs(ts + 0.5 * h, u + 0.5 * h * k2)
                k4 = rhs(ts + h, u + h * k3)
                u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(u)):
                raise NumericalBlowUp("non-finite field")
        except NumericalBlowUp as exc:
            err = NumericalBlowUp(f"blow-up at step {step}: {exc}", step=step)
            err.last_good = last
            raise err from None
        if step % stride == 0 or step == n_steps:
            last = FieldState(u, grid, t0 + step * dt)
            traj.append(last)
            if callback is not None:
                callback(last)
    return traj


def kink_center(state: FieldState, level: float = math.pi) -> float:
    """Position where ``u`` crosses ``level``, by linear interpolation."""
    u = state.u - level
    idx = np.nonzero(np.sign(u[:-1]) != np.sign(u[1:]))[0]
    if idx.size == 0:
        raise ValueError("field does not cross the requested level")
    i = idx[np.argmin(np.abs(u[idx]))]
    x = state.grid.x
    return float(x[i] - u[i] * (x[i + 1] - x[i]) / (u[i + 1] - u[i]))


def l2_distance(a, b, grid: Grid1D) -> float:
    d = np.asarray(a) - np.asarray(b)
    return math.sqrt(grid.dx * (np.sum(d * d) - 0.5 * (d[0] ** 2 + d[-1] ** 2)))
