"""Closed-form kink, Riccati variable and the Baecklund transformation.

The spectral parameter is taken on the imaginary axis, ``lambda = i mu``, so
every field here is real. The transformation in x reads

    u_x + u'_x = -4 mu sin((u' - u) / 2)

and maps the vacuum ``u' = 0`` to the kink ``u = 4 arctan(exp(theta))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dislocwave.continuum import (
    FieldState, LaxCoeffs, ModelParams, kink_center, pde_residual, pde_rhs,
)
from dislocwave.numerics import Grid1D, check_finite, diff

# inverse chart is used where |tan| exceeds this
CHART_SWITCH = 1.0


@dataclass(frozen=True)
class KinkParams:
    mu: float = 0.5
    sign: int = 1
    x0: float = 0.0
    beta: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        if self.mu == 0 or not math.isfinite(self.mu):
            raise ValueError("mu must be finite and non-zero")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def A(self) -> float:
        """Diagonal Lax entry in the vacuum at lambda = i mu."""
        return self.delta / (4 * self.mu) - 8 * self.beta * self.mu**3

    @property
    def velocity(self) -> float:
        """Velocity of the ``u = pi`` crossing, ``-A / mu``."""
        return 8 * self.beta * self.mu**2 - self.delta / (4 * self.mu**2)

    @property
    def lam(self) -> complex:
        return 1j * self.mu

    def params(self) -> ModelParams:
        return ModelParams.integrable_sector(self.beta, self.delta)

    def to_dict(self) -> dict:
        return {"mu": self.mu, "sign": self.sign, "x0": self.x0,
                "beta": self.beta, "delta": self.delta}


def _theta(x, t, kp: KinkParams):
    x = np.asarray(x, dtype=float)
    # theta_t = 2A: the time terms enter with these signs for u to solve the equation
    return 2 * kp.mu * (x - kp.x0) + kp.delta * t / (2 * kp.mu) - 16 * kp.beta * kp.mu**3 * t


def _sech(theta):
    a = np.exp(-np.abs(theta))
    return 2 * a / (1 + a * a)


def kink(x, t: float, kp: KinkParams):
    """``sign * 4 arctan(exp(theta))``, evaluated without overflow."""
    th = _theta(x, t, kp)
    e = np.exp(-np.abs(th))
    u = np.where(th <= 0, 4 * np.arctan(e), 2 * np.pi - 4 * np.arctan(e))
    u = kp.sign * u
    return float(u) if np.ndim(u) == 0 else u


def kink_derivatives(x, t: float, kp: KinkParams) -> dict:
    """Analytic ``u``, x-derivatives up to 5th order, ``u_t`` and ``u_xt``."""
    th = _theta(x, t, kp)
    S = _sech(th)
    T = np.tanh(th)
    k = 2 * kp.mu
    amp = 4 * kp.mu * kp.sign
    out = {
        "u": kink(x, t, kp),
        "ux": amp * S,
        "uxx": amp * k * (-S * T),
        "uxxx": amp * k**2 * (S - 2 * S**3),
        "uxxxx": amp * k**3 * S * T * (6 * S**2 - 1),
        "uxxxxx": amp * k**4 * (S - 20 * S**3 + 24 * S**5),
    }
    # theta_t = 2A, so u_t = 4 A sign sech(theta)
    out["ut"] = 4 * kp.A * kp.sign * S
    out["uxt"] = 4 * kp.A * kp.sign * k * (-S * T)
    return out


def kink_state(grid: Grid1D, t: float, kp: KinkParams) -> FieldState:
    return FieldState(kink(grid.x, t, kp), grid, t)


def kink_residual(x, t: float, kp: KinkParams) -> np.ndarray:
    """Residual of the integrable equation from analytic derivatives."""
    d = kink_derivatives(x, t, kp)
    b = kp.beta
    return d["uxt"] + 3 * b * d["ux"] ** 2 * d["uxx"] + 2 * b * d["uxxxx"] - kp.delta * np.sin(d["u"])


@dataclass(frozen=True, eq=False)
class RiccatiState:
    """``Gamma`` stored chart-wise: ``value`` is Gamma where ``direct``, else 1/Gamma."""

    value: np.ndarray
    direct: np.ndarray
    quarter: np.ndarray  # (u' - u)/4, kept for chart-free evaluation

    @property
    def gamma(self) -> np.ndarray:
        """Gamma itself; infinite at poles of the inverse chart."""
        with np.errstate(divide="ignore"):
            return np.where(self.direct, self.value, 1.0 / self.value)


def gamma_of(u, u_prime) -> RiccatiState:
    """Riccati variable ``Gamma = tan((u' - u)/4)`` with chart management."""
    u = check_finite(u, "u")
    up = check_finite(u_prime, "u'")
    quarter = 0.25 * (up - u)
    # reduce to (-pi/2, pi/2]: tan is pi-periodic
    red = quarter - np.pi * np.round(quarter / np.pi)
    direct = np.abs(red) <= np.pi / 4
    value = np.where(direct, np.tan(red), 1.0 / np.tan(np.where(direct, 1.0, red)))
    return RiccatiState(value=value, direct=direct, quarter=quarter)


def bt_generate(seed: FieldState, mu: float, u_left: float | None = None,
                u_left_offset: float = 1e-8, substeps: int = 4,
                check_params: ModelParams | None = None, tol: float = 1e-4) -> FieldState:
    """New solution from ``seed`` by marching the x-part of the transformation.

    The left boundary value is ``seed.u[0] + u_left_offset`` unless
    ``u_left`` is given; it fixes the translation of the generated soliton.
    For ``mu < 0`` the seed is an attractor of the march from the left, so
    the default starts next to the other vacuum, ``seed.u[0] + 2 pi - offset``,
    and the output is the mirrored antikink.
    ``check_params`` enables the residual check against the once-integrated
    equation; a large residual means the seed was not a solution.
    """
    if mu == 0:
        raise ValueError("mu must be non-zero")
    g = seed.grid
    up = np.asarray(seed.u, dtype=float)
    upx = seed.ux
    # cubic Hermite data of the seed for sub-step evaluation
    h = g.dx / substeps
    if u_left is None:
        u0 = float(up[0] + (u_left_offset if mu > 0 else 2 * math.pi - u_left_offset))
    else:
        u0 = float(u_left)

    def rhs(s, v, i):
        # s in [0, 1] within cell i
        a, b = up[i], up[i + 1]
        da, db = upx[i] * g.dx, upx[i + 1] * g.dx
        s2, s3 = s * s, s * s * s
        p = (2 * s3 - 3 * s2 + 1) * a + (s3 - 2 * s2 + s) * da + (-2 * s3 + 3 * s2) * b + (s3 - s2) * db
        dp = ((6 * s2 - 6 * s) * a + (3 * s2 - 4 * s + 1) * da + (-6 * s2 + 6 * s) * b
              + (3 * s2 - 2 * s) * db) / g.dx
        return -dp - 4.0 * mu * math.sin(0.5 * (p - v))

    out = np.empty(g.n_points)
    out[0] = v = u0
    ds = 1.0 / substeps
    for i in range(g.n_points - 1):
        for j in range(substeps):
            s = j * ds
            k1 = rhs(s, v, i)
            k2 = rhs(s + 0.5 * ds, v + 0.5 * h * k1, i)
            k3 = rhs(s + 0.5 * ds, v + 0.5 * h * k2, i)
            k4 = rhs(s + ds, v + h * k3, i)
            v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = v
    state = FieldState(out, g, seed.t)
    if check_params is not None:
        res = pde_residual(state, pde_rhs(state, check_params), check_params)
        m = g.n_points // 10
        worst = float(np.max(np.abs(res[m:-m])))
        if worst > tol:
            raise ValueError(f"generated profile violates the equation (|residual| = {worst:.3g});"
                             " the seed is probably not a solution")
    return state


def riccati_residuals(gam: RiccatiState, u: FieldState, u_prime: FieldState, lax: LaxCoeffs,
                      lam: complex, u_t, u_prime_t):
    """Residuals of the x- and t-Riccati equations for ``Gamma``.

    ``Gamma = tan((u' - u)/4)`` solves the Riccati pair of the seed ``u'`` at
    ``lam = i mu`` (pass ``lax_coeffs`` of ``u'``); equivalently that of ``u``
    at ``lam = -i mu``. Evaluated in angle form: with ``Gamma = tan(phi)``
    both equations are multiplied by ``cos^2 phi``, which is bounded through
    the poles, so the result does not depend on the chart.
    """
    phi = gam.quarter
    c, s = np.cos(phi), np.sin(phi)
    phi_x = 0.25 * (u_prime.ux - u.ux)
    phi_t = 0.25 * (np.asarray(u_prime_t) - np.asarray(u_t))
    il = 1j * complex(lam)
    A, B, C = lax.evaluate(lam)
    # (Gamma_x + 2 i lam Gamma - q + r Gamma^2) cos^2 phi
    res_x = phi_x + 2 * il * s * c - lax.q * c * c + lax.r * s * s
    res_t = phi_t - (B * c * c + 2 * A * s * c - C * s * s)
    return np.real_if_close(res_x), np.real_if_close(res_t)


def bt_time_residual(u: FieldState, u_prime: FieldState, lax: LaxCoeffs, lam: complex,
                     u_t, u_prime_t) -> np.ndarray:
    """Residual of the t-part of the transformation at spectral parameter ``lam``.

    With ``lax`` taken from the seed ``u'`` the relation closes at ``lam = -i mu``.
    """
    A, B, C = lax.evaluate(lam)
    half = 0.5 * (u_prime.u - u.u)
    rhs = 2 * (C - B) + 4 * A * np.sin(half) - 2 * (C + B) * np.cos(half)
    return np.real_if_close(np.asarray(u_t) - np.asarray(u_prime_t) - rhs)


def aligned_kink_error(state: FieldState, kp: KinkParams, iterations: int = 4) -> tuple[float, float]:
    """Sup-norm distance to the closed-form kink after aligning its center.

    The crossing of ``u = pi`` gives a first center; Gauss-Newton on the
    least-squares misfit refines it. Returns ``(error, center)``; the kink's
    orientation is taken from the data.
    """
    sign = 1 if state.u[-1] >= state.u[0] else -1
    center = kink_center(state, sign * math.pi)
    x = state.grid.x
    for _ in range(iterations):
        d = kink_derivatives(x, state.t, KinkParams(mu=abs(kp.mu), sign=sign, x0=center,
                                                   beta=kp.beta, delta=kp.delta))
        # d(kink)/d(x0) = -u_x
        jac = d["ux"]
        center -= float(jac @ (state.u - d["u"]) / (jac @ jac))
    aligned = KinkParams(mu=abs(kp.mu), sign=sign, x0=center, beta=kp.beta, delta=kp.delta)
    err = float(np.max(np.abs(state.u - kink(x, state.t, aligned))))
    return err, center
