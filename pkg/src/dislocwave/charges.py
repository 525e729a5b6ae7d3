"""Conserved-density tower, charge time series, continuity laws and energy densities.

The densities come from the recurrence

    -2 f_{s+1} = r (f_s / r)_x - q r delta_{s,0} + sum_{j=1}^{s-1} f_j f_{s-j},   f_0 = 0.

Every ``f_n`` carries one overall factor of ``r``. The default evaluation
propagates the quotient ``P_n = f_n / r`` instead, so no division by ``r``
ever happens; the literal quotient-rule form is available as
``method="divide"`` and is guarded by closed forms where ``|r|`` is tiny.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from dislocwave.continuum import FieldState, ModelParams
from dislocwave.numerics import Grid1D, check_finite, diff, quadrature

MAX_ORDER = 8
R_GUARD = 1e-10
EPS_ABS = 1e-6
# coefficient of u_xx u_x^2 inside the flux of the second continuity law
FLUX2_CUBIC = 6.0


@dataclass(frozen=True, eq=False)
class DensityTower:
    order: int
    f: list
    Q: list
    guarded: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    quotients: list | None = None  # P_n = f_n / r, when computed


def _closed_forms(q, r, grid: Grid1D, n: int) -> list:
    """f_1..f_min(n, 4) expanded by hand from the recurrence."""
    qx = diff(q, grid, 1)
    qxx = diff(q, grid, 2)
    out = [0.5 * q * r, -0.25 * r * qx, 0.125 * r * qxx - 0.125 * (q * r) ** 2]
    if n >= 4:
        qxxx = diff(q, grid, 3)
        q2r_x = diff(q * q * r, grid, 1)
        out.append(-r * qxxx / 16 + r * q2r_x / 16 + q * r * r * qx / 8)
    return out[:n]


def density_tower(q, r, grid: Grid1D, N: int = 4, method: str = "quotient",
                  r_guard: float = R_GUARD) -> DensityTower:
    """Densities ``f_1..f_N`` and charges ``Q_n`` (trapezoid) from fields ``q, r``."""
    if not 1 <= N <= MAX_ORDER:
        raise ValueError(f"tower order must be in 1..{MAX_ORDER}, got {N}")
    q = check_finite(q, "q")
    r = check_finite(r, "r")
    if method == "quotient":
        # P_1 = q/2;  P_{s+1} = -(P_s,x + r sum_j P_j P_{s-j}) / 2
        P = [0.5 * q]
        for s in range(1, N):
            conv = sum((P[j - 1] * P[s - j - 1] for j in range(1, s)), np.zeros_like(q))
            P.append(-0.5 * (diff(P[-1], grid, 1) + r * conv))
        f = [r * p for p in P]
        guarded = np.zeros(0, dtype=int)
        quotients = P
    elif method == "divide":
        small = np.abs(r) < r_guard
        safe = np.where(small, 1.0, r)
        rx = diff(r, grid, 1)
        f = []
        for s in range(N):
            conv = sum((f[j - 1] * f[s - j - 1] for j in range(1, s)), np.zeros_like(q))
            if s == 0:
                nxt = -0.5 * (-q * r)
            else:
                fs = f[-1]
                quot_x = diff(fs, grid, 1) / safe - fs * rx / safe**2
                nxt = -0.5 * (r * quot_x + conv)
            f.append(nxt)
        guarded = np.nonzero(small)[0]
        if guarded.size:
            if N > 4:
                ref = density_tower(q, r, grid, N, "quotient").f
            else:
                ref = _closed_forms(q, r, grid, N)
            f = [np.where(small, a, b) for a, b in zip(ref, f)]
        quotients = None
    else:
        raise ValueError(f"unknown method {method!r}")
    for n, fn in enumerate(f, 1):
        check_finite(fn, f"f_{n}")
    Q = [quadrature(fn, grid) for fn in f]
    return DensityTower(order=N, f=f, Q=Q, guarded=guarded, quotients=quotients)


def tower_of(state: FieldState, N: int = 4, **kw) -> DensityTower:
    r = 0.5 * state.ux
    return density_tower(-r, r, state.grid, N, **kw)


@dataclass
class ChargeSeries:
    """Charges ``Q_1..Q_N`` and extra observables per snapshot time."""

    times: list = field(default_factory=list)
    Q: list = field(default_factory=list)  # Q[k] = [Q_1..Q_N] at times[k]
    extra: dict = field(default_factory=dict)  # name -> list of values
    eps_abs: float = EPS_ABS

    @property
    def order(self) -> int:
        return len(self.Q[0]) if self.Q else 0

    def append(self, t: float, charges, **extra):
        if self.Q and len(charges) != self.order:
            raise ValueError("charge count changed within a series")
        self.times.append(float(t))
        self.Q.append([float(c) for c in charges])
        for k, v in extra.items():
            self.extra.setdefault(k, []).append(v)

    def column(self, n: int) -> np.ndarray:
        """Values of ``Q_n`` (1-based)."""
        return np.array([row[n - 1] for row in self.Q])

    def drift(self, n: int) -> float:
        return drift(self.column(n), self.eps_abs)

    def drifts(self) -> dict:
        out = {f"Q{n}": self.drift(n) for n in range(1, self.order + 1)}
        for k, v in self.extra.items():
            arr = np.asarray(v)
            if arr.dtype.kind in "fc":
                out[k] = drift(arr, self.eps_abs)
        return out

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        names = [f"Q{n}" for n in range(1, self.order + 1)]
        extras = sorted(self.extra)
        w = csv.writer(buf, lineterminator="\n")
        cols = ["t"] + names
        for k in extras:
            if np.iscomplexobj(np.asarray(self.extra[k])):
                cols += [f"{k}_re", f"{k}_im"]
            else:
                cols.append(k)
        w.writerow(cols)
        for i, t in enumerate(self.times):
            row = [_fmt(t)] + [_fmt(c) for c in self.Q[i]]
            for k in extras:
                v = self.extra[k][i]
                if np.iscomplexobj(np.asarray(self.extra[k])):
                    row += [_fmt(complex(v).real), _fmt(complex(v).imag)]
                else:
                    row.append(_fmt(v))
            w.writerow(row)
        return buf.getvalue()

    def to_ndjson(self, **meta) -> str:
        lines = []
        for i, t in enumerate(self.times):
            rec = {"t": t, "Q": self.Q[i]}
            for k, v in self.extra.items():
                val = v[i]
                rec[k] = [complex(val).real, complex(val).imag] if isinstance(val, complex) else val
            lines.append(json.dumps(rec, sort_keys=True))
        summary = {"summary": True, "drift": self.drifts(), "eps_abs": self.eps_abs, **meta}
        lines.append(json.dumps(summary, sort_keys=True))
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return repr(float(v))


def drift(values, eps_abs: float = EPS_ABS) -> float:
    """``max_t |v(t) - v(0)| / max(|v(0)|, eps_abs)``."""
    v = np.asarray(values)
    if v.size == 0:
        return 0.0
    return float(np.max(np.abs(v - v[0])) / max(abs(v[0]), eps_abs))


def charge_series(trajectory, N: int = 4, params: ModelParams | None = None,
                  eps_abs: float = EPS_ABS) -> ChargeSeries:
    """Charges along a trajectory; with ``params`` also the energy ``int(H - delta)``."""
    cs = ChargeSeries(eps_abs=eps_abs)
    for s in trajectory:
        tw = tower_of(s, N)
        extra = {}
        if params is not None:
            extra["H"] = quadrature(hamiltonian_density(s, params) - params.delta, s.grid)
        cs.append(s.t, tw.Q, **extra)
    return cs


def flux_1(state: FieldState, params: ModelParams) -> np.ndarray:
    """Flux of the density ``-u_x^2/8``."""
    b, d = params.beta, params.delta
    ux = state.ux
    return 0.25 * d * np.cos(state.u) + 0.5 * b * ux * state.uxxx - 0.25 * b * state.uxx**2 \
        + (3.0 / 16.0) * b * ux**4


def density_1(state: FieldState) -> np.ndarray:
    return -0.125 * state.ux**2


def flux_2(state: FieldState, params: ModelParams, cubic: float = FLUX2_CUBIC) -> np.ndarray:
    """Flux of the density ``-(u_x^2)_x``."""
    b, d = params.beta, params.delta
    ux = state.ux
    return ux * (-2.0 * d * np.sin(state.u) + cubic * b * state.uxx * ux**2 + 4.0 * b * state.uxxxx)


def density_2(state: FieldState) -> np.ndarray:
    return -2.0 * state.ux * state.uxx


def _window_center(window):
    window = list(window)
    if len(window) < 3:
        raise ValueError("continuity residual needs at least 3 snapshots")
    m = len(window) // 2
    a, c, b = window[m - 1], window[m], window[m + 1]
    h1, h2 = c.t - a.t, b.t - c.t
    if h1 <= 0 or not math.isclose(h1, h2, rel_tol=1e-6):
        raise ValueError("snapshots must be equally spaced in time")
    return a, c, b, 0.5 * (h1 + h2)


def continuity_residual(window, density, flux) -> np.ndarray:
    """``rho_t - F_x`` at the middle snapshot; ``rho_t`` by central differences."""
    a, c, b, h = _window_center(window)
    rho_t = (density(b) - density(a)) / (2.0 * h)
    return rho_t - diff(flux(c), c.grid, 1)


def continuity_residual_1(window, params: ModelParams) -> np.ndarray:
    return continuity_residual(window, density_1, lambda s: flux_1(s, params))


def continuity_residual_2(window, params: ModelParams, cubic: float = FLUX2_CUBIC) -> np.ndarray:
    return continuity_residual(window, density_2, lambda s: flux_2(s, params, cubic))


def max_continuity_residual(trajectory, residual, trim: int = 0) -> float:
    """Largest sup-norm of ``residual(window)`` over all 3-snapshot windows.

    ``trim`` points at each end are excluded.
    """
    traj = list(trajectory)
    worst = 0.0
    for i in range(1, len(traj) - 1):
        res = residual(traj[i - 1:i + 2])
        if trim:
            res = res[trim:-trim]
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def lagrangian_density(state: FieldState, params: ModelParams, u_t) -> np.ndarray:
    b = params.beta
    ux = state.ux
    return 0.5 * ux * np.asarray(u_t) + 0.25 * b * ux**4 + b * ux * state.uxxx \
        - params.delta * np.cos(state.u)


def hamiltonian_density(state: FieldState, params: ModelParams) -> np.ndarray:
    b = params.beta
    ux = state.ux
    return params.delta * np.cos(state.u) - 0.25 * b * ux**4 - b * ux * state.uxxx


def euler_lagrange(d: dict, params: ModelParams) -> np.ndarray:
    """Variational derivative of the action density from a derivative dictionary.

    ``d`` holds ``u, ux, uxx, uxxxx, uxt`` (e.g. analytic kink derivatives).
    For the Lagrangian above it is ``dL/du - D_t dL/du_t - D_x dL/du_x - D_x^3 dL/du_xxx``.
    """
    b, dl = params.beta, params.delta
    dL_du = dl * np.sin(d["u"])
    dt_term = 0.5 * d["uxt"]  # D_t (u_x / 2)
    dx_term = 0.5 * d["uxt"] + 3 * b * d["ux"] ** 2 * d["uxx"] + b * d["uxxxx"]
    dx3_term = b * d["uxxxx"]
    return dL_du - dt_term - dx_term - dx3_term
