"""Quasi-integrable deformations, the anomaly field and charge bookkeeping.

Three deformations of the integrable equation are supported:

``potential-replace``
    the source ``delta sin u`` becomes a user function ``W(u)``;
``power-eps``
    the cubic term is deformed so that the first continuity law keeps the
    flux ``d/4 cos u + b/2 u_x u_xxx - b/4 u_xx^2 + b/16 u_x^4 (2 u_x^e + 1)``
    (powers taken sign-preserving); the evolution uses
    ``u_t = int d sin u - (b/3) u_x^3 - b (4+e)/(2(3+e)) u_x^(3+e) - g u_xxx``;
``shift-D``
    the source becomes ``delta sin u - 4 D`` with
    ``D = g_1(u) + sum_{m=2}^M (r / f_{m-1}) g_m(u)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from dislocwave import abelianize
from dislocwave.charges import EPS_ABS, ChargeSeries, charge_series, drift, tower_of
from dislocwave.continuum import FieldState, ModelParams, pde_evolve
from dislocwave.numerics import NumericalBlowUp, diff, quadrature

KINDS = ("none", "potential-replace", "power-eps", "shift-D")
FAMILIES = ("constant", "cos-half", "anomaly-killing", "custom")
F_GUARD = 1e-10
TOL_C = 1e-4

POTENTIALS = {
    "sin": lambda u, d, k: d * np.sin(u),
    "sin-2u": lambda u, d, k: d * np.sin(u) + k * np.sin(2.0 * u),
}


@dataclass(frozen=True)
class DeformationSpec:
    """Which deformation is active, with its parameters."""

    kind: str = "none"
    epsilon: float = 0.0
    potential: str = "sin"
    potential_coeff: float = 0.0
    W: Callable | None = None
    M: int = 1
    family: str = "constant"
    kappa: float = 0.0
    p: float = 1.0
    lam: complex = 1j
    g: tuple | None = None  # custom g_m(u), m = 1..M

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown deformation kind {self.kind!r}")
        if not self.epsilon > -1.0:
            raise ValueError("epsilon must exceed -1")
        if self.kind == "shift-D":
            if int(self.M) != self.M or self.M < 1:
                raise ValueError("truncation M must be an integer >= 1")
            if self.family not in FAMILIES:
                raise ValueError(f"unknown shift family {self.family!r}")
            if self.family == "custom" and (self.g is None or len(self.g) != self.M):
                raise ValueError("custom family needs M coefficient functions")
            if self.family == "anomaly-killing" and not self.p > 0:
                raise ValueError("anomaly-killing exponent p must be positive")
        if self.kind == "potential-replace" and self.W is None and self.potential not in POTENTIALS:
            raise ValueError(f"unknown potential {self.potential!r}")
        object.__setattr__(self, "lam", complex(self.lam))

    @property
    def neutral(self) -> bool:
        if self.kind == "none":
            return True
        if self.kind == "power-eps":
            return self.epsilon == 0.0
        if self.kind == "potential-replace":
            return self.W is None and (self.potential == "sin" or self.potential_coeff == 0.0)
        return self.family in ("constant", "cos-half") and self.kappa == 0.0

    def g_m(self, m: int, u):
        """Coefficient function ``g_m(u)`` of the built-in families."""
        if self.family == "constant":
            return np.full_like(np.asarray(u, dtype=float), self.kappa)
        if self.family == "cos-half":
            return self.kappa * np.cos(0.5 * np.asarray(u))
        if self.family == "custom":
            return np.asarray(self.g[m - 1](np.asarray(u)), dtype=float)
        raise ValueError("g_m is state-dependent for the anomaly-killing family; use shift_D")

    def source(self, state: FieldState, params: ModelParams) -> np.ndarray:
        """The deformed right-hand side ``S`` of the equation."""
        d = params.delta
        if self.kind == "potential-replace":
            if self.W is not None:
                return np.asarray(self.W(state.u), dtype=float)
            return POTENTIALS[self.potential](state.u, d, self.potential_coeff)
        if self.kind == "shift-D":
            return d * np.sin(state.u) - 4.0 * shift_D(state, self)[0]
        return d * np.sin(state.u)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "power-eps":
            out["epsilon"] = self.epsilon
        elif self.kind == "potential-replace":
            out.update(potential=self.potential if self.W is None else "callable",
                       potential_coeff=self.potential_coeff)
        elif self.kind == "shift-D":
            out.update(M=self.M, family=self.family, kappa=self.kappa)
            if self.family == "anomaly-killing":
                out.update(p=self.p, lam=[self.lam.real, self.lam.imag])
        return out


def shift_D(state: FieldState, spec: DeformationSpec, tower=None, a_minus=None):
    """``(D, guarded_fraction)`` for a shift deformation.

    The ``m = 1`` summand is ``g_1(u)`` itself; for ``m >= 2`` it is
    ``(r / f_{m-1}) g_m(u)``, set to zero where ``|f_{m-1}| < F_GUARD``.
    For the anomaly-killing family every summand is ``(a_-^0)^p``.
    """
    if spec.kind != "shift-D":
        raise ValueError("shift_D needs a shift-D spec")
    n = state.grid.n_points
    if spec.family == "anomaly-killing":
        if a_minus is None:
            a_minus = abelianize.a_minus_only(state, spec.lam)
        am = np.real_if_close(a_minus, tol=1e6)
        if np.iscomplexobj(am):
            raise ValueError("anomaly-killing shift needs real a_-; use lam on the imaginary axis")
        return spec.M * abelianize._cpow(np.asarray(am, dtype=float), spec.p), 0.0
    D = np.array(spec.g_m(1, state.u), dtype=float, copy=True)
    if spec.M == 1:
        return D, 0.0
    if tower is None or tower.order < spec.M - 1:
        tower = tower_of(state, spec.M - 1)
    r = 0.5 * state.ux
    guarded = 0
    for m in range(2, spec.M + 1):
        f = tower.f[m - 2]
        small = np.abs(f) < F_GUARD
        guarded += int(np.count_nonzero(small))
        D += np.where(small, 0.0, r / np.where(small, 1.0, f)) * spec.g_m(m, state.u)
    return D, guarded / (n * (spec.M - 1))


def anomaly_X(D, grid) -> np.ndarray:
    """Real prefactor ``D_x`` of the anomaly (the unit imaginary is bookkeeping)."""
    return diff(D, grid, 1)


def deformed_flux_1(state: FieldState, params: ModelParams, spec: DeformationSpec) -> np.ndarray:
    """Flux of ``-u_x^2/8`` under the power deformation."""
    if spec.kind not in ("power-eps", "none"):
        raise ValueError("deformed flux is defined for the power deformation")
    e = spec.epsilon if spec.kind == "power-eps" else 0.0
    b, d = params.beta, params.delta
    ux = state.ux
    power_part = 2.0 * np.abs(ux) ** (4.0 + e) if e != 0.0 else 2.0 * ux**4
    return 0.25 * d * np.cos(state.u) + 0.5 * b * ux * state.uxxx - 0.25 * b * state.uxx**2 \
        + (b / 16.0) * (power_part + ux**4)


def deformed_vacua(spec: DeformationSpec, params: ModelParams, sign: int = 1):
    """Zeros of the deformed source next to the vacua ``0`` and ``2 pi sign``.

    Only the ``m = 1`` summand survives in a vacuum (``r = 0`` there).
    """
    if spec.kind == "none" or spec.kind == "power-eps":
        return 0.0, 2 * math.pi * sign
    if spec.kind == "shift-D" and spec.family == "anomaly-killing":
        return 0.0, 2 * math.pi * sign

    def S(u):
        if spec.kind == "potential-replace":
            if spec.W is not None:
                return float(spec.W(np.array([u]))[0])
            return float(POTENTIALS[spec.potential](u, params.delta, spec.potential_coeff))
        return params.delta * math.sin(u) - 4.0 * float(spec.g_m(1, np.array([u]))[0])

    out = []
    for start in (0.0, 2 * math.pi * sign):
        u, step = start, 1e-6
        for _ in range(100):
            f = S(u)
            df = (S(u + step) - S(u - step)) / (2 * step)
            if df == 0:
                break
            du = f / df
            u -= du
            if abs(du) < 1e-15:
                break
        if not math.isfinite(u) or abs(u - start) > 1.0 or abs(S(u)) > 1e-12:
            raise ValueError("deformed source has no zero near the vacuum")
        out.append(u)
    return out[0], out[1]


def adapted_kink(u_kink: np.ndarray, vacua, sign: int = 1) -> np.ndarray:
    """Kink profile affinely mapped onto the deformed vacua."""
    lo, hi = vacua
    return lo + (hi - lo) * np.asarray(u_kink) / (2 * math.pi * sign)


@dataclass
class AnomalyReport:
    times: list = field(default_factory=list)
    X_norm: list = field(default_factory=list)
    charge_rates: dict = field(default_factory=dict)  # "Q1" -> rates at interior times
    rate_times: list = field(default_factory=list)
    q0_rate: list = field(default_factory=list)  # finite-difference dQ0/dt
    q0_predicted: list = field(default_factory=list)  # anomaly quadrature at interior times
    q0_exact: list = field(default_factory=list)  # transfer-matrix rate at interior times

    def to_ndjson(self, **meta) -> str:
        lines = []
        for i, t in enumerate(self.times):
            lines.append(json.dumps({"t": t, "X_norm": self.X_norm[i]}, sort_keys=True))
        for i, t in enumerate(self.rate_times):
            rec = {"t": t, "rates": {k: v[i] for k, v in self.charge_rates.items()}}
            if self.q0_rate:
                rec["q0_rate"] = _c(self.q0_rate[i])
                rec["q0_predicted"] = _c(self.q0_predicted[i])
                if self.q0_exact:
                    rec["q0_exact"] = _c(self.q0_exact[i])
            lines.append(json.dumps(rec, sort_keys=True))
        lines.append(json.dumps({"summary": True, "max_X_norm": max(self.X_norm, default=0.0),
                                 **meta}, sort_keys=True))
        return "\n".join(lines) + "\n"


def _c(z):
    z = complex(z)
    return [z.real, z.imag]


@dataclass
class QIResult:
    trajectory: list
    charges: ChargeSeries
    report: AnomalyReport
    classification: dict
    q0: abelianize.Q0Series | None = None


def classify(drifts: dict, tol_c: float = TOL_C) -> dict:
    out = {}
    for k, v in drifts.items():
        if v < tol_c:
            out[k] = "conserved"
        elif v > 10 * tol_c:
            out[k] = "anomalous"
        else:
            out[k] = "marginal"
    return out


def time_rates(times, values) -> np.ndarray:
    t = np.asarray(times)
    v = np.asarray(values)
    return (v[2:] - v[:-2]) / (t[2:] - t[:-2])


def qi_run(initial: FieldState, params: ModelParams, spec: DeformationSpec, T: float = 1.0,
           dt: float = 1e-4, stride: int = 100, N: int = 4, tol_c: float = TOL_C,
           eps_abs: float = EPS_ABS, lam=None, callback=None) -> QIResult:
    """Evolve the deformed equation and classify which charges survive.

    With ``lam`` the order-0 gauge charge and the anomaly quadrature are
    tracked at every snapshot as well.
    """
    n_steps = int(round(T / dt))
    deformation = None if spec.kind == "none" else spec
    traj = pde_evolve(initial, params, deformation, dt=dt, n_steps=n_steps, stride=stride,
                      callback=callback)
    cs = charge_series(traj, N, params, eps_abs=eps_abs)
    rep = AnomalyReport()
    Ds = []
    for s in traj:
        if spec.kind == "shift-D":
            D = shift_D(s, spec)[0]
            Ds.append(D)
            rep.X_norm.append(float(np.max(np.abs(anomaly_X(D, s.grid)))))
        else:
            rep.X_norm.append(0.0)
        rep.times.append(s.t)
    if len(traj) >= 3:
        rep.rate_times = cs.times[1:-1]
        for n in range(1, N + 1):
            rep.charge_rates[f"Q{n}"] = time_rates(cs.times, cs.column(n)).tolist()
    q0 = None
    if lam is not None:
        q0 = abelianize.Q0_series(traj, lam)
        cs.extra["Q0"] = list(q0.values)
        if len(traj) >= 3:
            rep.q0_rate = q0.rate().tolist()
            # the transfer-matrix rate needs the (shift-deformed) Lax pair
            lax_ok = spec.kind in ("none", "shift-D") and params.in_integrable_sector
            inner = list(zip(traj[1:-1], Ds[1:-1] if Ds else [None] * (len(traj) - 2)))
            for s, D in inner:
                D = np.zeros(s.grid.n_points) if D is None else D
                rep.q0_predicted.append(abelianize.predicted_rate(s, D, lam))
                if lax_ok:
                    rep.q0_exact.append(abelianize.exact_rate(s, D, lam, params))
    drifts = {f"Q{n}": cs.drift(n) for n in range(1, N + 1)}
    return QIResult(trajectory=traj, charges=cs, report=rep,
                    classification=classify(drifts, tol_c), q0=q0)


def integrated_source_work(state: FieldState, params: ModelParams, spec: DeformationSpec) -> float:
    """``d Q_1 / dt`` carried by the shift source, ``int u_x D``."""
    D = shift_D(state, spec)[0]
    return quadrature(state.ux * D, state.grid)


__all__ = ["DeformationSpec", "AnomalyReport", "QIResult", "shift_D", "anomaly_X",
           "deformed_flux_1", "deformed_vacua", "adapted_kink", "qi_run", "classify", "drift",
           "NumericalBlowUp"]
