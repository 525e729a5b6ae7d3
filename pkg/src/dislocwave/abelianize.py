"""Order-0 gauge fixing of the spatial Lax component and the quasi-conserved charge.

The order-0 pair for ``a_1, a_2`` decouples in ``a_- = a_1 - a_2`` and
``a_+ = a_1 + a_2``:

    a_-,x = sqrt2 r + 2 i lam a_- - (q / sqrt2) a_-^2
    a_+,x = (q / sqrt2) a_- a_+ - 2 i lam a_+ - sqrt2 q / lam

Only ``a_-`` enters ``beta_L^0`` and the charge. On the imaginary axis
``lam = i nu`` the ``a_-`` equation is damped while ``a_+`` grows like
``exp(2 nu x)``; marching the pair in these variables avoids the
cancellation ``a_1 - a_2`` would suffer in the right tail.

For a kink of parameter ``mu`` the solution is regular only for
``nu > mu``; there ``Q0 = -ln((nu + mu) / (nu - mu))``. At ``nu = mu`` (the
kink's own eigenvalue) and below, ``a_-`` runs into poles.

``a_- / sqrt2`` is the ratio ``psi_2 / psi_1`` of the solution of
``psi_x = L psi`` with ``psi(x_min) = (1, 0)``, so ``Q0 = ln T_11`` for the
transfer matrix ``T`` across the grid. Differentiating ``T`` in time gives
the exact rate (:func:`exact_rate`): boundary values of ``M`` plus the
curvature of the deformed pair, ``F = -(D u_x sigma_3 + D_x sigma_x) / (i lam)``,
weighted by ``psi`` and by the row solution ``chi`` of the adjoint problem.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from dislocwave import kernels
from dislocwave.continuum import FieldState, ModelParams, lax_coeffs
from dislocwave.numerics import Grid1D, diff, quadrature

SQRT2 = math.sqrt(2.0)
BLOWUP = 1e6


@dataclass(frozen=True)
class SpectralParam:
    lam: complex

    def __post_init__(self):
        lam = complex(self.lam)
        if not (cmath.isfinite(lam) and abs(lam) > 0):
            raise ValueError("spectral parameter must be finite and non-zero")
        object.__setattr__(self, "lam", lam)

    @property
    def imaginary(self) -> bool:
        return self.lam.real == 0.0

    @classmethod
    def parse(cls, value) -> "SpectralParam":
        """From a complex, a number, ``[re, im]`` or a string such as ``"1j"``."""
        if isinstance(value, SpectralParam):
            return value
        if isinstance(value, (list, tuple)):
            return cls(complex(value[0], value[1]))
        if isinstance(value, str):
            return cls(complex(value.replace(" ", "").replace("i", "j")))
        return cls(complex(value))


@dataclass(frozen=True, eq=False)
class GaugeCoeffs0:
    a_minus: np.ndarray
    a_plus: np.ndarray | None
    lam: complex
    residual: float  # sup-norm ODE residual of the a_- equation
    residual_plus: float  # same for a_+, relative to max(1, |a_+|)
    blowup: bool

    @property
    def a1(self) -> np.ndarray:
        return 0.5 * (self.a_plus + self.a_minus)

    @property
    def a2(self) -> np.ndarray:
        return 0.5 * (self.a_plus - self.a_minus)


def _qr(state: FieldState):
    r = 0.5 * np.asarray(state.ux, dtype=float)
    return -r, r


def a_minus_only(state: FieldState, lam: complex) -> np.ndarray:
    """``a_-^0`` alone, for use inside right-hand sides."""
    q, r = _qr(state)
    am, _ = kernels.gauge0_sweep(q, r, complex(lam), state.grid.dx, False)
    return am


def solve_gauge0(state: FieldState, lam, with_plus: bool = True) -> GaugeCoeffs0:
    """Integrate the order-0 pair from zero data at ``x_min``."""
    sp = SpectralParam.parse(lam)
    g = state.grid
    q, r = _qr(state)
    with np.errstate(all="ignore"):
        am, ap = kernels.gauge0_sweep(q, r, sp.lam, g.dx, with_plus)
    finite = bool(np.all(np.isfinite(am)))
    blowup = (not finite) or float(np.max(np.abs(am))) > BLOWUP
    res_m = res_p = math.inf
    if finite:
        res_m = float(np.max(np.abs(_minus_residual(am, q, r, sp.lam, g))))
        if ap is not None and np.all(np.isfinite(ap)):
            res = _plus_residual(ap, am, q, sp.lam, g)
            res_p = float(np.max(np.abs(res) / np.maximum(1.0, np.abs(ap))))
    return GaugeCoeffs0(a_minus=am, a_plus=ap, lam=sp.lam, residual=res_m,
                        residual_plus=res_p, blowup=blowup)


def _cdiff(f, g: Grid1D):
    return diff(f.real, g, 1) + 1j * diff(f.imag, g, 1)


def _minus_residual(am, q, r, lam, g):
    return _cdiff(am, g) - (SQRT2 * r + 2j * lam * am - (q / SQRT2) * am * am)


def _plus_residual(ap, am, q, lam, g):
    return _cdiff(ap, g) - ((q / SQRT2) * am * ap - 2j * lam * ap - SQRT2 * q / lam)


def beta_L0(state: FieldState, g: GaugeCoeffs0) -> np.ndarray:
    q, _ = _qr(state)
    return -1j * g.lam + (q / SQRT2) * g.a_minus


def q0_tilde(state: FieldState, g: GaugeCoeffs0) -> complex:
    """``int (beta_L^0 + i lam) dx = (1/sqrt2) int q a_-``."""
    q, _ = _qr(state)
    return complex(quadrature((q / SQRT2) * g.a_minus.real, state.grid)
                   + 1j * quadrature((q / SQRT2) * g.a_minus.imag, state.grid))


@dataclass
class Q0Series:
    times: list
    values: list  # complex
    blowup: list
    max_imag: float

    def drift(self, eps_abs: float = 1e-12) -> float:
        v = np.asarray(self.values)
        return float(np.max(np.abs(v - v[0])) / max(abs(v[0]), eps_abs))

    def rate(self) -> np.ndarray:
        """Central-difference ``dQ/dt`` at the interior times."""
        t = np.asarray(self.times)
        v = np.asarray(self.values)
        return (v[2:] - v[:-2]) / (t[2:] - t[:-2])


def Q0_series(trajectory, lam) -> Q0Series:
    times, vals, flags = [], [], []
    for s in trajectory:
        g = solve_gauge0(s, lam, with_plus=False)
        times.append(s.t)
        vals.append(q0_tilde(s, g))
        flags.append(g.blowup)
    imag = max((abs(v.imag) for v in vals), default=0.0)
    return Q0Series(times=times, values=vals, blowup=flags, max_imag=imag)


def predicted_rate(state: FieldState, D: np.ndarray, lam) -> complex:
    """The order-0 anomaly quadrature ``(1/sqrt2) int D_x a_-``."""
    g = solve_gauge0(state, lam, with_plus=False)
    Dx = diff(D, state.grid, 1)
    am = g.a_minus
    return complex(quadrature(Dx * am.real, state.grid)
                   + 1j * quadrature(Dx * am.imag, state.grid)) / SQRT2


def adjoint_riccati(state: FieldState, lam) -> np.ndarray:
    """``chi = phi_2 / phi_1`` for the row solution ``phi_x = -phi L``, ``phi(x_max) = (1, 0)``.

    ``chi_x = -q - 2 i lam chi + r chi^2``, integrated from the right end by
    running the order-0 sweep on the reversed grid with ``q`` and ``r`` swapped.
    """
    sp = SpectralParam.parse(lam)
    q, r = _qr(state)
    with np.errstate(all="ignore"):
        cr, _ = kernels.gauge0_sweep(r[::-1].copy(), q[::-1].copy(), sp.lam, state.grid.dx, False)
    return cr[::-1] / SQRT2


def exact_rate(state: FieldState, D: np.ndarray, lam, params: ModelParams) -> complex:
    """``dQ0/dt`` from the transfer matrix of the shift-deformed Lax pair.

    ``[A + B Psi]_{x_max} - [A + C chi]_{x_min}
    - (1/(i lam)) int (D u_x (1 - chi Psi) + D_x (Psi + chi)) / (1 + chi Psi)``
    with ``Psi = a_- / sqrt2``; ``B, C`` include the shift ``D / (i lam)``.
    """
    sp = SpectralParam.parse(lam)
    g = state.grid
    il = 1j * sp.lam
    psi = solve_gauge0(state, sp, with_plus=False).a_minus / SQRT2
    chi = adjoint_riccati(state, sp)
    D = np.asarray(D, dtype=float)
    Dx = diff(D, g, 1)
    den = 1.0 + chi * psi
    integrand = -(D * state.ux * (1.0 - chi * psi) + Dx * (psi + chi)) / (il * den)
    A, B, C = lax_coeffs(state, params).evaluate(sp.lam)
    A, B, C = (np.asarray(A, dtype=complex), np.asarray(B, dtype=complex) + D / il,
               np.asarray(C, dtype=complex) + D / il)
    ends = (A[-1] + B[-1] * psi[-1]) - (A[0] + C[0] * chi[0])
    return complex(quadrature(integrand.real, g) + 1j * quadrature(integrand.imag, g) + ends)


def killing_integral(state: FieldState, lam, p: float = 1.0) -> complex:
    """``int (a_-)_x (a_-)^p dx``; a total derivative, equal to ``[a_-^(1+p)]/(1+p)``."""
    g = solve_gauge0(state, lam, with_plus=False)
    am = g.a_minus
    amx = _cdiff(am, state.grid)
    f = amx * _cpow(am, p)
    return complex(quadrature(f.real, state.grid) + 1j * quadrature(f.imag, state.grid))


def _cpow(a, p: float):
    if float(p).is_integer():
        return a ** int(p)
    if np.isrealobj(a) or np.all(a.imag == 0):
        re = np.real(a)
        return np.sign(re) * np.abs(re) ** p
    return a ** p
