"""Shared finite-difference, quadrature and Runge-Kutta kernels.

All fields are plain 1-D ``numpy`` arrays sampled on a :class:`Grid1D`.
Derivative stencils are 4th-order accurate everywhere: centered in the
interior and one-sided (same order) within a half-width of either end.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Callable

import numpy as np

from dislocwave import kernels

__all__ = [
    "Grid1D",
    "NumericalBlowUp",
    "Stencil",
    "antiderivative",
    "check_finite",
    "diff",
    "fd_weights",
    "quadrature",
    "rk4_step",
    "stencil",
]

# centered half-widths for 4th-order accuracy
_HALF = {1: 2, 2: 2, 3: 3, 4: 3}
MIN_POINTS = 8


class NumericalBlowUp(FloatingPointError):
    """A kernel produced non-finite values."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``[x_min, x_max]`` including both end points."""

    x_min: float
    x_max: float
    n_points: int
    dx: float = field(init=False)

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < MIN_POINTS:
            raise ValueError(f"n_points must be an integer >= {MIN_POINTS}, got {self.n_points}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)) or self.x_max <= self.x_min:
            raise ValueError(f"need finite x_min < x_max, got [{self.x_min}, {self.x_max}]")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "dx", (self.x_max - self.x_min) / (self.n_points - 1))

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def refined(self, factor: int = 2) -> "Grid1D":
        """Grid with spacing divided by ``factor`` (nested points)."""
        return Grid1D(self.x_min, self.x_max, factor * (self.n_points - 1) + 1)

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n_points": self.n_points}


def check_finite(values, what: str = "field") -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NumericalBlowUp(f"{what} contains non-finite values")
    return arr


def fd_weights(offsets, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at offset 0.

    Solves the moment system in exact rational arithmetic; the stencil is
    exact for polynomials of degree ``len(offsets) - 1``.
    """
    k = [Fraction(int(o)) for o in offsets]
    n = len(k)
    if order >= n:
        raise ValueError("need more stencil points than the derivative order")
    # augmented Vandermonde system  sum_i w_i k_i**j = j! [j == order]
    rows = [[ki**j for ki in k] + [Fraction(factorial(order) if j == order else 0)]
            for j in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if rows[r][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                fac = rows[r][col] / rows[col][col]
                rows[r] = [a - fac * b for a, b in zip(rows[r], rows[col])]
    return np.array([float(rows[i][n] / rows[i][i]) for i in range(n)])


@dataclass(frozen=True)
class Stencil:
    """Unscaled weights of a 4th-order derivative operator on ``n`` points.

    ``left[i]`` acts on ``f[:width]`` to give row ``i``; ``right[j]`` acts on
    ``f[-width:]`` to give row ``n - half + j``.
    """

    order: int
    half: int
    center: np.ndarray
    left: np.ndarray
    right: np.ndarray


@lru_cache(maxsize=None)
def stencil(order: int) -> Stencil:
    if order not in _HALF:
        raise ValueError(f"derivative order must be in 1..4, got {order}")
    half = _HALF[order]
    width = order + 4
    center = fd_weights(np.arange(-half, half + 1), order)
    left = np.array([fd_weights(np.arange(width) - i, order) for i in range(half)])
    right = np.array([fd_weights(np.arange(width) - (width - half + j), order) for j in range(half)])
    for arr in (center, left, right):
        arr.setflags(write=False)
    return Stencil(order, half, center, left, right)


def diff(f, grid: Grid1D, order: int = 1) -> np.ndarray:
    """``order``-th x-derivative of ``f`` (4th-order finite differences)."""
    f = check_finite(f, "diff input")
    if order not in _HALF:
        raise ValueError(f"derivative order must be in 1..4, got {order}")
    if f.shape != (grid.n_points,):
        raise ValueError(f"field has shape {f.shape}, grid has {grid.n_points} points")
    if grid.n_points < 2 * order + 1:
        raise ValueError(f"order-{order} derivative needs at least {2 * order + 1} points")
    st = stencil(order)
    return kernels.apply_stencil(f, st.center, st.left, st.right) / grid.dx**order


def antiderivative(f, grid: Grid1D) -> np.ndarray:
    """Cumulative integral from ``x_min`` (value 0 there).

    Composite trapezoid with the Euler-Maclaurin end correction
    ``-dx**2/12 * (f'(x) - f'(x_min))``, which lifts it to 4th order.
    """
    f = check_finite(f, "antiderivative input")
    fx = diff(f, grid, 1)
    return kernels.corrected_cumtrapz(f, fx, grid.dx)


def quadrature(f, grid: Grid1D) -> float:
    """Composite trapezoid integral over the full grid."""
    f = np.asarray(f)
    if f.shape != (grid.n_points,):
        raise ValueError(f"field has shape {f.shape}, grid has {grid.n_points} points")
    if not np.all(np.isfinite(f)):
        raise NumericalBlowUp("quadrature input contains non-finite values")
    return grid.dx * (f.sum() - 0.5 * (f[0] + f[-1]))


def rk4_step(rhs: Callable, state, dt: float, t: float = 0.0):
    """One classical Runge-Kutta step of ``y' = rhs(t, y)``.

    Works for scalars and arrays (real or complex). Raises
    :class:`NumericalBlowUp` if any stage is non-finite.
    """
    if not dt > 0 and not dt < 0:
        raise ValueError("dt must be non-zero")
    k1 = rhs(t, state)
    k2 = rhs(t + 0.5 * dt, state + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, state + 0.5 * dt * k2)
    k4 = rhs(t + dt, state + dt * k3)
    out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowUp("non-finite state after RK4 step")
    return out
