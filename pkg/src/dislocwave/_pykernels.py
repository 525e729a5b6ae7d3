"""Pure numpy/Python implementations of the hot kernels.

Same signatures and results (to round-off) as the compiled ``_ckernels``.
"""
import numpy as np

SQRT2 = np.sqrt(2.0)
SIXTH_DIFF = np.array([1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0])

# cubic Lagrange weights for the value half-way between nodes
_MID_INTERIOR = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
_MID_FIRST = np.array([5.0, 15.0, -5.0, 1.0]) / 16.0
_MID_LAST = _MID_FIRST[::-1].copy()


def apply_stencil(f, center, left, right):
    f = np.ascontiguousarray(f, dtype=float)
    n = f.size
    half = left.shape[0]
    width = left.shape[1]
    out = np.empty(n)
    inner = np.zeros(n - 2 * half)
    for k, c in enumerate(center):
        inner += c * f[k:n - 2 * half + k]
    out[half:n - half] = inner
    out[:half] = left @ f[:width]
    out[n - half:] = right @ f[n - width:]
    return out


def apply_reflected(f, center):
    """Centered stencil everywhere, with ``f`` extended by odd reflection about both end points.

    The ghost value mirrored through node ``0`` is ``2 f[0] - f[k]`` (likewise
    at the right end), which keeps the extension smooth through a nonzero slope.
    """
    f = np.ascontiguousarray(f, dtype=float)
    n = f.size
    half = center.size // 2
    fe = np.pad(f, half, mode="reflect", reflect_type="odd")
    out = np.zeros(n)
    for k, c in enumerate(center):
        out += c * fe[k:n + k]
    return out


def corrected_cumtrapz(f, fx, dx):
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    out[0] = 0.0
    np.cumsum(0.5 * dx * (f[1:] + f[:-1]), out=out[1:])
    out -= (dx * dx / 12.0) * (fx - fx[0])
    return out


def integrated_rhs(u, source, dx, half_alpha, beta_cubic, beta_pow, power, gamma,
                   c1, c3, diss=0.0):
    """Once-integrated evolution right-hand side.

    ``u_t = int_{x_min}^x source - half_alpha*u_x**2 - beta_cubic*u_x**3
    - beta_pow*sgnpow(u_x, power) - gamma*u_xxx``, with the derivatives taken
    by the centered stencils ``c1``, ``c3`` on the odd-reflected field.
    ``diss`` multiplies the (reflected) sixth difference of ``u``.
    """
    h = dx
    ux = apply_reflected(u, c1) / h
    uxxx = apply_reflected(u, c3) / h**3
    sx = apply_reflected(source, c1) / h
    out = corrected_cumtrapz(source, sx, h)
    if half_alpha != 0.0:
        out -= half_alpha * ux * ux
    if beta_cubic != 0.0:
        out -= beta_cubic * ux * ux * ux
    if beta_pow != 0.0:
        out -= beta_pow * np.sign(ux) * np.abs(ux) ** power
    out -= gamma * uxxx
    if diss != 0.0:
        out += diss * apply_reflected(u, SIXTH_DIFF)
    return out


def midpoints(f):
    f = np.asarray(f)
    n = f.size
    mid = np.empty(n - 1, dtype=f.dtype)
    w = _MID_INTERIOR
    mid[1:n - 2] = w[0] * f[:n - 3] + w[1] * f[1:n - 2] + w[2] * f[2:n - 1] + w[3] * f[3:]
    mid[0] = _MID_FIRST @ f[:4]
    mid[n - 2] = _MID_LAST @ f[n - 4:]
    return mid


def _gauge_rhs(q, r, lam, am, ap):
    # a- is closed (Riccati); a+ is linear once a- is known
    dm = SQRT2 * r + 2j * lam * am - (q / SQRT2) * am * am
    dp = (q / SQRT2) * am * ap - 2j * lam * ap - SQRT2 * q / lam
    return dm, dp


def gauge0_sweep(q, r, lam, dx, with_plus=True):
    """RK4 march of the order-0 gauge pair in the variables ``a1 -+ a2``.

    Starts from zero data at x_min; returns ``(a_minus, a_plus)``. With
    ``with_plus=False`` only ``a_minus`` is integrated (``a_plus`` is None).
    """
    q = np.asarray(q, dtype=complex)
    r = np.asarray(r, dtype=complex)
    lam = complex(lam)
    n = q.size
    qm = midpoints(q)
    rm = midpoints(r)
    am = np.zeros(n, dtype=complex)
    ap = np.zeros(n, dtype=complex) if with_plus else None
    x1 = 0j
    x2 = 0j
    h = dx
    for i in range(n - 1):
        k11, k12 = _gauge_rhs(q[i], r[i], lam, x1, x2)
        k21, k22 = _gauge_rhs(qm[i], rm[i], lam, x1 + 0.5 * h * k11, x2 + 0.5 * h * k12)
        k31, k32 = _gauge_rhs(qm[i], rm[i], lam, x1 + 0.5 * h * k21, x2 + 0.5 * h * k22)
        k41, k42 = _gauge_rhs(q[i + 1], r[i + 1], lam, x1 + h * k31, x2 + h * k32)
        x1 = x1 + (h / 6.0) * (k11 + 2 * k21 + 2 * k31 + k41)
        am[i + 1] = x1
        if with_plus:
            x2 = x2 + (h / 6.0) * (k12 + 2 * k22 + 2 * k32 + k42)
            ap[i + 1] = x2
    return am, ap
