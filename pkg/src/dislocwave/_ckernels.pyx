# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt

cnp.import_array()

cdef double SQRT2 = sqrt(2.0)
cdef double[::1] SIXTH = np.array([1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0])


cdef void _stencil(const double[::1] f, const double[::1] center,
                   const double[:, ::1] left, const double[:, ::1] right,
                   double scale, double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t half = left.shape[0]
    cdef Py_ssize_t width = left.shape[1]
    cdef Py_ssize_t ncen = center.shape[0]
    cdef Py_ssize_t i, k
    cdef double acc
    for i in range(half, n - half):
        acc = 0.0
        for k in range(ncen):
            acc = acc + center[k] * f[i - half + k]
        out[i] = acc * scale
    for i in range(half):
        acc = 0.0
        for k in range(width):
            acc = acc + left[i, k] * f[k]
        out[i] = acc * scale
        acc = 0.0
        for k in range(width):
            acc = acc + right[i, k] * f[n - width + k]
        out[n - half + i] = acc * scale


cdef void _reflected(const double[::1] f, const double[::1] center, double scale,
                     double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t ncen = center.shape[0]
    cdef Py_ssize_t half = ncen // 2
    cdef Py_ssize_t i, k, j
    cdef double acc
    for i in range(n):
        acc = 0.0
        if half <= i < n - half:
            for k in range(ncen):
                acc = acc + center[k] * f[i - half + k]
        else:
            for k in range(ncen):
                j = i - half + k
                if j < 0:
                    acc = acc + center[k] * (2.0 * f[0] - f[-j])
                elif j > n - 1:
                    acc = acc + center[k] * (2.0 * f[n - 1] - f[2 * (n - 1) - j])
                else:
                    acc = acc + center[k] * f[j]
        out[i] = acc * scale


def apply_reflected(f, center):
    cdef const double[::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    out = np.empty(fv.shape[0])
    _reflected(fv, np.ascontiguousarray(center, dtype=np.float64), 1.0, out)
    return out


def apply_stencil(f, center, left, right):
    cdef const double[::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    out = np.empty(fv.shape[0])
    _stencil(fv, np.ascontiguousarray(center), np.ascontiguousarray(left),
             np.ascontiguousarray(right), 1.0, out)
    return out


cdef void _cumtrapz(const double[::1] f, const double[::1] fx, double dx,
                    double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t i
    cdef double acc = 0.0
    cdef double corr = dx * dx / 12.0
    cdef double fx0 = fx[0]
    out[0] = 0.0
    for i in range(1, n):
        acc = acc + 0.5 * dx * (f[i] + f[i - 1])
        out[i] = acc - corr * (fx[i] - fx0)


def corrected_cumtrapz(f, fx, double dx):
    cdef const double[::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    cdef const double[::1] fxv = np.ascontiguousarray(fx, dtype=np.float64)
    out = np.empty(fv.shape[0])
    _cumtrapz(fv, fxv, dx, out)
    return out


def integrated_rhs(u, source, double dx, double half_alpha, double beta_cubic,
                   double beta_pow, double power, double gamma, c1, c3, double diss=0.0):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] sv = np.ascontiguousarray(source, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0]
    cdef Py_ssize_t i
    cdef double w, p
    ux = np.empty(n)
    uxxx = np.empty(n)
    sx = np.empty(n)
    out = np.empty(n)
    cdef double[::1] uxv = ux
    cdef double[::1] u3v = uxxx
    cdef double[::1] sxv = sx
    cdef double[::1] ov = out
    cdef const double[::1] c1v = np.ascontiguousarray(c1, dtype=np.float64)
    cdef const double[::1] c3v = np.ascontiguousarray(c3, dtype=np.float64)
    _reflected(uv, c1v, 1.0 / dx, uxv)
    _reflected(uv, c3v, 1.0 / (dx * dx * dx), u3v)
    _reflected(sv, c1v, 1.0 / dx, sxv)
    cdef double[::1] d6v
    if diss != 0.0:
        d6 = np.empty(n)
        d6v = d6
        _reflected(uv, SIXTH, diss, d6v)
    _cumtrapz(sv, sxv, dx, ov)
    with nogil:
        for i in range(n):
            w = uxv[i]
            p = ov[i] - half_alpha * w * w - beta_cubic * w * w * w - gamma * u3v[i]
            if beta_pow != 0.0 and w != 0.0:
                if w > 0:
                    p = p - beta_pow * pow(w, power)
                else:
                    p = p + beta_pow * pow(-w, power)
            ov[i] = p
        if diss != 0.0:
            for i in range(n):
                ov[i] = ov[i] + d6v[i]
    return out


cdef inline void _gauge_rhs(double complex q, double complex r, double complex lm,
                            double complex two_il, double complex am, double complex ap,
                            double complex* dm, double complex* dp) noexcept nogil:
    cdef double complex c = q / SQRT2
    dm[0] = SQRT2 * r + two_il * am - c * am * am
    dp[0] = c * am * ap - two_il * ap - SQRT2 * q / lm


cdef inline double complex _mid(const double complex[::1] f, Py_ssize_t i,
                                Py_ssize_t n) noexcept nogil:
    if i == 0:
        return (5.0 * f[0] + 15.0 * f[1] - 5.0 * f[2] + f[3]) / 16.0
    if i == n - 2:
        return (f[n - 4] - 5.0 * f[n - 3] + 15.0 * f[n - 2] + 5.0 * f[n - 1]) / 16.0
    return (-f[i - 1] + 9.0 * f[i] + 9.0 * f[i + 1] - f[i + 2]) / 16.0


def gauge0_sweep(q, r, lam, double dx, bint with_plus=True):
    cdef const double complex[::1] qv = np.ascontiguousarray(q, dtype=np.complex128)
    cdef const double complex[::1] rv = np.ascontiguousarray(r, dtype=np.complex128)
    cdef double complex lm = lam
    cdef double complex two_il = 2j * lm
    cdef Py_ssize_t n = qv.shape[0]
    am = np.zeros(n, dtype=np.complex128)
    ap = np.zeros(n, dtype=np.complex128)
    cdef double complex[::1] amv = am
    cdef double complex[::1] apv = ap
    cdef double complex x1 = 0, x2 = 0, qm, rm
    cdef double complex k11, k12, k21, k22, k31, k32, k41, k42
    cdef double h = dx
    cdef Py_ssize_t i
    with nogil:
        for i in range(n - 1):
            qm = _mid(qv, i, n)
            rm = _mid(rv, i, n)
            _gauge_rhs(qv[i], rv[i], lm, two_il, x1, x2, &k11, &k12)
            _gauge_rhs(qm, rm, lm, two_il, x1 + 0.5 * h * k11, x2 + 0.5 * h * k12, &k21, &k22)
            _gauge_rhs(qm, rm, lm, two_il, x1 + 0.5 * h * k21, x2 + 0.5 * h * k22, &k31, &k32)
            _gauge_rhs(qv[i + 1], rv[i + 1], lm, two_il, x1 + h * k31, x2 + h * k32, &k41, &k42)
            x1 = x1 + (h / 6.0) * (k11 + 2 * k21 + 2 * k31 + k41)
            x2 = x2 + (h / 6.0) * (k12 + 2 * k22 + 2 * k32 + k42)
            amv[i + 1] = x1
            apv[i + 1] = x2
    return am, (ap if with_plus else None)
