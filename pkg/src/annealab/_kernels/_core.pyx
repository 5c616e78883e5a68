# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: single-flip rate matrices and RK4 sweeps.

Mirror of the numpy reference backend `_ref`; see there for conventions.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, isfinite, tanh

cnp.import_array()

GLAUBER = 0
METROPOLIS = 1


cdef inline double _rate(double x, int family) noexcept nogil:
    if family == 0:  # heat bath
        return 0.5 * (1.0 - tanh(0.5 * x))
    return exp(-x) if x > 0.0 else 1.0


cdef inline double _offdiag(double x, int family) noexcept nogil:
    cdef double e = exp(-0.5 * fabs(x))
    if family == 0:
        return e / (1.0 + e * e)
    return e


def build_generator(const long long[:, ::1] flip_idx, const double[:, ::1] delta_e,
                    double beta, int family):
    cdef Py_ssize_t dim = flip_idx.shape[0], n = flip_idx.shape[1]
    out = np.zeros((dim, dim))
    cdef double[:, ::1] w = out
    cdef Py_ssize_t s, j
    cdef double r, acc
    with nogil:
        for s in range(dim):
            acc = 0.0
            for j in range(n):
                r = _rate(beta * delta_e[s, j], family)
                w[flip_idx[s, j], s] = r
                acc += r
            w[s, s] = -acc
    return out


def build_mapped(const long long[:, ::1] flip_idx, const double[:, ::1] delta_e,
                 double beta, int family):
    cdef Py_ssize_t dim = flip_idx.shape[0], n = flip_idx.shape[1]
    out = np.zeros((dim, dim))
    cdef double[:, ::1] h = out
    cdef Py_ssize_t s, j
    cdef double x, acc
    with nogil:
        for s in range(dim):
            acc = 0.0
            for j in range(n):
                x = beta * delta_e[s, j]
                h[flip_idx[s, j], s] = -_offdiag(x, family)
                acc += _rate(x, family)
            h[s, s] = acc
    return out


cdef void _fill_rates(const double[:, ::1] delta_e, double beta, int family,
                      double[:, ::1] table) noexcept nogil:
    cdef Py_ssize_t s, j
    for s in range(delta_e.shape[0]):
        for j in range(delta_e.shape[1]):
            table[s, j] = _rate(beta * delta_e[s, j], family)


cdef void _apply_rates(const long long[:, ::1] flip_idx, const double[:, ::1] table,
                       const double[::1] pin, double[::1] pout) noexcept nogil:
    cdef Py_ssize_t dim = flip_idx.shape[0], n = flip_idx.shape[1]
    cdef Py_ssize_t s, j
    cdef double acc, ps, r
    for s in range(dim):
        pout[s] = 0.0
    for s in range(dim):
        ps = pin[s]
        acc = 0.0
        for j in range(n):
            r = table[s, j]
            pout[flip_idx[s, j]] += r * ps
            acc += r
        pout[s] -= acc * ps


def apply_generator(const long long[:, ::1] flip_idx, const double[:, ::1] delta_e,
                    double beta, int family, const double[::1] p):
    cdef Py_ssize_t dim = flip_idx.shape[0]
    table_arr = np.empty((dim, flip_idx.shape[1]))
    out = np.empty(dim)
    cdef double[:, ::1] table = table_arr
    cdef double[::1] pout = out
    with nogil:
        _fill_rates(delta_e, beta, family, table)
        _apply_rates(flip_idx, table, p, pout)
    return out


def apply_mapped(const long long[:, ::1] flip_idx, const double[:, ::1] delta_e,
                 double beta, int family, const double[::1] v):
    cdef Py_ssize_t dim = flip_idx.shape[0], n = flip_idx.shape[1]
    out = np.empty(dim)
    cdef double[::1] hv = out
    cdef Py_ssize_t s, j
    cdef double x, acc, gather
    with nogil:
        for s in range(dim):
            acc = 0.0
            gather = 0.0
            for j in range(n):
                x = beta * delta_e[s, j]
                acc += _rate(x, family)
                gather += _offdiag(x, family) * v[flip_idx[s, j]]
            hv[s] = acc * v[s] - gather
    return out


cdef bint _all_finite(const double[::1] v) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(v.shape[0]):
        if not isfinite(v[i]):
            return 0
    return 1


def run_master_rk4(const long long[:, ::1] flip_idx, const double[:, ::1] delta_e,
                   const double[::1] betas_half, double tau, double ds,
                   const double[::1] p0, Py_ssize_t store_every, int family):
    cdef Py_ssize_t dim = flip_idx.shape[0], n = flip_idx.shape[1]
    cdef Py_ssize_t steps = (betas_half.shape[0] - 1) // 2
    cdef Py_ssize_t n_store = steps // store_every + 1

    out = np.empty((n_store, dim))
    cdef double[:, ::1] stored = out
    work = np.empty((8, dim))
    cdef double[:, ::1] wk = work
    tables = np.empty((3, dim, n))
    cdef double[:, :, ::1] tb = tables

    cdef double[::1] p = wk[0], k1 = wk[1], k2 = wk[2], k3 = wk[3], k4 = wk[4], tmp = wk[5]
    cdef Py_ssize_t s, step, idx = 1
    cdef double half = 0.5 * ds, sixth = ds / 6.0
    cdef bint ok = 1

    for s in range(dim):
        p[s] = p0[s]
        stored[0, s] = p0[s]

    with nogil:
        _fill_rates(delta_e, betas_half[0], family, tb[0])
        for step in range(steps):
            _fill_rates(delta_e, betas_half[2 * step + 1], family, tb[1])
            _fill_rates(delta_e, betas_half[2 * step + 2], family, tb[2])
            _apply_rates(flip_idx, tb[0], p, k1)
            for s in range(dim):
                tmp[s] = p[s] + half * tau * k1[s]
            _apply_rates(flip_idx, tb[1], tmp, k2)
            for s in range(dim):
                tmp[s] = p[s] + half * tau * k2[s]
            _apply_rates(flip_idx, tb[1], tmp, k3)
            for s in range(dim):
                tmp[s] = p[s] + ds * tau * k3[s]
            _apply_rates(flip_idx, tb[2], tmp, k4)
            for s in range(dim):
                p[s] += sixth * tau * (k1[s] + 2.0 * (k2[s] + k3[s]) + k4[s])
            tb[0, :, :] = tb[2, :, :]
            if (step + 1) % store_every == 0:
                if not _all_finite(p):
                    ok = 0
                    break
                for s in range(dim):
                    stored[idx, s] = p[s]
                idx += 1
    if not ok:
        raise FloatingPointError("non-finite probabilities during master RK4")
    return out


cdef void _fill_total(const double[:, ::1] delta_e, const double[::1] h0,
                      double beta, double bdot_over_2tau, int family,
                      double[:, ::1] g, double[::1] diag) noexcept nogil:
    cdef Py_ssize_t s, j
    cdef double x, acc
    for s in range(delta_e.shape[0]):
        acc = 0.0
        for j in range(delta_e.shape[1]):
            x = beta * delta_e[s, j]
            g[s, j] = _offdiag(x, family)
            acc += _rate(x, family)
        diag[s] = acc - bdot_over_2tau * h0[s]


cdef void _apply_total(const long long[:, ::1] flip_idx, const double[:, ::1] g,
                       const double[::1] diag, const double[::1] vin,
                       double[::1] vout) noexcept nogil:
    cdef Py_ssize_t dim = flip_idx.shape[0], n = flip_idx.shape[1]
    cdef Py_ssize_t s, j
    cdef double gather
    for s in range(dim):
        gather = 0.0
        for j in range(n):
            gather += g[s, j] * vin[flip_idx[s, j]]
        vout[s] = diag[s] * vin[s] - gather


def run_imtime_rk4(const long long[:, ::1] flip_idx, const double[:, ::1] delta_e,
                   const double[::1] h0, const double[::1] betas_half,
                   const double[::1] bdots_half, double tau, double ds,
                   const double[::1] psi0, Py_ssize_t store_every, int family):
    cdef Py_ssize_t dim = flip_idx.shape[0], n = flip_idx.shape[1]
    cdef Py_ssize_t steps = (betas_half.shape[0] - 1) // 2
    cdef Py_ssize_t n_store = steps // store_every + 1

    out = np.empty((n_store, dim))
    cdef double[:, ::1] stored = out
    work = np.empty((8, dim))
    cdef double[:, ::1] wk = work
    gtab = np.empty((3, dim, n))
    cdef double[:, :, ::1] g = gtab
    dtab = np.empty((3, dim))
    cdef double[:, ::1] dg = dtab

    cdef double[::1] psi = wk[0], k1 = wk[1], k2 = wk[2], k3 = wk[3], k4 = wk[4], tmp = wk[5]
    cdef Py_ssize_t s, step, idx = 1
    cdef double half = 0.5 * ds, sixth = ds / 6.0, inv2tau = 0.5 / tau
    cdef bint ok = 1

    for s in range(dim):
        psi[s] = psi0[s]
        stored[0, s] = psi0[s]

    with nogil:
        _fill_total(delta_e, h0, betas_half[0], bdots_half[0] * inv2tau, family, g[0], dg[0])
        for step in range(steps):
            _fill_total(delta_e, h0, betas_half[2 * step + 1],
                        bdots_half[2 * step + 1] * inv2tau, family, g[1], dg[1])
            _fill_total(delta_e, h0, betas_half[2 * step + 2],
                        bdots_half[2 * step + 2] * inv2tau, family, g[2], dg[2])
            _apply_total(flip_idx, g[0], dg[0], psi, k1)
            for s in range(dim):
                tmp[s] = psi[s] - half * tau * k1[s]
            _apply_total(flip_idx, g[1], dg[1], tmp, k2)
            for s in range(dim):
                tmp[s] = psi[s] - half * tau * k2[s]
            _apply_total(flip_idx, g[1], dg[1], tmp, k3)
            for s in range(dim):
                tmp[s] = psi[s] - ds * tau * k3[s]
            _apply_total(flip_idx, g[2], dg[2], tmp, k4)
            for s in range(dim):
                psi[s] -= sixth * tau * (k1[s] + 2.0 * (k2[s] + k3[s]) + k4[s])
            g[0, :, :] = g[2, :, :]
            dg[0, :] = dg[2, :]
            if (step + 1) % store_every == 0:
                if not _all_finite(psi):
                    ok = 0
                    break
                for s in range(dim):
                    stored[idx, s] = psi[s]
                idx += 1
    if not ok:
        raise FloatingPointError("non-finite wave vector during imaginary-time RK4")
    return out
