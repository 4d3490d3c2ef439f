# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled propagation kernel.

Advances a density matrix through fixed RK4 steps against operator
samples laid out on a half-step grid: index 2k is the start of step k,
2k+1 its midpoint, 2k+2 its end.  The A array holds -iH - G/2 with
G = sum_a F_a^dag F_a; the F array holds the jump operators.
"""

import numpy as np

cimport cython

ctypedef double complex cplx


cdef void _rhs(const cplx[:, :, ::1] a, const cplx[:, :, :, ::1] fs,
               Py_ssize_t idx, const cplx[:, ::1] x,
               cplx[:, ::1] out, cplx[:, ::1] scratch) noexcept nogil:
    # out = A x + x A^H + sum_a F_a x F_a^H
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_ops = fs.shape[0]
    cdef Py_ssize_t i, j, k, q
    cdef cplx acc
    for i in range(n):
        for j in range(n):
            acc = 0
            for k in range(n):
                acc = acc + a[idx, i, k] * x[k, j] + x[i, k] * a[idx, j, k].conjugate()
            out[i, j] = acc
    for q in range(n_ops):
        for i in range(n):
            for j in range(n):
                acc = 0
                for k in range(n):
                    acc = acc + fs[q, idx, i, k] * x[k, j]
                scratch[i, j] = acc
        for i in range(n):
            for j in range(n):
                acc = 0
                for k in range(n):
                    acc = acc + scratch[i, k] * fs[q, idx, j, k].conjugate()
                out[i, j] = out[i, j] + acc


def rk4_advance(const cplx[:, :, ::1] a_half, const cplx[:, :, :, ::1] f_half,
                cplx[:, ::1] rho, double dt):
    """Advance rho in place by (a_half.shape[0]-1)//2 RK4 steps of size dt."""
    cdef Py_ssize_t n = rho.shape[0]
    cdef Py_ssize_t n_steps = (a_half.shape[0] - 1) // 2
    if a_half.shape[0] != 2 * n_steps + 1:
        raise ValueError("a_half must hold an odd number of half-grid samples")
    if a_half.shape[1] != n or a_half.shape[2] != n or rho.shape[1] != n:
        raise ValueError("dimension mismatch between a_half and rho")
    if f_half.shape[0] and (
        f_half.shape[1] != a_half.shape[0] or f_half.shape[2] != n or f_half.shape[3] != n
    ):
        raise ValueError("dimension mismatch between f_half and a_half")

    buf = np.empty((6, n, n), dtype=np.complex128)
    cdef cplx[:, ::1] k1 = buf[0]
    cdef cplx[:, ::1] k2 = buf[1]
    cdef cplx[:, ::1] k3 = buf[2]
    cdef cplx[:, ::1] k4 = buf[3]
    cdef cplx[:, ::1] tmp = buf[4]
    cdef cplx[:, ::1] scratch = buf[5]
    cdef Py_ssize_t s, i, j, i0, i1, i2
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0

    with nogil:
        for s in range(n_steps):
            i0 = 2 * s
            i1 = i0 + 1
            i2 = i0 + 2
            _rhs(a_half, f_half, i0, rho, k1, scratch)
            for i in range(n):
                for j in range(n):
                    tmp[i, j] = rho[i, j] + half * k1[i, j]
            _rhs(a_half, f_half, i1, tmp, k2, scratch)
            for i in range(n):
                for j in range(n):
                    tmp[i, j] = rho[i, j] + half * k2[i, j]
            _rhs(a_half, f_half, i1, tmp, k3, scratch)
            for i in range(n):
                for j in range(n):
                    tmp[i, j] = rho[i, j] + dt * k3[i, j]
            _rhs(a_half, f_half, i2, tmp, k4, scratch)
            for i in range(n):
                for j in range(n):
                    rho[i, j] = rho[i, j] + sixth * (
                        k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j]
                    )
