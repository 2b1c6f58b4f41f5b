# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for the truncated Szegő dynamics.

The cubic term is evaluated by direct O(N^2) convolution: first the
autocorrelation ``c_d = sum_j u_{j+d} conj(u_j)`` (the Fourier coefficients of
``|u|^2``), then ``out_k = sum_q c_{k-q} u_q`` for ``0 <= k <= N``. This is
exact, so no padding is involved.
"""
import numpy as np
cimport numpy as cnp

ctypedef double complex cplx

cdef extern from "complex.h" nogil:
    double complex conj(double complex)

cnp.import_array()


cdef void _cubic(const cplx* u, cplx* out, cplx* corr, Py_ssize_t n) noexcept nogil:
    # corr has length 2n-1, corr[d + n - 1] = c_d for d in [-(n-1), n-1]
    cdef Py_ssize_t d, j, k, q, lo, hi
    cdef cplx acc
    for d in range(n):
        acc = 0
        for j in range(n - d):
            acc = acc + u[j + d] * conj(u[j])
        corr[n - 1 + d] = acc
        corr[n - 1 - d] = conj(acc)
    for k in range(n):
        acc = 0
        for q in range(n):
            acc = acc + corr[n - 1 + k - q] * u[q]
        out[k] = acc


def cubic_szego(u):
    """Coefficients of P_N Pi(|u|^2 u) for a coefficient vector ``u``."""
    cdef cnp.ndarray[cplx, ndim=1, mode="c"] uu = np.ascontiguousarray(u, dtype=np.complex128)
    cdef Py_ssize_t n = uu.shape[0]
    cdef cnp.ndarray[cplx, ndim=1, mode="c"] out = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1, mode="c"] corr = np.empty(max(2 * n - 1, 1), dtype=np.complex128)
    if n == 0:
        return out
    with nogil:
        _cubic(&uu[0], &out[0], &corr[0], n)
    return out


cdef void _rk4_szego(cplx* u, double h, Py_ssize_t n, cplx* k1, cplx* k2,
                     cplx* k3, cplx* k4, cplx* tmp, cplx* corr) noexcept nogil:
    # one classical RK4 step of du/dt = -i P(u)
    cdef Py_ssize_t i
    cdef cplx mi = -1j
    _cubic(u, k1, corr, n)
    for i in range(n):
        k1[i] = mi * k1[i]
        tmp[i] = u[i] + 0.5 * h * k1[i]
    _cubic(tmp, k2, &corr[0], n)
    for i in range(n):
        k2[i] = mi * k2[i]
        tmp[i] = u[i] + 0.5 * h * k2[i]
    _cubic(tmp, k3, &corr[0], n)
    for i in range(n):
        k3[i] = mi * k3[i]
        tmp[i] = u[i] + h * k3[i]
    _cubic(tmp, k4, &corr[0], n)
    for i in range(n):
        u[i] = u[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + mi * k4[i])


def strang_steps(u, half_phase, double dt, Py_ssize_t nsteps):
    """Advance ``nsteps`` Strang steps; returns a new array.

    ``half_phase[k]`` is the linear half-step multiplier exp(-i D k^2 dt / 2).
    Adjacent half steps are fused into one full linear step.
    """
    cdef cnp.ndarray[cplx, ndim=1, mode="c"] uu = np.array(u, dtype=np.complex128, copy=True)
    cdef cnp.ndarray[cplx, ndim=1, mode="c"] ph = np.ascontiguousarray(half_phase, dtype=np.complex128)
    cdef Py_ssize_t n = uu.shape[0]
    if n == 0 or nsteps <= 0:
        return uu
    cdef cnp.ndarray[cplx, ndim=2, mode="c"] work = np.empty((5, n), dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1, mode="c"] corr = np.empty(2 * n - 1, dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1, mode="c"] full = ph * ph
    cdef Py_ssize_t s, i
    with nogil:
        for i in range(n):
            uu[i] = uu[i] * ph[i]
        for s in range(nsteps):
            _rk4_szego(&uu[0], dt, n, &work[0, 0], &work[1, 0], &work[2, 0],
                       &work[3, 0], &work[4, 0], &corr[0])
            if s < nsteps - 1:
                for i in range(n):
                    uu[i] = uu[i] * full[i]
        for i in range(n):
            uu[i] = uu[i] * ph[i]
    return uu


def lawson_steps(u, half_phase, double dt, Py_ssize_t nsteps):
    """``nsteps`` integrating-factor RK4 steps for the full equation.

    The linear flow is applied exactly through ``half_phase`` (exp(L dt/2))
    and its square; only the cubic term is discretised.
    """
    cdef cnp.ndarray[cplx, ndim=1, mode="c"] uu = np.array(u, dtype=np.complex128, copy=True)
    cdef cnp.ndarray[cplx, ndim=1, mode="c"] ph = np.ascontiguousarray(half_phase, dtype=np.complex128)
    cdef Py_ssize_t n = uu.shape[0]
    if n == 0 or nsteps <= 0:
        return uu
    cdef cnp.ndarray[cplx, ndim=2, mode="c"] work = np.empty((6, n), dtype=np.complex128)
    cdef cnp.ndarray[cplx, ndim=1, mode="c"] corr = np.empty(2 * n - 1, dtype=np.complex128)
    cdef cplx* k1 = &work[0, 0]
    cdef cplx* k2 = &work[1, 0]
    cdef cplx* k3 = &work[2, 0]
    cdef cplx* k4 = &work[3, 0]
    cdef cplx* tmp = &work[4, 0]
    cdef cplx* uh = &work[5, 0]
    cdef cplx* x = &uu[0]
    cdef cplx* p = &ph[0]
    cdef cplx mi = -1j
    cdef double h = dt
    cdef Py_ssize_t s, i
    with nogil:
        for s in range(nsteps):
            _cubic(x, k1, &corr[0], n)
            for i in range(n):
                k1[i] = mi * k1[i]
                uh[i] = p[i] * x[i]
                tmp[i] = p[i] * (x[i] + 0.5 * h * k1[i])
            _cubic(tmp, k2, &corr[0], n)
            for i in range(n):
                k2[i] = mi * k2[i]
                tmp[i] = uh[i] + 0.5 * h * k2[i]
            _cubic(tmp, k3, &corr[0], n)
            for i in range(n):
                k3[i] = mi * k3[i]
                tmp[i] = p[i] * (uh[i] + h * k3[i])
            _cubic(tmp, k4, &corr[0], n)
            for i in range(n):
                x[i] = p[i] * (p[i] * (x[i] + (h / 6.0) * k1[i])
                               + (h / 3.0) * (k2[i] + k3[i])) + (h / 6.0) * mi * k4[i]
    return uu
