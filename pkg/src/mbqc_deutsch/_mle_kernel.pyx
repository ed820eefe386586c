# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled diluted R-rho-R iteration working in the Pauli basis.

For product Pauli-eigenbasis measurements every projector expands into at
most ``2**n`` Pauli strings, so outcome probabilities and the ``R`` operator
are Walsh-Hadamard transforms of Pauli coefficients.  Per iteration this
costs ``O(4**n * 2**n)`` instead of ``O(6**n * 4**n)``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log

cnp.import_array()

# single-qubit Pauli action: sigma|b> = phase * |b ^ flip>
# codes 0=I, 1=X, 2=Y, 3=Z
_FLIP = (0, 1, 1, 0)
_PHASE = ((1, 1), (1, 1), (1j, -1j), (1, -1))


def pauli_tables(int n):
    """``xmask[P]`` and ``phase[P, c]`` such that ``P|c> = phase[P, c] |c ^ xmask[P]>``."""
    cdef int d = 1 << n
    cdef int npauli = d * d
    xmask = np.zeros(npauli, dtype=np.intp)
    phase = np.ones((npauli, d), dtype=complex)
    for p in range(npauli):
        for j in range(n):
            a = (p >> (2 * (n - 1 - j))) & 3
            if _FLIP[a]:
                xmask[p] |= 1 << (n - 1 - j)
            for c in range(d):
                phase[p, c] *= _PHASE[a][(c >> (n - 1 - j)) & 1]
    return xmask, phase


def setting_tables(codes):
    """``pidx[s, A]``: Pauli index of setting ``s`` restricted to qubit subset ``A``."""
    codes = np.asarray(codes)
    n_settings, n = codes.shape
    d = 1 << n
    pidx = np.zeros((n_settings, d), dtype=np.intp)
    for s in range(n_settings):
        for sub in range(d):
            p = 0
            for j in range(n):
                if (sub >> (n - 1 - j)) & 1:
                    p |= int(codes[s, j]) << (2 * (n - 1 - j))
            pidx[s, sub] = p
    return pidx


cdef inline double _loglik(double[:, ::1] f, double[:, ::1] p, double floor) noexcept nogil:
    cdef Py_ssize_t s, o
    cdef double acc = 0.0, pk
    for s in range(f.shape[0]):
        for o in range(f.shape[1]):
            if f[s, o] > 0.0:
                pk = p[s, o] if p[s, o] > floor else floor
                acc += f[s, o] * log(pk)
    return acc


cdef inline void _wht(double[::1] x, Py_ssize_t d) noexcept nogil:
    # in-place y[o] = sum_A (-1)^{|o & A|} x[A]
    cdef Py_ssize_t h = 1, i, j
    cdef double a, b
    while h < d:
        i = 0
        while i < d:
            for j in range(i, i + h):
                a = x[j]
                b = x[j + h]
                x[j] = a + b
                x[j + h] = a - b
            i += 2 * h
        h *= 2


cdef void _probabilities(double complex[:, ::1] rho, Py_ssize_t[::1] xmask,
                         double complex[:, ::1] phase, Py_ssize_t[:, ::1] pidx,
                         double[::1] coef, double[::1] buf,
                         double[:, ::1] p) noexcept nogil:
    cdef Py_ssize_t d = rho.shape[0]
    cdef Py_ssize_t P, c, s, o, a
    cdef double acc
    for P in range(xmask.shape[0]):
        acc = 0.0
        for c in range(d):
            acc = acc + (phase[P, c] * rho[c, c ^ xmask[P]]).real
        coef[P] = acc
    for s in range(pidx.shape[0]):
        for a in range(d):
            buf[a] = coef[pidx[s, a]]
        _wht(buf, d)
        for o in range(d):
            p[s, o] = buf[o] / d


def rrho_iterate(codes, freqs, rho0, double epsilon, double tol, int patience,
                 int max_iter, double floor):
    """Same contract as the numpy fallback ``_mle_py.rrho_iterate``."""
    codes = np.ascontiguousarray(codes, dtype=np.int8)
    cdef int n = codes.shape[1]
    cdef Py_ssize_t d = 1 << n
    xmask_a, phase_a = pauli_tables(n)
    pidx_a = setting_tables(codes)
    cdef Py_ssize_t[::1] xmask = xmask_a
    cdef double complex[:, ::1] phase = phase_a
    cdef Py_ssize_t[:, ::1] pidx = pidx_a
    cdef double[:, ::1] f = np.ascontiguousarray(freqs, dtype=float)
    cdef Py_ssize_t nset = f.shape[0]

    rho_a = np.array(rho0, dtype=complex, order="C")
    cdef double complex[:, ::1] rho = rho_a
    cdef double complex[:, ::1] m = np.zeros((d, d), dtype=complex)
    cdef double complex[:, ::1] t = np.zeros((d, d), dtype=complex)
    cdef double[::1] coef = np.zeros(d * d)
    cdef double[::1] rcoef = np.zeros(d * d)
    cdef double[::1] buf = np.zeros(d)
    cdef double[:, ::1] p = np.zeros((nset, d))
    hist_a = np.zeros(max_iter + 1)
    cdef double[::1] hist = hist_a

    cdef Py_ssize_t i, j, k, s, o, a, P, c
    cdef double loglik, new, tr
    cdef double complex acc
    cdef int it = 0, small = 0
    cdef bint converged = False

    with nogil:
        _probabilities(rho, xmask, phase, pidx, coef, buf, p)
        loglik = _loglik(f, p, floor)
        hist[0] = loglik
        while it < max_iter:
            it += 1
            # Pauli coefficients of R = sum_k (f_k / p_k) Pi_k
            for P in range(d * d):
                rcoef[P] = 0.0
            for s in range(nset):
                for o in range(d):
                    if f[s, o] > 0.0:
                        buf[o] = f[s, o] / (p[s, o] if p[s, o] > floor else floor)
                    else:
                        buf[o] = 0.0
                _wht(buf, d)
                for a in range(d):
                    rcoef[pidx[s, a]] += buf[a] / d
            # M = I + eps * R
            for i in range(d):
                for j in range(d):
                    m[i, j] = 0
                m[i, i] = 1
            for P in range(d * d):
                if rcoef[P] != 0.0:
                    for c in range(d):
                        m[c ^ xmask[P], c] = m[c ^ xmask[P], c] + epsilon * rcoef[P] * phase[P, c]
            # rho <- M rho M / tr
            for i in range(d):
                for j in range(d):
                    acc = 0
                    for k in range(d):
                        acc = acc + m[i, k] * rho[k, j]
                    t[i, j] = acc
            tr = 0.0
            for i in range(d):
                for j in range(d):
                    acc = 0
                    for k in range(d):
                        acc = acc + t[i, k] * m[k, j]
                    rho[i, j] = acc
                tr += rho[i, i].real
            for i in range(d):
                for j in range(i, d):
                    acc = 0.5 * (rho[i, j] + rho[j, i].conjugate()) / tr
                    rho[i, j] = acc
                    rho[j, i] = acc.conjugate()
            _probabilities(rho, xmask, phase, pidx, coef, buf, p)
            new = _loglik(f, p, floor)
            hist[it] = new
            if new - loglik < tol:
                small += 1
            else:
                small = 0
            loglik = new
            if small >= patience:
                converged = True
                break

    return rho_a, hist_a[: it + 1].copy(), it, bool(converged)
