# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled split-step propagation kernel.

One call advances a full-tensor-basis state through `nsteps` Strang steps:
exact diagonal phases (static energies plus the integrated scheduled
detuning) sandwich a uniform single-site X rotation applied as in-place
butterflies.
"""

import numpy as np

cimport cython
from libc.math cimport cos, sin

ctypedef double complex cplx


cdef inline void _diag_apply(cplx[::1] psi, cplx[::1] u_half,
                             signed char[::1] n_exc, double theta,
                             cplx* wpow, int n_sites) noexcept nogil:
    cdef Py_ssize_t i, dim = psi.shape[0]
    cdef int m
    cdef cplx w
    w = cos(theta) + 1j * sin(theta)
    wpow[0] = 1.0 + 0j
    for m in range(1, n_sites + 1):
        wpow[m] = wpow[m - 1] * w
    if theta == 0.0:
        for i in range(dim):
            psi[i] = psi[i] * u_half[i]
    else:
        for i in range(dim):
            psi[i] = psi[i] * u_half[i] * wpow[n_exc[i]]


cdef inline void _x_rotate(cplx[::1] psi, double c, double s,
                           int n_sites, Py_ssize_t dim) noexcept nogil:
    cdef Py_ssize_t stride, base, i
    cdef int b
    cdef cplx a0, a1
    cdef cplx mis = -1j * s
    for b in range(n_sites):
        stride = 1 << b
        base = 0
        while base < dim:
            for i in range(base, base + stride):
                a0 = psi[i]
                a1 = psi[i + stride]
                psi[i] = c * a0 + mis * a1
                psi[i + stride] = c * a1 + mis * a0
            base += 2 * stride


def split_step_run(cplx[::1] psi, cplx[::1] u_half, signed char[::1] n_exc,
                   double[:, ::1] thetas, double cos_phi, double sin_phi,
                   int n_sites):
    """Advance `psi` in place through thetas.shape[0] Strang steps.

    `u_half` holds exp(-1j*E*h/2); thetas[k] holds the two half-step phase
    integrals of the scheduled detuning (zeros for a static generator);
    (cos_phi, sin_phi) define the per-site X rotation of a full step.
    """
    cdef Py_ssize_t dim = psi.shape[0]
    cdef Py_ssize_t nsteps = thetas.shape[0]
    cdef Py_ssize_t k
    cdef cplx wpow[65]
    if n_sites > 64:
        raise ValueError("kernel supports at most 64 sites")
    if (<Py_ssize_t>1 << n_sites) != dim:
        raise ValueError("state dimension is not 2**n_sites")
    with nogil:
        for k in range(nsteps):
            _diag_apply(psi, u_half, n_exc, thetas[k, 0], wpow, n_sites)
            _x_rotate(psi, cos_phi, sin_phi, n_sites, dim)
            _diag_apply(psi, u_half, n_exc, thetas[k, 1], wpow, n_sites)
    return np.asarray(psi)
