# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled successive-cancellation tree traversal.

Bit-for-bit identical behaviour to ``polarflip._kernel_py``; see that
module for the traversal rules.  All stage buffers live in one flat
allocation per workspace so a decode performs no Python-level work
inside the recursion.
"""

from libc.math cimport fabs
from libc.string cimport memcpy

import numpy as np

BACKEND_NAME = "cython"


cdef struct DecCtx:
    double* alpha            # stage s soft values at offset 1 << s
    unsigned char* beta      # right-child hard values, stage s at offset 1 << s
    unsigned char* bsave     # left-child hard values, stage s at offset 1 << s
    double* leaf_llrs
    unsigned char* u_hat
    unsigned char* frozen
    signed char* forced
    unsigned char* truth
    bint oracle
    long err_count
    Py_ssize_t first_err
    Py_ssize_t cursor


cdef void _descend(DecCtx* c, int s, double* ain, unsigned char* bout) noexcept nogil:
    cdef Py_ssize_t half, j, i
    cdef double a, b, mag, v
    cdef unsigned char bit, nat
    cdef double* child
    cdef unsigned char* bl
    cdef unsigned char* br

    if s == 0:
        i = c.cursor
        c.cursor = i + 1
        v = ain[0]
        c.leaf_llrs[i] = v
        nat = 0 if v >= 0.0 else 1
        if c.frozen[i]:
            bit = 0
        elif c.oracle:
            bit = c.truth[i]
            if bit != nat:
                c.err_count += 1
                if c.first_err < 0:
                    c.first_err = i
        elif c.forced[i] >= 0:
            bit = <unsigned char> c.forced[i]
        else:
            bit = nat
        c.u_hat[i] = bit
        bout[0] = bit
        return

    half = (<Py_ssize_t> 1) << (s - 1)
    child = c.alpha + half
    bl = c.bsave + half
    br = c.beta + half

    for j in range(half):
        a = ain[j]
        b = ain[half + j]
        mag = fabs(a)
        v = fabs(b)
        if v < mag:
            mag = v
        child[j] = -mag if (a < 0.0) != (b < 0.0) else mag
    _descend(c, s - 1, child, bl)

    for j in range(half):
        a = ain[j]
        b = ain[half + j]
        child[j] = b - a if bl[j] else b + a
    _descend(c, s - 1, child, br)

    for j in range(half):
        bout[j] = bl[j] ^ br[j]
        bout[half + j] = br[j]


cdef class Workspace:
    """Flat scratch buffers for one block length, reused across decodes."""

    cdef int n
    cdef Py_ssize_t N
    cdef double[::1] alpha
    cdef unsigned char[::1] beta
    cdef unsigned char[::1] bsave
    cdef unsigned char[::1] beta_root

    def __cinit__(self, int n):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.N = (<Py_ssize_t> 1) << n
        self.alpha = np.empty(2 * self.N, dtype=np.float64)
        self.beta = np.empty(self.N, dtype=np.uint8)
        self.bsave = np.empty(self.N, dtype=np.uint8)
        self.beta_root = np.empty(self.N, dtype=np.uint8)


def make_workspace(n):
    return Workspace(n)


def decode(Workspace work, double[::1] llrs, unsigned char[::1] frozen,
           signed char[::1] forced, unsigned char[::1] truth, bint oracle,
           unsigned char[::1] u_hat_out, double[::1] leaf_llrs_out):
    """Run one SC traversal; returns ``(err_count, first_err)``.

    Same contract as ``polarflip._kernel_py.decode``.
    """
    cdef Py_ssize_t N = work.N
    if (llrs.shape[0] != N or frozen.shape[0] != N or forced.shape[0] != N
            or truth.shape[0] != N or u_hat_out.shape[0] != N
            or leaf_llrs_out.shape[0] != N):
        raise ValueError(f"all buffers must have length {N}")

    cdef DecCtx ctx
    ctx.alpha = &work.alpha[0]
    ctx.beta = &work.beta[0]
    ctx.bsave = &work.bsave[0]
    ctx.leaf_llrs = &leaf_llrs_out[0]
    ctx.u_hat = &u_hat_out[0]
    ctx.frozen = &frozen[0]
    ctx.forced = &forced[0]
    ctx.truth = &truth[0]
    ctx.oracle = oracle
    ctx.err_count = 0
    ctx.first_err = -1
    ctx.cursor = 0

    memcpy(ctx.alpha + N, &llrs[0], N * sizeof(double))
    with nogil:
        _descend(&ctx, work.n, ctx.alpha + N, &work.beta_root[0])
    return ctx.err_count, ctx.first_err
