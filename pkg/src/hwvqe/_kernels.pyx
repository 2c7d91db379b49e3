# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops for dense statevector updates.

Both kernels mutate the amplitude buffer in place. The pair-rotation kernel
visits each (|01>, |10>) index pair exactly once by scanning for indices whose
two target bits read 01; the partner index differs only in those two bits.
"""


def apply_v_block(double complex[::1] amps, Py_ssize_t lower, double c, double s):
    """Rotate the |01>/|10> subspace of the adjacent pair (lower+1, lower).

    new[b01] =  c*old[b01] + s*old[b10]
    new[b10] = -s*old[b01] + c*old[b10]
    """
    cdef Py_ssize_t dim = amps.shape[0]
    cdef Py_ssize_t step = 1 << lower
    cdef Py_ssize_t b, partner
    cdef double complex t
    for b in range(dim):
        if ((b >> lower) & 3) == 1:  # bit(lower)=1, bit(lower+1)=0
            partner = b + step
            t = amps[b]
            amps[b] = c * t + s * amps[partner]
            amps[partner] = -s * t + c * amps[partner]


def apply_x(double complex[::1] amps, Py_ssize_t qubit):
    """Flip one qubit: swap amplitudes of every index pair differing in it."""
    cdef Py_ssize_t dim = amps.shape[0]
    cdef Py_ssize_t mask = 1 << qubit
    cdef Py_ssize_t b
    cdef double complex t
    for b in range(dim):
        if (b & mask) == 0:
            t = amps[b]
            amps[b] = amps[b | mask]
            amps[b | mask] = t
